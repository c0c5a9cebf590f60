#pragma once

#include "sulab/concentration.hpp"
#include "sulab/divergences.hpp"
#include "sulab/environments.hpp"
#include "sulab/errors.hpp"
#include "sulab/online_policies.hpp"
#include "sulab/pac_bayes.hpp"
#include "sulab/random.hpp"
