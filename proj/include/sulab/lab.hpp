#pragma once

#include "sulab/lab/config.hpp"
#include "sulab/lab/plot.hpp"
#include "sulab/lab/runner.hpp"
#include "sulab/lab/selftest.hpp"
#include "sulab/lab/traces.hpp"
