#pragma once

// Quick invariant sweep behind `lab selftest`. Each check prints one line.

#include <cmath>
#include <cstddef>
#include <functional>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "sulab/concentration.hpp"
#include "sulab/divergences.hpp"
#include "sulab/environments.hpp"
#include "sulab/lab/runner.hpp"
#include "sulab/lab/traces.hpp"
#include "sulab/online_policies.hpp"
#include "sulab/pac_bayes.hpp"
#include "sulab/random.hpp"

namespace sulab::lab {

inline bool run_selftest(std::ostream& out) {
    std::vector<std::pair<std::string, std::function<bool()>>> checks;

    checks.emplace_back("kl inverse brackets its level set", [] {
        Rng rng(1);
        for (int i = 0; i < 2000; ++i) {
            const double p = rng.uniform(), eps = 0.5 * rng.uniform() + 1e-6;
            const double up = kl_inverse(p, eps, Direction::upper), lo = kl_inverse(p, eps, Direction::lower);
            if (!(lo <= p && p <= up)) return false;
            if (up < 1.0 && !(binary_kl(p, up) >= eps - 1e-9)) return false;
            if (lo > 0.0 && !(binary_kl(p, lo) >= eps - 1e-9)) return false;
        }
        return true;
    });
    checks.emplace_back("kl mgf sandwich sqrt(n) <= E <= 2 sqrt(n)", [] {
        for (std::size_t n : {1u, 10u, 100u})
            for (double p : {0.1, 0.5, 0.9}) {
                const double v = kl_mgf_exact(n, p), s = std::sqrt(static_cast<double>(n));
                if (!(v >= s * (1 - 1e-12) && v <= 2 * s)) return false;
            }
        return true;
    });
    checks.emplace_back("hedge/exp3 distributions are shift invariant simplex points", [] {
        Rng rng(2);
        for (int i = 0; i < 500; ++i) {
            std::vector<double> L(5), M(5);
            for (std::size_t a = 0; a < 5; ++a) {
                L[a] = 10 * rng.uniform();
                M[a] = L[a] + 3.0;
            }
            const auto p = hedge_distribution(L, 0.7), q = hedge_distribution(M, 0.7);
            double s = 0.0;
            for (std::size_t a = 0; a < 5; ++a) {
                if (std::abs(p[a] - q[a]) > 1e-12 || p[a] < 0) return false;
                s += p[a];
            }
            if (std::abs(s - 1.0) > 1e-9) return false;
        }
        return true;
    });
    checks.emplace_back("tandem/disagreement decomposition is exact", [] {
        Rng rng(3);
        for (int it = 0; it < 50; ++it) {
            const std::size_t m = 5, n = 40;
            std::vector<std::int8_t> preds(m * n);
            std::vector<int> labels(n);
            for (auto& v : preds) v = rng.bernoulli(0.5) ? 1 : -1;
            for (auto& y : labels) y = rng.bernoulli(0.5) ? 1 : -1;
            const auto t = LossTable::from_predictions(PredictionTable(m, n, preds), labels);
            std::vector<double> w(m);
            for (auto& x : w) x = rng.uniform() + 0.01;
            const auto rho = ProbVec::from_unnormalized(w);
            const double lhs = expected_tandem_loss(rho, t);
            const double rhs = expected_loss(rho, t) - 0.5 * expected_disagreement(rho, *t.predictions());
            if (std::abs(lhs - rhs) > 1e-12) return false;
        }
        return true;
    });
    checks.emplace_back("alternating minimization trace is nonincreasing", [] {
        Rng rng(4);
        std::vector<double> L(30);
        for (auto& l : L) l = 0.5 * rng.uniform();
        const auto t = detail::draw_table(L, 200, rng);
        const auto am = alternating_minimize(ProbVec::uniform(30), t, 0.05);
        for (std::size_t i = 1; i < am.trace.size(); ++i)
            if (am.trace[i] > am.trace[i - 1] + 1e-12) return false;
        return am.lambda > 0.0 && am.lambda <= 1.0;
    });
    checks.emplace_back("UCB1 counts sum to t after initialization", [] {
        BernoulliEnv env({0.3, 0.5, 0.6}, 5);
        Ucb1 ucb(UcbVariant::improved);
        const auto tr = simulate(env, ucb, 500, 6);
        std::size_t s = 0;
        for (auto c : tr.counts) {
            if (c == 0) return false;
            s += c;
        }
        return s == 500;
    });
    checks.emplace_back("FTL breaker defeats FTL from round 2", [] {
        LossMatrixEnv env(make_ftl_breaker(200));
        FollowTheLeader ftl;
        const auto tr = simulate(env, ftl, 200, 0);
        for (std::size_t t = 1; t < 200; ++t)
            if (tr.losses[t] != 1.0) return false;
        return true;
    });
    checks.emplace_back("simulation is deterministic per seed", [] {
        BernoulliEnv env({0.4, 0.6}, 7);
        Exp3 a(RateSchedule{RateKind::anytime, 1.0}), b(RateSchedule{RateKind::anytime, 1.0});
        return simulate(env, a, 1000, 9).arms == simulate(env, b, 1000, 9).arms;
    });
    checks.emplace_back("CSV round trip keeps 12 significant digits", [] {
        const auto tr = aggregate("s", {{0.1, 1.0 / 3.0, 12345.678901234}, {0.2, 2.0 / 3.0, 1e-7}});
        std::stringstream ss;
        write_csv(ss, {tr});
        const auto back = parse_csv(ss);
        if (back.size() != 1 || back[0].size() != 3) return false;
        for (std::size_t i = 0; i < 3; ++i)
            if (std::abs(back[0].mean[i] - tr.mean[i]) > 1e-11 * std::max(1.0, std::abs(tr.mean[i]))) return false;
        return true;
    });

    bool ok = true;
    for (const auto& [name, fn] : checks) {
        bool pass = false;
        try {
            pass = fn();
        } catch (const std::exception& e) {
            out << "  error: " << e.what() << '\n';
        }
        out << (pass ? "PASS " : "FAIL ") << name << '\n';
        ok = ok && pass;
    }
    return ok;
}

}  // namespace sulab::lab
