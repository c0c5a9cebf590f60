// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "sulab/lab.hpp"
#include "sulab/sulab.hpp"

using namespace sulab;

namespace {

struct Outcome {
    bool pass = true;
    std::ostringstream note;

    void check(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            note << " [violated: " << what << "]";
        }
    }
};

struct Stats {
    double mean = 0.0;
    double std = 0.0;  // sample standard deviation
};

Stats stats(const std::vector<double>& v) {
    Stats s;
    for (double x : v) s.mean += x;
    s.mean /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - s.mean) * (x - s.mean);
    s.std = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
    return s;
}

// Independent bisection for the upper kl inverse.
double bisect_kl_upper(double p, double eps) {
    auto kl = [p](double q) {
        double s = 0.0;
        if (p > 0) s += p * std::log(p / q);
        if (p < 1) s += (1 - p) * std::log((1 - p) / (1 - q));
        return s;
    };
    double lo = p, hi = 1.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (kl(mid) > eps ? hi : lo) = mid;
    }
    return lo;
}

double coverage_limit(double delta, double M) { return delta + 3.0 * std::sqrt(delta * (1.0 - delta) / M); }

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

// --------------------------------------------------------------------------

void ac1(Outcome& o) {
    const auto t = lab::bounds_compare(1000, 0.01, 1001);
    const auto& hoef = t[0].mean;
    const auto& kl = t[1].mean;
    const auto& pin = t[2].mean;
    const auto& ref = t[3].mean;
    o.note << "hoeffding(0)=" << fmt(hoef[0]) << " kl(0)=" << fmt(kl[0]);
    o.check(std::abs(hoef[0] - 0.047985) <= 1e-6, "Hoeffding at p_hat=0");
    o.check(std::abs(kl[0] - 0.0045946) <= 1e-6, "kl at p_hat=0");
    std::size_t bad = 0;
    for (std::size_t i = 0; i < kl.size(); ++i) {
        for (double other : {ref[i], pin[i], hoef[i]}) {
            if (kl[i] > other) ++bad;
            if (other < 1.0 && !(kl[i] < other)) ++bad;
        }
        for (double v : {kl[i], ref[i], pin[i], hoef[i]})
            if (!(v >= 0.0 && v <= 1.0)) ++bad;
    }
    o.check(bad == 0, "ordering at " + std::to_string(bad) + " grid points");
}

void ac2(Outcome& o) {
    double worst_lo = INFINITY, worst_hi = -INFINITY;
    for (std::size_t n = 1; n <= 200; ++n)
        for (int k = 1; k <= 9; ++k) {
            const double v = kl_mgf_exact(n, k / 10.0);
            const double s = std::sqrt(static_cast<double>(n));
            worst_lo = std::min(worst_lo, v / s);
            worst_hi = std::max(worst_hi, v / s);
        }
    o.note << "min E/sqrt(n)=" << fmt(worst_lo) << " max E/sqrt(n)=" << fmt(worst_hi);
    // last-bit rounding of the log-space sum is tolerated on the lower side
    o.check(worst_lo >= 1.0 - 1e-12, "lower sandwich");
    o.check(worst_hi <= 2.0, "upper sandwich");
}

void ac3(Outcome& o) {
    Rng rng(3);
    const auto s = lab::ternary_sample(100, 1.0, rng);
    const double split = lab::split_kl_gap_bound(s, 0.05);
    const double kl = lab::kl_gap_bound(s, 0.05);
    const double oracle = bisect_kl_upper(0.5, std::log(1.0 / 0.05) / 100.0) - 0.5;
    o.note << "split-kl gap=" << fmt(split) << " kl gap=" << fmt(kl) << " oracle=" << fmt(oracle);
    o.check(std::abs(split - 0.01811) <= 1e-4, "split-kl value");
    o.check(std::abs(kl - 0.121) <= 5e-3, "kl value");
    o.check(std::abs(kl - oracle) <= 1e-9, "kl matches bisection oracle");
    o.check(split < kl, "split-kl strictly smaller");
}

void ac4(Outcome& o) {
    const std::size_t T = 2000;
    LossMatrixEnv breaker(make_ftl_breaker(T));
    std::vector<double> hedge_regret;
    double ftl_min = INFINITY;
    for (std::uint64_t s = 0; s < 10; ++s) {
        Hedge h(RateSchedule{RateKind::anytime, 2.0});
        hedge_regret.push_back(simulate(breaker, h, T, split_seed(4, s)).regret.back());
        FollowTheLeader ftl;
        ftl_min = std::min(ftl_min, simulate(breaker, ftl, T, s).regret.back());
    }
    const double anytime_mean = stats(hedge_regret).mean;
    const double anytime_cap = std::sqrt(T * std::log(2.0));

    std::vector<double> tight;
    const double eta = hedge_eta(2, T, EtaVariant::tight);
    for (std::uint64_t s = 0; s < 100; ++s) {
        BernoulliEnv env({0.5, 0.5}, split_seed(40, s));
        Hedge h(RateSchedule{RateKind::fixed, eta});
        tight.push_back(simulate(env, h, T, split_seed(41, s)).regret.back());
    }
    const auto st = stats(tight);
    const double tight_cap = std::sqrt(0.5 * T * std::log(2.0)) + 3.0 * st.std / 10.0;
    o.note << "anytime hedge mean regret=" << fmt(anytime_mean) << " (cap " << fmt(anytime_cap)
           << "), FTL min regret=" << fmt(ftl_min) << ", tight hedge mean=" << fmt(st.mean) << " (cap "
           << fmt(tight_cap) << ")";
    o.check(anytime_mean <= anytime_cap, "anytime Hedge on FTL breaker");
    o.check(ftl_min >= 900.0, "FTL regret on every seed");
    o.check(st.mean <= tight_cap, "tight fixed-rate Hedge");
}

void ac5(Outcome& o) {
    const std::size_t T = 100000;
    const double D = 0.25;
    const double lt = std::log(static_cast<double>(T));
    const double cap_orig = 6.0 * lt / D + (1.0 + std::numbers::pi * std::numbers::pi / 3.0) * D;
    const double cap_impr = 4.0 * lt / D + (2.0 * lt + 3.0) * D;
    std::vector<double> orig, impr;
    for (std::uint64_t s = 0; s < 20; ++s) {
        const auto env = BernoulliEnv::from_rewards({0.5 + D / 2, 0.5 - D / 2}, split_seed(5, s));
        Ucb1 a(UcbVariant::original), b(UcbVariant::improved);
        orig.push_back(simulate(env, a, T, s).pseudo_regret.back());
        impr.push_back(simulate(env, b, T, s).pseudo_regret.back());
    }
    const double mo = stats(orig).mean, mi = stats(impr).mean;
    o.note << "original=" << fmt(mo) << " (cap " << fmt(cap_orig) << "), improved=" << fmt(mi) << " (cap "
           << fmt(cap_impr) << ")";
    o.check(mo <= cap_orig, "original UCB1 bound");
    o.check(mi <= cap_impr, "improved UCB1 bound");
    o.check(mi <= mo, "improved <= original");
}

void ac6(Outcome& o) {
    const std::size_t T = 10000;
    const double D = 0.125;
    for (std::size_t K : {2u, 4u}) {
        std::vector<double> mu(K, 0.5 + D / 2);
        mu[0] = 0.5 - D / 2;
        const double eta = std::sqrt(2.0 * std::log(static_cast<double>(K)) / (K * T));
        std::vector<double> pr;
        for (std::uint64_t s = 0; s < 20; ++s) {
            BernoulliEnv env(mu, split_seed(6 * K, s));
            Exp3 pol(RateSchedule{RateKind::fixed, eta});
            pr.push_back(simulate(env, pol, T, s).pseudo_regret.back());
        }
        const double m = stats(pr).mean;
        const double cap = std::sqrt(2.0 * K * T * std::log(static_cast<double>(K)));
        o.note << "K=" << K << ": " << fmt(m) << " (cap " << fmt(cap) << ") ";
        o.check(m <= cap, "EXP3 bound at K=" + std::to_string(K));
    }
}

void ac7(Outcome& o) {
    const std::size_t T = 10000, K = 2, N = 4;
    std::vector<double> reg;
    for (std::uint64_t s = 0; s < 20; ++s) {
        ExpertAdviceEnv env(BernoulliEnv({0.4375, 0.5625}, split_seed(7, s)),
                            {{ExpertSpec::Kind::constant, 0}, {ExpertSpec::Kind::constant, 1},
                             {ExpertSpec::Kind::uniform, 0}, {ExpertSpec::Kind::random, 0}},
                            split_seed(70, s));
        Exp4 pol(N, Exp4::default_eta(K, N, T));
        reg.push_back(simulate(env, pol, T, s).expert_regret.back());
    }
    const double m = stats(reg).mean;
    const double cap = std::sqrt(2.0 * K * T * std::log(static_cast<double>(N)));
    o.note << "mean regret vs best expert=" << fmt(m) << " (cap " << fmt(cap) << ")";
    o.check(m <= cap, "EXP4 bound");
}

void ac8(Outcome& o) {
    Rng rng(8);
    const std::size_t m = 50, n = 500;
    const double delta = 0.05;
    const double log_term = log_sqrt_budget(static_cast<double>(n), delta);
    std::size_t trace_bad = 0, lambda_bad = 0, start_bad = 0, perturb_bad = 0;
    double worst_step = 0.0;
    for (int it = 0; it < 200; ++it) {
        const auto L = lab::detail::draw_true_losses(m, 0.05, 0.5, rng);
        const auto table = lab::detail::draw_table(L, n, rng);
        const auto pi = ProbVec::uniform(m);
        const auto am = alternating_minimize(pi, table, delta);
        for (std::size_t i = 1; i < am.trace.size(); ++i) {
            worst_step = std::max(worst_step, am.trace[i] - am.trace[i - 1]);
            if (am.trace[i] > am.trace[i - 1] + 1e-12) ++trace_bad;
        }
        if (!(am.lambda > 0.0 && am.lambda <= 1.0)) ++lambda_bad;
        if (!(am.bound <= am.trace.front())) ++start_bad;

        std::vector<double> emp(m);
        for (std::size_t h = 0; h < m; ++h) emp[h] = table.mean_loss(h, 0, n);
        auto F = [&](const ProbVec& rho, double lambda) {
            return pb_lambda_value(rho.expect(emp), categorical_kl(rho, pi) + log_term, static_cast<double>(n),
                                   lambda);
        };
        // posterior step: Gibbs at the final lambda against perturbed posteriors
        const auto gibbs = gibbs_posterior(pi, emp, am.lambda * static_cast<double>(n));
        const double fg = F(gibbs, am.lambda);
        // lambda step: closed form at the final posterior against perturbed lambdas
        const double fl = F(am.rho, am.lambda);
        for (int k = 0; k < 100; ++k) {
            std::vector<double> w(m);
            const double scale = 0.5 * rng.uniform();
            for (std::size_t h = 0; h < m; ++h) w[h] = gibbs[h] * std::exp(scale * (2.0 * rng.uniform() - 1.0));
            if (F(ProbVec::from_unnormalized(std::move(w)), am.lambda) < fg - 1e-12) ++perturb_bad;
            const double lp = std::clamp(am.lambda * std::exp(0.5 * (2.0 * rng.uniform() - 1.0)), 1e-6, 1.999);
            if (F(am.rho, lp) < fl - 1e-12) ++perturb_bad;
        }
    }
    o.note << "max trace step=" << fmt(worst_step) << ", perturbations beating the closed form=" << perturb_bad;
    o.check(trace_bad == 0, "nonincreasing traces");
    o.check(lambda_bad == 0, "final lambda in (0,1]");
    o.check(start_bad == 0, "final bound <= bound at rho=pi");
    o.check(perturb_bad == 0, "closed-form updates beat perturbations");
}

void ac9(Outcome& o) {
    const double delta = 0.05;
    // Ternary variable on {0, 1/2, 1} with mean 0.35.
    const std::vector<double> support = {0.0, 0.5, 1.0}, probs = {0.5, 0.3, 0.2};
    const double mu = 0.35;
    const std::size_t n = 100;
    const std::size_t M = 10000;
    const SplitGrid grid({0.0, 0.5, 1.0});
    std::vector<std::size_t> miss(5, 0);
    Rng rng(9);
    for (std::size_t r = 0; r < M; ++r) {
        std::vector<double> xs(n);
        for (auto& x : xs) x = support[rng.categorical(probs)];
        const auto s = Sample::unit(xs);
        const double ph = s.mean();
        miss[0] += std::min(1.0, ph + hoeffding_radius(n, delta, Sides::one)) < mu;
        miss[1] += kl_mean_bound(ph, n, delta, KlVariant::direct).value < mu;
        miss[2] += empirical_bernstein_mean_bound(s, delta).value < mu;
        miss[3] += unexpected_bernstein_mean_bound(s, delta).value < mu;
        miss[4] += split_kl_mean_bound(s, grid, delta).value < mu;
    }
    const double cap = coverage_limit(delta, static_cast<double>(M));
    const char* names[] = {"hoeffding", "kl", "emp_bernstein", "unexp_bernstein", "split_kl"};
    for (std::size_t i = 0; i < 5; ++i) {
        const double f = static_cast<double>(miss[i]) / M;
        o.note << names[i] << "=" << fmt(f) << " ";
        o.check(f <= cap, names[i]);
    }

    // PAC-Bayes on a synthetic class: the posterior is chosen from the data.
    const std::size_t PB = 500;
    const double pb_cap = coverage_limit(delta, static_cast<double>(PB));
    std::size_t pb_miss = 0;
    std::vector<std::size_t> rpb_miss(3, 0);
    for (std::size_t r = 0; r < PB; ++r) {
        Rng g(split_seed(90, r));
        const auto L = lab::detail::draw_true_losses(20, 0.05, 0.5, g);
        const auto table = lab::detail::draw_table(L, 256, g);
        const auto pi = ProbVec::uniform(20);
        const auto am = alternating_minimize(pi, table, delta);
        const auto b = pb_kl_bound({am.rho, pi, 256, delta}, expected_loss(am.rho, table));
        pb_miss += b.value < am.rho.expect(L);

        const auto big = lab::detail::draw_table(L, 512, g);
        for (std::size_t T = 1; T <= 3; ++T) {
            RecursiveOptions ro;
            ro.stages = T;
            ro.delta = delta;
            ro.seed = split_seed(91, r);
            const auto st = recursive_pb(big, pi, ro);
            rpb_miss[T - 1] += st.back().bound.value < st.back().posterior.expect(L);
        }
    }
    const double fpb = static_cast<double>(pb_miss) / PB;
    o.note << "pb_kl=" << fmt(fpb) << " ";
    o.check(fpb <= pb_cap, "pb_kl");
    for (std::size_t T = 1; T <= 3; ++T) {
        const double f = static_cast<double>(rpb_miss[T - 1]) / PB;
        o.note << "rpb_T" << T << "=" << fmt(f) << " ";
        o.check(f <= pb_cap, "recursive PB T=" + std::to_string(T));
    }
    o.note << "(caps " << fmt(cap) << ", " << fmt(pb_cap) << ")";
}

void ac10(Outcome& o) {
    const std::size_t K = 16, N = 100000;
    std::vector<double> means(K, 0.4);
    means[0] = 0.6;
    // Importance-weighted value of the fixed policy "always arm 0".
    {
        const auto log = make_synthetic_log(means, N, 10);
        FixedPolicy pol(0);
        const auto res = replay_importance_weighted(pol, log, 0);
        const auto st = stats(res.rewards);
        const double se = st.std / std::sqrt(static_cast<double>(N));
        o.note << "IW value=" << fmt(st.mean) << " (truth 0.6, SE " << fmt(se) << ") ";
        o.check(std::abs(st.mean - 0.6) <= 3.0 * se, "IW estimate within 3 SE");
    }
    std::vector<double> rs, live, rounds;
    for (std::uint64_t s = 0; s < 20; ++s) {
        const auto log = make_synthetic_log(means, N, split_seed(100, s));
        Ucb1 a(UcbVariant::original);
        const auto res = replay_rejection_sampling(a, log, s);
        rs.push_back(res.mean_reward());
        rounds.push_back(static_cast<double>(res.rounds()));
        const auto env = BernoulliEnv::from_rewards(means, split_seed(101, s));
        Ucb1 b(UcbVariant::original);
        const auto tr = simulate(env, b, res.rounds(), s);
        live.push_back(1.0 - tr.total_loss() / static_cast<double>(tr.rounds()));
    }
    const auto a = stats(rs), b = stats(live);
    const double se = std::sqrt(a.std * a.std / 20 + b.std * b.std / 20);
    o.note << "RS UCB1=" << fmt(a.mean) << " live UCB1=" << fmt(b.mean) << " (SE " << fmt(se) << ") ";
    o.check(std::abs(a.mean - b.mean) <= 3.0 * se, "RS vs live within 3 SE");
    const double p = 1.0 / K;
    const double expect = N * p, bse = std::sqrt(N * p * (1 - p));
    bool ok = true;
    for (double r : rounds) ok = ok && std::abs(r - expect) <= 3.0 * bse;
    o.note << "mean rounds=" << fmt(stats(rounds).mean) << " (expected " << fmt(expect) << " +- " << fmt(3 * bse)
           << ")";
    o.check(ok, "effective horizon within 3 binomial SE on every seed");
}

void ac11(Outcome& o) {
    const std::size_t M = 4, n = 400;
    std::vector<std::int8_t> preds(M * n, 1);
    for (std::size_t h = 0; h < M; ++h)
        for (std::size_t i = h; i < n; i += M) preds[h * n + i] = -1;
    const auto t = LossTable::from_predictions(PredictionTable(M, n, preds), std::vector<int>(n, 1));
    const auto rho = ProbVec::uniform(M);
    const double first = 2.0 * expected_loss(rho, t);
    const double second = 4.0 * expected_tandem_loss(rho, t);
    o.note << "first-order=" << fmt(first) << " second-order=" << fmt(second);
    o.check(first == 0.5, "first-order oracle");
    o.check(second == 0.25, "second-order oracle");

    Rng rng(11);
    double worst = 0.0;
    for (int it = 0; it < 1000; ++it) {
        const std::size_t m = 2 + rng.index(8), k = 1 + rng.index(64);
        std::vector<std::int8_t> p(m * k);
        std::vector<int> y(k);
        for (auto& v : p) v = rng.bernoulli(0.5) ? 1 : -1;
        for (auto& v : y) v = rng.bernoulli(0.5) ? 1 : -1;
        const auto tab = LossTable::from_predictions(PredictionTable(m, k, p), y);
        std::vector<double> w(m);
        for (auto& x : w) x = rng.uniform() + 0.01;
        const auto r = ProbVec::from_unnormalized(w);
        worst = std::max(worst, std::abs(expected_tandem_loss(r, tab) -
                                         (expected_loss(r, tab) - 0.5 * expected_disagreement(r, *tab.predictions()))));
    }
    o.note << " max identity residual=" << fmt(worst);
    // exact up to floating-point summation order
    o.check(worst <= 1e-14, "tandem decomposition identity");
}

}  // namespace

int main() {
    struct Criterion {
        const char* id;
        const char* title;
        double budget_s;
        std::function<void(Outcome&)> run;
    };
    const std::vector<Criterion> all = {
        {"AC1", "bound curves", 2, ac1},
        {"AC2", "kl mgf sandwich", 5, ac2},
        {"AC3", "split-kl dominance", 1, ac3},
        {"AC4", "Hedge regret", 5, ac4},
        {"AC5", "UCB1 bounds", 30, ac5},
        {"AC6", "EXP3 bound", 20, ac6},
        {"AC7", "EXP4 bound", 20, ac7},
        {"AC8", "PAC-Bayes minimizer", 10, ac8},
        {"AC9", "bound coverage", 60, ac9},
        {"AC10", "offline replay", 20, ac10},
        {"AC11", "tandem decomposition", 60, ac11},
    };
    int failures = 0;
    for (const auto& c : all) {
        Outcome o;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            c.run(o);
        } catch (const std::exception& e) {
            o.pass = false;
            o.note << " [exception: " << e.what() << "]";
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        o.check(secs < c.budget_s, "runtime budget " + fmt(c.budget_s) + " s");
        std::cout << (o.pass ? "PASS " : "FAIL ") << c.id << " " << c.title << ": " << o.note.str() << " ("
                  << fmt(secs) << " s)" << std::endl;
        failures += !o.pass;
    }
    std::cout << (failures ? "acceptance: " + std::to_string(failures) + " criterion/criteria failed"
                           : std::string("acceptance: all criteria passed"))
              << std::endl;
    return failures ? 1 : 0;
}
