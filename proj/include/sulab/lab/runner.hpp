#pragma once

// Seeded, repeated execution of an ExperimentConfig. Repetition r uses
// seed_r = split_seed(master, r); repetitions may run on several threads
// (capped by LAB_THREADS) and are reduced in index order.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <functional>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include "sulab/concentration.hpp"
#include "sulab/divergences.hpp"
#include "sulab/environments.hpp"
#include "sulab/lab/config.hpp"
#include "sulab/lab/traces.hpp"
#include "sulab/online_policies.hpp"
#include "sulab/pac_bayes.hpp"
#include "sulab/random.hpp"

namespace sulab::lab {

struct RunOptions {
    std::size_t threads = 0;  // 0: LAB_THREADS or hardware concurrency
    bool keep_transcripts = false;
};

struct ExperimentResult {
    std::vector<AggregateTrace> traces;
    // transcripts[series][repetition], game experiments with keep_transcripts
    std::vector<std::vector<GameTranscript>> transcripts;
};

inline std::size_t thread_budget(std::size_t requested) {
    std::size_t n = requested;
    if (n == 0) {
        n = std::max(1u, std::thread::hardware_concurrency());
        if (const char* env = std::getenv("LAB_THREADS")) {
            const long v = std::strtol(env, nullptr, 10);
            if (v >= 1) n = std::min<std::size_t>(n, static_cast<std::size_t>(v));
        }
    }
    return std::max<std::size_t>(1, n);
}

// Runs job(r) for r in [0, R) on up to `threads` workers; the first
// exception (lowest r) is rethrown.
inline void parallel_repetitions(std::size_t R, std::size_t threads, const std::function<void(std::size_t)>& job) {
    threads = std::min(threads, R);
    if (threads <= 1) {
        for (std::size_t r = 0; r < R; ++r) job(r);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(R);
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < threads; ++w)
        pool.emplace_back([&] {
            for (std::size_t r; (r = next.fetch_add(1)) < R;) {
                try {
                    job(r);
                } catch (...) {
                    errors[r] = std::current_exception();
                }
            }
        });
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

namespace detail {

inline std::unique_ptr<Environment> make_environment(const EnvConfig& e, std::size_t T, std::uint64_t seed) {
    if (e.kind == "bernoulli") return std::make_unique<BernoulliEnv>(e.loss_means, seed);
    if (e.kind == "binary_sequence") return std::make_unique<BinaryPredictionEnv>(e.bias, seed);
    if (e.kind == "ftl_breaker") return std::make_unique<LossMatrixEnv>(make_ftl_breaker(T));
    if (e.kind == "ucb_breaker") return std::make_unique<LossMatrixEnv>(make_ucb_breaker(T, e.arms, e.breaker_variant).losses);
    if (e.kind == "expert_advice")
        return std::make_unique<ExpertAdviceEnv>(BernoulliEnv(e.loss_means, seed), e.experts, seed);
    throw ConfigError("unknown environment kind '" + e.kind + "'");
}

inline std::unique_ptr<Policy> make_policy(const PolicyConfig& p, std::size_t K, std::size_t N, std::size_t T) {
    const double kd = static_cast<double>(K);
    const double td = static_cast<double>(T);
    const double lk = std::log(std::max(kd, 2.0));
    if (p.kind == "hedge") {
        RateSchedule r = p.rate;
        if (r.kind == RateKind::fixed) r.value = p.eta ? *p.eta : p.rate.value * std::sqrt(2.0 * lk / td);
        if (r.kind == RateKind::anytime) r.value = p.rate.value;
        return std::make_unique<Hedge>(r);
    }
    if (p.kind == "ftl") return std::make_unique<FollowTheLeader>();
    if (p.kind == "exp3") {
        RateSchedule r = p.rate;
        if (r.kind == RateKind::doubling) throw ConfigError("policy." + p.label + ": exp3 takes fixed or anytime rates");
        if (r.kind == RateKind::fixed) r.value = p.eta ? *p.eta : p.rate.value * std::sqrt(2.0 * lk / (kd * td));
        return std::make_unique<Exp3>(r);
    }
    if (p.kind == "exp3_rewards") {
        const double eta = p.eta ? *p.eta : std::min(0.5, std::sqrt(kd * lk / td));
        if (!(eta < 1.0)) throw ConfigError("policy." + p.label + ".eta: must lie in (0,1)");
        return std::make_unique<Exp3Rewards>(eta);
    }
    if (p.kind == "exp4") {
        if (N == 0) throw ConfigError("policy." + p.label + ": exp4 needs an expert_advice environment");
        return std::make_unique<Exp4>(N, p.eta ? *p.eta : Exp4::default_eta(K, N, T));
    }
    if (p.kind == "ucb1") return std::make_unique<Ucb1>(p.ucb);
    if (p.kind == "epsilon_first") return std::make_unique<EpsilonFirstPolicy>(p.gap, T);
    if (p.kind == "uniform") return std::make_unique<UniformPolicy>();
    if (p.kind == "fixed") {
        if (p.arm >= K) throw ConfigError("policy." + p.label + ".arm: out of range");
        return std::make_unique<FixedPolicy>(p.arm);
    }
    throw ConfigError("unknown policy kind '" + p.kind + "'");
}

inline std::vector<double> running_mean(const std::vector<double>& v) {
    std::vector<double> out(v.size());
    double s = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        s += v[i];
        out[i] = s / static_cast<double>(i + 1);
    }
    return out;
}

inline std::vector<double> linspace(double a, double b, std::size_t n) {
    if (n == 0) throw ConfigError("grid must have at least one point");
    std::vector<double> g(n);
    for (std::size_t i = 0; i < n; ++i) g[i] = n == 1 ? a : a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
    return g;
}

inline std::vector<AggregateTrace> reduce(const std::vector<std::string>& names,
                                          std::vector<std::vector<std::vector<double>>>& per_rep,
                                          const std::vector<double>& x = {}) {
    // per_rep[r][series] -> aggregate per series
    std::vector<AggregateTrace> out;
    for (std::size_t s = 0; s < names.size(); ++s) {
        std::vector<std::vector<double>> reps;
        std::size_t len = per_rep.front()[s].size();
        for (auto& r : per_rep) len = std::min(len, r[s].size());
        for (auto& r : per_rep) {
            auto v = r[s];
            v.resize(len);
            reps.push_back(std::move(v));
        }
        std::vector<double> xs = x;
        if (!xs.empty()) xs.resize(len);
        out.push_back(aggregate(names[s], reps, xs));
    }
    return out;
}

}  // namespace detail

// ----------------------------------------------------------------------------
// Bound-curve comparisons

// Upper and lower bounds on p for p_hat on a uniform grid over [0,1]:
// Hoeffding, kl, Pinsker- and refined-Pinsker-relaxed kl, all clipped to [0,1].
inline std::vector<AggregateTrace> bounds_compare(std::size_t n, double delta, std::size_t grid) {
    if (n == 0) throw DomainError("n must be >= 1");
    sulab::detail::require_delta(delta);
    const auto x = detail::linspace(0.0, 1.0, grid);
    const double eps = std::log(1.0 / delta) / static_cast<double>(n);
    const double h = std::sqrt(eps / 2.0);
    std::vector<std::string> names = {"hoeffding", "kl", "pinsker", "refined_pinsker", "hoeffding_lower", "kl_lower"};
    std::vector<std::vector<double>> v(names.size());
    for (double p : x) {
        const auto pr = pinsker_relaxations(p, eps);
        v[0].push_back(std::min(1.0, p + h));
        v[1].push_back(kl_inverse(p, eps, Direction::upper));
        v[2].push_back(pr.plain);
        v[3].push_back(pr.refined_upper);
        v[4].push_back(std::max(0.0, p - h));
        v[5].push_back(kl_inverse(p, eps, Direction::lower));
    }
    std::vector<AggregateTrace> out;
    for (std::size_t s = 0; s < names.size(); ++s) out.push_back(aggregate(names[s], {v[s]}, x));
    return out;
}

// Sample of n draws from {0, 1/2, 1} with P[1/2] = p_half and P[0] = P[1].
inline Sample ternary_sample(std::size_t n, double p_half, Rng& rng) {
    std::vector<double> xs(n);
    for (auto& x : xs) {
        const double u = rng.uniform();
        x = u < p_half ? 0.5 : (u < p_half + (1.0 - p_half) / 2.0 ? 0.0 : 1.0);
    }
    return Sample::unit(std::move(xs));
}

// kl bound on p - p_hat: kl^{-1,+}(p_hat, ln(1/delta)/n) - p_hat.
inline double kl_gap_bound(const Sample& s, double delta) {
    const double ph = s.mean();
    return kl_inverse(ph, std::log(1.0 / delta) / static_cast<double>(s.size()), Direction::upper) - ph;
}

inline double split_kl_gap_bound(const Sample& s, double delta) {
    return split_kl_mean_bound(s, SplitGrid({0.0, 0.5, 1.0}), delta).value - s.mean();
}

// min over Lambda = {1/2, ..., 1/2^k} of lambda v_hat + ln(k/delta)/(lambda n).
inline double unexpected_bernstein_gap_bound(const Sample& s, double delta) {
    const auto grid = LambdaGrid::geometric(s.size(), delta, 1.0);
    PacBayesQuery q{ProbVec::uniform(1), ProbVec::uniform(1), s.size(), delta};
    return pb_unexpected_bernstein_bound(q, 0.0, s.second_moment(), grid).value;
}

// ----------------------------------------------------------------------------

namespace detail {

inline ExperimentResult run_game(const ExperimentConfig& c, const RunOptions& opt) {
    const std::size_t T = c.horizon;
    const std::size_t R = c.repetitions;
    std::vector<std::string> names;
    for (std::size_t e = 0; e < c.environments.size(); ++e)
        for (const auto& p : c.policies) {
            const std::string el = c.environments[e].label.empty() ? "env" + std::to_string(e) : c.environments[e].label;
            names.push_back(c.environments.size() == 1 ? p.label : el + "/" + p.label);
        }
    // validate metric against environments up front
    for (const auto& e : c.environments) {
        auto env = make_environment(e, std::min<std::size_t>(T, 4), 0);
        if (c.metric == "pseudo_regret" && !env->loss_means())
            throw ConfigError("metric pseudo_regret needs stochastic environments; '" +
                              (e.label.empty() ? e.kind : e.label) + "' is adversarial (use metric = regret)");
        if (c.metric == "expert_regret" && env->experts() == 0)
            throw ConfigError("metric expert_regret needs an expert_advice environment");
        for (const auto& p : c.policies) make_policy(p, env->arms(), env->experts(), T);
    }
    // adversarial matrices do not depend on the seed: build them once
    std::vector<std::unique_ptr<Environment>> fixed(c.environments.size());
    for (std::size_t e = 0; e < c.environments.size(); ++e)
        if (c.environments[e].kind == "ftl_breaker" || c.environments[e].kind == "ucb_breaker")
            fixed[e] = make_environment(c.environments[e], T, 0);

    std::vector<std::vector<std::vector<double>>> per_rep(R);
    std::vector<std::vector<GameTranscript>> kept(opt.keep_transcripts ? R : 0);
    parallel_repetitions(R, thread_budget(opt.threads), [&](std::size_t r) {
        const auto seed_r = split_seed(c.seed, r);
        auto& out = per_rep[r];
        for (std::size_t e = 0; e < c.environments.size(); ++e) {
            std::unique_ptr<Environment> own;
            const Environment* env = fixed[e].get();
            if (!env) {
                own = make_environment(c.environments[e], T, split_seed(seed_r, 1000 + e));
                env = own.get();
            }
            for (std::size_t p = 0; p < c.policies.size(); ++p) {
                auto pol = make_policy(c.policies[p], env->arms(), env->experts(), T);
                auto tr = simulate(*env, *pol, T, split_seed(seed_r, 2000 + p));
                if (c.metric == "pseudo_regret") out.push_back(tr.pseudo_regret);
                else if (c.metric == "regret") out.push_back(tr.regret);
                else out.push_back(tr.expert_regret);
                if (opt.keep_transcripts) kept[r].push_back(std::move(tr));
            }
        }
    });
    ExperimentResult res;
    res.traces = reduce(names, per_rep);
    if (opt.keep_transcripts) {
        res.transcripts.assign(names.size(), {});
        for (std::size_t r = 0; r < R; ++r)
            for (std::size_t s = 0; s < names.size(); ++s) res.transcripts[s].push_back(std::move(kept[r][s]));
    }
    return res;
}

inline ExperimentResult run_ternary_compare(const ExperimentConfig& c, const RunOptions& opt, bool split) {
    SectionReader p(c.parameters, {"n", "grid"});
    const std::size_t n = p.integer("n", 100);
    if (n < 2) p.fail("n", "must be >= 2");
    const auto x = linspace(0.0, 1.0, p.integer("grid", 21));
    const std::vector<std::string> names = {"kl", split ? "split_kl" : "unexpected_bernstein"};
    std::vector<std::vector<std::vector<double>>> per_rep(c.repetitions);
    parallel_repetitions(c.repetitions, thread_budget(opt.threads), [&](std::size_t r) {
        const auto seed_r = split_seed(c.seed, r);
        std::vector<std::vector<double>> v(2);
        for (std::size_t g = 0; g < x.size(); ++g) {
            Rng rng(split_seed(seed_r, g));
            const auto s = ternary_sample(n, x[g], rng);
            v[0].push_back(kl_gap_bound(s, c.delta));
            v[1].push_back(split ? split_kl_gap_bound(s, c.delta) : unexpected_bernstein_gap_bound(s, c.delta));
        }
        per_rep[r] = std::move(v);
    });
    return {reduce(names, per_rep, x), {}};
}

// Synthetic finite class: true losses uniform in [lo, hi], observed zero-one
// losses independent Bernoulli draws.
inline std::vector<double> draw_true_losses(std::size_t m, double lo, double hi, Rng& rng) {
    std::vector<double> L(m);
    for (auto& l : L) l = lo + (hi - lo) * rng.uniform();
    return L;
}

inline LossTable draw_table(const std::vector<double>& L, std::size_t n, Rng& rng) {
    std::vector<double> v(L.size() * n);
    for (std::size_t h = 0; h < L.size(); ++h)
        for (std::size_t i = 0; i < n; ++i) v[h * n + i] = rng.bernoulli(L[h]) ? 1.0 : 0.0;
    return LossTable(L.size(), n, std::move(v));
}

inline ExperimentResult run_pacbayes_aggregate(const ExperimentConfig& c, const RunOptions& opt) {
    SectionReader p(c.parameters, {"hypotheses", "examples", "train", "loss_low", "loss_high"});
    const auto ms = p.integers("hypotheses", std::vector<std::uint64_t>{10, 20, 50, 100, 200});
    const std::size_t n = p.integer("examples", 500);
    const std::size_t r_train = p.integer("train", 50);
    if (r_train >= n) p.fail("train", "must be smaller than examples");
    const double lo = p.real("loss_low", 0.1), hi = p.real("loss_high", 0.4);
    if (!(0.0 <= lo && lo <= hi && hi <= 1.0)) p.fail("loss_high", "need 0 <= loss_low <= loss_high <= 1");
    std::vector<double> x;
    for (auto m : ms) {
        if (m == 0) p.fail("hypotheses", "must be >= 1");
        x.push_back(static_cast<double>(m));
    }
    const std::vector<std::string> names = {"bound", "rho_true_loss", "best_validation_true_loss"};
    std::vector<std::vector<std::vector<double>>> per_rep(c.repetitions);
    parallel_repetitions(c.repetitions, thread_budget(opt.threads), [&](std::size_t r) {
        const auto seed_r = split_seed(c.seed, r);
        std::vector<std::vector<double>> v(3);
        for (std::size_t g = 0; g < ms.size(); ++g) {
            Rng rng(split_seed(seed_r, g));
            const auto L = draw_true_losses(ms[g], lo, hi, rng);
            auto table = draw_table(L, n, rng);
            std::vector<std::vector<bool>> masks(ms[g], std::vector<bool>(n, true));
            for (auto& mk : masks) {
                std::vector<std::size_t> idx(n);
                for (std::size_t i = 0; i < n; ++i) idx[i] = i;
                for (std::size_t i = 0; i < r_train; ++i) std::swap(idx[i], idx[i + rng.index(n - i)]);
                for (std::size_t i = 0; i < r_train; ++i) mk[idx[i]] = false;
            }
            table.set_masks(std::move(masks));
            const auto am = alternating_minimize(ProbVec::uniform(ms[g]), table, c.delta, r_train);
            const auto val = table.empirical_losses();
            const auto best = static_cast<std::size_t>(std::min_element(val.begin(), val.end()) - val.begin());
            v[0].push_back(am.bound);
            v[1].push_back(am.rho.expect(L));
            v[2].push_back(L[best]);
        }
        per_rep[r] = std::move(v);
    });
    return {reduce(names, per_rep, x), {}};
}

inline ExperimentResult run_recursive(const ExperimentConfig& c, const RunOptions& opt) {
    SectionReader p(c.parameters, {"hypotheses", "examples", "stages", "gamma", "loss_low", "loss_high"});
    const std::size_t m = p.integer("hypotheses", 50);
    const std::size_t n = p.integer("examples", 2048);
    const auto Ts = p.integers("stages", std::vector<std::uint64_t>{1, 2, 3, 4});
    const double gamma = p.real("gamma", 0.5);
    if (!(gamma >= 0.0 && gamma <= 1.0)) p.fail("gamma", "must lie in [0,1]");
    const double lo = p.real("loss_low", 0.05), hi = p.real("loss_high", 0.5);
    if (!(0.0 <= lo && lo <= hi && hi <= 1.0)) p.fail("loss_high", "need 0 <= loss_low <= loss_high <= 1");
    if (m == 0) p.fail("hypotheses", "must be >= 1");
    std::vector<double> x;
    for (auto T : Ts) {
        if (T == 0 || T > n) p.fail("stages", "each entry must lie in [1, examples]");
        x.push_back(static_cast<double>(T));
    }
    const std::vector<std::string> names = {"bound", "posterior_true_loss"};
    std::vector<std::vector<std::vector<double>>> per_rep(c.repetitions);
    parallel_repetitions(c.repetitions, thread_budget(opt.threads), [&](std::size_t r) {
        const auto seed_r = split_seed(c.seed, r);
        Rng rng(split_seed(seed_r, 0));
        const auto L = draw_true_losses(m, lo, hi, rng);
        const auto table = draw_table(L, n, rng);
        std::vector<std::vector<double>> v(2);
        for (std::size_t g = 0; g < Ts.size(); ++g) {
            RecursiveOptions ro;
            ro.stages = Ts[g];
            ro.gammas.assign(Ts[g], gamma);
            ro.delta = c.delta;
            ro.seed = split_seed(seed_r, 1 + g);
            const auto stages = recursive_pb(table, ProbVec::uniform(m), ro);
            v[0].push_back(stages.back().bound.value);
            v[1].push_back(stages.back().posterior.expect(L));
        }
        per_rep[r] = std::move(v);
    });
    return {reduce(names, per_rep, x), {}};
}

inline ExperimentResult run_offline(const ExperimentConfig& c, const RunOptions& opt) {
    SectionReader p(c.parameters, {"arms", "records", "reward_means", "mode", "log"});
    const auto mode = p.str("mode", "iw");
    if (mode != "iw" && mode != "rs") p.fail("mode", "expected iw or rs");
    if (c.policies.empty()) throw ConfigError("offline_replay needs at least one [policy.<label>] section");
    std::optional<LoggedData> file_log;
    std::vector<double> means;
    std::size_t K = 0, records = 0;
    if (p.has("log")) {
        if (p.has("arms") || p.has("records") || p.has("reward_means"))
            p.fail("log", "a log file excludes arms, records and reward_means");
        file_log = read_log_file(p.str("log"));
        K = file_log->K;
    } else {
        K = p.integer("arms", 16);
        if (K < 2) p.fail("arms", "must be >= 2");
        records = p.integer("records", 100000);
        if (p.has("reward_means")) {
            means = p.reals("reward_means");
            if (means.size() != K) p.fail("reward_means", "need one mean per arm");
            for (double mu : means)
                if (!(mu >= 0.0 && mu <= 1.0)) p.fail("reward_means", "means must lie in [0,1]");
        } else {
            means.assign(K, 0.4);
            means[0] = 0.6;
        }
    }
    for (const auto& pc : c.policies) make_policy(pc, K, 0, std::max<std::size_t>(records, 1));
    std::vector<std::string> names;
    for (const auto& pc : c.policies) names.push_back(pc.label);
    std::vector<std::vector<std::vector<double>>> per_rep(c.repetitions);
    parallel_repetitions(c.repetitions, thread_budget(opt.threads), [&](std::size_t r) {
        const auto seed_r = split_seed(c.seed, r);
        const LoggedData log = file_log ? *file_log : make_synthetic_log(means, records, split_seed(seed_r, 77));
        std::vector<std::vector<double>> v;
        for (std::size_t i = 0; i < c.policies.size(); ++i) {
            auto pol = make_policy(c.policies[i], K, 0, std::max<std::size_t>(log.records.size(), 1));
            const auto res = mode == "iw" ? replay_importance_weighted(*pol, log, split_seed(seed_r, 2000 + i))
                                          : replay_rejection_sampling(*pol, log, split_seed(seed_r, 2000 + i));
            v.push_back(running_mean(res.rewards));
        }
        per_rep[r] = std::move(v);
    });
    return {reduce(names, per_rep), {}};
}

}  // namespace detail

inline ExperimentResult run_experiment(const ExperimentConfig& c, RunOptions opt = {}) {
    if (c.kind != "game" && !c.environments.empty())
        throw ConfigError("[environment] is only valid for game experiments");
    if (c.kind != "game" && c.kind != "offline_replay" && !c.policies.empty())
        throw ConfigError("[policy.*] sections are only valid for game and offline_replay experiments");
    if (c.kind == "game" && !c.parameters.entries.empty())
        throw ConfigError("[parameters] is not used by game experiments", c.parameters.line);
    if (c.kind == "game") return detail::run_game(c, opt);
    if (c.kind == "bounds_compare") {
        SectionReader p(c.parameters, {"n", "grid"});
        return {bounds_compare(p.integer("n", 1000), c.delta, p.integer("grid", 1001)), {}};
    }
    if (c.kind == "split_kl_compare") return detail::run_ternary_compare(c, opt, true);
    if (c.kind == "unexpected_bernstein_compare") return detail::run_ternary_compare(c, opt, false);
    if (c.kind == "pacbayes_aggregate") return detail::run_pacbayes_aggregate(c, opt);
    if (c.kind == "recursive_pb") return detail::run_recursive(c, opt);
    if (c.kind == "offline_replay") return detail::run_offline(c, opt);
    throw ConfigError("unknown experiment kind '" + c.kind + "'");
}

}  // namespace sulab::lab
