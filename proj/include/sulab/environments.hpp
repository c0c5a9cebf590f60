#pragma once

// Loss generators for stochastic and oblivious adversarial games, expert
// advice streams, the FTL and UCB1 breaker sequences, and offline replay of
// uniformly logged bandit data.

#include <algorithm>
#include <array>
#include <charconv>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <istream>
#include <memory>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sulab/errors.hpp"
#include "sulab/online_policies.hpp"
#include "sulab/random.hpp"

namespace sulab {

// Oblivious loss source: loss(t, a) is fixed by construction, t is 1-based.
class Environment {
public:
    virtual ~Environment() = default;
    virtual std::size_t arms() const = 0;
    virtual double loss(std::size_t t, std::size_t a) const = 0;
    // Expected losses, when the environment is stochastic.
    virtual std::optional<std::vector<double>> loss_means() const { return std::nullopt; }
    virtual std::optional<std::size_t> horizon() const { return std::nullopt; }
    virtual std::size_t experts() const { return 0; }
    virtual AdviceMatrix advice(std::size_t) const { throw DomainError("environment has no experts"); }
};

// l_{t,a} ~ Bernoulli(mu(a)), each cell drawn from its own (seed, t, a)
// uniform so that reveal order never changes a value.
class BernoulliEnv final : public Environment {
public:
    BernoulliEnv(std::vector<double> loss_means, std::uint64_t seed) : mu_(std::move(loss_means)), seed_(seed) {
        if (mu_.empty()) throw DomainError("environment needs at least one arm");
        for (double m : mu_) detail::require_unit(m, "Bernoulli mean");
    }

    static BernoulliEnv from_rewards(const std::vector<double>& reward_means, std::uint64_t seed) {
        std::vector<double> l;
        for (double r : reward_means) {
            detail::require_unit(r, "Bernoulli mean");
            l.push_back(1.0 - r);
        }
        return BernoulliEnv(std::move(l), seed);
    }

    std::size_t arms() const override { return mu_.size(); }
    double loss(std::size_t t, std::size_t a) const override {
        return cell_uniform(seed_, t, a) < mu_[a] ? 1.0 : 0.0;
    }
    std::optional<std::vector<double>> loss_means() const override { return mu_; }

private:
    std::vector<double> mu_;
    std::uint64_t seed_;
};

// Predicting X_t ~ Bernoulli(mu) with two actions "0" and "1" under
// zero-one loss: l_{t,0} = X_t, l_{t,1} = 1 - X_t.
class BinaryPredictionEnv final : public Environment {
public:
    BinaryPredictionEnv(double mu, std::uint64_t seed) : mu_(mu), seed_(seed) {
        detail::require_unit(mu, "bias");
    }

    std::size_t arms() const override { return 2; }
    double loss(std::size_t t, std::size_t a) const override {
        const double x = cell_uniform(seed_, t, 0) < mu_ ? 1.0 : 0.0;
        return a == 0 ? x : 1.0 - x;
    }
    std::optional<std::vector<double>> loss_means() const override { return std::vector<double>{mu_, 1.0 - mu_}; }

private:
    double mu_;
    std::uint64_t seed_;
};

class LossMatrixEnv final : public Environment {
public:
    explicit LossMatrixEnv(std::vector<std::vector<double>> rows) : rows_(std::move(rows)) {
        if (rows_.empty() || rows_.front().empty()) throw DomainError("loss matrix must be nonempty");
        for (const auto& r : rows_) {
            if (r.size() != rows_.front().size()) throw DimensionError("ragged loss matrix");
            for (double v : r) detail::require_unit(v, "loss matrix entry");
        }
    }

    std::size_t arms() const override { return rows_.front().size(); }
    double loss(std::size_t t, std::size_t a) const override {
        if (t == 0 || t > rows_.size()) throw DomainError("round beyond the loss matrix");
        return rows_[t - 1][a];
    }
    std::optional<std::size_t> horizon() const override { return rows_.size(); }
    const std::vector<std::vector<double>>& rows() const noexcept { return rows_; }

private:
    std::vector<std::vector<double>> rows_;
};

struct ExpertSpec {
    enum class Kind { constant, uniform, random } kind = Kind::constant;
    std::size_t arm = 0;  // constant experts only
};

// Bernoulli losses plus N experts whose advice rows are fixed per round.
class ExpertAdviceEnv final : public Environment {
public:
    ExpertAdviceEnv(BernoulliEnv base, std::vector<ExpertSpec> experts, std::uint64_t seed)
        : base_(std::move(base)), experts_(std::move(experts)), seed_(split_seed(seed, 0xad71ce)) {
        if (experts_.empty()) throw DomainError("at least one expert is required");
        for (const auto& e : experts_)
            if (e.kind == ExpertSpec::Kind::constant && e.arm >= base_.arms())
                throw DomainError("constant expert arm out of range");
    }

    std::size_t arms() const override { return base_.arms(); }
    double loss(std::size_t t, std::size_t a) const override { return base_.loss(t, a); }
    std::optional<std::vector<double>> loss_means() const override { return base_.loss_means(); }
    std::size_t experts() const override { return experts_.size(); }

    AdviceMatrix advice(std::size_t t) const override {
        const auto K = arms();
        AdviceMatrix q(experts_.size(), std::vector<double>(K, 0.0));
        for (std::size_t h = 0; h < experts_.size(); ++h) {
            switch (experts_[h].kind) {
                case ExpertSpec::Kind::constant: q[h][experts_[h].arm] = 1.0; break;
                case ExpertSpec::Kind::uniform: std::fill(q[h].begin(), q[h].end(), 1.0 / static_cast<double>(K)); break;
                case ExpertSpec::Kind::random: {
                    const auto a = static_cast<std::size_t>(cell_uniform(seed_, t, h) * static_cast<double>(K));
                    q[h][std::min(a, K - 1)] = 1.0;
                    break;
                }
            }
        }
        return q;
    }

private:
    BernoulliEnv base_;
    std::vector<ExpertSpec> experts_;
    std::uint64_t seed_;
};

// Two arms. l_1 = (0, 1/2), then (1,0), (0,1), (1,0), ... With lowest-index
// ties, FTL plays the arm that is about to lose on every round from t = 2.
inline std::vector<std::vector<double>> make_ftl_breaker(std::size_t T) {
    if (T < 2) throw DomainError("FTL breaker needs T >= 2");
    std::vector<std::vector<double>> rows;
    rows.reserve(T);
    rows.push_back({0.0, 0.5});
    for (std::size_t t = 2; t <= T; ++t) rows.push_back(t % 2 == 0 ? std::vector<double>{1.0, 0.0}
                                                                  : std::vector<double>{0.0, 1.0});
    return rows;
}

struct UcbBreaker {
    std::vector<std::vector<double>> losses;  // T x K, losses = 1 - rewards
    std::vector<std::size_t> trajectory;      // UCB1's predicted arms
};

// Simulates deterministic UCB1 offline and, every round, gives the arm it is
// about to play a low reward and every other arm a high one. Lower arm
// indices get slightly higher values, so no two rewards in a round coincide.
inline UcbBreaker make_ucb_breaker(std::size_t T, std::size_t K = 2, UcbVariant v = UcbVariant::improved) {
    if (K < 2) throw DomainError("UCB breaker needs K >= 2");
    if (T < 2 * K) throw DomainError("UCB breaker needs T >= 2K");
    Ucb1 ucb(v);
    ucb.reset(K, 0);
    UcbBreaker out;
    out.losses.reserve(T);
    out.trajectory.reserve(T);
    const double kd = static_cast<double>(K);
    for (std::size_t t = 1; t <= T; ++t) {
        const std::size_t a = ucb.act();
        std::vector<double> row(K);
        for (std::size_t b = 0; b < K; ++b) {
            const double tilt = static_cast<double>(K - 1 - b) / kd;
            const double reward = b == a ? 0.05 + 0.02 * tilt : 0.95 + 0.04 * tilt;
            row[b] = 1.0 - reward;
        }
        ucb.observe_bandit(a, row[a]);
        out.trajectory.push_back(a);
        out.losses.push_back(std::move(row));
    }
    return out;
}

// ----------------------------------------------------------------------------
// Game loop and accounting

struct GameTranscript {
    std::vector<std::size_t> arms;        // A_t
    std::vector<double> losses;           // l_{t,A_t}
    std::vector<std::size_t> counts;      // N_T(a)
    std::vector<double> arm_totals;       // sum_t l_{t,a}
    std::vector<double> regret;           // vs best arm in hindsight, per round
    std::vector<double> pseudo_regret;    // sum_s Delta(A_s); empty without known means
    std::vector<double> expert_regret;    // vs best expert in hindsight; advice games only
    std::vector<std::vector<double>> distributions;  // optional

    std::size_t rounds() const noexcept { return arms.size(); }
    double total_loss() const {
        double s = 0.0;
        for (double l : losses) s += l;
        return s;
    }
};

// Prefix sums of Delta(A_s).
inline std::vector<double> pseudo_regret(std::span<const std::size_t> arms, std::span<const double> gaps) {
    std::vector<double> out;
    out.reserve(arms.size());
    double acc = 0.0;
    for (auto a : arms) {
        if (a >= gaps.size()) throw DomainError("arm out of range");
        acc += gaps[a];
        out.push_back(acc);
    }
    return out;
}

// Gaps from expected losses: Delta(a) = mu(a) - min mu.
inline std::vector<double> loss_gaps(std::span<const double> loss_means) {
    const double best = *std::min_element(loss_means.begin(), loss_means.end());
    std::vector<double> g;
    for (double m : loss_means) g.push_back(m - best);
    return g;
}

inline std::vector<double> pseudo_regret(const GameTranscript& tr, std::span<const double> loss_means) {
    const auto gaps = loss_gaps(loss_means);
    return pseudo_regret(tr.arms, gaps);
}

struct SimOptions {
    bool record_distributions = false;
};

inline GameTranscript simulate(const Environment& env, Policy& policy, std::size_t T, std::uint64_t seed,
                               SimOptions opt = {}) {
    if (T == 0) throw DomainError("horizon must be >= 1");
    if (env.horizon() && *env.horizon() < T) throw DomainError("horizon exceeds the loss matrix");
    const auto K = env.arms();
    policy.reset(K, seed);
    if (policy.needs_advice() && env.experts() == 0) throw DomainError(policy.name() + " needs expert advice");

    GameTranscript tr;
    tr.arms.reserve(T);
    tr.losses.reserve(T);
    tr.regret.reserve(T);
    tr.arm_totals.assign(K, 0.0);
    tr.counts.assign(K, 0);
    const auto means = env.loss_means();
    std::vector<double> gaps;
    if (means) {
        gaps = loss_gaps(*means);
        tr.pseudo_regret.reserve(T);
    }
    const std::size_t N = env.experts();
    std::vector<double> expert_totals(N, 0.0);

    std::vector<double> col(K);
    double incurred = 0.0;
    double pseudo = 0.0;
    for (std::size_t t = 1; t <= T; ++t) {
        AdviceMatrix q;
        if (N > 0) {
            q = env.advice(t);
            if (policy.needs_advice()) policy.advise(q);
        }
        const std::size_t a = policy.act();
        if (a >= K) throw DomainError("policy chose an arm out of range");
        for (std::size_t b = 0; b < K; ++b) col[b] = env.loss(t, b);
        if (policy.full_information()) policy.observe_full(col);
        else policy.observe_bandit(a, col[a]);

        if (opt.record_distributions) {
            auto d = policy.last_distribution();
            tr.distributions.emplace_back(d.begin(), d.end());
        }
        tr.arms.push_back(a);
        tr.losses.push_back(col[a]);
        tr.counts[a] += 1;
        incurred += col[a];
        for (std::size_t b = 0; b < K; ++b) tr.arm_totals[b] += col[b];
        tr.regret.push_back(incurred - *std::min_element(tr.arm_totals.begin(), tr.arm_totals.end()));
        if (means) {
            pseudo += gaps[a];
            tr.pseudo_regret.push_back(pseudo);
        }
        if (N > 0) {
            for (std::size_t h = 0; h < N; ++h)
                for (std::size_t b = 0; b < K; ++b) expert_totals[h] += q[h][b] * col[b];
            tr.expert_regret.push_back(incurred - *std::min_element(expert_totals.begin(), expert_totals.end()));
        }
    }
    return tr;
}

// ----------------------------------------------------------------------------
// Logged data: one record per line, "action reward f1 ... f10", integers.

struct LogRecord {
    int action = 0;
    int reward = 0;
    std::array<std::uint8_t, 10> features{};
};

struct LoggedData {
    std::size_t K = 0;
    std::vector<LogRecord> records;
};

// Strict: exactly 12 integer tokens, reward and features binary, action in
// [0, K) when K is given.
inline LogRecord parse_log_line(std::string_view line, std::optional<std::size_t> K = std::nullopt,
                                std::size_t lineno = 0) {
    std::array<long long, 12> tok{};
    std::size_t count = 0;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
        if (i >= line.size()) break;
        std::size_t j = i;
        while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
        if (count == 12) throw ParseError("expected 12 fields, found more", lineno);
        long long v = 0;
        const auto* first = line.data() + i;
        const auto* last = line.data() + j;
        auto [ptr, ec] = std::from_chars(first, last, v);
        if (ec != std::errc() || ptr != last)
            throw ParseError("non-integer token '" + std::string(first, last) + "'", lineno);
        tok[count++] = v;
        i = j;
    }
    if (count != 12) throw ParseError("expected 12 fields, found " + std::to_string(count), lineno);
    LogRecord r;
    if (tok[0] < 0) throw ParseError("negative action id", lineno);
    if (K && static_cast<unsigned long long>(tok[0]) >= *K)
        throw ParseError("action " + std::to_string(tok[0]) + " outside [0, " + std::to_string(*K) + ")", lineno);
    if (tok[1] != 0 && tok[1] != 1) throw ParseError("reward must be 0 or 1", lineno);
    r.action = static_cast<int>(tok[0]);
    r.reward = static_cast<int>(tok[1]);
    for (std::size_t f = 0; f < 10; ++f) {
        if (tok[f + 2] != 0 && tok[f + 2] != 1) throw ParseError("features must be 0 or 1", lineno);
        r.features[f] = static_cast<std::uint8_t>(tok[f + 2]);
    }
    return r;
}

// "K=<int>" header, '#' comment lines and blank lines skipped.
inline LoggedData read_log(std::istream& in) {
    LoggedData d;
    std::string line;
    std::size_t lineno = 0;
    bool have_k = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const auto first = line.find_first_not_of(" \t");
        if (first == std::string::npos || line[first] == '#') continue;
        if (!have_k) {
            std::string_view sv(line);
            sv.remove_prefix(first);
            if (sv.substr(0, 2) != "K=") throw ParseError("missing 'K=<int>' header", lineno);
            sv.remove_prefix(2);
            while (!sv.empty() && (sv.back() == ' ' || sv.back() == '\t')) sv.remove_suffix(1);
            std::size_t k = 0;
            auto [ptr, ec] = std::from_chars(sv.data(), sv.data() + sv.size(), k);
            if (ec != std::errc() || ptr != sv.data() + sv.size() || k == 0)
                throw ParseError("bad K header", lineno);
            d.K = k;
            have_k = true;
            continue;
        }
        d.records.push_back(parse_log_line(line, d.K, lineno));
    }
    if (!have_k) throw ParseError("missing 'K=<int>' header");
    return d;
}

inline LoggedData read_log_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open log file: " + path);
    return read_log(in);
}

inline void write_log(std::ostream& out, const LoggedData& d) {
    out << "K=" << d.K << '\n';
    for (const auto& r : d.records) {
        out << r.action << ' ' << r.reward;
        for (auto f : r.features) out << ' ' << static_cast<int>(f);
        out << '\n';
    }
}

// Uniform logging policy over K actions with Bernoulli(reward_means[a]) rewards.
inline LoggedData make_synthetic_log(std::span<const double> reward_means, std::size_t n, std::uint64_t seed) {
    if (reward_means.empty()) throw DomainError("need at least one action");
    for (double m : reward_means) detail::require_unit(m, "reward mean");
    LoggedData d;
    d.K = reward_means.size();
    d.records.reserve(n);
    Rng rng(seed);
    for (std::size_t i = 0; i < n; ++i) {
        LogRecord r;
        r.action = static_cast<int>(rng.index(d.K));
        r.reward = rng.bernoulli(reward_means[static_cast<std::size_t>(r.action)]) ? 1 : 0;
        const auto bits = rng.next();
        for (std::size_t f = 0; f < 10; ++f) r.features[f] = static_cast<std::uint8_t>((bits >> f) & 1U);
        d.records.push_back(r);
    }
    return d;
}

struct ReplayResult {
    std::size_t records_read = 0;
    std::vector<std::size_t> arms;
    std::vector<double> rewards;  // r~ for IW, r for rejection sampling

    std::size_t rounds() const noexcept { return rewards.size(); }
    double mean_reward() const {
        if (rewards.empty()) return 0.0;
        double s = 0.0;
        for (double r : rewards) s += r;
        return s / static_cast<double>(rewards.size());
    }
};

// r~ = K r 1[policy action = logged action]; the policy sees loss K - r~ on
// the [0, K] scale. Every record is a round.
inline ReplayResult replay_importance_weighted(Policy& policy, const LoggedData& log, std::uint64_t seed) {
    if (log.K == 0) throw DomainError("log has no actions");
    const double kd = static_cast<double>(log.K);
    policy.set_loss_scale(kd);
    policy.reset(log.K, seed);
    ReplayResult out;
    out.rewards.reserve(log.records.size());
    for (const auto& r : log.records) {
        if (r.action < 0 || static_cast<std::size_t>(r.action) >= log.K) throw DomainError("action id out of range");
        const std::size_t a = policy.act();
        const double est = a == static_cast<std::size_t>(r.action) ? kd * r.reward : 0.0;
        policy.observe_bandit(a, kd - est);
        out.arms.push_back(a);
        out.rewards.push_back(est);
        ++out.records_read;
    }
    return out;
}

// Scrolls the log until the logged action equals the policy's action, then
// plays that record as a genuine round; stops at the end of the log.
inline ReplayResult replay_rejection_sampling(Policy& policy, const LoggedData& log, std::uint64_t seed) {
    if (log.K == 0) throw DomainError("log has no actions");
    policy.set_loss_scale(1.0);
    policy.reset(log.K, seed);
    ReplayResult out;
    std::size_t i = 0;
    while (i < log.records.size()) {
        const std::size_t a = policy.act();
        while (i < log.records.size() && static_cast<std::size_t>(log.records[i].action) != a) ++i;
        if (i == log.records.size()) break;
        const double r = log.records[i].reward;
        policy.observe_bandit(a, 1.0 - r);
        out.arms.push_back(a);
        out.rewards.push_back(r);
        ++i;
    }
    out.records_read = i;
    return out;
}

}  // namespace sulab
