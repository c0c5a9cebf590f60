#pragma once

// Decision rules for full-information and bandit games: Hedge, FTL, EXP3
// (loss and reward forms), EXP4, UCB1, epsilon-first, and the doubling trick.
// Losses are in [0, scale] with scale = 1 unless a policy is told otherwise.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "sulab/divergences.hpp"
#include "sulab/errors.hpp"
#include "sulab/random.hpp"

namespace sulab {

// p(a) proportional to exp(-eta L(a)), computed after subtracting min L.
inline ProbVec hedge_distribution(std::span<const double> L, double eta) {
    if (L.empty()) throw DomainError("hedge_distribution: no arms");
    if (!(eta > 0.0) || std::isinf(eta)) throw DomainError("eta must be positive and finite");
    const double lo = *std::min_element(L.begin(), L.end());
    std::vector<double> w(L.size());
    for (std::size_t a = 0; a < L.size(); ++a) w[a] = std::exp(-eta * (L[a] - lo));
    return ProbVec::from_unnormalized(std::move(w));
}

enum class EtaVariant { simple, tight, anytime_simple, anytime_tight };

// simple: sqrt(2 ln K / T); tight: sqrt(8 ln K / T);
// anytime_simple: sqrt(ln K / t); anytime_tight: 2 sqrt(ln K / t).
inline double hedge_eta(std::size_t K, std::size_t T, EtaVariant v) {
    if (K < 2) throw DomainError("hedge_eta needs K >= 2");
    if (T == 0) throw DomainError("horizon/round must be >= 1");
    const double lk = std::log(static_cast<double>(K));
    const double td = static_cast<double>(T);
    switch (v) {
        case EtaVariant::simple: return std::sqrt(2.0 * lk / td);
        case EtaVariant::tight: return std::sqrt(8.0 * lk / td);
        case EtaVariant::anytime_simple: return std::sqrt(lk / td);
        case EtaVariant::anytime_tight: return 2.0 * std::sqrt(lk / td);
    }
    return 0.0;
}

// argmin L, lowest index on ties.
inline std::size_t ftl_choice(std::span<const double> L) {
    if (L.empty()) throw DomainError("ftl_choice: no arms");
    return static_cast<std::size_t>(std::min_element(L.begin(), L.end()) - L.begin());
}

inline double importance_weighted_loss(double loss, double p_chosen, bool chosen) {
    if (!chosen) return 0.0;
    if (!(p_chosen > 0.0)) throw DomainError("chosen arm must have positive probability");
    return loss / p_chosen;
}

struct PolicyState {
    std::vector<double> cumulative;   // L(a), L~(a) or R~(a)
    std::vector<std::size_t> counts;  // N(a)
    std::vector<double> means;        // mu_hat(a)
    std::size_t t = 0;                // completed rounds

    PolicyState() = default;
    explicit PolicyState(std::size_t K) : cumulative(K, 0.0), counts(K, 0), means(K, 0.0) {}
    std::size_t arms() const noexcept { return cumulative.size(); }
};

struct BanditFeedback {
    std::size_t arm = 0;
    double loss = 0.0;
};

enum class Exp3Variant { losses, rewards };

inline ProbVec exp3_distribution(const PolicyState& s, Exp3Variant v, double eta) {
    const auto K = s.arms();
    if (v == Exp3Variant::losses) return hedge_distribution(s.cumulative, eta);
    if (!(eta > 0.0 && eta < 1.0)) throw DomainError("reward-form EXP3 needs eta in (0,1)");
    const double hi = *std::max_element(s.cumulative.begin(), s.cumulative.end());
    std::vector<double> w(K);
    double z = 0.0;
    for (std::size_t a = 0; a < K; ++a) z += w[a] = std::exp(eta * (s.cumulative[a] - hi));
    const double floor = eta / static_cast<double>(K);
    for (auto& x : w) x = (1.0 - eta) * x / z + floor;
    return ProbVec::from_unnormalized(std::move(w));
}

// Loss form: L~(arm) += loss / p(arm). Reward form: R~(arm) += (1 - loss) / p(arm).
inline void exp3_update(PolicyState& s, Exp3Variant v, const ProbVec& p, BanditFeedback fb) {
    if (fb.arm >= s.arms()) throw DomainError("arm out of range");
    if (!(fb.loss >= 0.0 && fb.loss <= 1.0)) throw DomainError("loss must lie in [0,1]");
    const double x = v == Exp3Variant::losses ? fb.loss : 1.0 - fb.loss;
    s.cumulative[fb.arm] += importance_weighted_loss(x, p[fb.arm], true);
    s.counts[fb.arm] += 1;
    s.t += 1;
}

struct Exp3StepResult {
    ProbVec used;
    PolicyState state;
};

inline Exp3StepResult exp3_step(PolicyState s, Exp3Variant v, double eta, BanditFeedback fb) {
    ProbVec p = exp3_distribution(s, v, eta);
    exp3_update(s, v, p, fb);
    return {std::move(p), std::move(s)};
}

// EXP4 mixing of N expert advice rows over K arms.
struct Exp4Mix {
    ProbVec arms;
    std::vector<std::vector<double>> advice;

    // Expert-level estimates l~_h = sum_a q_h(a) l~_a.
    std::vector<double> project(std::span<const double> arm_losses) const {
        if (arm_losses.size() != arms.size()) throw DimensionError("projector: length mismatch");
        std::vector<double> out(advice.size(), 0.0);
        for (std::size_t h = 0; h < advice.size(); ++h)
            for (std::size_t a = 0; a < arm_losses.size(); ++a) out[h] += advice[h][a] * arm_losses[a];
        return out;
    }
};

inline Exp4Mix exp4_mix(const ProbVec& w, const std::vector<std::vector<double>>& advice) {
    if (advice.size() != w.size()) throw DimensionError("one advice row per expert");
    const std::size_t K = advice.front().size();
    std::vector<double> p(K, 0.0);
    for (std::size_t h = 0; h < advice.size(); ++h) {
        if (advice[h].size() != K) throw DimensionError("advice rows must have equal length");
        double sum = 0.0;
        for (double q : advice[h]) {
            if (!(q >= 0.0)) throw DomainError("advice entries must be nonnegative");
            sum += q;
        }
        if (std::abs(sum - 1.0) > kNormTolerance) throw DomainError("advice row is not a distribution");
        for (std::size_t a = 0; a < K; ++a) p[a] += w[h] * advice[h][a];
    }
    return {ProbVec::from_unnormalized(std::move(p)), advice};
}

enum class UcbVariant { original, improved };

// mu_hat + scale * radius; radius sqrt(3 ln t / (2N)) or sqrt(ln t / N).
inline double ucb_index(double mu_hat, std::size_t t, std::size_t N, UcbVariant v, double scale = 1.0) {
    if (N == 0) throw DomainError("unplayed arm has no index");
    if (t == 0) throw DomainError("t must be >= 1");
    const double lt = std::log(static_cast<double>(t));
    const double nd = static_cast<double>(N);
    const double r = v == UcbVariant::original ? std::sqrt(3.0 * lt / (2.0 * nd)) : std::sqrt(lt / nd);
    return mu_hat + scale * r;
}

struct EpsilonFirst {
    double epsilon;
    std::size_t exploration_rounds;
};

// epsilon = max(0, ln(T D^2) / (T D^2 / 4)); rounds = min(T, 2 ceil(eps T / 2)).
inline EpsilonFirst epsilon_first_schedule(double Delta, std::size_t T) {
    if (!(Delta > 0.0 && Delta <= 1.0)) throw DomainError("Delta must lie in (0,1]");
    if (T == 0) throw DomainError("T must be >= 1");
    const double x = static_cast<double>(T) * Delta * Delta;
    const double eps = std::max(0.0, std::log(x) / (x / 4.0));
    const auto half = static_cast<std::size_t>(std::ceil(eps * static_cast<double>(T) / 2.0));
    return {eps, std::min(T, 2 * half)};
}

struct DoublingStep {
    std::size_t period;
    double eta;
    bool reset;
};

// Period m = floor(log2 t) covers rounds 2^m .. 2^{m+1}-1, eta_m = sqrt(8 ln K / 2^m).
inline DoublingStep doubling_schedule(std::size_t t, std::size_t K) {
    if (t == 0) throw DomainError("t must be >= 1");
    if (K < 2) throw DomainError("K must be >= 2");
    std::size_t m = 0;
    while ((std::size_t{2} << m) <= t) ++m;
    const double len = std::ldexp(1.0, static_cast<int>(m));
    return {m, std::sqrt(8.0 * std::log(static_cast<double>(K)) / len), t == (std::size_t{1} << m)};
}

// ----------------------------------------------------------------------------
// Stateful policies driven by a game loop:
//   reset(K, seed); then per round: [advise(q)]; a = act(); observe_*(...)

using AdviceMatrix = std::vector<std::vector<double>>;

class Policy {
public:
    virtual ~Policy() = default;

    virtual std::string name() const = 0;
    virtual bool full_information() const { return false; }
    virtual bool needs_advice() const { return false; }

    virtual void reset(std::size_t K, std::uint64_t seed) {
        if (K == 0) throw DomainError("policy needs at least one arm");
        state_ = PolicyState(K);
        rng_ = Rng(seed);
        last_.clear();
    }

    // Losses are fed on [0, scale].
    void set_loss_scale(double scale) {
        if (!(scale > 0.0)) throw DomainError("loss scale must be positive");
        scale_ = scale;
    }
    double loss_scale() const noexcept { return scale_; }

    virtual void advise(const AdviceMatrix&) { throw DomainError(name() + " does not take expert advice"); }
    virtual std::size_t act() = 0;
    virtual void observe_full(std::span<const double> losses) { observe_bandit(chosen_, losses[chosen_]); }
    virtual void observe_bandit(std::size_t arm, double loss) = 0;

    const PolicyState& state() const noexcept { return state_; }
    // Distribution used in the most recent act(), empty for deterministic rules.
    std::span<const double> last_distribution() const noexcept { return last_; }

protected:
    std::size_t draw(const ProbVec& p) {
        last_ = p.vec();
        chosen_ = rng_.categorical(p.weights());
        return chosen_;
    }

    std::size_t pick(std::size_t a) {
        last_.clear();
        chosen_ = a;
        return a;
    }

    void check_loss(double loss) const {
        if (!(loss >= 0.0 && loss <= scale_ * (1.0 + 1e-12)))
            throw DomainError("loss outside [0, scale]");
    }

    void record(std::size_t arm, double loss) {
        auto& s = state_;
        s.counts[arm] += 1;
        s.means[arm] += ((scale_ - loss) - s.means[arm]) / static_cast<double>(s.counts[arm]);
        s.t += 1;
    }

    PolicyState state_;
    Rng rng_;
    std::vector<double> last_;
    std::size_t chosen_ = 0;
    double scale_ = 1.0;
};

enum class RateKind { fixed, anytime, doubling };

struct RateSchedule {
    RateKind kind = RateKind::anytime;
    double value = 1.0;  // eta for fixed; coefficient c for anytime
};

// Full-information exponential weights.
//   fixed: eta; anytime: c sqrt(ln K / t); doubling: restarts at t = 2^m.
class Hedge final : public Policy {
public:
    explicit Hedge(RateSchedule rate) : rate_(rate) {
        if (rate.kind != RateKind::doubling && !(rate.value > 0.0)) throw DomainError("eta must be positive");
    }

    std::string name() const override { return "hedge"; }
    bool full_information() const override { return true; }

    double eta(std::size_t t) const {
        const auto K = std::max<std::size_t>(state_.arms(), 2);
        switch (rate_.kind) {
            case RateKind::fixed: return rate_.value;
            case RateKind::anytime: return rate_.value * hedge_eta(K, t, EtaVariant::anytime_simple);
            case RateKind::doubling: return doubling_schedule(t, K).eta;
        }
        return 0.0;
    }

    std::size_t act() override {
        const std::size_t t = state_.t + 1;
        if (rate_.kind == RateKind::doubling && doubling_schedule(t, std::max<std::size_t>(state_.arms(), 2)).reset)
            std::fill(state_.cumulative.begin(), state_.cumulative.end(), 0.0);
        return draw(hedge_distribution(state_.cumulative, eta(t)));
    }

    void observe_full(std::span<const double> losses) override {
        if (losses.size() != state_.arms()) throw DimensionError("loss vector length mismatch");
        for (std::size_t a = 0; a < losses.size(); ++a) {
            check_loss(losses[a]);
            state_.cumulative[a] += losses[a];
        }
        record(chosen_, losses[chosen_]);
    }

    void observe_bandit(std::size_t, double) override {
        throw DomainError("hedge needs full-information feedback");
    }

private:
    RateSchedule rate_;
};

class FollowTheLeader final : public Policy {
public:
    std::string name() const override { return "ftl"; }
    bool full_information() const override { return true; }

    std::size_t act() override { return pick(ftl_choice(state_.cumulative)); }

    void observe_full(std::span<const double> losses) override {
        if (losses.size() != state_.arms()) throw DimensionError("loss vector length mismatch");
        for (std::size_t a = 0; a < losses.size(); ++a) {
            check_loss(losses[a]);
            state_.cumulative[a] += losses[a];
        }
        record(chosen_, losses[chosen_]);
    }

    void observe_bandit(std::size_t, double) override {
        throw DomainError("ftl needs full-information feedback");
    }
};

// Loss-form EXP3. fixed: eta; anytime: c sqrt(ln K / (t K)).
class Exp3 final : public Policy {
public:
    explicit Exp3(RateSchedule rate) : rate_(rate) {
        if (rate.kind == RateKind::doubling) throw DomainError("exp3 supports fixed or anytime rates");
        if (!(rate.value > 0.0)) throw DomainError("eta must be positive");
    }

    std::string name() const override { return "exp3"; }

    double eta(std::size_t t) const {
        if (rate_.kind == RateKind::fixed) return rate_.value;
        const double K = static_cast<double>(std::max<std::size_t>(state_.arms(), 2));
        return rate_.value * std::sqrt(std::log(K) / (static_cast<double>(t) * K));
    }

    std::size_t act() override {
        p_ = exp3_distribution(state_, Exp3Variant::losses, eta(state_.t + 1));
        return draw(p_);
    }

    void observe_bandit(std::size_t arm, double loss) override {
        check_loss(loss);
        exp3_update(state_, Exp3Variant::losses, p_, {arm, std::min(1.0, loss / scale_)});
        state_.means[arm] += ((scale_ - loss) - state_.means[arm]) / static_cast<double>(state_.counts[arm]);
    }

private:
    RateSchedule rate_;
    ProbVec p_;
};

// Reward-form EXP3 with explicit exploration floor eta / K.
class Exp3Rewards final : public Policy {
public:
    explicit Exp3Rewards(double eta) : eta_(eta) {
        if (!(eta > 0.0 && eta < 1.0)) throw DomainError("eta must lie in (0,1)");
    }

    std::string name() const override { return "exp3_rewards"; }

    std::size_t act() override {
        p_ = exp3_distribution(state_, Exp3Variant::rewards, eta_);
        return draw(p_);
    }

    void observe_bandit(std::size_t arm, double loss) override {
        check_loss(loss);
        exp3_update(state_, Exp3Variant::rewards, p_, {arm, std::min(1.0, loss / scale_)});
        state_.means[arm] += ((scale_ - loss) - state_.means[arm]) / static_cast<double>(state_.counts[arm]);
    }

private:
    double eta_;
    ProbVec p_;
};

// EXP4 with N experts; eta defaults to sqrt(2 ln N / (K T)).
class Exp4 final : public Policy {
public:
    Exp4(std::size_t experts, double eta) : N_(experts), eta_(eta) {
        if (experts == 0) throw DomainError("exp4 needs at least one expert");
        if (!(eta > 0.0)) throw DomainError("eta must be positive");
    }

    static double default_eta(std::size_t K, std::size_t N, std::size_t T) {
        return std::sqrt(2.0 * std::log(static_cast<double>(std::max<std::size_t>(N, 2))) /
                         (static_cast<double>(K) * static_cast<double>(T)));
    }

    std::string name() const override { return "exp4"; }
    bool needs_advice() const override { return true; }

    void reset(std::size_t K, std::uint64_t seed) override {
        Policy::reset(K, seed);
        expert_losses_.assign(N_, 0.0);
        advice_.clear();
    }

    void advise(const AdviceMatrix& q) override {
        if (q.size() != N_) throw DimensionError("advice must have one row per expert");
        advice_ = q;
    }

    std::size_t act() override {
        if (advice_.empty()) throw DomainError("exp4 acted without advice");
        mix_ = exp4_mix(hedge_distribution(expert_losses_, eta_), advice_);
        return draw(mix_.arms);
    }

    void observe_bandit(std::size_t arm, double loss) override {
        check_loss(loss);
        std::vector<double> est(state_.arms(), 0.0);
        est[arm] = importance_weighted_loss(loss / scale_, mix_.arms[arm], true);
        state_.cumulative[arm] += est[arm];
        const auto proj = mix_.project(est);
        for (std::size_t h = 0; h < N_; ++h) expert_losses_[h] += proj[h];
        record(arm, loss);
        advice_.clear();
    }

    std::span<const double> expert_losses() const noexcept { return expert_losses_; }

private:
    std::size_t N_;
    double eta_;
    std::vector<double> expert_losses_;
    AdviceMatrix advice_;
    Exp4Mix mix_;
};

// UCB1 on rewards scale - loss; confidence radius scaled to the loss range.
class Ucb1 final : public Policy {
public:
    explicit Ucb1(UcbVariant v) : v_(v) {}

    std::string name() const override { return v_ == UcbVariant::original ? "ucb1" : "ucb1_improved"; }

    std::size_t act() override {
        const auto K = state_.arms();
        for (std::size_t a = 0; a < K; ++a)
            if (state_.counts[a] == 0) return pick(a);
        const std::size_t t = state_.t + 1;
        std::size_t best = 0;
        double best_idx = -kInf;
        for (std::size_t a = 0; a < K; ++a) {
            const double idx = ucb_index(state_.means[a], t, state_.counts[a], v_, scale_);
            if (idx > best_idx) {
                best_idx = idx;
                best = a;
            }
        }
        return pick(best);
    }

    void observe_bandit(std::size_t arm, double loss) override {
        check_loss(loss);
        state_.cumulative[arm] += loss;
        record(arm, loss);
    }

private:
    UcbVariant v_;
};

// Round-robin exploration for the scheduled number of rounds, then commits
// to the best empirical mean.
class EpsilonFirstPolicy final : public Policy {
public:
    EpsilonFirstPolicy(double Delta, std::size_t T) : sched_(epsilon_first_schedule(Delta, T)) {}

    std::string name() const override { return "epsilon_first"; }
    const EpsilonFirst& schedule() const noexcept { return sched_; }

    std::size_t act() override {
        const auto K = state_.arms();
        if (state_.t < sched_.exploration_rounds) return pick(state_.t % K);
        std::size_t best = 0;
        for (std::size_t a = 1; a < K; ++a)
            if (state_.means[a] > state_.means[best]) best = a;
        return pick(best);
    }

    void observe_bandit(std::size_t arm, double loss) override {
        check_loss(loss);
        state_.cumulative[arm] += loss;
        record(arm, loss);
    }

private:
    EpsilonFirst sched_;
};

class UniformPolicy final : public Policy {
public:
    std::string name() const override { return "uniform"; }
    std::size_t act() override { return draw(ProbVec::uniform(state_.arms())); }
    void observe_bandit(std::size_t arm, double loss) override {
        check_loss(loss);
        state_.cumulative[arm] += loss;
        record(arm, loss);
    }
};

class FixedPolicy final : public Policy {
public:
    explicit FixedPolicy(std::size_t arm) : arm_(arm) {}
    std::string name() const override { return "fixed"; }
    std::size_t act() override {
        if (arm_ >= state_.arms()) throw DomainError("fixed arm out of range");
        return pick(arm_);
    }
    void observe_bandit(std::size_t arm, double loss) override {
        check_loss(loss);
        state_.cumulative[arm] += loss;
        record(arm, loss);
    }

private:
    std::size_t arm_;
};

}  // namespace sulab
