#pragma once

// High-confidence bounds on the mean of bounded i.i.d. samples, and exact
// finite-support evaluations of the moment-generating-function lemmas that
// underlie them.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sulab/divergences.hpp"
#include "sulab/errors.hpp"

namespace sulab {

// Uniform return type for every bound: the value plus whatever auxiliary
// quantities produced it.
struct BoundResult {
    double value = 0.0;
    double delta = 0.0;
    std::string method;
    std::map<std::string, double> detail;
};

class Sample {
public:
    // Values declared to lie in [0,1]; mean bounds are clipped to [0,1].
    static Sample unit(std::vector<double> values) {
        for (double v : values)
            if (!(v >= 0.0 && v <= 1.0)) throw DomainError("unit sample value outside [0,1]");
        return Sample(std::move(values), 1.0, 0.0, true);
    }

    // Values bounded from above by b only.
    static Sample bounded_above(std::vector<double> values, double b) {
        for (double v : values) {
            detail::require_finite(v, "sample values must be finite");
            if (v > b) throw DomainError("sample value exceeds its declared upper bound");
        }
        return Sample(std::move(values), b, std::nullopt, false);
    }

    std::size_t size() const noexcept { return values_.size(); }
    std::span<const double> values() const noexcept { return values_; }
    double upper_bound() const noexcept { return b_; }
    std::optional<double> lower_bound() const noexcept { return lower_; }
    bool unit_interval() const noexcept { return unit_; }

    double mean() const {
        double s = 0.0;
        for (double v : values_) s += v;
        return s / static_cast<double>(values_.size());
    }

    double second_moment() const {
        double s = 0.0;
        for (double v : values_) s += v * v;
        return s / static_cast<double>(values_.size());
    }

private:
    Sample(std::vector<double> v, double b, std::optional<double> lo, bool unit)
        : values_(std::move(v)), b_(b), lower_(lo), unit_(unit) {
        if (values_.empty()) throw DomainError("sample must be nonempty");
    }

    std::vector<double> values_;
    double b_;
    std::optional<double> lower_;
    bool unit_;
};

// Breakpoints b_0 < ... < b_K of the split decomposition
// X = b_0 + sum_j alpha_j X_{|j}.
class SplitGrid {
public:
    explicit SplitGrid(std::vector<double> points) : b_(std::move(points)) {
        if (b_.size() < 2) throw DomainError("split grid needs at least two points");
        for (std::size_t j = 1; j < b_.size(); ++j)
            if (!(b_[j] > b_[j - 1])) throw DomainError("split grid must be strictly increasing");
    }

    std::size_t segments() const noexcept { return b_.size() - 1; }
    std::span<const double> points() const noexcept { return b_; }
    double base() const noexcept { return b_.front(); }
    double top() const noexcept { return b_.back(); }
    double alpha(std::size_t j) const { return b_.at(j) - b_.at(j - 1); }

    // Fractional segment occupancy of x for segment j in [1, K]; equals the
    // indicator 1[x >= b_j] when x is a grid point.
    double segment(double x, std::size_t j) const {
        const double r = (x - b_[j - 1]) / alpha(j);
        return std::clamp(r, 0.0, 1.0);
    }

    double reconstruct(double x) const {
        double acc = b_.front();
        for (std::size_t j = 1; j < b_.size(); ++j) acc += alpha(j) * segment(x, j);
        return acc;
    }

private:
    std::vector<double> b_;
};

class LambdaGrid {
public:
    explicit LambdaGrid(std::vector<double> lambdas) : lambdas_(std::move(lambdas)) {
        if (lambdas_.empty()) throw DomainError("lambda grid must be nonempty");
        for (double l : lambdas_)
            if (!(l > 0.0)) throw DomainError("lambda grid values must be positive");
    }

    // {1/(2b), ..., 1/(2^k b)} with k = ceil(log2(sqrt(n / ln(1/delta)) / 2)), k >= 1.
    static LambdaGrid geometric(std::size_t n, double delta, double b) {
        detail::require_delta(delta);
        if (!(b > 0.0)) throw DomainError("b must be positive");
        const double raw = std::log2(std::sqrt(static_cast<double>(n) / std::log(1.0 / delta)) / 2.0);
        const auto k = static_cast<std::size_t>(std::max(1.0, std::ceil(raw)));
        std::vector<double> l;
        for (std::size_t i = 1; i <= k; ++i) l.push_back(1.0 / (std::ldexp(1.0, static_cast<int>(i)) * b));
        return LambdaGrid(std::move(l));
    }

    std::size_t size() const noexcept { return lambdas_.size(); }
    std::span<const double> values() const noexcept { return lambdas_; }

private:
    std::vector<double> lambdas_;
};

enum class TailKind { markov, chebyshev };

// Markov: E[X]/eps. Chebyshev: Var[X]/eps^2. Clipped to [0,1].
inline double markov_chebyshev_tail(TailKind kind, double moment, double eps) {
    if (!(eps > 0.0)) throw DomainError("eps must be positive");
    if (!(moment >= 0.0)) throw DomainError("mean/variance must be nonnegative");
    const double v = kind == TailKind::markov ? moment / eps : moment / (eps * eps);
    return std::min(1.0, v);
}

enum class Sides { one, two };

inline double hoeffding_radius(std::size_t n, double delta, Sides sides) {
    if (n == 0) throw DomainError("n must be >= 1");
    detail::require_delta(delta);
    const double c = sides == Sides::one ? 1.0 : 2.0;
    return std::sqrt(std::log(c / delta) / (2.0 * static_cast<double>(n)));
}

// Smallest n with hoeffding_radius(n) <= eps. A relative slack of 1e-12 on
// eps absorbs rounding in ln(.) when the exact answer is an integer.
inline std::size_t hoeffding_solve_n(double eps, double delta, Sides sides) {
    if (!(eps > 0.0)) throw DomainError("eps must be positive");
    detail::require_delta(delta);
    const double c = sides == Sides::one ? 1.0 : 2.0;
    const double exact = std::log(c / delta) / (2.0 * eps * eps);
    auto n = static_cast<std::size_t>(std::max(1.0, std::ceil(exact)));
    const double target = eps * (1.0 + 1e-12);
    while (n > 1 && hoeffding_radius(n - 1, delta, sides) <= target) --n;
    while (hoeffding_radius(n, delta, sides) > target) ++n;
    return n;
}

enum class KlVariant { direct, via_lemma };

inline BoundResult kl_mean_bound(double p_hat, std::size_t n, double delta, KlVariant variant,
                                 Direction dir = Direction::upper) {
    detail::require_unit(p_hat, "p_hat");
    if (n == 0) throw DomainError("n must be >= 1");
    detail::require_delta(delta);
    const double nd = static_cast<double>(n);
    const double eps = variant == KlVariant::direct ? std::log(1.0 / delta) / nd
                                                    : std::log(2.0 * std::sqrt(nd) / delta) / nd;
    BoundResult r;
    r.value = kl_inverse(p_hat, eps, dir);
    r.delta = delta;
    r.method = variant == KlVariant::direct ? "kl" : "kl_lemma";
    r.detail["eps"] = eps;
    r.detail["p_hat"] = p_hat;
    return r;
}

// b_0 + sum_j alpha_j kl^{-1,+}(p_hat_{|j}, ln(K/delta)/n).
inline BoundResult split_kl_mean_bound(const Sample& sample, const SplitGrid& grid, double delta) {
    detail::require_delta(delta);
    const auto K = grid.segments();
    const double nd = static_cast<double>(sample.size());
    for (double x : sample.values())
        if (x < grid.base() || x > grid.top()) throw DomainError("sample value outside the split grid range");
    const double eps = std::log(static_cast<double>(K) / delta) / nd;
    BoundResult r;
    r.delta = delta;
    r.method = "split_kl";
    r.detail["eps"] = eps;
    double value = grid.base();
    for (std::size_t j = 1; j <= K; ++j) {
        double s = 0.0;
        for (double x : sample.values()) s += grid.segment(x, j);
        const double p_j = std::min(1.0, s / nd);
        r.detail["p_hat_" + std::to_string(j)] = p_j;
        value += grid.alpha(j) * kl_inverse(p_j, eps, Direction::upper);
    }
    r.value = sample.unit_interval() ? std::clamp(value, 0.0, 1.0) : value;
    return r;
}

inline BoundResult bernstein_mean_bound(double mean_hat, double nu, double b, std::size_t n, double delta) {
    if (!(nu >= 0.0)) throw DomainError("variance bound must be nonnegative");
    if (!(b > 0.0)) throw DomainError("b must be positive");
    if (n == 0) throw DomainError("n must be >= 1");
    detail::require_delta(delta);
    const double nd = static_cast<double>(n);
    const double log_term = std::log(1.0 / delta);
    BoundResult r;
    r.value = mean_hat + std::sqrt(2.0 * nu * log_term / nd) + b * log_term / (3.0 * nd);
    r.delta = delta;
    r.method = "bernstein";
    r.detail["nu"] = nu;
    return r;
}

enum class BernsteinDual { f, f_inv };

// f(x) = 1 + x - sqrt(1 + 2x) and its inverse f^{-1}(x) = x + sqrt(2x).
inline double bernstein_duals(double x, BernsteinDual which) {
    if (!(x >= 0.0)) throw DomainError("x must be nonnegative");
    return which == BernsteinDual::f ? 1.0 + x - std::sqrt(1.0 + 2.0 * x) : x + std::sqrt(2.0 * x);
}

// Pairwise definition (1/(n(n-1))) sum_{i<j} (X_i - X_j)^2, evaluated in O(n)
// as the unbiased sample variance (n/(n-1)) (s - p^2), two-pass.
inline double pairwise_variance(std::span<const double> xs) {
    const auto n = xs.size();
    if (n < 2) throw DomainError("variance estimate needs n >= 2");
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    return ss / static_cast<double>(n - 1);
}

inline BoundResult empirical_bernstein_mean_bound(const Sample& sample, double delta) {
    if (!sample.unit_interval()) throw DomainError("empirical Bernstein needs a [0,1]-valued sample");
    if (sample.size() < 2) throw DomainError("empirical Bernstein needs n >= 2");
    detail::require_delta(delta);
    const double nd = static_cast<double>(sample.size());
    const double nu = pairwise_variance(sample.values());
    const double log_term = std::log(2.0 / delta);
    BoundResult r;
    r.value = std::clamp(
        sample.mean() + std::sqrt(2.0 * nu * log_term / nd) + 7.0 * log_term / (3.0 * (nd - 1.0)), 0.0,
        1.0);
    r.delta = delta;
    r.method = "empirical_bernstein";
    r.detail["nu_hat"] = nu;
    return r;
}

// psi(u) = u - ln(1 + u).
inline double psi(double u) {
    if (!(u > -1.0)) throw DomainError("psi needs u > -1");
    return u - std::log1p(u);
}

// min over the grid of mean + psi(-lambda b)/(lambda b^2) s + ln(k/delta)/(lambda n).
inline BoundResult unexpected_bernstein_mean_bound(const Sample& sample, double delta, const LambdaGrid& grid) {
    detail::require_delta(delta);
    const double b = sample.upper_bound();
    if (!(b > 0.0)) throw DomainError("upper bound b must be positive");
    for (double l : grid.values())
        if (!(l * b < 1.0)) throw DomainError("lambda grid element >= 1/b");
    const double nd = static_cast<double>(sample.size());
    const double mean = sample.mean();
    const double s = sample.second_moment();
    const double log_term = std::log(static_cast<double>(grid.size()) / delta);
    double best = kInf;
    double best_lambda = grid.values().front();
    for (double l : grid.values()) {
        const double v = mean + psi(-l * b) / (l * b * b) * s + log_term / (l * nd);
        if (v < best) {
            best = v;
            best_lambda = l;
        }
    }
    BoundResult r;
    r.value = sample.unit_interval() ? std::clamp(best, 0.0, 1.0) : best;
    r.delta = delta;
    r.method = "unexpected_bernstein";
    r.detail["lambda"] = best_lambda;
    r.detail["k"] = static_cast<double>(grid.size());
    r.detail["s_hat"] = s;
    return r;
}

inline BoundResult unexpected_bernstein_mean_bound(const Sample& sample, double delta) {
    return unexpected_bernstein_mean_bound(sample, delta,
                                           LambdaGrid::geometric(sample.size(), delta, sample.upper_bound()));
}

// Exact E[exp(n kl(p_hat||p))] for p_hat the mean of n Bernoulli(p) draws.
// Each term P[k] exp(n kl(k/n||p)) equals C(n,k) (k/n)^k (1-k/n)^(n-k), so p
// cancels for p in (0,1); terms are summed after a max shift in log space.
inline double kl_mgf_exact(std::size_t n, double p) {
    if (n == 0) throw DomainError("n must be >= 1");
    detail::require_unit(p, "p");
    if (p == 0.0 || p == 1.0) return 1.0;
    const double nd = static_cast<double>(n);
    auto xlogx = [](double c, double x) { return c > 0.0 ? c * std::log(x) : 0.0; };
    std::vector<double> terms(n + 1);
    double hi = -kInf;
    for (std::size_t k = 0; k <= n; ++k) {
        const double kd = static_cast<double>(k);
        const double log_binom = std::lgamma(nd + 1.0) - std::lgamma(kd + 1.0) - std::lgamma(nd - kd + 1.0);
        terms[k] = log_binom + xlogx(kd, kd / nd) + xlogx(nd - kd, (nd - kd) / nd);
        hi = std::max(hi, terms[k]);
    }
    double s = 0.0;
    for (double t : terms) s += std::exp(t - hi);
    return s * std::exp(hi);
}

// Finite-support random variable.
struct FiniteDistribution {
    std::vector<double> values;
    std::vector<double> probs;

    double mean() const {
        double s = 0.0;
        for (std::size_t i = 0; i < values.size(); ++i) s += probs[i] * values[i];
        return s;
    }

    template <class F>
    double expect(F&& f) const {
        double s = 0.0;
        for (std::size_t i = 0; i < values.size(); ++i) s += probs[i] * f(values[i]);
        return s;
    }

    void validate() const {
        if (values.empty() || values.size() != probs.size())
            throw DimensionError("finite distribution: values/probs mismatch");
        (void)ProbVec(probs);
    }
};

enum class MgfLemma { hoeffding, bernstein, unexpected };

struct MgfCheck {
    double lhs;
    double rhs;
};

// Exact left side and stated right side of:
//   hoeffding:  E e^{lambda X} <= e^{lambda E X + lambda^2 (b-a)^2 / 8}
//   bernstein:  E e^{lambda Z} <= exp(lambda^2 nu / (2 (1 - b lambda / 3))),   E Z = 0, lambda in [0, 3/b)
//   unexpected: E exp(lambda (E X - X) + (b lambda + ln(1 - b lambda)) X^2 / b^2) <= 1,  lambda in [0, 1/b)
// For bernstein and unexpected, b defaults to the largest support value.
inline MgfCheck mgf_lemma_check(const FiniteDistribution& dist, double lambda, MgfLemma lemma,
                                std::optional<double> b_opt = std::nullopt) {
    dist.validate();
    detail::require_finite(lambda, "lambda must be finite");
    const auto [lo_it, hi_it] = std::minmax_element(dist.values.begin(), dist.values.end());
    const double mu = dist.mean();
    switch (lemma) {
        case MgfLemma::hoeffding: {
            const double range = *hi_it - *lo_it;
            const double lhs = dist.expect([&](double x) { return std::exp(lambda * x); });
            return {lhs, std::exp(lambda * mu + lambda * lambda * range * range / 8.0)};
        }
        case MgfLemma::bernstein: {
            const double scale = std::max(std::abs(*lo_it), std::abs(*hi_it));
            if (std::abs(mu) > 1e-9 * std::max(1.0, scale)) throw DomainError("Bernstein lemma needs E[Z] = 0");
            const double b = b_opt.value_or(*hi_it);
            if (b < *hi_it) throw DomainError("support exceeds b");
            if (!(lambda >= 0.0)) throw DomainError("lambda must be nonnegative");
            if (b > 0.0 && !(lambda * b < 3.0)) throw DomainError("lambda must be below 3/b");
            const double nu = dist.expect([](double z) { return z * z; });
            const double lhs = dist.expect([&](double z) { return std::exp(lambda * z); });
            return {lhs, std::exp(lambda * lambda * nu / (2.0 * (1.0 - b * lambda / 3.0)))};
        }
        case MgfLemma::unexpected: {
            const double b = b_opt.value_or(*hi_it);
            if (!(b > 0.0)) throw DomainError("unexpected Bernstein lemma needs b > 0");
            if (b < *hi_it) throw DomainError("support exceeds b");
            if (!(lambda >= 0.0 && lambda * b < 1.0)) throw DomainError("lambda must lie in [0, 1/b)");
            const double coef = (b * lambda + std::log1p(-b * lambda)) / (b * b);
            const double lhs =
                dist.expect([&](double x) { return std::exp(lambda * (mu - x) + coef * x * x); });
            return {lhs, 1.0};
        }
    }
    return {0.0, 0.0};
}

}  // namespace sulab
