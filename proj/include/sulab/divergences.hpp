#pragma once

// Entropy, binary and categorical KL divergence, numerical inversion of the
// binary kl, and its Pinsker-type relaxations. All logarithms are natural.

#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "sulab/errors.hpp"

namespace sulab {

// Information quantity in nats; may be +inf.
using Nats = double;

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kNormTolerance = 1e-9;

// A finite probability distribution. Construction renormalizes when the sum
// is within 1e-9 of one and rejects otherwise. Sub-normalized weights
// (sum <= 1, used for countable-class priors) are kept as given when
// constructed with Normalization::allow_subnormalized.
class ProbVec {
public:
    enum class Normalization { exact, allow_subnormalized };

    ProbVec() = default;

    explicit ProbVec(std::vector<double> weights, Normalization mode = Normalization::exact)
        : w_(std::move(weights)) {
        if (w_.empty()) throw DomainError("ProbVec must have at least one entry");
        double sum = 0.0;
        for (double x : w_) {
            detail::require_finite(x, "ProbVec entries must be finite");
            if (x < 0.0) throw DomainError("ProbVec entries must be nonnegative");
            sum += x;
        }
        if (mode == Normalization::allow_subnormalized) {
            if (sum > 1.0 + kNormTolerance) throw DomainError("prior mass exceeds 1");
            subnormalized_ = std::abs(sum - 1.0) > kNormTolerance;
            if (!subnormalized_) normalize(sum);
            return;
        }
        if (std::abs(sum - 1.0) > kNormTolerance)
            throw DomainError("ProbVec weights sum to " + std::to_string(sum) + ", not 1");
        normalize(sum);
    }

    static ProbVec uniform(std::size_t m) {
        if (m == 0) throw DomainError("ProbVec must have at least one entry");
        return ProbVec(std::vector<double>(m, 1.0 / static_cast<double>(m)));
    }

    static ProbVec point_mass(std::size_t m, std::size_t at) {
        std::vector<double> w(m, 0.0);
        w.at(at) = 1.0;
        return ProbVec(std::move(w));
    }

    // Normalizes arbitrary nonnegative weights with positive total.
    static ProbVec from_unnormalized(std::vector<double> weights) {
        double sum = 0.0;
        for (double x : weights) {
            if (!(x >= 0.0) || std::isinf(x)) throw DomainError("weights must be finite and nonnegative");
            sum += x;
        }
        if (!(sum > 0.0)) throw DomainError("weights have zero total mass");
        for (double& x : weights) x /= sum;
        return ProbVec(std::move(weights));
    }

    std::size_t size() const noexcept { return w_.size(); }
    double operator[](std::size_t i) const { return w_[i]; }
    std::span<const double> weights() const noexcept { return w_; }
    const std::vector<double>& vec() const noexcept { return w_; }
    bool subnormalized() const noexcept { return subnormalized_; }

    auto begin() const noexcept { return w_.begin(); }
    auto end() const noexcept { return w_.end(); }

    double expect(std::span<const double> f) const {
        if (f.size() != w_.size()) throw DimensionError("expectation: length mismatch");
        double s = 0.0;
        for (std::size_t i = 0; i < w_.size(); ++i) s += w_[i] * f[i];
        return s;
    }

private:
    void normalize(double sum) {
        for (double& x : w_) x /= sum;
    }

    std::vector<double> w_;
    bool subnormalized_ = false;
};

// H(p) = -p ln p - (1-p) ln(1-p), with 0 ln 0 = 0.
inline Nats binary_entropy(double p) {
    detail::require_unit(p, "p");
    auto term = [](double x) { return x > 0.0 ? -x * std::log(x) : 0.0; };
    return term(p) + term(1.0 - p);
}

// kl(p||q) = p ln(p/q) + (1-p) ln((1-p)/(1-q)).
inline Nats binary_kl(double p, double q) {
    detail::require_unit(p, "p");
    detail::require_unit(q, "q");
    auto term = [](double a, double b) {
        if (a == 0.0) return 0.0;
        if (b == 0.0) return kInf;
        return a * std::log(a / b);
    };
    const double v = term(p, q) + term(1.0 - p, 1.0 - q);
    return v > 0.0 ? v : 0.0;
}

// KL(rho||pi) over a shared finite index set.
inline Nats categorical_kl(std::span<const double> rho, std::span<const double> pi) {
    if (rho.size() != pi.size()) throw DimensionError("categorical_kl: length mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < rho.size(); ++i) {
        if (rho[i] <= 0.0) continue;
        if (pi[i] <= 0.0) return kInf;
        s += rho[i] * std::log(rho[i] / pi[i]);
    }
    return s > 0.0 ? s : 0.0;
}

inline Nats categorical_kl(const ProbVec& rho, const ProbVec& pi) {
    return categorical_kl(rho.weights(), pi.weights());
}

enum class Direction { upper, lower };

inline constexpr double kKlInverseTolerance = 1e-11;
inline constexpr int kKlInverseMaxIter = 200;

// Upper inverse: max{q in [p_hat,1] : kl(p_hat||q) <= eps}.
// Lower inverse: min{q in [0,p_hat] : kl(p_hat||q) <= eps}.
// Bisection on the monotone branch of the convex map q -> kl(p_hat||q).
// The returned point is on the conservative side of the bracket.
inline double kl_inverse(double p_hat, Nats eps, Direction dir) {
    detail::require_unit(p_hat, "p_hat");
    if (!(eps >= 0.0)) throw DomainError("eps must be nonnegative");
    const bool up = dir == Direction::upper;
    if (std::isinf(eps)) return up ? 1.0 : 0.0;
    if (eps == 0.0) return p_hat;
    // closed forms where the bisection would touch kl = +inf
    if (up) {
        if (p_hat == 0.0) return -std::expm1(-eps);
        if (p_hat == 1.0) return 1.0;
    } else {
        if (p_hat == 1.0) return std::exp(-eps);
        if (p_hat == 0.0) return 0.0;
    }
    double inside = p_hat;             // kl <= eps
    double outside = up ? 1.0 : 0.0;   // kl > eps (or the boundary)
    if (binary_kl(p_hat, outside) <= eps) return outside;
    for (int it = 0; it < kKlInverseMaxIter; ++it) {
        if (std::abs(outside - inside) <= kKlInverseTolerance) break;
        const double mid = 0.5 * (inside + outside);
        if (mid == inside || mid == outside) break;
        if (binary_kl(p_hat, mid) <= eps) inside = mid;
        else outside = mid;
    }
    return outside;
}

struct PinskerRelaxations {
    double plain;          // min(1, p + sqrt(eps/2))
    double refined_upper;  // min(1, p + sqrt(2 p eps) + 2 eps)
    double refined_lower;  // max(0, p - sqrt(2 p eps))
};

inline PinskerRelaxations pinsker_relaxations(double p_hat, Nats eps) {
    detail::require_unit(p_hat, "p_hat");
    if (!(eps >= 0.0)) throw DomainError("eps must be nonnegative");
    const double spread = std::sqrt(2.0 * p_hat * eps);
    return {std::min(1.0, p_hat + std::sqrt(eps / 2.0)),
            std::min(1.0, p_hat + spread + 2.0 * eps),
            std::max(0.0, p_hat - spread)};
}

struct BinomialBracket {
    double lower;
    double upper;
};

// Entropy brackets around C(n,k). The tight form uses Stirling's bounds and
// needs 1 <= k <= n-1.
inline BinomialBracket binomial_entropy_bounds(std::size_t n, std::size_t k, bool tight) {
    if (k > n) throw DomainError("binomial_entropy_bounds: k > n");
    const double nd = static_cast<double>(n);
    const double kd = static_cast<double>(k);
    const double mass = n == 0 ? 1.0 : std::exp(nd * binary_entropy(kd / nd));
    if (!tight) return {mass / (nd + 1.0), mass};
    if (k == 0 || k == n) throw DomainError("tight binomial bounds need 1 <= k <= n-1");
    const double prod = kd * (nd - kd);
    const double lower = 0.5 * std::sqrt(nd / (2.0 * prod)) * mass;
    const double upper = std::exp(1.0 / (12.0 * nd)) / std::sqrt(2.0 * M_PI) * std::sqrt(nd / prod) * mass;
    return {lower, upper};
}

}  // namespace sulab
