#pragma once

// Generalization bounds for distributions over a finite hypothesis class.
// Hypotheses are represented only through their losses (and, for majority
// votes, their +-1 predictions) on a fixed sample.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sulab/concentration.hpp"
#include "sulab/divergences.hpp"
#include "sulab/errors.hpp"
#include "sulab/random.hpp"

namespace sulab {

// m hypotheses x cols points of +-1 predictions, row-major.
class PredictionTable {
public:
    PredictionTable() = default;

    PredictionTable(std::size_t m, std::size_t cols, std::vector<std::int8_t> preds)
        : m_(m), cols_(cols), p_(std::move(preds)) {
        if (p_.size() != m * cols) throw DimensionError("prediction table: size mismatch");
        for (auto v : p_)
            if (v != 1 && v != -1) throw DomainError("predictions must be +1 or -1");
    }

    std::size_t hypotheses() const noexcept { return m_; }
    std::size_t points() const noexcept { return cols_; }
    int at(std::size_t h, std::size_t i) const { return p_[h * cols_ + i]; }

    std::vector<int> column(std::size_t i) const {
        std::vector<int> c(m_);
        for (std::size_t h = 0; h < m_; ++h) c[h] = at(h, i);
        return c;
    }

    double disagreement(std::size_t h, std::size_t g) const {
        std::size_t d = 0;
        for (std::size_t i = 0; i < cols_; ++i) d += at(h, i) != at(g, i);
        return static_cast<double>(d) / static_cast<double>(cols_);
    }

private:
    std::size_t m_ = 0;
    std::size_t cols_ = 0;
    std::vector<std::int8_t> p_;
};

// Hypotheses x examples matrix of losses in [0,1], with optional predictions
// and optional per-hypothesis validation masks.
class LossTable {
public:
    LossTable(std::size_t m, std::size_t n, std::vector<double> losses)
        : m_(m), n_(n), l_(std::move(losses)) {
        if (m == 0 || n == 0) throw DomainError("loss table must be nonempty");
        if (l_.size() != m * n) throw DimensionError("loss table: size mismatch");
        for (double v : l_)
            if (!(v >= 0.0 && v <= 1.0)) throw DomainError("losses must lie in [0,1]");
    }

    static LossTable from_rows(const std::vector<std::vector<double>>& rows) {
        if (rows.empty()) throw DomainError("loss table must be nonempty");
        std::vector<double> flat;
        for (const auto& r : rows) {
            if (r.size() != rows.front().size()) throw DimensionError("ragged loss table");
            flat.insert(flat.end(), r.begin(), r.end());
        }
        return LossTable(rows.size(), rows.front().size(), std::move(flat));
    }

    // Losses are the zero-one errors of the predictions against the labels.
    static LossTable from_predictions(PredictionTable preds, std::span<const int> labels) {
        if (labels.size() != preds.points()) throw DimensionError("labels/predictions mismatch");
        std::vector<double> l(preds.hypotheses() * preds.points());
        for (std::size_t h = 0; h < preds.hypotheses(); ++h)
            for (std::size_t i = 0; i < preds.points(); ++i)
                l[h * preds.points() + i] = preds.at(h, i) != labels[i] ? 1.0 : 0.0;
        LossTable t(preds.hypotheses(), preds.points(), std::move(l));
        t.preds_ = std::move(preds);
        return t;
    }

    void set_masks(std::vector<std::vector<bool>> masks) {
        if (masks.size() != m_) throw DimensionError("one validation mask per hypothesis");
        for (const auto& mk : masks) {
            if (mk.size() != n_) throw DimensionError("mask length must equal the number of examples");
            if (std::none_of(mk.begin(), mk.end(), [](bool b) { return b; }))
                throw DomainError("validation mask is empty");
        }
        masks_ = std::move(masks);
    }

    std::size_t hypotheses() const noexcept { return m_; }
    std::size_t examples() const noexcept { return n_; }
    double loss(std::size_t h, std::size_t i) const { return l_[h * n_ + i]; }
    std::span<const double> row(std::size_t h) const { return {l_.data() + h * n_, n_}; }
    bool has_masks() const noexcept { return masks_.has_value(); }
    const std::optional<PredictionTable>& predictions() const noexcept { return preds_; }

    bool in_validation(std::size_t h, std::size_t i) const { return !masks_ || (*masks_)[h][i]; }

    std::size_t validation_size(std::size_t h) const {
        if (!masks_) return n_;
        return static_cast<std::size_t>(std::count((*masks_)[h].begin(), (*masks_)[h].end(), true));
    }

    // Masked row mean.
    double empirical_loss(std::size_t h) const {
        double s = 0.0;
        std::size_t c = 0;
        for (std::size_t i = 0; i < n_; ++i)
            if (in_validation(h, i)) {
                s += loss(h, i);
                ++c;
            }
        return s / static_cast<double>(c);
    }

    std::vector<double> empirical_losses() const {
        std::vector<double> out(m_);
        for (std::size_t h = 0; h < m_; ++h) out[h] = empirical_loss(h);
        return out;
    }

    double mean_loss(std::size_t h, std::size_t begin, std::size_t end) const {
        double s = 0.0;
        for (std::size_t i = begin; i < end; ++i) s += loss(h, i);
        return s / static_cast<double>(end - begin);
    }

    std::size_t overlap(std::size_t h, std::size_t g) const {
        std::size_t c = 0;
        for (std::size_t i = 0; i < n_; ++i) c += in_validation(h, i) && in_validation(g, i);
        return c;
    }

    // Mean of l(h) l(g) over the shared validation points; for zero-one
    // losses this is the tandem loss 1[h errs and g errs].
    double tandem_loss(std::size_t h, std::size_t g) const {
        double s = 0.0;
        std::size_t c = 0;
        for (std::size_t i = 0; i < n_; ++i)
            if (in_validation(h, i) && in_validation(g, i)) {
                s += loss(h, i) * loss(g, i);
                ++c;
            }
        if (c == 0) throw DomainError("validation sets of a hypothesis pair do not overlap");
        return s / static_cast<double>(c);
    }

    std::size_t min_pairwise_overlap() const {
        std::size_t best = n_;
        for (std::size_t h = 0; h < m_; ++h)
            for (std::size_t g = h; g < m_; ++g) best = std::min(best, overlap(h, g));
        return best;
    }

private:
    std::size_t m_;
    std::size_t n_;
    std::vector<double> l_;
    std::optional<PredictionTable> preds_;
    std::optional<std::vector<std::vector<bool>>> masks_;
};

inline double expected_loss(const ProbVec& rho, const LossTable& t) {
    if (rho.size() != t.hypotheses()) throw DimensionError("posterior/table size mismatch");
    double s = 0.0;
    for (std::size_t h = 0; h < t.hypotheses(); ++h)
        if (rho[h] > 0.0) s += rho[h] * t.empirical_loss(h);
    return s;
}

// E_{rho^2}[tandem loss].
inline double expected_tandem_loss(const ProbVec& rho, const LossTable& t) {
    if (rho.size() != t.hypotheses()) throw DimensionError("posterior/table size mismatch");
    double s = 0.0;
    for (std::size_t h = 0; h < t.hypotheses(); ++h) {
        if (rho[h] <= 0.0) continue;
        for (std::size_t g = 0; g < t.hypotheses(); ++g)
            if (rho[g] > 0.0) s += rho[h] * rho[g] * t.tandem_loss(h, g);
    }
    return s;
}

// E_{rho^2}[disagreement].
inline double expected_disagreement(const ProbVec& rho, const PredictionTable& p) {
    if (rho.size() != p.hypotheses()) throw DimensionError("posterior/prediction size mismatch");
    double s = 0.0;
    for (std::size_t h = 0; h < p.hypotheses(); ++h) {
        if (rho[h] <= 0.0) continue;
        for (std::size_t g = 0; g < p.hypotheses(); ++g)
            if (g != h && rho[g] > 0.0) s += rho[h] * rho[g] * p.disagreement(h, g);
    }
    return s;
}

enum class OccamFlavor { hoeffding, kl };

// Per-hypothesis bounds with confidence budget pi(h) delta spread over the class.
inline std::vector<BoundResult> occam_bound(const LossTable& table, const ProbVec& pi, double delta,
                                            OccamFlavor flavor) {
    detail::require_delta(delta);
    if (pi.size() != table.hypotheses()) throw DimensionError("prior/table size mismatch");
    std::vector<BoundResult> out;
    out.reserve(table.hypotheses());
    for (std::size_t h = 0; h < table.hypotheses(); ++h) {
        BoundResult r;
        r.delta = delta;
        r.method = flavor == OccamFlavor::hoeffding ? "occam_hoeffding" : "occam_kl";
        const double lhat = table.empirical_loss(h);
        const double n = static_cast<double>(table.validation_size(h));
        r.detail["L_hat"] = lhat;
        if (pi[h] <= 0.0) {
            r.value = 1.0;
        } else {
            const double budget = std::log(1.0 / (pi[h] * delta));
            r.detail["budget"] = budget;
            r.value = flavor == OccamFlavor::hoeffding
                          ? std::min(1.0, lhat + std::sqrt(budget / (2.0 * n)))
                          : kl_inverse(lhat, budget / n, Direction::upper);
        }
        out.push_back(std::move(r));
    }
    return out;
}

// ln pi(h) for a depth-d tree: -(d + 1 + 2^d) ln 2.
inline double log_tree_prior(std::size_t depth) {
    return -(static_cast<double>(depth) + 1.0 + std::ldexp(1.0, static_cast<int>(std::min<std::size_t>(depth, 1000)))) *
           std::log(2.0);
}

// pi(h) = 2^{-(d+1)} 2^{-2^d}; underflows to zero for deep trees, where
// log_tree_prior stays finite.
inline double tree_prior(std::size_t depth) {
    if (depth <= 20) return std::ldexp(1.0, -static_cast<int>(depth + 1) - (1 << depth));
    return std::exp(log_tree_prior(depth));
}

struct PacBayesQuery {
    ProbVec rho;
    ProbVec pi;
    std::size_t n = 0;
    double delta = 0.05;

    void validate() const {
        if (rho.size() != pi.size()) throw DimensionError("rho and pi must have equal length");
        if (n == 0) throw DomainError("n must be >= 1");
        detail::require_delta(delta);
    }

    Nats kl() const { return categorical_kl(rho, pi); }
};

// ln(2 sqrt(n) / delta).
inline double log_sqrt_budget(double n, double delta, double factor = 2.0) {
    return std::log(factor * std::sqrt(n) / delta);
}

inline BoundResult pb_kl_bound(const PacBayesQuery& q, double emp_loss) {
    q.validate();
    detail::require_unit(emp_loss, "empirical loss");
    const double n = static_cast<double>(q.n);
    const double kl = q.kl();
    BoundResult r;
    r.delta = q.delta;
    r.method = "pb_kl";
    r.detail["KL"] = kl;
    const double eps = (kl + log_sqrt_budget(n, q.delta)) / n;
    r.detail["eps"] = eps;
    r.value = std::isinf(kl) ? 1.0 : kl_inverse(emp_loss, eps, Direction::upper);
    return r;
}

// Right-hand side of the PAC-Bayes-lambda upper bound for a given complexity
// term (KL + log budget).
inline double pb_lambda_value(double emp, double complexity, double n, double lambda) {
    return emp / (1.0 - lambda / 2.0) + complexity / (lambda * (1.0 - lambda / 2.0) * n);
}

inline BoundResult pb_lambda_bound(const PacBayesQuery& q, double emp_loss, double lambda) {
    q.validate();
    if (!(lambda > 0.0 && lambda < 2.0)) throw DomainError("lambda must lie in (0,2)");
    const double n = static_cast<double>(q.n);
    const double kl = q.kl();
    BoundResult r;
    r.delta = q.delta;
    r.method = "pb_lambda";
    r.detail["KL"] = kl;
    r.detail["lambda"] = lambda;
    r.value = pb_lambda_value(emp_loss, kl + log_sqrt_budget(n, q.delta), n, lambda);
    return r;
}

// Lower form (1 - gamma/2) E - (KL + ln(2 sqrt(n)/delta)) / (gamma n), clipped at 0.
inline BoundResult pb_lambda_lower_bound(const PacBayesQuery& q, double emp_loss, double gamma) {
    q.validate();
    if (!(gamma > 0.0)) throw DomainError("gamma must be positive");
    const double n = static_cast<double>(q.n);
    const double kl = q.kl();
    BoundResult r;
    r.delta = q.delta;
    r.method = "pb_lambda_lower";
    r.detail["KL"] = kl;
    r.detail["gamma"] = gamma;
    r.value = std::max(0.0, (1.0 - gamma / 2.0) * emp_loss - (kl + log_sqrt_budget(n, q.delta)) / (gamma * n));
    return r;
}

// rho(h) proportional to pi(h) exp(-scale (loss(h) - min loss)).
inline ProbVec gibbs_posterior(const ProbVec& pi, std::span<const double> losses, double scale) {
    if (losses.size() != pi.size()) throw DimensionError("gibbs_posterior: length mismatch");
    if (!(scale >= 0.0)) throw DomainError("scale must be nonnegative");
    double lo = kInf;
    for (std::size_t h = 0; h < pi.size(); ++h)
        if (pi[h] > 0.0) lo = std::min(lo, losses[h]);
    if (std::isinf(lo)) throw DomainError("prior has no mass");
    std::vector<double> w(pi.size(), 0.0);
    for (std::size_t h = 0; h < pi.size(); ++h)
        if (pi[h] > 0.0) w[h] = pi[h] * std::exp(-scale * (losses[h] - lo));
    return ProbVec::from_unnormalized(std::move(w));
}

// Minimizer over lambda in (0,2) of the PAC-Bayes-lambda bound for a fixed
// posterior, given the complexity term KL + log budget.
inline double optimal_lambda_for(double emp_loss, double complexity, double n) {
    return 2.0 / (std::sqrt(2.0 * n * emp_loss / complexity + 1.0) + 1.0);
}

inline double optimal_lambda(double emp_loss, Nats kl_term, std::size_t n, double delta) {
    detail::require_delta(delta);
    if (!(emp_loss >= 0.0) || !(kl_term >= 0.0)) throw DomainError("inputs must be nonnegative");
    const double nd = static_cast<double>(n);
    return optimal_lambda_for(emp_loss, kl_term + log_sqrt_budget(nd, delta), nd);
}

struct AltMinOptions {
    double rel_tolerance = 1e-9;
    std::size_t max_iterations = 1000;
};

struct AltMinResult {
    ProbVec rho;
    double lambda = 1.0;
    double bound = 0.0;
    Nats kl = 0.0;
    std::vector<double> trace;  // trace[0]: rho = pi with its optimal lambda
};

// Alternates the closed-form posterior and lambda updates on
//   E_rho[loss] / (1 - lambda/2) + (KL(rho||pi) + log_term) / (lambda (1 - lambda/2) n_eff).
inline AltMinResult alternating_minimize(const ProbVec& pi, std::span<const double> losses, double n_eff,
                                         double log_term, AltMinOptions opt = {}) {
    if (losses.size() != pi.size()) throw DimensionError("alternating_minimize: length mismatch");
    if (!(n_eff > 0.0)) throw DomainError("effective sample size must be positive");
    AltMinResult res;
    res.rho = pi;
    res.kl = 0.0;
    double emp = pi.expect(losses);
    res.lambda = optimal_lambda_for(emp, log_term, n_eff);
    res.bound = pb_lambda_value(emp, log_term, n_eff, res.lambda);
    res.trace.push_back(res.bound);
    for (std::size_t it = 0; it < opt.max_iterations; ++it) {
        ProbVec rho = gibbs_posterior(pi, losses, res.lambda * n_eff);
        const double kl = categorical_kl(rho, pi);
        emp = rho.expect(losses);
        const double lambda = optimal_lambda_for(emp, kl + log_term, n_eff);
        const double bound = pb_lambda_value(emp, kl + log_term, n_eff, lambda);
        const double prev = res.bound;
        if (bound > prev) break;  // rounding-level stall; keep the better iterate
        res.rho = std::move(rho);
        res.kl = kl;
        res.lambda = lambda;
        res.bound = bound;
        res.trace.push_back(bound);
        if (prev - bound < opt.rel_tolerance * prev) break;
    }
    return res;
}

// r = 0: plain empirical losses on all n examples.
// r > 0: every hypothesis was trained on r points and is validated on the
// other n - r (the table's masks), so n is replaced by n - r.
inline AltMinResult alternating_minimize(const ProbVec& pi, const LossTable& table, double delta,
                                         std::size_t r = 0, AltMinOptions opt = {}) {
    detail::require_delta(delta);
    if (pi.size() != table.hypotheses()) throw DimensionError("prior/table size mismatch");
    std::vector<double> losses(table.hypotheses());
    double n_eff = static_cast<double>(table.examples());
    if (r > 0) {
        if (!table.has_masks()) throw DomainError("r > 0 requires validation masks");
        if (r >= table.examples()) throw DomainError("r must be smaller than n");
        for (std::size_t h = 0; h < table.hypotheses(); ++h)
            if (table.validation_size(h) != table.examples() - r)
                throw DomainError("validation mask size differs from n - r");
        n_eff = static_cast<double>(table.examples() - r);
        losses = table.empirical_losses();
    } else {
        for (std::size_t h = 0; h < table.hypotheses(); ++h)
            losses[h] = table.mean_loss(h, 0, table.examples());
    }
    return alternating_minimize(pi, losses, n_eff, log_sqrt_budget(n_eff, delta), opt);
}

// Weighted majority vote; a zero-sum vote resolves to +1.
inline int mv_predict(const ProbVec& rho, std::span<const int> votes) {
    if (votes.size() != rho.size()) throw DimensionError("mv_predict: length mismatch");
    double s = 0.0;
    for (std::size_t h = 0; h < votes.size(); ++h) s += rho[h] * votes[h];
    return s < 0.0 ? -1 : 1;
}

enum class MvKind { first_order, tandem, disagreement };

struct MvOptions {
    double lambda = 1.0;
    double gamma = 1.0;
    // Predictions on (possibly additional unlabeled) points used for the
    // disagreement term; defaults to the table's own predictions.
    const PredictionTable* unlabeled = nullptr;
};

inline BoundResult mv_bound(MvKind kind, const LossTable& table, const PacBayesQuery& q, MvOptions opt = {}) {
    q.validate();
    if (q.rho.size() != table.hypotheses()) throw DimensionError("posterior/table size mismatch");
    const double kl = q.kl();
    BoundResult r;
    r.delta = q.delta;
    r.detail["KL"] = kl;
    switch (kind) {
        case MvKind::first_order: {
            const double emp = expected_loss(q.rho, table);
            const auto inner = pb_kl_bound(q, emp);
            r.method = "mv_first_order";
            r.detail["E_rho_L_hat"] = emp;
            r.value = 2.0 * inner.value;
            return r;
        }
        case MvKind::tandem: {
            if (!table.predictions()) throw DomainError("tandem bound needs a prediction table");
            if (!(opt.lambda > 0.0 && opt.lambda < 2.0)) throw DomainError("lambda must lie in (0,2)");
            const double n = static_cast<double>(table.has_masks() ? table.min_pairwise_overlap() : q.n);
            const double tnd = expected_tandem_loss(q.rho, table);
            r.method = "mv_tandem";
            r.detail["E_rho2_tandem"] = tnd;
            r.detail["n"] = n;
            r.value = 4.0 * pb_lambda_value(tnd, 2.0 * kl + log_sqrt_budget(n, q.delta), n, opt.lambda);
            return r;
        }
        case MvKind::disagreement: {
            const PredictionTable* preds = opt.unlabeled;
            if (!preds && table.predictions()) preds = &*table.predictions();
            if (!preds) throw DomainError("disagreement bound needs a prediction table");
            if (!(opt.lambda > 0.0 && opt.lambda < 2.0)) throw DomainError("lambda must lie in (0,2)");
            if (!(opt.gamma > 0.0)) throw DomainError("gamma must be positive");
            const double n = static_cast<double>(q.n);
            const double m = static_cast<double>(preds->points());
            const double emp = expected_loss(q.rho, table);
            const double dis = expected_disagreement(q.rho, *preds);
            const double upper = pb_lambda_value(emp, kl + log_sqrt_budget(n, q.delta, 4.0), n, opt.lambda);
            const double lower = std::max(
                0.0, (1.0 - opt.gamma / 2.0) * dis - (2.0 * kl + log_sqrt_budget(m, q.delta, 4.0)) / (opt.gamma * m));
            r.method = "mv_disagreement";
            r.detail["E_rho_L_hat"] = emp;
            r.detail["E_rho2_disagreement"] = dis;
            r.value = 4.0 * upper - 2.0 * lower;
            return r;
        }
    }
    return r;
}

// b_0 + sum_j alpha_j kl^{-1,+}(m_j, eps) for per-segment means m_j.
// Zero-width segments are allowed and contribute nothing.
inline double split_kl_combine(std::span<const double> levels, std::span<const double> means, double eps) {
    if (means.size() + 1 != levels.size()) throw DimensionError("one mean per segment");
    double v = levels.front();
    for (std::size_t j = 1; j < levels.size(); ++j) {
        const double a = levels[j] - levels[j - 1];
        if (a < 0.0) throw DomainError("levels must be nondecreasing");
        if (a == 0.0) continue;
        v += a * kl_inverse(std::clamp(means[j - 1], 0.0, 1.0), eps, Direction::upper);
    }
    return v;
}

inline BoundResult pb_split_kl_bound(const SplitGrid& levels, std::span<const double> level_means,
                                     const PacBayesQuery& q) {
    q.validate();
    const auto K = levels.segments();
    if (level_means.size() != K) throw DimensionError("one mean per segment");
    const double n = static_cast<double>(q.n);
    const double kl = q.kl();
    const double eps = (kl + log_sqrt_budget(n, q.delta, 2.0 * static_cast<double>(K))) / n;
    BoundResult r;
    r.delta = q.delta;
    r.method = "pb_split_kl";
    r.detail["KL"] = kl;
    r.detail["eps"] = eps;
    r.value = std::isinf(kl) ? levels.top() : split_kl_combine(levels.points(), level_means, eps);
    return r;
}

// E + min_lambda (lambda E_V + (KL + ln(k/delta)) / (n lambda)), lambda in (0, 1/2].
inline BoundResult pb_unexpected_bernstein_bound(const PacBayesQuery& q, double emp_loss, double emp_sq_loss,
                                                 const LambdaGrid& grid) {
    q.validate();
    for (double l : grid.values())
        if (!(l > 0.0 && l <= 0.5)) throw DomainError("lambda grid must lie in (0, 1/2]");
    const double n = static_cast<double>(q.n);
    const double kl = q.kl();
    const double complexity = kl + std::log(static_cast<double>(grid.size()) / q.delta);
    double best = kInf;
    double arg = grid.values().front();
    for (double l : grid.values()) {
        const double v = l * emp_sq_loss + complexity / (n * l);
        if (v < best) {
            best = v;
            arg = l;
        }
    }
    BoundResult r;
    r.delta = q.delta;
    r.method = "pb_unexpected_bernstein";
    r.detail["KL"] = kl;
    r.detail["lambda"] = arg;
    r.value = emp_loss + best;
    return r;
}

// ----------------------------------------------------------------------------
// Recursive PAC-Bayes

// Sizes |S_1|, ..., |S_T| with |S_T| = ceil(n/2), |S_{T-1}| = ceil(rest/2), ...
// and whatever remains going to S_1.
inline std::vector<std::size_t> geometric_split(std::size_t n, std::size_t T) {
    if (T == 0) throw DomainError("at least one stage is required");
    if (n < T) throw DomainError("fewer examples than stages");
    std::vector<std::size_t> sizes(T, 0);
    std::size_t rest = n;
    for (std::size_t t = T; t-- > 1;) {
        sizes[t] = (rest + 1) / 2;
        rest -= sizes[t];
        if (rest < t) throw DomainError("geometric split leaves an empty stage");
    }
    sizes[0] = rest;
    return sizes;
}

struct RecursiveOptions {
    std::size_t stages = 2;
    std::vector<double> gammas;  // per stage, index 0 unused; empty -> 1/2
    double delta = 0.05;
    std::uint64_t seed = 0;
    AltMinOptions minimizer = {};
};

struct RecursiveStage {
    std::size_t t = 1;           // 1-based
    std::size_t split_size = 0;  // |S_t|
    std::size_t n_val = 0;       // |S_t u ... u S_T|
    double gamma = 0.0;
    ProbVec prior;      // pi*_{t-1}
    ProbVec posterior;  // pi*_t
    std::array<double, 4> levels{};         // {-gamma, 0, 1-gamma, 1}
    std::vector<double> level_means;        // E_{pi_t}[F_{|j}] on U_val, j = 1..3
    double excess_bound = 0.0;              // E_t (B_1 for t = 1)
    BoundResult bound;                      // B_t = E_t + gamma_t B_{t-1}
};

namespace detail {

inline void require_binary(const LossTable& t) {
    for (std::size_t h = 0; h < t.hypotheses(); ++h)
        for (double v : t.row(h))
            if (v != 0.0 && v != 1.0) throw DomainError("recursive PAC-Bayes needs zero-one losses");
}

// `draw(s, prior, count)` returns the reference hypotheses for stage s
// (0-based, s >= 1): one index per example of U_val_s, in column order.
template <class DrawFn>
std::vector<RecursiveStage> recursive_pb_impl(const LossTable& table, const ProbVec& pi0,
                                              const RecursiveOptions& opt, DrawFn&& draw) {
    detail::require_delta(opt.delta);
    detail::require_binary(table);
    if (pi0.size() != table.hypotheses()) throw DimensionError("prior/table size mismatch");
    const std::size_t T = opt.stages;
    const std::size_t m = table.hypotheses();
    const std::size_t n = table.examples();
    const auto sizes = geometric_split(n, T);

    std::vector<RecursiveStage> out;
    std::size_t offset = 0;
    const double Td = static_cast<double>(T);
    for (std::size_t s = 0; s < T; ++s) {
        RecursiveStage st;
        st.t = s + 1;
        st.split_size = sizes[s];
        st.n_val = n - offset;
        st.gamma = s == 0 ? 0.0 : (opt.gammas.size() > s ? opt.gammas[s] : 0.5);
        st.prior = s == 0 ? pi0 : out.back().posterior;
        const double nval = static_cast<double>(st.n_val);
        const std::size_t train_end = offset + sizes[s];

        if (s == 0) {
            const double log_term = std::log(2.0 * Td * std::sqrt(nval) / opt.delta);
            std::vector<double> train(m);
            for (std::size_t h = 0; h < m; ++h) train[h] = table.mean_loss(h, 0, train_end);
            auto am = alternating_minimize(st.prior, train, nval, log_term, opt.minimizer);
            st.posterior = std::move(am.rho);
            std::vector<double> full(m);
            for (std::size_t h = 0; h < m; ++h) full[h] = table.mean_loss(h, 0, n);
            const double emp = st.posterior.expect(full);
            const double kl = categorical_kl(st.posterior, st.prior);
            st.level_means = {emp};
            st.levels = {0.0, 1.0, 1.0, 1.0};
            st.excess_bound = kl_inverse(emp, (kl + log_term) / nval, Direction::upper);
            st.bound.value = st.excess_bound;
            st.bound.detail["KL"] = kl;
        } else {
            const double g = st.gamma;
            if (!(g >= 0.0 && g <= 1.0)) throw DomainError("gamma_t must lie in [0,1]");
            const std::vector<std::size_t> draws = draw(s, st.prior, st.n_val);
            if (draws.size() != st.n_val) throw DimensionError("reference draws must cover U_val_t");
            for (auto d : draws)
                if (d >= m) throw DomainError("reference draw out of range");
            st.levels = {-g, 0.0, 1.0 - g, 1.0};
            const std::array<double, 3> thresholds = {0.0, 1.0 - g, 1.0};
            // per hypothesis: segment frequencies over U_val, and the excess loss on S_t
            std::vector<std::array<double, 3>> seg(m, {0.0, 0.0, 0.0});
            std::vector<double> train_excess(m, 0.0);
            for (std::size_t h = 0; h < m; ++h) {
                for (std::size_t i = offset; i < n; ++i) {
                    const double f = table.loss(h, i) - g * table.loss(draws[i - offset], i);
                    for (std::size_t j = 0; j < 3; ++j) seg[h][j] += f >= thresholds[j] - 1e-12 ? 1.0 : 0.0;
                    if (i < train_end) train_excess[h] += f;
                }
                for (auto& v : seg[h]) v /= nval;
                train_excess[h] = (train_excess[h] / static_cast<double>(sizes[s]) + g) / (1.0 + g);
            }
            const double log_term = std::log(6.0 * Td * std::sqrt(nval) / opt.delta);
            auto am = alternating_minimize(st.prior, train_excess, nval, log_term, opt.minimizer);
            st.posterior = std::move(am.rho);
            const double kl = categorical_kl(st.posterior, st.prior);
            st.level_means.assign(3, 0.0);
            for (std::size_t h = 0; h < m; ++h)
                for (std::size_t j = 0; j < 3; ++j) st.level_means[j] += st.posterior[h] * seg[h][j];
            st.excess_bound = split_kl_combine(st.levels, st.level_means, (kl + log_term) / nval);
            st.bound.value = st.excess_bound + g * out.back().bound.value;
            st.bound.detail["KL"] = kl;
        }
        st.bound.delta = opt.delta;
        st.bound.method = "recursive_pb";
        st.bound.detail["E_t"] = st.excess_bound;
        st.bound.detail["gamma"] = st.gamma;
        st.bound.detail["n_val"] = nval;
        out.push_back(std::move(st));
        offset = train_end;
    }
    return out;
}

}  // namespace detail

// `reference_draws[s]` (0-based stage index, s >= 1) holds one hypothesis
// index per example of U_val_s, in column order; entry 0 is ignored.
inline std::vector<RecursiveStage> recursive_pb(const LossTable& table, const ProbVec& pi0,
                                                const RecursiveOptions& opt,
                                                std::span<const std::vector<std::size_t>> reference_draws) {
    if (reference_draws.size() < opt.stages) throw DimensionError("one reference-draw vector per stage");
    return detail::recursive_pb_impl(table, pi0, opt,
                                     [&](std::size_t s, const ProbVec&, std::size_t) { return reference_draws[s]; });
}

// Reference hypotheses h' ~ pi*_{t-1} are drawn one per validation example
// from a stage-scoped stream derived from opt.seed.
inline std::vector<RecursiveStage> recursive_pb(const LossTable& table, const ProbVec& pi0,
                                                const RecursiveOptions& opt) {
    return detail::recursive_pb_impl(table, pi0, opt, [&](std::size_t s, const ProbVec& prior, std::size_t count) {
        Rng rng(split_seed(opt.seed, s));
        std::vector<std::size_t> d(count);
        for (auto& v : d) v = rng.categorical(prior.weights());
        return d;
    });
}

}  // namespace sulab
