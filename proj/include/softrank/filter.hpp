#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "softrank/core.hpp"

namespace softrank {

struct LassoConfig {
    // Sweeps stop when the largest coefficient change falls below this and
    // the KKT conditions hold within 10x of it.
    double tolerance = 1e-10;
    int max_iters = 100000;
};

/// Coefficients of  (1/2m)|y - X b|^2 + alpha |b|_1  for a generic design.
struct LassoSolution {
    Vector coef;
    double alpha = 0.0;
    int iterations = 0;
    bool converged = false;
    // Largest stationarity violation, measured on the scaled columns.
    double max_kkt_violation = 0.0;
};

inline double soft_threshold(double value, double threshold) {
    if (value > threshold) return value - threshold;
    if (value < -threshold) return value + threshold;
    return 0.0;
}

/// Cyclic coordinate descent. Columns are scaled internally to unit mean
/// square (no centering, as the model has no intercept); the returned
/// coefficients are in the caller's column scale.
inline LassoSolution lasso_coordinate_descent(const Matrix& design, const Vector& y, double alpha,
                                              const LassoConfig& cfg = {}) {
    if (design.rows() != y.size())
        throw DimensionError("lasso: design has " + std::to_string(design.rows()) + " rows, response has " +
                             std::to_string(y.size()));
    if (!(alpha > 0.0)) throw InvalidInput("lasso: alpha must be positive");
    if (!design.allFinite() || !y.allFinite()) throw InvalidInput("lasso: non-finite input");
    const Index m = design.rows();
    const Index p = design.cols();
    const double md = static_cast<double>(m);

    Vector scale = (design.colwise().squaredNorm().transpose() / md).cwiseSqrt();
    Matrix z = design;
    for (Index j = 0; j < p; ++j)
        if (scale(j) > 0.0) z.col(j) /= scale(j);

    Vector b = Vector::Zero(p);
    Vector residual = y;
    LassoSolution out;
    out.alpha = alpha;

    const auto kkt_violation = [&]() {
        double worst = 0.0;
        for (Index j = 0; j < p; ++j) {
            if (scale(j) == 0.0) continue;
            const double grad = z.col(j).dot(residual) / md;
            const double v = b(j) == 0.0 ? std::max(0.0, std::abs(grad) - alpha)
                                         : std::abs(grad - alpha * (b(j) > 0.0 ? 1.0 : -1.0));
            worst = std::max(worst, v);
        }
        return worst;
    };

    for (int it = 0; it < cfg.max_iters; ++it) {
        double max_change = 0.0;
        for (Index j = 0; j < p; ++j) {
            if (scale(j) == 0.0) continue;
            const double old = b(j);
            const double rho = z.col(j).dot(residual) / md + old;
            const double updated = soft_threshold(rho, alpha);
            if (updated != old) {
                residual -= (updated - old) * z.col(j);
                b(j) = updated;
                max_change = std::max(max_change, std::abs(updated - old));
            }
        }
        out.iterations = it + 1;
        if (max_change < cfg.tolerance && kkt_violation() <= 10.0 * cfg.tolerance) {
            out.converged = true;
            break;
        }
    }
    out.max_kkt_violation = kkt_violation();
    out.coef = Vector::Zero(p);
    for (Index j = 0; j < p; ++j)
        if (scale(j) > 0.0) out.coef(j) = b(j) / scale(j);
    return out;
}

/// LASSO fit on the augmented design [X, X~].
struct LassoFit {
    Vector beta;
    Vector beta_knock;
    double alpha = 0.0;
    int iterations = 0;
    bool converged = false;
    double max_kkt_violation = 0.0;
};

inline LassoFit lasso(const Matrix& augmented, const Vector& y, double alpha, const LassoConfig& cfg = {}) {
    if (augmented.cols() % 2 != 0)
        throw DimensionError("lasso: augmented design must have an even number of columns");
    const Index d = augmented.cols() / 2;
    const LassoSolution sol = lasso_coordinate_descent(augmented, y, alpha, cfg);
    LassoFit fit;
    fit.beta = sol.coef.head(d);
    fit.beta_knock = sol.coef.tail(d);
    fit.alpha = alpha;
    fit.iterations = sol.iterations;
    fit.converged = sol.converged;
    fit.max_kkt_violation = sol.max_kkt_violation;
    return fit;
}

/// W_j = |beta_j| - |beta~_j|
inline Vector knockoff_stats(const LassoFit& fit) {
    if (fit.beta.size() != fit.beta_knock.size()) throw DimensionError("knockoff_stats: coefficient length mismatch");
    return fit.beta.cwiseAbs() - fit.beta_knock.cwiseAbs();
}

/// Smallest t in {|w_j| : w_j != 0} with
/// (1 + #{w_j <= -t}) / max(1, #{w_j >= t}) <= q; +infinity if none.
inline double knockoff_threshold(const Vector& w, double q) {
    if (!(q > 0.0 && q < 1.0)) throw InvalidInput("threshold: q must lie in (0, 1)");
    if (!w.allFinite()) throw InvalidInput("threshold: non-finite statistic");
    std::vector<double> candidates;
    for (Index j = 0; j < w.size(); ++j)
        if (w(j) != 0.0) candidates.push_back(std::abs(w(j)));
    std::sort(candidates.begin(), candidates.end());
    for (double t : candidates) {
        Index negatives = 0;
        Index positives = 0;
        for (Index j = 0; j < w.size(); ++j) {
            if (w(j) <= -t) ++negatives;
            if (w(j) >= t) ++positives;
        }
        const double ratio = (1.0 + static_cast<double>(negatives)) / static_cast<double>(std::max<Index>(1, positives));
        if (ratio <= q) return t;
    }
    return std::numeric_limits<double>::infinity();
}

inline std::vector<Index> select_features(const Vector& w, double tau) {
    std::vector<Index> out;
    for (Index j = 0; j < w.size(); ++j)
        if (w(j) >= tau) out.push_back(j);
    return out;
}

struct SelectionOutcome {
    Vector w;
    double tau = std::numeric_limits<double>::infinity();
    std::vector<Index> selected;
    double fdp = 0.0;
    double power = 0.0;
    double q = 0.1;
};

struct SelectionQuality {
    double fdp = 0.0;
    double power = 0.0;
};

/// False discovery proportion and power against a known support (0-based).
inline SelectionQuality evaluate_selection(const std::vector<Index>& selected, const std::vector<Index>& true_support,
                                           Index d) {
    std::vector<char> is_true(d, 0);
    for (Index j : true_support) {
        if (j < 0 || j >= d) throw InvalidInput("evaluate: support index " + std::to_string(j) + " out of range");
        is_true[j] = 1;
    }
    Index false_hits = 0;
    Index true_hits = 0;
    for (Index j : selected) {
        if (j < 0 || j >= d) throw InvalidInput("evaluate: selected index " + std::to_string(j) + " out of range");
        if (is_true[j])
            ++true_hits;
        else
            ++false_hits;
    }
    SelectionQuality out;
    out.fdp = static_cast<double>(false_hits) / static_cast<double>(std::max<std::size_t>(1, selected.size()));
    out.power = static_cast<double>(true_hits) / static_cast<double>(std::max<std::size_t>(1, true_support.size()));
    return out;
}

/// LASSO statistics, threshold at level q, and (when a support is known)
/// the realized FDP and power.
inline SelectionOutcome knockoff_filter(const Matrix& x, const Matrix& x_knock, const Vector& y, double alpha, double q,
                                        const std::vector<Index>& true_support = {}, const LassoConfig& cfg = {}) {
    if (x.rows() != x_knock.rows() || x.cols() != x_knock.cols())
        throw DimensionError("knockoff_filter: x " + shape_string(x) + " vs knockoffs " + shape_string(x_knock));
    Matrix augmented(x.rows(), 2 * x.cols());
    augmented << x, x_knock;
    SelectionOutcome out;
    out.q = q;
    out.w = knockoff_stats(lasso(augmented, y, alpha, cfg));
    out.tau = knockoff_threshold(out.w, q);
    out.selected = select_features(out.w, out.tau);
    const SelectionQuality quality = evaluate_selection(out.selected, true_support, x.cols());
    out.fdp = quality.fdp;
    out.power = quality.power;
    return out;
}

}  // namespace softrank
