#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "softrank/core.hpp"

namespace softrank {

struct SdpSolution {
    Vector s;
    // Smallest eigenvalue of 2 Sigma - diag(s).
    double feasibility_gap = 0.0;
    // sum_j |1 - s_j|
    double objective = 0.0;
    // Objective after the uniform start and after each sweep.
    std::vector<double> objective_trace;
};

struct SdpConfig {
    int sweeps = 3;
    // Bisection stops once the bracket on s_j is narrower than this.
    double tolerance = 1e-10;
    double ridge = 1e-4;
    double ridge_threshold = 1e-6;
};

inline double min_eigenvalue(const Matrix& symmetric) {
    Eigen::SelfAdjointEigenSolver<Matrix> solver(symmetric, Eigen::EigenvaluesOnly);
    return solver.eigenvalues().minCoeff();
}

namespace detail {

inline bool positive_semidefinite(const Matrix& m) {
    // LDLT tolerates the singular boundary that LLT rejects.
    Eigen::LDLT<Matrix> ldlt(m);
    if (ldlt.info() != Eigen::Success) return false;
    return (ldlt.vectorD().array() >= -1e-12).all();
}

inline double sdp_objective(const Vector& s) { return (1.0 - s.array()).abs().sum(); }

}  // namespace detail

/// Approximate solution of  min sum_j |1 - s_j|  s.t.  2 Sigma >= diag(s),
/// s in [0, 1]^d.
///
/// Starts from the feasible uniform point s_j = min(2 lambda_min, 1), then
/// sweeps the coordinates, raising each s_j by bisection as far as the
/// constraint allows. The objective never increases.
inline SdpSolution solve_sdp(const Matrix& sigma, const SdpConfig& cfg = {}) {
    if (sigma.rows() != sigma.cols() || sigma.rows() < 1)
        throw InvalidInput("solve_sdp: covariance must be square, got " + shape_string(sigma));
    if (!sigma.allFinite()) throw InvalidInput("solve_sdp: non-finite covariance entry");
    const double scale = std::max(1.0, sigma.cwiseAbs().maxCoeff());
    if ((sigma - sigma.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
        throw InvalidInput("solve_sdp: covariance is not symmetric");

    const Index d = sigma.rows();
    Matrix cov = 0.5 * (sigma + sigma.transpose());
    double lambda_min = min_eigenvalue(cov);
    if (lambda_min < cfg.ridge_threshold) {
        cov.diagonal().array() += cfg.ridge;
        lambda_min = min_eigenvalue(cov);
    }
    if (!(lambda_min > 0.0)) throw SingularCovariance("solve_sdp: covariance is not positive definite after ridge");

    const Matrix twice = 2.0 * cov;
    // Shade the uniform start a hair inside the boundary.
    Vector s = Vector::Constant(d, std::min(2.0 * lambda_min * (1.0 - 1e-12), 1.0));
    SdpSolution out;
    out.objective_trace.push_back(detail::sdp_objective(s));

    Matrix work = twice;
    for (int sweep = 0; sweep < cfg.sweeps; ++sweep) {
        for (Index j = 0; j < d; ++j) {
            if (s(j) >= 1.0) continue;
            const auto feasible = [&](double value) {
                work = twice;
                work.diagonal() -= s;
                work(j, j) += s(j) - value;
                return detail::positive_semidefinite(work);
            };
            if (feasible(1.0)) {
                s(j) = 1.0;
                continue;
            }
            double lo = s(j);
            double hi = 1.0;
            while (hi - lo > cfg.tolerance) {
                const double mid = 0.5 * (lo + hi);
                if (feasible(mid))
                    lo = mid;
                else
                    hi = mid;
            }
            s(j) = lo;
        }
        out.objective_trace.push_back(detail::sdp_objective(s));
    }

    Matrix constraint = twice;
    constraint.diagonal() -= s;
    out.s = s;
    out.feasibility_gap = min_eigenvalue(constraint);
    out.objective = detail::sdp_objective(s);
    return out;
}

/// Pearson correlation between column j of a and column j of b, per column.
/// A constant column has correlation 0 with anything.
inline Vector columnwise_correlation(const Matrix& a, const Matrix& b) {
    const Matrix ac = a.rowwise() - a.colwise().mean();
    const Matrix bc = b.rowwise() - b.colwise().mean();
    const Vector cross = (ac.array() * bc.array()).colwise().sum().transpose();
    const Vector va = ac.colwise().squaredNorm().transpose();
    const Vector vb = bc.colwise().squaredNorm().transpose();
    Vector out(a.cols());
    for (Index j = 0; j < a.cols(); ++j)
        out(j) = (va(j) > 0.0 && vb(j) > 0.0) ? cross(j) / std::sqrt(va(j) * vb(j)) : 0.0;
    return out;
}

/// |corr(X_j, X~_j) - (1 - s_j)|^2 summed over columns.
inline double d_corr(const Matrix& x, const Matrix& x_knock, const SdpSolution& s_star) {
    if (x.rows() != x_knock.rows() || x.cols() != x_knock.cols())
        throw DimensionError("d_corr: x " + shape_string(x) + " vs knockoffs " + shape_string(x_knock));
    if (s_star.s.size() != x.cols())
        throw DimensionError("d_corr: s* has length " + std::to_string(s_star.s.size()) + ", data has " +
                             std::to_string(x.cols()) + " columns");
    const Vector corr = columnwise_correlation(x, x_knock);
    return (corr.array() - 1.0 + s_star.s.array()).square().sum();
}

/// Gradient of d_corr with respect to the knockoff matrix.
inline Matrix d_corr_gradient(const Matrix& x, const Matrix& x_knock, const SdpSolution& s_star) {
    const double n = static_cast<double>(x.rows());
    const Matrix xc = x.rowwise() - x.colwise().mean();
    const Matrix kc = x_knock.rowwise() - x_knock.colwise().mean();
    Matrix grad(x.rows(), x.cols());
    for (Index j = 0; j < x.cols(); ++j) {
        const double sx = std::sqrt(xc.col(j).squaredNorm() / n);
        const double sk = std::sqrt(kc.col(j).squaredNorm() / n);
        if (!(sx > 0.0 && sk > 0.0)) {
            grad.col(j).setZero();
            continue;
        }
        const double cov = xc.col(j).dot(kc.col(j)) / n;
        const double r = cov / (sx * sk);
        const double outer = 2.0 * (r - 1.0 + s_star.s(j));
        // dr/dk_i = (xc_i / (sx sk) - r kc_i / sk^2) / n
        grad.col(j) = outer * (xc.col(j) / (sx * sk) - r * kc.col(j) / (sk * sk)) / n;
    }
    return grad;
}

/// Sample correlation matrix with 1/n normalization.
inline Matrix correlation_matrix(const Matrix& x) {
    const double n = static_cast<double>(x.rows());
    const Matrix xc = x.rowwise() - x.colwise().mean();
    const Matrix cov = xc.transpose() * xc / n;
    const Vector inv_sd = cov.diagonal().cwiseSqrt().cwiseInverse();
    return inv_sd.asDiagonal() * cov * inv_sd.asDiagonal();
}

}  // namespace softrank
