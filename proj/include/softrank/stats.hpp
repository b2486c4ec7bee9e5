#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "softrank/core.hpp"
#include "softrank/ot.hpp"

namespace softrank {

/// Equal-weight mixture of Gaussian kernels,
/// k(x, y) = (1/K) sum_s exp(-|x - y|^2 / (2 sigma_s^2)).
struct GaussianMixtureKernel {
    std::vector<double> bandwidths{1, 2, 4, 8, 16, 32, 64, 128};

    void validate() const {
        if (bandwidths.empty()) throw InvalidInput("kernel: need at least one bandwidth");
        for (double s : bandwidths)
            if (!(s > 0.0) || !std::isfinite(s)) throw InvalidInput("kernel: bandwidths must be positive");
    }

    double operator()(double squared_distance) const {
        double acc = 0.0;
        for (double s : bandwidths) acc += std::exp(-squared_distance / (2.0 * s * s));
        return acc / static_cast<double>(bandwidths.size());
    }

    // dk/d(|x-y|^2) times 2, i.e. the factor w with grad_x k = w (x - y).
    double gradient_factor(double squared_distance) const {
        double acc = 0.0;
        for (double s : bandwidths) acc -= std::exp(-squared_distance / (2.0 * s * s)) / (s * s);
        return acc / static_cast<double>(bandwidths.size());
    }
};

namespace detail {

// Total order on matrices (shape, then column-major values) used to
// evaluate symmetric statistics on a canonical argument order.
inline bool matrix_less(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows()) return a.rows() < b.rows();
    if (a.cols() != b.cols()) return a.cols() < b.cols();
    return std::lexicographical_compare(a.data(), a.data() + a.size(), b.data(), b.data() + b.size());
}

inline void require_same_width(const Matrix& a, const Matrix& b, const char* what) {
    if (a.cols() != b.cols())
        throw DimensionError(std::string(what) + ": dimension mismatch " + shape_string(a) + " vs " + shape_string(b));
}

// sum_i sum_j |a_i - b_j|
inline double distance_sum(const Matrix& a, const Matrix& b) {
    const Matrix at = a.transpose();
    const Matrix bt = b.transpose();
    double total = 0.0;
    for (Index i = 0; i < at.cols(); ++i) {
        double row = 0.0;
        for (Index j = 0; j < bt.cols(); ++j) row += (at.col(i) - bt.col(j)).norm();
        total += row;
    }
    return total;
}

// sum over i, j (i != j when `skip_diagonal`) of k(a_i, b_j)
inline double kernel_sum(const Matrix& a, const Matrix& b, const GaussianMixtureKernel& kernel, bool skip_diagonal) {
    const Matrix at = a.transpose();
    const Matrix bt = b.transpose();
    double total = 0.0;
    for (Index i = 0; i < at.cols(); ++i) {
        double row = 0.0;
        for (Index j = 0; j < bt.cols(); ++j) {
            if (skip_diagonal && i == j) continue;
            row += kernel((at.col(i) - bt.col(j)).squaredNorm());
        }
        total += row;
    }
    return total;
}

}  // namespace detail

/// V-statistic energy distance
/// 2/(mn) sum|a_i - b_j| - 1/m^2 sum|a_i - a_j| - 1/n^2 sum|b_i - b_j|.
inline double energy_distance(const Matrix& a, const Matrix& b) {
    detail::require_same_width(a, b, "energy_distance");
    if (a.rows() < 1 || b.rows() < 1) throw InsufficientSamples("energy_distance: empty sample");
    if (detail::matrix_less(b, a)) return energy_distance(b, a);
    const double m = static_cast<double>(a.rows());
    const double n = static_cast<double>(b.rows());
    const double cross = detail::distance_sum(a, b);
    const double within_a = detail::distance_sum(a, a);
    const double within_b = detail::distance_sum(b, b);
    return 2.0 * (cross / (m * n)) - (within_a / (m * m) + within_b / (n * n));
}

/// Unbiased (U-statistic) squared MMD.
inline double mmd_unbiased(const Matrix& a, const Matrix& b, const GaussianMixtureKernel& kernel) {
    detail::require_same_width(a, b, "mmd_unbiased");
    if (a.rows() < 2 || b.rows() < 2) throw InsufficientSamples("mmd_unbiased: need at least two rows per sample");
    kernel.validate();
    if (detail::matrix_less(b, a)) return mmd_unbiased(b, a, kernel);
    const double m = static_cast<double>(a.rows());
    const double n = static_cast<double>(b.rows());
    const double aa = detail::kernel_sum(a, a, kernel, true) / (m * (m - 1.0));
    const double bb = detail::kernel_sum(b, b, kernel, true) / (n * (n - 1.0));
    const double ab = detail::kernel_sum(a, b, kernel, false) / (m * n);
    return (aa + bb) - 2.0 * ab;
}

/// Soft rank energy: energy distance between the joint soft ranks.
inline double sre(const Matrix& x, const Matrix& y, double epsilon, const RankConfig& cfg = {}) {
    if (detail::matrix_less(y, x)) return sre(y, x, epsilon, cfg);
    const JointSoftRanks r = joint_soft_ranks(x, y, epsilon, cfg);
    return energy_distance(r.x.ranks, r.y.ranks);
}

/// Rank energy from hard ranks (exact assignment).
inline double re(const Matrix& x, const Matrix& y, const RankConfig& cfg = {}) { return sre(x, y, 0.0, cfg); }

/// Soft rank MMD: unbiased MMD between the joint soft ranks. epsilon = 0
/// uses hard ranks.
inline double srmmd(const Matrix& x, const Matrix& y, double epsilon, const GaussianMixtureKernel& kernel,
                    const RankConfig& cfg = {}) {
    if (x.rows() < 2 || y.rows() < 2) throw InsufficientSamples("srmmd: need at least two rows per sample");
    if (detail::matrix_less(y, x)) return srmmd(y, x, epsilon, kernel, cfg);
    const JointSoftRanks r = joint_soft_ranks(x, y, epsilon, cfg);
    return mmd_unbiased(r.x.ranks, r.y.ranks, kernel);
}

/// Subset B of the d feature columns exchanged with their knockoff columns.
/// Indices are 0-based.
struct SwapPattern {
    std::vector<Index> indices;
    Index d = 0;

    void validate() const {
        std::vector<Index> sorted = indices;
        std::sort(sorted.begin(), sorted.end());
        if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
            throw InvalidInput("swap pattern: duplicate index");
        for (Index j : sorted)
            if (j < 0 || j >= d) throw InvalidInput("swap pattern: index " + std::to_string(j) + " out of range");
    }
};

/// Each column joins B independently with probability 1/2.
inline SwapPattern draw_swap_pattern(Index d, Rng& rng) {
    SwapPattern pattern;
    pattern.d = d;
    for (Index j = 0; j < d; ++j)
        if (rng() >> 63) pattern.indices.push_back(j);
    return pattern;
}

/// Exchanges column j with column d + j for every j in the pattern.
inline Matrix apply_swap(const Matrix& joint, const SwapPattern& pattern) {
    if (joint.cols() % 2 != 0) throw DimensionError("apply_swap: joint width " + std::to_string(joint.cols()) + " is odd");
    const Index d = joint.cols() / 2;
    if (pattern.d != d)
        throw DimensionError("apply_swap: pattern built for d = " + std::to_string(pattern.d) + ", joint has d = " +
                             std::to_string(d));
    pattern.validate();
    Matrix out = joint;
    for (Index j : pattern.indices) {
        out.col(j) = joint.col(d + j);
        out.col(d + j) = joint.col(j);
    }
    return out;
}

inline Matrix hstack(const Matrix& left, const Matrix& right) {
    Matrix out(left.rows(), left.cols() + right.cols());
    out << left, right;
    return out;
}

namespace detail {

inline void require_swap_loss_shapes(const Matrix& x, const Matrix& x_knock) {
    if (x.rows() != x_knock.rows() || x.cols() != x_knock.cols())
        throw DimensionError("swap loss: x " + shape_string(x) + " vs knockoffs " + shape_string(x_knock));
    if (x.rows() < 4 || x.rows() % 2 != 0)
        throw DimensionError("swap loss: need an even number of rows >= 4, got " + std::to_string(x.rows()));
}

}  // namespace detail

/// Swap loss with the split fixed to first half / second half:
/// sRMMD[(X', X~'), (X~'', X'')] + sRMMD[(X', X~'), (X'', X~'')_swap(B)].
inline double swap_loss_srmmd(const Matrix& x, const Matrix& x_knock, double epsilon,
                              const GaussianMixtureKernel& kernel, const RankConfig& cfg, const SwapPattern& pattern) {
    detail::require_swap_loss_shapes(x, x_knock);
    const Index h = x.rows() / 2;
    const Matrix first = hstack(x.topRows(h), x_knock.topRows(h));
    const Matrix flipped = hstack(x_knock.bottomRows(h), x.bottomRows(h));
    const Matrix swapped = apply_swap(hstack(x.bottomRows(h), x_knock.bottomRows(h)), pattern);
    return srmmd(first, flipped, epsilon, kernel, cfg) + srmmd(first, swapped, epsilon, kernel, cfg);
}

inline double swap_loss_srmmd(const Matrix& x, const Matrix& x_knock, double epsilon,
                              const GaussianMixtureKernel& kernel, const RankConfig& cfg, Rng& rng) {
    detail::require_swap_loss_shapes(x, x_knock);
    return swap_loss_srmmd(x, x_knock, epsilon, kernel, cfg, draw_swap_pattern(x.cols(), rng));
}

/// sRMMD through an unrolled Sinkhorn of fixed length, with gradients with
/// respect to both samples.
struct SrmmdWithGradient {
    double value = 0.0;
    Matrix grad_x;
    Matrix grad_y;
};

namespace detail {

// For pairs (a_i, b_j) with weights w_ij: grad_a_i += sum_j w_ij (a_i - b_j),
// grad_b_j -= sum_i w_ij (a_i - b_j).
inline void accumulate_pair_gradient(const Matrix& a, const Matrix& b, const Matrix& w, Matrix& grad_a,
                                     Matrix& grad_b) {
    grad_a.noalias() += w.rowwise().sum().asDiagonal() * a;
    grad_a.noalias() -= w * b;
    grad_b.noalias() -= w.transpose() * a;
    grad_b.noalias() += w.colwise().sum().transpose().asDiagonal() * b;
}

inline Matrix squared_distances(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows(), b.rows());
    const Matrix at = a.transpose();
    const Matrix bt = b.transpose();
    for (Index j = 0; j < bt.cols(); ++j)
        for (Index i = 0; i < at.cols(); ++i) out(i, j) = (at.col(i) - bt.col(j)).squaredNorm();
    return out;
}

}  // namespace detail

inline SrmmdWithGradient srmmd_unrolled(const Matrix& x, const Matrix& y, double epsilon,
                                        const GaussianMixtureKernel& kernel, int iterations,
                                        std::int64_t halton_start = 1, bool with_gradient = true) {
    detail::require_same_width(x, y, "srmmd_unrolled");
    if (x.rows() < 2 || y.rows() < 2) throw InsufficientSamples("srmmd: need at least two rows per sample");
    kernel.validate();
    const Index m = x.rows();
    const Index n = y.rows();
    Matrix pooled(m + n, x.cols());
    pooled.topRows(m) = x;
    pooled.bottomRows(n) = y;
    require_finite(pooled, "srmmd input");
    const UnrolledSoftRanks ranks(pooled, halton(m + n, x.cols(), halton_start), epsilon, iterations);
    const Matrix rx = ranks.ranks().topRows(m);
    const Matrix ry = ranks.ranks().bottomRows(n);

    const double md = static_cast<double>(m);
    const double nd = static_cast<double>(n);
    const Matrix dxx = detail::squared_distances(rx, rx);
    const Matrix dyy = detail::squared_distances(ry, ry);
    const Matrix dxy = detail::squared_distances(rx, ry);
    const auto k = [&](double v) { return kernel(v); };
    const auto kp = [&](double v) { return kernel.gradient_factor(v); };

    const double aa = (dxx.unaryExpr(k).sum() - md) / (md * (md - 1.0));
    const double bb = (dyy.unaryExpr(k).sum() - nd) / (nd * (nd - 1.0));
    const double ab = dxy.unaryExpr(k).sum() / (md * nd);

    SrmmdWithGradient out;
    out.value = (aa + bb) - 2.0 * ab;
    require_finite(out.value, "srmmd kernel sums");
    if (!with_gradient) return out;

    Matrix grad_rx = Matrix::Zero(m, x.cols());
    Matrix grad_ry = Matrix::Zero(n, x.cols());
    // Diagonal pairs contribute a zero difference vector.
    const Matrix wxx = dxx.unaryExpr(kp) / (md * (md - 1.0));
    const Matrix wyy = dyy.unaryExpr(kp) / (nd * (nd - 1.0));
    const Matrix wxy = dxy.unaryExpr(kp) * (-2.0 / (md * nd));
    detail::accumulate_pair_gradient(rx, rx, wxx, grad_rx, grad_rx);
    detail::accumulate_pair_gradient(ry, ry, wyy, grad_ry, grad_ry);
    detail::accumulate_pair_gradient(rx, ry, wxy, grad_rx, grad_ry);

    Matrix rank_grad(m + n, x.cols());
    rank_grad.topRows(m) = grad_rx;
    rank_grad.bottomRows(n) = grad_ry;
    const Matrix grad = ranks.backward(rank_grad);
    out.grad_x = grad.topRows(m);
    out.grad_y = grad.bottomRows(n);
    return out;
}

}  // namespace softrank
