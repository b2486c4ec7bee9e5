#pragma once

// Slow, direct reference computations used to check the library. None of
// these call into the code under test.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

struct Assignment {
    std::vector<Index> perm;
    double cost = std::numeric_limits<double>::infinity();
    // Cost of the best permutation other than `perm`.
    double runner_up = std::numeric_limits<double>::infinity();
};

inline double permutation_cost(const Matrix& c, const std::vector<Index>& perm) {
    double total = 0.0;
    for (Index i = 0; i < c.rows(); ++i) total += c(i, perm[i]);
    return total;
}

/// Enumerates all m! permutations.
inline Assignment brute_force_assignment(const Matrix& c) {
    std::vector<Index> perm(c.rows());
    std::iota(perm.begin(), perm.end(), Index{0});
    Assignment best;
    do {
        const double cost = permutation_cost(c, perm);
        if (cost < best.cost) {
            best.runner_up = best.cost;
            best.cost = cost;
            best.perm = perm;
        } else if (cost < best.runner_up) {
            best.runner_up = cost;
        }
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

/// Digit expansion of index in the given base, read back after the point.
inline double radical_inverse(unsigned long long index, int base) {
    std::vector<int> digits;
    while (index > 0) {
        digits.push_back(static_cast<int>(index % base));
        index /= base;
    }
    double value = 0.0;
    double scale = 1.0;
    for (int digit : digits) {
        scale /= base;
        value += digit * scale;
    }
    return value;
}

/// 1-d hard ranks: the k-th smallest pooled value gets the k-th smallest grid
/// value.
inline Vector sort_ranks(const Vector& pooled, const Vector& grid) {
    std::vector<std::pair<double, Index>> order;
    for (Index i = 0; i < pooled.size(); ++i) order.emplace_back(pooled(i), i);
    std::sort(order.begin(), order.end());
    std::vector<double> sorted_grid(grid.data(), grid.data() + grid.size());
    std::sort(sorted_grid.begin(), sorted_grid.end());
    Vector ranks(pooled.size());
    for (std::size_t k = 0; k < order.size(); ++k) ranks(order[k].second) = sorted_grid[k];
    return ranks;
}

/// Plain-domain Sinkhorn scaling u = a / (K v), v = b / (K^T u), iterated to
/// a fixed point.
inline Matrix scaling_fixed_point(const Matrix& c, double eps, int iterations = 100000) {
    const Index m = c.rows();
    const Matrix k = (-c / eps).array().exp().matrix();
    Vector u = Vector::Ones(m);
    Vector v = Vector::Ones(m);
    const double marginal = 1.0 / static_cast<double>(m);
    for (int it = 0; it < iterations; ++it) {
        for (Index i = 0; i < m; ++i) u(i) = marginal / k.row(i).dot(v);
        for (Index j = 0; j < m; ++j) v(j) = marginal / k.col(j).dot(u);
    }
    return u.asDiagonal() * k * v.asDiagonal();
}

inline double euclid(const Matrix& a, Index i, const Matrix& b, Index j) {
    double s = 0.0;
    for (Index c = 0; c < a.cols(); ++c) s += (a(i, c) - b(j, c)) * (a(i, c) - b(j, c));
    return std::sqrt(s);
}

/// V-statistic energy distance by explicit triple loops.
inline double energy(const Matrix& a, const Matrix& b) {
    const double m = a.rows(), n = b.rows();
    double ab = 0, aa = 0, bb = 0;
    for (Index i = 0; i < a.rows(); ++i)
        for (Index j = 0; j < b.rows(); ++j) ab += euclid(a, i, b, j);
    for (Index i = 0; i < a.rows(); ++i)
        for (Index j = 0; j < a.rows(); ++j) aa += euclid(a, i, a, j);
    for (Index i = 0; i < b.rows(); ++i)
        for (Index j = 0; j < b.rows(); ++j) bb += euclid(b, i, b, j);
    return 2.0 * ab / (m * n) - aa / (m * m) - bb / (n * n);
}

inline double mixture_kernel(double dist, const std::vector<double>& sigmas) {
    double acc = 0.0;
    for (double s : sigmas) acc += std::exp(-dist * dist / (2.0 * s * s));
    return acc / sigmas.size();
}

/// Unbiased MMD^2 by explicit double loops over off-diagonal pairs.
inline double mmd(const Matrix& a, const Matrix& b, const std::vector<double>& sigmas) {
    const double m = a.rows(), n = b.rows();
    double aa = 0, bb = 0, ab = 0;
    for (Index i = 0; i < a.rows(); ++i)
        for (Index j = 0; j < a.rows(); ++j)
            if (i != j) aa += mixture_kernel(euclid(a, i, a, j), sigmas);
    for (Index i = 0; i < b.rows(); ++i)
        for (Index j = 0; j < b.rows(); ++j)
            if (i != j) bb += mixture_kernel(euclid(b, i, b, j), sigmas);
    for (Index i = 0; i < a.rows(); ++i)
        for (Index j = 0; j < b.rows(); ++j) ab += mixture_kernel(euclid(a, i, b, j), sigmas);
    return aa / (m * (m - 1)) + bb / (n * (n - 1)) - 2.0 * ab / (m * n);
}

/// Knockoff threshold by trying every candidate in input order and keeping
/// the smallest admissible one.
inline double threshold_scan(const Vector& w, double q) {
    double best = std::numeric_limits<double>::infinity();
    for (Index k = 0; k < w.size(); ++k) {
        if (w(k) == 0.0) continue;
        const double t = std::abs(w(k));
        double neg = 0, pos = 0;
        for (Index j = 0; j < w.size(); ++j) {
            neg += (w(j) <= -t);
            pos += (w(j) >= t);
        }
        if ((1.0 + neg) / std::max(1.0, pos) <= q) best = std::min(best, t);
    }
    return best;
}

/// Least-squares coefficients from the normal equations.
inline Vector normal_equations(const Matrix& x, const Vector& y) {
    return (x.transpose() * x).ldlt().solve(x.transpose() * y);
}

/// Central difference of f at x along coordinate direction e with step h.
inline double central_difference(const std::function<double(double)>& f, double x0, double h) {
    return (f(x0 + h) - f(x0 - h)) / (2.0 * h);
}

/// Relative error with a floor on the denominator.
inline double relative_error(double approx, double exact, double floor = 1e-6) {
    return std::abs(approx - exact) / std::max({std::abs(approx), std::abs(exact), floor});
}

}  // namespace oracle
