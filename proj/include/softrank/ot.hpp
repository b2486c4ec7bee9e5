#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "softrank/core.hpp"
#include "softrank/halton.hpp"

namespace softrank {

/// Squared Euclidean costs between source rows and target rows.
struct CostMatrix {
    Matrix values;

    Index rows() const { return values.rows(); }
    Index cols() const { return values.cols(); }
};

/// Coupling between two uniform empirical measures.
struct TransportPlan {
    Matrix weights;
    double epsilon = 0.0;
    // Largest absolute deviation of a row or column sum from its target mass.
    double marginal_violation = 0.0;
    int iterations = 0;
    bool converged = true;
    // Column assigned to each row; filled only for exact (epsilon = 0) plans.
    std::vector<Index> assignment;
};

/// Per-sample ranks in the convex hull of a Halton grid.
struct SoftRankAssignment {
    Matrix ranks;
    double epsilon = 0.0;
    // Sizes of the two pooled samples this assignment was split from.
    Index m = 0;
    Index n = 0;
};

inline CostMatrix cost_matrix(const Matrix& source, const Matrix& target) {
    if (source.rows() != target.rows() || source.cols() != target.cols())
        throw DimensionError("cost_matrix: source " + shape_string(source) + " vs target " + shape_string(target));
    const Index m = source.rows();
    CostMatrix cost;
    cost.values.resize(m, m);
    for (Index j = 0; j < m; ++j)
        for (Index i = 0; i < m; ++i) cost.values(i, j) = (source.row(i) - target.row(j)).squaredNorm();
    return cost;
}

inline double plan_cost(const CostMatrix& cost, const TransportPlan& plan) {
    return (cost.values.array() * plan.weights.array()).sum();
}

/// Sum of C(i, perm[i]) taken in row order.
inline double assignment_cost(const Matrix& cost, const std::vector<Index>& perm) {
    double total = 0.0;
    for (Index i = 0; i < static_cast<Index>(perm.size()); ++i) total += cost(i, perm[i]);
    return total;
}

/// H(P) = -sum P log P with 0 log 0 = 0.
inline double plan_entropy(const TransportPlan& plan) {
    double h = 0.0;
    for (Index j = 0; j < plan.weights.cols(); ++j)
        for (Index i = 0; i < plan.weights.rows(); ++i) {
            const double p = plan.weights(i, j);
            if (p > 0.0) h -= p * std::log(p);
        }
    return h;
}

inline double max_marginal_violation(const Matrix& weights) {
    const double a = 1.0 / static_cast<double>(weights.rows());
    const double b = 1.0 / static_cast<double>(weights.cols());
    const double rows = (weights.rowwise().sum().array() - a).abs().maxCoeff();
    const double cols = (weights.colwise().sum().array() - b).abs().maxCoeff();
    return std::max(rows, cols);
}

/// Minimum-cost perfect matching by shortest augmenting paths with row/column
/// potentials, O(m^3). Ties resolve toward the lowest column index.
inline std::vector<Index> solve_assignment(const Matrix& cost) {
    if (cost.rows() != cost.cols())
        throw DimensionError("exact_assignment: cost must be square, got " + shape_string(cost));
    const Index n = cost.rows();
    if (n == 0) return {};
    if (!cost.allFinite()) throw InvalidInput("exact_assignment: non-finite cost entry");

    // Row-major copy: the inner loop scans one row.
    std::vector<double> a(static_cast<std::size_t>(n * n));
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < n; ++j) a[static_cast<std::size_t>(i * n + j)] = cost(i, j);

    constexpr double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
    std::vector<Index> p(n + 1, 0), way(n + 1, 0);
    std::vector<char> used(n + 1);

    for (Index i = 1; i <= n; ++i) {
        p[0] = i;
        Index j0 = 0;
        std::fill(minv.begin(), minv.end(), inf);
        std::fill(used.begin(), used.end(), 0);
        do {
            used[j0] = 1;
            const Index i0 = p[j0];
            const double* row = &a[static_cast<std::size_t>((i0 - 1) * n)];
            double delta = inf;
            Index j1 = 0;
            for (Index j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = row[j - 1] - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (Index j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const Index j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }

    std::vector<Index> row_to_col(n);
    for (Index j = 1; j <= n; ++j) row_to_col[p[j] - 1] = j - 1;
    return row_to_col;
}

inline TransportPlan plan_from_assignment(const std::vector<Index>& perm) {
    const Index m = static_cast<Index>(perm.size());
    TransportPlan plan;
    plan.weights = Matrix::Zero(m, m);
    for (Index i = 0; i < m; ++i) plan.weights(i, perm[i]) = 1.0 / static_cast<double>(m);
    plan.assignment = perm;
    plan.epsilon = 0.0;
    plan.marginal_violation = m > 0 ? max_marginal_violation(plan.weights) : 0.0;
    return plan;
}

/// Optimal scaled permutation for the unregularized discrete problem.
inline TransportPlan exact_assignment(const CostMatrix& cost) {
    if (cost.rows() < 1) throw DimensionError("exact_assignment: empty cost matrix");
    return plan_from_assignment(solve_assignment(cost.values));
}

struct SinkhornConfig {
    int max_iters = 10000;
    // Stop once the largest row/column marginal violation drops below this.
    double tolerance = 1e-6;
    // Run exactly max_iters iterations with no stopping test.
    bool fixed_iterations = false;
    // Warm-start through a geometric schedule of larger regularizers.
    bool epsilon_scaling = true;
};

namespace detail {

// f_i = eps log a - eps LSE_j((g_j - C_ij) / eps)
inline void sinkhorn_row_update(const Matrix& cost, const Vector& g, double eps, double log_a, Vector& f,
                                Matrix& scratch) {
    scratch.noalias() = (-cost).rowwise() + g.transpose();
    const Vector row_max = scratch.rowwise().maxCoeff();
    const Vector sums = ((scratch.colwise() - row_max) / eps).array().exp().rowwise().sum();
    f = (eps * log_a - (row_max.array() + eps * sums.array().log())).matrix();
}

// g_j = eps log b - eps LSE_i((f_i - C_ij) / eps)
inline void sinkhorn_col_update(const Matrix& cost, const Vector& f, double eps, double log_b, Vector& g,
                                Matrix& scratch) {
    scratch.noalias() = (-cost).colwise() + f;
    const Eigen::RowVectorXd col_max = scratch.colwise().maxCoeff();
    const Eigen::RowVectorXd sums = ((scratch.rowwise() - col_max) / eps).array().exp().colwise().sum();
    g = (eps * log_b - (col_max.array() + eps * sums.array().log())).transpose().matrix();
}

inline Matrix plan_from_potentials(const Matrix& cost, const Vector& f, const Vector& g, double eps) {
    return ((((-cost).colwise() + f).rowwise() + g.transpose()) / eps).array().exp().matrix();
}

}  // namespace detail

/// Entropic plan by log-domain Sinkhorn scaling with uniform marginals.
/// Hitting max_iters is reported through `converged` and `marginal_violation`.
inline TransportPlan sinkhorn(const CostMatrix& cost, double epsilon, const SinkhornConfig& cfg = {}) {
    if (!(epsilon > 0.0)) throw InvalidInput("sinkhorn: epsilon must be positive");
    if (!cfg.fixed_iterations && !(cfg.tolerance > 0.0)) throw InvalidInput("sinkhorn: tolerance must be positive");
    if (cost.rows() < 1 || cost.cols() < 1) throw DimensionError("sinkhorn: empty cost matrix");
    if (!cost.values.allFinite()) throw InvalidInput("sinkhorn: non-finite cost entry");

    const Matrix& c = cost.values;
    const double a = 1.0 / static_cast<double>(c.rows());
    const double b = 1.0 / static_cast<double>(c.cols());
    const double log_a = std::log(a);
    const double log_b = std::log(b);

    Vector f = Vector::Zero(c.rows());
    Vector g = Vector::Zero(c.cols());
    Vector f_next(c.rows());
    Matrix scratch(c.rows(), c.cols());

    TransportPlan plan;
    plan.epsilon = epsilon;

    if (cfg.fixed_iterations) {
        for (int it = 0; it < cfg.max_iters; ++it) {
            detail::sinkhorn_row_update(c, g, epsilon, log_a, f, scratch);
            detail::sinkhorn_col_update(c, f, epsilon, log_b, g, scratch);
        }
        plan.iterations = cfg.max_iters;
        plan.weights = detail::plan_from_potentials(c, f, g, epsilon);
        plan.marginal_violation = max_marginal_violation(plan.weights);
        plan.converged = true;
        return plan;
    }

    int total_iters = 0;
    if (cfg.epsilon_scaling) {
        // Coarse stages only need to land near the right potentials.
        const double spread = c.maxCoeff() - c.minCoeff();
        double stage_eps = std::max(epsilon, spread);
        while (stage_eps > 2.0 * epsilon) {
            for (int it = 0; it < 200 && total_iters < cfg.max_iters; ++it, ++total_iters) {
                detail::sinkhorn_row_update(c, g, stage_eps, log_a, f, scratch);
                detail::sinkhorn_col_update(c, f, stage_eps, log_b, g, scratch);
                detail::sinkhorn_row_update(c, g, stage_eps, log_a, f_next, scratch);
                const double violation = (a * (((f - f_next) / stage_eps).array().exp() - 1.0)).abs().maxCoeff();
                if (violation < 1e-3 * a) break;
            }
            stage_eps *= 0.5;
        }
    }

    // Columns are exact after each g update, so the row violation is the
    // marginal violation; it falls out of the next row update for free.
    double violation = std::numeric_limits<double>::infinity();
    detail::sinkhorn_row_update(c, g, epsilon, log_a, f, scratch);
    int it = 0;
    while (total_iters < cfg.max_iters) {
        detail::sinkhorn_col_update(c, f, epsilon, log_b, g, scratch);
        ++it;
        ++total_iters;
        detail::sinkhorn_row_update(c, g, epsilon, log_a, f_next, scratch);
        violation = (a * (((f - f_next) / epsilon).array().exp() - 1.0)).abs().maxCoeff();
        if (violation < cfg.tolerance) break;
        f.swap(f_next);
    }
    plan.iterations = total_iters;
    plan.weights = detail::plan_from_potentials(c, f, g, epsilon);
    plan.marginal_violation = max_marginal_violation(plan.weights);
    plan.converged = plan.marginal_violation < cfg.tolerance;
    return plan;
}

/// Row-normalized barycentric projection of a plan onto the grid points.
inline SoftRankAssignment soft_rank(const TransportPlan& plan, const HaltonGrid& target) {
    if (plan.weights.cols() != target.size())
        throw DimensionError("soft_rank: plan has " + std::to_string(plan.weights.cols()) + " columns, grid has " +
                             std::to_string(target.size()) + " points");
    const Vector row_sums = plan.weights.rowwise().sum();
    if ((row_sums.array() <= 0.0).any() || !row_sums.allFinite())
        throw DegeneratePlan("soft_rank: plan has a row with zero or non-finite mass");
    SoftRankAssignment out;
    out.epsilon = plan.epsilon;
    out.ranks = row_sums.cwiseInverse().asDiagonal() * (plan.weights * target.points);
    out.m = plan.weights.rows();
    out.n = 0;
    return out;
}

/// Soft ranks through a fixed number of log-domain Sinkhorn iterations, kept
/// so that gradients can flow back to the pooled sample points.
///
/// Forward: g^0 = 0, then for k = 1..L
///   f^k = eps log a - eps LSE_j((g^{k-1}_j - C_ij) / eps)
///   g^k = eps log b - eps LSE_i((f^k_i - C_ij) / eps)
/// and rank_i = sum_j softmax_j((g^L_j - C_ij) / eps) h_j.
/// The row potential cancels in the row normalization, so ranks depend on
/// the last column potential only.
class UnrolledSoftRanks {
public:
    UnrolledSoftRanks(const Matrix& pooled, const HaltonGrid& grid, double epsilon, int iterations)
        : points_(pooled), grid_(grid.points), eps_(epsilon), iterations_(iterations) {
        if (!(epsilon > 0.0)) throw InvalidInput("unrolled soft ranks: epsilon must be positive");
        if (iterations < 1) throw InvalidInput("unrolled soft ranks: need at least one iteration");
        cost_ = cost_matrix(pooled, grid.points).values;
        require_finite(cost_, "rank cost matrix");
        const Index n = cost_.rows();
        log_a_ = -std::log(static_cast<double>(n));
        f_.assign(iterations, Vector());
        g_.assign(iterations + 1, Vector());
        g_[0] = Vector::Zero(n);
        Matrix scratch(n, n);
        for (int k = 0; k < iterations; ++k) {
            detail::sinkhorn_row_update(cost_, g_[k], eps_, log_a_, f_[k], scratch);
            detail::sinkhorn_col_update(cost_, f_[k], eps_, log_a_, g_[k + 1], scratch);
        }
        require_finite(g_[iterations], "Sinkhorn iterations");
        softmax_ = (((-cost_).rowwise() + g_[iterations].transpose()) / eps_);
        const Vector row_max = softmax_.rowwise().maxCoeff();
        softmax_ = (softmax_.colwise() - row_max).array().exp().matrix();
        softmax_ = softmax_.array().colwise() / softmax_.rowwise().sum().array();
        ranks_ = softmax_ * grid_;
        require_finite(ranks_, "barycentric projection");
    }

    const Matrix& ranks() const { return ranks_; }

    /// Gradient with respect to the pooled points given d(loss)/d(ranks).
    Matrix backward(const Matrix& rank_grad) const {
        const Index n = cost_.rows();
        // Barycentric projection.
        const Matrix q = rank_grad * grid_.transpose();
        const Vector t = (rank_grad.array() * ranks_.array()).rowwise().sum();
        const Matrix u_bar = softmax_.array() * (q.colwise() - t).array();
        Matrix cost_bar = -u_bar / eps_;
        Vector g_bar = u_bar.colwise().sum().transpose() / eps_;

        Matrix weight(n, n);
        for (int k = iterations_ - 1; k >= 0; --k) {
            // g^{k+1} from f^k: column-stochastic weights P(f^k, g^{k+1}) / b.
            weight = (((((-cost_).colwise() + f_[k]).rowwise() + g_[k + 1].transpose()) / eps_).array().exp() /
                      std::exp(log_a_))
                         .matrix();
            cost_bar.noalias() += weight * g_bar.asDiagonal();
            const Vector f_bar = -(weight * g_bar);
            // f^k from g^k: row-stochastic weights P(f^k, g^k) / a.
            weight = (((((-cost_).colwise() + f_[k]).rowwise() + g_[k].transpose()) / eps_).array().exp() /
                      std::exp(log_a_))
                         .matrix();
            cost_bar.noalias() += f_bar.asDiagonal() * weight;
            g_bar = -(weight.transpose() * f_bar);
        }
        // C_ij = |z_i - h_j|^2
        Matrix grad = 2.0 * (cost_bar.rowwise().sum().asDiagonal() * points_ - cost_bar * grid_);
        require_finite(grad, "Sinkhorn backward pass");
        return grad;
    }

private:
    Matrix points_;
    Matrix grid_;
    double eps_;
    int iterations_;
    double log_a_ = 0.0;
    Matrix cost_;
    std::vector<Vector> f_;
    std::vector<Vector> g_;
    Matrix softmax_;
    Matrix ranks_;
};

struct RankConfig {
    SinkhornConfig sinkhorn;
    std::int64_t halton_start = 1;
    // For d = 1 and epsilon = 0, solve the assignment by sorting.
    bool sort_one_dimensional = true;
};

struct JointSoftRanks {
    SoftRankAssignment x;
    SoftRankAssignment y;
    double marginal_violation = 0.0;
    bool converged = true;
    int iterations = 0;
};

namespace detail {

// Monotone matching of pooled scalars to sorted grid values; optimal for
// squared cost in one dimension. Ties keep input order.
inline std::vector<Index> sorted_assignment(const Matrix& source, const Matrix& target) {
    const Index n = source.rows();
    std::vector<Index> src(n), tgt(n);
    std::iota(src.begin(), src.end(), Index{0});
    std::iota(tgt.begin(), tgt.end(), Index{0});
    std::stable_sort(src.begin(), src.end(), [&](Index l, Index r) { return source(l, 0) < source(r, 0); });
    std::stable_sort(tgt.begin(), tgt.end(), [&](Index l, Index r) { return target(l, 0) < target(r, 0); });
    std::vector<Index> perm(n);
    for (Index k = 0; k < n; ++k) perm[src[k]] = tgt[k];
    return perm;
}

}  // namespace detail

/// Ranks of x and y under one map from their pooled sample onto m + n Halton
/// points. epsilon = 0 gives hard ranks from the exact assignment.
inline JointSoftRanks joint_soft_ranks(const Matrix& x, const Matrix& y, double epsilon, const RankConfig& cfg = {}) {
    if (x.cols() != y.cols())
        throw DimensionError("joint_soft_ranks: x " + shape_string(x) + " vs y " + shape_string(y));
    if (x.rows() < 1 || y.rows() < 1) throw InsufficientSamples("joint_soft_ranks: empty sample");
    if (epsilon < 0.0) throw InvalidInput("joint_soft_ranks: epsilon must be nonnegative");
    const Index m = x.rows();
    const Index n = y.rows();
    const Index d = x.cols();

    Matrix pooled(m + n, d);
    pooled.topRows(m) = x;
    pooled.bottomRows(n) = y;
    if (!pooled.allFinite()) throw InvalidInput("joint_soft_ranks: non-finite sample value");
    const HaltonGrid grid = halton(m + n, d, cfg.halton_start);

    Matrix ranks;
    JointSoftRanks out;
    if (epsilon == 0.0) {
        std::vector<Index> perm;
        if (d == 1 && cfg.sort_one_dimensional)
            perm = detail::sorted_assignment(pooled, grid.points);
        else
            perm = solve_assignment(cost_matrix(pooled, grid.points).values);
        ranks.resize(m + n, d);
        for (Index i = 0; i < m + n; ++i) ranks.row(i) = grid.points.row(perm[i]);
    } else {
        if (cfg.sinkhorn.fixed_iterations) {
            ranks = UnrolledSoftRanks(pooled, grid, epsilon, cfg.sinkhorn.max_iters).ranks();
            out.iterations = cfg.sinkhorn.max_iters;
        } else {
            const TransportPlan plan = sinkhorn(cost_matrix(pooled, grid.points), epsilon, cfg.sinkhorn);
            ranks = soft_rank(plan, grid).ranks;
            out.marginal_violation = plan.marginal_violation;
            out.converged = plan.converged;
            out.iterations = plan.iterations;
        }
    }
    out.x.ranks = ranks.topRows(m);
    out.y.ranks = ranks.bottomRows(n);
    for (auto* block : {&out.x, &out.y}) {
        block->epsilon = epsilon;
        block->m = m;
        block->n = n;
    }
    return out;
}

}  // namespace softrank
