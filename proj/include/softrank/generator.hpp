#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "softrank/core.hpp"
#include "softrank/decorrelation.hpp"
#include "softrank/stats.hpp"

namespace softrank {

/// Weights and biases of the knockoff network. Layer l maps a batch H (rows
/// are samples) to act(H W_l + b_l); the last layer is linear.
struct GeneratorParams {
    std::vector<Index> layer_dims;
    std::vector<Matrix> weights;  // weights[l] is layer_dims[l] x layer_dims[l + 1]
    std::vector<Vector> biases;   // biases[l] has layer_dims[l + 1] entries
    std::string activation = "leaky_relu";
    double leaky_slope = 0.01;

    std::size_t num_layers() const { return weights.size(); }
    Index input_dim() const { return layer_dims.front(); }
    Index output_dim() const { return layer_dims.back(); }

    Index num_parameters() const {
        Index total = 0;
        for (std::size_t l = 0; l < weights.size(); ++l) total += weights[l].size() + biases[l].size();
        return total;
    }

    void validate() const {
        if (layer_dims.size() < 2 || weights.size() + 1 != layer_dims.size() || biases.size() != weights.size())
            throw InvalidInput("generator: layer list does not match architecture");
        for (std::size_t l = 0; l < weights.size(); ++l) {
            if (weights[l].rows() != layer_dims[l] || weights[l].cols() != layer_dims[l + 1] ||
                biases[l].size() != layer_dims[l + 1])
                throw InvalidInput("generator: layer " + std::to_string(l) + " has the wrong shape");
            if (!weights[l].allFinite() || !biases[l].allFinite())
                throw InvalidInput("generator: non-finite parameter in layer " + std::to_string(l));
        }
        if (activation != "leaky_relu") throw InvalidInput("generator: unknown activation '" + activation + "'");
    }
};

/// Same layout as GeneratorParams.
struct GeneratorGradient {
    std::vector<Matrix> weights;
    std::vector<Vector> biases;
};

struct Architecture {
    int hidden_layers = 6;
    // Hidden width is this multiple of the feature dimension.
    int hidden_multiplier = 5;
    double leaky_slope = 0.01;
};

/// [2d, w x hidden_layers, d] with w = hidden_multiplier * d.
inline std::vector<Index> layer_dims_for(Index d, const Architecture& arch) {
    std::vector<Index> dims{2 * d};
    for (int l = 0; l < arch.hidden_layers; ++l) dims.push_back(arch.hidden_multiplier * d);
    dims.push_back(d);
    return dims;
}

/// He-style uniform weights, bound sqrt(6 / ((1 + slope^2) fan_in)); biases
/// uniform in +-1/sqrt(fan_in).
inline GeneratorParams init_generator(Index d, const Architecture& arch, Rng& rng) {
    if (d < 1) throw InvalidInput("generator: d must be >= 1");
    GeneratorParams p;
    p.layer_dims = layer_dims_for(d, arch);
    p.leaky_slope = arch.leaky_slope;
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    for (std::size_t l = 0; l + 1 < p.layer_dims.size(); ++l) {
        const Index fan_in = p.layer_dims[l];
        const Index fan_out = p.layer_dims[l + 1];
        const double w_bound = std::sqrt(6.0 / ((1.0 + arch.leaky_slope * arch.leaky_slope) * fan_in));
        const double b_bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        Matrix w(fan_in, fan_out);
        for (Index i = 0; i < fan_in; ++i)
            for (Index j = 0; j < fan_out; ++j) w(i, j) = w_bound * unit(rng);
        Vector b(fan_out);
        for (Index j = 0; j < fan_out; ++j) b(j) = b_bound * unit(rng);
        p.weights.push_back(std::move(w));
        p.biases.push_back(std::move(b));
    }
    return p;
}

inline GeneratorGradient zero_gradient(const GeneratorParams& p) {
    GeneratorGradient g;
    for (std::size_t l = 0; l < p.num_layers(); ++l) {
        g.weights.push_back(Matrix::Zero(p.weights[l].rows(), p.weights[l].cols()));
        g.biases.push_back(Vector::Zero(p.biases[l].size()));
    }
    return g;
}

/// Intermediate values kept for the backward pass.
struct ForwardTrace {
    std::vector<Matrix> inputs;       // input to each layer
    std::vector<Matrix> preactivations;
    Matrix output;
};

inline ForwardTrace forward_trace(const GeneratorParams& params, const Matrix& x, const Matrix& noise) {
    if (x.rows() != noise.rows() || x.cols() != noise.cols())
        throw DimensionError("forward: x " + shape_string(x) + " vs noise " + shape_string(noise));
    if (2 * x.cols() != params.input_dim() || x.cols() != params.output_dim())
        throw DimensionError("forward: network expects d = " + std::to_string(params.output_dim()) + ", got " +
                             std::to_string(x.cols()));
    ForwardTrace t;
    Matrix h(x.rows(), 2 * x.cols());
    h << x, noise;
    const double slope = params.leaky_slope;
    for (std::size_t l = 0; l < params.num_layers(); ++l) {
        t.inputs.push_back(h);
        Matrix z = h * params.weights[l];
        z.rowwise() += params.biases[l].transpose();
        if (l + 1 < params.num_layers()) {
            h = z.unaryExpr([slope](double v) { return v > 0.0 ? v : slope * v; });
        } else {
            h = z;
        }
        t.preactivations.push_back(std::move(z));
    }
    t.output = std::move(h);
    require_finite(t.output, "generator forward pass");
    return t;
}

/// Knockoffs f(X, V) for a batch of rows and matching standard normal noise.
inline Matrix forward(const GeneratorParams& params, const Matrix& x, const Matrix& noise) {
    return forward_trace(params, x, noise).output;
}

inline GeneratorGradient backward(const GeneratorParams& params, const ForwardTrace& trace, const Matrix& output_grad) {
    GeneratorGradient g = zero_gradient(params);
    Matrix delta = output_grad;
    const double slope = params.leaky_slope;
    for (std::size_t k = params.num_layers(); k-- > 0;) {
        if (k + 1 < params.num_layers())
            delta = delta.cwiseProduct(trace.preactivations[k].unaryExpr([slope](double v) { return v > 0.0 ? 1.0 : slope; }));
        g.weights[k].noalias() = trace.inputs[k].transpose() * delta;
        g.biases[k] = delta.colwise().sum().transpose();
        if (k > 0) delta = delta * params.weights[k].transpose();
    }
    return g;
}

struct TrainingConfig {
    double epsilon = 10.0;
    double lambda_so = 1.0;
    double delta_corr = 1.0;
    double learning_rate = 0.01;
    Index batch_size = 500;
    int epochs = 100;
    std::uint64_t seed = 0;
    GaussianMixtureKernel kernel;
    // Fixed Sinkhorn unroll length inside the loss.
    int sinkhorn_iterations = 100;
    std::int64_t halton_start = 1;
    // 0 gives plain SGD.
    double momentum = 0.0;
    Architecture architecture;

    void validate() const {
        if (!(epsilon > 0.0)) throw InvalidInput("training: epsilon must be positive");
        if (batch_size < 4 || batch_size % 2 != 0) throw InvalidInput("training: batch size must be even and >= 4");
        if (!(learning_rate > 0.0)) throw InvalidInput("training: learning rate must be positive");
        if (epochs < 0) throw InvalidInput("training: epochs must be nonnegative");
        if (sinkhorn_iterations < 1) throw InvalidInput("training: need at least one Sinkhorn iteration");
        if (momentum < 0.0 || momentum >= 1.0) throw InvalidInput("training: momentum must lie in [0, 1)");
        if (lambda_so < 0.0 || delta_corr < 0.0) throw InvalidInput("training: loss weights must be nonnegative");
        kernel.validate();
    }
};

struct LossBreakdown {
    double total = 0.0;
    double srmmd_term = 0.0;
    double second_order_term = 0.0;
    double decorrelation_term = 0.0;
};

inline LossBreakdown make_breakdown(double srmmd_term, double second_order_term, double decorrelation_term,
                                    const TrainingConfig& cfg) {
    LossBreakdown b;
    b.srmmd_term = srmmd_term;
    b.second_order_term = second_order_term;
    b.decorrelation_term = decorrelation_term;
    b.total = srmmd_term + cfg.lambda_so * second_order_term + cfg.delta_corr * decorrelation_term;
    return b;
}

namespace detail {

struct Moments {
    Matrix xc;
    Matrix kc;
    Matrix gxx;
    Matrix gkk;
    Matrix gxk;
    Vector mean_gap;
};

inline Moments moments(const Matrix& x, const Matrix& x_knock) {
    const double n = static_cast<double>(x.rows());
    Moments mo;
    mo.xc = x.rowwise() - x.colwise().mean();
    mo.kc = x_knock.rowwise() - x_knock.colwise().mean();
    mo.gxx = mo.xc.transpose() * mo.xc / n;
    mo.gkk = mo.kc.transpose() * mo.kc / n;
    mo.gxk = mo.xc.transpose() * mo.kc / n;
    mo.mean_gap = (x_knock.colwise().mean() - x.colwise().mean()).transpose();
    return mo;
}

inline Matrix off_diagonal(Matrix m) {
    m.diagonal().setZero();
    return m;
}

}  // namespace detail

/// Moment matching between originals and knockoffs, each term divided by d:
/// |mean(X~) - mean(X)|^2 + |G_X~X~ - G_XX|_F^2 + |offdiag(G_XX~ - G_XX)|_F^2,
/// with centered 1/n covariances.
inline double second_order_loss(const Matrix& x, const Matrix& x_knock) {
    if (x.rows() != x_knock.rows() || x.cols() != x_knock.cols())
        throw DimensionError("second_order_loss: x " + shape_string(x) + " vs knockoffs " + shape_string(x_knock));
    const double d = static_cast<double>(x.cols());
    const detail::Moments mo = detail::moments(x, x_knock);
    const double mean_term = mo.mean_gap.squaredNorm();
    const double gram_term = (mo.gkk - mo.gxx).squaredNorm();
    const double cross_term = detail::off_diagonal(mo.gxk - mo.gxx).squaredNorm();
    return mean_term / d + gram_term / d + cross_term / d;
}

inline Matrix second_order_gradient(const Matrix& x, const Matrix& x_knock) {
    const double n = static_cast<double>(x.rows());
    const double d = static_cast<double>(x.cols());
    const detail::Moments mo = detail::moments(x, x_knock);
    Matrix grad = (4.0 / (n * d)) * (mo.kc * (mo.gkk - mo.gxx));
    grad.noalias() += (2.0 / (n * d)) * (mo.xc * detail::off_diagonal(mo.gxk - mo.gxx));
    grad.rowwise() += (2.0 / (n * d)) * mo.mean_gap.transpose();
    return grad;
}

struct LossAndGradient {
    LossBreakdown loss;
    GeneratorGradient gradient;
};

/// One evaluation of the composite loss on a batch. Draws the noise, then
/// the swap subset, from `rng`; the batch rows split into first and second
/// half. The gradient, when requested, is exact for the unrolled graph.
inline LossAndGradient loss_and_gradient(const GeneratorParams& params, const Matrix& batch, const TrainingConfig& cfg,
                                         const SdpSolution& s_star, Rng& rng, bool with_gradient) {
    if (batch.rows() < 4 || batch.rows() % 2 != 0)
        throw DimensionError("loss: batch needs an even number of rows >= 4, got " + std::to_string(batch.rows()));
    const Index n = batch.rows();
    const Index d = batch.cols();
    const Index h = n / 2;

    const Matrix noise = standard_normal(n, d, rng);
    const ForwardTrace trace = forward_trace(params, batch, noise);
    const Matrix& knock = trace.output;
    const SwapPattern pattern = draw_swap_pattern(d, rng);

    const Matrix first = hstack(batch.topRows(h), knock.topRows(h));
    const Matrix flipped = hstack(knock.bottomRows(h), batch.bottomRows(h));
    const Matrix swapped = apply_swap(hstack(batch.bottomRows(h), knock.bottomRows(h)), pattern);
    const SrmmdWithGradient t1 =
        srmmd_unrolled(first, flipped, cfg.epsilon, cfg.kernel, cfg.sinkhorn_iterations, cfg.halton_start, with_gradient);
    const SrmmdWithGradient t2 =
        srmmd_unrolled(first, swapped, cfg.epsilon, cfg.kernel, cfg.sinkhorn_iterations, cfg.halton_start, with_gradient);

    const double so = second_order_loss(batch, knock);
    const double dc = d_corr(batch, knock, s_star);
    require_finite(so, "second-order loss");
    require_finite(dc, "decorrelation penalty");

    LossAndGradient out;
    out.loss = make_breakdown(t1.value + t2.value, so, dc, cfg);
    require_finite(out.loss.total, "total loss");
    if (!with_gradient) return out;

    Matrix knock_grad = Matrix::Zero(n, d);
    knock_grad.topRows(h) += (t1.grad_x + t2.grad_x).rightCols(d);
    knock_grad.bottomRows(h) += t1.grad_y.leftCols(d);
    // Column swaps are self-inverse permutations.
    knock_grad.bottomRows(h) += apply_swap(t2.grad_y, pattern).rightCols(d);
    if (cfg.lambda_so != 0.0) knock_grad += cfg.lambda_so * second_order_gradient(batch, knock);
    if (cfg.delta_corr != 0.0) knock_grad += cfg.delta_corr * d_corr_gradient(batch, knock, s_star);
    require_finite(knock_grad, "loss gradient");
    out.gradient = backward(params, trace, knock_grad);
    return out;
}

inline LossBreakdown total_loss(const GeneratorParams& params, const Matrix& batch, const TrainingConfig& cfg,
                                const SdpSolution& s_star, Rng& rng) {
    return loss_and_gradient(params, batch, cfg, s_star, rng, false).loss;
}

inline LossAndGradient gradient(const GeneratorParams& params, const Matrix& batch, const TrainingConfig& cfg,
                                const SdpSolution& s_star, Rng& rng) {
    return loss_and_gradient(params, batch, cfg, s_star, rng, true);
}

/// Per-column affine map to mean 0 and (1/n) variance 1.
struct Standardizer {
    Vector mean;
    Vector scale;

    static Standardizer fit(const Matrix& x) {
        Standardizer s;
        const double n = static_cast<double>(x.rows());
        s.mean = x.colwise().mean().transpose();
        s.scale = ((x.rowwise() - s.mean.transpose()).colwise().squaredNorm().transpose() / n).cwiseSqrt();
        for (Index j = 0; j < s.scale.size(); ++j)
            if (!(s.scale(j) > 0.0)) s.scale(j) = 1.0;
        return s;
    }

    Matrix apply(const Matrix& x) const {
        return (x.rowwise() - mean.transpose()) * scale.cwiseInverse().asDiagonal();
    }

    Matrix invert(const Matrix& z) const {
        return (z * scale.asDiagonal()).rowwise() + mean.transpose();
    }
};

struct EpochLog {
    int epoch = 0;
    // Component means over the epoch's steps; total follows the same weights.
    LossBreakdown mean;
    std::vector<LossBreakdown> steps;
};

struct TrainedGenerator {
    GeneratorParams params;
    Standardizer standardizer;
    SdpSolution s_star;
    TrainingConfig config;
    std::vector<EpochLog> log;
};

inline TrainedGenerator initialize_trained(const DataMatrix& data, const TrainingConfig& cfg) {
    cfg.validate();
    if (data.rows() < 4) throw InsufficientSamples("train: need at least 4 rows");
    if (!data.allFinite()) throw InvalidInput("train: non-finite data value");
    TrainedGenerator out;
    out.config = cfg;
    out.standardizer = Standardizer::fit(data);
    out.s_star = solve_sdp(correlation_matrix(out.standardizer.apply(data)));
    Rng init_rng(derive_seed(cfg.seed, 0));
    out.params = init_generator(data.cols(), cfg.architecture, init_rng);
    return out;
}

/// Minibatch SGD on standardized data. Each epoch reshuffles the rows and
/// drops the incomplete tail batch.
inline TrainedGenerator train(const DataMatrix& data, const TrainingConfig& cfg) {
    TrainedGenerator out = initialize_trained(data, cfg);
    const Matrix z = out.standardizer.apply(data);
    const Index n = z.rows();
    Index batch = std::min(cfg.batch_size, n - n % 2);
    Rng rng(derive_seed(cfg.seed, 1));

    GeneratorGradient velocity = zero_gradient(out.params);
    std::vector<Index> order(n);
    std::iota(order.begin(), order.end(), Index{0});
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (Index i = n - 1; i > 0; --i) {
            std::uniform_int_distribution<Index> pick(0, i);
            std::swap(order[i], order[pick(rng)]);
        }
        EpochLog entry;
        entry.epoch = epoch;
        for (Index start = 0; start + batch <= n; start += batch) {
            Matrix rows(batch, z.cols());
            for (Index r = 0; r < batch; ++r) rows.row(r) = z.row(order[start + r]);
            LossAndGradient step;
            try {
                step = gradient(out.params, rows, cfg, out.s_star, rng);
            } catch (const NumericOverflow& e) {
                throw NumericOverflow(std::string(e.what()) + " (epoch " + std::to_string(epoch) + ", batch " +
                                      std::to_string(start / batch) + ")");
            }
            for (std::size_t l = 0; l < out.params.num_layers(); ++l) {
                velocity.weights[l] = cfg.momentum * velocity.weights[l] + step.gradient.weights[l];
                velocity.biases[l] = cfg.momentum * velocity.biases[l] + step.gradient.biases[l];
                out.params.weights[l] -= cfg.learning_rate * velocity.weights[l];
                out.params.biases[l] -= cfg.learning_rate * velocity.biases[l];
            }
            entry.steps.push_back(step.loss);
        }
        const double count = static_cast<double>(entry.steps.size());
        double s = 0.0, so = 0.0, dc = 0.0;
        for (const auto& b : entry.steps) {
            s += b.srmmd_term;
            so += b.second_order_term;
            dc += b.decorrelation_term;
        }
        entry.mean = make_breakdown(s / count, so / count, dc / count, cfg);
        out.log.push_back(std::move(entry));
    }
    return out;
}

/// Knockoffs in the original data scale; noise is drawn from `seed`.
inline Matrix sample_knockoffs(const TrainedGenerator& model, const DataMatrix& x, std::uint64_t seed) {
    if (x.cols() != model.params.output_dim())
        throw DimensionError("sample_knockoffs: model trained on d = " + std::to_string(model.params.output_dim()) +
                             ", got " + std::to_string(x.cols()));
    Rng rng(seed);
    const Matrix noise = standard_normal(x.rows(), x.cols(), rng);
    return model.standardizer.invert(forward(model.params, model.standardizer.apply(x), noise));
}

}  // namespace softrank
