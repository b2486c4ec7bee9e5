#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "softrank/core.hpp"

namespace softrank {

enum class SynthKind { gaussian_ar1, gmm3, student_t, sparse_gaussian };

inline std::string to_string(SynthKind kind) {
    switch (kind) {
        case SynthKind::gaussian_ar1: return "gaussian_ar1";
        case SynthKind::gmm3: return "gmm3";
        case SynthKind::student_t: return "student_t";
        case SynthKind::sparse_gaussian: return "sparse_gaussian";
    }
    return "unknown";
}

inline SynthKind parse_synth_kind(const std::string& name) {
    for (SynthKind k : {SynthKind::gaussian_ar1, SynthKind::gmm3, SynthKind::student_t, SynthKind::sparse_gaussian})
        if (to_string(k) == name) return k;
    throw InvalidInput("unknown synthetic setting '" + name + "'");
}

struct SynthSpec {
    SynthKind kind = SynthKind::gaussian_ar1;
    Index d = 30;
    Index n = 1000;
    // AR(1) correlation for gaussian_ar1 and student_t.
    double rho = 0.5;
    // Mixture components: per-component AR(1) correlation, mean shift applied
    // to every coordinate, and mixing weight.
    std::vector<double> mixture_rhos{0.3, 0.5, 0.7};
    std::vector<double> mixture_means{0.0, 0.0, 0.0};
    std::vector<double> mixture_weights{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
    double dof = 3.0;
    // Support size of each sparse Gaussian row.
    Index sparsity = 9;
    std::uint64_t seed = 0;
    // Testing hook: fix the Gamma mixing variable of student_t at 1.
    bool unit_gamma = false;

    void validate() const {
        if (n < 1 || d < 1) throw InvalidInput("synth: n and d must be >= 1");
        if (kind == SynthKind::gaussian_ar1 || kind == SynthKind::student_t)
            if (!(rho > -1.0 && rho < 1.0)) throw InvalidInput("synth: rho must lie in (-1, 1)");
        if (kind == SynthKind::student_t && !(dof > 2.0)) throw InvalidInput("synth: degrees of freedom must exceed 2");
        if (kind == SynthKind::sparse_gaussian && (sparsity < 1 || sparsity > d))
            throw InvalidInput("synth: sparsity must lie in [1, d]");
        if (kind == SynthKind::gmm3) {
            const std::size_t k = mixture_weights.size();
            if (k == 0 || mixture_rhos.size() != k || mixture_means.size() != k)
                throw InvalidInput("synth: mixture rho/mean/weight lists must have equal nonzero length");
            double total = 0.0;
            for (double w : mixture_weights) {
                if (w < 0.0) throw InvalidInput("synth: negative mixture weight");
                total += w;
            }
            if (std::abs(total - 1.0) > 1e-9) throw InvalidInput("synth: mixture weights must sum to 1");
            for (double r : mixture_rhos)
                if (!(r > -1.0 && r < 1.0)) throw InvalidInput("synth: rho must lie in (-1, 1)");
        }
    }
};

/// Sigma_ij = rho^|i - j|
inline Matrix ar1_covariance(Index d, double rho) {
    Matrix sigma(d, d);
    for (Index i = 0; i < d; ++i)
        for (Index j = 0; j < d; ++j) sigma(i, j) = std::pow(rho, static_cast<double>(std::abs(i - j)));
    return sigma;
}

inline Matrix ar1_cholesky(Index d, double rho) {
    if (!(rho > -1.0 && rho < 1.0)) throw InvalidInput("AR(1) covariance requires |rho| < 1");
    Eigen::LLT<Matrix> llt(ar1_covariance(d, rho));
    if (llt.info() != Eigen::Success) throw InvalidInput("AR(1) covariance is not positive definite");
    return llt.matrixL();
}

inline DataMatrix gaussian_ar1(const SynthSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);
    const Matrix lower = ar1_cholesky(spec.d, spec.rho);
    return standard_normal(spec.n, spec.d, rng) * lower.transpose();
}

/// Mixture of AR(1) Gaussians; also returns the component label of each row.
inline DataMatrix gmm3(const SynthSpec& spec, std::vector<int>* labels = nullptr) {
    spec.validate();
    Rng rng(spec.seed);
    const std::size_t k = spec.mixture_weights.size();
    std::vector<Matrix> lowers;
    for (double r : spec.mixture_rhos) lowers.push_back(ar1_cholesky(spec.d, r));
    std::vector<double> cumulative(k);
    std::partial_sum(spec.mixture_weights.begin(), spec.mixture_weights.end(), cumulative.begin());

    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    DataMatrix out(spec.n, spec.d);
    if (labels) labels->assign(spec.n, 0);
    for (Index i = 0; i < spec.n; ++i) {
        std::size_t c = 0;
        if (k > 1) {
            const double u = uniform(rng);
            while (c + 1 < k && u >= cumulative[c]) ++c;
        }
        const Matrix z = standard_normal(1, spec.d, rng);
        out.row(i) = (z * lowers[c].transpose()).array() + spec.mixture_means[c];
        if (labels) (*labels)[i] = static_cast<int>(c);
    }
    return out;
}

/// Multivariate t scaled to unit variance: sqrt((nu - 2)/nu) Z / sqrt(Gamma),
/// Gamma ~ Gamma(nu/2, rate nu/2), one Gamma draw per row.
inline DataMatrix student_t(const SynthSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);
    const Matrix lower = ar1_cholesky(spec.d, spec.rho);
    std::gamma_distribution<double> gamma(spec.dof / 2.0, 2.0 / spec.dof);
    const double scale = std::sqrt((spec.dof - 2.0) / spec.dof);
    DataMatrix out(spec.n, spec.d);
    for (Index i = 0; i < spec.n; ++i) {
        const Matrix z = standard_normal(1, spec.d, rng) * lower.transpose();
        const double g = spec.unit_gamma ? 1.0 : gamma(rng);
        out.row(i) = scale * z / std::sqrt(g);
    }
    return out;
}

/// Per row: eta ~ N(0, 1) on a random support of size L, scaled by
/// sqrt(d / L) so that every coordinate has unit variance.
inline DataMatrix sparse_gaussian(const SynthSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);
    const Index d = spec.d;
    const Index l = spec.sparsity;
    const double c = std::sqrt(static_cast<double>(d) / static_cast<double>(l));
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<Index> perm(d);
    DataMatrix out = DataMatrix::Zero(spec.n, d);
    for (Index i = 0; i < spec.n; ++i) {
        const double eta = normal(rng);
        std::iota(perm.begin(), perm.end(), Index{0});
        for (Index k = 0; k < l; ++k) {
            std::uniform_int_distribution<Index> pick(k, d - 1);
            std::swap(perm[k], perm[pick(rng)]);
            out(i, perm[k]) = c * eta;
        }
    }
    return out;
}

inline DataMatrix generate(const SynthSpec& spec) {
    switch (spec.kind) {
        case SynthKind::gaussian_ar1: return gaussian_ar1(spec);
        case SynthKind::gmm3: return gmm3(spec);
        case SynthKind::student_t: return student_t(spec);
        case SynthKind::sparse_gaussian: return sparse_gaussian(spec);
    }
    throw InvalidInput("synth: unknown kind");
}

struct ResponseSpec {
    Index num_nonzero = 10;
    // Nonzero coefficients have magnitude amplitude / sqrt(rows).
    double amplitude = 10.0;
    double noise_sd = 1.0;
    std::uint64_t seed = 0;
    bool random_signs = true;
    // Testing hook: drop the Gaussian noise term.
    bool zero_noise = false;
};

struct Response {
    Vector y;
    std::vector<Index> support;  // sorted, 0-based
    Vector beta;
};

/// y = X beta + z with a uniformly drawn support of size k.
inline Response response(const DataMatrix& x, const ResponseSpec& spec) {
    const Index d = x.cols();
    const Index m = x.rows();
    if (spec.num_nonzero < 0 || spec.num_nonzero > d) throw InvalidInput("response: need 0 <= k <= d");
    if (!(spec.amplitude >= 0.0)) throw InvalidInput("response: amplitude must be nonnegative");
    if (m < 1) throw InvalidInput("response: empty design");
    Rng rng(spec.seed);

    std::vector<Index> perm(d);
    std::iota(perm.begin(), perm.end(), Index{0});
    for (Index k = 0; k < spec.num_nonzero; ++k) {
        std::uniform_int_distribution<Index> pick(k, d - 1);
        std::swap(perm[k], perm[pick(rng)]);
    }
    Response out;
    out.support.assign(perm.begin(), perm.begin() + spec.num_nonzero);
    std::sort(out.support.begin(), out.support.end());

    const double magnitude = spec.amplitude / std::sqrt(static_cast<double>(m));
    out.beta = Vector::Zero(d);
    for (Index j : out.support) {
        const double sign = (spec.random_signs && (rng() >> 63)) ? -1.0 : 1.0;
        out.beta(j) = sign * magnitude;
    }
    out.y = x * out.beta;
    if (!spec.zero_noise) {
        std::normal_distribution<double> normal(0.0, spec.noise_sd);
        for (Index i = 0; i < m; ++i) out.y(i) += normal(rng);
    }
    return out;
}

}  // namespace softrank
