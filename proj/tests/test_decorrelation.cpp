#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "softrank/decorrelation.hpp"

using namespace softrank;

namespace {

Matrix equicorrelated(Index d, double rho) {
    Matrix s = Matrix::Constant(d, d, rho);
    s.diagonal().setOnes();
    return s;
}

Matrix random_pd(Index d, Rng& rng) {
    std::normal_distribution<double> z;
    Matrix a(d, d + 2);
    for (Index i = 0; i < a.rows(); ++i)
        for (Index j = 0; j < a.cols(); ++j) a(i, j) = z(rng);
    Matrix s = a * a.transpose() / static_cast<double>(a.cols());
    s.diagonal().array() += 0.01;
    return s;
}

// Pearson correlation by explicit sums.
double pearson(const Matrix& a, Index ja, const Matrix& b, Index jb) {
    const double n = static_cast<double>(a.rows());
    double ma = 0, mb = 0;
    for (Index i = 0; i < a.rows(); ++i) {
        ma += a(i, ja);
        mb += b(i, jb);
    }
    ma /= n;
    mb /= n;
    double sab = 0, saa = 0, sbb = 0;
    for (Index i = 0; i < a.rows(); ++i) {
        sab += (a(i, ja) - ma) * (b(i, jb) - mb);
        saa += (a(i, ja) - ma) * (a(i, ja) - ma);
        sbb += (b(i, jb) - mb) * (b(i, jb) - mb);
    }
    return sab / std::sqrt(saa * sbb);
}

SdpSolution with_s(std::initializer_list<double> values) {
    SdpSolution out;
    out.s.resize(static_cast<Index>(values.size()));
    Index i = 0;
    for (double v : values) out.s(i++) = v;
    return out;
}

}  // namespace

TEST(Sdp, IdentityGivesOnes) {
    const SdpSolution s = solve_sdp(Matrix::Identity(4, 4));
    EXPECT_TRUE(s.s.isOnes(0.0));
    EXPECT_NEAR(s.feasibility_gap, 1.0, 1e-12);
    EXPECT_EQ(s.objective, 0.0);
}

TEST(Sdp, OneDimensional) {
    EXPECT_EQ(solve_sdp(Matrix::Constant(1, 1, 1.0)).s(0), 1.0);
    // 2 sigma^2 < 1: the constraint binds.
    EXPECT_NEAR(solve_sdp(Matrix::Constant(1, 1, 0.3)).s(0), 0.6, 1e-9);
}

TEST(Sdp, EquicorrelatedMatchesUniformClosedForm) {
    for (Index d : {2, 5, 10})
        for (double rho : {0.2, 0.4, 0.6, 0.8}) {
            const SdpSolution s = solve_sdp(equicorrelated(d, rho));
            const double want = std::min(2.0 * (1.0 - rho), 1.0);
            EXPECT_LT((s.s.array() - want).abs().maxCoeff(), 1e-4) << "d=" << d << " rho=" << rho;
            EXPECT_GE(s.feasibility_gap, -1e-8);
        }
}

TEST(Sdp, UniformLineSearchOracle) {
    // Best uniform s by bisection on min-eig(2 Sigma - s I) >= 0.
    const Matrix sigma = equicorrelated(2, 0.8);
    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        const Matrix c = 2.0 * sigma - mid * Matrix::Identity(2, 2);
        (Eigen::SelfAdjointEigenSolver<Matrix>(c).eigenvalues().minCoeff() >= 0.0 ? lo : hi) = mid;
    }
    const SdpSolution s = solve_sdp(sigma);
    EXPECT_NEAR(lo, 0.4, 1e-12);
    EXPECT_NEAR(s.s(0), lo, 1e-4);
    EXPECT_NEAR(s.s(1), lo, 1e-4);
}

TEST(Sdp, FeasibleAndMonotoneOnRandomMatrices) {
    Rng rng(1);
    for (int trial = 0; trial < 100; ++trial) {
        const Index d = 1 + trial % 9;
        const Matrix sigma = random_pd(d, rng);
        const SdpSolution s = solve_sdp(sigma);
        Matrix c = 2.0 * sigma;
        c.diagonal() -= s.s;
        EXPECT_GE(min_eigenvalue(c), -1e-8);
        EXPECT_GE(s.s.minCoeff(), 0.0);
        EXPECT_LE(s.s.maxCoeff(), 1.0);
        for (std::size_t k = 1; k < s.objective_trace.size(); ++k)
            EXPECT_LE(s.objective_trace[k], s.objective_trace[k - 1] + 1e-15);
    }
}

TEST(Sdp, Deterministic) {
    Rng rng(2);
    const Matrix sigma = random_pd(6, rng);
    EXPECT_TRUE((solve_sdp(sigma).s.array() == solve_sdp(sigma).s.array()).all());
}

TEST(Sdp, RidgeRescuesSingularInput) {
    const Matrix ones = Matrix::Ones(3, 3);
    const SdpSolution s = solve_sdp(ones);
    EXPECT_GT(s.s.minCoeff(), 0.0);
    Matrix c = 2.0 * (ones + 1e-4 * Matrix::Identity(3, 3));
    c.diagonal() -= s.s;
    EXPECT_GE(min_eigenvalue(c), -1e-8);
}

TEST(Sdp, Errors) {
    Matrix asym = Matrix::Identity(2, 2);
    asym(0, 1) = 0.5;
    EXPECT_THROW(solve_sdp(asym), InvalidInput);
    EXPECT_THROW(solve_sdp(Matrix::Zero(2, 3)), InvalidInput);
    EXPECT_THROW(solve_sdp(-Matrix::Identity(2, 2)), SingularCovariance);
}

TEST(DCorr, KnockoffEqualToDataGivesNormOfS) {
    Rng rng(3);
    std::normal_distribution<double> z;
    Matrix x(20, 3);
    for (Index i = 0; i < 20; ++i)
        for (Index j = 0; j < 3; ++j) x(i, j) = z(rng);
    const SdpSolution s = with_s({0.2, 0.5, 1.0});
    EXPECT_NEAR(d_corr(x, x, s), s.s.squaredNorm(), 1e-12);
}

TEST(DCorr, HandComputedFourRows) {
    Matrix x(4, 2), k(4, 2);
    x << 1, 0, 2, 1, 3, 0, 4, 1;
    k << 1, 1, 3, 1, 2, 0, 4, 0;
    // Column 0: x = (1,2,3,4), k = (1,3,2,4): centered dot 4, norms 5 and 5.
    // Column 1: x = (0,1,0,1), k = (1,1,0,0): centered dot 0.
    EXPECT_NEAR(pearson(x, 0, k, 0), 0.8, 1e-15);
    EXPECT_NEAR(pearson(x, 1, k, 1), 0.0, 1e-15);
    const SdpSolution s = with_s({0.5, 0.3});
    const double want = (0.8 - 1.0 + 0.5) * (0.8 - 1.0 + 0.5) + (0.0 - 1.0 + 0.3) * (0.0 - 1.0 + 0.3);
    EXPECT_NEAR(d_corr(x, k, s), want, 1e-12);
    EXPECT_NEAR(d_corr(x, k, with_s({0.2, 1.0})), 0.0, 1e-12);
}

TEST(DCorr, GradientMatchesFiniteDifferences) {
    Rng rng(4);
    std::normal_distribution<double> z;
    Matrix x(7, 3), k(7, 3);
    for (Index i = 0; i < 7; ++i)
        for (Index j = 0; j < 3; ++j) {
            x(i, j) = z(rng);
            k(i, j) = 0.5 * x(i, j) + z(rng);
        }
    const SdpSolution s = with_s({0.3, 0.7, 0.9});
    const Matrix g = d_corr_gradient(x, k, s);
    for (Index i = 0; i < 7; ++i)
        for (Index j = 0; j < 3; ++j) {
            const double fd = oracle::central_difference(
                [&](double v) {
                    Matrix kk = k;
                    kk(i, j) = v;
                    return d_corr(x, kk, s);
                },
                k(i, j), 1e-6);
            EXPECT_LT(oracle::relative_error(g(i, j), fd), 1e-6);
        }
}

TEST(DCorr, ShapeErrors) {
    EXPECT_THROW(d_corr(Matrix::Zero(4, 2), Matrix::Zero(4, 3), with_s({1, 1})), DimensionError);
    EXPECT_THROW(d_corr(Matrix::Zero(4, 2), Matrix::Zero(4, 2), with_s({1})), DimensionError);
}

TEST(CorrelationMatrix, MatchesPearson) {
    Rng rng(5);
    std::normal_distribution<double> z;
    Matrix x(30, 4);
    for (Index i = 0; i < 30; ++i)
        for (Index j = 0; j < 4; ++j) x(i, j) = z(rng) + (j > 0 ? x(i, j - 1) : 0.0);
    const Matrix c = correlation_matrix(x);
    for (Index a = 0; a < 4; ++a)
        for (Index b = 0; b < 4; ++b) EXPECT_NEAR(c(a, b), pearson(x, a, x, b), 1e-12);
}

TEST(DCorr, ConstantKnockoffColumnCountsAsUncorrelated) {
    Matrix x(4, 2), k(4, 2);
    x << 1, 0, 2, 1, 3, 0, 4, 1;
    k << 5, 1, 5, 1, 5, 0, 5, 0;
    const SdpSolution s = with_s({0.5, 0.3});
    EXPECT_NEAR(d_corr(x, k, s), 0.25 + 0.49, 1e-15);
    EXPECT_TRUE(d_corr_gradient(x, k, s).col(0).isZero(0.0));
}
