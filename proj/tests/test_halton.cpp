#include <gtest/gtest.h>

#include <set>

#include "oracles.hpp"
#include "softrank/halton.hpp"

using namespace softrank;

TEST(Halton, FirstThreePointsInBaseTwo) {
    const HaltonGrid g = halton(3, 1);
    EXPECT_EQ(g.points(0, 0), 0.5);
    EXPECT_EQ(g.points(1, 0), 0.25);
    EXPECT_EQ(g.points(2, 0), 0.75);
    EXPECT_EQ(g.bases, std::vector<int>{2});
}

TEST(Halton, FirstPointInTwoDimensions) {
    const HaltonGrid g = halton(1, 2);
    EXPECT_EQ(g.points(0, 0), 0.5);
    EXPECT_NEAR(g.points(0, 1), 1.0 / 3.0, 1e-15);
}

TEST(Halton, MatchesDigitExpansion) {
    const HaltonGrid g = halton(200, 12, 5);
    for (Index j = 0; j < 12; ++j)
        for (Index i = 0; i < 200; ++i)
            EXPECT_NEAR(g.points(i, j), oracle::radical_inverse(5 + i, g.bases[j]), 1e-14);
}

TEST(Halton, CoordinatesInUnitInterval) {
    const HaltonGrid g = halton(500, 40);
    EXPECT_GE(g.points.minCoeff(), 0.0);
    EXPECT_LT(g.points.maxCoeff(), 1.0);
}

TEST(Halton, RowsDistinct) {
    const HaltonGrid g = halton(300, 3);
    std::set<std::vector<double>> rows;
    for (Index i = 0; i < g.size(); ++i) rows.insert({g.points(i, 0), g.points(i, 1), g.points(i, 2)});
    EXPECT_EQ(rows.size(), 300u);
}

TEST(Halton, Deterministic) {
    const HaltonGrid a = halton(64, 7, 3);
    const HaltonGrid b = halton(64, 7, 3);
    EXPECT_TRUE((a.points.array() == b.points.array()).all());
}

TEST(Halton, DyadicRationalsInBaseTwo) {
    for (int k = 1; k <= 4; ++k) {
        const int count = (1 << k) - 1;
        const HaltonGrid g = halton(count, 1);
        std::set<double> got(g.points.data(), g.points.data() + count);
        std::set<double> want;
        for (int i = 1; i < (1 << k); ++i) want.insert(static_cast<double>(i) / (1 << k));
        EXPECT_EQ(got, want) << "k = " << k;
    }
}

TEST(Halton, QuadrantCountsBalanced) {
    const HaltonGrid g = halton(256, 2);
    int counts[2][2] = {{0, 0}, {0, 0}};
    for (Index i = 0; i < 256; ++i) ++counts[g.points(i, 0) >= 0.5][g.points(i, 1) >= 0.5];
    for (auto& row : counts)
        for (int c : row) {
            EXPECT_GE(c, 48);
            EXPECT_LE(c, 80);
        }
}

TEST(Halton, PrimeTable) {
    const auto& p = first_primes();
    ASSERT_EQ(static_cast<Index>(p.size()), kMaxHaltonDimension);
    EXPECT_EQ(p[0], 2);
    EXPECT_EQ(p[9], 29);
    EXPECT_EQ(p[511], 3671);
}

TEST(Halton, StartIndexZeroIncludesOrigin) {
    const HaltonGrid g = halton(2, 3, 0);
    EXPECT_TRUE(g.points.row(0).isZero());
    EXPECT_EQ(g.start_index, 0);
}

TEST(Halton, RejectsUnsupportedDimension) {
    EXPECT_NO_THROW(halton(2, 512));
    EXPECT_THROW(halton(2, 513), UnsupportedDimension);
    EXPECT_THROW(halton(0, 2), InvalidInput);
}
