#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "conga/brownian.hpp"
#include "conga/random.hpp"

using namespace conga;

namespace {
NormalStream stream(std::uint64_t root, std::uint64_t idx = 0) {
    return NormalStream(SeedSpec{root, idx});
}
constexpr auto kZero = [] { return 0.0; };
} // namespace

TEST(Brownian, GridCountAndOrigin) {
    auto s = stream(1);
    auto p = build_path_increments(s, 1.0, 0.25);
    EXPECT_EQ(p.points(), 5u);
    EXPECT_EQ(p.x[0], 0.0);
}

TEST(Brownian, ZeroIncrementsGiveZeroPath) {
    auto p = build_path_increments(kZero, 2.0, 0.5);
    for (double v : p.x) EXPECT_EQ(v, 0.0);
}

TEST(Brownian, RejectsBadParameters) {
    auto s = stream(1);
    EXPECT_THROW(build_path_increments(s, -1.0, 0.5), std::invalid_argument);
    EXPECT_THROW(build_path_increments(s, 1.0, 0.0), std::invalid_argument);
}

TEST(Brownian, Deterministic) {
    auto s1 = stream(9, 4);
    auto s2 = stream(9, 4);
    auto p1 = build_path_increments(s1, 4.0, 0.5, 2);
    auto p2 = build_path_increments(s2, 4.0, 0.5, 2);
    EXPECT_EQ(p1.x, p2.x);
    EXPECT_EQ(p1.y, p2.y);
}

TEST(Brownian, NegativeTimeIsZero) {
    auto s = stream(3);
    auto p = build_path_increments(s, 1.0, 0.25);
    EXPECT_EQ(p.value(-0.5), 0.0);
    EXPECT_EQ(p.value(0.0), 0.0);
}

// Monte Carlo oracle: Var(W(1)) = 1 within 5% over 1e4 replicas.
TEST(Brownian, IncrementVarianceMC) {
    double sum = 0.0, sumsq = 0.0;
    const int reps = 10000;
    for (int r = 0; r < reps; ++r) {
        auto s = stream(42, static_cast<std::uint64_t>(r));
        auto p = build_path_increments(s, 1.0, 0.125);
        const double w1 = p.x.back();
        sum += w1;
        sumsq += w1 * w1;
    }
    const double var = sumsq / reps - sqr(sum / reps);
    EXPECT_NEAR(var, 1.0, 0.05);
}

TEST(Levy, DepthZeroIsLine) {
    auto s1 = stream(11);
    const double z1 = s1();
    auto s2 = stream(11);
    auto p = build_path_levy(s2, 0);
    EXPECT_DOUBLE_EQ(p.x.back(), z1);
    EXPECT_DOUBLE_EQ(p.value(0.5), 0.5 * z1);
}

TEST(Levy, ZeroDrawsGiveZeroPath) {
    auto p = build_path_levy(kZero, 6);
    for (double v : p.x) EXPECT_EQ(v, 0.0);
}

TEST(Levy, RefiningDepthKeepsLowerLevels) {
    auto s1 = stream(5);
    auto s2 = stream(5);
    auto p4 = build_path_levy(s1, 4);
    auto p8 = build_path_levy(s2, 8);
    // W_8 at level-4 dyadic points equals W_4 there: every deeper summand
    // vanishes on those points.
    for (std::size_t j = 0; j < p4.points(); ++j)
        EXPECT_DOUBLE_EQ(p4.x[j], p8.x[j * 16]);
}

TEST(Levy, LipschitzBoundFromLevels) {
    auto s = stream(17);
    auto lv = levy_levels(s, 10);
    // realized c with |Z_d| <= c sqrt(n) on every level n >= 1
    double c = std::abs(lv.level_nodes[0][1]);
    for (int n = 1; n <= lv.depth; ++n) {
        const double scale = std::pow(2.0, -(n + 1) / 2.0);
        for (double v : lv.level_nodes[static_cast<std::size_t>(n)])
            c = std::max(c, std::abs(v) / scale / std::sqrt(static_cast<double>(n)));
    }
    double bound = 0.0;
    for (int n = 0; n <= lv.depth; ++n)
        bound += 2.0 * c * std::sqrt(std::max(1.0, static_cast<double>(n))) *
                 std::pow(2.0, n / 2.0);
    auto p = path_from_levels(lv);
    double lip = 0.0;
    for (std::size_t j = 0; j + 1 < p.points(); ++j)
        lip = std::max(lip, std::abs(p.x[j + 1] - p.x[j]) / p.grid_step);
    EXPECT_LE(lip, bound);
}

// Both constructions give Var(W(s)) = s within MC tolerance.
TEST(Levy, VarianceMatchesTime) {
    const int reps = 1000;
    for (double sq : {0.25, 0.5, 1.0}) {
        double acc_levy = 0.0, acc_inc = 0.0;
        for (int r = 0; r < reps; ++r) {
            auto s1 = stream(100, static_cast<std::uint64_t>(r));
            acc_levy += sqr(build_path_levy(s1, 10).value(sq));
            auto s2 = stream(200, static_cast<std::uint64_t>(r));
            acc_inc += sqr(build_path_increments(s2, 1.0, 1.0 / 1024.0).value(sq));
        }
        EXPECT_NEAR(acc_levy / reps, sq, 0.15 * sq);
        EXPECT_NEAR(acc_inc / reps, sq, 0.15 * sq);
    }
}

TEST(Reversed, Basics) {
    auto p = path_from_values({0.0, 1.0, 3.0}, 1.0);
    EXPECT_EQ(reversed_value(p, 2.0, 0.0), 0.0);        // W(t) - W(t)
    EXPECT_EQ(reversed_value(p, 2.0, 2.0), 3.0);        // W(0) = 0
    EXPECT_DOUBLE_EQ(reversed_value(p, 2.0, 1.0), 2.0); // W(2) - W(1)
    EXPECT_THROW(reversed_value(p, 2.0, -0.1), std::domain_error);
    EXPECT_THROW(reversed_value(p, 1.0, 1.5), std::domain_error);
}

// Two-sample check at the 1% level: the diffusively rescaled view has the
// same increment variance as a unit-horizon path.
TEST(Rescale, IncrementVarianceTwoSample) {
    const int reps = 1000;
    const double t = 16.0;
    double s1 = 0.0, s2 = 0.0, n1 = 0.0, n2 = 0.0;
    for (int r = 0; r < reps; ++r) {
        auto g1 = stream(31, static_cast<std::uint64_t>(r));
        auto p = build_path_increments(g1, t, 1.0);
        auto q = diffusive_rescale(p, t);
        for (std::size_t j = 0; j + 1 < q.points(); ++j) {
            s1 += sqr(q.x[j + 1] - q.x[j]) / q.grid_step;
            n1 += 1.0;
        }
        auto g2 = stream(32, static_cast<std::uint64_t>(r));
        auto u = build_path_increments(g2, 1.0, 1.0 / 16.0);
        for (std::size_t j = 0; j + 1 < u.points(); ++j) {
            s2 += sqr(u.x[j + 1] - u.x[j]) / u.grid_step;
            n2 += 1.0;
        }
    }
    const double v1 = s1 / n1, v2 = s2 / n2;
    const double se = std::sqrt(2.0 / n1 + 2.0 / n2); // chi-square normal approx
    EXPECT_LT(std::abs(v1 - v2) / se, 2.58);
    EXPECT_NEAR(v1, 1.0, 0.1);
}

TEST(Rescale, ExactRelabelingAtFullHorizon) {
    auto g = stream(77);
    auto p = build_path_increments(g, 8.0, 1.0);
    auto q = diffusive_rescale(p, 8.0);
    ASSERT_EQ(q.points(), p.points());
    for (std::size_t j = 0; j < p.points(); ++j)
        EXPECT_DOUBLE_EQ(q.x[j], p.x[j] / std::sqrt(8.0));
}
