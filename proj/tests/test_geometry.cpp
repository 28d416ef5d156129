#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "conga/brownian.hpp"
#include "conga/field.hpp"
#include "conga/geometry.hpp"
#include "conga/random.hpp"

using namespace conga;

namespace {

SampledCurve make_curve(std::vector<double> params, std::vector<Vec2> pts) {
    SampledCurve c;
    c.params = std::move(params);
    c.points = std::move(pts);
    return c;
}

SampledCurve circle(double r, int n, double a = 0.0, double b = 2.0 * std::numbers::pi,
                    double ry = -1.0) {
    SampledCurve c;
    for (int i = 0; i <= n; ++i) {
        const double t = a + (b - a) * i / n;
        c.params.push_back(t);
        c.points.push_back({r * std::cos(t), (ry < 0 ? r : ry) * std::sin(t)});
    }
    return c;
}

// Independent oracle: all-pairs segment intersection test.
std::vector<Crossing> brute_force_intersections(const SampledCurve& c) {
    std::vector<Crossing> out;
    const std::size_t n = c.points.size() - 1;
    const double ptol = 1e-9 * (c.params.back() - c.params.front());
    for (std::size_t i = 0; i + 2 < n + 1; ++i) {
        for (std::size_t j = i + 2; j < n; ++j) {
            const Vec2 r = c.points[i + 1] - c.points[i];
            const Vec2 s = c.points[j + 1] - c.points[j];
            const double denom = cross(r, s);
            if (std::abs(denom) <= 1e-14 * r.norm() * s.norm()) continue;
            const Vec2 d = c.points[j] - c.points[i];
            const double t = cross(d, s) / denom, u = cross(d, r) / denom;
            if (t < 0.0 || t > 1.0 || u < 0.0 || u > 1.0) continue;
            Crossing cr;
            cr.s1 = c.params[i] + t * (c.params[i + 1] - c.params[i]);
            cr.s2 = c.params[j] + u * (c.params[j + 1] - c.params[j]);
            cr.point = c.points[i] + r * t;
            if (cr.s2 - cr.s1 < ptol) continue;
            bool dup = false;
            for (auto& p : out)
                if (std::abs(p.s1 - cr.s1) < ptol && std::abs(p.s2 - cr.s2) < ptol) dup = true;
            if (!dup) out.push_back(cr);
        }
    }
    std::sort(out.begin(), out.end(),
              [](const Crossing& a, const Crossing& b) { return a.s1 < b.s1; });
    return out;
}

} // namespace

TEST(CriticalPoints, SignChangeCount) {
    std::vector<double> xs{0, 1, 2, 3, 4};
    std::vector<double> vals{3, 1, -2, -1, 4};
    EXPECT_EQ(find_critical_points(xs, vals).size(), 2u);
    std::vector<double> pos{1, 2, 0.5, 3};
    EXPECT_EQ(find_critical_points({0, 1, 2, 3}, pos).size(), 0u);
}

TEST(CriticalPoints, TangencyNotDoubleCounted) {
    auto r1 = find_critical_points({0, 1, 2}, {1, 0, 1});
    ASSERT_EQ(r1.size(), 1u);
    EXPECT_EQ(r1[0], 1.0);
    auto r2 = find_critical_points({0, 1, 2}, {1, 0, -1});
    EXPECT_EQ(r2.size(), 1u);
}

TEST(CriticalPoints, BisectionRefinement) {
    auto f = [](double x) { return std::cos(x); };
    std::vector<double> xs, vals;
    for (int i = 0; i <= 20; ++i) {
        xs.push_back(0.3 * i);
        vals.push_back(f(xs.back()));
    }
    auto roots = find_critical_points(xs, vals, f);
    ASSERT_GE(roots.size(), 1u);
    EXPECT_NEAR(roots[0], std::numbers::pi / 2.0, 1e-9);
}

TEST(CriticalPoints, TooFewSamplesRejected) {
    EXPECT_THROW(find_critical_points({0.0}, {1.0}), std::invalid_argument);
}

// Grid-refinement oracle on a fixed-seed field derivative at t = 2000.
TEST(CriticalPoints, FieldCountMatchesRefinedGrid) {
    const double t = 2000.0;
    KernelSpec spec{0.6, t, 256, 6.0};
    auto s = NormalStream(SeedSpec{31337, 0});
    auto p = build_path_increments(s, 1.0, 1.0 / t);
    auto count_on_grid = [&](int n) {
        std::vector<double> xs(static_cast<std::size_t>(n)), vals(xs.size());
        for (int i = 0; i < n; ++i) {
            xs[static_cast<std::size_t>(i)] = 0.2 + 0.3 * i / (n - 1);
            vals[static_cast<std::size_t>(i)] =
                eval_scaled_derivative(p, xs[static_cast<std::size_t>(i)], 1, spec);
        }
        return find_critical_points(xs, vals).size();
    };
    const int base = static_cast<int>(4.0 * std::sqrt(t) * 0.3) + 2;
    EXPECT_EQ(count_on_grid(base), count_on_grid(10 * base));
}

TEST(Intersections, PolylineExample) {
    auto c = make_curve({0, 1, 2, 3}, {{0, 0}, {2, 2}, {2, 0}, {0, 2}});
    auto x = find_self_intersections(c);
    ASSERT_EQ(x.size(), 1u);
    EXPECT_NEAR(x[0].point.x, 1.0, 1e-12);
    EXPECT_NEAR(x[0].point.y, 1.0, 1e-12);
}

TEST(Intersections, ConvexPolylineNone) {
    auto c = make_curve({0, 1, 2, 3}, {{0, 0}, {1, 0}, {1.5, 1.0}, {1.0, 2.0}});
    EXPECT_TRUE(find_self_intersections(c).empty());
}

TEST(Intersections, FigureEightOneCrossingNearOrigin) {
    SampledCurve c;
    const int n = 400;
    for (int i = 0; i <= n; ++i) {
        const double t = -0.5 * std::numbers::pi +
                         2.0 * std::numbers::pi * static_cast<double>(i) / n;
        c.params.push_back(t);
        c.points.push_back({std::sin(t), std::sin(t) * std::cos(t)});
    }
    // exactly one crossing sits at the origin (the closure of the sampled
    // curve at (-1,0) is a separate polyline-level contact)
    auto x = find_self_intersections(c);
    int near_origin = 0;
    for (const auto& cr : x)
        if (cr.point.norm() < 1e-3) {
            ++near_origin;
            EXPECT_NEAR(cr.s1, 0.0, 1e-6);
            EXPECT_NEAR(cr.s2, std::numbers::pi, 1e-6);
        }
    EXPECT_EQ(near_origin, 1);
}

TEST(Intersections, SweepMatchesBruteForce) {
    for (int seed = 0; seed < 50; ++seed) {
        auto s = NormalStream(SeedSpec{777, static_cast<std::uint64_t>(seed)});
        SampledCurve c;
        Vec2 pos{};
        for (int i = 0; i < 40; ++i) {
            c.params.push_back(i);
            c.points.push_back(pos);
            pos = pos + Vec2{s(), s()};
        }
        auto a = find_self_intersections(c);
        auto b = brute_force_intersections(c);
        ASSERT_EQ(a.size(), b.size()) << "seed=" << seed;
        for (std::size_t i = 0; i < a.size(); ++i) {
            EXPECT_NEAR(a[i].s1, b[i].s1, 1e-9);
            EXPECT_NEAR(a[i].s2, b[i].s2, 1e-9);
        }
    }
}

TEST(Loops, NoCrossingsNoLoops) {
    auto c = make_curve({0, 1, 2}, {{0, 0}, {1, 0}, {2, 1}});
    EXPECT_TRUE(extract_loops(c, find_self_intersections(c)).empty());
}

TEST(Loops, FigureEightTwoLobes) {
    SampledCurve c;
    const int n = 600;
    for (int i = 0; i <= n; ++i) {
        const double t = 2.0 * std::numbers::pi * static_cast<double>(i) / n;
        c.params.push_back(t);
        c.points.push_back({std::sin(t), std::sin(t) * std::cos(t)});
    }
    auto loops = extract_loops(c, find_self_intersections(c));
    EXPECT_EQ(loops.size(), 2u);
}

TEST(Loops, ClosedCircleIsOneLoop) {
    auto c = circle(1.0, 256);
    auto loops = extract_loops(c, find_self_intersections(c));
    ASSERT_EQ(loops.size(), 1u);
    EXPECT_NEAR(loops[0].size, 1.0, 0.01);
}

TEST(LoopSize, EllipseMinorSemiAxis) {
    auto c = circle(2.0, 256, 0.0, 2.0 * std::numbers::pi, 1.0); // semi-axes (2,1)
    auto loops = extract_loops(c, find_self_intersections(c));
    ASSERT_EQ(loops.size(), 1u);
    EXPECT_NEAR(loops[0].size, 1.0, 0.01);
}

TEST(LoopSize, DegenerateSliverNearZero) {
    SampledCurve c;
    const int n = 64;
    for (int i = 0; i <= n; ++i) {
        const double t = 2.0 * std::numbers::pi * static_cast<double>(i) / n;
        c.params.push_back(t);
        c.points.push_back({std::cos(t), 1e-7 * std::sin(t)});
    }
    auto loops = extract_loops(c, find_self_intersections(c));
    ASSERT_EQ(loops.size(), 1u);
    EXPECT_LT(loops[0].size, 1e-4);
}

TEST(LoopSize, UpperBoundDominates) {
    auto c = circle(1.0, 128);
    auto loops = extract_loops(c, find_self_intersections(c));
    ASSERT_EQ(loops.size(), 1u);
    EXPECT_GE(loop_size_upper_bound(loops[0], c) + 1e-12, loops[0].size);
}

TEST(CurveDistance, IdenticalIsZero) {
    auto c = circle(1.0, 64);
    EXPECT_NEAR(curve_distance(c, c), 0.0, 1e-12);
}

TEST(CurveDistance, ConstantCurves) {
    auto f = make_curve({0, 1}, {{0.0, 0.0}, {0.0, 0.0}});
    auto g = make_curve({0, 1}, {{3.0, 4.0}, {3.0, 4.0}});
    EXPECT_NEAR(curve_distance(f, g), 5.0, 1e-9);
}

TEST(CurveDistance, TranslationBoundedByShift) {
    auto f = circle(1.0, 64);
    auto g = f;
    for (auto& p : g.points) p = p + Vec2{0.02, -0.01};
    const double c = Vec2{0.02, -0.01}.norm();
    EXPECT_LE(curve_distance(f, g), c + 1e-6);
}

TEST(CurveDistance, ReparametrizationHelps) {
    // same trace, different parameter speed: the aligned bound beats the
    // affine pairing's space mismatch
    SampledCurve f, g;
    for (int i = 0; i <= 100; ++i) {
        const double u = i / 100.0;
        f.params.push_back(u);
        f.points.push_back({u, 0.0});
        g.params.push_back(u);
        g.points.push_back({u * u, 0.0});
    }
    const double affine_space = 0.25; // max |u - u^2|
    EXPECT_LT(curve_distance(f, g, 32), affine_space);
}
