#include <gtest/gtest.h>

#include <cmath>
#include <sstream>
#include <vector>

#include "conga/analytics.hpp"
#include "conga/experiments.hpp"

using namespace conga;

namespace {
constexpr double kAlpha = 0.5;
// The closed forms describe the regime where the kernel peak x/alpha lies
// strictly inside the integration domain; with alpha = 0.6 the whole probe
// range [0.2, 0.5] is interior.
constexpr double kAlphaInterior = 0.6;

double envelope(double t) { return 5.0 * std::sqrt(std::log(t) / t); }
} // namespace

TEST(VarianceU, DeepTailVanishes) {
    const double t = 1000.0;
    const double x = kAlpha * t + 11.0 * 0.5 * std::sqrt(t);
    EXPECT_LT(variance_u(x, t, kAlpha), 1e-8);
}

// Independent oracle: one million point Riemann midpoint sum.
TEST(VarianceU, RiemannOracleFixture) {
    const double t = 100.0, x = 50.0;
    const double sigma = std::sqrt(kAlpha * (1.0 - kAlpha));
    const int n = 1000000;
    const double h = t / n;
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
        const double y = (i + 0.5) * h;
        acc += h * sqr(normal_tail((x - kAlpha * y) / (sigma * std::sqrt(y))));
    }
    EXPECT_NEAR(variance_u(x, t, kAlpha), acc, 1e-7 * acc);
}

// Var(u(alpha t - lambda t^beta, t)) ~ t^beta: the normalized value is stable
// in t (two-sided envelope fitted at the smallest t).
TEST(VarianceU, SubCutoffGrowthRate) {
    const double beta = 0.75, lambda = 1.0;
    std::vector<double> ratio;
    for (double t : {1e3, 1e4, 1e5}) {
        const double x = kAlpha * t - lambda * std::pow(t, beta);
        ratio.push_back(variance_u(x, t, kAlpha) / std::pow(t, beta));
    }
    for (double r : ratio) {
        EXPECT_GE(r / ratio[0], 1.0 / 3.0);
        EXPECT_LE(r / ratio[0], 3.0);
    }
}

TEST(CutoffScan, RateEnvelopeAndMonotonicity) {
    std::vector<double> r25, r75, n25, n75;
    for (double t : {1e3, 1e4, 1e5}) {
        auto rows = variance_cutoff_scan(t, {0.25, 0.75}, kAlpha);
        r25.push_back(rows[0].variance);
        r75.push_back(rows[1].variance);
        n25.push_back(rows[0].variance / rows[0].prediction);
        n75.push_back(rows[1].variance / rows[1].prediction);
    }
    // normalized ratio stability relative to the smallest t
    for (std::size_t i = 1; i < n25.size(); ++i) {
        EXPECT_GE(n25[i] / n25[0], 1.0 / 3.0);
        EXPECT_LE(n25[i] / n25[0], 3.0);
        EXPECT_GE(n75[i] / n75[0], 1.0 / 3.0);
        EXPECT_LE(n75[i] / n75[0], 3.0);
    }
    // below the cutoff the variance grows, above it decays
    EXPECT_LT(r25[0], r25[1]);
    EXPECT_LT(r25[1], r25[2]);
    EXPECT_GT(r75[0], r75[1]);
    EXPECT_GT(r75[1], r75[2]);
}

TEST(CutoffScan, CalibratedLocationHitsTarget) {
    const double t = 1e5, target = 1.0;
    const double x = variance_calibrated_location(t, target, kAlpha);
    const double v = variance_u(x, t, kAlpha);
    EXPECT_GE(v / target, 1.0 / 3.0);
    EXPECT_LE(v / target, 3.0);
}

TEST(CovFirst, DiagonalReductionAndSymmetry) {
    const double t = 1e4, x = 0.3;
    auto d = cov_first(x, x, t, kAlpha);
    const double sigma = std::sqrt(kAlpha * (1.0 - kAlpha));
    const double expect = std::sqrt(t) /
                          (2.0 * std::sqrt(std::numbers::pi * kAlpha) * sigma * std::sqrt(x));
    EXPECT_NEAR(d.closed, expect, 1e-12 * expect);
    auto ab = cov_first(0.22, 0.41, t, kAlpha);
    auto ba = cov_first(0.41, 0.22, t, kAlpha);
    EXPECT_NEAR(ab.exact, ba.exact, 1e-12 * std::abs(ab.exact));
}

TEST(CovFirst, ClosedFormEnvelope) {
    for (double t : {1e3, 1e4}) {
        for (double x : {0.2, 0.35, 0.5}) {
            for (double y : {0.2, 0.35, 0.5}) {
                auto r = cov_first(x, y, t, kAlphaInterior);
                if (r.closed < 1e-12) continue; // decorrelated pair, both negligible
                EXPECT_LE(std::abs(r.exact / r.closed - 1.0), envelope(t))
                    << "t=" << t << " x=" << x << " y=" << y;
            }
        }
    }
}

TEST(CovFirst, NonnegativeOnDomain) {
    for (double x : {0.1, 0.2, 0.4})
        for (double y : {0.1, 0.3, 0.5})
            EXPECT_GE(cov_first(x, y, 2000.0, kAlpha).exact, 0.0);
}

// Correlation decays at a Gaussian rate in sqrt(t)|x-y|; the fitted exponent
// from the smallest separation brackets the others within a factor 3.
TEST(CovFirst, CorrelationGaussianRate) {
    const double t = 1e4, x = 0.3;
    std::vector<double> seps{0.01, 0.02, 0.03};
    double fit = 0.0;
    for (std::size_t i = 0; i < seps.size(); ++i) {
        const double y = x + seps[i];
        const double c = cov_first(x, y, t, kAlpha).exact;
        const double vx = cov_first(x, x, t, kAlpha).exact;
        const double vy = cov_first(y, y, t, kAlpha).exact;
        const double eta = std::sqrt(0.5 * (x * x + y * y));
        const double shape = std::pow(x * y, 0.25) / std::sqrt(eta);
        const double corr = c / std::sqrt(vx * vy);
        const double expo = -std::log(corr / shape) / (t * sqr(y - x));
        if (i == 0)
            fit = expo;
        else {
            EXPECT_GE(expo / fit, 1.0 / 3.0);
            EXPECT_LE(expo / fit, 3.0);
        }
    }
}

TEST(VarSecond, FixtureEnvelopeMonotone) {
    const double t = 1e4;
    auto r = var_second(0.5, t, kAlphaInterior);
    const double sigma = std::sqrt(kAlphaInterior * (1.0 - kAlphaInterior));
    const double direct = std::sqrt(kAlphaInterior) * std::pow(t, 1.5) /
                          (4.0 * std::sqrt(std::numbers::pi) * std::pow(sigma, 3) *
                           std::pow(0.5, 1.5));
    EXPECT_NEAR(r.closed, direct, 1e-12 * direct);
    EXPECT_LE(std::abs(r.exact / r.closed - 1.0), envelope(t));
    double prev = 1e300;
    for (double x : {0.1, 0.2, 0.3, 0.4, 0.5}) {
        const double v = var_second(x, t, kAlphaInterior).closed;
        EXPECT_LT(v, prev);
        prev = v;
    }
}

TEST(CovMixed, BoundAndCorrelationEnvelope) {
    const double x = 0.4;
    double fit = 0.0;
    for (double t : {1e3, 1e4, 1e5}) {
        const double c = std::abs(cov_mixed(x, t, kAlpha));
        const double ratio = c / std::sqrt(t * std::log(t));
        if (t == 1e3)
            fit = ratio;
        else
            EXPECT_LE(ratio, 1.5 * fit) << "t=" << t;
        const double v1 = cov_first(x, x, t, kAlpha).exact;
        const double v2 = var_second(x, t, kAlpha).exact;
        EXPECT_LE(c / std::sqrt(v1 * v2), envelope(t));
    }
}

// The leading part of the mixed-covariance integrand integrates to a boundary
// term that is exponentially small (the odd part of the integrand cancels).
TEST(CovMixed, LeadingPartNearZero) {
    const double t = 1e4, x = 0.4;
    const double sigma_t = std::sqrt(kAlpha * (1.0 - kAlpha) / t);
    auto xi = [&](double s) { return (x - kAlpha * s) / (sigma_t * std::sqrt(s)); };
    auto main_integrand = [&](double s) {
        const double u = xi(s);
        return -(x + kAlpha * s) / (2.0 * sigma_t * std::pow(s, 1.5)) /
               (2.0 * std::numbers::pi * sigma_t * sigma_t * x) * u * std::exp(-u * u);
    };
    const double quad = integrate_adaptive_breaks(main_integrand, 1e-14, 1.0,
                                                  {x / kAlpha}, 1e-10);
    const double closed = (std::exp(-sqr(xi(1e-14))) - std::exp(-sqr(xi(1.0)))) /
                          (4.0 * std::numbers::pi * sigma_t * sigma_t * x);
    EXPECT_NEAR(quad, closed, 1e-10 + 1e-8 * std::abs(closed));
    EXPECT_LE(std::abs(quad), 1.0 / t);
}

TEST(DetSigma, DiagonalZeroAndPositive) {
    const double t = 1e4;
    EXPECT_EQ(det_sigma(0.3, 0.3, t, kAlpha), 0.0);
    for (double dy : {0.002, 0.005, 0.01})
        EXPECT_GE(det_sigma(0.3, 0.3 + dy, t, kAlpha), 0.0);
}

TEST(DetSigma, QuadraticBracketNearDiagonal) {
    const double t = 1e4, x = 0.3;
    std::vector<double> seps{0.002, 0.004, 0.008}; // all <= C*/sqrt(t)
    double fit = 0.0;
    for (std::size_t i = 0; i < seps.size(); ++i) {
        const double d = det_sigma(x, x + seps[i], t, kAlpha);
        const double norm = d / (t * t * sqr(seps[i]));
        if (i == 0)
            fit = norm;
        else {
            EXPECT_GE(norm / fit, 1.0 / 3.0);
            EXPECT_LE(norm / fit, 3.0);
        }
    }
}

TEST(Intensity, ClosedFormFixture) {
    // alpha = sigma = 1/2, t = 1e4, x = 1/2
    EXPECT_NEAR(first_intensity(0.5, 1e4, kAlpha), 45.016, 5e-3);
}

TEST(Intensity, ExactClosedEnvelope) {
    const double t = 1e4;
    for (double x : {0.2, 0.3, 0.4, 0.5})
        EXPECT_LE(std::abs(first_intensity(x, t, kAlphaInterior, IntensityMode::exact) /
                               first_intensity(x, t, kAlphaInterior, IntensityMode::closed) -
                           1.0),
                  envelope(t))
            << "x=" << x;
}

TEST(Intensity, SqrtTScaling) {
    const double a = first_intensity(0.3, 4000.0, kAlpha);
    const double b = first_intensity(0.3, 1000.0, kAlpha);
    EXPECT_NEAR(a / b, 2.0, 1e-12);
    EXPECT_THROW(first_intensity(0.0, 1000.0, kAlpha), std::domain_error);
}

TEST(ExpectedCritical, ClosedAntiderivativeAndEmpty) {
    const double t = 2000.0, a = 0.2, b = 0.5;
    const double closed = expected_critical_points(a, b, t, kAlpha);
    const double quad = integrate_adaptive(
        [&](double x) { return first_intensity(x, t, kAlpha); }, a, b, 1e-10);
    EXPECT_NEAR(closed, quad, 1e-8 * closed);
    EXPECT_EQ(expected_critical_points(0.3, 0.3, t, kAlpha), 0.0);
}

TEST(SecondMoment, CubicSmallIntervalScaling) {
    const double t = 2000.0, x = 0.35;
    const double h0 = 1.0 / std::sqrt(t);
    const double m1 = second_factorial_moment(x, h0, t, kAlpha).value;
    const double m2 = second_factorial_moment(x, h0 / 2.0, t, kAlpha).value;
    const double m4 = second_factorial_moment(x, h0 / 4.0, t, kAlpha).value;
    EXPECT_TRUE(std::isfinite(m1));
    EXPECT_GT(m1, 0.0);
    // value / h^3 stays within a factor two while h shrinks
    const double n1 = m1 / std::pow(h0, 3);
    const double n2 = m2 / std::pow(h0 / 2.0, 3);
    const double n4 = m4 / std::pow(h0 / 4.0, 3);
    EXPECT_GE(n2 / n1, 0.5);
    EXPECT_LE(n2 / n1, 2.0);
    EXPECT_GE(n4 / n2, 0.5);
    EXPECT_LE(n4 / n2, 2.0);
}

TEST(ExpectedLength, ZeroScalingAndQuadratureMatch) {
    const double t = 1e4, delta = 0.1;
    EXPECT_EQ(expected_length(kAlpha, kAlpha, t), 0.0);
    const double c1 = expected_length(delta, kAlpha, t);
    const double c16 = expected_length(delta, kAlpha, 16.0 * t);
    EXPECT_NEAR(c16 / c1, 2.0, 1e-12);
    const double exact = expected_length(delta, kAlpha, t, LengthMode::exact);
    EXPECT_NEAR(exact, c1, 0.02 * c1); // quadrature within 2 percent
}

TEST(Certified, FloorFlag) {
    EXPECT_TRUE(analytics_certified(0.05));
    EXPECT_FALSE(analytics_certified(0.04));
}

TEST(ScanCsv, HeaderAndRatioColumns) {
    std::ostringstream out;
    write_scan_csv(out, "x", {0.25, 0.5}, {2.0, 3.0}, {1.0, 6.0},
                   {{"alpha", 0.5}, {"t", 1000.0}});
    const std::string s = out.str();
    EXPECT_EQ(s.substr(0, 1), "#");
    EXPECT_NE(s.find("alpha=0.5"), std::string::npos);
    EXPECT_NE(s.find("x,exact,closed_form,ratio"), std::string::npos);
    EXPECT_NE(s.find("0.25,2,1,2"), std::string::npos);
    EXPECT_NE(s.find("0.5,3,6,0.5"), std::string::npos);
}

// MC oracle for the second factorial moment on an interval of width 1/sqrt(t).
TEST(SecondMoment, MatchesMonteCarlo) {
    const double t = 2000.0, alpha = 0.6, x = 0.35;
    const double h = 1.0 / std::sqrt(t);
    const auto quad = second_factorial_moment(x, h, t, alpha);
    KernelSpec spec{alpha, t, 512, 6.0};
    const int reps = 10000;
    auto pairs = run_replicas<double>(reps, 2, [&](int r) {
        auto gen = seeded_normals()(1234, static_cast<std::uint64_t>(r));
        auto p01 = build_path_increments(gen, 1.0, 1.0 / t);
        const double n = static_cast<double>(
            exp_detail::critical_points_of_field(p01, x, x + h, spec).size());
        return n * (n - 1.0);
    });
    const double mc = stats::mean(pairs);
    EXPECT_GT(mc, 0.0);
    EXPECT_GE(mc / quad.value, 0.5);
    EXPECT_LE(mc / quad.value, 2.0);
}

TEST(Intensity, CurveBuilder) {
    auto c = intensity_curve(2000.0, 0.6, {0.2, 0.3, 0.4});
    ASSERT_EQ(c.exact.size(), 3u);
    for (std::size_t i = 0; i < c.grid.size(); ++i) {
        EXPECT_GT(c.exact[i], 0.0);
        EXPECT_GT(c.closed_form[i], 0.0);
        EXPECT_NEAR(c.exact[i] / c.closed_form[i], 1.0, 0.05);
    }
}
