#pragma once

#include <cmath>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "conga/field.hpp"
#include "conga/io.hpp"
#include "conga/math.hpp"
#include "conga/quadrature.hpp"

namespace conga {

/// Everything in this header is certified on x >= kCertifiedFloor; smaller x
/// is permitted but outside the calibrated regime.
inline constexpr double kCertifiedFloor = 0.05;
inline bool analytics_certified(double x) { return x >= kCertifiedFloor; }

namespace analytics_detail {

struct Ctx {
    double alpha, sigma, sigma_t, t;
    explicit Ctx(double alpha_, double t_)
        : alpha(alpha_), sigma(std::sqrt(alpha_ * (1.0 - alpha_))),
          sigma_t(std::sqrt(alpha_ * (1.0 - alpha_) / t_)), t(t_) {}

    double xi(double x, double s) const { return (x - alpha * s) / (sigma_t * std::sqrt(s)); }

    // first-derivative kernel K0 and second-derivative kernel K1 of the
    // scaled field
    double K0(double x, double s) const { return -normal_pdf(xi(x, s)) / (sigma_t * std::sqrt(s)); }
    double K1(double x, double s) const {
        const double z = xi(x, s);
        return z * normal_pdf(z) / (sigma_t * sigma_t * s);
    }

    std::vector<double> breaks(double x) const {
        const field_detail::KernelCtx k{alpha, sigma_t};
        const double q = 37.0;
        return {std::max(1e-14, field_detail::s_at_xi(k, x, q)), x / alpha,
                field_detail::s_at_xi(k, x, -q)};
    }

    std::vector<double> breaks2(double x, double y) const {
        auto b = breaks(x);
        auto c = breaks(y);
        b.insert(b.end(), c.begin(), c.end());
        return b;
    }
};

template <class F>
double integrate01(const Ctx& c, double x, const F& f, double rel = 1e-9) {
    return integrate_adaptive_breaks(f, 1e-14, 1.0, c.breaks(x), rel);
}

template <class F>
double integrate01_pair(const Ctx& c, double x, double y, const F& f, double rel = 1e-9) {
    return integrate_adaptive_breaks(f, 1e-14, 1.0, c.breaks2(x, y), rel);
}

} // namespace analytics_detail

/// Var(u(x,t)) = integral over (0,t] of PhiBar^2((x - alpha y)/(sigma sqrt y)).
inline double variance_u(double x, double t, double alpha, double rel_tol = 1e-8) {
    if (x < 0.0 || !(t > 0.0)) throw std::domain_error("variance_u: need x >= 0, t > 0");
    const double sigma = std::sqrt(alpha * (1.0 - alpha));
    auto f = [&](double y) {
        if (y <= 0.0) return 0.0;
        return sqr(normal_tail((x - alpha * y) / (sigma * std::sqrt(y))));
    };
    const field_detail::KernelCtx k{alpha, sigma};
    std::vector<double> brk{std::max(0.0, field_detail::s_at_xi(k, x, 37.0)),
                            std::min(t, x / alpha),
                            std::min(t, field_detail::s_at_xi(k, x, -37.0))};
    return integrate_adaptive_breaks(f, 0.0, t, brk, rel_tol);
}

struct CutoffRow {
    double lambda = 0.0;
    double x = 0.0;
    double variance = 0.0;
    double prediction = 0.0; // t^{1/2-lambda} / (log t)^{3/2}
};

/// Variance at the lambda-shifted locations x = alpha t + sigma sqrt(lambda t log t).
inline std::vector<CutoffRow> variance_cutoff_scan(double t, const std::vector<double>& lambdas,
                                                   double alpha) {
    const double sigma = std::sqrt(alpha * (1.0 - alpha));
    std::vector<CutoffRow> rows;
    for (double lam : lambdas) {
        if (!(lam > 0.0)) throw std::domain_error("variance_cutoff_scan: lambda must be > 0");
        CutoffRow r;
        r.lambda = lam;
        r.x = alpha * t + sigma * std::sqrt(lam * t * std::log(t));
        r.variance = variance_u(r.x, t, alpha);
        r.prediction = std::pow(t, 0.5 - lam) / std::pow(std::log(t), 1.5);
        rows.push_back(r);
    }
    return rows;
}

/// Location where the variance is calibrated to a target level (the sharp
/// transition shifted by -log(target) inside the sqrt).
inline double variance_calibrated_location(double t, double target, double alpha) {
    const double sigma = std::sqrt(alpha * (1.0 - alpha));
    const double inner = 0.5 * std::log(t) - 1.5 * std::log(std::log(t)) - std::log(target);
    return alpha * t + sigma * std::sqrt(t * inner);
}

struct ExactClosed {
    double exact = 0.0;
    double closed = 0.0;
};

/// Cov(u_t'(x), u_t'(y)): defining quadrature plus the Gaussian closed form.
inline ExactClosed cov_first(double x, double y, double t, double alpha) {
    analytics_detail::Ctx c(alpha, t);
    ExactClosed r;
    r.exact = analytics_detail::integrate01_pair(
        c, x, y, [&](double s) { return c.K0(x, s) * c.K0(y, s); });
    const double eta = std::sqrt(0.5 * (x * x + y * y));
    r.closed = std::exp(-2.0 * alpha * t / sqr(c.sigma) * (eta - 0.5 * (x + y))) *
               std::sqrt(t) /
               (2.0 * std::sqrt(std::numbers::pi * alpha) * c.sigma * std::sqrt(eta));
    return r;
}

/// Var(u_t''(x)).
inline ExactClosed var_second(double x, double t, double alpha) {
    analytics_detail::Ctx c(alpha, t);
    ExactClosed r;
    r.exact = analytics_detail::integrate01(c, x, [&](double s) { return sqr(c.K1(x, s)); });
    r.closed = std::sqrt(alpha) * std::pow(t, 1.5) /
               (4.0 * std::sqrt(std::numbers::pi) * std::pow(c.sigma, 3) * std::pow(x, 1.5));
    return r;
}

/// Cov(u_t'(x), u_t''(x)), signed quadrature (no closed form; bound of order
/// sqrt(t log t)).
inline double cov_mixed(double x, double t, double alpha) {
    analytics_detail::Ctx c(alpha, t);
    return analytics_detail::integrate01(c, x,
                                         [&](double s) { return c.K0(x, s) * c.K1(x, s); });
}

inline double cov_cross_12(double x, double y, double t, double alpha) {
    analytics_detail::Ctx c(alpha, t);
    return analytics_detail::integrate01_pair(
        c, x, y, [&](double s) { return c.K1(x, s) * c.K0(y, s); });
}

inline double cov_cross_22(double x, double y, double t, double alpha) {
    analytics_detail::Ctx c(alpha, t);
    return analytics_detail::integrate01_pair(
        c, x, y, [&](double s) { return c.K1(x, s) * c.K1(y, s); });
}

/// det of the covariance of (u_t'(x), u_t'(y)) from quadrature entries.
inline double det_sigma(double x, double y, double t, double alpha) {
    const double vx = cov_first(x, x, t, alpha).exact;
    const double vy = (y == x) ? vx : cov_first(y, y, t, alpha).exact;
    const double cxy = (y == x) ? vx : cov_first(x, y, t, alpha).exact;
    return vx * vy - cxy * cxy;
}

struct CovarianceReport {
    double x = 0.0, y = 0.0, t = 0.0;
    double cov_first = 0.0;
    double var_second = 0.0;
    double cov_mixed = 0.0;
    double det_sigma = 0.0;
    double correlation = 0.0; // between u'(x) and u'(y)
};

inline CovarianceReport covariance_report(double x, double y, double t, double alpha) {
    CovarianceReport r;
    r.x = x;
    r.y = y;
    r.t = t;
    const double vx = cov_first(x, x, t, alpha).exact;
    const double vy = cov_first(y, y, t, alpha).exact;
    r.cov_first = cov_first(x, y, t, alpha).exact;
    r.var_second = var_second(x, t, alpha).exact;
    r.cov_mixed = cov_mixed(x, t, alpha);
    r.det_sigma = vx * vy - sqr(r.cov_first);
    r.correlation = r.cov_first / std::sqrt(vx * vy);
    return r;
}

enum class IntensityMode { exact, closed };

/// First intensity of the critical-point process of u_t on (0, alpha].
inline double first_intensity(double x, double t, double alpha,
                              IntensityMode mode = IntensityMode::closed) {
    if (!(x > 0.0)) throw std::domain_error("first_intensity: x must be positive");
    const double sigma = std::sqrt(alpha * (1.0 - alpha));
    if (mode == IntensityMode::closed)
        return std::sqrt(alpha * t) / (std::numbers::pi * sigma * std::sqrt(2.0 * x));
    const double v1 = cov_first(x, x, t, alpha).exact;
    const double v2 = var_second(x, t, alpha).exact;
    const double c12 = cov_mixed(x, t, alpha);
    return std::sqrt(std::max(0.0, v1 * v2 - c12 * c12)) / (std::numbers::pi * v1);
}

/// E N_t([a,b]) by integrating the intensity.
inline double expected_critical_points(double a, double b, double t, double alpha,
                                       IntensityMode mode = IntensityMode::closed) {
    if (!(b >= a)) throw std::domain_error("expected_critical_points: need a <= b");
    if (a == b) return 0.0;
    const double sigma = std::sqrt(alpha * (1.0 - alpha));
    if (mode == IntensityMode::closed)
        return std::sqrt(2.0 * alpha * t) / (std::numbers::pi * sigma) *
               (std::sqrt(b) - std::sqrt(a));
    return integrate_adaptive(
        [&](double x) { return first_intensity(x, t, alpha, IntensityMode::exact); }, a, b,
        1e-7);
}

struct IntensityCurve {
    double t = 0.0;
    std::vector<double> grid;
    std::vector<double> exact;
    std::vector<double> closed_form;
};

inline IntensityCurve intensity_curve(double t, double alpha, const std::vector<double>& grid) {
    IntensityCurve c;
    c.t = t;
    c.grid = grid;
    for (double x : grid) {
        c.exact.push_back(first_intensity(x, t, alpha, IntensityMode::exact));
        c.closed_form.push_back(first_intensity(x, t, alpha, IntensityMode::closed));
    }
    return c;
}

struct SecondMoment {
    double value = 0.0;     // E(N^2 - N) over [x, x+h]
    double reference = 0.0; // h^3 t^{3/2}, the bound's shape
};

/// Second factorial moment of the critical-point count on [x, x+h] by the
/// Gaussian conditional-moment formula, 2D quadrature with the degenerate
/// diagonal band excluded.
inline SecondMoment second_factorial_moment(double x, double h, double t, double alpha,
                                            int ny = 48) {
    analytics_detail::Ctx c(alpha, t);
    const int nz = ny + 1; // offset grids keep y != z
    const double band = 1e-6 * h;
    const double hy = h / ny, hz = h / nz;

    // cache 1D quantities on the two grids
    auto v1 = [&](double a) {
        return analytics_detail::integrate01(c, a, [&](double s) { return sqr(c.K0(a, s)); });
    };
    auto v2 = [&](double a) {
        return analytics_detail::integrate01(c, a, [&](double s) { return sqr(c.K1(a, s)); });
    };
    auto c12self = [&](double a) { return cov_mixed(a, t, alpha); };

    std::vector<double> ys(ny), zs(nz), v1y(ny), v2y(ny), m12y(ny), v1z(nz), v2z(nz), m12z(nz);
    for (int i = 0; i < ny; ++i) {
        ys[i] = x + (i + 0.5) * hy;
        v1y[i] = v1(ys[i]);
        v2y[i] = v2(ys[i]);
        m12y[i] = c12self(ys[i]);
    }
    for (int j = 0; j < nz; ++j) {
        zs[j] = x + (j + 0.5) * hz;
        v1z[j] = v1(zs[j]);
        v2z[j] = v2(zs[j]);
        m12z[j] = c12self(zs[j]);
    }

    double acc = 0.0;
    for (int i = 0; i < ny; ++i) {
        for (int j = 0; j < nz; ++j) {
            const double y = ys[i], z = zs[j];
            if (std::abs(y - z) < band) continue;
            const double c11 = analytics_detail::integrate01_pair(
                c, y, z, [&](double s) { return c.K0(y, s) * c.K0(z, s); });
            const double det22 = v1y[i] * v1z[j] - c11 * c11;
            if (det22 <= 0.0) continue;
            const double c22 = analytics_detail::integrate01_pair(
                c, y, z, [&](double s) { return c.K1(y, s) * c.K1(z, s); });
            const double cyz = analytics_detail::integrate01_pair(
                c, y, z, [&](double s) { return c.K1(y, s) * c.K0(z, s); });
            const double czy = analytics_detail::integrate01_pair(
                c, y, z, [&](double s) { return c.K1(z, s) * c.K0(y, s); });
            // Sigma* = Sigma11 - Sigma12 Sigma22^{-1} Sigma21 with
            // Sigma12 = [[m12y, cyz], [czy, m12z]]
            const double i00 = v1z[j] / det22, i11 = v1y[i] / det22, i01 = -c11 / det22;
            const double a0 = m12y[i] * i00 + cyz * i01, a1 = m12y[i] * i01 + cyz * i11;
            const double b0 = czy * i00 + m12z[j] * i01, b1 = czy * i01 + m12z[j] * i11;
            const double s00 = v2y[i] - (a0 * m12y[i] + a1 * cyz);
            const double s11 = v2z[j] - (b0 * czy + b1 * m12z[j]);
            const double s01 = c22 - (a0 * czy + a1 * m12z[j]);
            if (s00 <= 0.0 || s11 <= 0.0) continue;
            double r = s01 / std::sqrt(s00 * s11);
            r = std::clamp(r, -1.0, 1.0);
            const double e_abs = 2.0 / std::numbers::pi * std::sqrt(s00 * s11) *
                                 (r * std::asin(r) + std::sqrt(1.0 - r * r));
            const double density = 1.0 / (2.0 * std::numbers::pi * std::sqrt(det22));
            acc += e_abs * density * hy * hz;
        }
    }
    return {acc, h * h * h * std::pow(t, 1.5)};
}

enum class LengthMode { exact, closed };

/// Expected polyline length of the two dimensional scaled field on
/// [delta, alpha]: closed form, or the quadrature of
/// sqrt(pi/2) sqrt(Var u_t'(x)) dx.
inline double expected_length(double delta, double alpha, double t,
                              LengthMode mode = LengthMode::closed) {
    if (!(delta >= 0.0 && delta <= alpha))
        throw std::domain_error("expected_length: need 0 <= delta <= alpha");
    const double sigma = std::sqrt(alpha * (1.0 - alpha));
    if (mode == LengthMode::closed) {
        return 2.0 * std::pow(std::numbers::pi, 0.25) * std::pow(t, 0.25) /
               (3.0 * std::sqrt(sigma) * std::pow(alpha, 0.25)) *
               (std::pow(alpha, 0.75) - std::pow(delta, 0.75));
    }
    return integrate_adaptive(
        [&](double x) {
            const double v = cov_first(x, x, t, alpha).exact;
            return std::sqrt(0.5 * std::numbers::pi * v);
        },
        delta, alpha, 1e-7);
}

/// Scan CSV: '#'-prefixed parameter header then x (or lambda), exact,
/// closed_form, ratio.
inline void write_scan_csv(std::ostream& out, const std::string& coord_name,
                           const std::vector<double>& coord, const std::vector<double>& exact,
                           const std::vector<double>& closed,
                           const std::vector<std::pair<std::string, double>>& params) {
    out << "#";
    for (const auto& [k, v] : params) out << ' ' << k << '=' << format_float(v);
    out << '\n' << coord_name << ",exact,closed_form,ratio\n";
    for (std::size_t i = 0; i < coord.size(); ++i) {
        const double ratio = closed[i] != 0.0 ? exact[i] / closed[i] : 0.0;
        out << format_float(coord[i]) << ',' << format_float(exact[i]) << ','
            << format_float(closed[i]) << ',' << format_float(ratio) << '\n';
    }
}

} // namespace conga
