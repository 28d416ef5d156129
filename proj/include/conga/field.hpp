#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "conga/brownian.hpp"
#include "conga/hermite.hpp"
#include "conga/io.hpp"
#include "conga/math.hpp"
#include "conga/quadrature.hpp"

namespace conga {

/// Parameter bundle for every kernel evaluation of the smooth field.
struct KernelSpec {
    double alpha = 0.5;
    double t = 1000.0;
    std::size_t quadrature_points = 2048; // floor 64 for the default tolerance
    double window_m = 6.0;

    double sigma() const { return std::sqrt(alpha * (1.0 - alpha)); }
    double sigma_t() const { return sigma() / std::sqrt(t); }
    double rho() const { return sigma() / std::pow(alpha, 1.5); }

    void validate() const {
        if (!(alpha > 0.0 && alpha < 1.0))
            throw std::invalid_argument("KernelSpec: alpha must lie in (0,1)");
        if (!(t > 0.0)) throw std::invalid_argument("KernelSpec: t must be positive");
        if (quadrature_points < 64)
            throw std::invalid_argument("KernelSpec: quadrature_points must be >= 64");
        if (!(window_m > 2.0)) throw std::invalid_argument("KernelSpec: window_M must exceed 2");
    }
};

struct FieldValue {
    double value = 0.0;
    double tail_bound = 0.0; // bound on the mass dropped outside the window
};

namespace field_detail {

// Shared between the scaled field (sig = sigma/sqrt(t), domain (0,1]) and the
// unscaled one (sig = sigma, domain (0,t]).
struct KernelCtx {
    double alpha;
    double sig;
};

inline double xi(const KernelCtx& k, double x, double s) {
    return (x - k.alpha * s) / (k.sig * std::sqrt(s));
}

// Weight of the integration-by-parts form of the field itself:
// d/ds PhiBar(xi(x,s)).
inline double weight0(const KernelCtx& k, double x, double s) {
    return (x + k.alpha * s) / (2.0 * k.sig * std::pow(s, 1.5)) * normal_pdf(xi(k, x, s));
}

// K^n(x,s) = (sig sqrt s)^{-(n+1)} (-1)^{n+1} He_n(xi) phi(xi); the m-th
// spatial derivative of the field is the integral of W against d/ds K^{m-1}.
inline double K_value(const KernelCtx& k, int n, double x, double s) {
    const double z = xi(k, x, s);
    const double sign = (n % 2 == 0) ? -1.0 : 1.0; // (-1)^{n+1}
    return sign * std::pow(k.sig * std::sqrt(s), -(n + 1)) * hermite(n, z) * normal_pdf(z);
}

inline double weight_m(const KernelCtx& k, int m, double x, double s) {
    if (m == 0) return weight0(k, x, s);
    const int n = m - 1;
    const double z = xi(k, x, s);
    const double pdf = normal_pdf(z);
    const double sign_n = (n % 2 == 0) ? 1.0 : -1.0;
    const double a = sign_n * static_cast<double>(m) /
                     (2.0 * std::pow(k.sig, m) * std::pow(s, 0.5 * (m + 2))) *
                     hermite(n, z) * pdf;
    const double b = -sign_n * (x + k.alpha * s) / (2.0 * k.sig * std::pow(s, 1.5)) *
                     std::pow(k.sig * std::sqrt(s), -m) * hermite(m, z) * pdf;
    return a + b;
}

// s with xi(x,s) = c (monotone decreasing in s).
inline double s_at_xi(const KernelCtx& k, double x, double c) {
    const double root = (-c * k.sig + std::sqrt(sqr(c * k.sig) + 4.0 * k.alpha * x)) /
                        (2.0 * k.alpha);
    return sqr(root);
}

// Window half-width in kernel standard deviations, the sigma-unit equivalent
// of the L_t^x(M) policy; t_over_x is t divided by the scaled coordinate.
inline double window_q(double alpha, double sigma, double window_m, double t_over_x, int m) {
    const double q =
        std::sqrt(alpha * window_m * std::log(std::max(t_over_x, std::exp(1.0)))) / sigma;
    return std::clamp(q + (m > 0 ? m + 2.0 : 0.0), 8.0, 37.0);
}

struct Window {
    double lo, hi;
};

inline Window window(const KernelCtx& k, double x, double q, double domain_end) {
    Window w{s_at_xi(k, x, q), s_at_xi(k, x, -q)};
    w.lo = std::max(0.0, w.lo);
    w.hi = std::min(domain_end, w.hi);
    return w;
}

// Tail bound for the dropped mass, times ||W|| supplied by the caller.
inline double tail_factor(const KernelCtx& k, int m, double x, const Window& w,
                          double domain_end) {
    if (m == 0) {
        double f = normal_cdf(-xi(k, x, std::max(w.lo, 1e-300))); // PhiBar(xi(lo))
        if (w.hi < domain_end)
            f += std::abs(normal_cdf(-xi(k, x, domain_end)) - normal_cdf(-xi(k, x, w.hi)));
        return f;
    }
    double f = std::abs(K_value(k, m - 1, x, std::max(w.lo, 1e-300)));
    if (w.hi < domain_end)
        f += std::abs(K_value(k, m - 1, x, w.hi)) + std::abs(K_value(k, m - 1, x, domain_end));
    return f;
}

template <class PathAt>
FieldValue integrate(const KernelCtx& k, int m, double x, double q, double domain_end,
                     const PathAt& path_at, std::size_t points, double align_step,
                     double anchor, double w_sup) {
    const Window w = window(k, x, q, domain_end);
    FieldValue out;
    out.value = midpoint_aligned(
        [&](double s) { return path_at(s) * weight_m(k, m, x, s); }, w.lo, w.hi, points,
        align_step, anchor);
    out.tail_bound = w_sup * tail_factor(k, m, x, w, domain_end);
    return out;
}

} // namespace field_detail

/// Exact mass of the order-0 kernel between s = a and s = b (scaled
/// coordinates): PhiBar(xi(b)) - PhiBar(xi(a)).
inline double kernel_mass(const KernelSpec& spec, double x, double a, double b) {
    const field_detail::KernelCtx k{spec.alpha, spec.sigma_t()};
    const double ma = a <= 0.0 ? 0.0 : normal_tail(field_detail::xi(k, x, a));
    return normal_tail(field_detail::xi(k, x, b)) - ma;
}

/// m-th derivative (m = 0 is the field itself) of the scaled field u_t at
/// x in (0,1], one component, with the dropped-tail bound reported.
inline FieldValue eval_scaled_full(const BrownianPath& path01, double x, int m,
                                   const KernelSpec& spec, int comp = 0) {
    spec.validate();
    if (!(x > 0.0 && x <= 1.0))
        throw std::domain_error("eval_scaled: x must lie in (0,1]");
    const field_detail::KernelCtx k{spec.alpha, spec.sigma_t()};
    const double q =
        field_detail::window_q(spec.alpha, spec.sigma(), spec.window_m, spec.t / x, m);
    return field_detail::integrate(
        k, m, x, q, 1.0, [&](double s) { return path01.value(1.0 - s, comp); },
        spec.quadrature_points, path01.grid_step, 1.0, path01.sup_abs(comp));
}

inline double eval_scaled(const BrownianPath& path01, double x, const KernelSpec& spec,
                          int comp = 0) {
    return eval_scaled_full(path01, x, 0, spec, comp).value;
}

inline double eval_scaled_derivative(const BrownianPath& path01, double x, int m,
                                     const KernelSpec& spec, int comp = 0) {
    if (m < 1) throw std::invalid_argument("eval_scaled_derivative: m must be >= 1");
    return eval_scaled_full(path01, x, m, spec, comp).value;
}

inline Vec2 eval_scaled2(const BrownianPath& path01, double x, const KernelSpec& spec,
                         int m = 0) {
    return {eval_scaled_full(path01, x, m, spec, 0).value,
            path01.dims == 2 ? eval_scaled_full(path01, x, m, spec, 1).value : 0.0};
}

/// Unscaled field u(x,t) evaluated directly on the driving path (quadrature
/// in the time variable over (0,t]).
inline FieldValue eval_u_full(const BrownianPath& path, double x, double t, int m,
                              const KernelSpec& spec, int comp = 0) {
    spec.validate();
    if (!(x > 0.0)) throw std::domain_error("eval_u: x must be positive");
    if (t > path.horizon * (1.0 + 1e-12))
        throw std::invalid_argument("eval_u: t beyond path horizon");
    const field_detail::KernelCtx k{spec.alpha, spec.sigma()};
    const double q =
        field_detail::window_q(spec.alpha, spec.sigma(), spec.window_m, t * t / x, m);
    return field_detail::integrate(
        k, m, x, q, t, [&](double z) { return path.value(t - z, comp); },
        spec.quadrature_points, path.grid_step, t, path.sup_abs(comp));
}

inline double eval_u(const BrownianPath& path, double x, double t, const KernelSpec& spec,
                     int comp = 0) {
    return eval_u_full(path, x, t, 0, spec, comp).value;
}

inline double eval_u_derivative(const BrownianPath& path, double x, double t,
                                const KernelSpec& spec, int comp = 0) {
    return eval_u_full(path, x, t, 1, spec, comp).value;
}

/// The alternate smooth field: u_bar(x,t) = E W(t - x/alpha - Z) with
/// Z ~ N(0, rho^2 x); the path is 0 at negative times, so the quadrature
/// clips there.
inline double eval_u_bar(const BrownianPath& path, double x, double t, const KernelSpec& spec,
                         int comp = 0) {
    spec.validate();
    if (!(x > 0.0)) throw std::domain_error("eval_u_bar: x must be positive");
    if (t > path.horizon * (1.0 + 1e-12))
        throw std::invalid_argument("eval_u_bar: t beyond path horizon");
    const double sd = spec.rho() * std::sqrt(x);
    const double center = t - x / spec.alpha;
    const double q = std::clamp(std::sqrt(spec.window_m * std::log(std::max(spec.t, 3.0))),
                                8.0, 37.0);
    const double lo = std::max(0.0, center - q * sd);
    const double hi = center + q * sd;
    if (hi > path.horizon * (1.0 + 1e-12))
        throw std::invalid_argument("eval_u_bar: path horizon must reach " +
                                    std::to_string(hi));
    if (!(hi > lo)) return 0.0;
    return midpoint_aligned(
        [&](double u) { return path.value(u, comp) * normal_pdf((center - u) / sd) / sd; },
        lo, hi, spec.quadrature_points, path.grid_step);
}

/// Smoothing operator P_t applied to an arbitrary function on [0,1].
inline double apply_kernel_to_function(const std::function<double(double)>& f, double x,
                                       const KernelSpec& spec) {
    spec.validate();
    if (!(x > 0.0 && x <= 1.0))
        throw std::domain_error("apply_kernel_to_function: x must lie in (0,1]");
    const field_detail::KernelCtx k{spec.alpha, spec.sigma_t()};
    const double q =
        field_detail::window_q(spec.alpha, spec.sigma(), spec.window_m, spec.t / x, 0);
    const field_detail::Window w = field_detail::window(k, x, q, 1.0);
    return midpoint_aligned(
        [&](double s) { return f(1.0 - s) * field_detail::weight0(k, x, s); }, w.lo, w.hi,
        spec.quadrature_points, 0.0);
}

/// The windowed approximation: the smoothing integral is restricted to a
/// three-interval window of the partition and the path is re-based at the
/// window's left edge, which makes pieces three intervals apart independent.
class WindowedField {
public:
    WindowedField(const KernelSpec& spec, double delta) : spec_(spec), delta_(delta) {
        spec.validate();
        width_ = std::sqrt(spec.window_m * std::log(spec.t) / spec.t);
        lo_ = delta - 2.0 * width_;
        if (!(lo_ > 0.0))
            throw std::invalid_argument("WindowedField: t too small for delta (partition "
                                        "would cross zero)");
        const double top = spec.alpha + width_;
        count_ = static_cast<std::size_t>(std::ceil((top - lo_) / width_)) + 4;
    }

    double covered_lo() const { return node(1); }
    double covered_hi() const { return node(count_ - 2); }

    /// Partition node y_j.
    double node(std::size_t j) const { return lo_ + width_ * static_cast<double>(j); }

    /// Index j with x in [y_j, y_{j+1}).
    std::size_t interval_of(double x) const {
        if (!(x >= covered_lo() && x <= covered_hi()))
            throw std::domain_error("WindowedField: x outside covered interval");
        auto j = static_cast<std::size_t>((x - lo_) / width_);
        return std::clamp<std::size_t>(j, 1, count_ - 3);
    }

    /// Integration bounds in s for x in interval j: [y_{j-1}/alpha, y_{j+2}/alpha].
    std::pair<double, double> segment(std::size_t j) const {
        return {node(j - 1) / spec_.alpha, node(j + 2) / spec_.alpha};
    }

    /// Time the path is re-based at for interval j.
    double rebase_time(std::size_t j) const { return 1.0 - node(j - 1) / spec_.alpha; }

    double eval(const BrownianPath& path01, double x, int comp = 0) const {
        const std::size_t j = interval_of(x);
        const auto [slo, shi] = segment(j);
        const double w0 = path01.value(rebase_time(j), comp);
        const field_detail::KernelCtx k{spec_.alpha, spec_.sigma_t()};
        return midpoint_aligned(
            [&](double s) {
                return (path01.value(1.0 - s, comp) - w0) * field_detail::weight0(k, x, s);
            },
            slo, shi, spec_.quadrature_points, path01.grid_step, 1.0);
    }

private:
    KernelSpec spec_;
    double delta_;
    double width_;
    double lo_;
    std::size_t count_;
};

namespace field_detail {
inline double freezing_rate(const KernelSpec& spec, double eta) {
    return eta / (sqr(spec.rho()) * spec.alpha * (1.0 + eta));
}

inline void check_eta(const KernelSpec& spec, double eta) {
    if (!(eta > 0.0 && eta < (1.0 - spec.alpha) / spec.alpha))
        throw std::domain_error("tail field: eta must lie in (0, (1-alpha)/alpha)");
}
} // namespace field_detail

/// Rescaled tail value v_t(eta): the Gaussian-weighted integral of the path
/// at distance alpha(1+eta)t from the tip, truncated where the weight drops
/// below 1e-12.
inline double tail_rescaled(const BrownianPath& path, double eta, double t,
                            const KernelSpec& spec, int comp = 0) {
    spec.validate();
    field_detail::check_eta(spec, eta);
    const double c = field_detail::freezing_rate(spec, eta);
    const double beta = 1.0 / (2.0 * sqr(spec.rho()) * t * spec.alpha * (1.0 + eta));
    const double logcut = -std::log(1e-12);
    const double smax = (-c + std::sqrt(c * c + 4.0 * beta * logcut)) / (2.0 * beta);
    if (path.horizon < smax)
        throw std::invalid_argument("tail_rescaled: path horizon must reach " +
                                    std::to_string(smax));
    return midpoint_aligned(
        [&](double s) { return path.value(s, comp) * std::exp(-beta * s * s - c * s); }, 0.0,
        smax, spec.quadrature_points, path.grid_step);
}

/// Limit functional v(eta) of the freezing theorem, truncated where the
/// exponential weight drops below 1e-12.
inline double freezing_limit(const BrownianPath& path, double eta, const KernelSpec& spec,
                             int comp = 0) {
    spec.validate();
    field_detail::check_eta(spec, eta);
    const double c = field_detail::freezing_rate(spec, eta);
    const double smax = -std::log(1e-12) / c;
    if (path.horizon < smax)
        throw std::invalid_argument("freezing_limit: path horizon must reach " +
                                    std::to_string(smax) + " for the weight cutoff");
    return midpoint_aligned(
        [&](double s) { return path.value(s, comp) * std::exp(-c * s); }, 0.0, smax,
        spec.quadrature_points, path.grid_step);
}

/// Curve dump: '#' header lines with the evaluation parameters, then rows
/// x,u1[,u2].
inline void write_curve_csv(std::ostream& out, const std::vector<double>& xs,
                            const std::vector<Vec2>& values, const KernelSpec& spec,
                            std::uint64_t seed, bool two_components) {
    out << "# alpha=" << format_float(spec.alpha) << " t=" << format_float(spec.t)
        << " seed=" << seed << " quadrature_points=" << spec.quadrature_points << '\n';
    out << (two_components ? "x,u1,u2\n" : "x,u1\n");
    for (std::size_t i = 0; i < xs.size(); ++i) {
        out << format_float(xs[i]) << ',' << format_float(values[i].x);
        if (two_components) out << ',' << format_float(values[i].y);
        out << '\n';
    }
}

/// Upper bound on |d^m u_t / dx^m| in terms of ||W|| for 0 < eps < x/alpha.
inline double derivative_growth_bound(const KernelSpec& spec, double x, int m, double eps,
                                      double w_sup) {
    const double fac = std::tgamma(m + 1.0);
    const double r1 = std::sqrt(2.0) / (x - spec.alpha * eps);
    const double r2 = 1.0 / (spec.sigma_t() * std::sqrt(eps));
    const double a = std::pow(2.0 * std::numbers::pi, 0.25) * w_sup *
                     (std::pow(r1, m) + std::pow(r1, m - 1) / x) * fac;
    const double b = w_sup * (std::pow(r2, m) + m * std::pow(r2, m - 1) / x) * std::sqrt(fac);
    return a + b;
}

} // namespace conga
