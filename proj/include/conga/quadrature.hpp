#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "conga/math.hpp"

namespace conga {

namespace detail {

// Gauss 7 / Kronrod 15 node-weight table on [-1,1] (abscissa, Gauss w, Kronrod w).
inline constexpr double gk_nw[8][3] = {
    {0.000000000000000, 0.417959183673469, 0.209482141084728},
    {0.405845151377397, 0.381830050505119, 0.190350578064785},
    {0.741531185599394, 0.279705391489277, 0.140653259715525},
    {0.949107912342759, 0.129484966168870, 0.063092092629979},
    {0.207784955007898, 0.0, 0.204432940075298},
    {0.586087235467691, 0.0, 0.169004726639267},
    {0.864864423359769, 0.0, 0.104790010322250},
    {0.991455371120813, 0.0, 0.022935322010529}};

template <class F>
double gk15(const F& f, double a, double b, double& err) {
    const double mid = 0.5 * (a + b);
    const double half = b - mid;
    const double f0 = f(mid);
    double g7 = gk_nw[0][1] * f0;
    double k15 = gk_nw[0][2] * f0;
    for (int i = 1; i < 8; ++i) {
        const double dx = half * gk_nw[i][0];
        const double fi = f(mid + dx) + f(mid - dx);
        g7 += gk_nw[i][1] * fi;
        k15 += gk_nw[i][2] * fi;
    }
    g7 *= half;
    k15 *= half;
    err = std::pow(200.0 * std::abs(g7 - k15), 1.5);
    return k15;
}

} // namespace detail

/// Adaptive Gauss–Kronrod integration of f over [a,b] with an interval stack.
template <class F>
double integrate_adaptive(const F& f, double a, double b, double rel_tol = 1e-10,
                          double abs_tol = 1e-300, int max_intervals = 20000) {
    if (!(b > a)) return 0.0;
    struct Iv {
        double a, b, val, err;
    };
    std::vector<Iv> stack;
    double err0;
    double total = detail::gk15(f, a, b, err0);
    stack.push_back({a, b, total, err0});
    double sum_err = err0;
    int used = 1;
    while (!stack.empty() && used < max_intervals) {
        const double tol = std::max(abs_tol, rel_tol * std::abs(total));
        if (sum_err <= tol) break;
        // split the interval with the largest error
        std::size_t worst = 0;
        for (std::size_t i = 1; i < stack.size(); ++i)
            if (stack[i].err > stack[worst].err) worst = i;
        const Iv iv = stack[worst];
        stack.erase(stack.begin() + static_cast<std::ptrdiff_t>(worst));
        const double m = 0.5 * (iv.a + iv.b);
        double e1, e2;
        const double v1 = detail::gk15(f, iv.a, m, e1);
        const double v2 = detail::gk15(f, m, iv.b, e2);
        total += v1 + v2 - iv.val;
        sum_err += e1 + e2 - iv.err;
        stack.push_back({iv.a, m, v1, e1});
        stack.push_back({m, iv.b, v2, e2});
        used += 1;
    }
    return total;
}

/// Adaptive integration over [a,b] with interior breakpoints (peaks of the
/// integrand go here so the refinement starts on the right subintervals).
template <class F>
double integrate_adaptive_breaks(const F& f, double a, double b, std::vector<double> breaks,
                                 double rel_tol = 1e-10) {
    breaks.push_back(a);
    breaks.push_back(b);
    std::sort(breaks.begin(), breaks.end());
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
        const double lo = std::clamp(breaks[i], a, b);
        const double hi = std::clamp(breaks[i + 1], a, b);
        if (hi > lo) total += integrate_adaptive(f, lo, hi, rel_tol);
    }
    return total;
}

/// Composite midpoint rule over [a,b] whose cells honor a grid of step
/// `align_step` anchored at 0 (every grid node inside [a,b] is a cell
/// boundary). Each grid cell is split so the total cell count is at least
/// `min_points`. With align_step <= 0 the window is split uniformly.
/// Piecewise-linear integrands driven by a path on that grid therefore see no
/// kinks inside any cell.
template <class F>
double midpoint_aligned(const F& f, double a, double b, std::size_t min_points,
                        double align_step, double anchor = 0.0) {
    if (!(b > a)) return 0.0;
    a -= anchor;
    b -= anchor;
    double acc = 0.0;
    if (align_step > 0.0) {
        const double inv = 1.0 / align_step;
        const auto i0 = static_cast<long long>(std::floor(a * inv));
        const auto i1 = static_cast<long long>(std::ceil(b * inv));
        const auto ncells = static_cast<std::size_t>(std::max(1LL, i1 - i0));
        const std::size_t sub = std::max<std::size_t>(1, (min_points + ncells - 1) / ncells);
        for (long long i = i0; i < i1; ++i) {
            const double lo = std::max(a, static_cast<double>(i) * align_step);
            const double hi = std::min(b, static_cast<double>(i + 1) * align_step);
            if (!(hi > lo)) continue;
            const double h = (hi - lo) / static_cast<double>(sub);
            for (std::size_t j = 0; j < sub; ++j)
                acc += f(anchor + lo + (static_cast<double>(j) + 0.5) * h) * h;
        }
    } else {
        const std::size_t n = std::max<std::size_t>(1, min_points);
        const double h = (b - a) / static_cast<double>(n);
        for (std::size_t j = 0; j < n; ++j)
            acc += f(anchor + a + (static_cast<double>(j) + 0.5) * h) * h;
    }
    return acc;
}

/// Least-squares fit of log y = c + slope * log t; returns {slope, stderr}.
struct PowerFit {
    double exponent = 0.0;
    double std_error = 0.0;
};

inline PowerFit fit_power_law(const std::vector<double>& t, const std::vector<double>& y) {
    const std::size_t n = t.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double lx = std::log(t[i]), ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    const double dn = static_cast<double>(n);
    const double denom = dn * sxx - sx * sx;
    PowerFit fit;
    fit.exponent = (dn * sxy - sx * sy) / denom;
    if (n > 2) {
        const double c = (sy - fit.exponent * sx) / dn;
        double ss = 0;
        for (std::size_t i = 0; i < n; ++i)
            ss += sqr(std::log(y[i]) - c - fit.exponent * std::log(t[i]));
        fit.std_error = std::sqrt(ss / (dn - 2.0) / (sxx - sx * sx / dn));
    }
    return fit;
}

} // namespace conga
