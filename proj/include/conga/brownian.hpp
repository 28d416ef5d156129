#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "conga/math.hpp"

namespace conga {

/// A discretely sampled driving Brownian motion with 1 or 2 components.
/// values[0] = 0 exactly; evaluation is piecewise linear between grid points
/// and 0 for every t <= 0. Immutable after construction; safe to share.
struct BrownianPath {
    double horizon = 0.0;
    double grid_step = 0.0;
    int dims = 1;
    std::vector<double> x;
    std::vector<double> y; // empty in 1D

    std::size_t points() const { return x.size(); }

    const std::vector<double>& component(int c) const { return c == 0 ? x : y; }

    double value(double t, int c = 0) const {
        if (t <= 0.0) return 0.0;
        const std::vector<double>& v = component(c);
        const double u = t / grid_step;
        const auto i = static_cast<std::size_t>(u);
        if (i + 1 >= v.size()) return v.back();
        const double frac = u - static_cast<double>(i);
        return v[i] + frac * (v[i + 1] - v[i]);
    }

    Vec2 value2(double t) const {
        return {value(t, 0), dims == 2 ? value(t, 1) : 0.0};
    }

    /// sup over grid nodes of |W_s| for one component.
    double sup_abs(int c = 0) const {
        double m = 0.0;
        for (double v : component(c)) m = std::max(m, std::abs(v));
        return m;
    }
};

namespace detail {
inline std::size_t grid_count(double horizon, double grid_step) {
    if (!(horizon > 0.0) || !(grid_step > 0.0))
        throw std::invalid_argument("BrownianPath: horizon and grid_step must be positive");
    return static_cast<std::size_t>(std::floor(horizon / grid_step)) + 1;
}
} // namespace detail

/// Cumulative sums of N(0, grid_step) increments per component.
template <class Gen>
BrownianPath build_path_increments(Gen&& normal, double horizon, double grid_step, int dims = 1) {
    const std::size_t n = detail::grid_count(horizon, grid_step);
    BrownianPath p;
    p.horizon = horizon;
    p.grid_step = grid_step;
    p.dims = dims;
    p.x.resize(n, 0.0);
    if (dims == 2) p.y.resize(n, 0.0);
    const double sd = std::sqrt(grid_step);
    for (std::size_t i = 1; i < n; ++i) {
        p.x[i] = p.x[i - 1] + sd * normal();
        if (dims == 2) p.y[i] = p.y[i - 1] + sd * normal();
    }
    return p;
}

/// Test helper: path with explicitly given node values (values[0] forced to 0).
inline BrownianPath path_from_values(std::vector<double> values, double grid_step,
                                     std::vector<double> values_y = {}) {
    BrownianPath p;
    p.grid_step = grid_step;
    p.horizon = grid_step * static_cast<double>(values.size() - 1);
    p.dims = values_y.empty() ? 1 : 2;
    values[0] = 0.0;
    if (!values_y.empty()) values_y[0] = 0.0;
    p.x = std::move(values);
    p.y = std::move(values_y);
    return p;
}

/// Levels of the dyadic construction on [0,1]: level n holds node values of
/// the piecewise-linear summand F_n at the points k/2^n. F_n vanishes on all
/// dyadic points one level down.
struct DyadicLevels {
    int depth = 0;
    std::vector<std::vector<double>> level_nodes;
};

template <class Gen>
DyadicLevels levy_levels(Gen&& normal, int depth) {
    if (depth < 0) throw std::invalid_argument("levy_levels: depth must be >= 0");
    DyadicLevels lv;
    lv.depth = depth;
    lv.level_nodes.resize(static_cast<std::size_t>(depth) + 1);
    lv.level_nodes[0] = {0.0, normal()}; // F_0(x) = x * Z_1
    for (int n = 1; n <= depth; ++n) {
        const std::size_t m = std::size_t{1} << n;
        std::vector<double> nodes(m + 1, 0.0);
        const double scale = std::pow(2.0, -(n + 1) / 2.0);
        for (std::size_t k = 1; k < m; k += 2) nodes[k] = scale * normal();
        lv.level_nodes[static_cast<std::size_t>(n)] = std::move(nodes);
    }
    return lv;
}

inline BrownianPath path_from_levels(const DyadicLevels& lv) {
    const int depth = lv.depth;
    const std::size_t m = std::size_t{1} << depth;
    BrownianPath p;
    p.horizon = 1.0;
    p.grid_step = 1.0 / static_cast<double>(m);
    p.dims = 1;
    p.x.assign(m + 1, 0.0);
    for (int n = 0; n <= depth; ++n) {
        const auto& nodes = lv.level_nodes[static_cast<std::size_t>(n)];
        const std::size_t stride = m >> n; // grid points per level-n cell
        for (std::size_t j = 0; j <= m; ++j) {
            const std::size_t q = j / stride, r = j % stride;
            const double frac = static_cast<double>(r) / static_cast<double>(stride);
            const double fn = r == 0 ? nodes[q] : nodes[q] + frac * (nodes[q + 1] - nodes[q]);
            p.x[j] += fn;
        }
    }
    return p;
}

/// Partial sum W_N of the dyadic level functions; a path on [0,1] with grid
/// 2^-depth. Refining the depth only adds detail: the draws for lower levels
/// come first in the stream, so they are unchanged.
template <class Gen>
BrownianPath build_path_levy(Gen&& normal, int depth) {
    return path_from_levels(levy_levels(normal, depth));
}

/// Time reversed value W^t_z = W(t) - W(t-z), 0 <= z <= t.
inline double reversed_value(const BrownianPath& p, double t, double z, int c = 0) {
    if (z < 0.0 || z > t) throw std::domain_error("reversed_value: need 0 <= z <= t");
    if (t > p.horizon * (1.0 + 1e-12))
        throw std::invalid_argument("reversed_value: t beyond path horizon");
    return p.value(t, c) - p.value(t - z, c);
}

/// Diffusively rescaled view W^(t)(s) = t^{-1/2} W(t s) on [0,1].
inline BrownianPath diffusive_rescale(const BrownianPath& p, double t) {
    if (!(t > 0.0) || t > p.horizon * (1.0 + 1e-12))
        throw std::invalid_argument("diffusive_rescale: t must lie in (0, horizon]");
    const auto m = static_cast<std::size_t>(std::round(t / p.grid_step));
    BrownianPath r;
    r.horizon = 1.0;
    r.grid_step = 1.0 / static_cast<double>(m);
    r.dims = p.dims;
    const double s = 1.0 / std::sqrt(t);
    r.x.resize(m + 1);
    if (p.dims == 2) r.y.resize(m + 1);
    for (std::size_t j = 0; j <= m; ++j) {
        const double tj = t * static_cast<double>(j) / static_cast<double>(m);
        r.x[j] = s * p.value(tj, 0);
        if (p.dims == 2) r.y[j] = s * p.value(tj, 1);
    }
    return r;
}

} // namespace conga
