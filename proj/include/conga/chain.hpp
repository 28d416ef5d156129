#pragma once

#include <cmath>
#include <cstddef>
#include <fstream>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "conga/brownian.hpp"
#include "conga/io.hpp"
#include "conga/math.hpp"

namespace conga {

struct CongaParams {
    double alpha = 0.5;
    int n = 1;
    int dims = 1;

    double sigma() const { return std::sqrt(alpha * (1.0 - alpha)); }

    void validate() const {
        if (!(alpha > 0.0 && alpha < 1.0))
            throw std::invalid_argument("CongaParams: alpha must lie in (0,1)");
        if (n < 1) throw std::invalid_argument("CongaParams: n must be >= 1");
        if (dims != 1 && dims != 2) throw std::invalid_argument("CongaParams: dims must be 1 or 2");
    }
};

/// Particle positions X_k(n) at a fixed time n, indexed k = 1..n
/// (positions_x[k-1]). Entries for k > n would be identically zero and are
/// not stored.
struct CongaFrame {
    int time = 0;
    int dims = 1;
    std::vector<double> xs;
    std::vector<double> ys; // empty in 1D

    Vec2 position(int k) const {
        if (k < 1) throw std::domain_error("CongaFrame: k must be >= 1");
        if (k > time) return {0.0, 0.0}; // X_j(n) = 0 for all j > n
        const auto i = static_cast<std::size_t>(k - 1);
        return {xs[i], dims == 2 ? ys[i] : 0.0};
    }
};

namespace detail {
inline void step_component(std::vector<double>& v, double dz, double alpha, int new_time) {
    v.resize(static_cast<std::size_t>(new_time), 0.0);
    // downward so each update reads the previous frame's values
    for (std::size_t j = v.size() - 1; j >= 1; --j)
        v[j] = (1.0 - alpha) * v[j] + alpha * v[j - 1];
    v[0] += dz;
}
} // namespace detail

/// One step of the defining recursion: the leader moves by the given
/// increment, every follower takes the convex combination of itself and its
/// predecessor, and a fresh particle appears at the origin.
inline CongaFrame step_frame(CongaFrame frame, Vec2 leader_increment, const CongaParams& params) {
    params.validate();
    if (frame.dims != params.dims)
        throw std::invalid_argument("step_frame: frame/params dimension mismatch");
    frame.time += 1;
    detail::step_component(frame.xs, leader_increment.x, params.alpha, frame.time);
    if (frame.dims == 2) detail::step_component(frame.ys, leader_increment.y, params.alpha, frame.time);
    return frame;
}

/// Index k beyond which positions are numerically zero at time n (the sparse
/// "active window" option; pass cut <= 0 to keep the full frame).
inline int active_cutoff(int n, double alpha, double c = 4.0) {
    const double w = alpha * n + c * std::sqrt(static_cast<double>(n) * std::log(n + 1.0));
    return static_cast<int>(std::min<double>(n, std::ceil(w) + 1.0));
}

/// Runs the recursion for params.n steps driven by a unit-grid path (the
/// leader's step at time i is W(i) - W(i-1)). Frames are streamed to the
/// callback; retaining them all is the caller's choice. With windowed = true
/// only the active window of each frame is updated.
inline CongaFrame run_conga(const CongaParams& params, const BrownianPath& path,
                            const std::function<void(const CongaFrame&)>& on_frame = {},
                            bool windowed = false) {
    params.validate();
    if (std::abs(path.grid_step - 1.0) > 1e-12)
        throw std::invalid_argument("run_conga: path must have unit grid_step");
    if (path.horizon + 1e-9 < params.n)
        throw std::invalid_argument("run_conga: path horizon shorter than n steps");
    if (params.dims == 2 && path.dims != 2)
        throw std::invalid_argument("run_conga: 2D run needs a 2D path");

    CongaFrame frame;
    frame.dims = params.dims;
    for (int i = 1; i <= params.n; ++i) {
        const double ti = static_cast<double>(i);
        Vec2 dz{path.value(ti, 0) - path.value(ti - 1.0, 0),
                params.dims == 2 ? path.value(ti, 1) - path.value(ti - 1.0, 1) : 0.0};
        frame.time += 1;
        const int active = windowed ? active_cutoff(frame.time, params.alpha) : frame.time;
        detail::step_component(frame.xs, dz.x, params.alpha, active);
        if (frame.dims == 2) detail::step_component(frame.ys, dz.y, params.alpha, active);
        if (on_frame) on_frame(frame);
    }
    return frame;
}

/// Binomial tail and point weights for the moving-average representation:
/// tail_weights[l - (k-1)] = P(B_l >= k-1) and point_weights[...] = P(B_l = k-1)
/// for l = k-1 .. n-1. Computed by a logarithmic recurrence in l, stable for
/// n in the thousands.
struct WeightTable {
    int k = 0;
    int n = 0;
    double alpha = 0.0;
    std::vector<double> tail_weights;
    std::vector<double> point_weights;

    double tail(int l) const { return tail_weights[static_cast<std::size_t>(l - (k - 1))]; }
    double point(int l) const { return point_weights[static_cast<std::size_t>(l - (k - 1))]; }
};

inline WeightTable build_weight_table(int k, int n, double alpha) {
    if (k < 1 || k > n) throw std::domain_error("build_weight_table: need 1 <= k <= n");
    if (!(alpha > 0.0 && alpha < 1.0))
        throw std::invalid_argument("build_weight_table: alpha must lie in (0,1)");
    WeightTable w;
    w.k = k;
    w.n = n;
    w.alpha = alpha;
    const int m = k - 1; // success count of interest
    const std::size_t len = static_cast<std::size_t>(n - 1 - m) + 1;
    w.tail_weights.resize(len);
    w.point_weights.resize(len);

    const double la = std::log(alpha), lq = std::log1p(-alpha);
    // log P(B_l = j) maintained for j = m (point weights) and j = m-1 (tail
    // recurrence P(B_{l+1} >= m) = P(B_l >= m) + alpha P(B_l = m-1)), both
    // rolled forward in l via P(B_{l+1} = j) = P(B_l = j) (l+1)/(l+1-j) (1-alpha).
    double log_pm = m * la;                                // P(B_m = m)
    double log_pm1 = std::log(std::max(m, 1)) + (m - 1) * la + lq; // P(B_m = m-1)
    double tail = std::exp(m * la);                        // P(B_m >= m)
    for (int l = m; l <= n - 1; ++l) {
        const std::size_t i = static_cast<std::size_t>(l - m);
        if (m == 0) {
            w.tail_weights[i] = 1.0;
            w.point_weights[i] = std::exp(l * lq);
            continue;
        }
        w.tail_weights[i] = std::min(1.0, tail);
        w.point_weights[i] = std::exp(log_pm);
        tail += alpha * std::exp(log_pm1);
        log_pm += std::log((l + 1.0) / (l + 1.0 - m)) + lq;
        log_pm1 += std::log((l + 1.0) / (l + 2.0 - m)) + lq;
    }
    return w;
}

/// Moving-average representation X_k(n) = sum_l P(B_l >= k-1) Z_{n-l} on the
/// same coupled path.
inline Vec2 position_via_weights(int k, int n, const BrownianPath& path, double alpha) {
    const WeightTable w = build_weight_table(k, n, alpha);
    Vec2 acc{};
    for (int l = k - 1; l <= n - 1; ++l) {
        const double t1 = static_cast<double>(n - l);
        const double wx = w.tail(l);
        acc.x += wx * (path.value(t1, 0) - path.value(t1 - 1.0, 0));
        if (path.dims == 2) acc.y += wx * (path.value(t1, 1) - path.value(t1 - 1.0, 1));
    }
    return acc;
}

/// Discrete spatial derivative X_{k+1}(n) - X_k(n) = -sum_l P(B_l = k-1) Z_{n-l}.
inline Vec2 increment_via_weights(int k, int n, const BrownianPath& path, double alpha) {
    const WeightTable w = build_weight_table(k, n, alpha);
    Vec2 acc{};
    for (int l = k - 1; l <= n - 1; ++l) {
        const double t1 = static_cast<double>(n - l);
        const double wx = w.point(l);
        acc.x -= wx * (path.value(t1, 0) - path.value(t1 - 1.0, 0));
        if (path.dims == 2) acc.y -= wx * (path.value(t1, 1) - path.value(t1 - 1.0, 1));
    }
    return acc;
}

/// Piecewise-linear interpolation of a frame in the offset-from-tip
/// coordinate: curve(j) = X_{j+1}(n) for integer j in [0, n-1], so curve(k)
/// pairs with the smooth field at (k, n). The derivative convention at
/// integers is the forward difference X_{k+2}(n) - X_{k+1}(n).
class InterpolatedFrame {
public:
    explicit InterpolatedFrame(const CongaFrame& frame) : frame_(&frame) {
        if (frame.xs.empty()) throw std::invalid_argument("InterpolatedFrame: empty frame");
    }

    double domain_end() const { return static_cast<double>(frame_->xs.size() - 1); }

    Vec2 value(double x) const {
        const auto& f = *frame_;
        const double xe = domain_end();
        if (x < 0.0 || x > xe) throw std::domain_error("InterpolatedFrame: x outside [0, n-1]");
        const auto i = static_cast<std::size_t>(std::min(x, xe - 1.0));
        const double frac = x - static_cast<double>(i);
        Vec2 a{f.xs[i], f.dims == 2 ? f.ys[i] : 0.0};
        if (frac == 0.0) return a;
        Vec2 b{f.xs[i + 1], f.dims == 2 ? f.ys[i + 1] : 0.0};
        return a + (b - a) * frac;
    }

    Vec2 derivative(double x) const {
        const auto& f = *frame_;
        const double xe = domain_end();
        if (x < 0.0 || x >= xe + 1.0) throw std::domain_error("InterpolatedFrame: x out of range");
        const auto i = static_cast<std::size_t>(std::min(x, xe - 1.0));
        if (i + 1 >= f.xs.size()) return {0.0, 0.0};
        Vec2 a{f.xs[i], f.dims == 2 ? f.ys[i] : 0.0};
        Vec2 b{f.xs[i + 1], f.dims == 2 ? f.ys[i + 1] : 0.0};
        return b - a;
    }

private:
    const CongaFrame* frame_;
};

inline InterpolatedFrame interpolate_frame(const CongaFrame& frame) {
    return InterpolatedFrame(frame);
}

/// CSV export: columns k,x[,y], header row, LF line endings.
inline void write_frame_csv(const CongaFrame& frame, std::ostream& out) {
    out << (frame.dims == 2 ? "k,x,y\n" : "k,x\n");
    for (std::size_t i = 0; i < frame.xs.size(); ++i) {
        out << (i + 1) << ',' << format_float(frame.xs[i]);
        if (frame.dims == 2) out << ',' << format_float(frame.ys[i]);
        out << '\n';
    }
}

inline void write_frame_csv(const CongaFrame& frame, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_frame_csv: cannot open " + path);
    write_frame_csv(frame, out);
}

} // namespace conga
