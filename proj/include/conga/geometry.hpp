#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

#include "conga/math.hpp"

namespace conga {

/// A planar curve sampled at strictly increasing parameter values.
struct SampledCurve {
    std::vector<double> params;
    std::vector<Vec2> points;

    void validate() const {
        if (params.size() != points.size() || params.size() < 2)
            throw std::invalid_argument("SampledCurve: need matching arrays of length >= 2");
        for (std::size_t i = 0; i + 1 < params.size(); ++i)
            if (!(params[i] < params[i + 1]))
                throw std::invalid_argument("SampledCurve: params must be strictly increasing");
    }

    Vec2 value(double s) const {
        if (s <= params.front()) return points.front();
        if (s >= params.back()) return points.back();
        auto it = std::upper_bound(params.begin(), params.end(), s);
        const auto i = static_cast<std::size_t>(it - params.begin()) - 1;
        const double frac = (s - params[i]) / (params[i + 1] - params[i]);
        return points[i] + (points[i + 1] - points[i]) * frac;
    }

    double diameter() const {
        double xlo = points[0].x, xhi = xlo, ylo = points[0].y, yhi = ylo;
        for (const Vec2& p : points) {
            xlo = std::min(xlo, p.x);
            xhi = std::max(xhi, p.x);
            ylo = std::min(ylo, p.y);
            yhi = std::max(yhi, p.y);
        }
        return std::hypot(xhi - xlo, yhi - ylo);
    }
};

/// Roots of a sampled function by sign change, linearly interpolated. Exact
/// zeros at samples count once and reset the sign tracking, so tangencies are
/// not double-counted.
inline std::vector<double> find_critical_points(const std::vector<double>& xs,
                                                const std::vector<double>& vals) {
    if (xs.size() != vals.size() || xs.size() < 2)
        throw std::invalid_argument("find_critical_points: need >= 2 samples");
    std::vector<double> roots;
    int last_sign = 0;
    std::size_t last_idx = 0;
    for (std::size_t i = 0; i < vals.size(); ++i) {
        if (vals[i] == 0.0) {
            roots.push_back(xs[i]);
            last_sign = 0;
            continue;
        }
        const int s = vals[i] > 0.0 ? 1 : -1;
        if (last_sign != 0 && s != last_sign) {
            const double f0 = vals[last_idx], f1 = vals[i];
            roots.push_back(xs[last_idx] + (xs[i] - xs[last_idx]) * f0 / (f0 - f1));
        }
        last_sign = s;
        last_idx = i;
    }
    return roots;
}

/// Same, but each bracketed sign change is refined by bisection on f to the
/// given parameter accuracy.
inline std::vector<double> find_critical_points(const std::vector<double>& xs,
                                                const std::vector<double>& vals,
                                                const std::function<double(double)>& f,
                                                double param_tol = 1e-10) {
    if (xs.size() != vals.size() || xs.size() < 2)
        throw std::invalid_argument("find_critical_points: need >= 2 samples");
    std::vector<double> roots;
    int last_sign = 0;
    std::size_t last_idx = 0;
    for (std::size_t i = 0; i < vals.size(); ++i) {
        if (vals[i] == 0.0) {
            roots.push_back(xs[i]);
            last_sign = 0;
            continue;
        }
        const int s = vals[i] > 0.0 ? 1 : -1;
        if (last_sign != 0 && s != last_sign) {
            double a = xs[last_idx], b = xs[i];
            double fa = vals[last_idx];
            while (b - a > param_tol) {
                const double m = 0.5 * (a + b);
                const double fm = f(m);
                if (fm == 0.0) {
                    a = b = m;
                    break;
                }
                if ((fa > 0.0) == (fm > 0.0)) {
                    a = m;
                    fa = fm;
                } else {
                    b = m;
                }
            }
            roots.push_back(0.5 * (a + b));
        }
        last_sign = s;
        last_idx = i;
    }
    return roots;
}

struct Crossing {
    double s1 = 0.0;
    double s2 = 0.0;
    Vec2 point;
};

namespace geo_detail {

// Transversal intersection of segments p1->p2 and q1->q2; parameters in
// [0,1] up to a small slack so crossings through shared sample points are
// kept (the s1 < s2 dedup upstream removes double counting).
inline bool segment_cross(Vec2 p1, Vec2 p2, Vec2 q1, Vec2 q2, double& t, double& u) {
    constexpr double eps = 1e-9;
    const Vec2 r = p2 - p1, s = q2 - q1;
    const double denom = cross(r, s);
    const double scale = r.norm() * s.norm();
    if (std::abs(denom) <= 1e-14 * scale) return false;
    const Vec2 d = q1 - p1;
    t = cross(d, s) / denom;
    u = cross(d, r) / denom;
    if (t < -eps || t > 1.0 + eps || u < -eps || u > 1.0 + eps) return false;
    t = std::clamp(t, 0.0, 1.0);
    u = std::clamp(u, 0.0, 1.0);
    return true;
}

} // namespace geo_detail

/// All transversal crossings of non-adjacent segments, found by a sweep over
/// segments sorted by their lower x bound with pruning of the active set;
/// each crossing's parameters come from the local linear solve.
inline std::vector<Crossing> find_self_intersections(const SampledCurve& curve) {
    curve.validate();
    const std::size_t n = curve.points.size() - 1;
    struct Box {
        double xmin, xmax, ymin, ymax;
        std::size_t i;
    };
    std::vector<Box> boxes(n);
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2 a = curve.points[i], b = curve.points[i + 1];
        boxes[i] = {std::min(a.x, b.x), std::max(a.x, b.x), std::min(a.y, b.y),
                    std::max(a.y, b.y), i};
    }
    std::sort(boxes.begin(), boxes.end(),
              [](const Box& a, const Box& b) { return a.xmin < b.xmin; });

    const double ptol = 1e-9 * (curve.params.back() - curve.params.front());
    const double pad = 1e-9 * std::max(curve.diameter(), 1e-300); // matches the solve slack
    std::vector<Crossing> out;
    std::vector<std::size_t> active;
    for (std::size_t bi = 0; bi < n; ++bi) {
        const Box& cur = boxes[bi];
        std::erase_if(active, [&](std::size_t j) { return boxes[j].xmax < cur.xmin - pad; });
        for (std::size_t j : active) {
            const Box& other = boxes[j];
            if (other.ymin > cur.ymax + pad || other.ymax < cur.ymin - pad) continue;
            const std::size_t i1 = std::min(cur.i, other.i), i2 = std::max(cur.i, other.i);
            if (i2 - i1 <= 1) continue; // adjacent segments share an endpoint
            double t, u;
            if (!geo_detail::segment_cross(curve.points[i1], curve.points[i1 + 1],
                                           curve.points[i2], curve.points[i2 + 1], t, u))
                continue;
            Crossing c;
            c.s1 = curve.params[i1] + t * (curve.params[i1 + 1] - curve.params[i1]);
            c.s2 = curve.params[i2] + u * (curve.params[i2 + 1] - curve.params[i2]);
            c.point = curve.points[i1] + (curve.points[i1 + 1] - curve.points[i1]) * t;
            if (c.s2 - c.s1 < ptol) continue; // same point on the curve
            bool dup = false;
            for (const Crossing& prev : out)
                if (std::abs(prev.s1 - c.s1) < ptol && std::abs(prev.s2 - c.s2) < ptol)
                    dup = true;
            if (!dup) out.push_back(c);
        }
        active.push_back(bi);
    }
    std::sort(out.begin(), out.end(),
              [](const Crossing& a, const Crossing& b) { return a.s1 < b.s1; });
    return out;
}

/// A detected loop: parameter interval [a,b] with curve(a) = curve(b) and the
/// curve injective on [a,b); size is the largest-inscribed-disc radius.
struct LoopRecord {
    double a = 0.0;
    double b = 0.0;
    double size = -1.0; // unset until measured
    Vec2 crossing_point;
};

/// Polygon of a loop: the curve samples strictly inside (a,b) with the
/// crossing point closing the cycle.
inline std::vector<Vec2> loop_polygon(const LoopRecord& loop, const SampledCurve& curve) {
    std::vector<Vec2> poly{loop.crossing_point};
    for (std::size_t i = 0; i < curve.params.size(); ++i)
        if (curve.params[i] > loop.a && curve.params[i] < loop.b) poly.push_back(curve.points[i]);
    return poly;
}

namespace geo_detail {

inline bool point_in_polygon(const std::vector<Vec2>& poly, Vec2 p) {
    bool in = false;
    for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
        const Vec2 a = poly[i], b = poly[j];
        if ((a.y > p.y) != (b.y > p.y) &&
            p.x < (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x)
            in = !in;
    }
    return in;
}

inline double dist_to_segment(Vec2 p, Vec2 a, Vec2 b) {
    const Vec2 d = b - a;
    const double len2 = dot(d, d);
    double t = len2 > 0.0 ? dot(p - a, d) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    return (p - (a + d * t)).norm();
}

inline double dist_to_boundary(const std::vector<Vec2>& poly, Vec2 p) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++)
        best = std::min(best, dist_to_segment(p, poly[j], poly[i]));
    return best;
}

inline double inscribed_disc_radius(const std::vector<Vec2>& poly, int grid = 48) {
    if (poly.size() < 3) return 0.0;
    double xlo = poly[0].x, xhi = xlo, ylo = poly[0].y, yhi = ylo;
    for (const Vec2& p : poly) {
        xlo = std::min(xlo, p.x);
        xhi = std::max(xhi, p.x);
        ylo = std::min(ylo, p.y);
        yhi = std::max(yhi, p.y);
    }
    const double w = xhi - xlo, h = yhi - ylo;
    if (w <= 0.0 || h <= 0.0) return 0.0;
    double best = 0.0;
    Vec2 best_p{};
    auto scan = [&](double cx, double cy, double hw, double hh, int g) {
        for (int i = 0; i <= g; ++i) {
            for (int j = 0; j <= g; ++j) {
                const Vec2 p{cx - hw + 2.0 * hw * i / g, cy - hh + 2.0 * hh * j / g};
                if (!point_in_polygon(poly, p)) continue;
                const double d = dist_to_boundary(poly, p);
                if (d > best) {
                    best = d;
                    best_p = p;
                }
            }
        }
    };
    scan(0.5 * (xlo + xhi), 0.5 * (ylo + yhi), 0.5 * w, 0.5 * h, grid);
    if (best > 0.0) {
        const double cell = std::max(w, h) / grid;
        scan(best_p.x, best_p.y, cell, cell, grid); // refine around the winner
    }
    return best;
}

} // namespace geo_detail

/// Cheap upper bound on a loop's size from its bounding box.
inline double loop_size_upper_bound(const LoopRecord& loop, const SampledCurve& curve) {
    auto poly = loop_polygon(loop, curve);
    if (poly.size() < 3) return 0.0;
    double xlo = poly[0].x, xhi = xlo, ylo = poly[0].y, yhi = ylo;
    for (const Vec2& p : poly) {
        xlo = std::min(xlo, p.x);
        xhi = std::max(xhi, p.x);
        ylo = std::min(ylo, p.y);
        yhi = std::max(yhi, p.y);
    }
    return 0.5 * std::min(xhi - xlo, yhi - ylo);
}

/// Largest-inscribed-disc radius of the loop's bounded component, by two-stage
/// distance-to-boundary maximization over an interior grid.
inline double loop_size(const LoopRecord& loop, const SampledCurve& curve) {
    return geo_detail::inscribed_disc_radius(loop_polygon(loop, curve));
}

/// Minimal crossing-matched intervals on which the curve is injective, one
/// record per loop. A closed curve with no transversal crossings still counts
/// as one loop via its endpoint coincidence.
inline std::vector<LoopRecord> extract_loops(const SampledCurve& curve,
                                             const std::vector<Crossing>& crossings,
                                             bool compute_sizes = true) {
    std::vector<LoopRecord> loops;
    auto add = [&](double a, double b, Vec2 pt) {
        LoopRecord r;
        r.a = a;
        r.b = b;
        r.crossing_point = pt;
        if (compute_sizes) r.size = loop_size(r, curve);
        loops.push_back(r);
    };
    for (const Crossing& c : crossings) {
        bool injective = true;
        for (const Crossing& other : crossings) {
            if (&other == &c) continue;
            if (other.s1 >= c.s1 && other.s1 < c.s2 && other.s2 >= c.s1 && other.s2 < c.s2) {
                injective = false;
                break;
            }
        }
        if (injective) add(c.s1, c.s2, c.point);
    }
    if (crossings.empty() && curve.diameter() > 0.0) {
        const double tol = 1e-9 * curve.diameter();
        if ((curve.points.front() - curve.points.back()).norm() <= tol)
            add(curve.params.front(), curve.params.back(), curve.points.front());
    }
    return loops;
}

/// Upper bound on the reparametrization metric
///   d(f,g) = inf ||l1 - l2|| + ||f(l1) - g(l2)||
/// over monotone pairs, from a dynamic-programming alignment of resampled
/// curves (the K-knot family: 10K samples per curve) with the affine pairing
/// as a fallback. The bound converges from above as K grows.
inline double curve_distance(const SampledCurve& f, const SampledCurve& g, int knots = 16) {
    f.validate();
    g.validate();
    const std::size_t n = static_cast<std::size_t>(10 * knots);
    auto resample = [&](const SampledCurve& c, std::vector<double>& s, std::vector<Vec2>& p) {
        s.resize(n);
        p.resize(n);
        const double a = c.params.front(), b = c.params.back();
        for (std::size_t i = 0; i < n; ++i) {
            s[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
            p[i] = c.value(s[i]);
        }
    };
    std::vector<double> sf, sg;
    std::vector<Vec2> pf, pg;
    resample(f, sf, pf);
    resample(g, sg, pg);

    auto cost = [&](std::size_t i, std::size_t j) {
        return std::abs(sf[i] - sg[j]) + (pf[i] - pg[j]).norm();
    };

    // DP on the min-max of the per-node sum; the induced monotone pairing is
    // then scored under the true metric (sum of the two sups).
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<std::vector<double>> dp(n, std::vector<double>(n, inf));
    std::vector<std::vector<unsigned char>> from(n, std::vector<unsigned char>(n, 0));
    dp[0][0] = cost(0, 0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i == 0 && j == 0) continue;
            double best = inf;
            unsigned char arg = 0;
            if (i > 0 && j > 0 && dp[i - 1][j - 1] < best) {
                best = dp[i - 1][j - 1];
                arg = 1;
            }
            if (i > 0 && dp[i - 1][j] < best) {
                best = dp[i - 1][j];
                arg = 2;
            }
            if (j > 0 && dp[i][j - 1] < best) {
                best = dp[i][j - 1];
                arg = 3;
            }
            dp[i][j] = std::max(best, cost(i, j));
            from[i][j] = arg;
        }
    }
    // walk back and score the pairing exactly
    double sup_param = 0.0, sup_space = 0.0;
    std::size_t i = n - 1, j = n - 1;
    while (true) {
        sup_param = std::max(sup_param, std::abs(sf[i] - sg[j]));
        sup_space = std::max(sup_space, (pf[i] - pg[j]).norm());
        if (i == 0 && j == 0) break;
        switch (from[i][j]) {
        case 1: --i; --j; break;
        case 2: --i; break;
        default: --j; break;
        }
    }
    const double via_dp = sup_param + sup_space;

    double aff_param = 0.0, aff_space = 0.0;
    for (std::size_t k2 = 0; k2 < n; ++k2) {
        aff_param = std::max(aff_param, std::abs(sf[k2] - sg[k2]));
        aff_space = std::max(aff_space, (pf[k2] - pg[k2]).norm());
    }
    return std::min(via_dp, aff_param + aff_space);
}

} // namespace conga
