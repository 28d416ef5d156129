#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "conga/brownian.hpp"
#include "conga/geometry.hpp"
#include "conga/io.hpp"
#include "conga/math.hpp"
#include "conga/quadrature.hpp"

namespace conga {

/// A space-time path field f(p, tau) with values in the plane.
using PathField = std::function<Vec2(double, double)>;

/// zeta_n(p, t) = E ((p - p0) - Z_t)^n as a polynomial, extended to negative t
/// (only even moments of Z enter, so t appears in integer powers). Here p is
/// already the offset p - p0.
inline double zeta_polynomial(int n, double p, double t) {
    if (n < 0) throw std::invalid_argument("zeta_polynomial: n must be >= 0");
    double acc = 0.0;
    // sum over even j of C(n,j) (j-1)!! t^{j/2} p^{n-j}
    double binom = 1.0; // C(n, j) built incrementally over j
    double dfact = 1.0; // (j-1)!!
    for (int j = 0; j <= n; j += 2) {
        if (j > 0) {
            binom *= static_cast<double>(n - j + 2) * (n - j + 1) / (j * (j - 1.0));
            dfact *= j - 1.0;
        }
        acc += binom * dfact * std::pow(t, j / 2) * std::pow(p, n - j);
    }
    return acc;
}

/// Monomial coefficients of zeta_n(., t), index = power of p.
inline std::vector<double> zeta_coefficients(int n, double t) {
    std::vector<double> c(static_cast<std::size_t>(n) + 1, 0.0);
    double binom = 1.0, dfact = 1.0;
    for (int j = 0; j <= n; j += 2) {
        if (j > 0) {
            binom *= static_cast<double>(n - j + 2) * (n - j + 1) / (j * (j - 1.0));
            dfact *= j - 1.0;
        }
        c[static_cast<std::size_t>(n - j)] = binom * dfact * std::pow(t, j / 2);
    }
    return c;
}

/// A classified cusp: location, natural frame angle, and the Taylor
/// coefficients of the rotated expansion (a2 p^2 + a3 p^3, b3 p^3).
struct CuspRecord {
    double p0 = 0.0;
    double tau0 = 0.0;
    double rotation_theta = 0.0;
    double a2 = 0.0;
    double a3 = 0.0;
    double b3 = 0.0;
};

namespace cusp_detail {

// five-point central stencils, exact for polynomials of degree <= 4
inline Vec2 d1(const PathField& f, double p, double tau, double h) {
    return (f(p - 2 * h, tau) - f(p + 2 * h, tau) + (f(p + h, tau) - f(p - h, tau)) * 8.0) *
           (1.0 / (12.0 * h));
}
inline Vec2 d2(const PathField& f, double p, double tau, double h) {
    return (f(p + 2 * h, tau) * -1.0 + f(p + h, tau) * 16.0 - f(p, tau) * 30.0 +
            f(p - h, tau) * 16.0 - f(p - 2 * h, tau)) *
           (1.0 / (12.0 * h * h));
}
inline Vec2 d3(const PathField& f, double p, double tau, double h) {
    return (f(p + 2 * h, tau) - f(p + h, tau) * 2.0 + f(p - h, tau) * 2.0 -
            f(p - 2 * h, tau)) *
           (1.0 / (2.0 * h * h * h));
}

inline Vec2 rotate(Vec2 v, double theta) {
    const double c = std::cos(theta), s = std::sin(theta);
    return {c * v.x - s * v.y, s * v.x + c * v.y};
}

} // namespace cusp_detail

/// Natural co-ordinate frame at a singularity: the rotation that zeroes the
/// second component of the second derivative, plus the Taylor coefficients of
/// the rotated expansion. Rejects degenerate (non-cusp) candidates where a2
/// or b3 vanish.
inline CuspRecord natural_frame(const PathField& f, double p0, double tau0, double fd_step,
                                double speed_tol = 1e-6, double coeff_tol = 1e-9) {
    const Vec2 v1 = cusp_detail::d1(f, p0, tau0, fd_step);
    const Vec2 v2 = cusp_detail::d2(f, p0, tau0, fd_step);
    const Vec2 v3 = cusp_detail::d3(f, p0, tau0, fd_step);
    if (v1.norm() > speed_tol * std::max(1.0, v2.norm()))
        throw std::domain_error("natural_frame: speed does not vanish at (p0, tau0)");
    const double theta = -std::atan2(v2.y, v2.x);
    const Vec2 r2 = cusp_detail::rotate(v2, theta);
    const Vec2 r3 = cusp_detail::rotate(v3, theta);
    CuspRecord rec;
    rec.p0 = p0;
    rec.tau0 = tau0;
    rec.rotation_theta = theta;
    rec.a2 = r2.x / 2.0;
    rec.a3 = r3.x / 6.0;
    rec.b3 = r3.y / 6.0;
    const double scale = std::max({std::abs(rec.a2), std::abs(rec.b3), 1e-300});
    if (std::abs(rec.a2) < coeff_tol * scale || std::abs(rec.b3) < coeff_tol * scale)
        throw std::domain_error("natural_frame: degenerate singularity (a2 or b3 ~ 0)");
    return rec;
}

struct FieldWindow {
    double p_lo = 0.0, p_hi = 0.0;
    double tau_lo = 0.0, tau_hi = 0.0;
    int np = 64, ntau = 32;
};

/// Newton iteration on d_p f(p, tau) = 0 in both unknowns; returns the final
/// speed so callers can filter stationary-but-not-singular candidates.
inline double refine_singularity(const PathField& f, double& p, double& tau, double fd_step,
                                 int iters = 8) {
    double best = cusp_detail::d1(f, p, tau, fd_step).norm();
    for (int it = 0; it < iters; ++it) {
        const Vec2 g = cusp_detail::d1(f, p, tau, fd_step);
        const Vec2 gp = cusp_detail::d2(f, p, tau, fd_step);
        const double ht = std::max(0.25 * fd_step, 1e-6 * std::abs(tau));
        const Vec2 gt = (cusp_detail::d1(f, p, tau + ht, fd_step) -
                         cusp_detail::d1(f, p, tau - ht, fd_step)) *
                        (0.5 / ht);
        const double det = gp.x * gt.y - gp.y * gt.x;
        if (std::abs(det) < 1e-30) break;
        const double dp = (-g.x * gt.y + g.y * gt.x) / det;
        const double dt = (-gp.x * g.y + gp.y * g.x) / det;
        const double pn = p + dp, tn = tau + dt;
        if (!(tn > 0.0)) break;
        const double speed = cusp_detail::d1(f, pn, tn, fd_step).norm();
        if (speed >= best) break;
        p = pn;
        tau = tn;
        best = speed;
    }
    return best;
}

/// Candidate singularities (p0, tau0): local minima of |d_p f| below tol on
/// the window grid, refined by quadratic interpolation in p and tau.
inline std::vector<std::pair<double, double>> detect_singularity(const PathField& f,
                                                                 const FieldWindow& win,
                                                                 double tol) {
    const double hp = (win.p_hi - win.p_lo) / win.np;
    const double ht = (win.tau_hi - win.tau_lo) / win.ntau;
    const double fd = 0.25 * hp;
    std::vector<std::vector<double>> speed(static_cast<std::size_t>(win.ntau) + 1);
    for (int j = 0; j <= win.ntau; ++j) {
        const double tau = win.tau_lo + j * ht;
        auto& row = speed[static_cast<std::size_t>(j)];
        row.resize(static_cast<std::size_t>(win.np) + 1);
        for (int i = 0; i <= win.np; ++i)
            row[static_cast<std::size_t>(i)] =
                cusp_detail::d1(f, win.p_lo + i * hp, tau, fd).norm();
    }
    std::vector<std::pair<double, double>> found;
    for (int j = 1; j < win.ntau; ++j) {
        for (int i = 1; i < win.np; ++i) {
            const double v = speed[j][i];
            if (v >= tol) continue;
            if (v > speed[j][i - 1] || v > speed[j][i + 1] || v > speed[j - 1][i] ||
                v > speed[j + 1][i])
                continue;
            // parabola vertex through the squared speed, in p then in tau
            auto vertex = [](double fm, double f0, double fp) {
                const double denom = fm - 2.0 * f0 + fp;
                return denom > 0.0 ? 0.5 * (fm - fp) / denom : 0.0;
            };
            const double dp = std::clamp(
                vertex(sqr(speed[j][i - 1]), sqr(v), sqr(speed[j][i + 1])), -0.5, 0.5);
            double p0 = win.p_lo + (i + dp) * hp;
            auto sp = [&](double tau) { return sqr(cusp_detail::d1(f, p0, tau, fd).norm()); };
            const double tau_c = win.tau_lo + j * ht;
            const double dt =
                std::clamp(vertex(sp(tau_c - ht), sp(tau_c), sp(tau_c + ht)), -0.5, 0.5);
            double tau0 = tau_c + dt * ht;
            refine_singularity(f, p0, tau0, fd);
            found.emplace_back(p0, tau0);
        }
    }
    // dedup nearby candidates
    std::vector<std::pair<double, double>> out;
    for (auto& c : found) {
        bool dup = false;
        for (auto& o : out)
            if (std::abs(o.first - c.first) < 2.0 * hp && std::abs(o.second - c.second) < 2.0 * ht)
                dup = true;
        if (!dup) out.push_back(c);
    }
    return out;
}

/// The rescaled field around a cusp in natural coordinates,
///   (s^{-1} f1(sqrt(s) P, tau0 - s), s^{-3/2} f2(sqrt(s) P, tau0 - s)),
/// sampled on the P grid. The grid must stay inside |P| < 2 sqrt(3) - 1 and
/// reach past sqrt(3) so the loop closes.
inline SampledCurve rescale_dying_loop(const PathField& f, const CuspRecord& cusp, double s,
                                       const std::vector<double>& p_grid) {
    if (!(s > 0.0)) throw std::domain_error("rescale_dying_loop: s must be positive");
    if (p_grid.size() < 2)
        throw std::invalid_argument("rescale_dying_loop: need a grid of size >= 2");
    const double m = std::max(std::abs(p_grid.front()), std::abs(p_grid.back()));
    const double sqrt3 = std::sqrt(3.0);
    if (!(m > sqrt3 && m < 2.0 * sqrt3 - 1.0))
        throw std::domain_error("rescale_dying_loop: grid extent must lie in (sqrt 3, 2 sqrt 3 - 1)");
    const Vec2 origin = f(cusp.p0, cusp.tau0);
    SampledCurve out;
    out.params = p_grid;
    out.points.reserve(p_grid.size());
    const double rs = std::sqrt(s);
    for (double P : p_grid) {
        const Vec2 v = cusp_detail::rotate(f(cusp.p0 + rs * P, cusp.tau0 - s) - origin,
                                           cusp.rotation_theta);
        out.points.push_back({v.x / s, v.y / (s * rs)});
    }
    return out;
}

/// The deterministic limit loop g(P) = (a2 (P^2 - 1), b3 (P^3 - 3P)).
inline SampledCurve limit_loop(double a2, double b3, const std::vector<double>& p_grid) {
    SampledCurve out;
    out.params = p_grid;
    out.points.reserve(p_grid.size());
    for (double P : p_grid)
        out.points.push_back({a2 * zeta_polynomial(2, P, -1.0), b3 * zeta_polynomial(3, P, -1.0)});
    return out;
}

/// Loop evolution under the field: per-tau re-detection in a moving window
/// around the previous loop.
struct LoopTrack {
    enum class Outcome { died, vanished, persisted };
    Outcome outcome = Outcome::persisted;
    std::vector<double> tau_grid; // taus where a loop was found
    std::vector<LoopRecord> loops;
    double death_p = 0.0;
    double death_tau = 0.0;
};

inline LoopTrack track_loop(const PathField& f, const std::vector<double>& tau_grid,
                            double a0, double b0, int samples_per_window = 257,
                            double death_width_tol = 5e-3) {
    if (tau_grid.size() < 2) throw std::invalid_argument("track_loop: need a tau grid");
    LoopTrack track;
    double a = a0, b = b0;
    Vec2 prev_cross{};
    bool have_prev = false;

    auto widths_merging = [&] {
        const std::size_t n = track.loops.size();
        if (n == 0) return false;
        if (track.loops[n - 1].b - track.loops[n - 1].a > death_width_tol) return false;
        for (std::size_t i = (n >= 3 ? n - 3 : 0); i + 1 < n; ++i)
            if (track.loops[i + 1].b - track.loops[i + 1].a >=
                track.loops[i].b - track.loops[i].a)
                return false;
        return true;
    };
    auto mark_died = [&] {
        const LoopRecord& last = track.loops.back();
        track.outcome = LoopTrack::Outcome::died;
        track.death_p = 0.5 * (last.a + last.b);
        // the limit-loop geometry pins the remaining life at width^2 / 12
        track.death_tau = track.tau_grid.back() + sqr(last.b - last.a) / 12.0;
    };

    for (double tau : tau_grid) {
        const double mid = 0.5 * (a + b), w = std::max(1.5 * (b - a), 1e-12);
        SampledCurve curve;
        curve.params.resize(static_cast<std::size_t>(samples_per_window));
        curve.points.resize(curve.params.size());
        for (std::size_t i = 0; i < curve.params.size(); ++i) {
            const double p = mid - w + 2.0 * w * static_cast<double>(i) /
                                          static_cast<double>(curve.params.size() - 1);
            curve.params[i] = p;
            curve.points[i] = f(p, tau);
        }
        auto loops = extract_loops(curve, find_self_intersections(curve), false);
        if (loops.empty()) {
            if (track.loops.empty())
                throw std::invalid_argument("track_loop: initial interval contains no loop");
            if (widths_merging())
                mark_died();
            else
                track.outcome = LoopTrack::Outcome::vanished;
            return track;
        }
        // pick the loop nearest the previous crossing point
        std::size_t best = 0;
        if (have_prev) {
            double bestd = std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < loops.size(); ++i) {
                const double d = (loops[i].crossing_point - prev_cross).norm();
                if (d < bestd) {
                    bestd = d;
                    best = i;
                }
            }
        }
        LoopRecord chosen = loops[best];
        chosen.size = loop_size(chosen, curve);
        track.tau_grid.push_back(tau);
        track.loops.push_back(chosen);
        a = chosen.a;
        b = chosen.b;
        prev_cross = chosen.crossing_point;
        have_prev = true;
    }
    // grid exhausted with the loop still present: merged endpoints mean the
    // loop is dying at the extrapolated site, otherwise it persists
    if (widths_merging())
        mark_died();
    else
        track.outcome = LoopTrack::Outcome::persisted;
    return track;
}

/// Heat evolution of a sampled path: f(p, tau) = E W(p - Z_tau), the path
/// field of the alternate smooth approximation after the change of variables
/// p = t - x/alpha, tau = rho^2 x.
class HeatField {
public:
    HeatField(const BrownianPath& path, std::size_t quadrature_points = 512,
              double window_sd = 8.5)
        : path_(&path), points_(quadrature_points), q_(window_sd) {}

    Vec2 operator()(double p, double tau) const {
        if (!(tau > 0.0)) throw std::domain_error("HeatField: tau must be positive");
        const double sd = std::sqrt(tau);
        const double lo = std::max(0.0, p - q_ * sd);
        const double hi = p + q_ * sd;
        if (hi > path_->horizon * (1.0 + 1e-12))
            throw std::invalid_argument("HeatField: path horizon must reach " +
                                        std::to_string(hi));
        Vec2 out{};
        out.x = midpoint_aligned(
            [&](double u) { return path_->value(u, 0) * normal_pdf((p - u) / sd) / sd; }, lo,
            hi, points_, path_->grid_step);
        if (path_->dims == 2)
            out.y = midpoint_aligned(
                [&](double u) { return path_->value(u, 1) * normal_pdf((p - u) / sd) / sd; },
                lo, hi, points_, path_->grid_step);
        return out;
    }

    PathField as_field() const {
        return [*this](double p, double tau) { return (*this)(p, tau); };
    }

private:
    const BrownianPath* path_;
    std::size_t points_;
    double q_;
};

/// The synthetic cusp-unfolding field (zeta_2, zeta_3) centered at
/// (p0, tau0): singular exactly at that point, with a loop dying into it.
/// Optional zeta_4/zeta_5 admixtures add the higher-order terms of a generic
/// analytic cusp without moving the singularity or its frame.
inline PathField synthetic_cusp_field(double p0, double tau0, double a2 = 1.0,
                                      double b3 = 1.0, double c4 = 0.0, double c5 = 0.0) {
    return [=](double p, double tau) -> Vec2 {
        const double q = p - p0, s = tau - tau0;
        return {a2 * zeta_polynomial(2, q, s) + c4 * zeta_polynomial(4, q, s),
                b3 * zeta_polynomial(3, q, s) + c5 * zeta_polynomial(5, q, s)};
    };
}

/// One JSON line per loop or cusp event.
inline void write_event_jsonl(std::ostream& out, const std::string& type, double tau, double p,
                              double size, const CuspRecord* cusp = nullptr) {
    out << "{\"type\":\"" << type << "\",\"tau\":" << format_float(tau)
        << ",\"p\":" << format_float(p) << ",\"size\":" << format_float(size);
    if (cusp)
        out << ",\"a2\":" << format_float(cusp->a2) << ",\"b3\":" << format_float(cusp->b3)
            << ",\"theta\":" << format_float(cusp->rotation_theta);
    out << "}\n";
}

} // namespace conga
