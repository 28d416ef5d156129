#pragma once

#include <cmath>
#include <numbers>

namespace conga {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double c) const { return {x * c, y * c}; }
    double norm() const { return std::hypot(x, y); }
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }

// Standard normal density and distribution. The tail Phi_bar goes through
// std::erfc, which is accurate to a few ulp over the whole double range; this
// is the only special function used besides exp.
inline double normal_pdf(double z) {
    return std::exp(-0.5 * z * z) * (1.0 / std::sqrt(2.0 * std::numbers::pi));
}

inline double normal_cdf(double z) {
    return 0.5 * std::erfc(-z * std::numbers::sqrt2_v<double> / 2.0);
}

inline double normal_tail(double z) {
    return 0.5 * std::erfc(z * std::numbers::sqrt2_v<double> / 2.0);
}

inline double sqr(double v) { return v * v; }

} // namespace conga
