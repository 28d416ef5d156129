#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

namespace conga {

/// Probabilist Hermite polynomial He_n(x) by the three-term recurrence
/// He_{n+1}(x) = x He_n(x) - n He_{n-1}(x), He_0 = 1, He_1(x) = x.
inline double hermite(int n, double x) {
    if (n < 0) throw std::invalid_argument("hermite: order must be >= 0");
    if (n == 0) return 1.0;
    double prev = 1.0, cur = x;
    for (int k = 1; k < n; ++k) {
        const double next = x * cur - static_cast<double>(k) * prev;
        prev = cur;
        cur = next;
    }
    return cur;
}

/// Physicist variant H_n(x) = 2^{n/2} He_n(sqrt(2) x).
inline double hermite_physicist(int n, double x) {
    return std::pow(2.0, n / 2.0) * hermite(n, std::sqrt(2.0) * x);
}

/// Coefficients of He_n in the monomial basis, index = power. Exact integers
/// for the orders used here, so they can be compared bit for bit.
inline std::vector<double> hermite_coefficients(int n) {
    std::vector<double> prev{1.0};
    if (n == 0) return prev;
    std::vector<double> cur{0.0, 1.0};
    for (int k = 1; k < n; ++k) {
        std::vector<double> next(static_cast<std::size_t>(k) + 2, 0.0);
        for (std::size_t i = 0; i < cur.size(); ++i) next[i + 1] += cur[i];
        for (std::size_t i = 0; i < prev.size(); ++i) next[i] -= static_cast<double>(k) * prev[i];
        prev = std::move(cur);
        cur = std::move(next);
    }
    return cur;
}

} // namespace conga
