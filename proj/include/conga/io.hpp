#pragma once

#include <cstdio>
#include <ostream>
#include <string>

namespace conga {

/// Shortest exact text form a reader can round-trip: 17 significant digits.
inline std::string format_float(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace conga
