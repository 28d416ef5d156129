#pragma once

#include <cstdint>
#include <cmath>
#include <numbers>

namespace conga {

/// Seed provenance for one replica stream: a root seed plus a stream index.
/// Identical (root, stream_index) pairs reproduce the same draws bit for bit;
/// distinct indices give statistically independent streams.
struct SeedSpec {
    std::uint64_t root = 0;
    std::uint64_t stream_index = 0;
};

// SplitMix64 finalizer (Steele/Lea/Flood). Used both as the output mix of the
// counter-based stream and as the splitting rule between streams.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Counter-based random stream: draw i is mix64(base + i*gamma), so streams
/// never share state and replicas can run in any order. The base is derived
/// from SeedSpec by mixing the root and the stream index through mix64 twice.
class NormalStream {
public:
    NormalStream() : NormalStream(SeedSpec{}) {}
    explicit NormalStream(SeedSpec seed)
        : base_(mix64(mix64(seed.root) ^
                      (seed.stream_index * 0xd1342543de82ef95ULL + 0x2545f4914f6cdd1dULL))) {}

    std::uint64_t next_u64() {
        counter_ += 0x9e3779b97f4a7c15ULL;
        return mix64(base_ ^ counter_);
    }

    /// Uniform draw in (0, 1].
    double next_uniform() {
        return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
    }

    /// Standard normal draw (Box–Muller, second value cached).
    double operator()() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = next_uniform();
        const double u2 = next_uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

private:
    std::uint64_t base_;
    std::uint64_t counter_ = 0;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

inline NormalStream make_stream(SeedSpec seed) { return NormalStream(seed); }

} // namespace conga
