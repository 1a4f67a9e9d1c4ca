#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace qrlab {

/// Counter-based pseudorandom generator (SplitMix64).  The state advances by
/// a fixed odd constant per draw and the output is a bijective mix of the
/// counter, so a stream is fully determined by its 64-bit seed and can be
/// reproduced bit-for-bit on any platform.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Uniform on [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform on (0, 1]; safe as a log() argument.
    double uniform_open() {
        return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Unit-rate exponential variate.
    double exponential() { return -std::log(uniform_open()); }

    /// Standard normal via Box-Muller (no cached spare, two uniforms per draw).
    double normal() {
        double u1 = uniform_open();
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
    }

    /// Uniform integer in [0, n); n > 0.  Multiply-shift bounded draw.
    std::uint64_t below(std::uint64_t n) {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

private:
    std::uint64_t state_;
};

/// Decorrelated sub-seed for worker/purpose stream `index` of a master seed.
/// Streams are distinct entry points into the counter sequence; documented so
/// parallel runs are reproducible for a fixed (seed, stream-count) pair.
inline std::uint64_t derive_stream(std::uint64_t master_seed, std::uint64_t index) {
    SplitMix64 mixer(master_seed ^ (0xA3C59AC2F1034905ULL + index * 0x9E3779B97F4A7C15ULL));
    return mixer.next_u64();
}

/// In-place Fisher-Yates shuffle driven by a SplitMix64 stream.
template <typename T>
void shuffle(std::vector<T>& v, SplitMix64& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        std::size_t j = static_cast<std::size_t>(rng.below(i));
        std::swap(v[i - 1], v[j]);
    }
}

}  // namespace qrlab
