#pragma once

#include <cmath>
#include <cstdint>
#include <utility>

namespace nlkw {

/**
 * Counter-based per-stream PRNG (splitmix64 core).
 *
 * A stream is fully determined by (master_seed, stream_id), so path i of a
 * batch draws the same numbers no matter which worker generates it or in
 * what order. Gaussian output is produced by an explicit Box-Muller
 * transform rather than std::normal_distribution, so sequences do not depend
 * on the standard library implementation.
 */
class Rng {
public:
    Rng(std::uint64_t master_seed, std::uint64_t stream_id) {
        // Two finalizer rounds to decorrelate streams with nearby ids.
        std::uint64_t z = mix(master_seed + 0x9E3779B97F4A7C15ULL);
        z ^= mix(stream_id + 0xD1B54A32D192ED03ULL);
        state_ = mix(z);
    }

    std::uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ULL;
        return mix(state_);
    }

    /// Uniform draw in (0, 1]; never returns 0 so log() is always safe.
    double next_uniform_pos() {
        return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
    }

    /// Uniform draw in [0, 1).
    double next_uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Pair of independent standard normal draws (Box-Muller, no rejection,
    /// so the stream position advances by exactly two words per call).
    std::pair<double, double> next_gaussian_pair() {
        const double u1 = next_uniform_pos();
        const double u2 = next_uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * M_PI * u2;
        return {r * std::cos(a), r * std::sin(a)};
    }

    double next_gaussian() {
        return next_gaussian_pair().first;
    }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    std::uint64_t state_ = 0;
};

} // namespace nlkw
