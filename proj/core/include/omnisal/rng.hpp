#ifndef OMNISAL_RNG_HPP
#define OMNISAL_RNG_HPP

#include <cstdint>

namespace omnisal {

/// Deterministic splitmix64 generator. All parameter generation in this
/// project flows through Rng so that a seed fully determines every weight,
/// independent of platform or standard-library implementation.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Uniform in [0, 1), 53-bit resolution.
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    float uniform(float lo, float hi) {
        return lo + static_cast<float>(next_double()) * (hi - lo);
    }

    /// Derive an independent stream; the parent advances once.
    Rng fork(std::uint64_t stream_id) {
        return Rng(next_u64() ^ (stream_id * 0xD6E8FEB86659FD93ULL));
    }

private:
    std::uint64_t state_;
};

} // namespace omnisal

#endif
