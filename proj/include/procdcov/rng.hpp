#pragma once

// Deterministic, stream-splittable random sources. A stream is fully
// determined by (seed, stream_id); distinct stream_ids give decorrelated
// generators, so parallel and serial runs of the same experiment draw
// identical samples.

#include <cmath>
#include <cstdint>
#include <random>

namespace procdcov {

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

} // namespace detail

/// Combine identifiers into a single stream id (replication index,
/// rho index, subcomponent tag, ...).
inline std::uint64_t mix_stream_id(std::uint64_t a, std::uint64_t b) {
    std::uint64_t s = a * 0x9e3779b97f4a7c15ULL + 0x2545f4914f6cdd1dULL;
    s ^= b + 0x9e3779b97f4a7c15ULL + (s << 6) + (s >> 2);
    return detail::splitmix64(s);
}

inline std::uint64_t mix_stream_id(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
    return mix_stream_id(mix_stream_id(a, b), c);
}

// All variate transforms are hand-rolled on top of the raw 64-bit output so
// draw sequences do not depend on the standard library's unspecified
// distribution algorithms.
class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint64_t stream_id) {
        std::uint64_t s = mix_stream_id(seed, stream_id);
        std::seed_seq seq{detail::splitmix64(s), detail::splitmix64(s),
                          detail::splitmix64(s), detail::splitmix64(s)};
        engine_.seed(seq);
    }

    std::uint64_t next_u64() { return engine_(); }

    /// U(0,1), never exactly 0.
    double uniform() {
        return (static_cast<double>(engine_() >> 11) + 1.0) * 0x1p-53;
    }

    /// Standard normal via Box-Muller; second variate cached.
    double normal() {
        if (have_cached_) {
            have_cached_ = false;
            return cached_;
        }
        const double u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * 3.14159265358979323846 * u2;
        cached_ = r * std::sin(theta);
        have_cached_ = true;
        return r * std::cos(theta);
    }

    /// Exponential(1).
    double exponential() { return -std::log(uniform()); }

private:
    std::mt19937_64 engine_;
    double cached_ = 0.0;
    bool have_cached_ = false;
};

/// Factory matching the (seed, stream_id) contract.
inline RngStream rng_stream(std::uint64_t seed, std::uint64_t stream_id) {
    return RngStream(seed, stream_id);
}

} // namespace procdcov
