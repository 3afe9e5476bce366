#pragma once

#include <cstdint>
#include <string_view>

namespace fedsciml {

/// Counter-based deterministic RNG. The state is (seed, stream, counter) and
/// each draw mixes the triple through a splitmix-style permutation, so streams
/// are independent and reproducible regardless of call interleaving or
/// platform. All randomness in the toolkit flows from one master seed through
/// named substreams derived with substream().
class CounterRng {
public:
    CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
        : seed_(seed), stream_(stream) {}

    std::uint64_t next_u64() {
        return mix(seed_, stream_, counter_++);
    }

    /// Uniform on [0,1) with 53 random bits.
    double uniform01() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) {
        return lo + (hi - lo) * uniform01();
    }

    /// Integer in [0, n), n >= 1. Uses rejection-free modulo; bias is
    /// negligible for the small n used here (subsampling, shuffles).
    std::uint64_t below(std::uint64_t n) {
        return next_u64() % n;
    }

    std::uint64_t counter() const { return counter_; }

    static std::uint64_t mix(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter) {
        std::uint64_t z = seed;
        z ^= 0x9e3779b97f4a7c15ULL + stream * 0xbf58476d1ce4e5b9ULL;
        z += counter * 0x94d049bb133111ebULL + 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

private:
    std::uint64_t seed_;
    std::uint64_t stream_;
    std::uint64_t counter_ = 0;
};

/// FNV-1a hash of a stream name, used to derive substream ids from labels
/// like "init" or "sampling" plus an optional index (e.g. a client id).
inline std::uint64_t substream(std::string_view name, std::uint64_t index = 0) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : name) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    h ^= index + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    return h;
}

} // namespace fedsciml
