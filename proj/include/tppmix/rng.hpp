#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace tppmix {

/// SplitMix64 finalizer. Used to turn structured seeds (seed, index, ...) into
/// well-mixed engine seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Seed of the stream belonging to item `index` under `seed`:
/// splitmix64(seed xor index).
constexpr std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t index) noexcept {
    return splitmix64(seed ^ index);
}

/// Deterministic random source. Conversions to reals are done here rather
/// than through <random> distributions so that streams are identical across
/// standard library implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : engine_(splitmix64(seed)) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform on the open interval (0, 1).
    double uniform_open() {
        for (;;) {
            const double u = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
            if (u > 0.0) return u;
        }
    }

    /// Uniform on [lo, hi).
    double uniform(double lo, double hi) {
        return lo + (hi - lo) * (static_cast<double>(engine_() >> 11) * 0x1.0p-53);
    }

    /// Uniform integer in [0, n). Lemire-free rejection to stay unbiased.
    std::uint64_t below(std::uint64_t n) {
        if (n <= 1) return 0;
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        for (;;) {
            const std::uint64_t x = engine_();
            if (x < limit) return x % n;
        }
    }

    double exponential(double rate) { return -std::log(uniform_open()) / rate; }

    /// Child stream derived from the next engine output and `tag`.
    Rng split(std::uint64_t tag) { return Rng(stream_seed(engine_(), tag)); }

private:
    std::mt19937_64 engine_;
};

}  // namespace tppmix
