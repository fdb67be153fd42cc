#pragma once

#include <cstdint>
#include <cmath>

namespace fireflow {

/// SplitMix64 generator. Small, fast, and fully specified arithmetic, so
/// streams are reproducible bit-for-bit across runs and thread counts.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0, 1).
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller; second draw of each pair is cached.
    double normal() {
        if (has_cached_) {
            has_cached_ = false;
            return cached_;
        }
        const double u1 = 1.0 - uniform();  // (0, 1], keeps log finite
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        cached_ = r * std::sin(a);
        has_cached_ = true;
        return r * std::cos(a);
    }

  private:
    std::uint64_t state_;
    double cached_ = 0.0;
    bool has_cached_ = false;
};

/// Per-item seed derivation: independent of worker count, so parallel loops
/// that give each item its own Rng produce identical results to serial runs.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
    Rng g(master ^ (0xD1B54A32D192ED03ull * (index + 1)));
    return g.next_u64();
}

}  // namespace fireflow
