#pragma once

// Self-contained random number generation. Every random draw in the project
// flows through these generators so that a (seed, stream) pair reproduces
// results exactly; <random> distributions are avoided because their
// algorithms are implementation-defined.

#include <cmath>
#include <complex>
#include <cstdint>
#include <string_view>

namespace oim {

inline std::uint64_t splitmix64_next(std::uint64_t& s) {
    s += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = s;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// Named sub-stream derivation: seed' = two splitmix64 outputs of
// base ^ (fnv1a(tag) + index * golden-ratio), folded together. Each consumer
// of randomness (graph generation, trajectory noise, initial perturbation,
// sweep points) gets its own (tag, index) pair.
inline std::uint64_t derive_seed(std::uint64_t base, std::string_view tag,
                                 std::uint64_t index = 0) {
    std::uint64_t s = base ^ (fnv1a64(tag) + 0x9e3779b97f4a7c15ULL * index);
    const std::uint64_t a = splitmix64_next(s);
    const std::uint64_t b = splitmix64_next(s);
    return a ^ (b << 1 | b >> 63);
}

class Xoshiro256pp {
  public:
    explicit Xoshiro256pp(std::uint64_t seed) {
        std::uint64_t s = seed;
        for (auto& w : state_) w = splitmix64_next(s);
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Uniform in [0, 1) with 53 random bits.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    std::uint64_t state_[4];
};

// Standard normal variates via the Marsaglia polar method.
class GaussianRng {
  public:
    explicit GaussianRng(std::uint64_t seed) : rng_(seed) {}

    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double x, y, s;
        do {
            x = 2.0 * rng_.next_double() - 1.0;
            y = 2.0 * rng_.next_double() - 1.0;
            s = x * x + y * y;
        } while (s >= 1.0 || s == 0.0);
        const double f = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = y * f;
        have_spare_ = true;
        return x * f;
    }

    // Complex Wiener increment dZ = (dWx + i dWp)/sqrt(2) with
    // dWx, dWp ~ N(0, dt), so E|dZ|^2 = dt.
    std::complex<double> wiener(double dt) {
        const double a = std::sqrt(0.5 * dt);
        const double re = a * normal();
        const double im = a * normal();
        return {re, im};
    }

    double uniform() { return rng_.next_double(); }
    std::uint64_t next_u64() { return rng_.next_u64(); }

  private:
    Xoshiro256pp rng_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace oim
