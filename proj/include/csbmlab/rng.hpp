#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace csbmlab {

/// Splittable deterministic RNG stream.
///
/// A stream is identified by a 64-bit derived seed. Child streams are
/// obtained by hashing the parent seed with a path element, so the pair
/// (master seed, derivation path) pins the full sample sequence regardless
/// of draw order elsewhere or thread schedule. Streams are single-owner:
/// parallel code derives children instead of sharing one stream.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed) : seed_(seed), eng_(mix(seed)) {}

    /// Derive an independent child stream; does not disturb this stream.
    [[nodiscard]] RngStream child(std::uint64_t path_element) const {
        return RngStream(mix(seed_ ^ mix(path_element + 0x632be59bd9b4e019ULL)));
    }

    std::uint64_t seed() const { return seed_; }

    std::uint64_t next_u64() { return eng_(); }

    /// Uniform in [0, 1) with 53-bit resolution.
    double uniform01() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    bool bernoulli(double p) { return uniform01() < p; }

    /// Uniform integer in [0, n); exact via rejection.
    std::uint64_t uniform_below(std::uint64_t n) {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x;
        do {
            x = eng_();
        } while (x >= limit);
        return x % n;
    }

    /// Standard normal via Box-Muller; the second value is cached.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform01();
        while (u1 <= 0.0) u1 = uniform01();
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    /// SplitMix64 finalizer; full-period 64-bit mixer.
    static std::uint64_t mix(std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

private:
    std::uint64_t seed_;
    std::mt19937_64 eng_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace csbmlab
