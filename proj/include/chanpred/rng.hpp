// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

#include "chanpred/errors.hpp"

namespace chanpred {

// Seed-derivation hash (splitmix64 finalizer). Used everywhere a stream
// must be split off a master seed: derive(seed, index) gives statistically
// independent sub-seeds and is the documented hash(seed, index) of the
// dataset / evaluation contracts.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
    return mix64(seed ^ mix64(index));
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
    return derive_seed(derive_seed(seed, a), b);
}

// Fixed purpose tags so unrelated streams never collide even for equal
// numeric indices.
namespace seed_purpose {
inline constexpr std::uint64_t kDataset    = 0x6461746173657431ULL;
inline constexpr std::uint64_t kParamInit  = 0x706172616d696e69ULL;
inline constexpr std::uint64_t kCodebook   = 0x636f6465626f6f6bULL;
inline constexpr std::uint64_t kShuffle    = 0x73687566666c6531ULL;
inline constexpr std::uint64_t kVaeEps     = 0x7661655f65707331ULL;
inline constexpr std::uint64_t kLinkNoise  = 0x6c696e6b6e6f6973ULL;
inline constexpr std::uint64_t kTrainNoise = 0x74726e6e6f697365ULL;
}  // namespace seed_purpose

// xoshiro256++ (Blackman & Vigna), seeded by splitmix64 expansion of one
// 64-bit seed. Chosen for cross-platform bit-exact reproducibility; all
// randomness in the library flows through this type.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) {
        std::uint64_t sm = seed;
        for (auto& word : state_) {
            sm += 0x9e3779b97f4a7c15ULL;
            std::uint64_t z = sm;
            z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
            z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
            word = z ^ (z >> 31);
        }
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

    // Uniform in [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Standard normal via Box-Muller on the uniform stream above. The
    // second value of each pair is cached, so draws come in a fixed order
    // independent of call sites.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);  // log(0) guard
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    double normal(double mean, double stddev) {
        if (stddev < 0.0) throw config_error("Rng::normal: negative stddev");
        return mean + stddev * normal();
    }

  private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    std::uint64_t state_[4] = {};
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace chanpred
