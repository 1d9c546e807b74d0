#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace provlab {

// SplitMix64 output function. Stateless: same input, same output.
constexpr uint64_t splitmix64(uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

constexpr uint64_t mix64(uint64_t a, uint64_t b) noexcept {
    return splitmix64(a ^ (0x9e3779b97f4a7c15ULL + (b << 6) + (b >> 2)));
}

constexpr uint64_t fnv1a64(std::string_view s) noexcept {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : s) {
        h ^= static_cast<uint8_t>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

// All derived seeds in the repo come from (master, stage tag, counter).
constexpr uint64_t derive_seed(uint64_t master, std::string_view stage, uint64_t counter = 0) noexcept {
    return splitmix64(mix64(master ^ fnv1a64(stage), counter));
}

// Deterministic stream generator. Box-Muller gaussians computed in double,
// returned as float, so values are identical across runs and platforms.
class Rng {
public:
    explicit Rng(uint64_t seed) noexcept : state_(seed) {}

    uint64_t next_u64() noexcept {
        state_ += 0x9e3779b97f4a7c15ULL;
        uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // uniform in [0, 1)
    double next_double() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    float next_float() noexcept { return static_cast<float>(next_double()); }

    // uniform in [lo, hi)
    float next_uniform(float lo, float hi) noexcept {
        return lo + static_cast<float>(next_double() * (static_cast<double>(hi) - static_cast<double>(lo)));
    }

    // uniform integer in [0, n)
    uint64_t next_below(uint64_t n) noexcept {
        // 53-bit path keeps the modulo bias negligible for desk-scale n
        return static_cast<uint64_t>(next_double() * static_cast<double>(n));
    }

    float next_gaussian() noexcept {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        do {
            u1 = next_double();
        } while (u1 <= 0.0);
        const double u2 = next_double();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        spare_ = static_cast<float>(r * std::sin(a));
        have_spare_ = true;
        return static_cast<float>(r * std::cos(a));
    }

private:
    uint64_t state_;
    float spare_ = 0.0f;
    bool have_spare_ = false;
};

}  // namespace provlab
