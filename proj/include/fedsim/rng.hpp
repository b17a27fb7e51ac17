#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string_view>

namespace fedsim {

// splitmix64 step; used for seeding and for deriving sub-stream seeds.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ull;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

// FNV-1a over bytes; stable way to fold string ids into seed material.
inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xCBF29CE484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x00000100000001B3ull;
    }
    return h;
}

// Mixes a base seed with an arbitrary list of tags into an independent
// sub-stream seed. Same inputs always give the same output; the simulation
// keys every RNG stream as derive_seed(experiment_seed, tag..., index...).
template <typename... Tags>
std::uint64_t derive_seed(std::uint64_t base, Tags... tags) {
    std::uint64_t state = base;
    (void)std::initializer_list<int>{
        (state = splitmix64(state) ^ static_cast<std::uint64_t>(tags), 0)...};
    return splitmix64(state);
}

inline std::uint64_t derive_seed_str(std::uint64_t base, std::string_view tag) {
    return derive_seed(base, fnv1a64(tag));
}

// xoshiro256** with an explicit, implementation-pinned distribution layer.
// Standard-library distributions are not bit-stable across toolchains, so the
// few we need are spelled out here; every simulation result depends on them.
class Rng {
public:
    explicit Rng(std::uint64_t seed) {
        std::uint64_t sm = seed;
        for (auto& word : state_) word = splitmix64(sm);
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
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
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Unbiased integer in [0, n); n must be nonzero.
    std::uint64_t uniform_int(std::uint64_t n) {
        const std::uint64_t threshold = (0ull - n) % n;
        for (;;) {
            const std::uint64_t r = next_u64();
            if (r >= threshold) return r % n;
        }
    }

    // Box-Muller without spare caching: always consumes two uniforms.
    double normal(double mean = 0.0, double stddev = 1.0) {
        double u1 = uniform();
        const double u2 = uniform();
        if (u1 <= 0.0) u1 = 0x1.0p-53;
        const double r = std::sqrt(-2.0 * std::log(u1));
        return mean + stddev * r * std::cos(6.283185307179586476925286766559 * u2);
    }

    // Fisher-Yates over [first, last).
    template <typename It>
    void shuffle(It first, It last) {
        const auto n = static_cast<std::uint64_t>(last - first);
        for (std::uint64_t i = n; i > 1; --i) {
            const std::uint64_t j = uniform_int(i);
            std::swap(first[i - 1], first[j]);
        }
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    std::array<std::uint64_t, 4> state_{};
};

} // namespace fedsim
