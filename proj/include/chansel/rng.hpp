#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace chansel {

// splitmix64; used for seeding, stream derivation and state hashing.
inline uint64_t splitmix64(uint64_t& state) {
    uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline uint64_t hash_mix(uint64_t h, uint64_t v) {
    h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    return h;
}

// Derive an independent stream seed from a master seed and a tag path.
// Streams with different tags (or indices) never share draws, so adding a
// consumer of one stream cannot perturb another.
inline uint64_t derive_seed(uint64_t master, std::string_view tag,
                            uint64_t a = 0, uint64_t b = 0) {
    uint64_t h = master ^ 0x106689d45497fdb5ULL;
    for (char c : tag) {
        h = (h ^ static_cast<uint8_t>(c)) * 0x100000001b3ULL;
    }
    h = hash_mix(h, a * 0x9e3779b97f4a7c15ULL + 1);
    h = hash_mix(h, b + 0x2545f4914f6cdd1dULL);
    uint64_t t = h;
    return splitmix64(t);
}

// xoshiro256** with explicit, platform-independent distributions. The
// standard <random> distributions are not pinned by the standard, so all
// sampling goes through this class to keep seeded runs byte-reproducible.
class Rng {
  public:
    explicit Rng(uint64_t seed) {
        uint64_t sm = seed;
        for (auto& w : s_) w = splitmix64(sm);
    }

    uint64_t next_u64() {
        const uint64_t result = rotl(s_[1] * 5, 7) * 9;
        const uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // uniform double in [0, 1), 53-bit resolution
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // uniform integer in [lo, hi], inclusive
    int uniform_int(int lo, int hi) {
        uint64_t span = static_cast<uint64_t>(hi - lo) + 1;
        uint64_t limit = UINT64_MAX - UINT64_MAX % span;
        uint64_t r;
        do {
            r = next_u64();
        } while (r >= limit);
        return lo + static_cast<int>(r % span);
    }

    double exponential(double mean) { return -mean * std::log1p(-uniform()); }

    // Box-Muller without caching: two draws per variate, fixed consumption
    double normal() {
        double u1 = 1.0 - uniform();  // (0, 1]
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }

    uint64_t state_hash() const {
        uint64_t h = 0x811c9dc5;
        for (auto w : s_) h = hash_mix(h, w);
        return h;
    }

  private:
    static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    uint64_t s_[4];
};

}  // namespace chansel
