#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace segmeta {

// splitmix64; used to derive independent streams from (seed, counters).
inline uint64_t mix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline uint64_t mix64(uint64_t a, uint64_t b) { return mix64(mix64(a) ^ b); }
inline uint64_t mix64(uint64_t a, uint64_t b, uint64_t c) { return mix64(mix64(a, b) ^ c); }
inline uint64_t mix64(uint64_t a, uint64_t b, uint64_t c, uint64_t d) {
    return mix64(mix64(a, b, c) ^ d);
}

// Seeded generator with explicit uniform/normal transforms so that all
// sampled values are reproducible bit-for-bit for a given seed.
class Rng {
public:
    explicit Rng(uint64_t seed) : engine_(mix64(seed)) {}

    uint64_t next_u64() { return engine_(); }

    // in [0, 1)
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // in [0, n)
    uint64_t uniform_int(uint64_t n) { return n != 0 ? next_u64() % n : 0; }

    int uniform_range(int lo, int hi) {  // inclusive bounds
        return lo + static_cast<int>(uniform_int(static_cast<uint64_t>(hi - lo + 1)));
    }

    double normal() {
        // Marsaglia polar method, one value per call (no cached spare).
        for (;;) {
            double u = 2.0 * uniform() - 1.0;
            double v = 2.0 * uniform() - 1.0;
            double s = u * u + v * v;
            if (s > 0.0 && s < 1.0) return u * std::sqrt(-2.0 * std::log(s) / s);
        }
    }

    bool bernoulli(double p) { return uniform() < p; }

private:
    std::mt19937_64 engine_;
};

// Single draw from a derived stream; the generator never carries state
// between entities, which keeps per-frame synthesis order-independent.
inline double stream_uniform(uint64_t seed, uint64_t a, uint64_t b, uint64_t c) {
    return static_cast<double>(mix64(seed, a, b, c) >> 11) * 0x1.0p-53;
}

}  // namespace segmeta
