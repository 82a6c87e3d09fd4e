#pragma once

#include <cmath>
#include <cstdint>

namespace uhddip {

// Counter-based randomness: a stateless avalanche hash over (seed, counters).
// Every consumer addresses its own draw by coordinates, so outputs are
// independent of evaluation order and worker count.

inline uint64_t mix64(uint64_t x) {
    // splitmix64 finalizer
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline uint64_t hash_counters(uint64_t seed, uint64_t a, uint64_t b = 0, uint64_t c = 0) {
    uint64_t h = mix64(seed ^ 0x2545f4914f6cdd1dULL);
    h = mix64(h ^ a);
    h = mix64(h ^ b);
    h = mix64(h ^ c);
    return h;
}

// Uniform double in [0, 1).
inline double counter_uniform(uint64_t seed, uint64_t a, uint64_t b = 0, uint64_t c = 0) {
    return static_cast<double>(hash_counters(seed, a, b, c) >> 11) * 0x1.0p-53;
}

// Uniform integer in [0, n). n must be > 0; modulo bias is negligible for
// the small ranges used here.
inline uint64_t counter_below(uint64_t seed, uint64_t n, uint64_t a, uint64_t b = 0,
                              uint64_t c = 0) {
    return hash_counters(seed, a, b, c) % n;
}

// Small sequential PRNG (xorshift-star flavored) for places where a stream
// is more natural than counters, e.g. weight init. Deterministic across
// platforms, unlike std distributions.
class Rng {
public:
    explicit Rng(uint64_t seed) : state_(mix64(seed ^ 0x853c49e6748fea9bULL)) {
        if (state_ == 0) state_ = 0x9e3779b97f4a7c15ULL;
    }

    uint64_t next_u64() {
        state_ = mix64(state_);
        return state_;
    }

    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Integer in [0, n).
    uint64_t below(uint64_t n) { return next_u64() % n; }

    // Standard normal via Box-Muller.
    double normal() {
        double u1 = uniform();
        double u2 = uniform();
        if (u1 < 1e-300) u1 = 1e-300;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }

private:
    uint64_t state_;
};

}  // namespace uhddip
