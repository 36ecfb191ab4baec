#pragma once
#include <cstdint>
#include <cmath>

namespace tabx {

// Deterministic splitmix64 generator. Unlike std::mt19937 + std::*_distribution,
// every draw is bit-identical across platforms and standard libraries, which the
// reproducibility contract depends on.
class Rng {
public:
    explicit Rng(uint64_t seed = 0) : state_(seed) {}

    uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ull;
        uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    // uniform in [0,1)
    double next_double() { return double(next_u64() >> 11) * 0x1.0p-53; }

    // uniform in [0,n); n > 0. Modulo bias is < 2^-40 for our ranges.
    uint64_t next_below(uint64_t n) { return next_u64() % n; }

    // uniform integer in [lo, hi], inclusive
    int64_t next_int(int64_t lo, int64_t hi) {
        return lo + int64_t(next_below(uint64_t(hi - lo + 1)));
    }

    double next_range(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    bool next_bool(double p) { return next_double() < p; }

    // standard normal via Box-Muller; no cached spare, keeps the stream simple
    double next_gauss() {
        double u = 0.0;
        do { u = next_double(); } while (u <= 0.0);
        double v = next_double();
        return std::sqrt(-2.0 * std::log(u)) * std::cos(6.283185307179586 * v);
    }

    // derive an independent stream key (per-table seeds etc.)
    static uint64_t mix(uint64_t a, uint64_t b) {
        uint64_t z = a + 0x9e3779b97f4a7c15ull * (b + 1);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

private:
    uint64_t state_;
};

} // namespace tabx
