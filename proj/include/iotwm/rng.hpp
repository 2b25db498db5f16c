#pragma once

// Seeding discipline: every stochastic routine takes an explicit 64-bit seed
// and derives independent substreams with mix64(). No ambient RNG anywhere.

#include <cstdint>
#include <random>

namespace iotwm {

// splitmix64 finalizer. Good avalanche, cheap, and stable across platforms;
// used both for seed derivation and for the fingerprint mixing hash.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

// Derive a child seed for a named substream (worker index, device id, ...).
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    return mix64(seed ^ mix64(stream));
}

// Thin wrapper so call sites don't repeat the distribution boilerplate.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    double gaussian(double mu, double sigma) {
        return std::normal_distribution<double>(mu, sigma)(eng_);
    }
    double uniform() {  // [0,1)
        return std::uniform_real_distribution<double>(0.0, 1.0)(eng_);
    }
    // Uniform integer in [lo, hi], inclusive.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
        return std::uniform_int_distribution<std::int64_t>(lo, hi)(eng_);
    }
    bool bernoulli(double p) { return uniform() < p; }

    std::mt19937_64& engine() { return eng_; }

private:
    std::mt19937_64 eng_;
};

}  // namespace iotwm
