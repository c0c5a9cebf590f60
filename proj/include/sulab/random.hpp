#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace sulab {

// SplitMix64 finalizer; used for seed derivation and per-cell hashing.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Derives the seed of child stream `index` from `master`.
constexpr std::uint64_t split_seed(std::uint64_t master, std::uint64_t index) noexcept {
    return mix64(mix64(master) ^ mix64(index + 0x632be59bd9b4e019ULL));
}

constexpr double bits_to_unit(std::uint64_t bits) noexcept {
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

// Deterministic uniform in [0,1) attached to a (seed, row, col) cell.
constexpr double cell_uniform(std::uint64_t seed, std::uint64_t row, std::uint64_t col) noexcept {
    return bits_to_unit(mix64(split_seed(seed, row) ^ mix64(col * 0xd1b54a32d192ed03ULL + 1)));
}

// Seeded stream with platform-independent draws. std distributions are
// avoided because their output is implementation-defined.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : engine_(mix64(seed)) {}

    std::uint64_t next() { return engine_(); }

    // Uniform in [0,1).
    double uniform() { return bits_to_unit(engine_()); }

    bool bernoulli(double p) { return uniform() < p; }

    // Uniform integer in [0, n).
    std::size_t index(std::size_t n) {
        return static_cast<std::size_t>(uniform() * static_cast<double>(n)) % n;
    }

    // Inverse-CDF draw over index order with a single uniform.
    std::size_t categorical(std::span<const double> probs) {
        const double u = uniform();
        double acc = 0.0;
        std::size_t last = 0;
        for (std::size_t i = 0; i < probs.size(); ++i) {
            if (probs[i] <= 0.0) continue;
            last = i;
            acc += probs[i];
            if (u < acc) return i;
        }
        return last;
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace sulab
