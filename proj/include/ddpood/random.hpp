#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>

#include "ddpood/linalg.hpp"

namespace ddpood {

/// Seeded random source. Every stochastic operation takes one explicitly so
/// results are a pure function of the seed.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double normal() { return normal_(engine_); }
    double uniform() { return uniform_(engine_); }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform_(engine_); }
    /// Uniform integer in [0, n).
    std::size_t index(std::size_t n);
    /// Uniform integer in [lo, hi].
    int integer(int lo, int hi);

    void fill_normal(std::span<double> out);
    Vec normal_vector(std::size_t dim);

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

/// Stable per-stage seed: hashes `label` (e.g. "detector/sample-17/repeat-2")
/// together with the master seed. Independent of call order.
std::uint64_t derive_seed(std::uint64_t master, std::string_view label);

std::uint64_t fnv1a64(std::span<const unsigned char> bytes, std::uint64_t hash = 0xcbf29ce484222325ULL);

}  // namespace ddpood
