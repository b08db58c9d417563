#include "ddpood/random.hpp"

namespace ddpood {

std::size_t Rng::index(std::size_t n) {
    std::uniform_int_distribution<std::size_t> dist(0, n - 1);
    return dist(engine_);
}

int Rng::integer(int lo, int hi) {
    std::uniform_int_distribution<int> dist(lo, hi);
    return dist(engine_);
}

void Rng::fill_normal(std::span<double> out) {
    for (double& v : out) v = normal_(engine_);
}

Vec Rng::normal_vector(std::size_t dim) {
    Vec v(dim);
    fill_normal(v);
    return v;
}

std::uint64_t fnv1a64(std::span<const unsigned char> bytes, std::uint64_t hash) {
    for (unsigned char b : bytes) {
        hash ^= b;
        hash *= 0x100000001b3ULL;
    }
    return hash;
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t master, std::string_view label) {
    const auto* bytes = reinterpret_cast<const unsigned char*>(label.data());
    const std::uint64_t h = fnv1a64({bytes, label.size()});
    return splitmix64(splitmix64(master) ^ h);
}

}  // namespace ddpood
