#include "kernels_impl.hpp"

#include <cassert>
#include <cstdlib>
#include <stdexcept>
#include <string>

namespace ddpood::kernels {

namespace {

const KernelTable kScalar{
    "scalar",           scalar::dot,         scalar::axpy, scalar::axpby, scalar::l1_distance,
    scalar::squared_distance, scalar::adam_update,
};

#if defined(DDPOOD_HAVE_AVX2)
const KernelTable kAvx2{
    "avx2",           avx2::dot,         avx2::axpy, avx2::axpby, avx2::l1_distance,
    avx2::squared_distance, avx2::adam_update,
};

bool cpu_has_avx2() {
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
}
#endif

const KernelTable& select_table() {
    const KernelTable* simd = avx2_table();
    if (const char* forced = std::getenv("DDPOOD_SIMD")) {
        const std::string choice(forced);
        if (choice == "scalar") return kScalar;
        if (choice == "avx2") {
            if (simd == nullptr) throw std::runtime_error("DDPOOD_SIMD=avx2 requested but unavailable");
            return *simd;
        }
        if (choice != "auto") throw std::runtime_error("unknown DDPOOD_SIMD value: " + choice);
    }
    return simd != nullptr ? *simd : kScalar;
}

}  // namespace

const KernelTable& scalar_table() { return kScalar; }

const KernelTable* avx2_table() {
#if defined(DDPOOD_HAVE_AVX2)
    static const bool supported = cpu_has_avx2();
    return supported ? &kAvx2 : nullptr;
#else
    return nullptr;
#endif
}

const KernelTable& active() {
    static const KernelTable& table = select_table();
    return table;
}

double dot(std::span<const double> a, std::span<const double> b) {
    assert(a.size() == b.size());
    return active().dot(a.data(), b.data(), a.size());
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
    assert(x.size() == y.size());
    active().axpy(alpha, x.data(), y.data(), x.size());
}

void axpby(double alpha, std::span<const double> x, double beta, std::span<const double> y,
           std::span<double> out) {
    assert(x.size() == y.size() && x.size() == out.size());
    active().axpby(alpha, x.data(), beta, y.data(), out.data(), x.size());
}

double l1_distance(std::span<const double> a, std::span<const double> b) {
    assert(a.size() == b.size());
    return active().l1_distance(a.data(), b.data(), a.size());
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
    assert(a.size() == b.size());
    return active().squared_distance(a.data(), b.data(), a.size());
}

void adam_update(std::span<double> params, std::span<const double> grads, std::span<double> m,
                 std::span<double> v, const AdamStep& step) {
    assert(params.size() == grads.size() && params.size() == m.size() && params.size() == v.size());
    active().adam_update(params.data(), grads.data(), m.data(), v.data(), params.size(), step);
}

}  // namespace ddpood::kernels
