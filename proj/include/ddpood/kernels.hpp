#pragma once

// Dense vector kernels used by the hot loops (MLP layers, feature distances,
// optimizer updates). Each kernel has a scalar reference implementation and,
// on x86-64, an AVX2/FMA variant. The active table is chosen once at first
// use from the CPU features; DDPOOD_SIMD=scalar|avx2 forces a choice.

#include <cstddef>
#include <span>
#include <string_view>

namespace ddpood::kernels {

struct AdamStep {
    double learning_rate;
    double beta1;
    double beta2;
    double epsilon;
    double bias_correction1;  // 1 - beta1^step
    double bias_correction2;  // 1 - beta2^step
};

struct KernelTable {
    std::string_view isa;
    double (*dot)(const double* a, const double* b, std::size_t n);
    // y += alpha * x
    void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
    // out = alpha * x + beta * y
    void (*axpby)(double alpha, const double* x, double beta, const double* y, double* out, std::size_t n);
    double (*l1_distance)(const double* a, const double* b, std::size_t n);
    double (*squared_distance)(const double* a, const double* b, std::size_t n);
    void (*adam_update)(double* params, const double* grads, double* m, double* v, std::size_t n,
                        const AdamStep& step);
};

const KernelTable& scalar_table();

// nullptr when the variant is not compiled in or the CPU lacks the features.
const KernelTable* avx2_table();

const KernelTable& active();

double dot(std::span<const double> a, std::span<const double> b);
void axpy(double alpha, std::span<const double> x, std::span<double> y);
void axpby(double alpha, std::span<const double> x, double beta, std::span<const double> y,
           std::span<double> out);
double l1_distance(std::span<const double> a, std::span<const double> b);
double squared_distance(std::span<const double> a, std::span<const double> b);
void adam_update(std::span<double> params, std::span<const double> grads, std::span<double> m,
                 std::span<double> v, const AdamStep& step);

}  // namespace ddpood::kernels
