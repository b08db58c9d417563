#pragma once

#include "ddpood/kernels.hpp"

namespace ddpood::kernels {

namespace scalar {
double dot(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void axpby(double alpha, const double* x, double beta, const double* y, double* out, std::size_t n);
double l1_distance(const double* a, const double* b, std::size_t n);
double squared_distance(const double* a, const double* b, std::size_t n);
void adam_update(double* params, const double* grads, double* m, double* v, std::size_t n,
                 const AdamStep& step);
}  // namespace scalar

#if defined(DDPOOD_HAVE_AVX2)
namespace avx2 {
double dot(const double* a, const double* b, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n);
void axpby(double alpha, const double* x, double beta, const double* y, double* out, std::size_t n);
double l1_distance(const double* a, const double* b, std::size_t n);
double squared_distance(const double* a, const double* b, std::size_t n);
void adam_update(double* params, const double* grads, double* m, double* v, std::size_t n,
                 const AdamStep& step);
}  // namespace avx2
#endif

}  // namespace ddpood::kernels
