#include "kernels_impl.hpp"

#include <cmath>

namespace ddpood::kernels::scalar {

double dot(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
    return acc;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void axpby(double alpha, const double* x, double beta, const double* y, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = alpha * x[i] + beta * y[i];
}

double l1_distance(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += std::abs(a[i] - b[i]);
    return acc;
}

double squared_distance(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return acc;
}

void adam_update(double* params, const double* grads, double* m, double* v, std::size_t n,
                 const AdamStep& step) {
    const double c1 = 1.0 - step.beta1;
    const double c2 = 1.0 - step.beta2;
    for (std::size_t i = 0; i < n; ++i) {
        m[i] = step.beta1 * m[i] + c1 * grads[i];
        v[i] = step.beta2 * v[i] + c2 * grads[i] * grads[i];
        const double m_hat = m[i] / step.bias_correction1;
        const double v_hat = v[i] / step.bias_correction2;
        params[i] -= step.learning_rate * m_hat / (std::sqrt(v_hat) + step.epsilon);
    }
}

}  // namespace ddpood::kernels::scalar
