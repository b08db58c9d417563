#include "ddpood/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ddpood/errors.hpp"
#include "ddpood/kernels.hpp"

namespace ddpood {

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Matrix Matrix::diagonal(std::span<const double> diag) {
    Matrix m(diag.size(), diag.size());
    for (std::size_t i = 0; i < diag.size(); ++i) m(i, i) = diag[i];
    return m;
}

Matrix cholesky(const Matrix& a) {
    if (a.rows() != a.cols()) throw ConfigError("cholesky: matrix is not square");
    const std::size_t n = a.rows();
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < i; ++j) {
            const double scale = std::max(std::abs(a(i, j)), std::abs(a(j, i)));
            if (std::abs(a(i, j) - a(j, i)) > 1e-12 * std::max(1.0, scale)) {
                throw ConfigError("cholesky: matrix is not symmetric");
            }
        }
    }
    Matrix l(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        double diag = a(j, j);
        for (std::size_t k = 0; k < j; ++k) diag -= l(j, k) * l(j, k);
        if (!(diag > 0.0)) throw ConfigError("cholesky: matrix is not positive definite");
        l(j, j) = std::sqrt(diag);
        for (std::size_t i = j + 1; i < n; ++i) {
            double v = a(i, j);
            for (std::size_t k = 0; k < j; ++k) v -= l(i, k) * l(j, k);
            l(i, j) = v / l(j, j);
        }
    }
    return l;
}

Vec solve_lower(const Matrix& lower, std::span<const double> b) {
    const std::size_t n = lower.rows();
    Vec y(b.begin(), b.end());
    for (std::size_t i = 0; i < n; ++i) {
        double v = y[i];
        for (std::size_t k = 0; k < i; ++k) v -= lower(i, k) * y[k];
        y[i] = v / lower(i, i);
    }
    return y;
}

Vec solve_lower_transposed(const Matrix& lower, std::span<const double> b) {
    const std::size_t n = lower.rows();
    Vec y(b.begin(), b.end());
    for (std::size_t ii = n; ii-- > 0;) {
        double v = y[ii];
        for (std::size_t k = ii + 1; k < n; ++k) v -= lower(k, ii) * y[k];
        y[ii] = v / lower(ii, ii);
    }
    return y;
}

Vec matvec(const Matrix& a, std::span<const double> x) {
    if (a.cols() != x.size()) throw DimensionError("matvec: dimension mismatch");
    Vec out(a.rows());
    for (std::size_t r = 0; r < a.rows(); ++r) out[r] = kernels::dot(a.row(r), x);
    return out;
}

double l1_norm(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += std::abs(x);
    return s;
}

double l2_norm(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

double max_abs(std::span<const double> v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

void require_same_size(std::span<const double> a, std::span<const double> b, const char* what) {
    if (a.size() != b.size()) {
        throw DimensionError(std::string(what) + ": dimension mismatch (" + std::to_string(a.size()) +
                             " vs " + std::to_string(b.size()) + ")");
    }
}

}  // namespace ddpood
