#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace ddpood {

using Vec = std::vector<double>;

/// Row-major dense matrix.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static Matrix identity(std::size_t n);
    static Matrix diagonal(std::span<const double> diag);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    std::span<double> data() noexcept { return data_; }
    std::span<const double> data() const noexcept { return data_; }

    bool operator==(const Matrix&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// Lower-triangular Cholesky factor; throws ConfigError if `a` is not
/// symmetric positive definite.
Matrix cholesky(const Matrix& a);

/// Solves L y = b for lower-triangular L.
Vec solve_lower(const Matrix& lower, std::span<const double> b);

/// Solves L^T y = b for lower-triangular L.
Vec solve_lower_transposed(const Matrix& lower, std::span<const double> b);

Vec matvec(const Matrix& a, std::span<const double> x);

double l1_norm(std::span<const double> v);
double l2_norm(std::span<const double> v);
double max_abs(std::span<const double> v);

void require_same_size(std::span<const double> a, std::span<const double> b, const char* what);

}  // namespace ddpood
