#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ddpood/linalg.hpp"

namespace ddpood {

/// Samples of a function on [0, 1], one value per cell.
struct GridFunction {
    Vec values;

    std::size_t size() const noexcept { return values.size(); }
    double max_abs() const;
    static GridFunction constant(std::size_t n, double c) { return {Vec(n, c)}; }
};

/// Cells the restricted detector can see.
struct SupportMask {
    std::vector<bool> cells;

    std::size_t size() const noexcept { return cells.size(); }
    std::size_t count() const;

    /// [0, n/4) and [n/2, 3n/4); n must be divisible by 4.
    static SupportMask standard(std::size_t n);
};

GridFunction restrict(const GridFunction& r, const SupportMask& mask);

/// Moving operators translate by whole cells (g(x)_i = f(x + i), zero padding
/// past the ends). Mixing operators replace f by its mean over [a, b).
struct ToyOperator {
    enum class Kind { Moving, Mixing };
    Kind kind = Kind::Moving;
    long shift_cells = 0;
    std::size_t window_begin = 0;  // cells, half-open
    std::size_t window_end = 0;

    static ToyOperator identity() { return {}; }
    /// Shift as a fraction of [0, 1]; must land on a whole number of cells.
    static ToyOperator moving(double shift, std::size_t n);
    /// Window [a, b] as fractions of [0, 1], 0 <= a < b <= 1.
    static ToyOperator mixing(double a, double b, std::size_t n);

    std::string describe() const;
};

GridFunction apply_operator(const ToyOperator& op, const GridFunction& r);

std::vector<ToyOperator> identity_operators();
/// Shifts of 0 and +-1/4.
std::vector<ToyOperator> moving_operators(std::size_t n);
/// Every dyadic window [k/2^l, (k+1)/2^l) down to single cells; n must be a power of two.
std::vector<ToyOperator> dyadic_mixing_operators(std::size_t n);

/// True when every g in `ops` keeps max |restrict(g(r))| <= sigma, i.e. the
/// restricted detector accepts r under all operators.
bool passes_all(const GridFunction& r, const SupportMask& mask, std::span<const ToyOperator> ops, double sigma);

/// Re-checks a witness from scratch: |r| > sigma and r passes every check.
bool verify_witness(const GridFunction& r, const SupportMask& mask, std::span<const ToyOperator> ops, double sigma);

/// Every cell lies in the mask after some shift: for each cell j there is a
/// moving operator with shift s such that j - s is a masked cell.
bool shifts_cover(const SupportMask& mask, std::span<const ToyOperator> ops);

struct AnnihilatorVerdict {
    bool empty = true;
    std::optional<GridFunction> witness;
    std::size_t candidates_checked = 0;
};

/// Searches for r with |r| > sigma that passes all checks: a spike at every
/// cell, bumps on each maximal unmasked run, then `budget` random functions
/// supported off the mask.
AnnihilatorVerdict annihilator_empty(double sigma, const SupportMask& mask, std::span<const ToyOperator> ops,
                                     std::size_t budget, std::uint64_t seed);

/// Columns: cell, x, value
std::string grid_function_csv(const GridFunction& r);

}  // namespace ddpood
