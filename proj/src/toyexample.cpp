#include "ddpood/toyexample.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "ddpood/errors.hpp"
#include "ddpood/io.hpp"
#include "ddpood/random.hpp"

namespace ddpood {

double GridFunction::max_abs() const { return ddpood::max_abs(values); }

std::size_t SupportMask::count() const { return static_cast<std::size_t>(std::count(cells.begin(), cells.end(), true)); }

SupportMask SupportMask::standard(std::size_t n) {
    if (n < 4 || n % 4 != 0) throw ConfigError("grid resolution must be a positive multiple of 4");
    SupportMask m;
    m.cells.assign(n, false);
    for (std::size_t j = 0; j < n / 4; ++j) m.cells[j] = true;
    for (std::size_t j = n / 2; j < 3 * n / 4; ++j) m.cells[j] = true;
    return m;
}

GridFunction restrict(const GridFunction& r, const SupportMask& mask) {
    if (r.size() != mask.size()) throw DimensionError("restrict: resolution mismatch");
    GridFunction out = r;
    for (std::size_t j = 0; j < out.size(); ++j) {
        if (!mask.cells[j]) out.values[j] = 0.0;
    }
    return out;
}

ToyOperator ToyOperator::moving(double shift, std::size_t n) {
    const double cells = shift * static_cast<double>(n);
    const double rounded = std::round(cells);
    if (std::abs(cells - rounded) > 1e-9) throw ConfigError("shift does not land on a whole number of cells");
    ToyOperator op;
    op.kind = Kind::Moving;
    op.shift_cells = static_cast<long>(rounded);
    return op;
}

ToyOperator ToyOperator::mixing(double a, double b, std::size_t n) {
    if (!(a >= 0.0 && a < b && b <= 1.0)) throw ConfigError("mixing window needs 0 <= a < b <= 1");
    ToyOperator op;
    op.kind = Kind::Mixing;
    op.window_begin = static_cast<std::size_t>(std::floor(a * static_cast<double>(n) + 1e-9));
    op.window_end = static_cast<std::size_t>(std::ceil(b * static_cast<double>(n) - 1e-9));
    op.window_end = std::max(op.window_end, op.window_begin + 1);
    return op;
}

std::string ToyOperator::describe() const {
    if (kind == Kind::Moving) return "shift " + std::to_string(shift_cells) + " cells";
    return "mean over cells [" + std::to_string(window_begin) + ", " + std::to_string(window_end) + ")";
}

GridFunction apply_operator(const ToyOperator& op, const GridFunction& r) {
    const std::size_t n = r.size();
    GridFunction out = GridFunction::constant(n, 0.0);
    if (op.kind == ToyOperator::Kind::Moving) {
        for (std::size_t j = 0; j < n; ++j) {
            const long src = static_cast<long>(j) + op.shift_cells;
            if (src >= 0 && src < static_cast<long>(n)) out.values[j] = r.values[static_cast<std::size_t>(src)];
        }
        return out;
    }
    if (op.window_end > n || op.window_begin >= op.window_end) throw ConfigError("mixing window outside the grid");
    double sum = 0.0;
    for (std::size_t j = op.window_begin; j < op.window_end; ++j) sum += r.values[j];
    std::fill(out.values.begin(), out.values.end(), sum / static_cast<double>(op.window_end - op.window_begin));
    return out;
}

std::vector<ToyOperator> identity_operators() { return {ToyOperator::identity()}; }

std::vector<ToyOperator> moving_operators(std::size_t n) {
    return {ToyOperator::moving(0.0, n), ToyOperator::moving(0.25, n), ToyOperator::moving(-0.25, n)};
}

std::vector<ToyOperator> dyadic_mixing_operators(std::size_t n) {
    if (n == 0 || (n & (n - 1)) != 0) throw ConfigError("dyadic windows need a power-of-two resolution");
    std::vector<ToyOperator> ops;
    for (std::size_t width = n; width >= 1; width /= 2) {
        for (std::size_t begin = 0; begin < n; begin += width) {
            ToyOperator op;
            op.kind = ToyOperator::Kind::Mixing;
            op.window_begin = begin;
            op.window_end = begin + width;
            ops.push_back(op);
        }
    }
    return ops;
}

bool passes_all(const GridFunction& r, const SupportMask& mask, std::span<const ToyOperator> ops, double sigma) {
    for (const ToyOperator& op : ops) {
        if (restrict(apply_operator(op, r), mask).max_abs() > sigma) return false;
    }
    return true;
}

bool verify_witness(const GridFunction& r, const SupportMask& mask, std::span<const ToyOperator> ops, double sigma) {
    if (r.size() != mask.size()) return false;
    if (!(r.max_abs() > sigma)) return false;
    // Direct re-evaluation without the shared helpers.
    const std::size_t n = r.size();
    for (const ToyOperator& op : ops) {
        for (std::size_t j = 0; j < n; ++j) {
            if (!mask.cells[j]) continue;
            double v = 0.0;
            if (op.kind == ToyOperator::Kind::Moving) {
                const long src = static_cast<long>(j) + op.shift_cells;
                v = src >= 0 && src < static_cast<long>(n) ? r.values[static_cast<std::size_t>(src)] : 0.0;
            } else {
                for (std::size_t k = op.window_begin; k < op.window_end; ++k) v += r.values[k];
                v /= static_cast<double>(op.window_end - op.window_begin);
            }
            if (std::abs(v) > sigma) return false;
        }
    }
    return true;
}

bool shifts_cover(const SupportMask& mask, std::span<const ToyOperator> ops) {
    const auto n = static_cast<long>(mask.size());
    for (long j = 0; j < n; ++j) {
        bool covered = false;
        for (const ToyOperator& op : ops) {
            if (op.kind != ToyOperator::Kind::Moving) continue;
            // Cell j of r shows up at output cell j - shift.
            const long seen_at = j - op.shift_cells;
            if (seen_at >= 0 && seen_at < n && mask.cells[static_cast<std::size_t>(seen_at)]) {
                covered = true;
                break;
            }
        }
        if (!covered) return false;
    }
    return true;
}

AnnihilatorVerdict annihilator_empty(double sigma, const SupportMask& mask, std::span<const ToyOperator> ops,
                                     std::size_t budget, std::uint64_t seed) {
    if (!(sigma >= 0.0)) throw ConfigError("detector threshold must be non-negative");
    if (mask.count() == 0) throw ConfigError("support mask must be nonempty");
    const std::size_t n = mask.size();
    const double height = 2.0 * sigma + 1.0;
    AnnihilatorVerdict verdict;
    auto consider = [&](GridFunction r) {
        ++verdict.candidates_checked;
        if (r.max_abs() > sigma && passes_all(r, mask, ops, sigma)) {
            verdict.empty = false;
            verdict.witness = std::move(r);
            return true;
        }
        return false;
    };

    for (std::size_t j = 0; j < n; ++j) {
        GridFunction spike = GridFunction::constant(n, 0.0);
        spike.values[j] = height;
        if (consider(std::move(spike))) return verdict;
    }
    for (std::size_t j = 0; j < n;) {
        if (mask.cells[j]) {
            ++j;
            continue;
        }
        std::size_t end = j;
        while (end < n && !mask.cells[end]) ++end;
        GridFunction bump = GridFunction::constant(n, 0.0);
        const double width = static_cast<double>(end - j);
        for (std::size_t k = j; k < end; ++k) {
            const double u = (static_cast<double>(k - j) + 0.5) / width;
            bump.values[k] = height * std::sin(std::numbers::pi * u);
        }
        if (consider(std::move(bump))) return verdict;
        j = end;
    }
    Rng rng(seed);
    for (std::size_t b = 0; b < budget; ++b) {
        GridFunction r = GridFunction::constant(n, 0.0);
        for (std::size_t k = 0; k < n; ++k) {
            if (!mask.cells[k]) r.values[k] = rng.normal() * height;
        }
        if (consider(std::move(r))) return verdict;
    }
    return verdict;
}

std::string grid_function_csv(const GridFunction& r) {
    std::ostringstream out;
    out << "cell,x,value\n";
    for (std::size_t j = 0; j < r.size(); ++j) {
        out << j << ',' << format_double((static_cast<double>(j) + 0.5) / static_cast<double>(r.size())) << ','
            << format_double(r.values[j]) << '\n';
    }
    return out.str();
}

}  // namespace ddpood
