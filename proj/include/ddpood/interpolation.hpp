#pragma once

#include <span>
#include <string>
#include <vector>

#include "ddpood/integrator.hpp"

namespace ddpood {

/// Spherical interpolation; falls back to straight-line interpolation when the
/// angle between a and b is below 1e-6. Zero vectors are rejected.
Vec slerp(std::span<const double> a, std::span<const double> b, double sigma);

struct InterpolationSettings {
    IntegratorMethod method = IntegratorMethod::DDIM;
    int stride = 20;
};

/// Invert both endpoints to t = T, slerp the noises, denoise back to 0.
Vec symmetric_interpolate(const ScoreField& field, std::span<const double> x1, std::span<const double> x2,
                          double sigma, const InterpolationSettings& settings);

/// Invert x2 to noise, mix sqrt(ab_t) x1 + sqrt(1 - ab_t) noise2 and denoise from t.
/// t = 0 returns x1 untouched; t must be a multiple of the stride.
Vec asymmetric_interpolate(const ScoreField& field, std::span<const double> x1, std::span<const double> x2, int t,
                           const InterpolationSettings& settings);

/// The noise x2 maps to under inversion, reusable across a sweep.
Vec invert_to_noise(const ScoreField& field, std::span<const double> x, const InterpolationSettings& settings);

Vec asymmetric_from_noise(const ScoreField& field, std::span<const double> x1, std::span<const double> noise2, int t,
                          const InterpolationSettings& settings);

struct SweepRow {
    double parameter;  // sigma or t
    Vec output;
};

std::vector<SweepRow> asymmetric_sweep(const ScoreField& field, std::span<const double> x1, std::span<const double> x2,
                                       std::span<const int> steps, const InterpolationSettings& settings);
std::vector<SweepRow> symmetric_sweep(const ScoreField& field, std::span<const double> x1, std::span<const double> x2,
                                      std::span<const double> sigmas, const InterpolationSettings& settings);

/// Columns: mode, parameter, x0, x1, ...
std::string sweep_csv(std::string_view mode, std::span<const SweepRow> rows);

}  // namespace ddpood
