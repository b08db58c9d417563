#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ddpood/random.hpp"
#include "ddpood/schedule.hpp"
#include "ddpood/scorefield.hpp"

namespace ddpood {

enum class IntegratorMethod { DDPM, DDIM, PNDM, PF };

std::string_view method_name(IntegratorMethod method);
/// Case-insensitive; throws ConfigError on unknown names.
IntegratorMethod parse_method(std::string_view name);
inline bool is_deterministic(IntegratorMethod m) { return m != IntegratorMethod::DDPM; }

/// States visited by one run, one per grid point including both ends.
struct Trajectory {
    IntegratorMethod method = IntegratorMethod::DDIM;
    int stride = 0;
    std::vector<int> steps;
    std::vector<Vec> states;

    const Vec& final_state() const { return states.back(); }
};

/// Columns: sample_id, t, x0, x1, ...
std::string trajectories_csv(std::span<const Trajectory> runs);

/// sqrt(ab_t) x0 + sqrt(1 - ab_t) noise.
Vec forward_diffuse(std::span<const double> x0, int t, std::span<const double> noise, const NoiseSchedule& schedule);

/// One DDPM/DDIM update from t to t - delta. sigma = 0 is the deterministic
/// update; noise must be supplied exactly when sigma > 0.
Vec reverse_step(std::span<const double> x_t, std::span<const double> eps, int t, int delta, double sigma,
                 std::optional<std::span<const double>> noise, const NoiseSchedule& schedule);

/// Deterministic transfer from step t to step t_next, either direction.
/// Same algebra as reverse_step with sigma = 0, written in the rationalized
/// form that avoids cancellation when the two alpha_bars are close.
Vec transfer(std::span<const double> x, std::span<const double> eps, int t, int t_next,
             const NoiseSchedule& schedule);

/// Full posterior standard deviation for a strided DDPM step t -> t - delta.
double ddpm_sigma(const NoiseSchedule& schedule, int t, int delta);

/// Fourth-order Adams-Bashforth blend of the last four eps values, newest first.
Vec pndm_combine(std::span<const Vec> history);

/// Multistep update from t toward t_next using `history` (newest first, 4 entries).
Vec pndm_step(std::span<const double> x_t, std::span<const Vec> history, int t, int t_next,
              const NoiseSchedule& schedule);

/// Classical RK4 on dx/dt = (sqrt(1 - beta(t)) - 1) x - beta(t)/2 * score(x, t),
/// stepping from t to t + h (h < 0 denoises).
Vec pf_rk4_step(std::span<const double> x, double t, double h, const ScoreField& field, Label label = std::nullopt);

struct RunOptions {
    IntegratorMethod method = IntegratorMethod::DDIM;
    /// When set the field is evaluated through classifier-free guidance at this label.
    std::optional<int> condition;
    double omega = 1.0;
    /// Needed by DDPM only.
    Rng* rng = nullptr;
    /// Replaces the DDPM posterior standard deviation at every step.
    std::optional<double> sigma;
    /// Keep only the endpoints when false.
    bool keep_states = true;
};

/// Integrates along `grid`. A descending grid denoises; an ascending grid
/// runs the same deterministic updates with the step direction flipped.
Trajectory run_ddp(const ScoreField& field, std::span<const double> x, const TimeGrid& grid, const RunOptions& options);

/// Convenience form that returns the one-point trajectory when t_from == t_to.
Trajectory run_ddp(const ScoreField& field, std::span<const double> x, int t_from, int t_to, int stride,
                   const RunOptions& options);

/// Mean absolute difference between x0 and its round trip 0 -> t_max -> 0.
double reconstruction_error(const ScoreField& field, std::span<const double> x0, int t_max, int stride,
                            IntegratorMethod method);

}  // namespace ddpood
