#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace ddpood {

/// Discrete-time noise schedule. Step t runs 1..T; index 0 is the clean
/// state with alpha_bar(0) == 1.
class NoiseSchedule {
public:
    /// Takes betas for steps 1..T. Throws ConfigError unless every beta lies in (0, 1).
    static NoiseSchedule from_betas(std::vector<double> betas);

    int max_step() const noexcept { return static_cast<int>(betas_.size()); }

    double beta(int t) const;
    double alpha(int t) const;
    double alpha_bar(int t) const;
    /// (1 - alpha_bar(t-1)) / (1 - alpha_bar(t)) * beta(t); zero at t = 1.
    double posterior_variance(int t) const;

    /// Smooth extension of alpha_bar to real t in [0, T]. Exact table value at
    /// integer t. For linear schedules the product over (1 - beta_i) is
    /// continued through the gamma function; otherwise log alpha_bar is
    /// interpolated linearly between integers.
    double alpha_bar_at(double t) const;
    /// Linear interpolation of the discrete betas (linear extrapolation below t = 1).
    double beta_at(double t) const;

    std::span<const double> betas() const noexcept { return betas_; }
    std::span<const double> alpha_bars() const noexcept { return alpha_bars_; }

    /// Hash over T and the raw beta bytes; stored with trained weights.
    std::uint64_t fingerprint() const;

    bool operator==(const NoiseSchedule& other) const { return betas_ == other.betas_; }

private:
    struct LinearForm {
        double slope;      // beta_i = offset + slope * i
        double offset;
    };

    std::vector<double> betas_;
    std::vector<double> alphas_;
    std::vector<double> alpha_bars_;           // size T + 1
    std::vector<double> posterior_variances_;  // size T + 1, [0] unused
    std::optional<LinearForm> linear_;
};

/// Betas linearly spaced from beta_start to beta_end over T steps.
NoiseSchedule build_linear_schedule(int max_step, double beta_start, double beta_end);

/// Default DDPM range [1e-4, 0.02] for T = 1000, scaled by 1000/T for other T
/// so alpha_bar(T) stays near zero.
NoiseSchedule default_schedule(int max_step = 1000);

struct PosteriorCoefficients {
    double x0;
    double xt;
};

/// Coefficients of the forward-process posterior mean:
/// mu_t = x0 * coef_x0 + x_t * coef_xt.
PosteriorCoefficients posterior_mean_coefficients(const NoiseSchedule& schedule, int t);

/// Fixed-stride sequence of step origins from `from` toward `to`.
/// A denoising grid has from > to; its reverse (inversion direction) has from < to.
class TimeGrid {
public:
    int from() const noexcept { return from_; }
    int to() const noexcept { return to_; }
    int stride() const noexcept { return stride_; }
    int num_steps() const noexcept { return (from_ > to_ ? from_ - to_ : to_ - from_) / stride_; }
    bool descending() const noexcept { return from_ > to_; }
    /// Signed step: negative for a descending grid.
    int signed_step() const noexcept { return descending() ? -stride_ : stride_; }

    /// Step origins: from, from -/+ stride, ... (excludes `to`).
    std::vector<int> timesteps() const;

    TimeGrid reversed() const { return TimeGrid(to_, from_, stride_); }

    bool operator==(const TimeGrid&) const = default;

private:
    friend TimeGrid build_time_grid(int t_start, int t_end, int num_steps);
    friend TimeGrid grid_with_stride(int from, int to, int stride);
    TimeGrid(int from, int to, int stride) : from_(from), to_(to), stride_(stride) {}

    int from_;
    int to_;
    int stride_;
};

/// Evenly spaced decreasing grid; (t_start - t_end) must be divisible by num_steps.
TimeGrid build_time_grid(int t_start, int t_end, int num_steps);

/// Grid between any two steps with a fixed positive stride that divides the span.
TimeGrid grid_with_stride(int from, int to, int stride);

}  // namespace ddpood
