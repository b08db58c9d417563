#include "ddpood/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <string>

#include "ddpood/errors.hpp"
#include "ddpood/random.hpp"

namespace ddpood {

namespace {

// lgamma(z) - lgamma(z - h) for 0 < h < 1 without the cancellation of
// subtracting two large lgamma values.
double lgamma_difference(double z, double h) {
    const double w = z - h;
    if (w < 20.0) return std::lgamma(z) - std::lgamma(w);
    const double log1p_term = std::log1p(-h / z);
    double diff = h * std::log(z) - (w - 0.5) * log1p_term - h;
    diff += 1.0 / (12.0 * z) - 1.0 / (12.0 * w);
    diff -= 1.0 / (360.0 * z * z * z) - 1.0 / (360.0 * w * w * w);
    diff += 1.0 / (1260.0 * std::pow(z, 5)) - 1.0 / (1260.0 * std::pow(w, 5));
    return diff;
}

void check_step(const NoiseSchedule& s, int t, int lo, const char* what) {
    if (t < lo || t > s.max_step()) {
        throw IndexError(std::string(what) + ": step " + std::to_string(t) + " outside [" +
                         std::to_string(lo) + ", " + std::to_string(s.max_step()) + "]");
    }
}

}  // namespace

NoiseSchedule NoiseSchedule::from_betas(std::vector<double> betas) {
    if (betas.empty()) throw ConfigError("noise schedule needs at least one step");
    for (double b : betas) {
        if (!(b > 0.0 && b < 1.0)) throw ConfigError("every beta must lie strictly inside (0, 1)");
    }
    NoiseSchedule s;
    const std::size_t T = betas.size();
    s.betas_ = std::move(betas);
    s.alphas_.resize(T);
    s.alpha_bars_.resize(T + 1);
    s.posterior_variances_.assign(T + 1, 0.0);
    s.alpha_bars_[0] = 1.0;
    for (std::size_t i = 0; i < T; ++i) {
        s.alphas_[i] = 1.0 - s.betas_[i];
        s.alpha_bars_[i + 1] = s.alpha_bars_[i] * s.alphas_[i];
    }
    for (std::size_t t = 1; t <= T; ++t) {
        s.posterior_variances_[t] =
            (1.0 - s.alpha_bars_[t - 1]) / (1.0 - s.alpha_bars_[t]) * s.betas_[t - 1];
    }

    // beta_i = offset + slope * i, i = 1..T
    const double slope = T > 1 ? (s.betas_[T - 1] - s.betas_[0]) / static_cast<double>(T - 1) : 0.0;
    const double offset = s.betas_[0] - slope;
    bool linear = slope >= 0.0;
    for (std::size_t i = 0; linear && i < T; ++i) {
        const double predicted = offset + slope * static_cast<double>(i + 1);
        if (std::abs(predicted - s.betas_[i]) > 1e-14) linear = false;
    }
    if (linear) s.linear_ = LinearForm{slope, offset};
    return s;
}

double NoiseSchedule::beta(int t) const {
    check_step(*this, t, 1, "beta");
    return betas_[static_cast<std::size_t>(t - 1)];
}

double NoiseSchedule::alpha(int t) const {
    check_step(*this, t, 1, "alpha");
    return alphas_[static_cast<std::size_t>(t - 1)];
}

double NoiseSchedule::alpha_bar(int t) const {
    check_step(*this, t, 0, "alpha_bar");
    return alpha_bars_[static_cast<std::size_t>(t)];
}

double NoiseSchedule::posterior_variance(int t) const {
    check_step(*this, t, 1, "posterior_variance");
    return posterior_variances_[static_cast<std::size_t>(t)];
}

double NoiseSchedule::alpha_bar_at(double t) const {
    const double T = static_cast<double>(max_step());
    if (!(t >= 0.0 && t <= T)) {
        throw IndexError("alpha_bar_at: time " + std::to_string(t) + " outside [0, T]");
    }
    const double base = std::floor(t);
    const auto n = static_cast<std::size_t>(base);
    const double h = t - base;
    if (h == 0.0) return alpha_bars_[n];
    const double log_base = std::log(alpha_bars_[n]);
    if (linear_ && linear_->slope > 0.0) {
        // prod_{i=n+1}^{t} slope * (c - i) = slope^h * Gamma(c - n) / Gamma(c - t)
        const double c = (1.0 - linear_->offset) / linear_->slope;
        const double z = c - static_cast<double>(n);
        return std::exp(log_base + h * std::log(linear_->slope) + lgamma_difference(z, h));
    }
    return std::exp(log_base + h * std::log(alphas_[n]));
}

double NoiseSchedule::beta_at(double t) const {
    const std::size_t T = betas_.size();
    if (T == 1) return betas_[0];
    if (t <= 1.0) {
        const double slope = betas_[1] - betas_[0];
        return std::max(0.0, betas_[0] + (t - 1.0) * slope);
    }
    if (t >= static_cast<double>(T)) return betas_[T - 1];
    const double base = std::floor(t);
    const auto i = static_cast<std::size_t>(base);  // betas_[i - 1] is beta(i)
    const double h = t - base;
    return (1.0 - h) * betas_[i - 1] + h * betas_[i];
}

std::uint64_t NoiseSchedule::fingerprint() const {
    const auto T = static_cast<std::uint32_t>(betas_.size());
    unsigned char header[4];
    std::memcpy(header, &T, sizeof(T));
    std::uint64_t h = fnv1a64(header);
    const auto* bytes = reinterpret_cast<const unsigned char*>(betas_.data());
    return fnv1a64({bytes, betas_.size() * sizeof(double)}, h);
}

NoiseSchedule build_linear_schedule(int max_step, double beta_start, double beta_end) {
    if (max_step < 1) throw ConfigError("schedule needs T >= 1");
    if (!(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0)) {
        throw ConfigError("linear schedule requires 0 < beta_start <= beta_end < 1");
    }
    std::vector<double> betas(static_cast<std::size_t>(max_step));
    if (max_step == 1) {
        betas[0] = beta_start;
    } else {
        const double span = beta_end - beta_start;
        for (int i = 0; i < max_step; ++i) {
            betas[static_cast<std::size_t>(i)] =
                beta_start + span * static_cast<double>(i) / static_cast<double>(max_step - 1);
        }
    }
    return NoiseSchedule::from_betas(std::move(betas));
}

NoiseSchedule default_schedule(int max_step) {
    if (max_step < 1) throw ConfigError("schedule needs T >= 1");
    const double scale = 1000.0 / static_cast<double>(max_step);
    const double beta_end = std::min(0.02 * scale, 0.999);
    const double beta_start = std::min(1e-4 * scale, beta_end);
    return build_linear_schedule(max_step, beta_start, beta_end);
}

PosteriorCoefficients posterior_mean_coefficients(const NoiseSchedule& schedule, int t) {
    check_step(schedule, t, 1, "posterior_mean_coefficients");
    const double ab = schedule.alpha_bar(t);
    const double ab_prev = schedule.alpha_bar(t - 1);
    const double denom = 1.0 - ab;
    return {std::sqrt(ab_prev) * schedule.beta(t) / denom,
            std::sqrt(schedule.alpha(t)) * (1.0 - ab_prev) / denom};
}

std::vector<int> TimeGrid::timesteps() const {
    std::vector<int> out;
    const int n = num_steps();
    out.reserve(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) out.push_back(from_ + k * signed_step());
    return out;
}

TimeGrid build_time_grid(int t_start, int t_end, int num_steps) {
    if (!(t_start > t_end && t_end >= 0)) throw ConfigError("time grid requires t_start > t_end >= 0");
    if (num_steps < 1) throw ConfigError("time grid requires at least one step");
    if ((t_start - t_end) % num_steps != 0) {
        throw ConfigError("time grid span " + std::to_string(t_start - t_end) +
                          " is not divisible by " + std::to_string(num_steps) +
                          " steps; fixed step size is required");
    }
    return TimeGrid(t_start, t_end, (t_start - t_end) / num_steps);
}

TimeGrid grid_with_stride(int from, int to, int stride) {
    if (from < 0 || to < 0 || from == to) throw ConfigError("grid endpoints must be distinct and >= 0");
    if (stride < 1) throw ConfigError("grid stride must be positive");
    if (std::abs(from - to) % stride != 0) {
        throw ConfigError("grid span " + std::to_string(std::abs(from - to)) + " is not a multiple of stride " +
                          std::to_string(stride));
    }
    return TimeGrid(from, to, stride);
}

}  // namespace ddpood
