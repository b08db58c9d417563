#include "ddpood/integrator.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>
#include <string>

#include "ddpood/errors.hpp"
#include "ddpood/io.hpp"
#include "ddpood/kernels.hpp"

namespace ddpood {

namespace {

void require_finite(std::span<const double> x, const char* what) {
    for (double v : x) {
        if (!std::isfinite(v)) throw IntegrationError(std::string(what) + ": state became non-finite");
    }
}

void check_step(const NoiseSchedule& s, int t, const char* what) {
    if (t < 0 || t > s.max_step()) {
        throw IndexError(std::string(what) + ": step " + std::to_string(t) + " outside [0, T]");
    }
}

}  // namespace

std::string_view method_name(IntegratorMethod method) {
    switch (method) {
        case IntegratorMethod::DDPM: return "ddpm";
        case IntegratorMethod::DDIM: return "ddim";
        case IntegratorMethod::PNDM: return "pndm";
        case IntegratorMethod::PF: return "pf";
    }
    return "unknown";
}

IntegratorMethod parse_method(std::string_view name) {
    std::string lower(name);
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
    if (lower == "ddpm") return IntegratorMethod::DDPM;
    if (lower == "ddim") return IntegratorMethod::DDIM;
    if (lower == "pndm") return IntegratorMethod::PNDM;
    if (lower == "pf" || lower == "pf-rk4" || lower == "pf_rk4") return IntegratorMethod::PF;
    throw ConfigError("unknown integrator method '" + std::string(name) + "'");
}

std::string trajectories_csv(std::span<const Trajectory> runs) {
    std::ostringstream out;
    const std::size_t dim = runs.empty() || runs.front().states.empty() ? 0 : runs.front().states.front().size();
    out << "sample_id,t";
    for (std::size_t i = 0; i < dim; ++i) out << ",x" << i;
    out << '\n';
    for (std::size_t r = 0; r < runs.size(); ++r) {
        for (std::size_t k = 0; k < runs[r].states.size(); ++k) {
            out << r << ',' << runs[r].steps[k];
            for (double v : runs[r].states[k]) out << ',' << format_double(v);
            out << '\n';
        }
    }
    return out.str();
}

Vec forward_diffuse(std::span<const double> x0, int t, std::span<const double> noise, const NoiseSchedule& schedule) {
    require_same_size(x0, noise, "forward_diffuse");
    const double ab = schedule.alpha_bar(t);
    Vec out(x0.size());
    kernels::axpby(std::sqrt(ab), x0, std::sqrt(1.0 - ab), noise, out);
    return out;
}

Vec reverse_step(std::span<const double> x_t, std::span<const double> eps, int t, int delta, double sigma,
                 std::optional<std::span<const double>> noise, const NoiseSchedule& schedule) {
    require_same_size(x_t, eps, "reverse_step");
    if (delta < 1) throw ConfigError("reverse_step: stride must be positive");
    check_step(schedule, t, "reverse_step");
    check_step(schedule, t - delta, "reverse_step");
    const double ab = schedule.alpha_bar(t);
    const double ab_prev = schedule.alpha_bar(t - delta);
    const double residual = 1.0 - ab_prev - sigma * sigma;
    if (sigma < 0.0 || residual < -1e-15) {
        throw ConfigError("reverse_step: sigma^2 exceeds 1 - alpha_bar(t - delta)");
    }
    if (sigma > 0.0 && !noise) throw ConfigError("reverse_step: sigma > 0 needs a noise sample");
    if (noise) require_same_size(x_t, *noise, "reverse_step");

    const double x0_scale = std::sqrt(ab_prev / ab);
    const double eps_scale = std::sqrt(std::max(residual, 0.0)) - std::sqrt(ab_prev * (1.0 - ab) / ab);
    Vec out(x_t.size());
    kernels::axpby(x0_scale, x_t, eps_scale, eps, out);
    if (sigma > 0.0) kernels::axpy(sigma, *noise, out);
    return out;
}

Vec transfer(std::span<const double> x, std::span<const double> eps, int t, int t_next,
             const NoiseSchedule& schedule) {
    require_same_size(x, eps, "transfer");
    check_step(schedule, t, "transfer");
    check_step(schedule, t_next, "transfer");
    const double ab = schedule.alpha_bar(t);
    const double ab_next = schedule.alpha_bar(t_next);
    const double denom =
        std::sqrt(ab) * (std::sqrt((1.0 - ab_next) * ab) + std::sqrt((1.0 - ab) * ab_next));
    // Equal levels: the eps coefficient is 0/0 in this form but its limit is 0.
    const double eps_coef = ab_next == ab ? 0.0 : -(ab_next - ab) / denom;
    Vec out(x.size());
    kernels::axpby(std::sqrt(ab_next / ab), x, eps_coef, eps, out);
    return out;
}

double ddpm_sigma(const NoiseSchedule& schedule, int t, int delta) {
    check_step(schedule, t, "ddpm_sigma");
    check_step(schedule, t - delta, "ddpm_sigma");
    const double ab = schedule.alpha_bar(t);
    const double ab_prev = schedule.alpha_bar(t - delta);
    return std::sqrt((1.0 - ab_prev) / (1.0 - ab) * (1.0 - ab / ab_prev));
}

Vec pndm_combine(std::span<const Vec> history) {
    if (history.size() < 4) throw ConfigError("multistep update needs four eps values; run warmup steps first");
    Vec out(history[0].size(), 0.0);
    constexpr double kWeights[4] = {55.0 / 24.0, -59.0 / 24.0, 37.0 / 24.0, -9.0 / 24.0};
    for (std::size_t k = 0; k < 4; ++k) {
        require_same_size(out, history[k], "pndm_combine");
        kernels::axpy(kWeights[k], history[k], out);
    }
    return out;
}

Vec pndm_step(std::span<const double> x_t, std::span<const Vec> history, int t, int t_next,
              const NoiseSchedule& schedule) {
    return transfer(x_t, pndm_combine(history), t, t_next, schedule);
}

Vec pf_rk4_step(std::span<const double> x, double t, double h, const ScoreField& field, Label label) {
    const NoiseSchedule& schedule = field.schedule();
    const std::size_t d = x.size();
    auto drift = [&](std::span<const double> state, double time, std::span<double> out) {
        field.score(state, time, label, out);
        const double beta = schedule.beta_at(time);
        kernels::axpby(std::sqrt(1.0 - beta) - 1.0, state, -0.5 * beta, out, out);
    };
    Vec k1(d), k2(d), k3(d), k4(d), stage(d);
    drift(x, t, k1);
    kernels::axpby(1.0, x, 0.5 * h, k1, stage);
    drift(stage, t + 0.5 * h, k2);
    kernels::axpby(1.0, x, 0.5 * h, k2, stage);
    drift(stage, t + 0.5 * h, k3);
    kernels::axpby(1.0, x, h, k3, stage);
    drift(stage, t + h, k4);
    Vec out(x.begin(), x.end());
    kernels::axpy(h / 6.0, k1, out);
    kernels::axpy(h / 3.0, k2, out);
    kernels::axpy(h / 3.0, k3, out);
    kernels::axpy(h / 6.0, k4, out);
    require_finite(out, "pf_rk4_step");
    return out;
}

Trajectory run_ddp(const ScoreField& field, std::span<const double> x, const TimeGrid& grid, const RunOptions& options) {
    if (x.size() != field.dim()) throw DimensionError("run_ddp: input dimension mismatch");
    const NoiseSchedule& schedule = field.schedule();
    check_step(schedule, grid.from(), "run_ddp");
    check_step(schedule, grid.to(), "run_ddp");
    if (options.method == IntegratorMethod::DDPM) {
        if (!grid.descending()) {
            throw IntegrationError("DDPM steps are stochastic and cannot run in the inversion direction");
        }
        if (options.rng == nullptr) throw ConfigError("DDPM needs a random source");
    }

    std::optional<GuidedField> guided;
    if (options.condition) guided.emplace(field, *options.condition, options.omega);
    const ScoreField& f = guided ? static_cast<const ScoreField&>(*guided) : field;

    Trajectory traj;
    traj.method = options.method;
    traj.stride = grid.stride();
    Vec state(x.begin(), x.end());
    traj.steps.push_back(grid.from());
    traj.states.push_back(state);

    std::vector<Vec> history;  // newest first
    Vec eps(state.size());
    Vec noise;
    const int step = grid.signed_step();
    for (int t : grid.timesteps()) {
        const int t_next = t + step;
        switch (options.method) {
            case IntegratorMethod::DDIM:
                f.eps(state, t, std::nullopt, eps);
                state = transfer(state, eps, t, t_next, schedule);
                break;
            case IntegratorMethod::PNDM:
                f.eps(state, t, std::nullopt, eps);
                history.insert(history.begin(), eps);
                if (history.size() > 4) history.pop_back();
                state = history.size() < 4 ? transfer(state, eps, t, t_next, schedule)
                                           : pndm_step(state, history, t, t_next, schedule);
                break;
            case IntegratorMethod::PF:
                state = pf_rk4_step(state, t, step, f);
                break;
            case IntegratorMethod::DDPM: {
                f.eps(state, t, std::nullopt, eps);
                const double sigma = options.sigma ? *options.sigma : ddpm_sigma(schedule, t, -step);
                noise = options.rng->normal_vector(state.size());
                state = reverse_step(state, eps, t, -step, sigma, std::span<const double>(noise), schedule);
                break;
            }
        }
        require_finite(state, "run_ddp");
        if (options.keep_states || t_next == grid.to()) {
            traj.steps.push_back(t_next);
            traj.states.push_back(state);
        }
    }
    return traj;
}

Trajectory run_ddp(const ScoreField& field, std::span<const double> x, int t_from, int t_to, int stride,
                   const RunOptions& options) {
    if (t_from == t_to) {
        if (x.size() != field.dim()) throw DimensionError("run_ddp: input dimension mismatch");
        check_step(field.schedule(), t_from, "run_ddp");
        Trajectory traj;
        traj.method = options.method;
        traj.stride = stride;
        traj.steps = {t_from};
        traj.states = {Vec(x.begin(), x.end())};
        return traj;
    }
    return run_ddp(field, x, grid_with_stride(t_from, t_to, stride), options);
}

double reconstruction_error(const ScoreField& field, std::span<const double> x0, int t_max, int stride,
                            IntegratorMethod method) {
    if (!is_deterministic(method)) throw ConfigError("reconstruction error needs a deterministic integrator");
    if (t_max == 0) return 0.0;
    RunOptions options;
    options.method = method;
    options.keep_states = false;
    const Vec noise = run_ddp(field, x0, 0, t_max, stride, options).final_state();
    const Vec back = run_ddp(field, noise, t_max, 0, stride, options).final_state();
    return kernels::l1_distance(x0, back) / static_cast<double>(x0.size());
}

}  // namespace ddpood
