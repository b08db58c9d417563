#include "ddpood/interpolation.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ddpood/errors.hpp"
#include "ddpood/io.hpp"
#include "ddpood/kernels.hpp"

namespace ddpood {

Vec slerp(std::span<const double> a, std::span<const double> b, double sigma) {
    require_same_size(a, b, "slerp");
    if (!(sigma >= 0.0 && sigma <= 1.0)) throw ConfigError("slerp: sigma must lie in [0, 1]");
    const double na = l2_norm(a);
    const double nb = l2_norm(b);
    if (na == 0.0 || nb == 0.0) throw ConfigError("slerp: angle undefined for a zero vector");
    Vec out(a.size());
    if (sigma == 0.0) return Vec(a.begin(), a.end());
    if (sigma == 1.0) return Vec(b.begin(), b.end());
    const double cosine = std::clamp(kernels::dot(a, b) / (na * nb), -1.0, 1.0);
    const double theta = std::acos(cosine);
    if (theta < 1e-6) {
        kernels::axpby(1.0 - sigma, a, sigma, b, out);
        return out;
    }
    const double s = std::sin(theta);
    kernels::axpby(std::sin((1.0 - sigma) * theta) / s, a, std::sin(sigma * theta) / s, b, out);
    return out;
}

Vec invert_to_noise(const ScoreField& field, std::span<const double> x, const InterpolationSettings& settings) {
    RunOptions options;
    options.method = settings.method;
    options.keep_states = false;
    return run_ddp(field, x, 0, field.schedule().max_step(), settings.stride, options).final_state();
}

namespace {

Vec denoise_from(const ScoreField& field, std::span<const double> x, int t, const InterpolationSettings& settings) {
    RunOptions options;
    options.method = settings.method;
    options.keep_states = false;
    return run_ddp(field, x, t, 0, settings.stride, options).final_state();
}

void require_deterministic(const InterpolationSettings& settings) {
    if (!is_deterministic(settings.method)) throw ConfigError("interpolation needs a deterministic integrator");
}

}  // namespace

Vec symmetric_interpolate(const ScoreField& field, std::span<const double> x1, std::span<const double> x2,
                          double sigma, const InterpolationSettings& settings) {
    require_deterministic(settings);
    require_same_size(x1, x2, "symmetric_interpolate");
    const Vec n1 = invert_to_noise(field, x1, settings);
    const Vec n2 = invert_to_noise(field, x2, settings);
    return denoise_from(field, slerp(n1, n2, sigma), field.schedule().max_step(), settings);
}

Vec asymmetric_from_noise(const ScoreField& field, std::span<const double> x1, std::span<const double> noise2, int t,
                          const InterpolationSettings& settings) {
    require_deterministic(settings);
    require_same_size(x1, noise2, "asymmetric_interpolate");
    if (t < 0 || t > field.schedule().max_step()) throw IndexError("asymmetric_interpolate: t outside [0, T]");
    if (t % settings.stride != 0) throw ConfigError("asymmetric_interpolate: t must lie on the stride grid");
    if (t == 0) return Vec(x1.begin(), x1.end());
    const double ab = field.schedule().alpha_bar(t);
    Vec mixed(x1.size());
    kernels::axpby(std::sqrt(ab), x1, std::sqrt(1.0 - ab), noise2, mixed);
    return denoise_from(field, mixed, t, settings);
}

Vec asymmetric_interpolate(const ScoreField& field, std::span<const double> x1, std::span<const double> x2, int t,
                           const InterpolationSettings& settings) {
    require_deterministic(settings);
    require_same_size(x1, x2, "asymmetric_interpolate");
    if (t == 0) return Vec(x1.begin(), x1.end());
    return asymmetric_from_noise(field, x1, invert_to_noise(field, x2, settings), t, settings);
}

std::vector<SweepRow> asymmetric_sweep(const ScoreField& field, std::span<const double> x1, std::span<const double> x2,
                                       std::span<const int> steps, const InterpolationSettings& settings) {
    const Vec noise2 = invert_to_noise(field, x2, settings);
    std::vector<SweepRow> rows;
    for (int t : steps) rows.push_back({static_cast<double>(t), asymmetric_from_noise(field, x1, noise2, t, settings)});
    return rows;
}

std::vector<SweepRow> symmetric_sweep(const ScoreField& field, std::span<const double> x1, std::span<const double> x2,
                                      std::span<const double> sigmas, const InterpolationSettings& settings) {
    require_deterministic(settings);
    const Vec n1 = invert_to_noise(field, x1, settings);
    const Vec n2 = invert_to_noise(field, x2, settings);
    std::vector<SweepRow> rows;
    for (double s : sigmas) {
        rows.push_back({s, denoise_from(field, slerp(n1, n2, s), field.schedule().max_step(), settings)});
    }
    return rows;
}

std::string sweep_csv(std::string_view mode, std::span<const SweepRow> rows) {
    std::ostringstream out;
    const std::size_t dim = rows.empty() ? 0 : rows.front().output.size();
    out << "mode,parameter";
    for (std::size_t i = 0; i < dim; ++i) out << ",x" << i;
    out << '\n';
    for (const SweepRow& row : rows) {
        out << mode << ',' << format_double(row.parameter);
        for (double v : row.output) out << ',' << format_double(v);
        out << '\n';
    }
    return out.str();
}

}  // namespace ddpood
