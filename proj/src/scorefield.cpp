#include "ddpood/scorefield.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "ddpood/errors.hpp"
#include "ddpood/kernels.hpp"

namespace ddpood {

namespace {

// grad_x log p_t and log p_t for a mixture at a given alpha_bar.
double mixture_gradient(const GaussianMixture& mix, double alpha_bar, std::span<const double> x,
                        std::span<double> grad) {
    const std::size_t d = mix.dim();
    const std::size_t K = mix.size();
    const double mean_scale = std::sqrt(alpha_bar);
    const double noise_var = 1.0 - alpha_bar;

    std::vector<double> log_terms(K);
    std::vector<Vec> component_grads(K);
    Vec diff(d);
    for (std::size_t k = 0; k < K; ++k) {
        Matrix cov(d, d);
        for (std::size_t i = 0; i < d; ++i) {
            for (std::size_t j = 0; j < d; ++j) cov(i, j) = alpha_bar * mix.covariances[k](i, j);
            cov(i, i) += noise_var;
        }
        const Matrix chol = cholesky(cov);
        for (std::size_t i = 0; i < d; ++i) diff[i] = x[i] - mean_scale * mix.means[k][i];
        const Vec whitened = solve_lower(chol, diff);
        double log_det_half = 0.0;
        for (std::size_t i = 0; i < d; ++i) log_det_half += std::log(chol(i, i));
        const double quad = kernels::dot(whitened, whitened);
        log_terms[k] = std::log(mix.weights[k]) - 0.5 * quad - log_det_half -
                       0.5 * static_cast<double>(d) * std::log(2.0 * std::numbers::pi);
        component_grads[k] = solve_lower_transposed(chol, whitened);  // C^{-1} (x - m)
    }
    const double peak = *std::max_element(log_terms.begin(), log_terms.end());
    double total = 0.0;
    for (double lt : log_terms) total += std::exp(lt - peak);
    std::fill(grad.begin(), grad.end(), 0.0);
    for (std::size_t k = 0; k < K; ++k) {
        const double resp = std::exp(log_terms[k] - peak) / total;
        kernels::axpy(-resp, component_grads[k], grad);
    }
    return peak + std::log(total);
}

void check_time(const NoiseSchedule& schedule, double t, const char* what) {
    if (!(t >= 0.0 && t <= static_cast<double>(schedule.max_step()))) {
        throw IndexError(std::string(what) + ": time " + std::to_string(t) + " outside [0, T]");
    }
}

}  // namespace

ScoreField::ScoreField(std::shared_ptr<const NoiseSchedule> schedule) : schedule_(std::move(schedule)) {
    if (!schedule_) throw ConfigError("score field needs a schedule");
}

void ScoreField::score(std::span<const double> x, double t, Label label, std::span<double> out) const {
    const double t_eff = std::max(t, kMinScoreTime);
    eps(x, t_eff, label, out);
    const double scale = -1.0 / std::sqrt(1.0 - schedule_->alpha_bar_at(t_eff));
    for (double& v : out) v *= scale;
}

Vec ScoreField::eps(std::span<const double> x, double t, Label label) const {
    Vec out(dim());
    eps(x, t, label, out);
    return out;
}

Vec ScoreField::score(std::span<const double> x, double t, Label label) const {
    Vec out(dim());
    score(x, t, label, out);
    return out;
}

Vec eps_to_score(std::span<const double> eps, double t, const NoiseSchedule& schedule) {
    if (!(t > 0.0 && t <= static_cast<double>(schedule.max_step()))) {
        throw IndexError("eps_to_score: time must lie in (0, T]; the conversion is singular at t = 0");
    }
    const double scale = -1.0 / std::sqrt(1.0 - schedule.alpha_bar_at(t));
    Vec s(eps.begin(), eps.end());
    for (double& v : s) v *= scale;
    return s;
}

std::vector<int> GaussianMixture::distinct_labels() const {
    std::vector<int> out(labels);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

void GaussianMixture::validate() const {
    const std::size_t K = weights.size();
    if (K == 0) throw ConfigError("mixture needs at least one component");
    if (means.size() != K || covariances.size() != K) throw ConfigError("mixture component arrays disagree in length");
    if (!labels.empty() && labels.size() != K) throw ConfigError("mixture labels must cover every component");
    const std::size_t d = means.front().size();
    if (d == 0) throw ConfigError("mixture dimension must be positive");
    double total = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
        if (!(weights[k] > 0.0)) throw ConfigError("mixture weights must be positive");
        total += weights[k];
        if (means[k].size() != d) throw ConfigError("mixture means disagree in dimension");
        if (covariances[k].rows() != d || covariances[k].cols() != d) {
            throw ConfigError("mixture covariance has wrong shape");
        }
        cholesky(covariances[k]);
    }
    if (std::abs(total - 1.0) > 1e-12) throw ConfigError("mixture weights must sum to 1");
}

GaussianMixture GaussianMixture::restricted_to(int label) const {
    GaussianMixture out;
    double total = 0.0;
    for (std::size_t k = 0; k < labels.size(); ++k) {
        if (labels[k] != label) continue;
        out.weights.push_back(weights[k]);
        out.means.push_back(means[k]);
        out.covariances.push_back(covariances[k]);
        out.labels.push_back(label);
        total += weights[k];
    }
    if (out.weights.empty()) throw ConfigError("label " + std::to_string(label) + " is absent from the mixture");
    for (double& w : out.weights) w /= total;
    return out;
}

GaussianMixture GaussianMixture::isotropic(std::vector<double> weights, std::vector<Vec> means, double variance,
                                           std::vector<int> labels) {
    GaussianMixture m;
    m.weights = std::move(weights);
    m.means = std::move(means);
    const std::size_t d = m.means.empty() ? 0 : m.means.front().size();
    const Vec diag(d, variance);
    m.covariances.assign(m.weights.size(), Matrix::diagonal(diag));
    m.labels = std::move(labels);
    return m;
}

MixtureField::MixtureField(GaussianMixture mixture, std::shared_ptr<const NoiseSchedule> schedule)
    : ScoreField(std::move(schedule)), mixture_(std::move(mixture)) {
    mixture_.validate();
    for (int label : mixture_.distinct_labels()) conditionals_.emplace_back(label, mixture_.restricted_to(label));
}

const GaussianMixture& MixtureField::components_for(Label label) const {
    if (!label) return mixture_;
    if (!mixture_.labeled()) throw ConfigError("conditional evaluation of an unlabeled mixture");
    for (const auto& [l, mix] : conditionals_) {
        if (l == *label) return mix;
    }
    throw ConfigError("label " + std::to_string(*label) + " is absent from the mixture");
}

double MixtureField::grad_log_density(std::span<const double> x, double t, const GaussianMixture& mix,
                                      std::span<double> grad) const {
    check_time(schedule(), t, "mixture field");
    require_same_size(x, grad, "mixture field");
    if (x.size() != dim()) throw DimensionError("mixture field: input dimension mismatch");
    return mixture_gradient(mix, schedule().alpha_bar_at(t), x, grad);
}

void MixtureField::eps(std::span<const double> x, double t, Label label, std::span<double> out) const {
    grad_log_density(x, t, components_for(label), out);
    const double scale = -std::sqrt(1.0 - schedule().alpha_bar_at(t));
    for (double& v : out) v *= scale;
}

void MixtureField::score(std::span<const double> x, double t, Label label, std::span<double> out) const {
    grad_log_density(x, t, components_for(label), out);
}

double MixtureField::log_density(std::span<const double> x, double t, Label label) const {
    Vec grad(dim());
    return grad_log_density(x, t, components_for(label), grad);
}

Vec mixture_eps(const GaussianMixture& mixture, const NoiseSchedule& schedule, std::span<const double> x, int t,
                Label label) {
    if (t < 0 || t > schedule.max_step()) {
        throw IndexError("mixture_eps: step " + std::to_string(t) + " outside [0, T]");
    }
    if (x.size() != mixture.dim()) throw DimensionError("mixture_eps: input dimension mismatch");
    const GaussianMixture restricted = label ? mixture.restricted_to(*label) : GaussianMixture{};
    const GaussianMixture& mix = label ? restricted : mixture;
    Vec grad(x.size());
    const double alpha_bar = schedule.alpha_bar(t);
    mixture_gradient(mix, alpha_bar, x, grad);
    const double scale = -std::sqrt(1.0 - alpha_bar);
    for (double& v : grad) v *= scale;
    return grad;
}

Vec guided_eps(const ScoreField& field, std::span<const double> x, double t, int label, double omega) {
    if (!field.is_conditional()) throw ConfigError("guidance needs a conditional score field");
    const Vec uncond = field.eps(x, t, std::nullopt);
    const Vec cond = field.eps(x, t, label);
    Vec out(uncond.size());
    kernels::axpby(1.0 - omega, uncond, omega, cond, out);
    return out;
}

GuidedField::GuidedField(const ScoreField& base, int label, double omega)
    : ScoreField(base.schedule_ptr()), base_(base), label_(label), omega_(omega) {
    if (!base.is_conditional()) throw ConfigError("guidance needs a conditional score field");
}

void GuidedField::eps(std::span<const double> x, double t, Label, std::span<double> out) const {
    const Vec uncond = base_.eps(x, t, std::nullopt);
    const Vec cond = base_.eps(x, t, label_);
    kernels::axpby(1.0 - omega_, uncond, omega_, cond, out);
}

void GuidedField::score(std::span<const double> x, double t, Label, std::span<double> out) const {
    const Vec uncond = base_.score(x, t, std::nullopt);
    const Vec cond = base_.score(x, t, label_);
    kernels::axpby(1.0 - omega_, uncond, omega_, cond, out);
}

}  // namespace ddpood
