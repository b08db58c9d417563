#pragma once

#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "ddpood/linalg.hpp"
#include "ddpood/schedule.hpp"

namespace ddpood {

using Label = std::optional<int>;

/// Noise predictor eps(x, t, c). Implementations are immutable after
/// construction and safe to evaluate concurrently.
class ScoreField {
public:
    explicit ScoreField(std::shared_ptr<const NoiseSchedule> schedule);
    virtual ~ScoreField() = default;

    virtual std::size_t dim() const = 0;
    /// True when `label` may be set on evaluation.
    virtual bool is_conditional() const = 0;
    /// Predicted noise at real time t in [0, T]. `out` has size dim().
    virtual void eps(std::span<const double> x, double t, Label label, std::span<double> out) const = 0;
    /// Score grad_x log p_t. The default converts eps with -eps / sqrt(1 - alpha_bar(t)),
    /// evaluating at t >= kMinScoreTime because the conversion is singular at t = 0.
    virtual void score(std::span<const double> x, double t, Label label, std::span<double> out) const;

    Vec eps(std::span<const double> x, double t, Label label = std::nullopt) const;
    Vec score(std::span<const double> x, double t, Label label = std::nullopt) const;

    const NoiseSchedule& schedule() const noexcept { return *schedule_; }
    const std::shared_ptr<const NoiseSchedule>& schedule_ptr() const noexcept { return schedule_; }

    static constexpr double kMinScoreTime = 0.5;

private:
    std::shared_ptr<const NoiseSchedule> schedule_;
};

/// s = -eps / sqrt(1 - alpha_bar(t)). Rejects t = 0 and t outside (0, T].
Vec eps_to_score(std::span<const double> eps, double t, const NoiseSchedule& schedule);

struct GaussianMixture {
    std::vector<double> weights;
    std::vector<Vec> means;
    std::vector<Matrix> covariances;
    /// Optional class label per component (empty = unlabeled).
    std::vector<int> labels;

    std::size_t dim() const { return means.empty() ? 0 : means.front().size(); }
    std::size_t size() const { return weights.size(); }
    bool labeled() const { return !labels.empty(); }
    std::vector<int> distinct_labels() const;

    /// Weights sum to one, covariances symmetric positive definite, shapes agree.
    void validate() const;
    /// Components carrying `label`, weights renormalized.
    GaussianMixture restricted_to(int label) const;

    static GaussianMixture isotropic(std::vector<double> weights, std::vector<Vec> means, double variance,
                                     std::vector<int> labels = {});
};

/// Closed-form time marginal p_t = sum_k w_k N(sqrt(ab) mu_k, ab Sigma_k + (1 - ab) I).
class MixtureField final : public ScoreField {
public:
    MixtureField(GaussianMixture mixture, std::shared_ptr<const NoiseSchedule> schedule);

    std::size_t dim() const override { return mixture_.dim(); }
    bool is_conditional() const override { return mixture_.labeled(); }
    void eps(std::span<const double> x, double t, Label label, std::span<double> out) const override;
    /// Analytic score, valid down to t = 0.
    void score(std::span<const double> x, double t, Label label, std::span<double> out) const override;

    double log_density(std::span<const double> x, double t, Label label = std::nullopt) const;

    const GaussianMixture& mixture() const noexcept { return mixture_; }

    using ScoreField::eps;
    using ScoreField::score;

private:
    const GaussianMixture& components_for(Label label) const;
    double grad_log_density(std::span<const double> x, double t, const GaussianMixture& mix,
                            std::span<double> grad) const;

    GaussianMixture mixture_;
    std::vector<std::pair<int, GaussianMixture>> conditionals_;
};

/// eps for the analytic mixture. t in [0, T]; t = 0 yields the limiting value 0.
Vec mixture_eps(const GaussianMixture& mixture, const NoiseSchedule& schedule, std::span<const double> x,
                int t, Label label = std::nullopt);

/// eps_uncond + omega * (eps_cond - eps_uncond).
Vec guided_eps(const ScoreField& field, std::span<const double> x, double t, int label, double omega);

/// Classifier-free guidance as a field: evaluation ignores the label argument
/// and always blends the wrapped field at the fixed label.
class GuidedField final : public ScoreField {
public:
    GuidedField(const ScoreField& base, int label, double omega);

    std::size_t dim() const override { return base_.dim(); }
    bool is_conditional() const override { return false; }
    void eps(std::span<const double> x, double t, Label label, std::span<double> out) const override;
    void score(std::span<const double> x, double t, Label label, std::span<double> out) const override;

    using ScoreField::eps;
    using ScoreField::score;

private:
    const ScoreField& base_;
    int label_;
    double omega_;
};

}  // namespace ddpood
