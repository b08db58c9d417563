#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "ddpood/dataset.hpp"
#include "ddpood/linalg.hpp"

namespace ddpood {

enum class FeatureLevel { Input = 0, Feature = 1, Logit = 2 };

std::string_view level_name(FeatureLevel level);
/// Accepts input|feature|logit or 0|1|2.
FeatureLevel parse_level(std::string_view name);

/// Elementwise cap on standardized level-1 features. A scalar threshold, or one
/// cap per coordinate when built from per-coordinate quantiles.
struct ClipRule {
    double threshold = 0.3;
    Vec per_coordinate;

    void apply(std::span<double> features) const;
};

struct ClassifierConfig {
    int num_features = 128;
    /// Frequencies are drawn as N(0, I) / lengthscale.
    double lengthscale = 3.0;
    double learning_rate = 0.5;
    int epochs = 300;
    double l2 = 1e-3;
    std::uint64_t seed = 0;
};

/// Frozen random cosine features, standardized with training statistics,
/// followed by a trained softmax head.
class Classifier {
public:
    Classifier(std::size_t dim, int num_classes, const ClassifierConfig& config);

    std::size_t dim() const noexcept { return dim_; }
    int num_classes() const noexcept { return num_classes_; }
    std::size_t num_features() const noexcept { return phases_.size(); }
    const ClassifierConfig& config() const noexcept { return config_; }

    /// Fixes the standardization from the given points.
    void fit_standardization(std::span<const Vec> points);

    Vec features(std::span<const double> x, const ClipRule* clip = nullptr) const;
    Vec logits_from_features(std::span<const double> features) const;
    Vec logits(std::span<const double> x, const ClipRule* clip = nullptr) const;
    /// Level 0 is x itself, 1 the standardized features, 2 the logits.
    /// A clip rule is only meaningful at level 1; other levels reject it.
    Vec extract(std::span<const double> x, FeatureLevel level, const ClipRule* clip = nullptr) const;
    /// Argmax of the logits, lowest index on ties.
    int predict(std::span<const double> x) const;

    const Matrix& head_weights() const noexcept { return weights_; }
    Matrix& head_weights() noexcept { return weights_; }
    const Vec& head_bias() const noexcept { return bias_; }
    Vec& head_bias() noexcept { return bias_; }
    const Matrix& frequencies() const noexcept { return frequencies_; }

    /// Mean cross-entropy plus l2/2 |W|^2 over (features, labels); fills the
    /// head gradients (same shapes as weights and bias).
    double head_loss_and_gradient(std::span<const Vec> features, std::span<const int> labels, Matrix& grad_weights,
                                  Vec& grad_bias) const;

    double accuracy(const LabeledSamples& data) const;
    double training_accuracy() const noexcept { return training_accuracy_; }
    void set_training_accuracy(double a) noexcept { training_accuracy_ = a; }

    void save(const std::filesystem::path& path) const;
    static Classifier load(const std::filesystem::path& path);

private:
    std::size_t dim_;
    int num_classes_;
    ClassifierConfig config_;
    Matrix frequencies_;  // num_features x dim
    Vec phases_;
    Vec feature_mean_;
    Vec feature_scale_;
    Matrix weights_;  // num_classes x num_features
    Vec bias_;
    double training_accuracy_ = 0.0;
};

/// Full-batch gradient descent on the softmax head from a zero start.
/// Rejects data with fewer than two classes.
Classifier train_classifier(const LabeledSamples& data, const ClassifierConfig& config);

Vec extract_features(const Classifier& classifier, std::span<const double> x, FeatureLevel level,
                     const ClipRule* clip = nullptr);
int predict(const Classifier& classifier, std::span<const double> x);

/// Cap at the q-quantile of standardized features over `points`, pooled or per coordinate.
ClipRule clip_from_quantile(const Classifier& classifier, std::span<const Vec> points, double q,
                            bool per_coordinate = false);

}  // namespace ddpood
