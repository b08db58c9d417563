#include "ddpood/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include <json.hpp>

#include "ddpood/errors.hpp"
#include "ddpood/io.hpp"
#include "ddpood/kernels.hpp"
#include "ddpood/random.hpp"

namespace ddpood {

namespace {

double quantile(std::vector<double> values, double q) {
    std::sort(values.begin(), values.end());
    const double pos = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
}

}  // namespace

std::string_view level_name(FeatureLevel level) {
    switch (level) {
        case FeatureLevel::Input: return "input";
        case FeatureLevel::Feature: return "feature";
        case FeatureLevel::Logit: return "logit";
    }
    return "unknown";
}

FeatureLevel parse_level(std::string_view name) {
    if (name == "input" || name == "0") return FeatureLevel::Input;
    if (name == "feature" || name == "1") return FeatureLevel::Feature;
    if (name == "logit" || name == "2") return FeatureLevel::Logit;
    throw ConfigError("unknown feature level '" + std::string(name) + "'");
}

void ClipRule::apply(std::span<double> features) const {
    if (!per_coordinate.empty()) {
        if (per_coordinate.size() != features.size()) throw DimensionError("clip rule has wrong width");
        for (std::size_t i = 0; i < features.size(); ++i) features[i] = std::min(features[i], per_coordinate[i]);
        return;
    }
    for (double& v : features) v = std::min(v, threshold);
}

Classifier::Classifier(std::size_t dim, int num_classes, const ClassifierConfig& config)
    : dim_(dim), num_classes_(num_classes), config_(config) {
    if (dim_ == 0) throw ConfigError("classifier dimension must be positive");
    if (num_classes_ < 2) throw ConfigError("classifier needs at least two classes");
    if (config_.num_features < 1) throw ConfigError("classifier needs at least one feature");
    if (!(config_.lengthscale > 0.0)) throw ConfigError("feature lengthscale must be positive");
    const auto m = static_cast<std::size_t>(config_.num_features);
    Rng rng(derive_seed(config_.seed, "classifier/features"));
    frequencies_ = Matrix(m, dim_);
    for (double& v : frequencies_.data()) v = rng.normal() / config_.lengthscale;
    phases_.resize(m);
    for (double& p : phases_) p = rng.uniform(0.0, 2.0 * std::numbers::pi);
    feature_mean_.assign(m, 0.0);
    feature_scale_.assign(m, 1.0);
    weights_ = Matrix(static_cast<std::size_t>(num_classes_), m);
    bias_.assign(static_cast<std::size_t>(num_classes_), 0.0);
}

namespace {

Vec cosine_features(const Matrix& freq, std::span<const double> phases, std::span<const double> x) {
    const std::size_t m = phases.size();
    const double amp = std::sqrt(2.0 / static_cast<double>(m));
    Vec out(m);
    for (std::size_t j = 0; j < m; ++j) out[j] = amp * std::cos(kernels::dot(freq.row(j), x) + phases[j]);
    return out;
}

}  // namespace

void Classifier::fit_standardization(std::span<const Vec> points) {
    if (points.empty()) throw ConfigError("standardization needs data");
    const std::size_t m = num_features();
    Vec sum(m, 0.0), sum_sq(m, 0.0);
    for (const Vec& p : points) {
        const Vec f = cosine_features(frequencies_, phases_, p);
        for (std::size_t j = 0; j < m; ++j) {
            sum[j] += f[j];
            sum_sq[j] += f[j] * f[j];
        }
    }
    const double n = static_cast<double>(points.size());
    for (std::size_t j = 0; j < m; ++j) {
        feature_mean_[j] = sum[j] / n;
        const double var = std::max(sum_sq[j] / n - feature_mean_[j] * feature_mean_[j], 0.0);
        feature_scale_[j] = std::sqrt(var) + 1e-12;
    }
}

Vec Classifier::features(std::span<const double> x, const ClipRule* clip) const {
    if (x.size() != dim_) throw DimensionError("classifier: input dimension mismatch");
    Vec f = cosine_features(frequencies_, phases_, x);
    for (std::size_t j = 0; j < f.size(); ++j) f[j] = (f[j] - feature_mean_[j]) / feature_scale_[j];
    if (clip) clip->apply(f);
    return f;
}

Vec Classifier::logits_from_features(std::span<const double> features) const {
    if (features.size() != num_features()) throw DimensionError("classifier: feature width mismatch");
    Vec out(static_cast<std::size_t>(num_classes_));
    for (std::size_t c = 0; c < out.size(); ++c) out[c] = bias_[c] + kernels::dot(weights_.row(c), features);
    return out;
}

Vec Classifier::logits(std::span<const double> x, const ClipRule* clip) const {
    return logits_from_features(features(x, clip));
}

Vec Classifier::extract(std::span<const double> x, FeatureLevel level, const ClipRule* clip) const {
    if (clip && level != FeatureLevel::Feature) throw ConfigError("clipping applies to the feature level only");
    switch (level) {
        case FeatureLevel::Input:
            if (x.size() != dim_) throw DimensionError("classifier: input dimension mismatch");
            return Vec(x.begin(), x.end());
        case FeatureLevel::Feature: return features(x, clip);
        case FeatureLevel::Logit: return logits(x);
    }
    throw IndexError("unknown feature level");
}

int Classifier::predict(std::span<const double> x) const {
    const Vec l = logits(x);
    return static_cast<int>(std::max_element(l.begin(), l.end()) - l.begin());
}

double Classifier::head_loss_and_gradient(std::span<const Vec> features, std::span<const int> labels,
                                          Matrix& grad_weights, Vec& grad_bias) const {
    if (features.size() != labels.size() || features.empty()) throw DimensionError("head gradient: batch mismatch");
    grad_weights = Matrix(weights_.rows(), weights_.cols());
    grad_bias.assign(bias_.size(), 0.0);
    const double inv_n = 1.0 / static_cast<double>(features.size());
    double loss = 0.0;
    Vec probs(bias_.size());
    for (std::size_t i = 0; i < features.size(); ++i) {
        const Vec l = logits_from_features(features[i]);
        const double peak = *std::max_element(l.begin(), l.end());
        double total = 0.0;
        for (std::size_t c = 0; c < l.size(); ++c) total += (probs[c] = std::exp(l[c] - peak));
        const auto y = static_cast<std::size_t>(labels[i]);
        if (labels[i] < 0 || y >= l.size()) throw ConfigError("head gradient: label outside the classes");
        loss += (peak + std::log(total) - l[y]) * inv_n;
        for (std::size_t c = 0; c < l.size(); ++c) {
            const double g = (probs[c] / total - (c == y ? 1.0 : 0.0)) * inv_n;
            grad_bias[c] += g;
            kernels::axpy(g, features[i], grad_weights.row(c));
        }
    }
    const auto w = weights_.data();
    auto gw = grad_weights.data();
    loss += 0.5 * config_.l2 * kernels::dot(w, w);
    kernels::axpy(config_.l2, w, gw);
    return loss;
}

double Classifier::accuracy(const LabeledSamples& data) const {
    if (data.empty()) return 0.0;
    std::size_t correct = 0;
    for (std::size_t i = 0; i < data.size(); ++i) correct += predict(data.points[i]) == data.label(i) ? 1 : 0;
    return static_cast<double>(correct) / static_cast<double>(data.size());
}

void Classifier::save(const std::filesystem::path& path) const {
    nlohmann::json j;
    j["format"] = "ddpood-classifier";
    j["version"] = 1;
    j["dim"] = dim_;
    j["num_classes"] = num_classes_;
    j["config"] = {{"num_features", config_.num_features}, {"lengthscale", config_.lengthscale},
                   {"learning_rate", config_.learning_rate}, {"epochs", config_.epochs},
                   {"l2", config_.l2}, {"seed", config_.seed}};
    auto as_vec = [](std::span<const double> s) { return std::vector<double>(s.begin(), s.end()); };
    j["frequencies"] = as_vec(frequencies_.data());
    j["phases"] = phases_;
    j["feature_mean"] = feature_mean_;
    j["feature_scale"] = feature_scale_;
    j["weights"] = as_vec(weights_.data());
    j["bias"] = bias_;
    j["training_accuracy"] = training_accuracy_;
    write_file_atomic(path, j.dump(1) + "\n");
}

Classifier Classifier::load(const std::filesystem::path& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("classifier file " + path.string() + ": " + e.what());
    }
    if (j.value("format", "") != "ddpood-classifier" || j.value("version", 0) != 1) {
        throw FormatError("not a classifier file: " + path.string());
    }
    try {
        ClassifierConfig config;
        const auto& c = j.at("config");
        config.num_features = c.at("num_features");
        config.lengthscale = c.at("lengthscale");
        config.learning_rate = c.at("learning_rate");
        config.epochs = c.at("epochs");
        config.l2 = c.at("l2");
        config.seed = c.at("seed");
        Classifier out(j.at("dim").get<std::size_t>(), j.at("num_classes").get<int>(), config);
        auto fill = [](std::span<double> dst, const nlohmann::json& src) {
            const auto v = src.get<std::vector<double>>();
            if (v.size() != dst.size()) throw FormatError("classifier array has wrong length");
            std::copy(v.begin(), v.end(), dst.begin());
        };
        fill(out.frequencies_.data(), j.at("frequencies"));
        fill(out.phases_, j.at("phases"));
        fill(out.feature_mean_, j.at("feature_mean"));
        fill(out.feature_scale_, j.at("feature_scale"));
        fill(out.weights_.data(), j.at("weights"));
        fill(out.bias_, j.at("bias"));
        out.training_accuracy_ = j.at("training_accuracy");
        return out;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("classifier file " + path.string() + ": " + e.what());
    }
}

Classifier train_classifier(const LabeledSamples& data, const ClassifierConfig& config) {
    if (data.empty()) throw ConfigError("classifier training needs data");
    int num_classes = 0;
    std::vector<int> labels(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        labels[i] = data.label(i);
        if (labels[i] < 0) throw ConfigError("classifier training needs labeled data");
        num_classes = std::max(num_classes, labels[i] + 1);
    }
    if (std::all_of(labels.begin(), labels.end(), [&](int l) { return l == labels.front(); })) {
        throw ConfigError("classifier training needs at least two distinct classes");
    }
    if (config.epochs < 0) throw ConfigError("epochs must be non-negative");

    Classifier model(data.dim(), num_classes, config);
    model.fit_standardization(data.points);
    std::vector<Vec> feats;
    feats.reserve(data.size());
    for (const Vec& p : data.points) feats.push_back(model.features(p));

    Matrix grad_w;
    Vec grad_b;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        const double loss = model.head_loss_and_gradient(feats, labels, grad_w, grad_b);
        if (!std::isfinite(loss)) throw TrainingError("classifier loss diverged at epoch " + std::to_string(epoch), epoch);
        kernels::axpy(-config.learning_rate, grad_w.data(), model.head_weights().data());
        kernels::axpy(-config.learning_rate, grad_b, model.head_bias());
    }
    model.set_training_accuracy(model.accuracy(data));
    return model;
}

Vec extract_features(const Classifier& classifier, std::span<const double> x, FeatureLevel level,
                     const ClipRule* clip) {
    return classifier.extract(x, level, clip);
}

int predict(const Classifier& classifier, std::span<const double> x) { return classifier.predict(x); }

ClipRule clip_from_quantile(const Classifier& classifier, std::span<const Vec> points, double q, bool per_coordinate) {
    if (points.empty()) throw ConfigError("clip quantile needs data");
    if (!(q > 0.0 && q <= 1.0)) throw ConfigError("clip quantile must lie in (0, 1]");
    std::vector<Vec> feats;
    for (const Vec& p : points) feats.push_back(classifier.features(p));
    ClipRule rule;
    if (per_coordinate) {
        rule.per_coordinate.resize(classifier.num_features());
        std::vector<double> column(feats.size());
        for (std::size_t j = 0; j < classifier.num_features(); ++j) {
            for (std::size_t i = 0; i < feats.size(); ++i) column[i] = feats[i][j];
            rule.per_coordinate[j] = quantile(column, q);
        }
        return rule;
    }
    std::vector<double> pooled;
    for (const Vec& f : feats) pooled.insert(pooled.end(), f.begin(), f.end());
    rule.threshold = quantile(std::move(pooled), q);
    return rule;
}

}  // namespace ddpood
