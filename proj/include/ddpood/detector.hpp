#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ddpood/classifier.hpp"
#include "ddpood/integrator.hpp"

namespace ddpood {

enum class ChangeNorm { L1, L2 };

struct DetectorConfig {
    int timestep = 300;
    double omega = 3.0;
    int repeats = 4;
    FeatureLevel detect_space = FeatureLevel::Logit;
    std::optional<ClipRule> clip;
    IntegratorMethod method = IntegratorMethod::DDIM;
    int stride = 20;
    double threshold = 0.0;
    ChangeNorm norm = ChangeNorm::L1;

    /// t in (0, T] and on the stride grid, R >= 1, finite threshold, deterministic method.
    void validate(const NoiseSchedule& schedule) const;
};

/// Noise x to step t with a fresh draw, then guided denoising back to 0
/// conditioned on `label`.
Vec reconstruct_with_label(std::span<const double> x, int label, const DetectorConfig& config,
                           const ScoreField& field, Rng& rng);

/// Pseudo-labels x with the classifier, then reconstructs conditioned on it.
Vec conditional_reconstruct(std::span<const double> x, const DetectorConfig& config, const ScoreField& field,
                            const Classifier& classifier, Rng& rng);

struct ScoreDetail {
    double score = 0.0;
    std::vector<double> repeat_scores;
    int pseudo_label = 0;
};

/// Feature change for repeat r alone. Repeat r draws its noise from the
/// substream derive_seed(seed, "repeat-r").
double repeat_score(std::span<const double> x, const DetectorConfig& config, const ScoreField& field,
                    const Classifier& classifier, std::uint64_t seed, int r);

/// Mean over config.repeats of the feature-change norm.
ScoreDetail ddp_score_detail(std::span<const double> x, const DetectorConfig& config, const ScoreField& field,
                             const Classifier& classifier, std::uint64_t seed);
double ddp_score(std::span<const double> x, const DetectorConfig& config, const ScoreField& field,
                 const Classifier& classifier, std::uint64_t seed);

/// Scores many points in parallel; point i uses derive_seed(seed, label_prefix + "/sample-i").
std::vector<ScoreDetail> ddp_score_batch(std::span<const Vec> points, const DetectorConfig& config,
                                         const ScoreField& field, const Classifier& classifier, std::uint64_t seed,
                                         std::string_view label_prefix);

/// Brute-force k-nearest-neighbour distance over stored reference vectors.
class KnnIndex {
public:
    KnnIndex(std::vector<Vec> reference, int k);
    double kth_distance(std::span<const double> query) const;
    int k() const noexcept { return k_; }

private:
    std::vector<Vec> reference_;
    int k_;
};

enum class Baseline { MLS, EBO, KNN, ReAct };

std::string_view baseline_name(Baseline b);
Baseline parse_baseline(std::string_view name);

/// Oriented so larger means more OOD. MLS = -max logit, EBO = -logsumexp,
/// KNN = k-th neighbour distance in feature space, ReAct = EBO on logits of
/// clipped features. KNN needs `index`; ReAct needs `clip`.
double baseline_score(Baseline method, std::span<const double> x, const Classifier& classifier,
                      const KnnIndex* index = nullptr, const ClipRule* clip = nullptr);

enum class Decision { InD, OOD };

/// OOD iff score > threshold.
Decision decide(double score, double threshold);

struct SampleRecord {
    std::string set;  // "ind" or the OOD set name
    std::size_t index = 0;
    Vec x;
    int pseudo_label = 0;
    std::vector<double> repeat_scores;
    bool flagged_ood = false;
    /// Method name -> score. Always holds "ddp".
    std::map<std::string, double> scores;
};

struct MetricRow {
    std::string group;  // ablation value, empty without an ablation
    std::string method;
    std::string ood_set;
    double auroc = 0.0;
    double fpr95 = 0.0;
};

/// One row per (method, OOD set) from records grouped by set.
std::vector<MetricRow> metric_rows(std::span<const SampleRecord> records, std::string_view group);

struct DetectionReport {
    std::vector<SampleRecord> samples;
    std::vector<MetricRow> rows;
};

std::string metric_rows_csv(std::span<const MetricRow> rows);

}  // namespace ddpood
