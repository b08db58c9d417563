#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "ddpood/classifier.hpp"
#include "ddpood/denoiser.hpp"
#include "ddpood/detector.hpp"
#include "ddpood/synthdata.hpp"

namespace ddpood {

inline constexpr const char* kVersion = "1.0.0";

/// A pipeline failure tagged with the stage that raised it.
class StageError : public std::runtime_error {
public:
    StageError(std::string stage, const std::string& what)
        : std::runtime_error(stage + ": " + what), stage_(std::move(stage)) {}
    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

enum class AblationAxis { None, DetectSpace, Omega, Timestep, Repeat, Threshold };

std::string_view axis_name(AblationAxis axis);
AblationAxis parse_axis(std::string_view name);

struct ScheduleConfig {
    int max_step = 1000;
    double beta_start = 1e-4;
    double beta_end = 0.02;
};

struct DataConfig {
    GaussianMixture mixture;
    std::size_t n_train = 2000;
    std::size_t n_per_set = 500;
    std::vector<std::string> ood_sets{"translate", "uniform", "ring", "adversarial"};
    Vec translate_shift{0.0, 4.0};
    double uniform_low = -6.0;
    double uniform_high = 6.0;
    double ring_radius = 5.0;
    std::size_t adversarial_budget = 200000;
};

struct ExperimentConfig {
    std::uint64_t seed = 0;
    std::filesystem::path output_dir = "out";
    ScheduleConfig schedule;
    DataConfig data;
    /// "analytic" uses the closed-form mixture field; "trained" fits a denoiser.
    std::string field_source = "analytic";
    DenoiserConfig denoiser;
    ClassifierConfig classifier;
    DetectorConfig detector;
    std::vector<std::string> baselines{"mls", "ebo", "knn", "react"};
    int knn_k = 5;
    double react_clip = 0.3;
    AblationAxis ablation = AblationAxis::None;
    nlohmann::json ablation_values = nlohmann::json::array();
};

/// Fills defaults and validates. Unknown keys are rejected; a "lock" member
/// (present in lockfiles) is ignored.
ExperimentConfig parse_config(const nlohmann::json& document);
/// Every field written out explicitly, so parse_config(to_json(c)) == c.
nlohmann::json to_json(const ExperimentConfig& config);

/// Sets a dotted path such as "detector.omega" to a JSON-parsed value (or the
/// raw string when it does not parse).
void apply_override(nlohmann::json& document, const std::string& assignment);

ExperimentConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides = {});

NoiseSchedule make_schedule(const ScheduleConfig& config);

struct RunResult {
    std::vector<MetricRow> rows;
    std::filesystem::path report_csv;
    std::filesystem::path samples_json;
    std::filesystem::path lock_json;
    std::vector<std::string> warnings;
    double classifier_accuracy = 0.0;
};

/// train -> detect -> evaluate. Writes report.csv, samples.json,
/// config.lock.json, run_info.json and classifier.json (plus denoiser.bin for
/// a trained field) atomically; removes them all on failure and rethrows as
/// StageError.
RunResult run_experiment(const ExperimentConfig& config);

/// report.csv contents recomputed from a samples.json document.
std::string recompute_report(const std::filesystem::path& samples_json);

struct InvertibilityRow {
    std::string method;
    int t_max;
    int stride;
    double mean_error;
    double max_error;
};

/// Round-trip error table over methods x t_max on points drawn from the mixture.
std::vector<InvertibilityRow> invertibility_table(const ScoreField& field, const GaussianMixture& mixture,
                                                  std::span<const IntegratorMethod> methods,
                                                  std::span<const int> t_max_values, int stride,
                                                  std::size_t n_points, std::uint64_t seed);
std::string invertibility_csv(std::span<const InvertibilityRow> rows);

}  // namespace ddpood
