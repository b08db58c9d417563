#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ddpood/classifier.hpp"
#include "ddpood/dataset.hpp"
#include "ddpood/scorefield.hpp"

namespace ddpood {

enum class DatasetKind { Mixture, TranslatedMixture, Uniform, Ring };

std::string_view kind_name(DatasetKind kind);
DatasetKind parse_kind(std::string_view name);

struct DatasetSpec {
    DatasetKind kind = DatasetKind::Mixture;
    std::size_t size = 500;
    std::uint64_t seed = 0;
    /// Mixture and translated-mixture kinds.
    GaussianMixture mixture;
    Vec shift;
    /// Uniform box [low, high]^d.
    std::size_t dim = 2;
    double low = -6.0;
    double high = 6.0;
    /// Circle of this radius in the first two coordinates.
    double radius = 5.0;

    void validate() const;
};

/// Deterministic in (spec, seed). Mixture kinds label each point with its
/// component's label (or component index when the mixture is unlabeled).
LabeledSamples sample_dataset(const DatasetSpec& spec);

struct AdversarialSettings {
    /// Number of candidate points tried.
    std::size_t budget = 20000;
    std::size_t target = 500;
    /// Minimum distance from every component mean, in component standard deviations.
    double far_sigmas = 4.0;
    /// Max logit must reach this quantile of the InD max logits.
    double logit_quantile = 0.5;
    double max_radius_sigmas = 10.0;
    std::uint64_t seed = 0;
};

struct AdversarialSet {
    LabeledSamples points;
    double logit_floor = 0.0;
    std::size_t candidates_tried = 0;
    /// Set when the budget ran out before `target` points were found.
    std::optional<std::string> warning;
};

/// Points far from every InD component whose max logit is at least the
/// chosen quantile of InD max logits. Candidates start from InD points and
/// step along directions of the classifier's frozen feature frequencies.
AdversarialSet make_adversarial_ood(const Classifier& classifier, const LabeledSamples& ind,
                                    const GaussianMixture& mixture, const AdversarialSettings& settings);

/// d = 2, two unit-covariance components at (+-2, 0) labeled 0 and 1.
GaussianMixture canonical_mixture();

struct Benchmark {
    LabeledSamples train;
    LabeledSamples ind_test;
    std::vector<std::pair<std::string, LabeledSamples>> ood_sets;  // translate, uniform, ring (adversarial added later)
};

/// InD train/test splits plus the translate-by-(0,4), uniform [-6,6]^2 and
/// radius-5 ring OOD sets, each drawn from its own seed substream.
Benchmark canonical_benchmark(std::size_t n_train, std::size_t n_per_set, std::uint64_t seed);

/// Columns: x0, x1, ..., label, split
std::string samples_csv(const LabeledSamples& data, std::string_view split);

}  // namespace ddpood
