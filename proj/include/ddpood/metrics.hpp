#pragma once

#include <span>
#include <string>
#include <vector>

namespace ddpood {

/// P(ood > ind) + P(ood == ind) / 2 over all pairs. Higher scores mean more OOD.
double auroc(std::span<const double> ind_scores, std::span<const double> ood_scores);

/// Threshold = largest score that still flags at least tpr_target of the OOD
/// set (score >= threshold); returns the fraction of InD scores >= threshold.
double fpr_at_tpr(std::span<const double> ind_scores, std::span<const double> ood_scores, double tpr_target = 0.95);

struct Summary {
    double mean = 0.0;
    double std = 0.0;  // population
};

Summary summarize(std::span<const double> values);

}  // namespace ddpood
