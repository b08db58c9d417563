#include "ddpood/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <utility>

#include "ddpood/errors.hpp"

namespace ddpood {

namespace {

void check_scores(std::span<const double> ind, std::span<const double> ood, const char* what) {
    if (ind.empty() || ood.empty()) throw ConfigError(std::string(what) + ": score sets must be nonempty");
    auto finite = [](double v) { return std::isfinite(v); };
    if (!std::all_of(ind.begin(), ind.end(), finite) || !std::all_of(ood.begin(), ood.end(), finite)) {
        throw ConfigError(std::string(what) + ": scores must be finite");
    }
}

}  // namespace

double auroc(std::span<const double> ind_scores, std::span<const double> ood_scores) {
    check_scores(ind_scores, ood_scores, "auroc");
    // (score, is_ood) ascending; walk tie groups counting InD scores strictly below.
    std::vector<std::pair<double, bool>> all;
    all.reserve(ind_scores.size() + ood_scores.size());
    for (double s : ind_scores) all.emplace_back(s, false);
    for (double s : ood_scores) all.emplace_back(s, true);
    std::sort(all.begin(), all.end());
    double twice_wins = 0.0;
    double ind_below = 0.0;
    for (std::size_t i = 0; i < all.size();) {
        std::size_t j = i;
        double ind_here = 0.0;
        double ood_here = 0.0;
        while (j < all.size() && all[j].first == all[i].first) {
            (all[j].second ? ood_here : ind_here) += 1.0;
            ++j;
        }
        twice_wins += ood_here * (2.0 * ind_below + ind_here);
        ind_below += ind_here;
        i = j;
    }
    return twice_wins / 2.0 / (static_cast<double>(ind_scores.size()) * static_cast<double>(ood_scores.size()));
}

double fpr_at_tpr(std::span<const double> ind_scores, std::span<const double> ood_scores, double tpr_target) {
    check_scores(ind_scores, ood_scores, "fpr_at_tpr");
    if (!(tpr_target > 0.0 && tpr_target <= 1.0)) throw ConfigError("fpr_at_tpr: target must lie in (0, 1]");
    std::vector<double> ood(ood_scores.begin(), ood_scores.end());
    std::sort(ood.begin(), ood.end(), std::greater<>());
    const double n = static_cast<double>(ood.size());
    // Guard against 0.95 * 20 landing a hair above 19.
    auto needed = static_cast<std::size_t>(std::ceil(tpr_target * n - 1e-9));
    needed = std::clamp<std::size_t>(needed, 1, ood.size());
    const double threshold = ood[needed - 1];
    const auto flagged = std::count_if(ind_scores.begin(), ind_scores.end(), [&](double s) { return s >= threshold; });
    return static_cast<double>(flagged) / static_cast<double>(ind_scores.size());
}

Summary summarize(std::span<const double> values) {
    if (values.empty()) throw ConfigError("summarize needs at least one value");
    Summary s;
    for (double v : values) s.mean += v;
    s.mean /= static_cast<double>(values.size());
    double var = 0.0;
    for (double v : values) var += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(var / static_cast<double>(values.size()));
    return s;
}

}  // namespace ddpood
