#pragma once

#include <cstddef>
#include <vector>

#include "ddpood/linalg.hpp"

namespace ddpood {

inline constexpr int kNoLabel = -1;

/// Points with optional integer labels (kNoLabel when unlabeled).
struct LabeledSamples {
    std::vector<Vec> points;
    std::vector<int> labels;

    std::size_t size() const noexcept { return points.size(); }
    bool empty() const noexcept { return points.empty(); }
    std::size_t dim() const noexcept { return points.empty() ? 0 : points.front().size(); }
    int label(std::size_t i) const { return labels.empty() ? kNoLabel : labels[i]; }

    void push_back(Vec point, int label = kNoLabel) {
        points.push_back(std::move(point));
        labels.push_back(label);
    }
};

}  // namespace ddpood
