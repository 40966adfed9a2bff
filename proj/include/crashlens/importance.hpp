#pragma once

#include <span>
#include <string>
#include <vector>

#include "crashlens/forest.hpp"
#include "crashlens/gbm.hpp"

namespace crashlens::learn {

struct ImportanceReport {
    std::vector<double> total_gain;  // summed split gain per feature
    std::vector<double> share;       // total_gain normalized to sum to 1
    bool has_splits = false;         // false: every share is 0
};

ImportanceReport split_gain_importance(std::span<const DecisionTree> trees, std::size_t n_features);
ImportanceReport feature_importance(const GbmModel& model);
ImportanceReport feature_importance(const ForestModel& model);

/// Feature indices ordered by decreasing share (ties by index).
std::vector<std::size_t> importance_ranking(const ImportanceReport& report);

}  // namespace crashlens::learn
