#include "crashlens/importance.hpp"

#include <algorithm>
#include <numeric>

namespace crashlens::learn {

ImportanceReport split_gain_importance(std::span<const DecisionTree> trees, std::size_t n_features) {
    ImportanceReport r;
    r.total_gain.assign(n_features, 0.0);
    r.share.assign(n_features, 0.0);
    for (const auto& t : trees) {
        for (const auto& node : t.nodes()) {
            if (node.feature >= 0) r.total_gain[static_cast<std::size_t>(node.feature)] += node.gain;
        }
    }
    double total = std::accumulate(r.total_gain.begin(), r.total_gain.end(), 0.0);
    r.has_splits = total > 0.0;
    if (r.has_splits) {
        for (std::size_t f = 0; f < n_features; ++f) r.share[f] = r.total_gain[f] / total;
    }
    return r;
}

ImportanceReport feature_importance(const GbmModel& model) {
    return split_gain_importance(model.trees, model.n_features);
}

ImportanceReport feature_importance(const ForestModel& model) {
    return split_gain_importance(model.trees, model.n_features);
}

std::vector<std::size_t> importance_ranking(const ImportanceReport& report) {
    std::vector<std::size_t> idx(report.share.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return report.share[a] > report.share[b]; });
    return idx;
}

}  // namespace crashlens::learn
