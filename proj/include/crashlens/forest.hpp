#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "crashlens/tree.hpp"

namespace crashlens::learn {

struct ForestParams {
    std::size_t n_trees = 200;
    std::size_t max_depth = 12;
    std::size_t min_samples_leaf = 5;
    std::size_t features_per_split = 0;  // 0 = ceil(sqrt(n_features))
    bool bootstrap = true;
    std::uint64_t seed = 0;
};

struct ForestModel {
    std::vector<DecisionTree> trees;
    std::vector<std::uint64_t> tree_seeds;
    std::size_t features_per_split = 0;
    std::size_t n_features = 0;
};

/// Random forest of CART trees. Tree t draws its bootstrap sample and split
/// feature subsets from its own stream derive_seed(seed, t), so the fitted
/// forest does not depend on `threads`.
ForestModel rf_fit(const Matrix& X, std::span<const double> y, const ForestParams& params, unsigned threads = 1);

/// Mean of tree outputs; for 0/1 labels this is the mean leaf positive fraction.
std::vector<double> rf_predict(const ForestModel& model, const Matrix& X);

}  // namespace crashlens::learn
