#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "crashlens/common.hpp"

namespace crashlens::learn {

struct TreeParams {
    std::size_t max_depth = 3;
    std::size_t min_samples_leaf = 1;
    std::size_t features_per_split = 0;  // 0 = every feature is a candidate at every split
};

struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;   // weighted mean target of the rows reaching the node
    double gain = 0.0;    // squared-error reduction of this split
    double weight = 0.0;  // total sample weight reaching the node
};

/// Binary regression tree; rows with x[feature] <= threshold go left.
class DecisionTree {
public:
    DecisionTree() = default;
    DecisionTree(std::vector<TreeNode> nodes, std::size_t n_features)
        : nodes_(std::move(nodes)), n_features_(n_features) {}

    double predict(std::span<const double> x) const { return nodes_[leaf_index(x)].value; }
    std::size_t leaf_index(std::span<const double> x) const;

    const std::vector<TreeNode>& nodes() const { return nodes_; }
    std::vector<TreeNode>& mutable_nodes() { return nodes_; }
    std::size_t n_features() const { return n_features_; }
    std::size_t depth() const;
    std::size_t leaf_count() const;

private:
    std::vector<TreeNode> nodes_;
    std::size_t n_features_ = 0;
};

/// Row indices of X sorted by each column (ties keep row order). Built once
/// and reused by every tree fitted on the same matrix.
class SortedColumns {
public:
    explicit SortedColumns(const Matrix& X);
    std::span<const std::uint32_t> column(std::size_t f) const { return order_[f]; }
    std::span<const double> values(std::size_t f) const { return values_[f]; }
    std::size_t rows() const { return rows_; }

private:
    std::vector<std::vector<std::uint32_t>> order_;
    std::vector<std::vector<double>> values_;  // column-major copy of X
    std::size_t rows_ = 0;
};

/// Greedy CART on squared error. Candidate thresholds are midpoints between
/// consecutive distinct values; among equal gains the lowest feature index
/// and then the lowest threshold win. A node becomes a leaf at max_depth,
/// when a split would leave fewer than min_samples_leaf weight on a side, or
/// when no split has positive gain.
///
/// `weights` are per-row multiplicities (bootstrap counts); rows with zero
/// weight are ignored. `rng` draws the per-split feature subset and is only
/// needed when features_per_split is below the feature count.
DecisionTree fit_tree(const Matrix& X, const SortedColumns& sorted, std::span<const double> targets,
                      std::span<const double> weights, const TreeParams& params, std::mt19937_64* rng = nullptr);

/// Unit weights, presorting internally. Throws DataError on empty input.
DecisionTree fit_tree(const Matrix& X, std::span<const double> targets, const TreeParams& params);

}  // namespace crashlens::learn
