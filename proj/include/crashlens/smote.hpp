#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "crashlens/common.hpp"

namespace crashlens::smote {

struct SmoteConfig {
    std::size_t k_neighbors = 5;
    double target_ratio = 1.0;  // minority / majority after oversampling
    std::uint64_t seed = 0;
    bool per_feature = false;   // one interpolation draw per feature instead of per sample

    void validate() const;
};

struct SmoteOutput {
    Matrix synthetic;
    // Provenance per synthetic row: indices into the minority matrix.
    std::vector<std::size_t> base;
    std::vector<std::size_t> neighbor;
};

/// k nearest neighbors of every row (excluding itself) by Euclidean distance
/// on z-scored columns; ties go to the lower row index. Sorted nearest first.
std::vector<std::vector<std::size_t>> nearest_neighbors(const Matrix& rows, std::size_t k);

/// Synthesizes n_needed rows. Each row is base + u * (neighbor - base),
/// u ~ U[0,1], with the neighbor drawn uniformly among the base's
/// min(k, m-1) nearest minority rows. Bases cycle through a seeded shuffle of
/// the minority rows. Throws DataError with fewer than two minority rows.
SmoteOutput smote_oversample(const Matrix& minority, const SmoteConfig& cfg, std::size_t n_needed);

/// Synthetic rows needed so that minority / majority == target_ratio (exact
/// whenever target_ratio * n_majority is an integer, otherwise rounded).
std::size_t smote_needed(std::size_t n_minority, std::size_t n_majority, double target_ratio);

struct BalancedData {
    Matrix X;                 // original rows first, then synthetic rows
    std::vector<double> y;
    std::size_t n_synthetic = 0;
    double minority_label = 1.0;
};

/// Oversamples the smaller of the two classes in a binary {0,1} data set.
/// Majority rows are copied through untouched.
BalancedData smote_balance(const Matrix& X, std::span<const double> y, const SmoteConfig& cfg);

}  // namespace crashlens::smote
