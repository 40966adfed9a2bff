#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace crashlens::eval {

/// 1 - SS_res / SS_tot. Throws DataError for constant y or length mismatch.
double r_squared(std::span<const double> y, std::span<const double> y_hat);

struct RocPoint {
    double threshold;  // +inf for the origin point
    double fpr;
    double tpr;
};

struct RocResult {
    std::vector<RocPoint> curve;  // from (0,0) at +inf down to (1,1)
    double auc = 0.0;
};

/// AUC via the Mann-Whitney rank statistic with average ranks for ties
/// (P(score_pos > score_neg) + P(tie) / 2). The curve sweeps thresholds in
/// descending order, one point per distinct score. Labels are 0/1; both
/// classes must be present.
RocResult roc_auc(std::span<const double> scores, std::span<const double> labels);

double trapezoid_area(const std::vector<RocPoint>& curve);

struct FoldPlan {
    std::size_t k = 0;
    std::vector<std::size_t> assignment;  // fold index per row
    std::uint64_t seed = 0;
    bool stratified = false;

    std::vector<std::size_t> test_rows(std::size_t fold) const;
    std::vector<std::size_t> train_rows(std::size_t fold) const;
};

/// Seeded shuffle then round-robin. With labels the shuffle is per class
/// and the round-robin counter continues across classes, so fold sizes and
/// per-fold class counts both differ by at most one.
FoldPlan kfold(std::size_t n, std::size_t k, std::uint64_t seed,
               std::optional<std::span<const double>> stratify_labels = std::nullopt);

struct FoldStats {
    double mean = 0.0;
    double stddev = 0.0;  // sample standard deviation
};

FoldStats fold_stats(std::span<const double> values);

/// threshold,fpr,tpr (threshold "inf" for the first point).
void write_roc_csv(std::ostream& out, const RocResult& roc);

/// Standalone 800x800 SVG: axes, diagonal reference, ROC polyline.
void write_roc_svg(std::ostream& out, const RocResult& roc, const std::string& title);

}  // namespace crashlens::eval
