#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "crashlens/features.hpp"
#include "crashlens/forest.hpp"
#include "crashlens/gbm.hpp"
#include "crashlens/gp.hpp"
#include "crashlens/importance.hpp"
#include "crashlens/logistic.hpp"
#include "crashlens/metrics.hpp"
#include "crashlens/smote.hpp"

namespace crashlens::pipeline {

// ---- aggregated two-stage model -------------------------------------------

struct AggregatedConfig {
    std::size_t folds = 20;
    std::uint64_t seed = 0;
    learn::GbmParams gbm;  // loss is forced to squared
    bool stage2 = true;
    learn::GpGridOptions gp;
    unsigned threads = 1;
};

struct AggregatedFold {
    std::size_t n_train = 0;
    std::size_t n_test = 0;
    // Absent when the held-out targets are constant.
    std::optional<double> r2_stage1;
    std::optional<double> r2_combined;
    std::optional<learn::RbfKernel> kernel;  // stage-2 kernel chosen on this fold
};

struct AggregatedFit {
    learn::GbmModel stage1;               // refit on all rows
    std::optional<learn::GpModel> stage2;  // refit on all in-sample residuals
    std::vector<learn::GpGridEntry> gp_grid;

    // Pooled out-of-fold metrics.
    double r2_stage1 = 0.0;
    double r2_combined = 0.0;
    double r2_incremental = 0.0;
    // Same decomposition for the final models on their own training rows.
    double in_sample_r2_stage1 = 0.0;
    double in_sample_r2_combined = 0.0;
    double in_sample_r2_incremental = 0.0;

    std::vector<double> oof_stage1;
    std::vector<double> oof_combined;
    std::vector<AggregatedFold> folds;
    eval::FoldPlan plan;
    learn::ImportanceReport importance;
};

/// Per fold: boosted trees f on the training features, a GP g on the
/// training residuals at their centroids, and f(s) + g(x) on the held-out
/// rows. Throws DataError with fewer than 2 * folds rows.
AggregatedFit run_aggregated(const Matrix& S, std::span<const geo::PlanePoint> centroids, std::span<const double> y,
                             const AggregatedConfig& cfg);
AggregatedFit run_aggregated(const std::vector<features::AggregatedRow>& rows, const AggregatedConfig& cfg);

/// f(s) + g(x); g is skipped when `gp` is null.
std::vector<double> predict_two_stage(const learn::GbmModel& gbm, const learn::GpModel* gp, const Matrix& S,
                                      std::span<const geo::PlanePoint> centroids);

// ---- point classifiers -------------------------------------------------------

enum class PointModel { GbmSmote, Gbm, RandomForest, LogReg };

std::string_view to_string(PointModel m);  // gbm_smote, gbm, rf, logreg
std::string_view display_name(PointModel m);
PointModel parse_point_model(std::string_view s);
std::vector<PointModel> parse_point_models(std::string_view csv);

/// What one cross-validation fit consumed, for leakage audits. Row indices
/// refer to the matrix given to run_point, except under leaky SMOTE, where
/// they index the oversampled matrix (synthetic rows from n onward).
struct FitAudit {
    PointModel model = PointModel::Gbm;
    std::size_t fold = 0;
    bool leaky = false;
    std::vector<std::size_t> fit_rows;    // rows handed to the learner (or to SMOTE)
    std::vector<std::size_t> smote_rows;  // rows SMOTE drew bases and neighbors from
    std::vector<std::size_t> test_rows;
    std::size_t n_synthetic = 0;
};

using FitObserver = std::function<void(const FitAudit&)>;

struct PointConfig {
    std::size_t folds = 10;
    bool stratified = true;
    std::uint64_t seed = 0;
    std::vector<PointModel> models = {PointModel::GbmSmote, PointModel::Gbm, PointModel::RandomForest,
                                      PointModel::LogReg};
    learn::GbmParams gbm;  // loss is forced to logistic
    learn::ForestParams forest;
    learn::LogisticParams logistic;
    smote::SmoteConfig smote;
    bool leaky_smote = false;  // oversample before splitting (optimistic protocol)
    bool refit = true;         // refit every model on all rows after CV
    unsigned threads = 1;
    FitObserver observer;      // called once per fit, in (model, fold) order
};

struct ModelEvaluation {
    PointModel model = PointModel::Gbm;
    bool smote = false;
    double auc = 0.0;  // pooled out-of-fold
    eval::RocResult roc;
    std::vector<std::optional<double>> fold_auc;  // absent for single-class folds
    eval::FoldStats fold_stats;
    std::vector<double> oof_scores;
    std::size_t n_synthetic = 0;     // summed over folds
    std::size_t evaluated_rows = 0;  // exceeds the input rows under leaky SMOTE
};

struct FinalModels {
    std::optional<learn::GbmModel> gbm_smote;
    std::optional<learn::GbmModel> gbm;
    std::optional<learn::ForestModel> rf;
    std::optional<learn::LogisticModel> logreg;
};

struct PointFitReport {
    std::vector<ModelEvaluation> models;
    std::size_t rows = 0;
    std::size_t positives = 0;
    eval::FoldPlan plan;
    FinalModels final_models;
    // Importance of the refit boosted model (SMOTE variant preferred).
    std::optional<learn::ImportanceReport> importance;
    std::optional<PointModel> importance_model;
    std::vector<std::string> warnings;
};

/// Stratified k-fold comparison of the configured classifiers. SMOTE runs
/// on the training rows of each fold only, unless leaky_smote is set.
/// Throws DataError unless both classes are present.
PointFitReport run_point(const Matrix& X, std::span<const double> y, const PointConfig& cfg);

}  // namespace crashlens::pipeline
