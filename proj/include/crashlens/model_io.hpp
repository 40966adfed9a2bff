#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "crashlens/forest.hpp"
#include "crashlens/gbm.hpp"
#include "crashlens/gp.hpp"
#include "crashlens/logistic.hpp"

namespace crashlens::model_io {

inline constexpr int kFormatVersion = 1;

enum class ModelKind { TwoStage, Gbm, Forest, Logistic };

std::string_view to_string(ModelKind k);

/// A persisted predictor. Exactly the members required by `kind` are set:
/// TwoStage uses gbm (+ gp when stage 2 ran), the others their own member.
struct SavedModel {
    ModelKind kind = ModelKind::Gbm;
    std::string name;
    std::vector<std::string> feature_names;
    std::optional<learn::GbmModel> gbm;
    std::optional<learn::GpModel> gp;
    std::optional<learn::ForestModel> forest;
    std::optional<learn::LogisticModel> logistic;

    /// Columns a prediction input must provide, in matrix order. Two-stage
    /// models with a GP also need centroid_x and centroid_y.
    std::vector<std::string> required_columns() const;

    /// Scores for feature rows; `centroids` is used only by two-stage models.
    std::vector<double> predict(const Matrix& X, std::span<const geo::PlanePoint> centroids = {}) const;
};

/// JSON document:
///   {"format": "crashlens-model", "version": 1, "kind": ..., "name": ...,
///    "feature_names": [...], "gbm"|"gp"|"forest"|"logistic": {...}}
/// Doubles are written in shortest round-trip form, so a reloaded model
/// reproduces its scores exactly.
std::string to_json_text(const SavedModel& model);
SavedModel from_json_text(const std::string& text);

void save(const SavedModel& model, const std::filesystem::path& path);

/// Throws DataError for unreadable files, JSON syntax errors (with byte
/// offset), unsupported versions (naming both) and schema violations.
SavedModel load(const std::filesystem::path& path);

}  // namespace crashlens::model_io
