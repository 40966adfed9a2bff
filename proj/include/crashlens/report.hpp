#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "crashlens/features.hpp"
#include "crashlens/ingest.hpp"
#include "crashlens/network.hpp"
#include "crashlens/pipeline.hpp"
#include "crashlens/spatial.hpp"

namespace crashlens::report {

using Json = nlohmann::ordered_json;

Json ingest_json(const IngestReport& r);
Json coverage_json(const network::Coverage& c);
Json build_json(const features::BuildReport& r);

/// Features ordered by decreasing share: [{"feature", "share", "total_gain"}].
Json importance_json(const learn::ImportanceReport& r, const std::vector<std::string>& names);

/// Pooled and per-fold metrics, chosen GP kernels and the ranking.
Json aggregated_json(const pipeline::AggregatedFit& fit, const std::vector<std::string>& feature_names);
Json point_json(const pipeline::PointFitReport& rep, const std::vector<std::string>& feature_names);

/// Cluster counts and the number of significant units.
Json moran_json(const spatial::MoranResult& r, double alpha);

/// Pretty-printed with a trailing newline. Contains no timestamps, so equal
/// inputs give equal bytes.
void write_json(const std::filesystem::path& path, const Json& j);

}  // namespace crashlens::report
