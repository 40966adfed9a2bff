#pragma once

#include <array>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "crashlens/common.hpp"
#include "crashlens/ingest.hpp"
#include "crashlens/network.hpp"

namespace crashlens::features {

/// 1 iff injured + killed >= 1.
int severity_label(const AccidentRecord& rec);

struct TemporalFeatures {
    int hour = 0;         // 0-23
    int day_of_week = 0;  // Monday = 0 ... Sunday = 6
};

TemporalFeatures temporal_features(const Timestamp& t);

enum class VehicleCategory { Car, TwoWheeler, Truck, Bus, Taxi, Bicycle, Other };
inline constexpr std::size_t kVehicleCategoryCount = 7;

std::string_view to_string(VehicleCategory c);

struct VehicleKeyword {
    std::string_view keyword;  // upper-case substring
    VehicleCategory category;
};

/// Keyword table in match priority order; the first keyword found as a
/// case-insensitive substring decides the category.
std::span<const VehicleKeyword> vehicle_keyword_table();

/// Unknown or empty strings map to Other.
VehicleCategory vehicle_category(std::string_view raw);

/// Tract-level feature vector s, in this order.
inline constexpr std::array<std::string_view, 4> kTractFeatureNames = {
    "complexity", "avg_street_width_m", "avg_bike_lanes", "avg_node_degree"};

/// Point-level feature names in matrix column order.
const std::vector<std::string>& point_feature_names();

struct AggregatedRow {
    std::string tract_id;
    std::array<double, 4> s{};
    geo::PlanePoint centroid;
    std::int64_t y = 0;  // severe accident count
    bool operator==(const AggregatedRow&) const = default;
};

struct PointRow {
    std::string id;
    std::string tract_id;
    int hour = 0;
    int day_of_week = 0;
    std::array<int, kVehicleCategoryCount> vehicles{};
    std::array<double, 4> s{};
    int label = 0;
    bool operator==(const PointRow&) const = default;

    std::vector<double> features() const;
};

/// Row accounting across table assembly; every count is exact.
struct BuildReport {
    std::size_t accidents_total = 0;
    std::size_t accidents_outside = 0;           // in no tract
    std::size_t accidents_uncovered_tract = 0;   // tract dropped (no usable network summary)
    std::size_t tracts_total = 0;
    std::size_t tracts_dropped_empty = 0;        // no edges inside
    std::size_t tracts_dropped_missing = 0;      // width or bike-lane average absent
    std::size_t severe_total = 0;                // over all parsed accidents
    std::size_t rows = 0;
    std::size_t positive_rows = 0;
};

struct AggregatedTable {
    std::vector<AggregatedRow> rows;
    geo::GeoPoint projection_ref;
    BuildReport report;
};

struct PointTable {
    std::vector<PointRow> rows;
    BuildReport report;
};

/// `summaries` must be in the same order as `tracts`. Throws DataError when
/// there are no tracts.
AggregatedTable build_aggregated(const std::vector<AccidentRecord>& accidents,
                                 const std::vector<CensusTract>& tracts,
                                 const std::vector<network::TractNetworkSummary>& summaries);

PointTable build_point(const std::vector<AccidentRecord>& accidents, const std::vector<CensusTract>& tracts,
                       const std::vector<network::TractNetworkSummary>& summaries);

Matrix tract_feature_matrix(const std::vector<AggregatedRow>& rows);
std::vector<geo::PlanePoint> centroids(const std::vector<AggregatedRow>& rows);
std::vector<double> targets(const std::vector<AggregatedRow>& rows);

Matrix point_feature_matrix(const std::vector<PointRow>& rows);
std::vector<double> labels(const std::vector<PointRow>& rows);

/// tract_id,complexity,avg_street_width_m,avg_bike_lanes,avg_node_degree,centroid_x,centroid_y,y
void write_aggregated(std::ostream& out, const std::vector<AggregatedRow>& rows);
std::vector<AggregatedRow> read_aggregated(std::istream& in);

/// id,tract_id,<point_feature_names()>,label
void write_points(std::ostream& out, const std::vector<PointRow>& rows);
std::vector<PointRow> read_points(std::istream& in);

}  // namespace crashlens::features
