#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "crashlens/geo.hpp"

namespace crashlens {

/// Local civil date-time at minute precision. No time zone.
struct Timestamp {
    int year = 1970;
    int month = 1;
    int day = 1;
    int hour = 0;
    int minute = 0;
    bool operator==(const Timestamp&) const = default;
};

/// Parses `YYYY-MM-DD` and `HH:MM`; nullopt if either is malformed or not a
/// real calendar instant.
std::optional<Timestamp> parse_timestamp(std::string_view date, std::string_view time);
std::string format_date(const Timestamp& t);
std::string format_time(const Timestamp& t);

struct AccidentRecord {
    std::string id;
    geo::GeoPoint location;
    Timestamp timestamp;
    std::vector<std::string> vehicle_types;
    std::int64_t injured = 0;
    std::int64_t killed = 0;
    bool operator==(const AccidentRecord&) const = default;
};

struct CensusTract {
    std::string tract_id;
    geo::MultiPolygon geometry;
    geo::GeoPoint centroid;
};

struct NetworkNode {
    std::string id;
    geo::GeoPoint location;
};

struct StreetEdge {
    std::size_t u = 0;  // index into StreetNetwork::nodes
    std::size_t v = 0;
    double length_m = 0.0;
    bool length_backfilled = false;
    std::optional<double> width_m;
    std::optional<double> bike_lanes;
};

struct StreetNetwork {
    std::vector<NetworkNode> nodes;
    std::vector<StreetEdge> edges;
    std::unordered_map<std::string, std::size_t> index;  // node id -> position

    std::optional<std::size_t> find(const std::string& id) const;
    /// Appends a node; throws DataError on a duplicate id.
    std::size_t add_node(std::string id, geo::GeoPoint location);
};

/// Row accounting for one parsed file. rows_ok + rows_rejected == rows_read.
struct IngestReport {
    std::size_t rows_read = 0;
    std::size_t rows_ok = 0;
    std::size_t rows_rejected = 0;
    std::map<std::string, std::size_t> rejection_reasons;

    void reject(const std::string& reason);
};

struct AccidentIngest {
    std::vector<AccidentRecord> records;
    IngestReport report;
};

/// Canonical accident CSV: id,date,time,lon,lat,vehicle1..vehicle5,injured,killed.
/// Vehicle columns are optional. Lenient mode rejects and counts bad rows;
/// strict mode throws DataError on the first bad row, naming its line.
AccidentIngest parse_accidents(std::istream& in, bool strict = false);

void write_accidents(std::ostream& out, const std::vector<AccidentRecord>& records);

/// GeoJSON FeatureCollection of Polygon/MultiPolygon features keyed by
/// `id_property` (string or integer valued). Throws DataError on any problem.
std::vector<CensusTract> parse_tracts(std::istream& in, const std::string& id_property = "tract_id");
std::vector<CensusTract> parse_tracts_text(const std::string& text, const std::string& id_property = "tract_id");

void write_tracts(std::ostream& out, const std::vector<CensusTract>& tracts,
                  const std::string& id_property = "tract_id");

struct NetworkIngest {
    StreetNetwork network;
    IngestReport nodes_report;
    IngestReport edges_report;
};

/// nodes.csv (node_id,lon,lat) and edges.csv (u,v[,length_m,width_m,bike_lanes]).
/// Dangling and self-loop edges are rejected; a missing length is back-filled
/// with the great-circle distance between the endpoints.
NetworkIngest parse_network(std::istream& nodes, std::istream& edges);

void write_network(std::ostream& nodes_out, std::ostream& edges_out, const StreetNetwork& net);

}  // namespace crashlens
