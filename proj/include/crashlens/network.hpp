#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "crashlens/ingest.hpp"

namespace crashlens::network {

/// Subgraph of nodes inside the tract (boundary inclusive) and edges whose
/// endpoints are both kept. Node ids are preserved.
StreetNetwork clip_network(const StreetNetwork& net, const CensusTract& tract);

/// Ratio of sums: total edge length over total endpoint chord length.
/// nullopt for a network without edges; DataError when every edge has
/// coincident endpoints.
std::optional<double> circuity(const StreetNetwork& net);

/// Undirected degree counts distinct neighbor nodes (parallel and reversed
/// duplicate edges collapse). Directed degree counts every edge row incident
/// to the node.
std::vector<std::size_t> node_degrees(const StreetNetwork& net, bool directed = false);

/// Nodes of degree >= 3.
std::size_t intersection_count(const StreetNetwork& net, bool directed = false);

struct SummaryOptions {
    bool directed_degree = false;
    bool length_weighted = false;  // width / bike-lane means weighted by edge length
};

struct TractNetworkSummary {
    std::string tract_id;
    std::size_t n_nodes = 0;
    std::size_t n_edges = 0;
    std::size_t intersections = 0;
    std::optional<double> circuity;
    double complexity = 0.0;  // intersections * circuity (0 when circuity is absent)
    double avg_node_degree = 0.0;
    std::optional<double> avg_street_width_m;
    std::optional<double> avg_bike_lanes;
    bool empty = false;        // no edges inside the tract
    bool short_edges = false;  // circuity < 1: some measured length is shorter than its chord

    bool operator==(const TractNetworkSummary&) const = default;
};

/// Summary of an already clipped network.
TractNetworkSummary summarize(const StreetNetwork& clipped, std::string tract_id, const SummaryOptions& opts = {});

TractNetworkSummary tract_summary(const StreetNetwork& net, const CensusTract& tract,
                                  const SummaryOptions& opts = {});

struct Coverage {
    std::size_t nodes_total = 0;
    std::size_t nodes_outside = 0;     // in no tract
    std::size_t edges_total = 0;
    std::size_t edges_straddling = 0;  // endpoints never share a tract
};

struct NetworkSummaries {
    std::vector<TractNetworkSummary> summaries;  // same order as the tracts
    Coverage coverage;
};

/// tract_summary for every tract, using a spatial index for node assignment.
NetworkSummaries summarize_tracts(const StreetNetwork& net, const std::vector<CensusTract>& tracts,
                                  const SummaryOptions& opts = {}, unsigned threads = 1);

/// Columns: tract_id,n_nodes,n_edges,intersections,circuity,complexity,
/// avg_node_degree,avg_street_width_m,avg_bike_lanes,empty,short_edges.
/// Absent values are empty cells.
void write_summaries(std::ostream& out, const std::vector<TractNetworkSummary>& summaries);
std::vector<TractNetworkSummary> read_summaries(std::istream& in);

}  // namespace crashlens::network
