#include "crashlens/network.hpp"

#include <algorithm>
#include <charconv>
#include <istream>
#include <ostream>

#include "crashlens/common.hpp"
#include "crashlens/csv.hpp"
#include "crashlens/tract_index.hpp"

namespace crashlens::network {

namespace {

StreetNetwork subgraph(const StreetNetwork& net, const std::vector<char>& keep) {
    StreetNetwork out;
    std::vector<std::size_t> remap(net.nodes.size(), 0);
    for (std::size_t i = 0; i < net.nodes.size(); ++i) {
        if (keep[i]) remap[i] = out.add_node(net.nodes[i].id, net.nodes[i].location);
    }
    for (const auto& e : net.edges) {
        if (keep[e.u] && keep[e.v]) {
            StreetEdge c = e;
            c.u = remap[e.u];
            c.v = remap[e.v];
            out.edges.push_back(c);
        }
    }
    return out;
}

}  // namespace

StreetNetwork clip_network(const StreetNetwork& net, const CensusTract& tract) {
    const auto box = geo::bbox(tract.geometry);
    std::vector<char> keep(net.nodes.size(), 0);
    for (std::size_t i = 0; i < net.nodes.size(); ++i) {
        const auto& p = net.nodes[i].location;
        keep[i] = box.contains(p) && geo::point_in_polygon(p, tract.geometry);
    }
    return subgraph(net, keep);
}

std::optional<double> circuity(const StreetNetwork& net) {
    if (net.edges.empty()) return std::nullopt;
    double length = 0.0, chord = 0.0;
    for (const auto& e : net.edges) {
        length += e.length_m;
        chord += geo::great_circle_distance(net.nodes[e.u].location, net.nodes[e.v].location);
    }
    if (!(chord > 0.0)) throw DataError("circuity: total straight-line length is zero");
    return length / chord;
}

std::vector<std::size_t> node_degrees(const StreetNetwork& net, bool directed) {
    std::vector<std::size_t> degree(net.nodes.size(), 0);
    if (directed) {
        for (const auto& e : net.edges) {
            ++degree[e.u];
            ++degree[e.v];
        }
        return degree;
    }
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    pairs.reserve(net.edges.size());
    for (const auto& e : net.edges) pairs.push_back(std::minmax(e.u, e.v));
    std::sort(pairs.begin(), pairs.end());
    pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
    for (const auto& [a, b] : pairs) {
        ++degree[a];
        ++degree[b];
    }
    return degree;
}

std::size_t intersection_count(const StreetNetwork& net, bool directed) {
    auto deg = node_degrees(net, directed);
    return static_cast<std::size_t>(std::count_if(deg.begin(), deg.end(), [](std::size_t d) { return d >= 3; }));
}

TractNetworkSummary summarize(const StreetNetwork& clipped, std::string tract_id, const SummaryOptions& opts) {
    TractNetworkSummary s;
    s.tract_id = std::move(tract_id);
    s.n_nodes = clipped.nodes.size();
    s.n_edges = clipped.edges.size();
    auto deg = node_degrees(clipped, opts.directed_degree);
    s.intersections =
        static_cast<std::size_t>(std::count_if(deg.begin(), deg.end(), [](std::size_t d) { return d >= 3; }));
    if (!deg.empty()) {
        double total = 0.0;
        for (auto d : deg) total += static_cast<double>(d);
        s.avg_node_degree = total / static_cast<double>(deg.size());
    }
    s.circuity = circuity(clipped);
    s.empty = !s.circuity.has_value();
    if (s.circuity) {
        s.complexity = static_cast<double>(s.intersections) * *s.circuity;
        s.short_edges = *s.circuity < 1.0 - 1e-9;
    }

    double w_sum = 0.0, w_wt = 0.0, b_sum = 0.0, b_wt = 0.0;
    for (const auto& e : clipped.edges) {
        double wt = opts.length_weighted ? e.length_m : 1.0;
        if (e.width_m) {
            w_sum += wt * *e.width_m;
            w_wt += wt;
        }
        if (e.bike_lanes) {
            b_sum += wt * *e.bike_lanes;
            b_wt += wt;
        }
    }
    if (w_wt > 0) s.avg_street_width_m = w_sum / w_wt;
    if (b_wt > 0) s.avg_bike_lanes = b_sum / b_wt;
    return s;
}

TractNetworkSummary tract_summary(const StreetNetwork& net, const CensusTract& tract, const SummaryOptions& opts) {
    return summarize(clip_network(net, tract), tract.tract_id, opts);
}

NetworkSummaries summarize_tracts(const StreetNetwork& net, const std::vector<CensusTract>& tracts,
                                  const SummaryOptions& opts, unsigned threads) {
    NetworkSummaries out;
    TractIndex index(tracts);
    // membership[i]: every tract containing node i (boundary nodes may have several).
    std::vector<std::vector<std::size_t>> membership(net.nodes.size());
    std::vector<std::vector<std::size_t>> members_of(tracts.size());
    for (std::size_t i = 0; i < net.nodes.size(); ++i) {
        membership[i] = index.containing(net.nodes[i].location);
        for (auto t : membership[i]) members_of[t].push_back(i);
    }
    out.coverage.nodes_total = net.nodes.size();
    out.coverage.nodes_outside = static_cast<std::size_t>(
        std::count_if(membership.begin(), membership.end(), [](const auto& m) { return m.empty(); }));

    std::vector<std::vector<std::size_t>> edges_of(tracts.size());
    out.coverage.edges_total = net.edges.size();
    for (std::size_t e = 0; e < net.edges.size(); ++e) {
        const auto& mu = membership[net.edges[e].u];
        const auto& mv = membership[net.edges[e].v];
        bool assigned = false;
        for (auto t : mu) {
            if (std::find(mv.begin(), mv.end(), t) != mv.end()) {
                edges_of[t].push_back(e);
                assigned = true;
            }
        }
        if (!assigned) ++out.coverage.edges_straddling;
    }

    out.summaries.resize(tracts.size());
    parallel_for(tracts.size(), threads, [&](std::size_t t) {
        StreetNetwork clipped;
        std::unordered_map<std::size_t, std::size_t> remap;
        for (auto i : members_of[t]) remap[i] = clipped.add_node(net.nodes[i].id, net.nodes[i].location);
        for (auto e : edges_of[t]) {
            StreetEdge c = net.edges[e];
            c.u = remap.at(c.u);
            c.v = remap.at(c.v);
            clipped.edges.push_back(c);
        }
        out.summaries[t] = summarize(clipped, tracts[t].tract_id, opts);
    });
    return out;
}

namespace {

std::string opt(const std::optional<double>& v) { return v ? format_double(*v) : ""; }

std::optional<double> read_opt(const std::string& s) {
    if (s.empty()) return std::nullopt;
    double v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) throw DataError("tract summary CSV: bad number '" + s + "'");
    return v;
}

std::size_t read_count(const std::string& s) {
    std::size_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) throw DataError("tract summary CSV: bad count '" + s + "'");
    return v;
}

const std::vector<std::string> kSummaryColumns = {
    "tract_id",        "n_nodes",           "n_edges",        "intersections", "circuity",   "complexity",
    "avg_node_degree", "avg_street_width_m", "avg_bike_lanes", "empty",         "short_edges"};

}  // namespace

void write_summaries(std::ostream& out, const std::vector<TractNetworkSummary>& summaries) {
    csv::write_row(out, kSummaryColumns);
    for (const auto& s : summaries) {
        csv::write_row(out, {s.tract_id, std::to_string(s.n_nodes), std::to_string(s.n_edges),
                             std::to_string(s.intersections), opt(s.circuity), format_double(s.complexity),
                             format_double(s.avg_node_degree), opt(s.avg_street_width_m), opt(s.avg_bike_lanes),
                             s.empty ? "1" : "0", s.short_edges ? "1" : "0"});
    }
}

std::vector<TractNetworkSummary> read_summaries(std::istream& in) {
    csv::Reader reader(in);
    std::vector<std::string> f;
    if (!reader.next(f)) throw DataError("tract summary CSV: missing header");
    csv::Header h(f);
    std::vector<std::size_t> col;
    for (const auto& name : kSummaryColumns) col.push_back(h.require(name));
    std::vector<TractNetworkSummary> out;
    while (reader.next(f)) {
        if (f.size() != h.names().size()) {
            throw DataError("tract summary CSV line " + std::to_string(reader.record_line()) + ": column count");
        }
        TractNetworkSummary s;
        s.tract_id = f[col[0]];
        s.n_nodes = read_count(f[col[1]]);
        s.n_edges = read_count(f[col[2]]);
        s.intersections = read_count(f[col[3]]);
        s.circuity = read_opt(f[col[4]]);
        s.complexity = read_opt(f[col[5]]).value_or(0.0);
        s.avg_node_degree = read_opt(f[col[6]]).value_or(0.0);
        s.avg_street_width_m = read_opt(f[col[7]]);
        s.avg_bike_lanes = read_opt(f[col[8]]);
        s.empty = f[col[9]] == "1";
        s.short_edges = f[col[10]] == "1";
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace crashlens::network
