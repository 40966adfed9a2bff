#include "crashlens/ingest.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "crashlens/common.hpp"
#include "crashlens/csv.hpp"

namespace crashlens {

using nlohmann::json;

namespace {

std::optional<double> parse_real(std::string_view s) {
    s = csv::trim(s);
    if (s.empty()) return std::nullopt;
    if (s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

std::optional<std::int64_t> parse_int(std::string_view s) {
    s = csv::trim(s);
    if (s.empty()) return std::nullopt;
    if (s.front() == '+') s.remove_prefix(1);
    std::int64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

std::optional<int> parse_fixed_digits(std::string_view s) {
    if (s.empty()) return std::nullopt;
    int v = 0;
    for (char c : s) {
        if (c < '0' || c > '9') return std::nullopt;
        v = v * 10 + (c - '0');
    }
    return v;
}

std::string two(int v) {
    char buf[8];
    std::snprintf(buf, sizeof buf, "%02d", v);
    return buf;
}

struct RowError {
    std::string reason;
};

}  // namespace

std::optional<Timestamp> parse_timestamp(std::string_view date, std::string_view time) {
    date = csv::trim(date);
    time = csv::trim(time);
    if (date.size() != 10 || date[4] != '-' || date[7] != '-') return std::nullopt;
    auto y = parse_fixed_digits(date.substr(0, 4));
    auto mo = parse_fixed_digits(date.substr(5, 2));
    auto d = parse_fixed_digits(date.substr(8, 2));
    auto colon = time.find(':');
    if (colon == std::string_view::npos || colon == 0 || colon > 2 || time.size() - colon - 1 != 2) {
        return std::nullopt;
    }
    auto h = parse_fixed_digits(time.substr(0, colon));
    auto mi = parse_fixed_digits(time.substr(colon + 1));
    if (!y || !mo || !d || !h || !mi) return std::nullopt;
    std::chrono::year_month_day ymd{std::chrono::year{*y}, std::chrono::month{static_cast<unsigned>(*mo)},
                                    std::chrono::day{static_cast<unsigned>(*d)}};
    if (!ymd.ok() || *h > 23 || *mi > 59) return std::nullopt;
    return Timestamp{*y, *mo, *d, *h, *mi};
}

std::string format_date(const Timestamp& t) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", t.year, t.month, t.day);
    return buf;
}

std::string format_time(const Timestamp& t) { return two(t.hour) + ":" + two(t.minute); }

std::optional<std::size_t> StreetNetwork::find(const std::string& id) const {
    auto it = index.find(id);
    if (it == index.end()) return std::nullopt;
    return it->second;
}

std::size_t StreetNetwork::add_node(std::string id, geo::GeoPoint location) {
    if (index.contains(id)) throw DataError("duplicate node id '" + id + "'");
    index.emplace(id, nodes.size());
    nodes.push_back({std::move(id), location});
    return nodes.size() - 1;
}

void IngestReport::reject(const std::string& reason) {
    ++rows_rejected;
    ++rejection_reasons[reason];
}

// ---------------------------------------------------------------------------
// Accidents

AccidentIngest parse_accidents(std::istream& in, bool strict) {
    csv::Reader reader(in);
    std::vector<std::string> fields;
    if (!reader.next(fields)) throw DataError("accident CSV: missing header row");
    csv::Header header(fields);
    const std::size_t c_id = header.require("id");
    const std::size_t c_date = header.require("date");
    const std::size_t c_time = header.require("time");
    const std::size_t c_lon = header.require("lon");
    const std::size_t c_lat = header.require("lat");
    const std::size_t c_inj = header.require("injured");
    const std::size_t c_kill = header.require("killed");
    std::vector<std::size_t> c_vehicles;
    for (int i = 1; i <= 5; ++i) {
        if (auto c = header.find("vehicle" + std::to_string(i))) c_vehicles.push_back(*c);
    }

    AccidentIngest out;
    while (reader.next(fields)) {
        if (fields.size() == 1 && csv::trim(fields[0]).empty()) continue;  // blank line
        ++out.report.rows_read;
        try {
            if (fields.size() != header.names().size()) throw RowError{"column_count"};
            AccidentRecord rec;
            rec.id = std::string(csv::trim(fields[c_id]));
            if (rec.id.empty()) throw RowError{"missing_id"};

            auto lon_s = csv::trim(fields[c_lon]);
            auto lat_s = csv::trim(fields[c_lat]);
            if (lon_s.empty() || lat_s.empty()) throw RowError{"missing_coordinates"};
            auto lon = parse_real(lon_s);
            auto lat = parse_real(lat_s);
            if (!lon || !lat) throw RowError{"invalid_coordinates"};
            rec.location = {*lon, *lat};
            if (!geo::is_valid(rec.location)) throw RowError{"invalid_coordinates"};
            if (*lon == 0.0 && *lat == 0.0) throw RowError{"sentinel_coordinates"};

            auto ts = parse_timestamp(fields[c_date], fields[c_time]);
            if (!ts) throw RowError{"invalid_timestamp"};
            rec.timestamp = *ts;

            auto inj = parse_int(fields[c_inj]);
            auto kill = parse_int(fields[c_kill]);
            if (!inj || !kill) throw RowError{"invalid_count"};
            if (*inj < 0 || *kill < 0) throw RowError{"negative_count"};
            rec.injured = *inj;
            rec.killed = *kill;

            for (auto c : c_vehicles) {
                auto v = csv::trim(fields[c]);
                if (!v.empty()) rec.vehicle_types.emplace_back(v);
            }
            out.records.push_back(std::move(rec));
            ++out.report.rows_ok;
        } catch (const RowError& e) {
            if (strict) {
                throw DataError("accident CSV line " + std::to_string(reader.record_line()) + ": " + e.reason);
            }
            out.report.reject(e.reason);
        }
    }
    return out;
}

void write_accidents(std::ostream& out, const std::vector<AccidentRecord>& records) {
    csv::write_row(out, {"id", "date", "time", "lon", "lat", "vehicle1", "vehicle2", "vehicle3", "vehicle4",
                         "vehicle5", "injured", "killed"});
    std::vector<std::string> row;
    for (const auto& r : records) {
        row = {r.id, format_date(r.timestamp), format_time(r.timestamp), format_double(r.location.lon),
               format_double(r.location.lat)};
        for (std::size_t i = 0; i < 5; ++i) row.push_back(i < r.vehicle_types.size() ? r.vehicle_types[i] : "");
        row.push_back(std::to_string(r.injured));
        row.push_back(std::to_string(r.killed));
        csv::write_row(out, row);
    }
}

// ---------------------------------------------------------------------------
// Tracts

namespace {

geo::Ring ring_from_json(const json& coords) {
    if (!coords.is_array()) throw DataError("ring coordinates must be an array");
    geo::Ring ring;
    ring.reserve(coords.size());
    for (const auto& pos : coords) {
        if (!pos.is_array() || pos.size() < 2 || !pos[0].is_number() || !pos[1].is_number()) {
            throw DataError("invalid coordinate position");
        }
        ring.push_back({pos[0].get<double>(), pos[1].get<double>()});
    }
    return geo::normalize_ring(std::move(ring));
}

geo::PolygonGeom polygon_from_json(const json& rings) {
    if (!rings.is_array() || rings.empty()) throw DataError("polygon must have at least one ring");
    geo::PolygonGeom poly;
    poly.exterior = ring_from_json(rings[0]);
    for (std::size_t i = 1; i < rings.size(); ++i) poly.holes.push_back(ring_from_json(rings[i]));
    return poly;
}

json ring_to_json(const geo::Ring& ring) {
    json arr = json::array();
    for (const auto& p : ring) arr.push_back({p.lon, p.lat});
    arr.push_back({ring.front().lon, ring.front().lat});
    return arr;
}

}  // namespace

std::vector<CensusTract> parse_tracts_text(const std::string& text, const std::string& id_property) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw DataError(std::string("tract GeoJSON: ") + e.what());
    }
    if (!doc.is_object() || doc.value("type", "") != "FeatureCollection" || !doc.contains("features") ||
        !doc["features"].is_array()) {
        throw DataError("tract GeoJSON: expected a FeatureCollection");
    }
    std::vector<CensusTract> tracts;
    std::unordered_map<std::string, std::size_t> seen;
    std::size_t index = 0;
    for (const auto& feat : doc["features"]) {
        const std::string where = "tract GeoJSON feature " + std::to_string(index++);
        const json* props = feat.contains("properties") ? &feat["properties"] : nullptr;
        if (!props || !props->is_object() || !props->contains(id_property)) {
            throw DataError(where + ": missing id property '" + id_property + "'");
        }
        const json& idv = (*props)[id_property];
        CensusTract tract;
        if (idv.is_string()) {
            tract.tract_id = idv.get<std::string>();
        } else if (idv.is_number_integer()) {
            tract.tract_id = std::to_string(idv.get<std::int64_t>());
        } else {
            throw DataError(where + ": id property must be a string or integer");
        }
        if (tract.tract_id.empty()) throw DataError(where + ": empty tract id");
        if (!seen.emplace(tract.tract_id, tracts.size()).second) {
            throw DataError(where + ": duplicate id '" + tract.tract_id + "'");
        }
        if (!feat.contains("geometry") || !feat["geometry"].is_object()) {
            throw DataError(where + ": missing geometry");
        }
        const json& g = feat["geometry"];
        const std::string type = g.value("type", "");
        try {
            if (type == "Polygon") {
                tract.geometry.push_back(polygon_from_json(g.at("coordinates")));
            } else if (type == "MultiPolygon") {
                const json& polys = g.at("coordinates");
                if (!polys.is_array() || polys.empty()) throw DataError("empty MultiPolygon");
                for (const auto& p : polys) tract.geometry.push_back(polygon_from_json(p));
            } else {
                throw DataError("non-polygon geometry '" + type + "'");
            }
            tract.centroid = geo::polygon_centroid(tract.geometry);
        } catch (const DataError& e) {
            throw DataError(where + " ('" + tract.tract_id + "'): " + e.what());
        } catch (const json::exception& e) {
            throw DataError(where + " ('" + tract.tract_id + "'): " + e.what());
        }
        tracts.push_back(std::move(tract));
    }
    return tracts;
}

std::vector<CensusTract> parse_tracts(std::istream& in, const std::string& id_property) {
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_tracts_text(buf.str(), id_property);
}

void write_tracts(std::ostream& out, const std::vector<CensusTract>& tracts, const std::string& id_property) {
    json features = json::array();
    for (const auto& t : tracts) {
        json polys = json::array();
        for (const auto& part : t.geometry) {
            json rings = json::array();
            rings.push_back(ring_to_json(part.exterior));
            for (const auto& h : part.holes) rings.push_back(ring_to_json(h));
            polys.push_back(std::move(rings));
        }
        json geom = t.geometry.size() == 1 ? json{{"type", "Polygon"}, {"coordinates", polys[0]}}
                                           : json{{"type", "MultiPolygon"}, {"coordinates", polys}};
        features.push_back({{"type", "Feature"}, {"properties", {{id_property, t.tract_id}}}, {"geometry", geom}});
    }
    out << json{{"type", "FeatureCollection"}, {"features", features}}.dump() << '\n';
}

// ---------------------------------------------------------------------------
// Street network

NetworkIngest parse_network(std::istream& nodes_in, std::istream& edges_in) {
    NetworkIngest out;
    std::vector<std::string> fields;

    csv::Reader nodes(nodes_in);
    if (!nodes.next(fields)) throw DataError("nodes CSV: missing header row");
    csv::Header nh(fields);
    const std::size_t c_id = nh.require("node_id");
    const std::size_t c_lon = nh.require("lon");
    const std::size_t c_lat = nh.require("lat");
    while (nodes.next(fields)) {
        if (fields.size() == 1 && csv::trim(fields[0]).empty()) continue;
        ++out.nodes_report.rows_read;
        try {
            if (fields.size() != nh.names().size()) throw RowError{"column_count"};
            std::string id(csv::trim(fields[c_id]));
            if (id.empty()) throw RowError{"missing_id"};
            if (csv::trim(fields[c_lon]).empty() || csv::trim(fields[c_lat]).empty()) {
                throw RowError{"missing_coordinates"};
            }
            auto lon = parse_real(fields[c_lon]);
            auto lat = parse_real(fields[c_lat]);
            if (!lon || !lat || !geo::is_valid({*lon, *lat})) throw RowError{"invalid_coordinates"};
            if (out.network.index.contains(id)) throw RowError{"duplicate_node"};
            out.network.add_node(std::move(id), {*lon, *lat});
            ++out.nodes_report.rows_ok;
        } catch (const RowError& e) {
            out.nodes_report.reject(e.reason);
        }
    }

    csv::Reader edges(edges_in);
    if (!edges.next(fields)) throw DataError("edges CSV: missing header row");
    csv::Header eh(fields);
    const std::size_t c_u = eh.require("u");
    const std::size_t c_v = eh.require("v");
    const auto c_len = eh.find("length_m");
    const auto c_width = eh.find("width_m");
    const auto c_bike = eh.find("bike_lanes");
    auto cell = [&](std::optional<std::size_t> c) -> std::string_view {
        return c ? csv::trim(fields[*c]) : std::string_view{};
    };
    while (edges.next(fields)) {
        if (fields.size() == 1 && csv::trim(fields[0]).empty()) continue;
        ++out.edges_report.rows_read;
        try {
            if (fields.size() != eh.names().size()) throw RowError{"column_count"};
            auto u = out.network.find(std::string(csv::trim(fields[c_u])));
            auto v = out.network.find(std::string(csv::trim(fields[c_v])));
            if (!u || !v) throw RowError{"dangling_edge"};
            if (*u == *v) throw RowError{"self_loop"};
            StreetEdge e;
            e.u = *u;
            e.v = *v;
            if (auto s = cell(c_len); !s.empty()) {
                auto len = parse_real(s);
                if (!len || *len <= 0) throw RowError{"invalid_length"};
                e.length_m = *len;
            } else {
                e.length_m = geo::great_circle_distance(out.network.nodes[e.u].location,
                                                        out.network.nodes[e.v].location);
                e.length_backfilled = true;
            }
            if (auto s = cell(c_width); !s.empty()) {
                auto w = parse_real(s);
                if (!w || *w <= 0) throw RowError{"invalid_width"};
                e.width_m = *w;
            }
            if (auto s = cell(c_bike); !s.empty()) {
                auto b = parse_int(s);
                if (!b || *b < 0) throw RowError{"invalid_bike_lanes"};
                e.bike_lanes = static_cast<double>(*b);
            }
            out.network.edges.push_back(e);
            ++out.edges_report.rows_ok;
        } catch (const RowError& e) {
            out.edges_report.reject(e.reason);
        }
    }
    return out;
}

void write_network(std::ostream& nodes_out, std::ostream& edges_out, const StreetNetwork& net) {
    csv::write_row(nodes_out, {"node_id", "lon", "lat"});
    for (const auto& n : net.nodes) {
        csv::write_row(nodes_out, {n.id, format_double(n.location.lon), format_double(n.location.lat)});
    }
    csv::write_row(edges_out, {"u", "v", "length_m", "width_m", "bike_lanes"});
    for (const auto& e : net.edges) {
        csv::write_row(edges_out,
                       {net.nodes[e.u].id, net.nodes[e.v].id, e.length_backfilled ? "" : format_double(e.length_m),
                        e.width_m ? format_double(*e.width_m) : "",
                        e.bike_lanes ? std::to_string(static_cast<std::int64_t>(*e.bike_lanes)) : ""});
    }
}

}  // namespace crashlens
