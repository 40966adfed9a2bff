#include "crashlens/features.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <chrono>
#include <istream>
#include <ostream>

#include "crashlens/csv.hpp"
#include "crashlens/tract_index.hpp"

namespace crashlens::features {

int severity_label(const AccidentRecord& rec) { return rec.injured + rec.killed >= 1 ? 1 : 0; }

TemporalFeatures temporal_features(const Timestamp& t) {
    using namespace std::chrono;
    year_month_day ymd{year{t.year}, month{static_cast<unsigned>(t.month)}, day{static_cast<unsigned>(t.day)}};
    // iso_encoding: Monday = 1 ... Sunday = 7
    unsigned iso = weekday{sys_days{ymd}}.iso_encoding();
    return {t.hour, static_cast<int>(iso) - 1};
}

std::string_view to_string(VehicleCategory c) {
    switch (c) {
        case VehicleCategory::Car: return "car";
        case VehicleCategory::TwoWheeler: return "two_wheeler";
        case VehicleCategory::Truck: return "truck";
        case VehicleCategory::Bus: return "bus";
        case VehicleCategory::Taxi: return "taxi";
        case VehicleCategory::Bicycle: return "bicycle";
        case VehicleCategory::Other: return "other";
    }
    return "other";
}

namespace {

using VC = VehicleCategory;

// Motorized two-wheelers come before bicycles so "MOTORBIKE" and "DIRT BIKE"
// are not read as bicycles; buses and taxis come before the generic car and
// truck words ("SCHOOL BUS", "TAXI VAN").
constexpr VehicleKeyword kKeywords[] = {
    {"MOTORCYCLE", VC::TwoWheeler}, {"MOTORBIKE", VC::TwoWheeler}, {"MOTOR SCOOTER", VC::TwoWheeler},
    {"MOTORSCOOTER", VC::TwoWheeler}, {"MOPED", VC::TwoWheeler},   {"SCOOTER", VC::TwoWheeler},
    {"MINIBIKE", VC::TwoWheeler},   {"DIRT BIKE", VC::TwoWheeler}, {"VESPA", VC::TwoWheeler},
    {"BICYCLE", VC::Bicycle},       {"E-BIKE", VC::Bicycle},       {"EBIKE", VC::Bicycle},
    {"BIKE", VC::Bicycle},          {"BUS", VC::Bus},              {"TAXI", VC::Taxi},
    {"CAB", VC::Taxi},              {"LIVERY", VC::Taxi},          {"TRUCK", VC::Truck},
    {"PICK-UP", VC::Truck},         {"PICKUP", VC::Truck},         {"TRACTOR", VC::Truck},
    {"TRAILER", VC::Truck},         {"DUMP", VC::Truck},           {"TANKER", VC::Truck},
    {"FLAT BED", VC::Truck},        {"FLATBED", VC::Truck},        {"GARBAGE", VC::Truck},
    {"REFUSE", VC::Truck},          {"TOW", VC::Truck},            {"SEDAN", VC::Car},
    {"PASSENGER", VC::Car},         {"STATION WAGON", VC::Car},    {"SPORT UTILITY", VC::Car},
    {"SUV", VC::Car},               {"CONVERTIBLE", VC::Car},      {"COUPE", VC::Car},
    {"HATCHBACK", VC::Car},         {"MINIVAN", VC::Car},          {"VAN", VC::Car},
    {"4 DR", VC::Car},              {"2 DR", VC::Car},             {"CAR", VC::Car},
};

std::string upper(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return out;
}

}  // namespace

std::span<const VehicleKeyword> vehicle_keyword_table() { return kKeywords; }

VehicleCategory vehicle_category(std::string_view raw) {
    const std::string up = upper(raw);
    for (const auto& k : kKeywords) {
        if (up.find(k.keyword) != std::string::npos) return k.category;
    }
    return VehicleCategory::Other;
}

const std::vector<std::string>& point_feature_names() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> n = {"hour", "day_of_week"};
        for (std::size_t c = 0; c < kVehicleCategoryCount; ++c) {
            n.emplace_back(to_string(static_cast<VehicleCategory>(c)));
        }
        for (auto f : kTractFeatureNames) n.emplace_back(f);
        return n;
    }();
    return names;
}

std::vector<double> PointRow::features() const {
    std::vector<double> f;
    f.reserve(2 + kVehicleCategoryCount + 4);
    f.push_back(hour);
    f.push_back(day_of_week);
    for (int v : vehicles) f.push_back(v);
    f.insert(f.end(), s.begin(), s.end());
    return f;
}

namespace {

/// Tract feature vectors for tracts with a complete summary; nullopt otherwise.
std::vector<std::optional<std::array<double, 4>>> usable_tracts(
    const std::vector<CensusTract>& tracts, const std::vector<network::TractNetworkSummary>& summaries,
    BuildReport& report) {
    if (tracts.empty()) throw DataError("no tracts");
    if (summaries.size() != tracts.size()) throw DataError("tract summaries do not match tracts");
    std::vector<std::optional<std::array<double, 4>>> out(tracts.size());
    report.tracts_total = tracts.size();
    for (std::size_t t = 0; t < tracts.size(); ++t) {
        const auto& s = summaries[t];
        if (s.tract_id != tracts[t].tract_id) {
            throw DataError("tract summary order mismatch at '" + tracts[t].tract_id + "'");
        }
        if (s.empty) {
            ++report.tracts_dropped_empty;
        } else if (!s.avg_street_width_m || !s.avg_bike_lanes) {
            ++report.tracts_dropped_missing;
        } else {
            out[t] = std::array<double, 4>{s.complexity, *s.avg_street_width_m, *s.avg_bike_lanes, s.avg_node_degree};
        }
    }
    return out;
}

std::vector<std::optional<std::size_t>> assign_accidents(const std::vector<AccidentRecord>& accidents,
                                                         const std::vector<CensusTract>& tracts) {
    TractIndex index(tracts);
    std::vector<std::optional<std::size_t>> owner(accidents.size());
    for (std::size_t i = 0; i < accidents.size(); ++i) owner[i] = index.assign(accidents[i].location);
    return owner;
}

}  // namespace

AggregatedTable build_aggregated(const std::vector<AccidentRecord>& accidents, const std::vector<CensusTract>& tracts,
                                 const std::vector<network::TractNetworkSummary>& summaries) {
    AggregatedTable table;
    auto usable = usable_tracts(tracts, summaries, table.report);
    auto owner = assign_accidents(accidents, tracts);

    std::vector<std::int64_t> severe(tracts.size(), 0);
    table.report.accidents_total = accidents.size();
    for (std::size_t i = 0; i < accidents.size(); ++i) {
        int label = severity_label(accidents[i]);
        table.report.severe_total += static_cast<std::size_t>(label);
        if (!owner[i]) {
            ++table.report.accidents_outside;
        } else if (!usable[*owner[i]]) {
            ++table.report.accidents_uncovered_tract;
        } else {
            severe[*owner[i]] += label;
        }
    }

    geo::GeoPoint ref{0, 0};
    for (const auto& t : tracts) {
        ref.lon += t.centroid.lon / static_cast<double>(tracts.size());
        ref.lat += t.centroid.lat / static_cast<double>(tracts.size());
    }
    table.projection_ref = ref;
    for (std::size_t t = 0; t < tracts.size(); ++t) {
        if (!usable[t]) continue;
        table.rows.push_back({tracts[t].tract_id, *usable[t], geo::project_local(tracts[t].centroid, ref), severe[t]});
        table.report.positive_rows += severe[t] > 0 ? 1 : 0;
    }
    table.report.rows = table.rows.size();
    return table;
}

PointTable build_point(const std::vector<AccidentRecord>& accidents, const std::vector<CensusTract>& tracts,
                       const std::vector<network::TractNetworkSummary>& summaries) {
    PointTable table;
    auto usable = usable_tracts(tracts, summaries, table.report);
    auto owner = assign_accidents(accidents, tracts);
    table.report.accidents_total = accidents.size();
    for (std::size_t i = 0; i < accidents.size(); ++i) {
        const auto& rec = accidents[i];
        int label = severity_label(rec);
        table.report.severe_total += static_cast<std::size_t>(label);
        if (!owner[i]) {
            ++table.report.accidents_outside;
            continue;
        }
        if (!usable[*owner[i]]) {
            ++table.report.accidents_uncovered_tract;
            continue;
        }
        PointRow row;
        row.id = rec.id;
        row.tract_id = tracts[*owner[i]].tract_id;
        auto tf = temporal_features(rec.timestamp);
        row.hour = tf.hour;
        row.day_of_week = tf.day_of_week;
        for (const auto& v : rec.vehicle_types) {
            row.vehicles[static_cast<std::size_t>(vehicle_category(v))] = 1;
        }
        if (rec.vehicle_types.empty()) row.vehicles[static_cast<std::size_t>(VehicleCategory::Other)] = 1;
        row.s = *usable[*owner[i]];
        row.label = label;
        table.report.positive_rows += static_cast<std::size_t>(label);
        table.rows.push_back(std::move(row));
    }
    table.report.rows = table.rows.size();
    return table;
}

Matrix tract_feature_matrix(const std::vector<AggregatedRow>& rows) {
    Matrix X(rows.size(), 4);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < 4; ++j) X(i, j) = rows[i].s[j];
    }
    return X;
}

std::vector<geo::PlanePoint> centroids(const std::vector<AggregatedRow>& rows) {
    std::vector<geo::PlanePoint> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(r.centroid);
    return out;
}

std::vector<double> targets(const std::vector<AggregatedRow>& rows) {
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(static_cast<double>(r.y));
    return out;
}

Matrix point_feature_matrix(const std::vector<PointRow>& rows) {
    Matrix X(rows.size(), point_feature_names().size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        auto f = rows[i].features();
        std::copy(f.begin(), f.end(), X.row(i).begin());
    }
    return X;
}

std::vector<double> labels(const std::vector<PointRow>& rows) {
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(r.label);
    return out;
}

// ---------------------------------------------------------------------------
// CSV

namespace {

template <typename T>
T parse_cell(const std::string& s, const char* what, std::size_t line) {
    T v{};
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc() || p != s.data() + s.size()) {
        throw DataError(std::string(what) + " line " + std::to_string(line) + ": bad value '" + s + "'");
    }
    return v;
}

}  // namespace

void write_aggregated(std::ostream& out, const std::vector<AggregatedRow>& rows) {
    std::vector<std::string> header = {"tract_id"};
    for (auto f : kTractFeatureNames) header.emplace_back(f);
    header.insert(header.end(), {"centroid_x", "centroid_y", "y"});
    csv::write_row(out, header);
    for (const auto& r : rows) {
        std::vector<std::string> f = {r.tract_id};
        for (double v : r.s) f.push_back(format_double(v));
        f.push_back(format_double(r.centroid.x));
        f.push_back(format_double(r.centroid.y));
        f.push_back(std::to_string(r.y));
        csv::write_row(out, f);
    }
}

std::vector<AggregatedRow> read_aggregated(std::istream& in) {
    csv::Reader reader(in);
    std::vector<std::string> f;
    if (!reader.next(f)) throw DataError("aggregated CSV: missing header");
    csv::Header h(f);
    const auto c_id = h.require("tract_id");
    std::array<std::size_t, 4> c_s{};
    for (std::size_t j = 0; j < 4; ++j) c_s[j] = h.require(kTractFeatureNames[j]);
    const auto c_x = h.require("centroid_x");
    const auto c_y = h.require("centroid_y");
    const auto c_t = h.require("y");
    std::vector<AggregatedRow> rows;
    while (reader.next(f)) {
        const auto line = reader.record_line();
        if (f.size() != h.names().size()) throw DataError("aggregated CSV line " + std::to_string(line) + ": column count");
        AggregatedRow r;
        r.tract_id = f[c_id];
        for (std::size_t j = 0; j < 4; ++j) r.s[j] = parse_cell<double>(f[c_s[j]], "aggregated CSV", line);
        r.centroid = {parse_cell<double>(f[c_x], "aggregated CSV", line), parse_cell<double>(f[c_y], "aggregated CSV", line)};
        r.y = parse_cell<std::int64_t>(f[c_t], "aggregated CSV", line);
        rows.push_back(std::move(r));
    }
    return rows;
}

void write_points(std::ostream& out, const std::vector<PointRow>& rows) {
    std::vector<std::string> header = {"id", "tract_id"};
    for (const auto& n : point_feature_names()) header.push_back(n);
    header.emplace_back("label");
    csv::write_row(out, header);
    for (const auto& r : rows) {
        std::vector<std::string> f = {r.id, r.tract_id, std::to_string(r.hour), std::to_string(r.day_of_week)};
        for (int v : r.vehicles) f.push_back(std::to_string(v));
        for (double v : r.s) f.push_back(format_double(v));
        f.push_back(std::to_string(r.label));
        csv::write_row(out, f);
    }
}

std::vector<PointRow> read_points(std::istream& in) {
    csv::Reader reader(in);
    std::vector<std::string> f;
    if (!reader.next(f)) throw DataError("point CSV: missing header");
    csv::Header h(f);
    const auto c_id = h.require("id");
    const auto c_tract = h.require("tract_id");
    std::vector<std::size_t> c_feat;
    for (const auto& n : point_feature_names()) c_feat.push_back(h.require(n));
    const auto c_label = h.require("label");
    std::vector<PointRow> rows;
    while (reader.next(f)) {
        const auto line = reader.record_line();
        if (f.size() != h.names().size()) throw DataError("point CSV line " + std::to_string(line) + ": column count");
        PointRow r;
        r.id = f[c_id];
        r.tract_id = f[c_tract];
        r.hour = parse_cell<int>(f[c_feat[0]], "point CSV", line);
        r.day_of_week = parse_cell<int>(f[c_feat[1]], "point CSV", line);
        for (std::size_t c = 0; c < kVehicleCategoryCount; ++c) {
            r.vehicles[c] = parse_cell<int>(f[c_feat[2 + c]], "point CSV", line);
        }
        for (std::size_t j = 0; j < 4; ++j) {
            r.s[j] = parse_cell<double>(f[c_feat[2 + kVehicleCategoryCount + j]], "point CSV", line);
        }
        r.label = parse_cell<int>(f[c_label], "point CSV", line);
        rows.push_back(std::move(r));
    }
    return rows;
}

}  // namespace crashlens::features
