#include "crashlens/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <sstream>

#include "crashlens/common.hpp"

namespace crashlens::config {

namespace {

using VK = ValueKind;

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

bool parse_int(std::string_view s, std::int64_t& out) {
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && p == s.data() + s.size() && !s.empty();
}

bool parse_real(std::string_view s, double& out) {
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc() && p == s.data() + s.size() && !s.empty() && std::isfinite(out);
}

std::vector<std::string_view> split_list(std::string_view s) {
    std::vector<std::string_view> out;
    if (trim(s).empty()) return out;
    std::size_t start = 0;
    while (true) {
        auto end = s.find(',', start);
        out.push_back(trim(s.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start)));
        if (end == std::string_view::npos) break;
        start = end + 1;
    }
    return out;
}

std::string_view kind_name(VK k) {
    switch (k) {
        case VK::String: return "string";
        case VK::Integer: return "integer";
        case VK::Real: return "number";
        case VK::Boolean: return "true/false";
        case VK::RealList: return "comma-separated numbers";
    }
    return "?";
}

// Canonical text for a value of the given kind, or an empty optional.
std::optional<std::string> canonical(VK kind, std::string_view raw) {
    raw = trim(raw);
    switch (kind) {
        case VK::String: return std::string(raw);
        case VK::Integer: {
            std::int64_t v;
            if (!parse_int(raw, v)) return std::nullopt;
            return std::to_string(v);
        }
        case VK::Real: {
            double v;
            if (!parse_real(raw, v)) return std::nullopt;
            return format_double(v);
        }
        case VK::Boolean:
            if (raw == "true" || raw == "1") return std::string("true");
            if (raw == "false" || raw == "0") return std::string("false");
            return std::nullopt;
        case VK::RealList: {
            std::string out;
            auto body = trim(raw);
            if (!body.empty() && body.front() == '[') {
                if (body.back() != ']') return std::nullopt;
                body = body.substr(1, body.size() - 2);
            }
            for (auto item : split_list(body)) {
                double v;
                if (!parse_real(item, v)) return std::nullopt;
                if (!out.empty()) out += ',';
                out += format_double(v);
            }
            if (out.empty()) return std::nullopt;
            return out;
        }
    }
    return std::nullopt;
}

}  // namespace

const std::vector<KeySpec>& registry() {
    static const std::vector<KeySpec> keys = {
        {"seed", VK::Integer, "0", "master seed; every random stream derives from it"},
        {"threads", VK::Integer, "1", "worker threads (0 = all cores); results do not depend on it"},
        {"output_dir", VK::String, "out", "directory receiving all output files"},
        {"input.accidents", VK::String, "", "accident CSV"},
        {"input.tracts", VK::String, "", "census tract GeoJSON"},
        {"input.nodes", VK::String, "", "street network nodes CSV"},
        {"input.edges", VK::String, "", "street network edges CSV"},
        {"input.aggregated", VK::String, "", "prebuilt aggregated table CSV (skips raw inputs)"},
        {"input.points", VK::String, "", "prebuilt point table CSV (skips raw inputs)"},
        {"input.tract_id_property", VK::String, "tract_id", "GeoJSON property holding the tract id"},
        {"ingest.strict", VK::Boolean, "false", "abort on the first bad row instead of rejecting it"},
        {"network.directed_degree", VK::Boolean, "false", "count every incident edge row in node degree"},
        {"network.length_weighted", VK::Boolean, "false", "length-weight street width and bike-lane means"},
        {"moran.n_perm", VK::Integer, "999", "conditional permutations per tract (>= 99)"},
        {"moran.alpha", VK::Real, "0.05", "significance level for cluster labels"},
        {"moran.variant", VK::String, "neighbor", "statistic normalization: neighbor or conventional"},
        {"moran.snap_tol_m", VK::Real, "0.5", "boundary snapping tolerance for queen contiguity (m)"},
        {"gbm.n_trees", VK::Integer, "300", "boosting stages"},
        {"gbm.learning_rate", VK::Real, "0.1", "shrinkage per stage, in (0, 1]"},
        {"gbm.max_depth", VK::Integer, "3", "tree depth"},
        {"gbm.min_samples_leaf", VK::Integer, "20", "minimum rows per leaf"},
        {"rf.n_trees", VK::Integer, "200", "forest size"},
        {"rf.max_depth", VK::Integer, "12", "tree depth"},
        {"rf.min_samples_leaf", VK::Integer, "5", "minimum rows per leaf"},
        {"rf.features_per_split", VK::Integer, "0", "candidate features per split (0 = ceil(sqrt(d)))"},
        {"rf.bootstrap", VK::Boolean, "true", "bootstrap rows per tree"},
        {"logreg.l2", VK::Real, "1", "L2 penalty on standardized weights"},
        {"logreg.max_iter", VK::Integer, "100", "Newton iteration cap"},
        {"logreg.tol", VK::Real, "1e-08", "gradient-norm tolerance"},
        {"smote.k_neighbors", VK::Integer, "5", "minority neighbors per base row"},
        {"smote.target_ratio", VK::Real, "1", "minority/majority ratio after oversampling, in (0, 1]"},
        {"smote.per_feature", VK::Boolean, "false", "draw the interpolation weight per feature"},
        {"smote.leaky", VK::Boolean, "false", "oversample before splitting folds (optimistic protocol)"},
        {"gp.enabled", VK::Boolean, "true", "fit the spatial residual stage"},
        {"gp.lengthscale_multipliers", VK::RealList, "0.25,0.5,1,2,4", "lengthscale grid, x median pairwise distance"},
        {"gp.noise_ratios", VK::RealList, "0.01,0.1,0.5,1", "noise/signal variance grid"},
        {"cv.agg_folds", VK::Integer, "20", "folds for the aggregated model"},
        {"cv.point_folds", VK::Integer, "10", "folds for the point classifiers"},
        {"cv.stratified", VK::Boolean, "true", "stratify point folds by label"},
        {"point.models", VK::String, "gbm_smote,gbm,rf,logreg", "point classifiers to compare"},
        {"synth.grid_rows", VK::Integer, "32", "tract grid rows"},
        {"synth.grid_cols", VK::Integer, "32", "tract grid columns"},
        {"synth.tract_size_m", VK::Real, "500", "tract side length (m)"},
        {"synth.spatial_amplitude", VK::Real, "1", "sd of the planted spatial field"},
        {"synth.spatial_lengthscale_m", VK::Real, "3000", "lengthscale of the planted field (m)"},
        {"synth.noise_sd", VK::Real, "1", "sd of independent target noise"},
        {"synth.n_points", VK::Integer, "50000", "rows of the point table"},
        {"synth.positive_rate", VK::Real, "0.05", "severe share of the point table"},
        {"synth.n_accidents", VK::Integer, "20000", "raw accident records"},
        {"synth.severe_rate", VK::Real, "0.23", "severe share of raw accidents"},
    };
    return keys;
}

RunConfig::RunConfig() {
    for (const auto& k : registry()) values_[k.key] = k.default_value;
}

const KeySpec& RunConfig::spec(const std::string& key) const {
    for (const auto& k : registry()) {
        if (k.key == key) return k;
    }
    throw UsageError("unknown config key '" + key + "'");
}

void RunConfig::set(const std::string& key, const std::string& value) {
    const auto& s = spec(key);
    auto c = canonical(s.kind, value);
    if (!c) {
        throw UsageError("config key '" + key + "': expected " + std::string(kind_name(s.kind)) + ", got '" + value + "'");
    }
    values_[key] = *c;
    explicit_[key] = true;
}

bool RunConfig::is_set(const std::string& key) const {
    spec(key);
    auto it = explicit_.find(key);
    return it != explicit_.end() && it->second;
}

std::string RunConfig::get_string(const std::string& key) const {
    spec(key);
    return values_.at(key);
}

std::int64_t RunConfig::get_int(const std::string& key) const {
    if (spec(key).kind != VK::Integer) throw UsageError("config key '" + key + "' is not an integer");
    std::int64_t v = 0;
    parse_int(values_.at(key), v);
    return v;
}

std::size_t RunConfig::get_size(const std::string& key) const {
    auto v = get_int(key);
    if (v < 0) throw UsageError("config key '" + key + "' must be >= 0, got " + std::to_string(v));
    return static_cast<std::size_t>(v);
}

std::uint64_t RunConfig::get_seed() const { return static_cast<std::uint64_t>(get_int("seed")); }

double RunConfig::get_real(const std::string& key) const {
    if (spec(key).kind != VK::Real) throw UsageError("config key '" + key + "' is not a number");
    double v = 0;
    parse_real(values_.at(key), v);
    return v;
}

bool RunConfig::get_bool(const std::string& key) const {
    if (spec(key).kind != VK::Boolean) throw UsageError("config key '" + key + "' is not a boolean");
    return values_.at(key) == "true";
}

std::vector<double> RunConfig::get_real_list(const std::string& key) const {
    if (spec(key).kind != VK::RealList) throw UsageError("config key '" + key + "' is not a list");
    std::vector<double> out;
    for (auto item : split_list(values_.at(key))) {
        double v = 0;
        parse_real(item, v);
        out.push_back(v);
    }
    return out;
}

nlohmann::ordered_json RunConfig::echo() const {
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    for (const auto& k : registry()) {
        if (k.key == "threads") continue;
        switch (k.kind) {
            case VK::String: j[k.key] = values_.at(k.key); break;
            case VK::Integer: j[k.key] = get_int(k.key); break;
            case VK::Real: j[k.key] = get_real(k.key); break;
            case VK::Boolean: j[k.key] = get_bool(k.key); break;
            case VK::RealList: j[k.key] = get_real_list(k.key); break;
        }
    }
    return j;
}

void apply_toml(RunConfig& cfg, std::string_view text, const std::string& source_name) {
    std::string section;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        auto where = [&] { return source_name + ":" + std::to_string(line_no) + ": "; };

        // Strip comments outside quotes.
        bool quoted = false;
        for (std::size_t i = 0; i < line.size(); ++i) {
            if (line[i] == '"') quoted = !quoted;
            if (line[i] == '#' && !quoted) {
                line = line.substr(0, i);
                break;
            }
        }
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw UsageError(where() + "malformed section header");
            section = std::string(trim(line.substr(1, line.size() - 2)));
            if (section.empty()) throw UsageError(where() + "empty section name");
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string_view::npos) throw UsageError(where() + "expected key = value");
        std::string key(trim(line.substr(0, eq)));
        std::string_view value = trim(line.substr(eq + 1));
        if (key.empty()) throw UsageError(where() + "missing key");
        if (!section.empty()) key = section + "." + key;

        std::string parsed;
        if (!value.empty() && value.front() == '"') {
            if (value.size() < 2 || value.back() != '"') throw UsageError(where() + "unterminated string");
            auto inner = value.substr(1, value.size() - 2);
            for (std::size_t i = 0; i < inner.size(); ++i) {
                if (inner[i] == '\\' && i + 1 < inner.size()) {
                    char c = inner[++i];
                    parsed += c == 'n' ? '\n' : c == 't' ? '\t' : c;
                } else {
                    parsed += inner[i];
                }
            }
        } else if (!value.empty() && value.front() == '[') {
            if (value.back() != ']') throw UsageError(where() + "unterminated array");
            parsed = std::string(value.substr(1, value.size() - 2));
        } else {
            parsed = std::string(value);
        }
        try {
            cfg.set(key, parsed);
        } catch (const UsageError& e) {
            throw UsageError(where() + e.what());
        }
    }
}

void apply_file(RunConfig& cfg, const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UsageError("cannot read config file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    apply_toml(cfg, ss.str(), path.string());
}

void apply_override(RunConfig& cfg, std::string_view assignment) {
    auto eq = assignment.find('=');
    if (eq == std::string_view::npos) throw UsageError("--set expects key=value, got '" + std::string(assignment) + "'");
    cfg.set(std::string(trim(assignment.substr(0, eq))), std::string(trim(assignment.substr(eq + 1))));
}

void apply_environment(RunConfig& cfg) {
    if (const char* v = std::getenv("CRASHLENS_THREADS"); v && *v) {
        try {
            cfg.set("threads", v);
        } catch (const UsageError& e) {
            throw UsageError(std::string("CRASHLENS_THREADS: ") + e.what());
        }
    }
}

std::string keys_help() {
    std::string out = "Config keys (file `key = value` / `[section]`, or --set key=value):\n";
    for (const auto& k : registry()) {
        std::string line = "  " + k.key + " = " + (k.default_value.empty() ? "\"\"" : k.default_value);
        if (line.size() < 44) line.resize(44, ' ');
        else line += "  ";
        out += line + k.help + "\n";
    }
    out += "CRASHLENS_THREADS in the environment overrides the config file value of `threads`.\n";
    return out;
}

}  // namespace crashlens::config
