#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace crashlens::config {

enum class ValueKind { String, Integer, Real, Boolean, RealList };

struct KeySpec {
    std::string key;
    ValueKind kind;
    std::string default_value;  // canonical text form
    std::string help;
};

/// Every accepted key, in documentation order.
const std::vector<KeySpec>& registry();

/// Flat namespaced settings (`gbm.n_trees`, `moran.n_perm`, ...). Values are
/// held in canonical text form and validated against the registry on every
/// assignment; unknown keys and malformed values raise UsageError.
class RunConfig {
public:
    RunConfig();  // all defaults

    void set(const std::string& key, const std::string& value);
    bool is_set(const std::string& key) const;  // differs from the default source

    std::string get_string(const std::string& key) const;
    std::int64_t get_int(const std::string& key) const;
    std::size_t get_size(const std::string& key) const;  // non-negative integer
    std::uint64_t get_seed() const;
    double get_real(const std::string& key) const;
    bool get_bool(const std::string& key) const;
    std::vector<double> get_real_list(const std::string& key) const;

    /// Typed echo of every key except `threads`, which must not influence
    /// report bytes.
    nlohmann::ordered_json echo() const;

    const std::map<std::string, std::string>& values() const { return values_; }

private:
    const KeySpec& spec(const std::string& key) const;
    std::map<std::string, std::string> values_;
    std::map<std::string, bool> explicit_;
};

/// TOML subset: `key = value` lines, `[section]` headers prefixing keys,
/// `#` comments, quoted or bare strings, true/false, numbers and flat arrays
/// of numbers. Errors name the line.
void apply_toml(RunConfig& cfg, std::string_view text, const std::string& source_name);
void apply_file(RunConfig& cfg, const std::filesystem::path& path);

/// `key=value` override as given to --set.
void apply_override(RunConfig& cfg, std::string_view assignment);

/// Applies CRASHLENS_THREADS when set in the environment.
void apply_environment(RunConfig& cfg);

/// Help text listing every key with its default.
std::string keys_help();

}  // namespace crashlens::config
