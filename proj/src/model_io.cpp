#include "crashlens/model_io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "crashlens/common.hpp"

namespace crashlens::model_io {

using nlohmann::json;

namespace {

constexpr const char* kFormatName = "crashlens-model";

json tree_json(const learn::DecisionTree& t) {
    json feature = json::array(), threshold = json::array(), left = json::array(), right = json::array(),
         value = json::array(), gain = json::array(), weight = json::array();
    for (const auto& n : t.nodes()) {
        feature.push_back(n.feature);
        threshold.push_back(n.threshold);
        left.push_back(n.left);
        right.push_back(n.right);
        value.push_back(n.value);
        gain.push_back(n.gain);
        weight.push_back(n.weight);
    }
    return {{"feature", feature}, {"threshold", threshold}, {"left", left},    {"right", right},
            {"value", value},     {"gain", gain},           {"weight", weight}};
}

template <typename T>
std::vector<T> vec(const json& j, const char* key) {
    if (!j.contains(key) || !j.at(key).is_array()) throw DataError(std::string("model file: missing array '") + key + "'");
    return j.at(key).get<std::vector<T>>();
}

learn::DecisionTree tree_from(const json& j, std::size_t n_features) {
    auto feature = vec<int>(j, "feature");
    auto threshold = vec<double>(j, "threshold");
    auto left = vec<int>(j, "left");
    auto right = vec<int>(j, "right");
    auto value = vec<double>(j, "value");
    auto gain = vec<double>(j, "gain");
    auto weight = vec<double>(j, "weight");
    const std::size_t m = feature.size();
    if (m == 0 || threshold.size() != m || left.size() != m || right.size() != m || value.size() != m ||
        gain.size() != m || weight.size() != m) {
        throw DataError("model file: tree arrays are empty or of unequal length");
    }
    std::vector<learn::TreeNode> nodes(m);
    for (std::size_t i = 0; i < m; ++i) {
        auto& n = nodes[i];
        n = {feature[i], threshold[i], left[i], right[i], value[i], gain[i], weight[i]};
        if (n.feature >= 0) {
            auto in_range = [&](int c) { return c > static_cast<int>(i) && c < static_cast<int>(m); };
            if (static_cast<std::size_t>(n.feature) >= n_features || !in_range(n.left) || !in_range(n.right)) {
                throw DataError("model file: malformed tree node " + std::to_string(i));
            }
        }
    }
    return learn::DecisionTree(std::move(nodes), n_features);
}

json trees_json(const std::vector<learn::DecisionTree>& trees) {
    json arr = json::array();
    for (const auto& t : trees) arr.push_back(tree_json(t));
    return arr;
}

std::vector<learn::DecisionTree> trees_from(const json& j, std::size_t n_features) {
    if (!j.is_array()) throw DataError("model file: 'trees' must be an array");
    std::vector<learn::DecisionTree> out;
    for (const auto& t : j) out.push_back(tree_from(t, n_features));
    return out;
}

json gbm_json(const learn::GbmModel& m) {
    return {{"loss", learn::to_string(m.loss)}, {"learning_rate", m.learning_rate}, {"init_value", m.init_value},
            {"n_features", m.n_features},      {"train_loss", m.train_loss},       {"trees", trees_json(m.trees)}};
}

learn::GbmModel gbm_from(const json& j) {
    learn::GbmModel m;
    m.loss = learn::parse_loss(j.at("loss").get<std::string>());
    m.learning_rate = j.at("learning_rate").get<double>();
    m.init_value = j.at("init_value").get<double>();
    m.n_features = j.at("n_features").get<std::size_t>();
    m.train_loss = vec<double>(j, "train_loss");
    m.trees = trees_from(j.at("trees"), m.n_features);
    return m;
}

json forest_json(const learn::ForestModel& m) {
    return {{"n_features", m.n_features},
            {"features_per_split", m.features_per_split},
            {"tree_seeds", m.tree_seeds},
            {"trees", trees_json(m.trees)}};
}

learn::ForestModel forest_from(const json& j) {
    learn::ForestModel m;
    m.n_features = j.at("n_features").get<std::size_t>();
    m.features_per_split = j.at("features_per_split").get<std::size_t>();
    m.tree_seeds = vec<std::uint64_t>(j, "tree_seeds");
    m.trees = trees_from(j.at("trees"), m.n_features);
    if (m.trees.empty() || m.tree_seeds.size() != m.trees.size()) throw DataError("model file: forest trees and seeds differ");
    return m;
}

json logistic_json(const learn::LogisticModel& m) {
    return {{"mean", m.mean},           {"scale", m.scale},         {"weights", m.weights},
            {"intercept", m.intercept}, {"converged", m.converged}, {"iterations", m.iterations},
            {"gradient_norm", m.gradient_norm}};
}

learn::LogisticModel logistic_from(const json& j) {
    learn::LogisticModel m;
    m.mean = vec<double>(j, "mean");
    m.scale = vec<double>(j, "scale");
    m.weights = vec<double>(j, "weights");
    if (m.scale.size() != m.mean.size() || m.weights.size() != m.mean.size()) {
        throw DataError("model file: logistic arrays differ in length");
    }
    m.intercept = j.at("intercept").get<double>();
    m.converged = j.at("converged").get<bool>();
    m.iterations = j.at("iterations").get<std::size_t>();
    m.gradient_norm = j.at("gradient_norm").get<double>();
    return m;
}

json gp_json(const learn::GpModel& m) {
    json x = json::array(), y = json::array();
    for (const auto& p : m.train_inputs) {
        x.push_back(p.x);
        y.push_back(p.y);
    }
    return {{"variance", m.kernel.variance},
            {"lengthscale", m.kernel.lengthscale},
            {"noise", m.kernel.noise},
            {"input_mean", {m.input_mean.x, m.input_mean.y}},
            {"y_mean", m.y_mean},
            {"jitter", m.jitter},
            {"train_x", x},
            {"train_y", y},
            {"alpha", m.alpha}};
}

learn::GpModel gp_from(const json& j) {
    learn::GpModel m;
    m.kernel = {j.at("variance").get<double>(), j.at("lengthscale").get<double>(), j.at("noise").get<double>()};
    auto mean = vec<double>(j, "input_mean");
    if (mean.size() != 2) throw DataError("model file: GP input_mean must have two entries");
    m.input_mean = {mean[0], mean[1]};
    m.y_mean = j.at("y_mean").get<double>();
    auto x = vec<double>(j, "train_x");
    auto y = vec<double>(j, "train_y");
    m.alpha = vec<double>(j, "alpha");
    if (x.empty() || y.size() != x.size() || m.alpha.size() != x.size()) {
        throw DataError("model file: GP arrays are empty or differ in length");
    }
    for (std::size_t i = 0; i < x.size(); ++i) m.train_inputs.push_back({x[i], y[i]});
    // The factor is only needed for variances; rebuilding it from the stored
    // kernel keeps files small and leaves alpha (the mean) bit-exact.
    learn::gp_refactor(m);
    return m;
}

ModelKind parse_kind(const std::string& s) {
    for (auto k : {ModelKind::TwoStage, ModelKind::Gbm, ModelKind::Forest, ModelKind::Logistic}) {
        if (s == to_string(k)) return k;
    }
    throw DataError("model file: unknown kind '" + s + "'");
}

}  // namespace

std::string_view to_string(ModelKind k) {
    switch (k) {
        case ModelKind::TwoStage: return "two_stage";
        case ModelKind::Gbm: return "gbm";
        case ModelKind::Forest: return "forest";
        case ModelKind::Logistic: return "logistic";
    }
    return "?";
}

std::vector<std::string> SavedModel::required_columns() const {
    auto cols = feature_names;
    if (kind == ModelKind::TwoStage && gp) {
        cols.emplace_back("centroid_x");
        cols.emplace_back("centroid_y");
    }
    return cols;
}

std::vector<double> SavedModel::predict(const Matrix& X, std::span<const geo::PlanePoint> centroids) const {
    if (X.cols() != feature_names.size()) {
        throw DataError("model '" + name + "' expects " + std::to_string(feature_names.size()) + " features, got " +
                        std::to_string(X.cols()));
    }
    switch (kind) {
        case ModelKind::TwoStage: {
            auto out = learn::gbm_predict(*gbm, X);
            if (gp) {
                if (centroids.size() != X.rows()) throw DataError("two-stage model needs one centroid per row");
                auto g = learn::gp_predict(*gp, centroids).mean;
                for (std::size_t i = 0; i < out.size(); ++i) out[i] += g[i];
            }
            return out;
        }
        case ModelKind::Gbm: return learn::gbm_predict(*gbm, X);
        case ModelKind::Forest: return learn::rf_predict(*forest, X);
        case ModelKind::Logistic: return learn::logistic_predict(*logistic, X);
    }
    return {};
}

std::string to_json_text(const SavedModel& model) {
    json j = {{"format", kFormatName},
              {"version", kFormatVersion},
              {"kind", to_string(model.kind)},
              {"name", model.name},
              {"feature_names", model.feature_names}};
    if (model.gbm) j["gbm"] = gbm_json(*model.gbm);
    if (model.gp) j["gp"] = gp_json(*model.gp);
    if (model.forest) j["forest"] = forest_json(*model.forest);
    if (model.logistic) j["logistic"] = logistic_json(*model.logistic);
    return j.dump(1) + "\n";
}

SavedModel from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw DataError("model file: JSON parse error at byte " + std::to_string(e.byte) + ": " + e.what());
    }
    if (!j.is_object() || j.value("format", "") != kFormatName) throw DataError("model file: not a crashlens model");
    if (!j.contains("version") || !j["version"].is_number_integer()) {
        throw DataError("model file: missing or non-integer version (this build reads version " +
                        std::to_string(kFormatVersion) + ")");
    }
    const auto version = j["version"].get<long long>();
    if (version != kFormatVersion) {
        throw DataError("model file version " + std::to_string(version) + " is not supported (this build reads version " +
                        std::to_string(kFormatVersion) + ")");
    }
    try {
        SavedModel m;
        m.kind = parse_kind(j.at("kind").get<std::string>());
        m.name = j.value("name", "");
        m.feature_names = vec<std::string>(j, "feature_names");
        if (j.contains("gbm")) m.gbm = gbm_from(j["gbm"]);
        if (j.contains("gp")) m.gp = gp_from(j["gp"]);
        if (j.contains("forest")) m.forest = forest_from(j["forest"]);
        if (j.contains("logistic")) m.logistic = logistic_from(j["logistic"]);
        const std::size_t d = m.feature_names.size();
        bool ok = false;
        switch (m.kind) {
            case ModelKind::TwoStage:
            case ModelKind::Gbm: ok = m.gbm && m.gbm->n_features == d; break;
            case ModelKind::Forest: ok = m.forest && m.forest->n_features == d; break;
            case ModelKind::Logistic: ok = m.logistic && m.logistic->weights.size() == d; break;
        }
        if (!ok) throw DataError("model file: '" + std::string(to_string(m.kind)) + "' model body missing or inconsistent with feature_names");
        return m;
    } catch (const json::exception& e) {
        throw DataError(std::string("model file: schema error: ") + e.what());
    } catch (const UsageError& e) {
        throw DataError(std::string("model file: ") + e.what());
    }
}

void save(const SavedModel& model, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    out << to_json_text(model);
    if (!out) throw DataError("failed writing " + path.string());
}

SavedModel load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read model file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json_text(ss.str());
}

}  // namespace crashlens::model_io
