#include "crashlens/report.hpp"

#include <fstream>

#include "crashlens/common.hpp"

namespace crashlens::report {

namespace {

Json optional_number(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

Json fold_stats_json(std::span<const std::optional<double>> values) {
    std::vector<double> present;
    for (const auto& v : values) {
        if (v) present.push_back(*v);
    }
    auto s = eval::fold_stats(present);
    return {{"mean", s.mean}, {"std", s.stddev}, {"n_folds", present.size()}};
}

}  // namespace

Json ingest_json(const IngestReport& r) {
    Json reasons = Json::object();
    for (const auto& [k, v] : r.rejection_reasons) reasons[k] = v;
    return {{"rows_read", r.rows_read},
            {"rows_ok", r.rows_ok},
            {"rows_rejected", r.rows_rejected},
            {"rejection_reasons", reasons}};
}

Json coverage_json(const network::Coverage& c) {
    return {{"nodes_total", c.nodes_total},
            {"nodes_outside", c.nodes_outside},
            {"edges_total", c.edges_total},
            {"edges_straddling", c.edges_straddling}};
}

Json build_json(const features::BuildReport& r) {
    Json j = {{"accidents_total", r.accidents_total},
              {"accidents_outside", r.accidents_outside},
              {"accidents_uncovered_tract", r.accidents_uncovered_tract},
              {"tracts_total", r.tracts_total},
              {"tracts_dropped_empty", r.tracts_dropped_empty},
              {"tracts_dropped_missing", r.tracts_dropped_missing},
              {"severe_total", r.severe_total},
              {"rows", r.rows},
              {"positive_rows", r.positive_rows}};
    j["severe_share_all_accidents"] =
        r.accidents_total ? Json(static_cast<double>(r.severe_total) / static_cast<double>(r.accidents_total)) : Json(nullptr);
    return j;
}

Json importance_json(const learn::ImportanceReport& r, const std::vector<std::string>& names) {
    Json arr = Json::array();
    for (auto f : learn::importance_ranking(r)) {
        arr.push_back({{"feature", f < names.size() ? names[f] : std::to_string(f)},
                       {"share", r.share[f]},
                       {"total_gain", r.total_gain[f]}});
    }
    return {{"has_splits", r.has_splits}, {"ranking", arr}};
}

Json aggregated_json(const pipeline::AggregatedFit& fit, const std::vector<std::string>& feature_names) {
    Json folds = Json::array();
    std::vector<std::optional<double>> s1, comb;
    for (std::size_t f = 0; f < fit.folds.size(); ++f) {
        const auto& fd = fit.folds[f];
        Json j = {{"fold", f},
                  {"n_train", fd.n_train},
                  {"n_test", fd.n_test},
                  {"r2_stage1", optional_number(fd.r2_stage1)},
                  {"r2_combined", optional_number(fd.r2_combined)}};
        if (fd.kernel) {
            j["gp_kernel"] = {{"variance", fd.kernel->variance},
                              {"lengthscale_m", fd.kernel->lengthscale},
                              {"noise", fd.kernel->noise}};
        }
        folds.push_back(std::move(j));
        s1.push_back(fd.r2_stage1);
        comb.push_back(fd.r2_combined);
    }
    Json j = {{"pooled_out_of_fold",
               {{"r2_stage1", fit.r2_stage1}, {"r2_combined", fit.r2_combined}, {"r2_incremental", fit.r2_incremental}}},
              {"in_sample_final_models",
               {{"r2_stage1", fit.in_sample_r2_stage1},
                {"r2_combined", fit.in_sample_r2_combined},
                {"r2_incremental", fit.in_sample_r2_incremental}}},
              {"fold_mean_std", {{"r2_stage1", fold_stats_json(s1)}, {"r2_combined", fold_stats_json(comb)}}},
              {"folds", folds},
              {"n_folds", fit.plan.k},
              {"stage1", {{"n_trees", fit.stage1.trees.size()}, {"final_train_loss", fit.stage1.train_loss.back()}}}};
    // Flat copies of the headline numbers.
    j["r2_stage1"] = fit.r2_stage1;
    j["r2_incremental"] = fit.r2_incremental;
    if (fit.stage2) {
        const auto& k = fit.stage2->kernel;
        Json grid = Json::array();
        for (const auto& g : fit.gp_grid) {
            grid.push_back({{"lengthscale_m", g.lengthscale},
                            {"noise_ratio", g.noise_ratio},
                            {"variance", g.variance},
                            {"log_marginal_likelihood", g.log_marginal_likelihood}});
        }
        j["stage2"] = {{"variance", k.variance}, {"lengthscale_m", k.lengthscale}, {"noise", k.noise}, {"grid", grid}};
    } else {
        j["stage2"] = nullptr;
    }
    j["importance"] = importance_json(fit.importance, feature_names);
    return j;
}

Json point_json(const pipeline::PointFitReport& rep, const std::vector<std::string>& feature_names) {
    Json models = Json::array();
    for (const auto& m : rep.models) {
        Json folds = Json::array();
        for (const auto& a : m.fold_auc) folds.push_back(optional_number(a));
        models.push_back({{"name", pipeline::to_string(m.model)},
                          {"display_name", pipeline::display_name(m.model)},
                          {"smote", m.smote},
                          {"auc", m.auc},
                          {"fold_auc", folds},
                          {"fold_auc_mean", m.fold_stats.mean},
                          {"fold_auc_std", m.fold_stats.stddev},
                          {"n_synthetic", m.n_synthetic},
                          {"evaluated_rows", m.evaluated_rows},
                          {"roc_points", m.roc.curve.size()}});
    }
    Json j = {{"rows", rep.rows},
              {"positives", rep.positives},
              {"positive_share", rep.rows ? static_cast<double>(rep.positives) / static_cast<double>(rep.rows) : 0.0},
              {"n_folds", rep.plan.k},
              {"stratified", rep.plan.stratified},
              {"models", models}};
    if (rep.importance) {
        j["importance_model"] = pipeline::to_string(*rep.importance_model);
        j["importance"] = importance_json(*rep.importance, feature_names);
    } else {
        j["importance"] = nullptr;
    }
    return j;
}

Json moran_json(const spatial::MoranResult& r, double alpha) {
    std::map<std::string, std::size_t> counts;
    for (auto c : {spatial::Cluster::HH, spatial::Cluster::LL, spatial::Cluster::HL, spatial::Cluster::LH,
                   spatial::Cluster::NotSignificant, spatial::Cluster::Isolated}) {
        counts[std::string(spatial::to_string(c))] = 0;
    }
    std::size_t significant = 0;
    for (std::size_t i = 0; i < r.cluster.size(); ++i) {
        ++counts[std::string(spatial::to_string(r.cluster[i]))];
        significant += r.I[i].has_value() && r.p_value[i] <= alpha;
    }
    Json c = Json::object();
    for (const auto& [k, v] : counts) c[k] = v;
    return {{"units", r.cluster.size()}, {"significant", significant}, {"alpha", alpha}, {"clusters", c}};
}

void write_json(const std::filesystem::path& path, const Json& j) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    out << j.dump(2) << '\n';
    if (!out) throw DataError("failed writing " + path.string());
}

}  // namespace crashlens::report
