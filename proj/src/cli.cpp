#include "crashlens/cli.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "crashlens/config.hpp"
#include "crashlens/csv.hpp"
#include "crashlens/features.hpp"
#include "crashlens/ingest.hpp"
#include "crashlens/model_io.hpp"
#include "crashlens/network.hpp"
#include "crashlens/pipeline.hpp"
#include "crashlens/report.hpp"
#include "crashlens/spatial.hpp"
#include "crashlens/synthetic.hpp"
#include "crashlens/tract_index.hpp"

namespace crashlens {

namespace fs = std::filesystem;
using report::Json;

namespace {

// ---- config plumbing ---------------------------------------------------------

struct CommonOptions {
    std::string config_file;
    std::vector<std::string> overrides;
    std::map<std::string, std::string> flags;  // key -> value from convenience flags
};

void add_common(CLI::App* sub, CommonOptions& o) {
    sub->add_option("--config", o.config_file, "TOML-style config file");
    sub->add_option("--set", o.overrides, "override a config key (key=value), repeatable");
    sub->add_option("--out", o.flags["output_dir"], "output directory (output_dir)");
    sub->add_option("--seed", o.flags["seed"], "master seed (seed)");
    sub->add_option("--threads", o.flags["threads"], "worker threads (threads)");
    sub->footer(config::keys_help());
}

void add_inputs(CLI::App* sub, CommonOptions& o, std::initializer_list<std::string> which) {
    for (const auto& name : which) {
        sub->add_option("--" + name, o.flags["input." + name], "input file (input." + name + ")");
    }
}

config::RunConfig resolve(const CommonOptions& o) {
    config::RunConfig cfg;
    if (!o.config_file.empty()) config::apply_file(cfg, o.config_file);
    config::apply_environment(cfg);
    for (const auto& [key, value] : o.flags) {
        if (!value.empty()) cfg.set(key, value);
    }
    for (const auto& s : o.overrides) config::apply_override(cfg, s);
    if (cfg.get_int("threads") < 0) throw UsageError("threads must be >= 0");
    return cfg;
}

unsigned threads_of(const config::RunConfig& cfg) { return resolve_threads(static_cast<unsigned>(cfg.get_int("threads"))); }

std::string require_input(const config::RunConfig& cfg, const std::string& key) {
    auto v = cfg.get_string(key);
    if (v.empty()) {
        throw UsageError("missing input: set " + key + " (or --" + key.substr(key.find('.') + 1) + ")");
    }
    return v;
}

std::ifstream open_input(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UsageError("cannot read " + path);
    return in;
}

fs::path output_dir(const config::RunConfig& cfg) {
    fs::path dir = cfg.get_string("output_dir");
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw UsageError("cannot create output directory " + dir.string() + ": " + ec.message());
    return dir;
}

std::ofstream open_output(const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    return out;
}

Json report_head(const std::string& command, const config::RunConfig& cfg) {
    return {{"command", command}, {"config", cfg.echo()}};
}

// ---- loading -----------------------------------------------------------------

AccidentIngest load_accidents(const config::RunConfig& cfg) {
    auto in = open_input(require_input(cfg, "input.accidents"));
    return parse_accidents(in, cfg.get_bool("ingest.strict"));
}

std::vector<CensusTract> load_tracts(const config::RunConfig& cfg) {
    auto in = open_input(require_input(cfg, "input.tracts"));
    return parse_tracts(in, cfg.get_string("input.tract_id_property"));
}

NetworkIngest load_network(const config::RunConfig& cfg) {
    auto nodes = open_input(require_input(cfg, "input.nodes"));
    auto edges = open_input(require_input(cfg, "input.edges"));
    auto net = parse_network(nodes, edges);
    if (cfg.get_bool("ingest.strict") && (net.nodes_report.rows_rejected || net.edges_report.rows_rejected)) {
        throw DataError("network: rejected rows in strict mode");
    }
    return net;
}

network::SummaryOptions summary_options(const config::RunConfig& cfg) {
    return {cfg.get_bool("network.directed_degree"), cfg.get_bool("network.length_weighted")};
}

struct Tables {
    features::AggregatedTable aggregated;
    features::PointTable points;
    Json dataset;
};

Tables build_tables(const config::RunConfig& cfg) {
    auto accidents = load_accidents(cfg);
    auto tracts = load_tracts(cfg);
    auto net = load_network(cfg);
    auto sums = network::summarize_tracts(net.network, tracts, summary_options(cfg), threads_of(cfg));
    Tables t;
    t.aggregated = features::build_aggregated(accidents.records, tracts, sums.summaries);
    t.points = features::build_point(accidents.records, tracts, sums.summaries);
    t.dataset = {{"accidents", report::ingest_json(accidents.report)},
                 {"tracts", tracts.size()},
                 {"nodes", report::ingest_json(net.nodes_report)},
                 {"edges", report::ingest_json(net.edges_report)},
                 {"coverage", report::coverage_json(sums.coverage)},
                 {"aggregated_table", report::build_json(t.aggregated.report)},
                 {"point_table", report::build_json(t.points.report)}};
    return t;
}

std::vector<std::string> tract_feature_names() {
    return {features::kTractFeatureNames.begin(), features::kTractFeatureNames.end()};
}

// ---- commands ----------------------------------------------------------------

void print_ingest(std::ostream& out, const std::string& what, const IngestReport& r) {
    out << what << ": rows_read=" << r.rows_read << " rows_ok=" << r.rows_ok << " rows_rejected=" << r.rows_rejected;
    for (const auto& [reason, count] : r.rejection_reasons) out << ' ' << reason << '=' << count;
    out << '\n';
}

int cmd_validate(const config::RunConfig& cfg, std::ostream& out) {
    bool any = false;
    bool rejected = false;
    if (!cfg.get_string("input.accidents").empty()) {
        auto a = load_accidents(cfg);
        print_ingest(out, "accidents", a.report);
        rejected |= a.report.rows_rejected > 0;
        any = true;
    }
    if (!cfg.get_string("input.tracts").empty()) {
        auto t = load_tracts(cfg);
        out << "tracts: " << t.size() << " valid\n";
        any = true;
    }
    if (!cfg.get_string("input.nodes").empty() || !cfg.get_string("input.edges").empty()) {
        auto n = load_network(cfg);
        print_ingest(out, "nodes", n.nodes_report);
        print_ingest(out, "edges", n.edges_report);
        any = true;
    }
    if (!any) throw UsageError("validate: no inputs given (--accidents, --tracts, --nodes/--edges)");
    (void)rejected;
    return 0;
}

int cmd_metrics(const config::RunConfig& cfg, std::ostream& out) {
    auto tracts = load_tracts(cfg);
    auto net = load_network(cfg);
    auto sums = network::summarize_tracts(net.network, tracts, summary_options(cfg), threads_of(cfg));
    auto dir = output_dir(cfg);
    {
        auto f = open_output(dir / "tract_metrics.csv");
        network::write_summaries(f, sums.summaries);
    }
    std::size_t empty = 0, short_edges = 0;
    for (const auto& s : sums.summaries) {
        empty += s.empty;
        short_edges += s.short_edges;
    }
    Json rep = report_head("metrics", cfg);
    rep["dataset"] = {{"tracts", tracts.size()},
                      {"nodes", report::ingest_json(net.nodes_report)},
                      {"edges", report::ingest_json(net.edges_report)},
                      {"coverage", report::coverage_json(sums.coverage)}};
    rep["results"] = {{"tracts_empty_network", empty}, {"tracts_short_edges", short_edges}};
    report::write_json(dir / "report.json", rep);
    out << "wrote " << (dir / "tract_metrics.csv").string() << " (" << tracts.size() << " tracts, " << empty
        << " without streets)\n";
    return 0;
}

Json geometry_json(const geo::MultiPolygon& mp) {
    auto ring_json = [](const geo::Ring& r) {
        Json arr = Json::array();
        for (const auto& p : r) arr.push_back({p.lon, p.lat});
        arr.push_back({r.front().lon, r.front().lat});
        return arr;
    };
    auto poly_json = [&](const geo::PolygonGeom& p) {
        Json rings = Json::array();
        rings.push_back(ring_json(p.exterior));
        for (const auto& h : p.holes) rings.push_back(ring_json(h));
        return rings;
    };
    if (mp.size() == 1) return {{"type", "Polygon"}, {"coordinates", poly_json(mp[0])}};
    Json parts = Json::array();
    for (const auto& p : mp) parts.push_back(poly_json(p));
    return {{"type", "MultiPolygon"}, {"coordinates", parts}};
}

int cmd_moran(const config::RunConfig& cfg, std::ostream& out) {
    auto tracts = load_tracts(cfg);
    auto accidents = load_accidents(cfg);
    std::vector<double> y(tracts.size(), 0.0);
    TractIndex index(tracts);
    std::size_t outside = 0;
    for (const auto& a : accidents.records) {
        if (auto t = index.assign(a.location)) {
            y[*t] += features::severity_label(a);
        } else {
            ++outside;
        }
    }
    auto w = spatial::queen_contiguity(tracts, cfg.get_real("moran.snap_tol_m"));
    spatial::MoranConfig mc;
    auto n_perm = cfg.get_int("moran.n_perm");
    if (n_perm < 0) throw UsageError("moran.n_perm must be >= 99");
    mc.n_perm = static_cast<std::size_t>(n_perm);
    mc.alpha = cfg.get_real("moran.alpha");
    if (!(mc.alpha > 0 && mc.alpha < 1)) throw UsageError("moran.alpha must be in (0, 1)");
    mc.seed = cfg.get_seed();
    mc.variant = spatial::parse_moran_variant(cfg.get_string("moran.variant"));
    mc.threads = threads_of(cfg);
    std::vector<std::string> keys;
    for (const auto& t : tracts) keys.push_back(t.tract_id);
    auto res = spatial::moran_permutation(y, w, mc, keys);

    auto dir = output_dir(cfg);
    {
        auto f = open_output(dir / "moran.csv");
        csv::write_row(f, {"tract_id", "y", "I", "p_value", "cluster"});
        for (std::size_t j = 0; j < tracts.size(); ++j) {
            csv::write_row(f, {tracts[j].tract_id, format_double(y[j]), res.I[j] ? format_double(*res.I[j]) : "",
                               format_double(res.p_value[j]), std::string(spatial::to_string(res.cluster[j]))});
        }
    }
    {
        Json fc = {{"type", "FeatureCollection"}, {"features", Json::array()}};
        for (std::size_t j = 0; j < tracts.size(); ++j) {
            Json props = {{"tract_id", tracts[j].tract_id},
                          {"y", y[j]},
                          {"I", res.I[j] ? Json(*res.I[j]) : Json(nullptr)},
                          {"p_value", res.p_value[j]},
                          {"cluster", spatial::to_string(res.cluster[j])}};
            fc["features"].push_back(
                {{"type", "Feature"}, {"properties", props}, {"geometry", geometry_json(tracts[j].geometry)}});
        }
        auto f = open_output(dir / "moran.geojson");
        f << fc.dump() << '\n';
    }
    Json rep = report_head("moran", cfg);
    rep["dataset"] = {{"tracts", tracts.size()},
                      {"accidents", report::ingest_json(accidents.report)},
                      {"accidents_outside", outside},
                      {"neighbor_pairs", w.edge_count()}};
    rep["results"] = report::moran_json(res, mc.alpha);
    report::write_json(dir / "report.json", rep);
    out << "wrote " << (dir / "moran.geojson").string() << " and moran.csv ("
        << rep["results"]["significant"].get<std::size_t>() << " of " << tracts.size() << " tracts significant)\n";
    return 0;
}

int cmd_features(const config::RunConfig& cfg, std::ostream& out) {
    auto t = build_tables(cfg);
    auto dir = output_dir(cfg);
    {
        auto f = open_output(dir / "aggregated.csv");
        features::write_aggregated(f, t.aggregated.rows);
    }
    {
        auto f = open_output(dir / "points.csv");
        features::write_points(f, t.points.rows);
    }
    Json rep = report_head("features", cfg);
    rep["dataset"] = t.dataset;
    rep["results"] = {{"projection_ref", {{"lon", t.aggregated.projection_ref.lon}, {"lat", t.aggregated.projection_ref.lat}}}};
    report::write_json(dir / "report.json", rep);
    out << "wrote aggregated.csv (" << t.aggregated.rows.size() << " rows) and points.csv (" << t.points.rows.size()
        << " rows)\n";
    return 0;
}

learn::GbmParams gbm_params(const config::RunConfig& cfg) {
    learn::GbmParams p;
    p.n_trees = cfg.get_size("gbm.n_trees");
    p.learning_rate = cfg.get_real("gbm.learning_rate");
    p.max_depth = cfg.get_size("gbm.max_depth");
    p.min_samples_leaf = cfg.get_size("gbm.min_samples_leaf");
    return p;
}

int cmd_train_agg(const config::RunConfig& cfg, std::ostream& out) {
    std::vector<features::AggregatedRow> rows;
    Json dataset;
    if (auto path = cfg.get_string("input.aggregated"); !path.empty()) {
        auto in = open_input(path);
        rows = features::read_aggregated(in);
        dataset = {{"source", "aggregated table"}};
    } else {
        auto t = build_tables(cfg);
        rows = std::move(t.aggregated.rows);
        dataset = t.dataset;
    }
    dataset["rows"] = rows.size();

    pipeline::AggregatedConfig ac;
    ac.folds = cfg.get_size("cv.agg_folds");
    ac.seed = cfg.get_seed();
    ac.gbm = gbm_params(cfg);
    ac.stage2 = cfg.get_bool("gp.enabled");
    ac.gp.lengthscale_multipliers = cfg.get_real_list("gp.lengthscale_multipliers");
    ac.gp.noise_ratios = cfg.get_real_list("gp.noise_ratios");
    ac.threads = threads_of(cfg);
    for (double v : ac.gp.lengthscale_multipliers) {
        if (!(v > 0)) throw UsageError("gp.lengthscale_multipliers must be > 0");
    }
    for (double v : ac.gp.noise_ratios) {
        if (!(v > 0)) throw UsageError("gp.noise_ratios must be > 0");
    }
    auto fit = pipeline::run_aggregated(rows, ac);

    auto dir = output_dir(cfg);
    model_io::SavedModel m;
    m.kind = model_io::ModelKind::TwoStage;
    m.name = "aggregated";
    m.feature_names = tract_feature_names();
    m.gbm = fit.stage1;
    m.gp = fit.stage2;
    model_io::save(m, dir / "model_aggregated.json");

    Json rep = report_head("train-agg", cfg);
    rep["dataset"] = dataset;
    rep["results"] = report::aggregated_json(fit, m.feature_names);
    report::write_json(dir / "report.json", rep);
    out << "r2_stage1=" << format_double(fit.r2_stage1) << " r2_combined=" << format_double(fit.r2_combined)
        << " r2_incremental=" << format_double(fit.r2_incremental) << '\n';
    return 0;
}

int cmd_train_point(const config::RunConfig& cfg, std::ostream& out) {
    std::vector<features::PointRow> rows;
    Json dataset;
    if (auto path = cfg.get_string("input.points"); !path.empty()) {
        auto in = open_input(path);
        rows = features::read_points(in);
        dataset = {{"source", "point table"}};
    } else {
        auto t = build_tables(cfg);
        rows = std::move(t.points.rows);
        dataset = t.dataset;
    }
    dataset["rows"] = rows.size();
    const auto X = features::point_feature_matrix(rows);
    const auto y = features::labels(rows);

    pipeline::PointConfig pc;
    pc.folds = cfg.get_size("cv.point_folds");
    pc.stratified = cfg.get_bool("cv.stratified");
    pc.seed = cfg.get_seed();
    pc.models = pipeline::parse_point_models(cfg.get_string("point.models"));
    pc.gbm = gbm_params(cfg);
    pc.forest.n_trees = cfg.get_size("rf.n_trees");
    pc.forest.max_depth = cfg.get_size("rf.max_depth");
    pc.forest.min_samples_leaf = cfg.get_size("rf.min_samples_leaf");
    pc.forest.features_per_split = cfg.get_size("rf.features_per_split");
    pc.forest.bootstrap = cfg.get_bool("rf.bootstrap");
    pc.logistic.l2 = cfg.get_real("logreg.l2");
    pc.logistic.max_iter = cfg.get_size("logreg.max_iter");
    pc.logistic.tol = cfg.get_real("logreg.tol");
    pc.smote.k_neighbors = cfg.get_size("smote.k_neighbors");
    pc.smote.target_ratio = cfg.get_real("smote.target_ratio");
    pc.smote.per_feature = cfg.get_bool("smote.per_feature");
    pc.leaky_smote = cfg.get_bool("smote.leaky");
    pc.threads = threads_of(cfg);
    auto rep_fit = pipeline::run_point(X, y, pc);

    const auto& names = features::point_feature_names();
    auto dir = output_dir(cfg);
    for (const auto& m : rep_fit.models) {
        const std::string name(pipeline::to_string(m.model));
        {
            auto f = open_output(dir / ("roc_" + name + ".csv"));
            eval::write_roc_csv(f, m.roc);
        }
        {
            auto f = open_output(dir / ("roc_" + name + ".svg"));
            eval::write_roc_svg(f, m.roc, std::string(pipeline::display_name(m.model)));
        }
    }
    const auto& fm = rep_fit.final_models;
    auto save = [&](const std::string& name, model_io::ModelKind kind, auto setter) {
        model_io::SavedModel s;
        s.kind = kind;
        s.name = name;
        s.feature_names = names;
        setter(s);
        model_io::save(s, dir / ("model_" + name + ".json"));
    };
    if (fm.gbm_smote) save("gbm_smote", model_io::ModelKind::Gbm, [&](auto& s) { s.gbm = fm.gbm_smote; });
    if (fm.gbm) save("gbm", model_io::ModelKind::Gbm, [&](auto& s) { s.gbm = fm.gbm; });
    if (fm.rf) save("rf", model_io::ModelKind::Forest, [&](auto& s) { s.forest = fm.rf; });
    if (fm.logreg) save("logreg", model_io::ModelKind::Logistic, [&](auto& s) { s.logistic = fm.logreg; });

    Json rep = report_head("train-point", cfg);
    rep["dataset"] = dataset;
    rep["results"] = report::point_json(rep_fit, names);
    rep["warnings"] = rep_fit.warnings;
    report::write_json(dir / "report.json", rep);
    for (const auto& m : rep_fit.models) {
        out << pipeline::to_string(m.model) << " auc=" << format_double(m.auc) << '\n';
    }
    return 0;
}

struct PredictOptions {
    std::string model;
    std::string input;
    std::string output = "-";
};

double parse_cell(const std::string& s, const std::string& column, std::size_t line) {
    double v = 0;
    auto t = csv::trim(s);
    auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (t.empty() || ec != std::errc() || p != t.data() + t.size()) {
        throw DataError("line " + std::to_string(line) + ": column '" + column + "' is not a number: '" + s + "'");
    }
    return v;
}

int cmd_predict(const PredictOptions& po, std::ostream& out) {
    auto model = model_io::load(po.model);
    auto in = open_input(po.input);
    csv::Reader reader(in);
    std::vector<std::string> f;
    if (!reader.next(f)) throw DataError(po.input + ": missing header");
    csv::Header header(f);
    const auto required = model.required_columns();
    std::vector<std::size_t> cols;
    for (const auto& c : required) {
        auto idx = header.find(c);
        if (!idx) throw UsageError(po.input + ": missing required column '" + c + "'");
        cols.push_back(*idx);
    }
    std::optional<std::size_t> id_col = header.find("id");
    if (!id_col) id_col = header.find("tract_id");

    const std::size_t d = model.feature_names.size();
    Matrix X;
    std::vector<geo::PlanePoint> cents;
    std::vector<std::string> ids;
    std::vector<double> row(d);
    while (reader.next(f)) {
        if (f.size() != header.names().size()) {
            throw DataError(po.input + " line " + std::to_string(reader.record_line()) + ": column count");
        }
        for (std::size_t j = 0; j < d; ++j) row[j] = parse_cell(f[cols[j]], required[j], reader.record_line());
        X.append_row(row);
        if (cols.size() > d) {
            cents.push_back({parse_cell(f[cols[d]], required[d], reader.record_line()),
                             parse_cell(f[cols[d + 1]], required[d + 1], reader.record_line())});
        }
        ids.push_back(id_col ? f[*id_col] : std::to_string(ids.size()));
    }
    std::vector<double> scores;
    if (X.rows() > 0) scores = model.predict(X, cents);

    std::ofstream file;
    std::ostream* dst = &out;
    if (po.output != "-") {
        file = open_output(po.output);
        dst = &file;
    }
    csv::write_row(*dst, {id_col ? header.names()[*id_col] : "row", "score"});
    for (std::size_t i = 0; i < ids.size(); ++i) csv::write_row(*dst, {ids[i], format_double(scores[i])});
    return 0;
}

synth::SyntheticSpec synth_spec(const config::RunConfig& cfg) {
    synth::SyntheticSpec s;
    s.grid_rows = cfg.get_size("synth.grid_rows");
    s.grid_cols = cfg.get_size("synth.grid_cols");
    s.tract_size_m = cfg.get_real("synth.tract_size_m");
    s.spatial_amplitude = cfg.get_real("synth.spatial_amplitude");
    s.spatial_lengthscale_m = cfg.get_real("synth.spatial_lengthscale_m");
    s.noise_sd = cfg.get_real("synth.noise_sd");
    s.n_points = cfg.get_size("synth.n_points");
    s.positive_rate = cfg.get_real("synth.positive_rate");
    s.n_accidents = cfg.get_size("synth.n_accidents");
    s.severe_rate = cfg.get_real("synth.severe_rate");
    s.seed = cfg.get_seed();
    s.validate();
    return s;
}

int cmd_synth(const config::RunConfig& cfg, std::ostream& out) {
    const auto spec = synth_spec(cfg);
    auto dir = output_dir(cfg);
    auto raw = synth::generate_raw(spec);
    auto agg = synth::generate_aggregated(spec);
    auto pts = synth::generate_points(spec);
    {
        auto f = open_output(dir / "accidents.csv");
        write_accidents(f, raw.accidents);
    }
    {
        auto f = open_output(dir / "tracts.geojson");
        write_tracts(f, raw.tracts);
    }
    {
        auto n = open_output(dir / "nodes.csv");
        auto e = open_output(dir / "edges.csv");
        write_network(n, e, raw.network);
    }
    {
        auto f = open_output(dir / "aggregated.csv");
        features::write_aggregated(f, agg.rows);
    }
    {
        auto f = open_output(dir / "points.csv");
        features::write_points(f, pts);
    }
    std::size_t positives = 0;
    for (const auto& p : pts) positives += p.label;
    Json rep = report_head("synth", cfg);
    rep["results"] = {{"tracts", raw.tracts.size()},
                      {"nodes", raw.network.nodes.size()},
                      {"edges", raw.network.edges.size()},
                      {"accidents", raw.accidents.size()},
                      {"aggregated_rows", agg.rows.size()},
                      {"point_rows", pts.size()},
                      {"point_positives", positives}};
    report::write_json(dir / "report.json", rep);
    out << "wrote synthetic inputs and tables to " << dir.string() << '\n';
    return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"crashlens: street-network features, spatial autocorrelation and accident-severity models"};
    app.require_subcommand(1);
    app.footer(config::keys_help());

    std::map<std::string, CommonOptions> opts;
    auto* validate = app.add_subcommand("validate", "parse inputs and report rejected rows");
    add_common(validate, opts["validate"]);
    add_inputs(validate, opts["validate"], {"accidents", "tracts", "nodes", "edges"});

    auto* metrics = app.add_subcommand("metrics", "per-tract street network summaries (tract_metrics.csv)");
    add_common(metrics, opts["metrics"]);
    add_inputs(metrics, opts["metrics"], {"tracts", "nodes", "edges"});

    auto* moran = app.add_subcommand("moran", "local Moran's I of severe accidents per tract");
    add_common(moran, opts["moran"]);
    add_inputs(moran, opts["moran"], {"tracts", "accidents"});
    moran->add_option("--n-perm", opts["moran"].flags["moran.n_perm"], "permutations (moran.n_perm)");
    moran->add_option("--alpha", opts["moran"].flags["moran.alpha"], "significance level (moran.alpha)");
    moran->add_option("--variant", opts["moran"].flags["moran.variant"], "neighbor or conventional (moran.variant)");

    auto* feats = app.add_subcommand("features", "build the aggregated and point tables");
    add_common(feats, opts["features"]);
    add_inputs(feats, opts["features"], {"accidents", "tracts", "nodes", "edges"});

    auto* train_agg = app.add_subcommand("train-agg", "two-stage boosted trees + GP residual model");
    add_common(train_agg, opts["train-agg"]);
    add_inputs(train_agg, opts["train-agg"], {"aggregated", "accidents", "tracts", "nodes", "edges"});

    auto* train_point = app.add_subcommand("train-point", "cross-validated comparison of point classifiers");
    add_common(train_point, opts["train-point"]);
    add_inputs(train_point, opts["train-point"], {"points", "accidents", "tracts", "nodes", "edges"});

    PredictOptions po;
    auto* predict = app.add_subcommand("predict", "score a feature CSV with a saved model");
    predict->add_option("--model", po.model, "model JSON file")->required();
    predict->add_option("--input", po.input, "feature CSV with the model's columns")->required();
    predict->add_option("--output", po.output, "output CSV ('-' for stdout)");
    predict->footer("The input needs every feature column named in the model file; two-stage models\n"
                    "with a spatial stage also need centroid_x and centroid_y.");

    auto* synth_cmd = app.add_subcommand("synth", "write a synthetic city: inputs and model-ready tables");
    add_common(synth_cmd, opts["synth"]);

    std::vector<std::string> storage(args);
    if (storage.empty()) storage.emplace_back("crashlens");
    std::vector<char*> argv;
    for (auto& s : storage) argv.push_back(s.data());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }

    try {
        if (predict->parsed()) return cmd_predict(po, out);
        for (auto* sub : app.get_subcommands()) {
            const std::string name = sub->get_name();
            const auto cfg = resolve(opts[name]);
            if (name == "validate") return cmd_validate(cfg, out);
            if (name == "metrics") return cmd_metrics(cfg, out);
            if (name == "moran") return cmd_moran(cfg, out);
            if (name == "features") return cmd_features(cfg, out);
            if (name == "train-agg") return cmd_train_agg(cfg, out);
            if (name == "train-point") return cmd_train_point(cfg, out);
            if (name == "synth") return cmd_synth(cfg, out);
        }
        return 2;
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const DataError& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
}

}  // namespace crashlens
