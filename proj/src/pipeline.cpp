#include "crashlens/pipeline.hpp"

#include <algorithm>
#include <stdexcept>

#include "crashlens/common.hpp"

namespace crashlens::pipeline {

namespace {

Matrix take_rows(const Matrix& X, std::span<const std::size_t> rows) {
    Matrix out(rows.size(), X.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        std::copy(X.row(rows[i]).begin(), X.row(rows[i]).end(), out.row(i).begin());
    }
    return out;
}

template <typename T>
std::vector<T> take(std::span<const T> v, std::span<const std::size_t> rows) {
    std::vector<T> out;
    out.reserve(rows.size());
    for (auto r : rows) out.push_back(v[r]);
    return out;
}

std::optional<double> try_r2(std::span<const double> y, std::span<const double> yhat) {
    for (double v : y) {
        if (v != y[0]) return eval::r_squared(y, yhat);
    }
    return std::nullopt;
}

bool has_both_classes(std::span<const double> y) {
    bool pos = false, neg = false;
    for (double v : y) (v == 1.0 ? pos : neg) = true;
    return pos && neg;
}

}  // namespace

std::vector<double> predict_two_stage(const learn::GbmModel& gbm, const learn::GpModel* gp, const Matrix& S,
                                      std::span<const geo::PlanePoint> centroids) {
    auto out = learn::gbm_predict(gbm, S);
    if (gp) {
        if (centroids.size() != S.rows()) throw DataError("two-stage prediction: centroid count does not match rows");
        auto g = learn::gp_predict(*gp, centroids).mean;
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += g[i];
    }
    return out;
}

AggregatedFit run_aggregated(const Matrix& S, std::span<const geo::PlanePoint> centroids, std::span<const double> y,
                             const AggregatedConfig& cfg) {
    const std::size_t n = S.rows();
    if (y.size() != n || centroids.size() != n) throw DataError("aggregated model: row counts differ");
    if (cfg.folds < 2) throw UsageError("aggregated model: folds must be >= 2");
    if (n < 2 * cfg.folds) {
        throw DataError("aggregated model needs at least " + std::to_string(2 * cfg.folds) + " rows for " +
                        std::to_string(cfg.folds) + " folds, got " + std::to_string(n));
    }
    learn::GbmParams gp = cfg.gbm;
    gp.loss = learn::Loss::Squared;
    gp.validate();

    AggregatedFit fit;
    fit.plan = eval::kfold(n, cfg.folds, derive_seed(cfg.seed, "folds"));
    fit.oof_stage1.assign(n, 0.0);
    fit.oof_combined.assign(n, 0.0);
    fit.folds.resize(cfg.folds);

    parallel_for(cfg.folds, resolve_threads(cfg.threads), [&](std::size_t f) {
        const auto train = fit.plan.train_rows(f);
        const auto test = fit.plan.test_rows(f);
        const Matrix s_train = take_rows(S, train), s_test = take_rows(S, test);
        const auto y_train = take(y, std::span<const std::size_t>(train));
        const auto y_test = take(y, std::span<const std::size_t>(test));

        const auto model = learn::gbm_fit(s_train, y_train, gp);
        const auto f_test = learn::gbm_predict(model, s_test);
        auto combined = f_test;
        auto& fold = fit.folds[f];
        if (cfg.stage2) {
            const auto f_train = learn::gbm_predict(model, s_train);
            std::vector<double> resid(train.size());
            for (std::size_t i = 0; i < train.size(); ++i) resid[i] = y_train[i] - f_train[i];
            const auto x_train = take(centroids, std::span<const std::size_t>(train));
            const auto x_test = take(centroids, std::span<const std::size_t>(test));
            const auto g = learn::gp_fit_grid(x_train, resid, cfg.gp);
            const auto g_test = learn::gp_predict(g.model, x_test).mean;
            for (std::size_t i = 0; i < test.size(); ++i) combined[i] += g_test[i];
            fold.kernel = g.model.kernel;
        }
        for (std::size_t i = 0; i < test.size(); ++i) {
            fit.oof_stage1[test[i]] = f_test[i];
            fit.oof_combined[test[i]] = combined[i];
        }
        fold.n_train = train.size();
        fold.n_test = test.size();
        fold.r2_stage1 = try_r2(y_test, f_test);
        fold.r2_combined = try_r2(y_test, combined);
    });

    fit.r2_stage1 = eval::r_squared(y, fit.oof_stage1);
    fit.r2_combined = eval::r_squared(y, fit.oof_combined);
    fit.r2_incremental = fit.r2_combined - fit.r2_stage1;

    fit.stage1 = learn::gbm_fit(S, y, gp);
    const auto f_all = learn::gbm_predict(fit.stage1, S);
    fit.in_sample_r2_stage1 = eval::r_squared(y, f_all);
    fit.in_sample_r2_combined = fit.in_sample_r2_stage1;
    if (cfg.stage2) {
        std::vector<double> resid(n);
        for (std::size_t i = 0; i < n; ++i) resid[i] = y[i] - f_all[i];
        auto g = learn::gp_fit_grid(centroids, resid, cfg.gp);
        fit.gp_grid = std::move(g.grid);
        fit.stage2 = std::move(g.model);
        fit.in_sample_r2_combined = eval::r_squared(y, predict_two_stage(fit.stage1, &*fit.stage2, S, centroids));
    }
    fit.in_sample_r2_incremental = fit.in_sample_r2_combined - fit.in_sample_r2_stage1;
    fit.importance = learn::feature_importance(fit.stage1);
    return fit;
}

AggregatedFit run_aggregated(const std::vector<features::AggregatedRow>& rows, const AggregatedConfig& cfg) {
    const auto S = features::tract_feature_matrix(rows);
    const auto x = features::centroids(rows);
    const auto y = features::targets(rows);
    return run_aggregated(S, x, y, cfg);
}

std::string_view to_string(PointModel m) {
    switch (m) {
        case PointModel::GbmSmote: return "gbm_smote";
        case PointModel::Gbm: return "gbm";
        case PointModel::RandomForest: return "rf";
        case PointModel::LogReg: return "logreg";
    }
    return "?";
}

std::string_view display_name(PointModel m) {
    switch (m) {
        case PointModel::GbmSmote: return "Gradient Boosting with SMOTE";
        case PointModel::Gbm: return "Gradient Boosting";
        case PointModel::RandomForest: return "Random Forests";
        case PointModel::LogReg: return "Logistic Regression";
    }
    return "?";
}

PointModel parse_point_model(std::string_view s) {
    for (auto m : {PointModel::GbmSmote, PointModel::Gbm, PointModel::RandomForest, PointModel::LogReg}) {
        if (s == to_string(m)) return m;
    }
    throw UsageError("unknown point model '" + std::string(s) + "' (expected gbm_smote, gbm, rf or logreg)");
}

std::vector<PointModel> parse_point_models(std::string_view csv) {
    std::vector<PointModel> out;
    std::size_t start = 0;
    while (start <= csv.size()) {
        auto end = csv.find(',', start);
        if (end == std::string_view::npos) end = csv.size();
        auto item = csv.substr(start, end - start);
        while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
        while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
        if (!item.empty()) {
            auto m = parse_point_model(item);
            if (std::find(out.begin(), out.end(), m) != out.end()) {
                throw UsageError("point model '" + std::string(item) + "' listed twice");
            }
            out.push_back(m);
        }
        start = end + 1;
    }
    if (out.empty()) throw UsageError("no point models selected");
    return out;
}

namespace {

struct Trained {
    std::optional<learn::GbmModel> gbm;
    std::optional<learn::ForestModel> rf;
    std::optional<learn::LogisticModel> logreg;
    std::vector<std::string> warnings;
};

Trained train_model(PointModel m, const Matrix& X, std::span<const double> y, const PointConfig& cfg,
                    std::uint64_t rf_seed) {
    Trained t;
    switch (m) {
        case PointModel::GbmSmote:
        case PointModel::Gbm: {
            auto p = cfg.gbm;
            p.loss = learn::Loss::Logistic;
            t.gbm = learn::gbm_fit(X, y, p);
            t.warnings = t.gbm->warnings;
            break;
        }
        case PointModel::RandomForest: {
            auto p = cfg.forest;
            p.seed = rf_seed;
            t.rf = learn::rf_fit(X, y, p, 1);
            break;
        }
        case PointModel::LogReg:
            t.logreg = learn::logistic_fit(X, y, cfg.logistic);
            t.warnings = t.logreg->warnings;
            break;
    }
    return t;
}

std::vector<double> score(const Trained& t, const Matrix& X) {
    if (t.gbm) return learn::gbm_predict(*t.gbm, X);
    if (t.rf) return learn::rf_predict(*t.rf, X);
    return learn::logistic_predict(*t.logreg, X);
}

struct FoldSlot {
    std::vector<double> scores;  // aligned with audit.test_rows
    FitAudit audit;
    std::vector<std::string> warnings;
};

}  // namespace

PointFitReport run_point(const Matrix& X, std::span<const double> y, const PointConfig& cfg) {
    const std::size_t n = X.rows();
    if (y.size() != n) throw DataError("point model: label count does not match rows");
    for (double v : y) {
        if (v != 0.0 && v != 1.0) throw DataError("point model: labels must be 0 or 1");
    }
    if (!has_both_classes(y)) throw DataError("point model: both classes must be present");
    if (cfg.models.empty()) throw UsageError("no point models selected");
    if (cfg.folds < 2) throw UsageError("point model: folds must be >= 2");
    const bool any_smote = std::find(cfg.models.begin(), cfg.models.end(), PointModel::GbmSmote) != cfg.models.end();
    if (any_smote) cfg.smote.validate();
    {
        auto p = cfg.gbm;
        p.validate();
    }

    PointFitReport rep;
    rep.rows = n;
    for (double v : y) rep.positives += v == 1.0;
    const std::uint64_t fold_seed = derive_seed(cfg.seed, "folds");
    auto make_plan = [&](std::size_t rows, std::span<const double> labels) {
        return cfg.stratified ? eval::kfold(rows, cfg.folds, fold_seed, labels) : eval::kfold(rows, cfg.folds, fold_seed);
    };
    rep.plan = make_plan(n, y);

    // Leaky protocol: oversample everything once, then split the result.
    smote::BalancedData leaky;
    eval::FoldPlan leaky_plan;
    const bool use_leaky = cfg.leaky_smote && any_smote;
    if (use_leaky) {
        auto sc = cfg.smote;
        sc.seed = derive_seed(cfg.seed, "smote/leaky");
        leaky = smote::smote_balance(X, y, sc);
        leaky_plan = make_plan(leaky.X.rows(), leaky.y);
    }

    const std::size_t k = cfg.folds, n_models = cfg.models.size();
    std::vector<FoldSlot> slots(n_models * k);
    parallel_for(slots.size(), resolve_threads(cfg.threads), [&](std::size_t task) {
        const PointModel m = cfg.models[task / k];
        const std::size_t f = task % k;
        const bool is_leaky = use_leaky && m == PointModel::GbmSmote;
        const Matrix& XX = is_leaky ? leaky.X : X;
        const std::span<const double> yy = is_leaky ? std::span<const double>(leaky.y) : y;
        const auto& plan = is_leaky ? leaky_plan : rep.plan;

        auto& slot = slots[task];
        slot.audit.model = m;
        slot.audit.fold = f;
        slot.audit.leaky = is_leaky;
        slot.audit.fit_rows = plan.train_rows(f);
        slot.audit.test_rows = plan.test_rows(f);
        const auto& train = slot.audit.fit_rows;

        Matrix X_train = take_rows(XX, train);
        std::vector<double> y_train = take(yy, std::span<const std::size_t>(train));
        if (m == PointModel::GbmSmote && !is_leaky) {
            auto sc = cfg.smote;
            sc.seed = derive_seed(cfg.seed, "smote/fold/" + std::to_string(f));
            auto balanced = smote::smote_balance(X_train, y_train, sc);
            slot.audit.smote_rows = train;
            slot.audit.n_synthetic = balanced.n_synthetic;
            X_train = std::move(balanced.X);
            y_train = std::move(balanced.y);
        }
        auto trained = train_model(m, X_train, y_train, cfg, derive_seed(cfg.seed, "rf/fold/" + std::to_string(f)));
        for (auto& w : trained.warnings) slot.warnings.push_back(std::string(to_string(m)) + " fold " + std::to_string(f) + ": " + w);
        slot.scores = score(trained, take_rows(XX, slot.audit.test_rows));
    });

    for (std::size_t mi = 0; mi < n_models; ++mi) {
        const PointModel m = cfg.models[mi];
        const bool is_leaky = use_leaky && m == PointModel::GbmSmote;
        const std::span<const double> yy = is_leaky ? std::span<const double>(leaky.y) : y;
        ModelEvaluation ev;
        ev.model = m;
        ev.smote = m == PointModel::GbmSmote;
        ev.evaluated_rows = yy.size();
        ev.oof_scores.assign(yy.size(), 0.0);
        std::vector<double> fold_values;
        for (std::size_t f = 0; f < k; ++f) {
            const auto& slot = slots[mi * k + f];
            const auto& test = slot.audit.test_rows;
            for (std::size_t i = 0; i < test.size(); ++i) ev.oof_scores[test[i]] = slot.scores[i];
            ev.n_synthetic += slot.audit.n_synthetic;
            const auto y_test = take(yy, std::span<const std::size_t>(test));
            if (has_both_classes(y_test)) {
                ev.fold_auc.push_back(eval::roc_auc(slot.scores, y_test).auc);
                fold_values.push_back(*ev.fold_auc.back());
            } else {
                ev.fold_auc.push_back(std::nullopt);
            }
            rep.warnings.insert(rep.warnings.end(), slot.warnings.begin(), slot.warnings.end());
        }
        if (is_leaky) ev.n_synthetic = leaky.n_synthetic;
        ev.roc = eval::roc_auc(ev.oof_scores, yy);
        ev.auc = ev.roc.auc;
        ev.fold_stats = eval::fold_stats(fold_values);
        rep.models.push_back(std::move(ev));
    }
    if (cfg.observer) {
        for (const auto& slot : slots) cfg.observer(slot.audit);
    }

    if (cfg.refit) {
        std::vector<Trained> finals(n_models);
        parallel_for(n_models, resolve_threads(cfg.threads), [&](std::size_t mi) {
            const PointModel m = cfg.models[mi];
            if (m == PointModel::GbmSmote) {
                auto sc = cfg.smote;
                sc.seed = derive_seed(cfg.seed, "smote/final");
                auto balanced = smote::smote_balance(X, y, sc);
                finals[mi] = train_model(m, balanced.X, balanced.y, cfg, 0);
            } else {
                finals[mi] = train_model(m, X, y, cfg, derive_seed(cfg.seed, "rf/final"));
            }
        });
        for (std::size_t mi = 0; mi < n_models; ++mi) {
            auto& t = finals[mi];
            switch (cfg.models[mi]) {
                case PointModel::GbmSmote: rep.final_models.gbm_smote = std::move(t.gbm); break;
                case PointModel::Gbm: rep.final_models.gbm = std::move(t.gbm); break;
                case PointModel::RandomForest: rep.final_models.rf = std::move(t.rf); break;
                case PointModel::LogReg: rep.final_models.logreg = std::move(t.logreg); break;
            }
            for (auto& w : t.warnings) rep.warnings.push_back(std::string(to_string(cfg.models[mi])) + " final: " + w);
        }
        if (rep.final_models.gbm_smote) {
            rep.importance = learn::feature_importance(*rep.final_models.gbm_smote);
            rep.importance_model = PointModel::GbmSmote;
        } else if (rep.final_models.gbm) {
            rep.importance = learn::feature_importance(*rep.final_models.gbm);
            rep.importance_model = PointModel::Gbm;
        }
    }
    return rep;
}

}  // namespace crashlens::pipeline
