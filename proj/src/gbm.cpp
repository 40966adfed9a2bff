#include "crashlens/gbm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace crashlens::learn {

std::string_view to_string(Loss l) { return l == Loss::Squared ? "squared" : "logistic"; }

Loss parse_loss(std::string_view s) {
    if (s == "squared") return Loss::Squared;
    if (s == "logistic") return Loss::Logistic;
    throw UsageError("unknown loss '" + std::string(s) + "'");
}

void GbmParams::validate() const {
    if (!(learning_rate > 0.0 && learning_rate <= 1.0)) throw UsageError("gbm.learning_rate must be in (0, 1]");
    if (max_depth < 1) throw UsageError("gbm.max_depth must be >= 1");
}

double sigmoid(double z) {
    if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
    double e = std::exp(z);
    return e / (1.0 + e);
}

namespace {

// log(1 + exp(z)) - y z, stable for large |z|.
double logistic_loss(double score, double y) {
    double softplus = score > 0 ? score + std::log1p(std::exp(-score)) : std::log1p(std::exp(score));
    return softplus - y * score;
}

double mean_loss(std::span<const double> score, std::span<const double> y, Loss loss) {
    double total = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        total += loss == Loss::Squared ? (y[i] - score[i]) * (y[i] - score[i]) : logistic_loss(score[i], y[i]);
    }
    return total / static_cast<double>(y.size());
}

}  // namespace

double GbmModel::raw_score(std::span<const double> x) const {
    double s = 0.0;
    for (const auto& t : trees) s += t.predict(x);
    return init_value + learning_rate * s;
}

GbmModel gbm_fit(const Matrix& X, std::span<const double> y, const GbmParams& params) {
    params.validate();
    if (X.rows() == 0) throw DataError("gbm_fit: empty data");
    if (y.size() != X.rows()) throw DataError("gbm_fit: label count does not match rows");
    const std::size_t n = X.rows();

    GbmModel model;
    model.learning_rate = params.learning_rate;
    model.loss = params.loss;
    model.n_features = X.cols();

    if (params.loss == Loss::Squared) {
        model.init_value = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
    } else {
        double pos = 0.0;
        for (double v : y) {
            if (v != 0.0 && v != 1.0) throw DataError("gbm_fit: logistic loss needs 0/1 labels");
            pos += v;
        }
        double p = std::clamp(pos / static_cast<double>(n), 1e-6, 1.0 - 1e-6);
        model.init_value = std::log(p / (1.0 - p));
        if (pos == 0.0 || pos == static_cast<double>(n)) {
            model.warnings.push_back("single-class labels: model reduced to the clamped log-odds");
            model.train_loss.push_back(mean_loss(std::vector<double>(n, model.init_value), y, params.loss));
            return model;
        }
    }

    std::vector<double> score(n, model.init_value);
    std::vector<double> residual(n);
    const std::vector<double> weights(n, 1.0);
    const SortedColumns sorted(X);
    const TreeParams tp{params.max_depth, params.min_samples_leaf, 0};
    model.train_loss.push_back(mean_loss(score, y, params.loss));
    model.trees.reserve(params.n_trees);

    std::vector<std::size_t> leaf_of(n);
    for (std::size_t m = 0; m < params.n_trees; ++m) {
        for (std::size_t i = 0; i < n; ++i) {
            residual[i] = params.loss == Loss::Squared ? y[i] - score[i] : y[i] - sigmoid(score[i]);
        }
        DecisionTree tree = fit_tree(X, sorted, residual, weights, tp, nullptr);
        for (std::size_t i = 0; i < n; ++i) leaf_of[i] = tree.leaf_index(X.row(i));

        if (params.loss == Loss::Logistic) {
            auto& nodes = tree.mutable_nodes();
            std::vector<double> g(nodes.size(), 0.0), h(nodes.size(), 0.0);
            for (std::size_t i = 0; i < n; ++i) {
                double p = sigmoid(score[i]);
                g[leaf_of[i]] += y[i] - p;
                h[leaf_of[i]] += p * (1.0 - p);
            }
            std::vector<std::vector<std::size_t>> rows_of(nodes.size());
            for (std::size_t i = 0; i < n; ++i) rows_of[leaf_of[i]].push_back(i);
            for (std::size_t k = 0; k < nodes.size(); ++k) {
                if (nodes[k].feature >= 0) continue;
                double step = h[k] > 1e-12 ? g[k] / h[k] : 0.0;
                auto leaf_loss = [&](double v) {
                    double total = 0.0;
                    for (auto i : rows_of[k]) total += logistic_loss(score[i] + params.learning_rate * v, y[i]);
                    return total;
                };
                const double base = leaf_loss(0.0);
                int halvings = 0;
                while (step != 0.0 && leaf_loss(step) > base) {
                    step = ++halvings < 40 ? step / 2.0 : 0.0;
                }
                nodes[k].value = step;
            }
        }
        for (std::size_t i = 0; i < n; ++i) score[i] += params.learning_rate * tree.nodes()[leaf_of[i]].value;
        model.train_loss.push_back(mean_loss(score, y, params.loss));
        model.trees.push_back(std::move(tree));
    }
    return model;
}

std::vector<double> gbm_predict(const GbmModel& model, const Matrix& X) {
    if (X.cols() != model.n_features) {
        throw DataError("gbm_predict: model expects " + std::to_string(model.n_features) + " features, got " +
                        std::to_string(X.cols()));
    }
    std::vector<double> out(X.rows());
    for (std::size_t i = 0; i < X.rows(); ++i) {
        double s = model.raw_score(X.row(i));
        out[i] = model.loss == Loss::Logistic ? sigmoid(s) : s;
    }
    return out;
}

}  // namespace crashlens::learn
