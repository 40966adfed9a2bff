#include "crashlens/forest.hpp"

#include <cmath>
#include <random>

namespace crashlens::learn {

ForestModel rf_fit(const Matrix& X, std::span<const double> y, const ForestParams& params, unsigned threads) {
    if (X.rows() == 0) throw DataError("rf_fit: empty data");
    if (y.size() != X.rows()) throw DataError("rf_fit: label count does not match rows");
    if (params.n_trees == 0) throw UsageError("rf.n_trees must be >= 1");
    const std::size_t n = X.rows(), d = X.cols();

    ForestModel model;
    model.n_features = d;
    model.features_per_split = params.features_per_split == 0
                                   ? static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(d))))
                                   : std::min(params.features_per_split, d);
    model.trees.resize(params.n_trees);
    model.tree_seeds.resize(params.n_trees);
    for (std::size_t t = 0; t < params.n_trees; ++t) model.tree_seeds[t] = derive_seed(params.seed, t);

    const SortedColumns sorted(X);
    const TreeParams tp{params.max_depth, params.min_samples_leaf, model.features_per_split};
    parallel_for(params.n_trees, threads, [&](std::size_t t) {
        std::mt19937_64 rng(model.tree_seeds[t]);
        std::vector<double> weights(n, params.bootstrap ? 0.0 : 1.0);
        if (params.bootstrap) {
            std::uniform_int_distribution<std::size_t> pick(0, n - 1);
            for (std::size_t i = 0; i < n; ++i) weights[pick(rng)] += 1.0;
        }
        model.trees[t] = fit_tree(X, sorted, y, weights, tp, &rng);
    });
    return model;
}

std::vector<double> rf_predict(const ForestModel& model, const Matrix& X) {
    if (X.cols() != model.n_features) {
        throw DataError("rf_predict: model expects " + std::to_string(model.n_features) + " features, got " +
                        std::to_string(X.cols()));
    }
    std::vector<double> out(X.rows(), 0.0);
    for (std::size_t i = 0; i < X.rows(); ++i) {
        double s = 0.0;
        for (const auto& t : model.trees) s += t.predict(X.row(i));
        out[i] = s / static_cast<double>(model.trees.size());
    }
    return out;
}

}  // namespace crashlens::learn
