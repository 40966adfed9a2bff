#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Dense>

#include "crashlens/forest.hpp"
#include "crashlens/gbm.hpp"
#include "crashlens/gp.hpp"
#include "crashlens/importance.hpp"
#include "crashlens/logistic.hpp"

using namespace crashlens;
using namespace crashlens::learn;

namespace {

struct Stump {
    std::size_t feature;
    double threshold;
    double gain;
    double left, right;
};

double sse(const std::vector<double>& v) {
    if (v.empty()) return 0;
    double m = 0;
    for (double x : v) m += x;
    m /= static_cast<double>(v.size());
    double s = 0;
    for (double x : v) s += (x - m) * (x - m);
    return s;
}

double mean(const std::vector<double>& v) {
    double m = 0;
    for (double x : v) m += x;
    return m / static_cast<double>(v.size());
}

// Every feature, every midpoint between consecutive distinct values.
std::vector<Stump> all_stumps(const Matrix& X, const std::vector<double>& y, std::size_t min_leaf) {
    std::vector<Stump> out;
    const double parent = sse(y);
    for (std::size_t f = 0; f < X.cols(); ++f) {
        std::vector<double> vals;
        for (std::size_t i = 0; i < X.rows(); ++i) vals.push_back(X(i, f));
        std::sort(vals.begin(), vals.end());
        vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
        for (std::size_t t = 0; t + 1 < vals.size(); ++t) {
            double thr = (vals[t] + vals[t + 1]) / 2;
            std::vector<double> l, r;
            for (std::size_t i = 0; i < X.rows(); ++i) (X(i, f) <= thr ? l : r).push_back(y[i]);
            if (l.size() < min_leaf || r.size() < min_leaf) continue;
            out.push_back({f, thr, parent - sse(l) - sse(r), mean(l), mean(r)});
        }
    }
    return out;
}

Matrix random_X(std::mt19937_64& rng, std::size_t n, std::size_t d) {
    std::normal_distribution<double> N;
    Matrix X(n, d);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) X(i, j) = N(rng);
    }
    return X;
}

std::vector<double> nonlinear_labels(std::mt19937_64& rng, const Matrix& X) {
    std::vector<double> y(X.rows());
    std::uniform_real_distribution<double> u;
    for (std::size_t i = 0; i < X.rows(); ++i) {
        double z = 1.5 * X(i, 0) * X(i, 1) + std::sin(2 * X(i, 2)) - 0.5;
        y[i] = u(rng) < sigmoid(2 * z) ? 1.0 : 0.0;
    }
    return y;
}

}  // namespace

TEST_CASE("depth-1 trees equal the exhaustive best stump") {
    std::mt19937_64 rng(42);
    std::normal_distribution<double> N;
    std::size_t unique_cases = 0;
    for (int inst = 0; inst < 200; ++inst) {
        const std::size_t n = 2 + static_cast<std::size_t>(inst) % 19, d = 1 + static_cast<std::size_t>(inst) % 4;
        Matrix X = random_X(rng, n, d);
        std::vector<double> y(n);
        for (auto& v : y) v = N(rng) + (X(0, 0) > 0 ? 1 : 0);
        auto stumps = all_stumps(X, y, 1);
        auto tree = fit_tree(X, y, TreeParams{1, 1, 0});
        if (stumps.empty()) {
            CHECK(tree.nodes().size() == 1);
            continue;
        }
        auto best = *std::max_element(stumps.begin(), stumps.end(),
                                      [](const Stump& a, const Stump& b) { return a.gain < b.gain; });
        REQUIRE(tree.nodes().size() == 3);
        const auto& root = tree.nodes()[0];
        CHECK(root.gain == doctest::Approx(best.gain).epsilon(1e-9));
        std::size_t near = 0;
        for (const auto& s : stumps) near += s.gain > best.gain - 1e-9 * (1 + best.gain);
        if (near == 1) {
            ++unique_cases;
            CHECK(static_cast<std::size_t>(root.feature) == best.feature);
            CHECK(root.threshold == doctest::Approx(best.threshold).epsilon(1e-12));
            CHECK(tree.nodes()[static_cast<std::size_t>(root.left)].value == doctest::Approx(best.left).epsilon(1e-12));
            CHECK(tree.nodes()[static_cast<std::size_t>(root.right)].value == doctest::Approx(best.right).epsilon(1e-12));
        }
    }
    CHECK(unique_cases > 150);
}

TEST_CASE("stump ties go to the lowest feature, then the lowest threshold") {
    Matrix X(4, 2);
    std::vector<double> xs{1, 2, 3, 4};
    for (std::size_t i = 0; i < 4; ++i) X(i, 0) = X(i, 1) = xs[i];
    std::vector<double> y{0, 1, 1, 0};  // splits at 1.5 and 3.5 tie
    auto t = fit_tree(X, y, TreeParams{1, 1, 0});
    CHECK(t.nodes()[0].feature == 0);
    CHECK(t.nodes()[0].threshold == 1.5);
}

TEST_CASE("tree respects depth and leaf size") {
    std::mt19937_64 rng(1);
    Matrix X = random_X(rng, 300, 3);
    std::vector<double> y(300);
    for (std::size_t i = 0; i < 300; ++i) y[i] = std::sin(3 * X(i, 0)) + X(i, 1) * X(i, 2);
    for (std::size_t depth : {1u, 2u, 4u, 7u}) {
        for (std::size_t leaf : {1u, 10u, 40u}) {
            auto t = fit_tree(X, y, TreeParams{depth, leaf, 0});
            CHECK(t.depth() <= depth);
            for (const auto& n : t.nodes()) {
                if (n.feature < 0) CHECK(n.weight >= static_cast<double>(leaf));
            }
            for (std::size_t i = 0; i < 300; ++i) {
                // left means x <= threshold, all the way down
                std::size_t k = 0;
                while (t.nodes()[k].feature >= 0) {
                    const auto& nd = t.nodes()[k];
                    k = static_cast<std::size_t>(X(i, static_cast<std::size_t>(nd.feature)) <= nd.threshold ? nd.left
                                                                                                            : nd.right);
                }
                REQUIRE(k == t.leaf_index(X.row(i)));
            }
        }
    }
    CHECK(fit_tree(X, std::vector<double>(300, 2.0), TreeParams{3, 1, 0}).nodes().size() == 1);
}

TEST_CASE("tree predictions are invariant under monotone feature transforms") {
    std::mt19937_64 rng(77);
    for (int inst = 0; inst < 20; ++inst) {
        Matrix X = random_X(rng, 20, 2);
        std::vector<double> y(20);
        for (std::size_t i = 0; i < 20; ++i) y[i] = X(i, 0) > 0.3 ? 2.0 + X(i, 1) : -X(i, 1);
        Matrix T = X;
        for (std::size_t i = 0; i < 20; ++i) T(i, 0) = std::exp(3 * X(i, 0));
        auto a = fit_tree(X, y, TreeParams{3, 2, 0});
        auto b = fit_tree(T, y, TreeParams{3, 2, 0});
        for (std::size_t i = 0; i < 20; ++i) CHECK(a.predict(X.row(i)) == b.predict(T.row(i)));
    }
}

TEST_CASE("squared-loss GBM with one full-rate stump is mean plus best stump") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> N;
    for (int inst = 0; inst < 30; ++inst) {
        Matrix X = random_X(rng, 15, 3);
        std::vector<double> y(15);
        for (auto& v : y) v = N(rng) * 3 + 10;
        GbmParams p;
        p.n_trees = 1;
        p.learning_rate = 1.0;
        p.max_depth = 1;
        p.min_samples_leaf = 1;
        auto m = gbm_fit(X, y, p);
        const double ybar = mean(y);
        std::vector<double> resid(15);
        for (std::size_t i = 0; i < 15; ++i) resid[i] = y[i] - ybar;
        auto stumps = all_stumps(X, resid, 1);
        auto best = *std::max_element(stumps.begin(), stumps.end(),
                                      [](const Stump& a, const Stump& b) { return a.gain < b.gain; });
        auto pred = gbm_predict(m, X);
        for (std::size_t i = 0; i < 15; ++i) {
            double expect = ybar + (X(i, best.feature) <= best.threshold ? best.left : best.right);
            CHECK(pred[i] == doctest::Approx(expect).epsilon(1e-10));
        }
    }
}

TEST_CASE("GBM with no trees predicts its initial value") {
    std::mt19937_64 rng(2);
    Matrix X = random_X(rng, 50, 2);
    std::vector<double> y = nonlinear_labels(rng, X);
    GbmParams p;
    p.n_trees = 0;
    p.loss = Loss::Logistic;
    auto m = gbm_fit(X, y, p);
    const double rate = mean(y);
    for (double v : gbm_predict(m, X)) CHECK(v == doctest::Approx(rate).epsilon(1e-12));
    CHECK(m.init_value == doctest::Approx(std::log(rate / (1 - rate))));
}

TEST_CASE("GBM training loss never increases") {
    std::mt19937_64 rng(9);
    for (auto loss : {Loss::Squared, Loss::Logistic}) {
        for (int run = 0; run < 10; ++run) {
            Matrix X = random_X(rng, 200, 4);
            std::vector<double> y = nonlinear_labels(rng, X);
            if (loss == Loss::Squared) {
                for (std::size_t i = 0; i < y.size(); ++i) y[i] += X(i, 3);
            }
            GbmParams p;
            p.n_trees = 60;
            p.loss = loss;
            p.learning_rate = run % 2 ? 1.0 : 0.1;
            p.min_samples_leaf = 3;
            auto m = gbm_fit(X, y, p);
            REQUIRE(m.train_loss.size() == 61);
            for (std::size_t t = 1; t < m.train_loss.size(); ++t) CHECK(m.train_loss[t] <= m.train_loss[t - 1]);
            CHECK(m.train_loss.back() < m.train_loss.front());
        }
    }
}

TEST_CASE("logistic GBM probabilities and single-class data") {
    std::mt19937_64 rng(10);
    Matrix X = random_X(rng, 300, 3);
    auto y = nonlinear_labels(rng, X);
    GbmParams p;
    p.loss = Loss::Logistic;
    p.n_trees = 50;
    for (double v : gbm_predict(gbm_fit(X, y, p), X)) {
        CHECK(v > 0);
        CHECK(v < 1);
    }
    auto single = gbm_fit(X, std::vector<double>(300, 1.0), p);
    CHECK(single.trees.empty());
    CHECK_FALSE(single.warnings.empty());
    CHECK_THROWS_AS(gbm_fit(X, std::vector<double>(300, 0.5), p), DataError);
    CHECK_THROWS_AS(gbm_predict(single, Matrix(2, 5)), DataError);
    GbmParams bad;
    bad.learning_rate = 0;
    CHECK_THROWS_AS(gbm_fit(X, y, bad), UsageError);
}

TEST_CASE("GP posterior matches a dense inverse") {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> pos(0, 5000), var(0.5, 3), len(300, 3000), noise(0.01, 1.0);
    std::normal_distribution<double> N;
    for (int inst = 0; inst < 100; ++inst) {
        const std::size_t n = 1 + static_cast<std::size_t>(inst) % 8, m = 5;
        std::vector<geo::PlanePoint> X(n), T(m);
        std::vector<double> y(n);
        for (auto& p : X) p = {pos(rng), pos(rng)};
        for (auto& p : T) p = {pos(rng), pos(rng)};
        for (auto& v : y) v = N(rng) * 2 + 1;
        RbfKernel k{var(rng), len(rng), noise(rng)};
        auto model = gp_fit(X, y, k);
        auto pred = gp_predict(model, T, true);

        Eigen::MatrixXd K(n, n);
        for (std::size_t a = 0; a < n; ++a) {
            for (std::size_t b = 0; b < n; ++b) {
                double d2 = (X[a].x - X[b].x) * (X[a].x - X[b].x) + (X[a].y - X[b].y) * (X[a].y - X[b].y);
                K(a, b) = k.variance * std::exp(-d2 / (2 * k.lengthscale * k.lengthscale)) + (a == b ? k.noise : 0);
            }
        }
        Eigen::MatrixXd Kinv = K.inverse();
        const double ybar = mean(y);
        Eigen::VectorXd yc(n);
        for (std::size_t a = 0; a < n; ++a) yc[a] = y[a] - ybar;
        for (std::size_t t = 0; t < m; ++t) {
            Eigen::VectorXd ks(n);
            for (std::size_t a = 0; a < n; ++a) ks[a] = rbf_kernel(T[t], X[a], k.variance, k.lengthscale);
            double mu = ybar + ks.dot(Kinv * yc);
            double v = k.variance - ks.dot(Kinv * ks);
            CHECK(std::abs(pred.mean[t] - mu) <= 1e-8 * std::max(1.0, std::abs(mu)));
            CHECK(std::abs(pred.variance[t] - v) <= 1e-8 * std::max(k.variance, std::abs(v)));
        }
        double lml = -0.5 * yc.dot(Kinv * yc) - 0.5 * std::log(K.determinant()) -
                     0.5 * static_cast<double>(n) * std::log(2 * std::numbers::pi);
        CHECK(log_marginal_likelihood(model) == doctest::Approx(lml).epsilon(1e-8));
    }
}

TEST_CASE("GP refactor reproduces the fitted factor") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> pos(0, 1000);
    std::vector<geo::PlanePoint> X(30);
    std::vector<double> y(30);
    for (std::size_t i = 0; i < 30; ++i) {
        X[i] = {pos(rng), pos(rng)};
        y[i] = std::sin(X[i].x / 200);
    }
    auto m = gp_fit(X, y, RbfKernel{1.0, 250.0, 0.05});
    auto copy = m;
    copy.chol.resize(0, 0);
    gp_refactor(copy);
    auto a = gp_predict(m, X).mean, b = gp_predict(copy, X).mean;
    for (std::size_t i = 0; i < 30; ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-12));
}

TEST_CASE("GP grid search keeps the best likelihood") {
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> pos(0, 4000);
    std::normal_distribution<double> N;
    std::vector<geo::PlanePoint> X(60);
    std::vector<double> y(60);
    for (std::size_t i = 0; i < 60; ++i) {
        X[i] = {pos(rng), pos(rng)};
        y[i] = std::sin(X[i].x / 700) + std::cos(X[i].y / 900) + 0.1 * N(rng);
    }
    auto fit = gp_fit_grid(X, y);
    CHECK(fit.grid.size() == 20);
    double best = -1e300;
    for (const auto& e : fit.grid) best = std::max(best, e.log_marginal_likelihood);
    CHECK(log_marginal_likelihood(fit.model) == doctest::Approx(best).epsilon(1e-9));
    for (const auto& e : fit.grid) {
        // the closed-form variance maximizes the likelihood along its own axis
        for (double scale : {0.8, 1.25}) {
            RbfKernel k{e.variance * scale, e.lengthscale, e.noise_ratio * e.variance * scale};
            CHECK(log_marginal_likelihood(gp_fit(X, y, k)) <= e.log_marginal_likelihood + 1e-9);
        }
    }
    CHECK(median_pairwise_distance(std::vector<geo::PlanePoint>{{0, 0}, {3, 4}, {6, 8}}) == 5.0);
}

TEST_CASE("logistic gradient matches finite differences") {
    std::mt19937_64 rng(14);
    std::normal_distribution<double> N;
    for (int inst = 0; inst < 20; ++inst) {
        Matrix Z = random_X(rng, 40, 3);
        auto y = nonlinear_labels(rng, Z);
        std::vector<double> beta(4);
        for (auto& b : beta) b = N(rng);
        const double l2 = inst % 3;
        auto g = logistic_gradient(Z, y, beta, l2);
        for (std::size_t j = 0; j < beta.size(); ++j) {
            const double h = 1e-6;
            auto up = beta, dn = beta;
            up[j] += h;
            dn[j] -= h;
            double fd = (logistic_objective(Z, y, up, l2) - logistic_objective(Z, y, dn, l2)) / (2 * h);
            CHECK(g[j] == doctest::Approx(fd).epsilon(1e-6).scale(1.0));
        }
    }
}

TEST_CASE("logistic fit reaches a stationary point") {
    std::mt19937_64 rng(15);
    Matrix X = random_X(rng, 500, 3);
    for (std::size_t i = 0; i < 500; ++i) X(i, 2) = 100 + 30 * X(i, 2);
    std::vector<double> y(500);
    std::uniform_real_distribution<double> u;
    for (std::size_t i = 0; i < 500; ++i) y[i] = u(rng) < sigmoid(X(i, 0) - 0.02 * (X(i, 2) - 100)) ? 1 : 0;
    auto m = logistic_fit(X, y, LogisticParams{});
    CHECK(m.converged);
    CHECK(m.gradient_norm < 1e-8);
    CHECK(m.weights[0] > 0);
    CHECK(m.weights[2] < 0);
    Matrix Z = standardize(m, X);
    std::vector<double> beta{m.intercept, m.weights[0], m.weights[1], m.weights[2]};
    const double at = logistic_objective(Z, y, beta, 1.0);
    for (std::size_t j = 0; j < 4; ++j) {
        auto b = beta;
        b[j] += 0.01;
        CHECK(logistic_objective(Z, y, b, 1.0) > at);
    }
}

TEST_CASE("separable data stays finite under the ridge penalty") {
    Matrix X(6, 1);
    std::vector<double> y{0, 0, 0, 1, 1, 1};
    for (std::size_t i = 0; i < 6; ++i) X(i, 0) = static_cast<double>(i);
    auto m = logistic_fit(X, y, LogisticParams{});
    CHECK(std::isfinite(m.weights[0]));
    auto p = logistic_predict(m, X);
    for (std::size_t i = 1; i < 6; ++i) CHECK(p[i] > p[i - 1]);
    Matrix C(4, 2, 1.0);  // constant column
    C(1, 1) = 2;
    auto mc = logistic_fit(C, std::vector<double>{0, 1, 0, 1}, LogisticParams{});
    CHECK(std::isfinite(mc.intercept));
}

TEST_CASE("one bootstrap-free tree over all features is a single CART") {
    std::mt19937_64 rng(16);
    Matrix X = random_X(rng, 120, 4);
    auto y = nonlinear_labels(rng, X);
    ForestParams fp;
    fp.n_trees = 1;
    fp.bootstrap = false;
    fp.features_per_split = 4;
    auto forest = rf_fit(X, y, fp);
    auto tree = fit_tree(X, y, TreeParams{fp.max_depth, fp.min_samples_leaf, 0});
    auto p = rf_predict(forest, X);
    for (std::size_t i = 0; i < 120; ++i) CHECK(p[i] == tree.predict(X.row(i)));
}

TEST_CASE("forest is thread independent and outputs probabilities") {
    std::mt19937_64 rng(17);
    Matrix X = random_X(rng, 200, 5);
    auto y = nonlinear_labels(rng, X);
    ForestParams fp;
    fp.n_trees = 25;
    fp.seed = 4;
    auto a = rf_predict(rf_fit(X, y, fp, 1), X);
    auto b = rf_predict(rf_fit(X, y, fp, 4), X);
    CHECK(a == b);
    for (double v : a) {
        CHECK(v >= 0);
        CHECK(v <= 1);
    }
    CHECK(rf_fit(X, y, fp).features_per_split == 3);
    fp.seed = 5;
    CHECK(rf_predict(rf_fit(X, y, fp), X) != a);
}

TEST_CASE("split-gain importance") {
    std::mt19937_64 rng(18);
    Matrix X = random_X(rng, 400, 3);
    std::vector<double> y(400);
    for (std::size_t i = 0; i < 400; ++i) y[i] = 5 * X(i, 1) + 0.5 * X(i, 0);
    GbmParams p;
    p.n_trees = 30;
    auto imp = feature_importance(gbm_fit(X, y, p));
    CHECK(imp.has_splits);
    double total = 0;
    for (double s : imp.share) {
        CHECK(s >= 0);
        total += s;
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(importance_ranking(imp).front() == 1);
    p.n_trees = 0;
    auto none = feature_importance(gbm_fit(X, y, p));
    CHECK_FALSE(none.has_splits);
    for (double s : none.share) CHECK(s == 0);
    CHECK(importance_ranking(none) == std::vector<std::size_t>{0, 1, 2});
}
