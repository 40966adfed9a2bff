#include "crashlens/smote.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace crashlens::smote {

void SmoteConfig::validate() const {
    if (k_neighbors < 1) throw UsageError("smote.k_neighbors must be >= 1");
    if (!(target_ratio > 0.0 && target_ratio <= 1.0)) throw UsageError("smote.target_ratio must be in (0, 1]");
}

std::vector<std::vector<std::size_t>> nearest_neighbors(const Matrix& rows, std::size_t k) {
    const std::size_t m = rows.rows(), d = rows.cols();
    // z-score with the rows' own statistics; constant columns keep scale 1.
    Matrix z(m, d);
    for (std::size_t c = 0; c < d; ++c) {
        double mean = 0.0;
        for (std::size_t r = 0; r < m; ++r) mean += rows(r, c);
        mean /= static_cast<double>(m);
        double var = 0.0;
        for (std::size_t r = 0; r < m; ++r) var += (rows(r, c) - mean) * (rows(r, c) - mean);
        double sd = std::sqrt(var / static_cast<double>(m));
        if (!(sd > 0.0)) sd = 1.0;
        for (std::size_t r = 0; r < m; ++r) z(r, c) = (rows(r, c) - mean) / sd;
    }
    k = std::min(k, m > 0 ? m - 1 : 0);
    std::vector<std::vector<std::size_t>> out(m);
    std::vector<std::pair<double, std::size_t>> cand;
    cand.reserve(m);
    // TODO: swap the brute-force scan for a k-d tree once minority classes
    // routinely exceed ~50k rows; this is O(m^2 d).
    for (std::size_t i = 0; i < m; ++i) {
        cand.clear();
        auto zi = z.row(i);
        for (std::size_t j = 0; j < m; ++j) {
            if (j == i) continue;
            auto zj = z.row(j);
            double dist = 0.0;
            for (std::size_t c = 0; c < d; ++c) dist += (zi[c] - zj[c]) * (zi[c] - zj[c]);
            cand.emplace_back(dist, j);
        }
        std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(k), cand.end());
        out[i].reserve(k);
        for (std::size_t t = 0; t < k; ++t) out[i].push_back(cand[t].second);
    }
    return out;
}

SmoteOutput smote_oversample(const Matrix& minority, const SmoteConfig& cfg, std::size_t n_needed) {
    cfg.validate();
    const std::size_t m = minority.rows(), d = minority.cols();
    if (m < 2) throw DataError("SMOTE needs at least 2 minority rows, got " + std::to_string(m));
    SmoteOutput out;
    out.synthetic = Matrix(n_needed, d);
    if (n_needed == 0) return out;

    auto knn = nearest_neighbors(minority, cfg.k_neighbors);
    std::mt19937_64 rng(cfg.seed);
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    out.base.reserve(n_needed);
    out.neighbor.reserve(n_needed);
    for (std::size_t s = 0; s < n_needed; ++s) {
        if (s % m == 0) std::shuffle(order.begin(), order.end(), rng);
        const std::size_t base = order[s % m];
        const auto& nb = knn[base];
        std::uniform_int_distribution<std::size_t> pick(0, nb.size() - 1);
        const std::size_t other = nb[pick(rng)];
        auto src = minority.row(base);
        auto dst = minority.row(other);
        auto row = out.synthetic.row(s);
        double u = unit(rng);
        for (std::size_t c = 0; c < d; ++c) {
            if (cfg.per_feature) u = unit(rng);
            row[c] = src[c] + u * (dst[c] - src[c]);
        }
        out.base.push_back(base);
        out.neighbor.push_back(other);
    }
    return out;
}

std::size_t smote_needed(std::size_t n_minority, std::size_t n_majority, double target_ratio) {
    auto target = static_cast<std::size_t>(std::llround(target_ratio * static_cast<double>(n_majority)));
    return target > n_minority ? target - n_minority : 0;
}

BalancedData smote_balance(const Matrix& X, std::span<const double> y, const SmoteConfig& cfg) {
    if (X.rows() != y.size()) throw DataError("SMOTE: feature rows and labels differ in length");
    std::size_t n_pos = 0;
    for (double v : y) {
        if (v != 0.0 && v != 1.0) throw DataError("SMOTE: labels must be 0 or 1");
        n_pos += v == 1.0;
    }
    const std::size_t n_neg = y.size() - n_pos;
    BalancedData out;
    out.minority_label = n_pos <= n_neg ? 1.0 : 0.0;
    const std::size_t n_min = std::min(n_pos, n_neg), n_maj = std::max(n_pos, n_neg);

    Matrix minority(0, X.cols());
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (y[i] == out.minority_label) minority.append_row(X.row(i));
    }
    auto synth = smote_oversample(minority, cfg, smote_needed(n_min, n_maj, cfg.target_ratio));

    out.X = X;
    out.y.assign(y.begin(), y.end());
    for (std::size_t s = 0; s < synth.synthetic.rows(); ++s) {
        out.X.append_row(synth.synthetic.row(s));
        out.y.push_back(out.minority_label);
    }
    out.n_synthetic = synth.synthetic.rows();
    return out;
}

}  // namespace crashlens::smote
