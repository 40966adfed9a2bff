#include "crashlens/tree.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace crashlens::learn {

std::size_t DecisionTree::leaf_index(std::span<const double> x) const {
    std::size_t i = 0;
    while (nodes_[i].feature >= 0) {
        const auto& n = nodes_[i];
        i = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
    }
    return i;
}

std::size_t DecisionTree::depth() const {
    if (nodes_.empty()) return 0;
    std::vector<std::size_t> d(nodes_.size(), 0);
    std::size_t best = 0;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        if (nodes_[i].feature >= 0) {
            d[static_cast<std::size_t>(nodes_[i].left)] = d[i] + 1;
            d[static_cast<std::size_t>(nodes_[i].right)] = d[i] + 1;
        }
        best = std::max(best, d[i]);
    }
    return best;
}

std::size_t DecisionTree::leaf_count() const {
    return static_cast<std::size_t>(
        std::count_if(nodes_.begin(), nodes_.end(), [](const TreeNode& n) { return n.feature < 0; }));
}

SortedColumns::SortedColumns(const Matrix& X) : order_(X.cols()), values_(X.cols()), rows_(X.rows()) {
    for (std::size_t f = 0; f < X.cols(); ++f) {
        values_[f].resize(X.rows());
        for (std::size_t r = 0; r < X.rows(); ++r) values_[f][r] = X(r, f);
        auto& o = order_[f];
        o.resize(X.rows());
        std::iota(o.begin(), o.end(), 0u);
        std::stable_sort(o.begin(), o.end(), [&](std::uint32_t a, std::uint32_t b) { return X(a, f) < X(b, f); });
    }
}

namespace {

struct Split {
    int feature = -1;
    double threshold = 0.0;
    double gain = 0.0;
};

class TreeBuilder {
public:
    TreeBuilder(const Matrix& X, std::span<const double> t, std::span<const double> w, const TreeParams& p,
                std::mt19937_64* rng)
        : X_(X), t_(t), w_(w), p_(p), rng_(rng), goes_left_(X.rows(), 0) {}

    DecisionTree build(const SortedColumns& sorted) {
        const std::size_t d = X_.cols();
        sorted_ = &sorted;
        seg_.resize(d);
        for (std::size_t f = 0; f < d; ++f) {
            auto col = sorted.column(f);
            seg_[f].reserve(col.size());
            for (auto r : col) {
                if (w_[r] > 0) seg_[f].push_back(r);
            }
        }
        if (seg_.empty() || seg_[0].empty()) throw DataError("fit_tree: no rows with positive weight");
        scratch_.resize(seg_[0].size());
        features_.resize(d);
        std::iota(features_.begin(), features_.end(), 0);
        grow(0, seg_[0].size(), 0);
        return DecisionTree(std::move(nodes_), d);
    }

private:
    int grow(std::size_t begin, std::size_t end, std::size_t depth) {
        const int id = static_cast<int>(nodes_.size());
        nodes_.emplace_back();
        double sw = 0.0, swt = 0.0, swt2 = 0.0;
        for (std::size_t i = begin; i < end; ++i) {
            auto r = seg_[0][i];
            sw += w_[r];
            swt += w_[r] * t_[r];
            swt2 += w_[r] * t_[r] * t_[r];
        }
        const double mean = swt / sw;
        nodes_[id].value = mean;
        nodes_[id].weight = sw;
        if (depth >= p_.max_depth || sw < 2.0 * static_cast<double>(std::max<std::size_t>(p_.min_samples_leaf, 1))) {
            return id;
        }
        double sse = 0.0;
        for (std::size_t i = begin; i < end; ++i) {
            auto r = seg_[0][i];
            sse += w_[r] * (t_[r] - mean) * (t_[r] - mean);
        }
        // Constant targets up to rounding: nothing to split.
        if (!(sse > 1e-24 * swt2)) return id;

        Split best = find_split(begin, end, sw, mean);
        if (best.feature < 0 || !(best.gain > 1e-10 * sse)) return id;

        const auto f = static_cast<std::size_t>(best.feature);
        std::size_t n_left = 0;
        for (std::size_t i = begin; i < end; ++i) {
            auto r = seg_[f][i];
            bool left = sorted_->values(f)[r] <= best.threshold;
            goes_left_[r] = left;
            n_left += left;
        }
        for (auto& s : seg_) stable_partition(s, begin, end);
        const std::size_t mid = begin + n_left;

        nodes_[id].feature = best.feature;
        nodes_[id].threshold = best.threshold;
        nodes_[id].gain = best.gain;
        int l = grow(begin, mid, depth + 1);
        int r = grow(mid, end, depth + 1);
        nodes_[id].left = l;
        nodes_[id].right = r;
        return id;
    }

    void stable_partition(std::vector<std::uint32_t>& s, std::size_t begin, std::size_t end) {
        std::size_t lo = begin, hi = 0;
        for (std::size_t i = begin; i < end; ++i) {
            auto r = s[i];
            if (goes_left_[r]) {
                s[lo++] = r;
            } else {
                scratch_[hi++] = r;
            }
        }
        std::copy(scratch_.begin(), scratch_.begin() + static_cast<std::ptrdiff_t>(hi), s.begin() + static_cast<std::ptrdiff_t>(lo));
    }

    // Gains are computed on targets centered at the node mean, which keeps
    // rounding error proportional to the node's squared error.
    Split find_split(std::size_t begin, std::size_t end, double sw, double mean) {
        const std::size_t d = X_.cols();
        std::size_t n_candidates = p_.features_per_split == 0 ? d : std::min(p_.features_per_split, d);
        if (n_candidates < d) {
            // Uniform subset; evaluated in ascending order to keep the tie rule.
            for (std::size_t i = 0; i < n_candidates; ++i) {
                std::uniform_int_distribution<std::size_t> pick(i, d - 1);
                std::swap(features_[i], features_[pick(*rng_)]);
            }
            std::sort(features_.begin(), features_.begin() + static_cast<std::ptrdiff_t>(n_candidates));
        }
        const double min_leaf = static_cast<double>(p_.min_samples_leaf);
        double swt = 0.0;
        for (std::size_t i = begin; i < end; ++i) {
            auto r = seg_[0][i];
            swt += w_[r] * (t_[r] - mean);
        }
        const double parent = swt * swt / sw;
        Split best;
        for (std::size_t c = 0; c < n_candidates; ++c) {
            const std::size_t f = features_[c];
            const auto& s = seg_[f];
            const double* xf = sorted_->values(f).data();
            double lw = 0.0, lwt = 0.0;
            for (std::size_t i = begin; i + 1 < end; ++i) {
                auto r = s[i];
                lw += w_[r];
                lwt += w_[r] * (t_[r] - mean);
                const double x = xf[r], x_next = xf[s[i + 1]];
                if (!(x < x_next)) continue;
                const double rw = sw - lw;
                if (lw < min_leaf || rw < min_leaf) continue;
                const double rwt = swt - lwt;
                const double gain = lwt * lwt / lw + rwt * rwt / rw - parent;
                if (gain > best.gain) {
                    double thr = x + (x_next - x) / 2.0;
                    if (!(thr < x_next)) thr = x;
                    best = {static_cast<int>(f), thr, gain};
                }
            }
        }
        if (n_candidates < d) std::sort(features_.begin(), features_.end());
        return best;
    }

    const Matrix& X_;
    const SortedColumns* sorted_ = nullptr;
    std::span<const double> t_;
    std::span<const double> w_;
    const TreeParams& p_;
    std::mt19937_64* rng_;
    std::vector<std::vector<std::uint32_t>> seg_;
    std::vector<std::uint32_t> scratch_;
    std::vector<char> goes_left_;
    std::vector<std::size_t> features_;
    std::vector<TreeNode> nodes_;
};

}  // namespace

DecisionTree fit_tree(const Matrix& X, const SortedColumns& sorted, std::span<const double> targets,
                      std::span<const double> weights, const TreeParams& params, std::mt19937_64* rng) {
    if (X.rows() == 0 || X.cols() == 0) throw DataError("fit_tree: empty data");
    if (targets.size() != X.rows() || weights.size() != X.rows() || sorted.rows() != X.rows()) {
        throw DataError("fit_tree: row count mismatch");
    }
    for (double t : targets) {
        if (!std::isfinite(t)) throw DataError("fit_tree: non-finite target");
    }
    if (params.features_per_split != 0 && params.features_per_split < X.cols() && rng == nullptr) {
        throw UsageError("fit_tree: feature subsampling needs an RNG");
    }
    TreeBuilder builder(X, targets, weights, params, rng);
    return builder.build(sorted);
}

DecisionTree fit_tree(const Matrix& X, std::span<const double> targets, const TreeParams& params) {
    if (X.rows() == 0) throw DataError("fit_tree: empty data");
    SortedColumns sorted(X);
    std::vector<double> w(X.rows(), 1.0);
    return fit_tree(X, sorted, targets, w, params, nullptr);
}

}  // namespace crashlens::learn
