#include "crashlens/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <random>

#include "crashlens/common.hpp"

namespace crashlens::eval {

double r_squared(std::span<const double> y, std::span<const double> y_hat) {
    if (y.size() != y_hat.size()) throw DataError("r_squared: length mismatch");
    if (y.size() < 2) throw DataError("r_squared: need at least 2 values");
    double mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
    double ss_tot = 0.0, ss_res = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        ss_tot += (y[i] - mean) * (y[i] - mean);
        ss_res += (y[i] - y_hat[i]) * (y[i] - y_hat[i]);
    }
    if (!(ss_tot > 0.0)) throw DataError("r_squared: zero variance");
    return 1.0 - ss_res / ss_tot;
}

RocResult roc_auc(std::span<const double> scores, std::span<const double> labels) {
    if (scores.size() != labels.size()) throw DataError("roc_auc: length mismatch");
    std::size_t n_pos = 0;
    for (double l : labels) {
        if (l != 0.0 && l != 1.0) throw DataError("roc_auc: labels must be 0 or 1");
        n_pos += l == 1.0;
    }
    const std::size_t n = scores.size(), n_neg = n - n_pos;
    if (n_pos == 0 || n_neg == 0) throw DataError("roc_auc: both classes must be present");
    for (double s : scores) {
        if (std::isnan(s)) throw DataError("roc_auc: NaN score");
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    RocResult res;
    res.curve.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});
    // Rank statistic: with descending order, rank_asc = n - position. Tied
    // blocks share their average rank.
    double rank_sum_pos = 0.0;
    std::size_t tp = 0, fp = 0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        std::size_t block_pos = 0;
        while (j < n && scores[order[j]] == scores[order[i]]) {
            block_pos += labels[order[j]] == 1.0;
            ++j;
        }
        // Ascending ranks of positions i..j-1 are n-j+1 .. n-i.
        double avg_rank = (static_cast<double>(n - j + 1) + static_cast<double>(n - i)) / 2.0;
        rank_sum_pos += avg_rank * static_cast<double>(block_pos);
        tp += block_pos;
        fp += (j - i) - block_pos;
        res.curve.push_back({scores[order[i]], static_cast<double>(fp) / static_cast<double>(n_neg),
                             static_cast<double>(tp) / static_cast<double>(n_pos)});
        i = j;
    }
    const double np = static_cast<double>(n_pos), nn = static_cast<double>(n_neg);
    res.auc = (rank_sum_pos - np * (np + 1.0) / 2.0) / (np * nn);
    return res;
}

double trapezoid_area(const std::vector<RocPoint>& curve) {
    double area = 0.0;
    for (std::size_t i = 1; i < curve.size(); ++i) {
        area += (curve[i].fpr - curve[i - 1].fpr) * (curve[i].tpr + curve[i - 1].tpr) / 2.0;
    }
    return area;
}

std::vector<std::size_t> FoldPlan::test_rows(std::size_t fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < assignment.size(); ++i) {
        if (assignment[i] == fold) out.push_back(i);
    }
    return out;
}

std::vector<std::size_t> FoldPlan::train_rows(std::size_t fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < assignment.size(); ++i) {
        if (assignment[i] != fold) out.push_back(i);
    }
    return out;
}

FoldPlan kfold(std::size_t n, std::size_t k, std::uint64_t seed, std::optional<std::span<const double>> stratify_labels) {
    if (k < 2) throw UsageError("kfold: k must be at least 2");
    if (k > n) throw DataError("kfold: k=" + std::to_string(k) + " exceeds row count " + std::to_string(n));
    FoldPlan plan;
    plan.k = k;
    plan.seed = seed;
    plan.assignment.assign(n, 0);
    std::mt19937_64 rng(seed);

    std::vector<std::vector<std::size_t>> groups;
    if (stratify_labels) {
        if (stratify_labels->size() != n) throw DataError("kfold: label count does not match rows");
        plan.stratified = true;
        groups.resize(2);
        for (std::size_t i = 0; i < n; ++i) groups[(*stratify_labels)[i] == 1.0 ? 1 : 0].push_back(i);
    } else {
        groups.resize(1);
        groups[0].resize(n);
        std::iota(groups[0].begin(), groups[0].end(), 0);
    }
    std::size_t counter = 0;
    for (auto& g : groups) {
        std::shuffle(g.begin(), g.end(), rng);
        for (auto row : g) plan.assignment[row] = counter++ % k;
    }
    return plan;
}

FoldStats fold_stats(std::span<const double> values) {
    FoldStats s;
    if (values.empty()) return s;
    s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - s.mean) * (v - s.mean);
        s.stddev = std::sqrt(ss / static_cast<double>(values.size() - 1));
    }
    return s;
}

void write_roc_csv(std::ostream& out, const RocResult& roc) {
    out << "threshold,fpr,tpr\n";
    for (const auto& p : roc.curve) {
        out << (std::isinf(p.threshold) ? std::string("inf") : format_double(p.threshold)) << ','
            << format_double(p.fpr) << ',' << format_double(p.tpr) << '\n';
    }
}

void write_roc_svg(std::ostream& out, const RocResult& roc, const std::string& title) {
    // Plot area 80..720 on both axes; y grows downward in SVG.
    constexpr double lo = 80.0, hi = 720.0;
    auto px = [&](double v) { return lo + v * (hi - lo); };
    auto py = [&](double v) { return lo + hi - px(v); };
    char buf[128];
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800\" height=\"800\" viewBox=\"0 0 800 800\">\n";
    out << "<rect width=\"800\" height=\"800\" fill=\"white\"/>\n";
    std::string safe_title;
    for (char c : title) {
        if (c == '<') safe_title += "&lt;";
        else if (c == '>') safe_title += "&gt;";
        else if (c == '&') safe_title += "&amp;";
        else safe_title += c;
    }
    std::snprintf(buf, sizeof buf, "%.4f", roc.auc);
    out << "<text x=\"400\" y=\"40\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"20\">"
        << safe_title << " (AUC " << buf << ")</text>\n";
    out << "<line x1=\"" << px(0) << "\" y1=\"" << py(0) << "\" x2=\"" << px(1) << "\" y2=\"" << py(0)
        << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << px(0) << "\" y1=\"" << py(0) << "\" x2=\"" << px(0) << "\" y2=\"" << py(1)
        << "\" stroke=\"black\"/>\n";
    for (int t = 0; t <= 10; ++t) {
        double v = t / 10.0;
        std::snprintf(buf, sizeof buf, "%.1f", v);
        out << "<text x=\"" << px(v) << "\" y=\"" << py(0) + 20 << "\" text-anchor=\"middle\" font-size=\"12\">" << buf
            << "</text>\n";
        out << "<text x=\"" << px(0) - 10 << "\" y=\"" << py(v) + 4 << "\" text-anchor=\"end\" font-size=\"12\">" << buf
            << "</text>\n";
    }
    out << "<text x=\"400\" y=\"770\" text-anchor=\"middle\" font-size=\"14\">False positive rate</text>\n";
    out << "<text x=\"25\" y=\"400\" text-anchor=\"middle\" font-size=\"14\" transform=\"rotate(-90 25 400)\">"
           "True positive rate</text>\n";
    out << "<line x1=\"" << px(0) << "\" y1=\"" << py(0) << "\" x2=\"" << px(1) << "\" y2=\"" << py(1)
        << "\" stroke=\"gray\" stroke-dasharray=\"6,6\"/>\n";
    out << "<polyline fill=\"none\" stroke=\"#c0392b\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < roc.curve.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%s%.2f,%.2f", i ? " " : "", px(roc.curve[i].fpr), py(roc.curve[i].tpr));
        out << buf;
    }
    out << "\"/>\n</svg>\n";
}

}  // namespace crashlens::eval
