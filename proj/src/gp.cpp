#include "crashlens/gp.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "crashlens/common.hpp"

namespace crashlens::learn {

namespace {

using Eigen::Index;

Eigen::MatrixXd correlation_matrix(std::span<const geo::PlanePoint> X, double lengthscale) {
    const auto n = static_cast<Index>(X.size());
    Eigen::MatrixXd R(n, n);
    for (Index i = 0; i < n; ++i) {
        R(i, i) = 1.0;
        for (Index j = 0; j < i; ++j) {
            double v = rbf_kernel(X[static_cast<std::size_t>(i)], X[static_cast<std::size_t>(j)], 1.0, lengthscale);
            R(i, j) = v;
            R(j, i) = v;
        }
    }
    return R;
}

/// Cholesky of A + diag, retrying with tenfold jitter. Returns the jitter used.
double factorize(Eigen::MatrixXd A, double diag, double base_jitter, Eigen::MatrixXd& L) {
    double jitter = 0.0;
    for (int attempt = 0; attempt <= 3; ++attempt) {
        Eigen::MatrixXd M = A;
        M.diagonal().array() += diag + jitter;
        Eigen::LLT<Eigen::MatrixXd> llt(M);
        if (llt.info() == Eigen::Success) {
            L = llt.matrixL();
            return jitter;
        }
        jitter = jitter == 0.0 ? base_jitter : jitter * 10.0;
    }
    throw DataError("GP: kernel matrix is not positive definite after jitter retries");
}

std::vector<geo::PlanePoint> center(std::span<const geo::PlanePoint> X, geo::PlanePoint& mean) {
    mean = {0.0, 0.0};
    for (const auto& p : X) {
        mean.x += p.x / static_cast<double>(X.size());
        mean.y += p.y / static_cast<double>(X.size());
    }
    std::vector<geo::PlanePoint> out;
    out.reserve(X.size());
    for (const auto& p : X) out.push_back({p.x - mean.x, p.y - mean.y});
    return out;
}

void check_inputs(std::span<const geo::PlanePoint> X, std::span<const double> y) {
    if (X.empty()) throw DataError("GP: no training points");
    if (X.size() != y.size()) throw DataError("GP: input and target counts differ");
    for (const auto& p : X) {
        if (!std::isfinite(p.x) || !std::isfinite(p.y)) throw DataError("GP: non-finite input");
    }
    for (double v : y) {
        if (!std::isfinite(v)) throw DataError("GP: non-finite target");
    }
}

}  // namespace

double rbf_kernel(const geo::PlanePoint& a, const geo::PlanePoint& b, double variance, double lengthscale) {
    double dx = a.x - b.x, dy = a.y - b.y;
    return variance * std::exp(-(dx * dx + dy * dy) / (2.0 * lengthscale * lengthscale));
}

void gp_refactor(GpModel& model) {
    const auto& k = model.kernel;
    if (!(k.variance > 0) || !(k.lengthscale > 0)) throw DataError("GP: kernel variance and lengthscale must be > 0");
    Eigen::MatrixXd K = correlation_matrix(model.train_inputs, k.lengthscale) * k.variance;
    model.jitter = factorize(std::move(K), k.noise, 1e-8 * k.variance, model.chol);
}

GpModel gp_fit(std::span<const geo::PlanePoint> X, std::span<const double> y, const RbfKernel& kernel) {
    check_inputs(X, y);
    GpModel model;
    model.kernel = kernel;
    model.kernel.noise = std::max(kernel.noise, 1e-8 * kernel.variance);
    model.train_inputs = center(X, model.input_mean);
    model.y_mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
    gp_refactor(model);
    Eigen::VectorXd yc(static_cast<Index>(y.size()));
    for (std::size_t i = 0; i < y.size(); ++i) yc[static_cast<Index>(i)] = y[i] - model.y_mean;
    Eigen::VectorXd a = model.chol.transpose().triangularView<Eigen::Upper>().solve(
        model.chol.triangularView<Eigen::Lower>().solve(yc));
    model.alpha.assign(a.data(), a.data() + a.size());
    return model;
}

GpPrediction gp_predict(const GpModel& model, std::span<const geo::PlanePoint> X, bool with_variance) {
    if (model.alpha.size() != model.train_inputs.size()) throw DataError("GP: model is not fitted");
    GpPrediction out;
    out.mean.resize(X.size());
    if (with_variance) out.variance.resize(X.size());
    const std::size_t n = model.train_inputs.size();
    Eigen::VectorXd kstar(static_cast<Index>(n));
    for (std::size_t q = 0; q < X.size(); ++q) {
        geo::PlanePoint p{X[q].x - model.input_mean.x, X[q].y - model.input_mean.y};
        double m = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double k = rbf_kernel(p, model.train_inputs[i], model.kernel.variance, model.kernel.lengthscale);
            kstar[static_cast<Index>(i)] = k;
            m += k * model.alpha[i];
        }
        out.mean[q] = m + model.y_mean;
        if (with_variance) {
            if (model.chol.rows() != static_cast<Index>(n)) throw DataError("GP: model has no factorization");
            Eigen::VectorXd v = model.chol.triangularView<Eigen::Lower>().solve(kstar);
            out.variance[q] = std::max(0.0, model.kernel.variance - v.squaredNorm());
        }
    }
    return out;
}

double log_marginal_likelihood(const GpModel& model) {
    const auto n = static_cast<Index>(model.alpha.size());
    // y_c = (K + s I) alpha, so y_c^T alpha = alpha^T L L^T alpha.
    Eigen::Map<const Eigen::VectorXd> a(model.alpha.data(), n);
    Eigen::VectorXd lt_a = model.chol.transpose() * a;
    double fit = lt_a.squaredNorm();
    double logdet = model.chol.diagonal().array().log().sum();
    return -0.5 * fit - logdet - 0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);
}

double median_pairwise_distance(std::span<const geo::PlanePoint> X) {
    if (X.size() < 2) return 0.0;
    std::vector<double> d;
    d.reserve(X.size() * (X.size() - 1) / 2);
    for (std::size_t i = 0; i < X.size(); ++i) {
        for (std::size_t j = i + 1; j < X.size(); ++j) d.push_back(std::hypot(X[i].x - X[j].x, X[i].y - X[j].y));
    }
    auto mid = d.begin() + static_cast<std::ptrdiff_t>(d.size() / 2);
    std::nth_element(d.begin(), mid, d.end());
    return *mid;
}

GpGridFit gp_fit_grid(std::span<const geo::PlanePoint> X, std::span<const double> y, const GpGridOptions& opts) {
    check_inputs(X, y);
    if (opts.lengthscale_multipliers.empty() || opts.noise_ratios.empty()) throw UsageError("GP grid is empty");
    geo::PlanePoint mean;
    auto centered = center(X, mean);
    double median = median_pairwise_distance(centered);
    if (!(median > 0.0)) median = 1.0;

    const auto n = static_cast<Index>(y.size());
    const double y_mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
    Eigen::VectorXd yc(n);
    for (Index i = 0; i < n; ++i) yc[i] = y[static_cast<std::size_t>(i)] - y_mean;
    const double y_var = yc.squaredNorm() / static_cast<double>(n);

    GpGridFit out;
    double best_lml = -std::numeric_limits<double>::infinity();
    RbfKernel best;
    for (double mult : opts.lengthscale_multipliers) {
        const double ell = mult * median;
        const Eigen::MatrixXd R = correlation_matrix(centered, ell);
        for (double ratio : opts.noise_ratios) {
            Eigen::MatrixXd L;
            double jitter = factorize(R, ratio, 1e-8, L);
            Eigen::VectorXd z = L.triangularView<Eigen::Lower>().solve(yc);
            // Profiled signal variance, floored for all-zero targets.
            double variance = std::max(z.squaredNorm() / static_cast<double>(n), 1e-12 * (1.0 + y_var));
            double lml = -0.5 * z.squaredNorm() / variance - 0.5 * static_cast<double>(n) * std::log(variance) -
                         L.diagonal().array().log().sum() - 0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);
            out.grid.push_back({ell, ratio, variance, lml});
            (void)jitter;
            if (lml > best_lml) {
                best_lml = lml;
                best = {variance, ell, ratio * variance};
            }
        }
    }
    out.model = gp_fit(X, y, best);
    return out;
}

}  // namespace crashlens::learn
