#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "crashlens/geo.hpp"

namespace crashlens::learn {

struct RbfKernel {
    double variance = 1.0;     // sigma_f^2
    double lengthscale = 1.0;  // meters
    double noise = 0.1;        // sigma_n^2
};

/// variance * exp(-|a-b|^2 / (2 lengthscale^2))
double rbf_kernel(const geo::PlanePoint& a, const geo::PlanePoint& b, double variance, double lengthscale);

struct GpModel {
    std::vector<geo::PlanePoint> train_inputs;  // centered at input_mean
    geo::PlanePoint input_mean;
    std::vector<double> alpha;                  // (K + noise I)^-1 (y - y_mean)
    RbfKernel kernel;
    double y_mean = 0.0;
    double jitter = 0.0;  // extra diagonal added beyond kernel.noise to factorize
    Eigen::MatrixXd chol;  // lower Cholesky factor of K + (noise + jitter) I
};

/// Exact GP regression. Targets are centered (mean stored). The noise
/// variance is floored at 1e-8 * variance; if the factorization still fails
/// the diagonal jitter grows tenfold up to three times before DataError.
GpModel gp_fit(std::span<const geo::PlanePoint> X, std::span<const double> y, const RbfKernel& kernel);

/// Rebuilds `chol` and `alpha` from inputs, kernel and targets (used when a
/// model is loaded without its factor).
void gp_refactor(GpModel& model);

struct GpPrediction {
    std::vector<double> mean;
    std::vector<double> variance;  // latent variance; filled only when requested
};

GpPrediction gp_predict(const GpModel& model, std::span<const geo::PlanePoint> X, bool with_variance = false);

/// log p(y | X, kernel) of the fitted model.
double log_marginal_likelihood(const GpModel& model);

double median_pairwise_distance(std::span<const geo::PlanePoint> X);

struct GpGridOptions {
    std::vector<double> lengthscale_multipliers = {0.25, 0.5, 1.0, 2.0, 4.0};  // x median pairwise distance
    std::vector<double> noise_ratios = {0.01, 0.1, 0.5, 1.0};                  // noise / variance
};

struct GpGridEntry {
    double lengthscale = 0.0;
    double noise_ratio = 0.0;
    double variance = 0.0;
    double log_marginal_likelihood = 0.0;
};

struct GpGridFit {
    GpModel model;
    std::vector<GpGridEntry> grid;
};

/// Grid search over lengthscale and noise ratio, maximizing the log marginal
/// likelihood. For each grid point the signal variance is set to its
/// closed-form maximizer y^T (R + r I)^-1 y / n, so one factorization per
/// point suffices.
GpGridFit gp_fit_grid(std::span<const geo::PlanePoint> X, std::span<const double> y, const GpGridOptions& opts = {});

}  // namespace crashlens::learn
