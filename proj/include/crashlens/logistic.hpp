#pragma once

#include <span>
#include <string>
#include <vector>

#include "crashlens/common.hpp"

namespace crashlens::learn {

struct LogisticParams {
    double l2 = 1.0;
    std::size_t max_iter = 100;
    double tol = 1e-8;
};

/// Linear logit on internally standardized features.
struct LogisticModel {
    std::vector<double> mean;
    std::vector<double> scale;
    std::vector<double> weights;  // standardized space
    double intercept = 0.0;
    bool converged = false;
    std::size_t iterations = 0;
    double gradient_norm = 0.0;
    std::vector<std::string> warnings;
};

/// Objective minimized by logistic_fit, on standardized features Z and
/// beta = (intercept, w...):
///   J = (1/n) sum_i [log(1 + exp(eta_i)) - y_i eta_i] + (l2 / (2n)) |w|^2
double logistic_objective(const Matrix& Z, std::span<const double> y, std::span<const double> beta, double l2);
std::vector<double> logistic_gradient(const Matrix& Z, std::span<const double> y, std::span<const double> beta,
                                      double l2);

/// Newton iterations with step halving until |grad J| < tol. Without
/// convergence in max_iter the best iterate is returned with a warning.
LogisticModel logistic_fit(const Matrix& X, std::span<const double> y, const LogisticParams& params);

std::vector<double> logistic_predict(const LogisticModel& model, const Matrix& X);

/// Applies the model's standardization.
Matrix standardize(const LogisticModel& model, const Matrix& X);

}  // namespace crashlens::learn
