#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "crashlens/tree.hpp"

namespace crashlens::learn {

enum class Loss { Squared, Logistic };

std::string_view to_string(Loss l);
Loss parse_loss(std::string_view s);

struct GbmParams {
    std::size_t n_trees = 300;
    double learning_rate = 0.1;
    std::size_t max_depth = 3;
    std::size_t min_samples_leaf = 20;
    Loss loss = Loss::Squared;

    void validate() const;
};

/// score(x) = init_value + learning_rate * sum_t tree_t(x); logistic models
/// report sigmoid(score) as the probability of class 1.
struct GbmModel {
    std::vector<DecisionTree> trees;
    double learning_rate = 0.1;
    double init_value = 0.0;
    Loss loss = Loss::Squared;
    std::size_t n_features = 0;
    std::vector<double> train_loss;  // mean training loss before any tree, then after each tree
    std::vector<std::string> warnings;

    double raw_score(std::span<const double> x) const;
};

/// Stagewise boosting on negative gradients. Squared loss fits residuals;
/// logistic loss fits y - p and sets each leaf by a Newton step, halved
/// until the leaf's loss does not increase, so training loss never rises.
GbmModel gbm_fit(const Matrix& X, std::span<const double> y, const GbmParams& params);

/// Regression scores, or probabilities in (0,1) for logistic models. Throws
/// DataError on a feature-count mismatch.
std::vector<double> gbm_predict(const GbmModel& model, const Matrix& X);

double sigmoid(double z);

}  // namespace crashlens::learn
