#include "crashlens/logistic.hpp"

#include <cmath>

#include <Eigen/Dense>

#include "crashlens/gbm.hpp"

namespace crashlens::learn {

namespace {

double eta(std::span<const double> z, std::span<const double> beta) {
    double e = beta[0];
    for (std::size_t j = 0; j < z.size(); ++j) e += beta[j + 1] * z[j];
    return e;
}

double softplus(double v) { return v > 0 ? v + std::log1p(std::exp(-v)) : std::log1p(std::exp(v)); }

double norm(const std::vector<double>& g) {
    double s = 0.0;
    for (double v : g) s += v * v;
    return std::sqrt(s);
}

}  // namespace

double logistic_objective(const Matrix& Z, std::span<const double> y, std::span<const double> beta, double l2) {
    const double n = static_cast<double>(Z.rows());
    double total = 0.0;
    for (std::size_t i = 0; i < Z.rows(); ++i) {
        double e = eta(Z.row(i), beta);
        total += softplus(e) - y[i] * e;
    }
    double penalty = 0.0;
    for (std::size_t j = 1; j < beta.size(); ++j) penalty += beta[j] * beta[j];
    return total / n + l2 / (2.0 * n) * penalty;
}

std::vector<double> logistic_gradient(const Matrix& Z, std::span<const double> y, std::span<const double> beta,
                                      double l2) {
    const double n = static_cast<double>(Z.rows());
    std::vector<double> g(beta.size(), 0.0);
    for (std::size_t i = 0; i < Z.rows(); ++i) {
        auto z = Z.row(i);
        double r = sigmoid(eta(z, beta)) - y[i];
        g[0] += r;
        for (std::size_t j = 0; j < z.size(); ++j) g[j + 1] += r * z[j];
    }
    for (auto& v : g) v /= n;
    for (std::size_t j = 1; j < beta.size(); ++j) g[j] += l2 / n * beta[j];
    return g;
}

Matrix standardize(const LogisticModel& model, const Matrix& X) {
    Matrix Z(X.rows(), X.cols());
    for (std::size_t i = 0; i < X.rows(); ++i) {
        for (std::size_t j = 0; j < X.cols(); ++j) Z(i, j) = (X(i, j) - model.mean[j]) / model.scale[j];
    }
    return Z;
}

LogisticModel logistic_fit(const Matrix& X, std::span<const double> y, const LogisticParams& params) {
    if (X.rows() == 0) throw DataError("logistic_fit: empty data");
    if (y.size() != X.rows()) throw DataError("logistic_fit: label count does not match rows");
    for (double v : y) {
        if (v != 0.0 && v != 1.0) throw DataError("logistic_fit: labels must be 0 or 1");
    }
    if (params.l2 < 0) throw UsageError("logreg.l2 must be >= 0");
    const std::size_t n = X.rows(), d = X.cols();

    LogisticModel model;
    model.mean.assign(d, 0.0);
    model.scale.assign(d, 1.0);
    for (std::size_t j = 0; j < d; ++j) {
        double m = 0.0;
        for (std::size_t i = 0; i < n; ++i) m += X(i, j);
        m /= static_cast<double>(n);
        double v = 0.0;
        for (std::size_t i = 0; i < n; ++i) v += (X(i, j) - m) * (X(i, j) - m);
        double sd = std::sqrt(v / static_cast<double>(n));
        model.mean[j] = m;
        model.scale[j] = sd > 0 ? sd : 1.0;
    }
    const Matrix Z = standardize(model, X);

    std::vector<double> beta(d + 1, 0.0);
    double obj = logistic_objective(Z, y, beta, params.l2);
    std::vector<double> grad = logistic_gradient(Z, y, beta, params.l2);
    const double nd = static_cast<double>(n);

    for (std::size_t it = 0; it < params.max_iter; ++it) {
        if (norm(grad) < params.tol) {
            model.converged = true;
            break;
        }
        model.iterations = it + 1;
        Eigen::MatrixXd H = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(d + 1), static_cast<Eigen::Index>(d + 1));
        for (std::size_t i = 0; i < n; ++i) {
            auto z = Z.row(i);
            double p = sigmoid(eta(z, beta));
            double w = p * (1.0 - p);
            Eigen::VectorXd zi(static_cast<Eigen::Index>(d + 1));
            zi[0] = 1.0;
            for (std::size_t j = 0; j < d; ++j) zi[static_cast<Eigen::Index>(j + 1)] = z[j];
            H.noalias() += w * zi * zi.transpose();
        }
        H /= nd;
        for (std::size_t j = 1; j <= d; ++j) H(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j)) += params.l2 / nd;
        // Tiny ridge keeps separable, unpenalized problems solvable.
        H.diagonal().array() += 1e-12;
        Eigen::VectorXd g = Eigen::Map<const Eigen::VectorXd>(grad.data(), static_cast<Eigen::Index>(grad.size()));
        Eigen::VectorXd step = H.ldlt().solve(g);

        double t = 1.0;
        std::vector<double> cand(beta.size());
        double cand_obj = obj;
        for (int halving = 0; halving < 40; ++halving, t /= 2.0) {
            for (std::size_t j = 0; j < beta.size(); ++j) cand[j] = beta[j] - t * step[static_cast<Eigen::Index>(j)];
            cand_obj = logistic_objective(Z, y, cand, params.l2);
            if (cand_obj <= obj) break;
        }
        if (!(cand_obj <= obj)) break;
        beta = cand;
        obj = cand_obj;
        grad = logistic_gradient(Z, y, beta, params.l2);
    }
    model.gradient_norm = norm(grad);
    if (!model.converged && model.gradient_norm < params.tol) model.converged = true;
    if (!model.converged) {
        model.warnings.push_back("logistic regression did not reach gradient tolerance; returning best iterate");
    }
    model.intercept = beta[0];
    model.weights.assign(beta.begin() + 1, beta.end());
    return model;
}

std::vector<double> logistic_predict(const LogisticModel& model, const Matrix& X) {
    if (X.cols() != model.weights.size()) {
        throw DataError("logistic_predict: model expects " + std::to_string(model.weights.size()) +
                        " features, got " + std::to_string(X.cols()));
    }
    std::vector<double> out(X.rows());
    for (std::size_t i = 0; i < X.rows(); ++i) {
        double e = model.intercept;
        for (std::size_t j = 0; j < X.cols(); ++j) e += model.weights[j] * (X(i, j) - model.mean[j]) / model.scale[j];
        out[i] = sigmoid(e);
    }
    return out;
}

}  // namespace crashlens::learn
