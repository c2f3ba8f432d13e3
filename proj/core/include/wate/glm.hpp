#pragma once

#include <Eigen/Dense>

#include <vector>

namespace wate::glm {

/// Ridge ladder used when a design is singular: 1e-8, 1e-7, ..., 1e-2.
inline constexpr double kRidgeStart = 1e-8;
inline constexpr double kRidgeMax = 1e-2;

/// Column standardization learned on training rows, optionally after
/// appending all pairwise products x_j * x_k (j < k).
class FeatureMap {
public:
    FeatureMap() = default;
    FeatureMap(const Eigen::MatrixXd& raw, bool interactions);

    /// Returns [1, standardized features].
    Eigen::MatrixXd design(const Eigen::MatrixXd& raw) const;
    Eigen::Index width() const noexcept { return mean_.size() + 1; }

    static Eigen::MatrixXd expand(const Eigen::MatrixXd& raw, bool interactions);

private:
    bool interactions_ = false;
    Eigen::RowVectorXd mean_;
    Eigen::RowVectorXd scale_;
};

struct LinearSolution {
    Eigen::VectorXd coef;
    double ridge = 0.0;
};

/// Least squares on a design whose first column is the (unpenalized)
/// intercept. Rank-deficient designs fall back to the ridge ladder, with
/// objective 0.5*|y - Zb|^2 + 0.5*ridge*m*|b[1:]|^2.
LinearSolution least_squares(const Eigen::MatrixXd& z, const Eigen::VectorXd& y);

struct IrlsOptions {
    int max_iter = 50;
    double tol = 1e-10;
};

struct LogisticSolution {
    Eigen::VectorXd coef;
    double ridge = 0.0;
    int iterations = 0;
    bool converged = false;
    /// Penalized negative log-likelihood times two, one entry per iterate
    /// (starting point included).
    std::vector<double> deviance_trace;
};

/// One IRLS run at a fixed ridge penalty. Newton steps are halved until the
/// penalized deviance does not increase.
///
/// Objective: -sum loglik + 0.5*ridge*m*|b[1:]|^2. `singular` is set when the
/// weighted Hessian cannot be factored reliably.
LogisticSolution irls(const Eigen::MatrixXd& z, const Eigen::VectorXd& y, double ridge, const IrlsOptions& opts,
                      bool* singular = nullptr);

/// Unpenalized IRLS, then the ridge ladder if the Hessian is singular, the
/// iteration does not converge, or fitted probabilities saturate at 0 or 1
/// (separation). Throws ConvergenceError when every rung fails.
LogisticSolution logistic(const Eigen::MatrixXd& z, const Eigen::VectorXd& y, const IrlsOptions& opts = {});

double sigmoid(double eta);
/// log(1 + exp(eta)) without overflow.
double softplus(double eta);

}  // namespace wate::glm
