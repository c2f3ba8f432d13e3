#include "wate/glm.hpp"

#include "wate/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>

namespace wate::glm {

double sigmoid(double eta) {
    if (eta >= 0) return 1.0 / (1.0 + std::exp(-eta));
    const double e = std::exp(eta);
    return e / (1.0 + e);
}

double softplus(double eta) {
    return eta > 0 ? eta + std::log1p(std::exp(-eta)) : std::log1p(std::exp(eta));
}

Eigen::MatrixXd FeatureMap::expand(const Eigen::MatrixXd& raw, bool interactions) {
    if (!interactions) return raw;
    const auto p = raw.cols();
    Eigen::MatrixXd out(raw.rows(), p + p * (p - 1) / 2);
    out.leftCols(p) = raw;
    Eigen::Index c = p;
    for (Eigen::Index j = 0; j < p; ++j)
        for (Eigen::Index k = j + 1; k < p; ++k) out.col(c++) = raw.col(j).cwiseProduct(raw.col(k));
    return out;
}

FeatureMap::FeatureMap(const Eigen::MatrixXd& raw, bool interactions) : interactions_(interactions) {
    const Eigen::MatrixXd f = expand(raw, interactions);
    const auto m = static_cast<double>(f.rows());
    mean_ = f.colwise().mean();
    scale_.resize(f.cols());
    for (Eigen::Index j = 0; j < f.cols(); ++j) {
        const double var = (f.col(j).array() - mean_[j]).square().sum() / m;
        scale_[j] = var > 0 ? std::sqrt(var) : 1.0;
    }
}

Eigen::MatrixXd FeatureMap::design(const Eigen::MatrixXd& raw) const {
    const Eigen::MatrixXd f = expand(raw, interactions_);
    Eigen::MatrixXd z(f.rows(), f.cols() + 1);
    z.col(0).setOnes();
    z.rightCols(f.cols()) = (f.rowwise() - mean_).array().rowwise() / scale_.array();
    return z;
}

namespace {

constexpr double kRankThreshold = 1e-10;

bool full_rank_solve(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, Eigen::VectorXd& x) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
    qr.setThreshold(kRankThreshold);
    if (qr.rank() < a.cols()) return false;
    x = qr.solve(b);
    return x.allFinite();
}

double penalized_deviance(const Eigen::MatrixXd& z, const Eigen::VectorXd& y, const Eigen::VectorXd& beta,
                          double ridge) {
    const Eigen::VectorXd eta = z * beta;
    double nll = 0.0;
    for (Eigen::Index i = 0; i < eta.size(); ++i) nll += softplus(eta[i]) - y[i] * eta[i];
    const double pen = 0.5 * ridge * static_cast<double>(z.rows()) * beta.tail(beta.size() - 1).squaredNorm();
    return 2.0 * (nll + pen);
}

bool saturated(const Eigen::MatrixXd& z, const Eigen::VectorXd& beta) {
    const Eigen::VectorXd eta = z * beta;
    // sigmoid(+-23) is within 1e-10 of the boundary
    return (eta.array().abs() > 23.0).any();
}

}  // namespace

LinearSolution least_squares(const Eigen::MatrixXd& z, const Eigen::VectorXd& y) {
    LinearSolution out;
    if (full_rank_solve(z, y, out.coef)) return out;

    const auto m = z.rows();
    const auto k = z.cols();
    Eigen::MatrixXd aug = Eigen::MatrixXd::Zero(m + k - 1, k);
    aug.topRows(m) = z;
    Eigen::VectorXd yaug = Eigen::VectorXd::Zero(m + k - 1);
    yaug.head(m) = y;
    for (double ridge = kRidgeStart; ridge <= kRidgeMax * 1.0001; ridge *= 10.0) {
        const double root = std::sqrt(ridge * static_cast<double>(m));
        for (Eigen::Index j = 1; j < k; ++j) aug(m + j - 1, j) = root;
        out.ridge = ridge;
        if (full_rank_solve(aug, yaug, out.coef)) return out;
    }
    // Top rung: accept a minimum-norm style solve rather than fail.
    out.coef = aug.completeOrthogonalDecomposition().solve(yaug);
    return out;
}

LogisticSolution irls(const Eigen::MatrixXd& z, const Eigen::VectorXd& y, double ridge, const IrlsOptions& opts,
                      bool* singular) {
    const auto m = z.rows();
    const auto k = z.cols();
    const double pen = ridge * static_cast<double>(m);
    if (singular) *singular = false;

    LogisticSolution sol;
    sol.ridge = ridge;
    sol.coef = Eigen::VectorXd::Zero(k);
    const double ybar = std::clamp(y.mean(), 1e-6, 1.0 - 1e-6);
    sol.coef[0] = std::log(ybar / (1.0 - ybar));
    double dev = penalized_deviance(z, y, sol.coef, ridge);
    sol.deviance_trace.push_back(dev);

    Eigen::VectorXd p(m), w(m);
    for (int it = 1; it <= opts.max_iter; ++it) {
        const Eigen::VectorXd eta = z * sol.coef;
        for (Eigen::Index i = 0; i < m; ++i) {
            p[i] = sigmoid(eta[i]);
            w[i] = p[i] * (1.0 - p[i]);
        }
        Eigen::MatrixXd h = z.transpose() * w.asDiagonal() * z;
        Eigen::VectorXd g = z.transpose() * (y - p);
        for (Eigen::Index j = 1; j < k; ++j) {
            h(j, j) += pen;
            g[j] -= pen * sol.coef[j];
        }
        Eigen::LDLT<Eigen::MatrixXd> ldlt(h);
        if (ldlt.info() != Eigen::Success || !(ldlt.rcond() > 1e-12)) {
            if (singular) *singular = true;
            sol.iterations = it;
            return sol;
        }
        const Eigen::VectorXd step = ldlt.solve(g);

        double t = 1.0;
        Eigen::VectorXd next = sol.coef + step;
        double next_dev = penalized_deviance(z, y, next, ridge);
        while (!(next_dev <= dev) && t > 1e-10) {
            t *= 0.5;
            next = sol.coef + t * step;
            next_dev = penalized_deviance(z, y, next, ridge);
        }
        if (!(next_dev <= dev)) {
            // No descent possible along the Newton direction: at the optimum up to rounding.
            sol.iterations = it;
            sol.converged = true;
            return sol;
        }
        const double change = std::abs(dev - next_dev) / (std::abs(next_dev) + 0.1);
        sol.coef = next;
        dev = next_dev;
        sol.deviance_trace.push_back(dev);
        sol.iterations = it;
        if (change < opts.tol) {
            sol.converged = true;
            return sol;
        }
    }
    return sol;
}

LogisticSolution logistic(const Eigen::MatrixXd& z, const Eigen::VectorXd& y, const IrlsOptions& opts) {
    bool singular = false;
    auto sol = irls(z, y, 0.0, opts, &singular);
    if (!singular && sol.converged && !saturated(z, sol.coef)) return sol;

    double last_dev = sol.deviance_trace.back();
    std::optional<LogisticSolution> fallback;
    for (double ridge = kRidgeStart; ridge <= kRidgeMax * 1.0001; ridge *= 10.0) {
        auto pen = irls(z, y, ridge, opts, &singular);
        last_dev = pen.deviance_trace.back();
        if (singular || !pen.converged) continue;
        if (!saturated(z, pen.coef)) return pen;
        fallback = std::move(pen);
    }
    if (fallback) return *fallback;
    throw ConvergenceError("logistic IRLS did not converge after " + std::to_string(opts.max_iter) +
                               " iterations at any ridge penalty up to 1e-2 (last deviance " +
                               std::to_string(last_dev) + ")",
                           last_dev);
}

}  // namespace wate::glm
