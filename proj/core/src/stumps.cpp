#include "wate/stumps.hpp"

#include "wate/glm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace wate {

StumpBooster StumpBooster::fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Options& opts) {
    const auto m = x.rows();
    const auto p = x.cols();
    StumpBooster model;
    model.rate_ = opts.learning_rate;
    model.classification_ = opts.classification;
    if (opts.classification) {
        const double ybar = std::clamp(y.mean(), 1e-6, 1.0 - 1e-6);
        model.init_ = std::log(ybar / (1.0 - ybar));
    } else {
        model.init_ = y.mean();
    }

    std::vector<std::vector<Eigen::Index>> order(static_cast<std::size_t>(p));
    for (Eigen::Index j = 0; j < p; ++j) {
        auto& o = order[static_cast<std::size_t>(j)];
        o.resize(static_cast<std::size_t>(m));
        std::iota(o.begin(), o.end(), Eigen::Index{0});
        std::stable_sort(o.begin(), o.end(), [&](Eigen::Index a, Eigen::Index b) { return x(a, j) < x(b, j); });
    }

    Eigen::VectorXd f = Eigen::VectorXd::Constant(m, model.init_);
    Eigen::VectorXd grad(m), hess(m);
    for (int round = 0; round < opts.rounds; ++round) {
        for (Eigen::Index i = 0; i < m; ++i) {
            if (opts.classification) {
                const double pr = glm::sigmoid(f[i]);
                grad[i] = y[i] - pr;
                hess[i] = std::max(pr * (1.0 - pr), 1e-12);
            } else {
                grad[i] = y[i] - f[i];
                hess[i] = 1.0;
            }
        }
        const double g_total = grad.sum();
        const double h_total = hess.sum();

        double best_gain = -1.0;
        Stump best;
        for (Eigen::Index j = 0; j < p; ++j) {
            const auto& o = order[static_cast<std::size_t>(j)];
            double gl = 0.0, hl = 0.0;
            for (std::size_t r = 0; r + 1 < o.size(); ++r) {
                gl += grad[o[r]];
                hl += hess[o[r]];
                const double xv = x(o[r], j);
                const double xn = x(o[r + 1], j);
                if (xv == xn) continue;
                const double gr = g_total - gl;
                const double hr = h_total - hl;
                const double gain = gl * gl / hl + gr * gr / hr;
                if (gain > best_gain) {
                    best_gain = gain;
                    best = {j, 0.5 * (xv + xn), gl / hl, gr / hr};
                }
            }
        }
        if (best_gain < 0.0) break;  // every feature constant
        for (Eigen::Index i = 0; i < m; ++i)
            f[i] += opts.learning_rate * (x(i, best.feature) <= best.threshold ? best.left : best.right);
        model.stumps_.push_back(best);
    }
    return model;
}

Eigen::VectorXd StumpBooster::predict(const Eigen::MatrixXd& x) const {
    Eigen::VectorXd f = Eigen::VectorXd::Constant(x.rows(), init_);
    for (const auto& s : stumps_)
        for (Eigen::Index i = 0; i < x.rows(); ++i) f[i] += rate_ * (x(i, s.feature) <= s.threshold ? s.left : s.right);
    if (classification_)
        for (Eigen::Index i = 0; i < f.size(); ++i) f[i] = glm::sigmoid(f[i]);
    return f;
}

}  // namespace wate
