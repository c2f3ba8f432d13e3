#pragma once

#include <Eigen/Dense>

#include <vector>

namespace wate {

struct Stump {
    Eigen::Index feature = 0;
    double threshold = 0.0;  // x <= threshold goes left
    double left = 0.0;
    double right = 0.0;
};

/// Depth-1 gradient boosting. Squared loss for regression; binomial
/// deviance with Newton leaf values for classification, where predictions
/// are probabilities.
class StumpBooster {
public:
    struct Options {
        int rounds = 200;
        double learning_rate = 0.1;
        bool classification = false;
    };

    static StumpBooster fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const Options& opts);

    Eigen::VectorXd predict(const Eigen::MatrixXd& x) const;
    const std::vector<Stump>& stumps() const noexcept { return stumps_; }

private:
    double init_ = 0.0;
    double rate_ = 0.1;
    bool classification_ = false;
    std::vector<Stump> stumps_;
};

}  // namespace wate
