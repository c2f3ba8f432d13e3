#include "wate/weights.hpp"

#include "wate/errors.hpp"

#include <cmath>
#include <string>

namespace wate {

namespace {

// a (a-1) ... (a-m+1); zero once a non-negative integer a is exhausted.
double falling(double a, int m) {
    double r = 1.0;
    for (int i = 0; i < m; ++i) r *= (a - i);
    return r;
}

constexpr double kBinom[4][4] = {{1, 0, 0, 0}, {1, 1, 0, 0}, {1, 2, 1, 0}, {1, 3, 3, 1}};

}  // namespace

WeightFamily::WeightFamily(EstimandSpec spec) : spec_(std::move(spec)) {
    if (spec_.family() == Family::ATB) {
        a_ = *spec_.nu1() - 1.0;
        b_ = *spec_.nu2() - 1.0;
    }
}

double WeightFamily::beta_derivative(double t, int order) const {
    // Leibniz rule on t^a * (1-t)^b.
    const double s = 1.0 - t;
    double total = 0.0;
    for (int j = 0; j <= order; ++j) {
        const double ca = falling(a_, order - j);
        const double cb = falling(b_, j);
        if (ca == 0.0 || cb == 0.0) continue;
        const double sign = (j % 2 == 0) ? 1.0 : -1.0;
        total += kBinom[order][j] * sign * ca * cb * std::pow(t, a_ - (order - j)) * std::pow(s, b_ - j);
    }
    return total;
}

double WeightFamily::eval(double t, int order) const {
    if (order < 0 || order > 3)
        throw ConfigError("unsupported derivative order " + std::to_string(order) + " (0..3 available)");
    if (!(t > 0.0 && t < 1.0)) throw DomainError("propensity " + std::to_string(t) + " outside (0,1)");
    const double s = 1.0 - t;
    switch (spec_.family()) {
        case Family::ATE:
            return order == 0 ? 1.0 : 0.0;
        case Family::ATT:
            return order == 0 ? t : (order == 1 ? 1.0 : 0.0);
        case Family::ATC:
            return order == 0 ? s : (order == 1 ? -1.0 : 0.0);
        case Family::ATO:
            switch (order) {
                case 0: return t * s;
                case 1: return 1.0 - 2.0 * t;
                case 2: return -2.0;
                default: return 0.0;
            }
        case Family::ATEN:
            switch (order) {
                case 0: return -t * std::log(t) - s * std::log(s);
                case 1: return std::log(s / t);
                case 2: return -1.0 / (t * s);
                default: return 1.0 / (t * t) - 1.0 / (s * s);
            }
        case Family::ATB:
            return beta_derivative(t, order);
    }
    return 0.0;
}

double WeightFamily::tilting_weight(double t, int arm) const {
    const double l = eval(t, 0);
    return arm == 1 ? l / t : l / (1.0 - t);
}

double lambda_eval(const WeightFamily& w, double t, int order) { return w.eval(t, order); }

double tilting_weight(const WeightFamily& w, double t, int arm) { return w.tilting_weight(t, arm); }

}  // namespace wate
