#pragma once

#include "wate/estimand.hpp"

namespace wate {

/// The weight function lambda(t) of an estimand and its derivatives up to
/// third order, all in closed form.
///
///   ATE   1
///   ATT   t
///   ATC   1 - t
///   ATO   t (1 - t)
///   ATEN  -t ln t - (1 - t) ln(1 - t)
///   ATB   t^(nu1 - 1) (1 - t)^(nu2 - 1)
///
/// ATEN and ATB derivatives diverge at the edges of (0, 1); callers are
/// expected to pass clipped propensities.
class WeightFamily {
public:
    explicit WeightFamily(EstimandSpec spec);

    const EstimandSpec& spec() const noexcept { return spec_; }
    std::string label() const { return spec_.label(); }

    /// order in 0..3; throws DomainError for t outside (0,1) and
    /// ConfigError for order > 3.
    double eval(double t, int order = 0) const;

    double lambda(double t) const { return eval(t, 0); }
    double d1(double t) const { return eval(t, 1); }
    double d2(double t) const { return eval(t, 2); }
    double d3(double t) const { return eval(t, 3); }

    /// lambda(t)/t for the treated arm, lambda(t)/(1-t) for controls.
    double tilting_weight(double t, int arm) const;

private:
    double beta_derivative(double t, int order) const;

    EstimandSpec spec_;
    double a_ = 0.0;  // nu1 - 1
    double b_ = 0.0;  // nu2 - 1
};

double lambda_eval(const WeightFamily& w, double t, int order);
double tilting_weight(const WeightFamily& w, double t, int arm);

}  // namespace wate
