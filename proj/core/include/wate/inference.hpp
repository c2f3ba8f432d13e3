#pragma once

#include "wate/dataset.hpp"
#include "wate/estimators.hpp"
#include "wate/learners.hpp"
#include "wate/split_plan.hpp"
#include "wate/weights.hpp"

#include <utility>
#include <vector>

namespace wate {

/// Standard normal CDF.
double normal_cdf(double x);

/// Inverse standard normal CDF: Acklam's rational approximation refined by
/// one Halley step, accurate to about 1e-15 relative in the central range.
/// Throws DomainError outside (0, 1).
double normal_quantile(double p);

/// Mean square of the estimated efficient influence function,
/// (N - gamma D) / mean(D), at a single full-sample fit.
double variance_eif(const Dataset& d, const NuisanceFit& fit, const WeightFamily& w, double gamma_hat);

/// J^-2 times the fold-average of within-fold mean L^2, with J the
/// fold-average of within-fold mean D.
double variance_dml(const Dataset& d, const SplitPlan& plan, int split, const std::vector<NuisanceFit>& fits,
                    const WeightFamily& w, double gamma_hat);

enum class NaiveKind { Naive1, Naive2 };

/// Mean square of lambda (tau - gamma) / mean(lambda), with tau the
/// regression (naive1) or IPW (naive2) contrast. Comparison only: this is
/// not a valid variance for the naive estimators.
double variance_naive_comparison(const Dataset& d, const NuisanceFit& fit, const WeightFamily& w, double gamma_hat,
                                 NaiveKind kind);

enum class Aggregation { Mean, Median, Single };

struct SplitStat {
    double gamma = 0.0;
    double sigma2 = 0.0;
};

/// Combines per-split results. Mean: gamma = mean gamma_s and
/// sigma2 = mean(sigma2_s + (gamma_s - gamma)^2). Median replaces both
/// means by medians. Single requires exactly one split.
SplitStat aggregate_splits(const std::vector<SplitStat>& per_split, Aggregation strategy);

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};

/// gamma_hat -/+ z_{1-alpha/2} sqrt(sigma2 / n).
Interval wald_ci(double gamma_hat, double sigma2, Index n, double alpha);

/// Mean square of lambda(e) (psi - gamma) / mean(D): the influence function
/// when the propensity is known, so the lambda' correction drops out.
double eif_known_ps(const Dataset& d, const NuisanceFit& fit, const WeightFamily& w, double gamma_hat);

/// Mean of (lambda'(e)/mean(D))^2 (tau - gamma)^2 (A - e)^2.
double efficiency_gain(const Dataset& d, const NuisanceFit& fit, const WeightFamily& w, double gamma_hat);

/// variance_eif = known_ps + gain + residual; the residual is twice the
/// empirical cross moment of the two influence-function pieces, zero in
/// expectation.
struct GainDecomposition {
    double variance_eif = 0.0;
    double known_ps = 0.0;
    double gain = 0.0;
    double residual = 0.0;
};

GainDecomposition decompose_efficiency(const Dataset& d, const NuisanceFit& fit, const WeightFamily& w,
                                       double gamma_hat);

}  // namespace wate
