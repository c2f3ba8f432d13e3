#pragma once

#include "wate/dataset.hpp"
#include "wate/learners.hpp"
#include "wate/split_plan.hpp"
#include "wate/weights.hpp"

#include <Eigen/Dense>

#include <string_view>
#include <vector>

namespace wate {

/// Per-observation score pieces.
///
///   d_val   = lambda(e) + lambda'(e) (A - e)
///   n_val   = lambda(e) psi + lambda'(e) tau (A - e)
///   psi_tau = A/e (Y - mu1) - (1-A)/(1-e) (Y - mu0) + tau
///   tau_hat = mu1 - mu0
struct ScoreTriple {
    double d_val = 0.0;
    double n_val = 0.0;
    double psi_tau = 0.0;
    double tau_hat = 0.0;
};

/// The linear score l_i = gamma d_i - n_i at a candidate gamma.
struct ScoreAtGamma {
    double gamma = 0.0;
    Eigen::VectorXd l_vals;

    double mean() const { return l_vals.size() ? l_vals.mean() : 0.0; }
};

/// Column form of the scores with the weight terms kept, used by the
/// variance formulas. Entry i refers to fit.rows[i].
struct ScoreColumns {
    Eigen::VectorXd d, n, psi, tau;
    Eigen::VectorXd lambda, dlambda;
    Eigen::VectorXd resid_a;  // A - e
    Eigen::VectorXd e;

    Index size() const noexcept { return d.size(); }
};

ScoreColumns score_columns(const Dataset& d, const NuisanceFit& fit, const WeightFamily& w);

/// Triples for `rows`, which must all be covered by `fit` (RowError otherwise).
std::vector<ScoreTriple> score_components(const Dataset& d, const NuisanceFit& fit, const WeightFamily& w,
                                          const RowSet& rows);
std::vector<ScoreTriple> score_components(const Dataset& d, const NuisanceFit& fit, const WeightFamily& w);

ScoreAtGamma linear_score(const std::vector<ScoreTriple>& scores, double gamma);

/// Sum(n)/Sum(d), the root of the mean linear score.
double solve_linear_score(const std::vector<ScoreTriple>& scores);

/// Throws DegenerateError when the denominator sum is zero relative to
/// the scale of its terms. `what` names the quantity in the message.
void require_nondegenerate(double sum, double abs_sum, std::string_view what);

double estimate_naive1(const Dataset& d, const NuisanceFit& fit, const WeightFamily& w);
double estimate_naive2(const Dataset& d, const NuisanceFit& fit, const WeightFamily& w);
double estimate_eif(const Dataset& d, const NuisanceFit& fit, const WeightFamily& w);

enum class DmlVariant { Dml1, Dml2 };

struct FoldDetail {
    int fold = 0;
    Index size = 0;
    double sum_n = 0.0;
    double sum_d = 0.0;
    double gamma = 0.0;  // sum_n / sum_d (NaN under dml2 when degenerate)
};

struct DmlEstimate {
    double gamma = 0.0;
    std::vector<FoldDetail> folds;
};

/// Checks that fits[k] covers exactly fold k of `split` (RowError otherwise).
void require_fold_alignment(const SplitPlan& plan, int split, const std::vector<NuisanceFit>& fits);

/// dml1 averages fold ratios, equally unless `size_weighted`; dml2 solves
/// the pooled estimating equation.
DmlEstimate estimate_dml(const Dataset& d, const SplitPlan& plan, int split, const std::vector<NuisanceFit>& fits,
                         const WeightFamily& w, DmlVariant variant, bool size_weighted = false);

}  // namespace wate
