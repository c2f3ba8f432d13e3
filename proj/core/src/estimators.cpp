#include "wate/estimators.hpp"

#include "wate/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <unordered_map>

namespace wate {

namespace {

constexpr double kDegenerateRel = 1e-12;

void require_cover(const Dataset& d, const NuisanceFit& fit) {
    if (fit.e_hat.size() != fit.size() || fit.mu0_hat.size() != fit.size() || fit.mu1_hat.size() != fit.size())
        throw RowError("nuisance fit vectors do not match its row count");
    for (Index r : fit.rows)
        if (r < 0 || r >= d.n()) throw RowError("nuisance fit refers to row " + std::to_string(r) + " outside the data");
}

}  // namespace

void require_nondegenerate(double sum, double abs_sum, std::string_view what) {
    if (!(std::abs(sum) > kDegenerateRel * abs_sum) || !std::isfinite(sum))
        throw DegenerateError(std::string(what) + " is zero (degenerate weights); check clipping and overlap");
}

ScoreColumns score_columns(const Dataset& d, const NuisanceFit& fit, const WeightFamily& w) {
    require_cover(d, fit);
    const Index m = fit.size();
    ScoreColumns s;
    for (auto* v : {&s.d, &s.n, &s.psi, &s.tau, &s.lambda, &s.dlambda, &s.resid_a, &s.e}) v->resize(m);
    const auto& A = d.treatment();
    const auto& Y = d.outcome();
    for (Index i = 0; i < m; ++i) {
        const Index r = fit.rows[static_cast<std::size_t>(i)];
        const double e = fit.e_hat[i];
        const double a = A[r];
        const double y = Y[r];
        const double mu0 = fit.mu0_hat[i];
        const double mu1 = fit.mu1_hat[i];
        const double tau = mu1 - mu0;
        const double psi = a / e * (y - mu1) - (1.0 - a) / (1.0 - e) * (y - mu0) + tau;
        const double lam = w.eval(e, 0);
        const double dlam = w.eval(e, 1);
        s.e[i] = e;
        s.tau[i] = tau;
        s.psi[i] = psi;
        s.lambda[i] = lam;
        s.dlambda[i] = dlam;
        s.resid_a[i] = a - e;
        s.d[i] = lam + dlam * (a - e);
        s.n[i] = lam * psi + dlam * tau * (a - e);
    }
    return s;
}

std::vector<ScoreTriple> score_components(const Dataset& d, const NuisanceFit& fit, const WeightFamily& w,
                                          const RowSet& rows) {
    const ScoreColumns s = score_columns(d, fit, w);
    std::unordered_map<Index, Index> pos;
    pos.reserve(fit.rows.size());
    for (std::size_t i = 0; i < fit.rows.size(); ++i) pos.emplace(fit.rows[i], static_cast<Index>(i));
    std::vector<ScoreTriple> out;
    out.reserve(rows.size());
    for (Index r : rows) {
        const auto it = pos.find(r);
        if (it == pos.end()) throw RowError("row " + std::to_string(r) + " is not covered by the nuisance fit");
        const Index i = it->second;
        out.push_back({s.d[i], s.n[i], s.psi[i], s.tau[i]});
    }
    return out;
}

std::vector<ScoreTriple> score_components(const Dataset& d, const NuisanceFit& fit, const WeightFamily& w) {
    return score_components(d, fit, w, fit.rows);
}

ScoreAtGamma linear_score(const std::vector<ScoreTriple>& scores, double gamma) {
    ScoreAtGamma out{gamma, Eigen::VectorXd(static_cast<Index>(scores.size()))};
    for (std::size_t i = 0; i < scores.size(); ++i)
        out.l_vals[static_cast<Index>(i)] = gamma * scores[i].d_val - scores[i].n_val;
    return out;
}

double solve_linear_score(const std::vector<ScoreTriple>& scores) {
    double sn = 0.0, sd = 0.0, sad = 0.0;
    for (const auto& s : scores) {
        sn += s.n_val;
        sd += s.d_val;
        sad += std::abs(s.d_val);
    }
    require_nondegenerate(sd, sad, "sum of D");
    return sn / sd;
}

double estimate_naive1(const Dataset& d, const NuisanceFit& fit, const WeightFamily& w) {
    const ScoreColumns s = score_columns(d, fit, w);
    const double den = s.lambda.sum();
    require_nondegenerate(den, s.lambda.cwiseAbs().sum(), "mean of lambda(e)");
    return s.lambda.dot(s.tau) / den;
}

double estimate_naive2(const Dataset& d, const NuisanceFit& fit, const WeightFamily& w) {
    const ScoreColumns s = score_columns(d, fit, w);
    const double den = s.lambda.sum();
    require_nondegenerate(den, s.lambda.cwiseAbs().sum(), "mean of lambda(e)");
    double num = 0.0;
    for (Index i = 0; i < s.size(); ++i) {
        const Index r = fit.rows[static_cast<std::size_t>(i)];
        const double a = d.treatment()[r];
        const double y = d.outcome()[r];
        const double ipw = a * y / s.e[i] - (1.0 - a) * y / (1.0 - s.e[i]);
        num += s.lambda[i] * ipw;
    }
    return num / den;
}

double estimate_eif(const Dataset& d, const NuisanceFit& fit, const WeightFamily& w) {
    const ScoreColumns s = score_columns(d, fit, w);
    const double den = s.d.sum();
    require_nondegenerate(den, s.d.cwiseAbs().sum(), "mean of D");
    return s.n.sum() / den;
}

void require_fold_alignment(const SplitPlan& plan, int split, const std::vector<NuisanceFit>& fits) {
    if (static_cast<int>(fits.size()) != plan.k_folds())
        throw RowError("expected " + std::to_string(plan.k_folds()) + " fold fits, got " +
                       std::to_string(fits.size()));
    for (int k = 0; k < plan.k_folds(); ++k) {
        RowSet rows = fits[static_cast<std::size_t>(k)].rows;
        std::sort(rows.begin(), rows.end());
        if (rows != plan.fold_rows(split, k))
            throw RowError("fit " + std::to_string(k) + " does not cover exactly the rows of fold " +
                           std::to_string(k) + " in split " + std::to_string(split));
    }
}

DmlEstimate estimate_dml(const Dataset& d, const SplitPlan& plan, int split, const std::vector<NuisanceFit>& fits,
                         const WeightFamily& w, DmlVariant variant, bool size_weighted) {
    require_fold_alignment(plan, split, fits);
    DmlEstimate out;
    double total_n = 0.0, total_d = 0.0, total_abs_d = 0.0;
    for (int k = 0; k < plan.k_folds(); ++k) {
        const auto& fit = fits[static_cast<std::size_t>(k)];
        const ScoreColumns s = score_columns(d, fit, w);
        FoldDetail f;
        f.fold = k;
        f.size = fit.size();
        f.sum_n = s.n.sum();
        f.sum_d = s.d.sum();
        const double abs_d = s.d.cwiseAbs().sum();
        if (variant == DmlVariant::Dml1) {
            try {
                require_nondegenerate(f.sum_d, abs_d, "fold sum of D");
            } catch (const DegenerateError& e) {
                throw DegenerateError("fold " + std::to_string(k) + ": " + e.what());
            }
            f.gamma = f.sum_n / f.sum_d;
        } else {
            f.gamma = std::abs(f.sum_d) > kDegenerateRel * abs_d ? f.sum_n / f.sum_d
                                                                  : std::numeric_limits<double>::quiet_NaN();
        }
        total_n += f.sum_n;
        total_d += f.sum_d;
        total_abs_d += abs_d;
        out.folds.push_back(f);
    }
    if (variant == DmlVariant::Dml2) {
        require_nondegenerate(total_d, total_abs_d, "pooled sum of D");
        out.gamma = total_n / total_d;
        return out;
    }
    double acc = 0.0, weight = 0.0;
    for (const auto& f : out.folds) {
        const double wk = size_weighted ? static_cast<double>(f.size) : 1.0;
        acc += wk * f.gamma;
        weight += wk;
    }
    out.gamma = acc / weight;
    return out;
}

}  // namespace wate
