#include "wate/inference.hpp"

#include "wate/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace wate {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw DomainError("normal quantile needs p in (0,1), got " + std::to_string(p));
    static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                                   1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                   6.680131188771972e+01,  -1.328068155288572e+01};
    static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                   -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                   3.754408661907416e+00};
    constexpr double p_low = 0.02425;

    double x;
    if (p < p_low) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - p_low) {
        const double q = p - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log1p(-p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    // Halley refinement; the error is measured on the nearer tail to keep precision.
    const double e = p < 0.5 ? normal_cdf(x) - p : (1.0 - p) - normal_cdf(-x);
    const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
    return x - u / (1.0 + 0.5 * x * u);
}

namespace {

double mean_d(const ScoreColumns& s) {
    const double sum = s.d.sum();
    require_nondegenerate(sum, s.d.cwiseAbs().sum(), "mean of D");
    return sum / static_cast<double>(s.size());
}

}  // namespace

double variance_eif(const Dataset& d, const NuisanceFit& fit, const WeightFamily& w, double gamma_hat) {
    const ScoreColumns s = score_columns(d, fit, w);
    const double md = mean_d(s);
    // Outcome part lambda (psi - gamma) plus the propensity part lambda' (tau - gamma)(A - e).
    double acc = 0.0;
    for (Index i = 0; i < s.size(); ++i) {
        const double phi = (s.lambda[i] * (s.psi[i] - gamma_hat) +
                            s.dlambda[i] * (s.tau[i] - gamma_hat) * s.resid_a[i]) / md;
        acc += phi * phi;
    }
    return acc / static_cast<double>(s.size());
}

double variance_dml(const Dataset& d, const SplitPlan& plan, int split, const std::vector<NuisanceFit>& fits,
                    const WeightFamily& w, double gamma_hat) {
    require_fold_alignment(plan, split, fits);
    double j_sum = 0.0, j_abs = 0.0, l2_sum = 0.0;
    for (const auto& fit : fits) {
        const ScoreColumns s = score_columns(d, fit, w);
        const auto m = static_cast<double>(s.size());
        j_sum += s.d.sum() / m;
        j_abs += s.d.cwiseAbs().sum() / m;
        l2_sum += (gamma_hat * s.d - s.n).squaredNorm() / m;
    }
    require_nondegenerate(j_sum, j_abs, "J (fold-averaged mean of D)");
    const double k = static_cast<double>(fits.size());
    const double j = j_sum / k;
    return (l2_sum / k) / (j * j);
}

double variance_naive_comparison(const Dataset& d, const NuisanceFit& fit, const WeightFamily& w, double gamma_hat,
                                 NaiveKind kind) {
    const ScoreColumns s = score_columns(d, fit, w);
    const double sum_l = s.lambda.sum();
    require_nondegenerate(sum_l, s.lambda.cwiseAbs().sum(), "mean of lambda(e)");
    const double ml = sum_l / static_cast<double>(s.size());
    double acc = 0.0;
    for (Index i = 0; i < s.size(); ++i) {
        double contrast = s.tau[i];
        if (kind == NaiveKind::Naive2) {
            const Index r = fit.rows[static_cast<std::size_t>(i)];
            const double a = d.treatment()[r];
            const double y = d.outcome()[r];
            contrast = a * y / s.e[i] - (1.0 - a) * y / (1.0 - s.e[i]);
        }
        const double phi = s.lambda[i] * (contrast - gamma_hat) / ml;
        acc += phi * phi;
    }
    return acc / static_cast<double>(s.size());
}

namespace {

double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const auto m = v.size();
    return m % 2 ? v[m / 2] : 0.5 * (v[m / 2 - 1] + v[m / 2]);
}

}  // namespace

SplitStat aggregate_splits(const std::vector<SplitStat>& per_split, Aggregation strategy) {
    if (per_split.empty()) throw ConfigError("aggregate_splits needs at least one split");
    if (strategy == Aggregation::Single) {
        if (per_split.size() != 1) throw ConfigError("single aggregation with more than one split");
        return per_split.front();
    }
    std::vector<double> gammas;
    for (const auto& s : per_split) gammas.push_back(s.gamma);
    double center = 0.0;
    if (strategy == Aggregation::Mean) {
        for (double g : gammas) center += g;
        center /= static_cast<double>(gammas.size());
    } else {
        center = median_of(gammas);
    }
    std::vector<double> adjusted;
    for (const auto& s : per_split) adjusted.push_back(s.sigma2 + (s.gamma - center) * (s.gamma - center));
    double spread = 0.0;
    if (strategy == Aggregation::Mean) {
        for (double v : adjusted) spread += v;
        spread /= static_cast<double>(adjusted.size());
    } else {
        spread = median_of(adjusted);
    }
    return {center, spread};
}

Interval wald_ci(double gamma_hat, double sigma2, Index n, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0,1)");
    if (!(sigma2 >= 0.0)) throw DomainError("negative or NaN variance");
    if (n < 1) throw ConfigError("wald_ci needs n >= 1");
    const double half = normal_quantile(1.0 - alpha / 2.0) * std::sqrt(sigma2 / static_cast<double>(n));
    return {gamma_hat - half, gamma_hat + half};
}

GainDecomposition decompose_efficiency(const Dataset& d, const NuisanceFit& fit, const WeightFamily& w,
                                       double gamma_hat) {
    const ScoreColumns s = score_columns(d, fit, w);
    const double md = mean_d(s);
    const auto m = static_cast<double>(s.size());
    double i1_sq = 0.0, i2_sq = 0.0, cross = 0.0;
    for (Index i = 0; i < s.size(); ++i) {
        const double i1 = s.lambda[i] * (s.psi[i] - gamma_hat) / md;
        const double i2 = s.dlambda[i] * (s.tau[i] - gamma_hat) * s.resid_a[i] / md;
        i1_sq += i1 * i1;
        i2_sq += i2 * i2;
        cross += i1 * i2;
    }
    GainDecomposition out;
    out.known_ps = i1_sq / m;
    out.gain = i2_sq / m;
    out.residual = 2.0 * cross / m;
    out.variance_eif = variance_eif(d, fit, w, gamma_hat);
    return out;
}

double eif_known_ps(const Dataset& d, const NuisanceFit& fit, const WeightFamily& w, double gamma_hat) {
    return decompose_efficiency(d, fit, w, gamma_hat).known_ps;
}

double efficiency_gain(const Dataset& d, const NuisanceFit& fit, const WeightFamily& w, double gamma_hat) {
    return decompose_efficiency(d, fit, w, gamma_hat).gain;
}

}  // namespace wate
