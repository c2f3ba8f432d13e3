#include "wate/pipeline.hpp"

#include "wate/errors.hpp"
#include "wate/estimators.hpp"
#include "wate/parallel.hpp"
#include "wate/split_plan.hpp"
#include "wate/weights.hpp"

#include <cctype>
#include <cmath>
#include <limits>
#include <map>

namespace wate {

std::string_view method_name(Method m) {
    switch (m) {
        case Method::Naive1: return "naive1";
        case Method::Naive2: return "naive2";
        case Method::Eif: return "eif";
        case Method::Dml1: return "dml1";
        case Method::Dml2: return "dml2";
    }
    return "?";
}

std::vector<Method> all_methods() {
    return {Method::Naive1, Method::Naive2, Method::Eif, Method::Dml1, Method::Dml2};
}

namespace {

std::string lower(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

bool is_dml(Method m) { return m == Method::Dml1 || m == Method::Dml2; }

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

const char* kNaiveWarning =
    "comparison-only variance: the mean square of the naive influence function is not a valid variance "
    "for this estimator";

}  // namespace

Method parse_method(std::string_view text) {
    const std::string s = lower(text);
    for (Method m : all_methods())
        if (s == method_name(m)) return m;
    if (s == "naive-1" || s == "naive_1") return Method::Naive1;
    if (s == "naive-2" || s == "naive_2") return Method::Naive2;
    if (s == "dml-1" || s == "dml_1") return Method::Dml1;
    if (s == "dml-2" || s == "dml_2") return Method::Dml2;
    throw ConfigError("unknown method '" + std::string(text) + "'; valid: naive1, naive2, eif, dml1, dml2");
}

std::string_view aggregation_name(Aggregation a) {
    switch (a) {
        case Aggregation::Mean: return "mean";
        case Aggregation::Median: return "median";
        case Aggregation::Single: return "single";
    }
    return "?";
}

Aggregation parse_aggregation(std::string_view text) {
    const std::string s = lower(text);
    if (s == "mean") return Aggregation::Mean;
    if (s == "median") return Aggregation::Median;
    throw ConfigError("unknown aggregation '" + std::string(text) + "'; valid: mean, median");
}

nlohmann::json EstimateReport::to_json() const {
    nlohmann::json splits = nlohmann::json::array();
    for (const auto& s : per_split) splits.push_back({{"gamma", s.gamma}, {"sigma2", s.sigma2}});
    auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
    return {{"estimand", estimand.label()},
            {"method", method_name(method)},
            {"gamma_hat", num(gamma_hat)},
            {"sigma2", num(sigma2)},
            {"se", num(se)},
            {"ci_lo", num(ci.lo)},
            {"ci_hi", num(ci.hi)},
            {"alpha", alpha},
            {"aggregation", aggregation_name(aggregation)},
            {"n", n},
            {"k_folds", k_folds},
            {"n_splits", n_splits},
            {"per_split", splits},
            {"warnings", warnings}};
}

void EstimationOptions::validate() const {
    if (estimands.empty()) throw ConfigError("at least one estimand is required");
    if (methods.empty()) throw ConfigError("at least one method is required");
    if (k_folds < 2) throw ConfigError("k_folds must be >= 2");
    if (n_splits < 1) throw ConfigError("n_splits must be >= 1");
    if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0,1)");
    if (threads < 1) throw ConfigError("threads must be >= 1");
    if (aggregation == Aggregation::Single && n_splits != 1)
        throw ConfigError("single aggregation requires exactly one split");
    clip.validate();
    specs.propensity.validate(NuisanceTarget::Propensity);
    specs.outcome0.validate(NuisanceTarget::Outcome0);
    specs.outcome1.validate(NuisanceTarget::Outcome1);
}

EstimationRun run_estimation(const Dataset& d, const EstimationOptions& opts) {
    return run_estimation(d, opts, RngContract(opts.seed), opts.seed);
}

EstimationRun run_estimation(const Dataset& d, const EstimationOptions& opts, const RngContract& rng,
                             std::uint64_t plan_seed) {
    opts.validate();
    require_estimable(d);

    bool want_full = false, want_dml = false;
    for (Method m : opts.methods) (is_dml(m) ? want_dml : want_full) = true;

    std::vector<WeightFamily> families;
    EstimationRun run;
    for (const auto& e : opts.estimands) {
        families.emplace_back(e);
        if (auto w = e.warning()) run.warnings.push_back(e.label() + ": " + *w);
    }

    std::optional<NuisanceFit> full;
    if (want_full) {
        full = fit_nuisances(d, d.all_rows(), d.all_rows(), opts.specs, opts.clip, rng.child("full", 0));
        run.full_sample_provenance = full->provenance;
        run.clipped_low = full->clipped_low();
        run.clipped_high = full->clipped_high();
    }

    // dml[estimand][variant] holds one SplitStat per split.
    const std::size_t n_est = families.size();
    std::vector<std::vector<std::vector<SplitStat>>> dml(
        n_est, std::vector<std::vector<SplitStat>>(2, std::vector<SplitStat>(static_cast<std::size_t>(opts.n_splits))));
    if (want_dml) {
        const SplitPlan plan = SplitPlan::make(d.n(), opts.k_folds, opts.n_splits, plan_seed);
        parallel_for(static_cast<std::size_t>(opts.n_splits), opts.threads, [&](std::size_t s) {
            const int split = static_cast<int>(s);
            const auto fits = cross_fit_nuisances(d, plan, split, opts.specs, opts.clip, rng.child("split", s));
            for (std::size_t e = 0; e < n_est; ++e) {
                for (int v = 0; v < 2; ++v) {
                    const auto variant = v == 0 ? DmlVariant::Dml1 : DmlVariant::Dml2;
                    const double g = estimate_dml(d, plan, split, fits, families[e], variant,
                                                  opts.dml1_size_weighted).gamma;
                    dml[e][static_cast<std::size_t>(v)][s] = {g, variance_dml(d, plan, split, fits, families[e], g)};
                }
            }
        });
    }

    const Aggregation agg = opts.n_splits == 1 ? Aggregation::Single : opts.aggregation;
    for (std::size_t e = 0; e < n_est; ++e) {
        const auto& w = families[e];
        for (Method m : opts.methods) {
            EstimateReport r;
            r.estimand = opts.estimands[e];
            r.method = m;
            r.alpha = opts.alpha;
            r.n = d.n();
            if (is_dml(m)) {
                r.per_split = dml[e][m == Method::Dml1 ? 0 : 1];
                r.aggregation = agg;
                r.k_folds = opts.k_folds;
                r.n_splits = opts.n_splits;
                const SplitStat s = aggregate_splits(r.per_split, agg);
                r.gamma_hat = s.gamma;
                r.sigma2 = s.sigma2;
            } else {
                r.aggregation = Aggregation::Single;
                r.k_folds = 0;
                r.n_splits = 1;
                if (m == Method::Eif) {
                    r.gamma_hat = estimate_eif(d, *full, w);
                    r.sigma2 = variance_eif(d, *full, w, r.gamma_hat);
                } else {
                    const bool one = m == Method::Naive1;
                    r.gamma_hat = one ? estimate_naive1(d, *full, w) : estimate_naive2(d, *full, w);
                    if (opts.naive_variance) {
                        r.sigma2 = variance_naive_comparison(d, *full, w, r.gamma_hat,
                                                             one ? NaiveKind::Naive1 : NaiveKind::Naive2);
                        r.warnings.emplace_back(kNaiveWarning);
                    } else {
                        r.sigma2 = kNaN;
                    }
                }
                r.per_split = {{r.gamma_hat, r.sigma2}};
            }
            if (std::isfinite(r.sigma2)) {
                r.se = std::sqrt(r.sigma2 / static_cast<double>(r.n));
                r.ci = wald_ci(r.gamma_hat, r.sigma2, r.n, r.alpha);
            } else {
                r.se = kNaN;
                r.ci = {kNaN, kNaN};
            }
            if (auto warn = r.estimand.warning()) r.warnings.push_back(*warn);
            run.reports.push_back(std::move(r));
        }
    }
    return run;
}

}  // namespace wate
