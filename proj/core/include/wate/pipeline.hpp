#pragma once

#include "wate/dataset.hpp"
#include "wate/estimand.hpp"
#include "wate/inference.hpp"
#include "wate/learners.hpp"
#include "wate/rng.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace wate {

enum class Method { Naive1, Naive2, Eif, Dml1, Dml2 };

std::string_view method_name(Method m);
Method parse_method(std::string_view text);
std::vector<Method> all_methods();

std::string_view aggregation_name(Aggregation a);
Aggregation parse_aggregation(std::string_view text);

struct EstimateReport {
    EstimandSpec estimand = EstimandSpec::of(Family::ATE);
    Method method = Method::Eif;
    double gamma_hat = 0.0;
    double sigma2 = 0.0;
    double se = 0.0;  // sqrt(sigma2 / n)
    Interval ci;
    double alpha = 0.05;
    std::vector<SplitStat> per_split;
    Aggregation aggregation = Aggregation::Single;
    Index n = 0;
    int k_folds = 0;
    int n_splits = 0;
    std::vector<std::string> warnings;

    nlohmann::json to_json() const;
};

struct EstimationOptions {
    std::vector<EstimandSpec> estimands = default_estimands();
    std::vector<Method> methods = all_methods();
    int k_folds = 5;
    int n_splits = 100;
    std::uint64_t seed = 0;
    NuisanceSpecs specs = NuisanceSpecs::simple_glm();
    ClipBounds clip;
    double alpha = 0.05;
    Aggregation aggregation = Aggregation::Median;
    bool dml1_size_weighted = false;
    /// Attach the comparison-only variance to naive estimators (with a
    /// warning); when false their se and interval are NaN.
    bool naive_variance = true;
    int threads = 1;

    void validate() const;
};

struct EstimationRun {
    std::vector<EstimateReport> reports;  // estimand-major, in option order
    std::optional<NuisanceProvenance> full_sample_provenance;
    Index clipped_low = 0;   // full-sample fit, when one was made
    Index clipped_high = 0;
    std::vector<std::string> warnings;
};

/// Full pipeline over every (estimand, method) pair. Naive and EIF methods
/// share one full-sample fit; DML methods share the per-split cross fits.
/// Randomness comes from RngContract(opts.seed) and the split plan seed.
EstimationRun run_estimation(const Dataset& d, const EstimationOptions& opts);

/// Same with an explicit stream root and plan seed (used by replications).
EstimationRun run_estimation(const Dataset& d, const EstimationOptions& opts, const RngContract& rng,
                             std::uint64_t plan_seed);

}  // namespace wate
