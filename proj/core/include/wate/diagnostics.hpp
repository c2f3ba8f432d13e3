#pragma once

#include "wate/dataset.hpp"
#include "wate/learners.hpp"
#include "wate/weights.hpp"

#include <nlohmann/json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace wate {

/// Scale used to standardize mean differences.
enum class AsmdScale {
    UnweightedPooled,  // sqrt((s1^2 + s0^2) / 2) from raw arm variances
    WeightedPooled,    // same with the tilted arm variances
};

std::string_view asmd_scale_name(AsmdScale s);

struct BalanceEntry {
    std::string covariate;
    std::string weighting;  // "unweighted" or an estimand label
    double mean1 = 0.0;     // weighted arm means and variances
    double mean0 = 0.0;
    double var1 = 0.0;
    double var0 = 0.0;
    std::optional<double> asmd;  // empty when the pooled SD is zero
    bool flagged = false;        // asmd > threshold
};

struct BalanceTable {
    double threshold = 0.1;
    AsmdScale scale = AsmdScale::UnweightedPooled;
    std::vector<std::string> weightings;  // "unweighted" first
    std::vector<BalanceEntry> entries;    // covariate-major, weightings in order

    const BalanceEntry& at(std::size_t covariate, std::size_t weighting) const {
        return entries.at(covariate * weightings.size() + weighting);
    }

    std::string to_csv() const;
    /// Long format (covariate, estimand, asmd) for love plots.
    std::string love_plot_csv() const;
    nlohmann::json to_json() const;
};

/// Arm means under tilting weights lambda(e)/e (treated) and
/// lambda(e)/(1-e) (controls), normalized within each arm.
BalanceTable balance_table(const Dataset& d, const NuisanceFit& fit, const std::vector<WeightFamily>& families,
                           double threshold = 0.1, AsmdScale scale = AsmdScale::UnweightedPooled);

struct ArmOverlap {
    int arm = 0;
    Index size = 0;
    std::vector<Index> counts;
    double min = 0.0;
    double max = 0.0;
    std::vector<std::pair<double, double>> quantiles;  // (level in %, value)
    Index clipped_low = 0;
    Index clipped_high = 0;
};

struct OverlapSummary {
    std::vector<double> edges;  // bins + 1 shared edges over [clip lo, clip hi]
    ArmOverlap treated;
    ArmOverlap control;

    std::string to_csv() const;
    nlohmann::json to_json() const;
};

/// Histograms of the clipped propensity per arm; quantiles use linear
/// interpolation between order statistics.
OverlapSummary overlap_summary(const Dataset& d, const NuisanceFit& fit, int bins = 20);

}  // namespace wate
