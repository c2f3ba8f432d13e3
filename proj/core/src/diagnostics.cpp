#include "wate/diagnostics.hpp"

#include "wate/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace wate {

namespace {

std::string fmt6(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

struct Moments {
    double mean = 0.0;
    double var = 0.0;
};

Moments weighted_moments(const std::vector<double>& x, const std::vector<double>& w) {
    double sw = 0.0, sx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sw += w[i];
        sx += w[i] * x[i];
    }
    Moments m;
    m.mean = sx / sw;
    double ss = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) ss += w[i] * (x[i] - m.mean) * (x[i] - m.mean);
    m.var = ss / sw;
    return m;
}

double quantile_sorted(const std::vector<double>& v, double level) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    const double h = (static_cast<double>(v.size()) - 1.0) * level;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

}  // namespace

std::string_view asmd_scale_name(AsmdScale s) {
    return s == AsmdScale::UnweightedPooled ? "unweighted_pooled_sd" : "weighted_pooled_sd";
}

BalanceTable balance_table(const Dataset& d, const NuisanceFit& fit, const std::vector<WeightFamily>& families,
                           double threshold, AsmdScale scale) {
    if (fit.size() != d.n()) throw RowError("balance needs a nuisance fit covering every row");
    if (!(threshold >= 0.0)) throw ConfigError("balance threshold must be >= 0");

    BalanceTable table;
    table.threshold = threshold;
    table.scale = scale;
    table.weightings.emplace_back("unweighted");
    for (const auto& f : families) table.weightings.push_back(f.label());

    // Per-arm row lists and tilting weights, aligned with fit.rows.
    std::vector<Index> rows[2];
    std::vector<std::vector<double>> weights[2];
    for (auto& w : weights) w.resize(table.weightings.size());
    for (std::size_t i = 0; i < fit.rows.size(); ++i) {
        const Index r = fit.rows[i];
        const int arm = d.arm(r);
        rows[arm].push_back(r);
        weights[arm][0].push_back(1.0);
        for (std::size_t f = 0; f < families.size(); ++f)
            weights[arm][f + 1].push_back(families[f].tilting_weight(fit.e_hat[static_cast<Index>(i)], arm));
    }
    if (rows[0].empty() || rows[1].empty())
        throw DataError(rows[1].empty() ? "treated arm empty" : "control arm empty");

    for (Index j = 0; j < d.p(); ++j) {
        std::vector<double> x[2];
        for (int a = 0; a < 2; ++a)
            for (Index r : rows[a]) x[a].push_back(d.covariates()(r, j));
        const Moments raw1 = weighted_moments(x[1], weights[1][0]);
        const Moments raw0 = weighted_moments(x[0], weights[0][0]);
        for (std::size_t k = 0; k < table.weightings.size(); ++k) {
            const Moments m1 = weighted_moments(x[1], weights[1][k]);
            const Moments m0 = weighted_moments(x[0], weights[0][k]);
            BalanceEntry e;
            e.covariate = d.covariate_names()[static_cast<std::size_t>(j)];
            e.weighting = table.weightings[k];
            e.mean1 = m1.mean;
            e.mean0 = m0.mean;
            e.var1 = m1.var;
            e.var0 = m0.var;
            const double pooled = scale == AsmdScale::UnweightedPooled ? std::sqrt((raw1.var + raw0.var) / 2.0)
                                                                        : std::sqrt((m1.var + m0.var) / 2.0);
            if (pooled > 0.0) {
                e.asmd = std::abs(m1.mean - m0.mean) / pooled;
                e.flagged = *e.asmd > threshold;
            }
            table.entries.push_back(std::move(e));
        }
    }
    return table;
}

std::string BalanceTable::to_csv() const {
    std::ostringstream out;
    out << "covariate,weighting,mean_treated,mean_control,var_treated,var_control,asmd,flag\n";
    for (const auto& e : entries) {
        out << e.covariate << ',' << e.weighting << ',' << fmt6(e.mean1) << ',' << fmt6(e.mean0) << ','
            << fmt6(e.var1) << ',' << fmt6(e.var0) << ',' << (e.asmd ? fmt6(*e.asmd) : "NA") << ','
            << (e.flagged ? 1 : 0) << '\n';
    }
    return out.str();
}

std::string BalanceTable::love_plot_csv() const {
    std::ostringstream out;
    out << "covariate,estimand,asmd\n";
    for (const auto& e : entries)
        out << e.covariate << ',' << e.weighting << ',' << (e.asmd ? fmt6(*e.asmd) : "NA") << '\n';
    return out.str();
}

nlohmann::json BalanceTable::to_json() const {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& e : entries) {
        rows.push_back({{"covariate", e.covariate},
                        {"weighting", e.weighting},
                        {"mean_treated", e.mean1},
                        {"mean_control", e.mean0},
                        {"var_treated", e.var1},
                        {"var_control", e.var0},
                        {"asmd", e.asmd ? nlohmann::json(*e.asmd) : nlohmann::json(nullptr)},
                        {"flag", e.flagged}});
    }
    return {{"threshold", threshold},
            {"asmd_scale", asmd_scale_name(scale)},
            {"weightings", weightings},
            {"entries", rows}};
}

OverlapSummary overlap_summary(const Dataset& d, const NuisanceFit& fit, int bins) {
    if (bins < 2) throw ConfigError("overlap histogram needs at least 2 bins");
    OverlapSummary out;
    const double lo = fit.clip.lo, hi = fit.clip.hi;
    for (int b = 0; b <= bins; ++b) out.edges.push_back(lo + (hi - lo) * b / bins);

    std::vector<double> values[2];
    ArmOverlap* arms[2] = {&out.control, &out.treated};
    for (int a = 0; a < 2; ++a) {
        arms[a]->arm = a;
        arms[a]->counts.assign(static_cast<std::size_t>(bins), 0);
    }
    for (std::size_t i = 0; i < fit.rows.size(); ++i) {
        const int a = d.arm(fit.rows[i]);
        const double e = fit.e_hat[static_cast<Index>(i)];
        const double raw = fit.e_raw.size() ? fit.e_raw[static_cast<Index>(i)] : e;
        values[a].push_back(e);
        auto bin = static_cast<Index>(std::floor((e - lo) / (hi - lo) * bins));
        bin = std::clamp<Index>(bin, 0, bins - 1);
        ++arms[a]->counts[static_cast<std::size_t>(bin)];
        if (raw < lo) ++arms[a]->clipped_low;
        if (raw > hi) ++arms[a]->clipped_high;
    }
    for (int a = 0; a < 2; ++a) {
        auto& v = values[a];
        std::sort(v.begin(), v.end());
        auto& arm = *arms[a];
        arm.size = static_cast<Index>(v.size());
        arm.min = v.empty() ? std::numeric_limits<double>::quiet_NaN() : v.front();
        arm.max = v.empty() ? std::numeric_limits<double>::quiet_NaN() : v.back();
        for (double level : {1.0, 5.0, 50.0, 95.0, 99.0}) arm.quantiles.emplace_back(level, quantile_sorted(v, level / 100));
    }
    return out;
}

std::string OverlapSummary::to_csv() const {
    std::ostringstream out;
    out << "arm,bin_lo,bin_hi,count\n";
    for (const ArmOverlap* arm : {&treated, &control})
        for (std::size_t b = 0; b < arm->counts.size(); ++b)
            out << arm->arm << ',' << fmt6(edges[b]) << ',' << fmt6(edges[b + 1]) << ',' << arm->counts[b] << '\n';
    return out.str();
}

nlohmann::json OverlapSummary::to_json() const {
    auto arm_json = [](const ArmOverlap& a) {
        nlohmann::json q = nlohmann::json::object();
        for (const auto& [level, value] : a.quantiles) q[fmt6(level)] = value;
        return nlohmann::json{{"arm", a.arm},      {"size", a.size},
                              {"counts", a.counts}, {"min", a.min},
                              {"max", a.max},       {"quantiles", q},
                              {"clipped_low", a.clipped_low}, {"clipped_high", a.clipped_high}};
    };
    return {{"edges", edges}, {"treated", arm_json(treated)}, {"control", arm_json(control)}};
}

}  // namespace wate
