#include "wate/diagnostics.hpp"
#include "wate/errors.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace wate;
using wate::testing::make_fit;

namespace {

std::vector<WeightFamily> families() {
    std::vector<WeightFamily> out;
    for (const auto& s : default_estimands()) out.emplace_back(s);
    return out;
}

NuisanceFit full_glm_fit(const Dataset& d, ClipBounds clip = {1e-6, 1 - 1e-6}) {
    return fit_nuisances(d, d.all_rows(), d.all_rows(), NuisanceSpecs::simple_glm(), clip, RngContract(1));
}

}  // namespace

TEST(Balance, IdenticalArmsHaveZeroAsmd) {
    Eigen::MatrixXd x(10, 2);
    x << 1, 5, 2, 3, 3, 3, 4, 1, 5, 2,  //
        1, 5, 2, 3, 3, 3, 4, 1, 5, 2;
    Eigen::VectorXd a(10), y = Eigen::VectorXd::LinSpaced(10, 0, 1);
    a << 1, 1, 1, 1, 1, 0, 0, 0, 0, 0;
    const Dataset d(x, a, y, {"X1", "X2"});
    const auto table = balance_table(d, full_glm_fit(d), families());
    ASSERT_EQ(table.weightings.size(), 6u);
    EXPECT_EQ(table.weightings.front(), "unweighted");
    for (const auto& e : table.entries) {
        ASSERT_TRUE(e.asmd.has_value());
        EXPECT_NEAR(*e.asmd, 0.0, 1e-9) << e.covariate << " " << e.weighting;
        EXPECT_FALSE(e.flagged);
    }
}

TEST(Balance, WeightedMeansMatchOracle) {
    const auto d = wate::testing::random_dataset(120, 3, 4);
    auto s = RngContract(5).stream();
    Eigen::VectorXd e(120);
    for (Index i = 0; i < 120; ++i) e[i] = 0.1 + 0.8 * s.uniform();
    const auto fit = make_fit(d, e, Eigen::VectorXd::Zero(120), Eigen::VectorXd::Zero(120));
    const WeightFamily att(EstimandSpec::of(Family::ATT));
    const auto table = balance_table(d, fit, {att});
    for (Index j = 0; j < 3; ++j) {
        double s1 = 0, w1 = 0, s0 = 0, w0 = 0;
        for (Index i = 0; i < 120; ++i) {
            const double x = d.covariates()(i, j);
            if (d.treatment()[i] > 0.5) {
                s1 += x, w1 += 1;
            } else {
                s0 += e[i] / (1 - e[i]) * x, w0 += e[i] / (1 - e[i]);
            }
        }
        const auto& entry = table.at(static_cast<std::size_t>(j), 1);
        EXPECT_NEAR(entry.mean1, s1 / w1, 1e-12);
        EXPECT_NEAR(entry.mean0, s0 / w0, 1e-12);
        const auto& raw = table.at(static_cast<std::size_t>(j), 0);
        const double pooled = std::sqrt((raw.var1 + raw.var0) / 2);
        EXPECT_NEAR(*entry.asmd, std::abs(s1 / w1 - s0 / w0) / pooled, 1e-12);
    }
}

TEST(Balance, OverlapWeightsBalanceExactlyUnderLogisticFit) {
    // The logistic score equations make ATO-weighted arm means of every
    // design column coincide.
    const auto d = wate::testing::random_dataset(400, 4, 6);
    const auto table = balance_table(d, full_glm_fit(d), {WeightFamily(EstimandSpec::of(Family::ATO))});
    for (std::size_t j = 0; j < 4; ++j) {
        EXPECT_NEAR(*table.at(j, 1).asmd, 0.0, 1e-7);
        EXPECT_GT(*table.at(j, 0).asmd, 0.0);
    }
}

TEST(Balance, ConstantCovariateHasNoAsmd) {
    const auto base = wate::testing::random_dataset(60, 2, 7);
    Eigen::MatrixXd x = base.covariates();
    x.col(1).setConstant(3.0);
    const Dataset d(x, base.treatment(), base.outcome(), {"X1", "C"});
    const auto fit = make_fit(d, Eigen::VectorXd::Constant(60, 0.5), Eigen::VectorXd::Zero(60),
                              Eigen::VectorXd::Zero(60));
    const auto table = balance_table(d, fit, families());
    EXPECT_FALSE(table.at(1, 0).asmd.has_value());
    EXPECT_FALSE(table.at(1, 0).flagged);
    EXPECT_NE(table.to_csv().find("C,unweighted,3,3,0,0,NA,0"), std::string::npos);
    EXPECT_TRUE(table.to_json()["entries"][static_cast<std::size_t>(6)]["asmd"].is_null());
}

TEST(Balance, ThresholdFlagsAndScales) {
    const auto d = wate::testing::random_dataset(300, 2, 8);
    const auto fit = full_glm_fit(d);
    const auto strict = balance_table(d, fit, families(), 0.0);
    const auto loose = balance_table(d, fit, families(), 10.0);
    for (std::size_t i = 0; i < strict.entries.size(); ++i) {
        EXPECT_EQ(strict.entries[i].flagged, *strict.entries[i].asmd > 0.0);
        EXPECT_FALSE(loose.entries[i].flagged);
    }
    const auto weighted = balance_table(d, fit, families(), 0.1, AsmdScale::WeightedPooled);
    EXPECT_EQ(weighted.to_json()["asmd_scale"], "weighted_pooled_sd");
    // The unweighted rows use the same variances under both scales.
    EXPECT_DOUBLE_EQ(*weighted.at(0, 0).asmd, *strict.at(0, 0).asmd);
    EXPECT_THROW(balance_table(d, fit, families(), -1.0), ConfigError);
    EXPECT_EQ(strict.love_plot_csv().substr(0, 23), "covariate,estimand,asmd");
}

TEST(Overlap, CountsQuantilesAndClipping) {
    const auto d = wate::testing::random_dataset(500, 3, 9);
    const ClipBounds clip{0.2, 0.8};
    const auto fit = full_glm_fit(d, clip);
    const auto o = overlap_summary(d, fit, 10);
    ASSERT_EQ(o.edges.size(), 11u);
    EXPECT_DOUBLE_EQ(o.edges.front(), 0.2);
    EXPECT_DOUBLE_EQ(o.edges.back(), 0.8);
    Index total = 0;
    for (const auto* arm : {&o.treated, &o.control}) {
        Index sum = 0;
        for (auto c : arm->counts) sum += c;
        EXPECT_EQ(sum, arm->size);
        total += arm->size;
        for (std::size_t q = 1; q < arm->quantiles.size(); ++q)
            EXPECT_LE(arm->quantiles[q - 1].second, arm->quantiles[q].second);
        EXPECT_GE(arm->min, 0.2);
        EXPECT_LE(arm->max, 0.8);
    }
    EXPECT_EQ(total, 500);
    EXPECT_EQ(o.treated.size, d.treated_count());
    EXPECT_EQ(o.treated.clipped_low + o.control.clipped_low, fit.clipped_low());
    EXPECT_EQ(o.treated.clipped_high + o.control.clipped_high, fit.clipped_high());
    EXPECT_EQ(o.to_csv().substr(0, 23), "arm,bin_lo,bin_hi,count");
    EXPECT_THROW(overlap_summary(d, fit, 1), ConfigError);
}
