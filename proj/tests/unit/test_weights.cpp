#include "wate/errors.hpp"
#include "wate/weights.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace wate;

namespace {

std::vector<EstimandSpec> all_families() {
    return {EstimandSpec::of(Family::ATE), EstimandSpec::of(Family::ATT), EstimandSpec::of(Family::ATC),
            EstimandSpec::of(Family::ATO), EstimandSpec::of(Family::ATEN), EstimandSpec::atb(3, 4),
            EstimandSpec::atb(4, 3),       EstimandSpec::atb(2, 4),       EstimandSpec::atb(4, 2),
            EstimandSpec::atb(4, 4),       EstimandSpec::atb(2.5, 3.5)};
}

std::vector<double> grid() {
    std::vector<double> g;
    for (int i = 1; i <= 19; ++i) g.push_back(0.05 * i);
    return g;
}

}  // namespace

TEST(WeightFamily, DerivativesMatchCentralDifferences) {
    // Fourth-order stencil: truncation stays below 1e-7 even where ATEN's
    // higher derivatives blow up near the grid edges.
    const double h = 1e-4;
    for (const auto& spec : all_families()) {
        const WeightFamily w(spec);
        for (int order = 1; order <= 3; ++order) {
            for (double t : grid()) {
                const auto f = [&](double u) { return w.eval(u, order - 1); };
                const double fd = (-f(t + 2 * h) + 8 * f(t + h) - 8 * f(t - h) + f(t - 2 * h)) / (12 * h);
                EXPECT_NEAR(w.eval(t, order), fd, 1e-6) << spec.label() << " order " << order << " t " << t;
            }
        }
    }
}

TEST(WeightFamily, TableValues) {
    const WeightFamily ato(EstimandSpec::of(Family::ATO));
    EXPECT_DOUBLE_EQ(ato.eval(0.5, 0), 0.25);
    EXPECT_DOUBLE_EQ(ato.eval(0.5, 1), 0.0);
    const WeightFamily ate(EstimandSpec::of(Family::ATE));
    for (double t : grid()) EXPECT_EQ(ate.lambda(t), 1.0);
    const WeightFamily aten(EstimandSpec::of(Family::ATEN));
    EXPECT_NEAR(aten.lambda(0.5), std::log(2.0), 1e-15);
    EXPECT_NEAR(aten.d1(0.5), 0.0, 1e-15);
    const WeightFamily b34(EstimandSpec::atb(3, 4));
    EXPECT_DOUBLE_EQ(b34.lambda(0.5), 0.03125);
}

TEST(WeightFamily, StructuralZeros) {
    const WeightFamily ate(EstimandSpec::of(Family::ATE)), att(EstimandSpec::of(Family::ATT)),
        atc(EstimandSpec::of(Family::ATC)), ato(EstimandSpec::of(Family::ATO));
    for (double t : grid()) {
        for (int k = 1; k <= 3; ++k) EXPECT_EQ(ate.eval(t, k), 0.0);
        EXPECT_EQ(att.d2(t), 0.0);
        EXPECT_EQ(att.d3(t), 0.0);
        EXPECT_EQ(atc.d2(t), 0.0);
        EXPECT_EQ(atc.d3(t), 0.0);
        EXPECT_EQ(ato.d2(t), -2.0);
        EXPECT_EQ(ato.d3(t), 0.0);
    }
}

TEST(WeightFamily, NonNegativeOnInterior) {
    for (const auto& spec : all_families()) {
        const WeightFamily w(spec);
        for (double t : grid()) EXPECT_GE(w.lambda(t), 0.0) << spec.label();
    }
}

TEST(WeightFamily, AtenFirstDerivativeClosedForm) {
    const WeightFamily aten(EstimandSpec::of(Family::ATEN));
    for (double t : grid()) EXPECT_NEAR(aten.d1(t), std::log((1 - t) / t), 1e-14);
}

TEST(WeightFamily, BetaTwoTwoMatchesOverlap) {
    const WeightFamily b(EstimandSpec::atb(2, 2)), o(EstimandSpec::of(Family::ATO));
    for (double t : grid())
        for (int k = 0; k <= 3; ++k) EXPECT_NEAR(b.eval(t, k), o.eval(t, k), 1e-15) << k;
}

TEST(WeightFamily, ReductionMapsToNamedFamilies) {
    EXPECT_EQ(atb_reduction_check(2, 2).family(), Family::ATO);
    EXPECT_EQ(atb_reduction_check(1, 1).family(), Family::ATE);
    EXPECT_EQ(atb_reduction_check(2, 1).family(), Family::ATT);
    EXPECT_EQ(atb_reduction_check(1, 2).family(), Family::ATC);
    EXPECT_EQ(atb_reduction_check(3, 4).label(), "ATB(3,4)");
    EXPECT_THROW(atb_reduction_check(0.5, 1), ConfigError);
    for (auto [a, b] : {std::pair{1.0, 1.0}, {2.0, 1.0}, {1.0, 2.0}, {2.0, 2.0}}) {
        const WeightFamily direct(EstimandSpec::atb(a, b)), reduced(atb_reduction_check(a, b));
        for (double t : grid())
            for (int k = 0; k <= 3; ++k) EXPECT_NEAR(direct.eval(t, k), reduced.eval(t, k), 1e-15);
    }
}

TEST(WeightFamily, TiltingWeights) {
    const WeightFamily att(EstimandSpec::of(Family::ATT)), ato(EstimandSpec::of(Family::ATO));
    EXPECT_DOUBLE_EQ(tilting_weight(att, 0.3, 1), 1.0);
    EXPECT_NEAR(tilting_weight(att, 0.3, 0), 0.3 / 0.7, 1e-15);
    EXPECT_NEAR(tilting_weight(ato, 0.2, 1), 0.8, 1e-15);
}

TEST(WeightFamily, DomainAndOrderErrors) {
    const WeightFamily w(EstimandSpec::of(Family::ATEN));
    EXPECT_THROW(w.eval(0.0, 0), DomainError);
    EXPECT_THROW(w.eval(1.0, 1), DomainError);
    EXPECT_THROW(w.eval(1.5, 0), DomainError);
    EXPECT_THROW(lambda_eval(w, 0.5, 4), ConfigError);
    EXPECT_THROW(tilting_weight(w, 1.0, 1), DomainError);
}
