#include "wate/errors.hpp"
#include "wate/glm.hpp"
#include "wate/learners.hpp"
#include "wate/simulation.hpp"
#include "wate/stumps.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace wate;

namespace {

Dataset balanced_zero_signal() {
    Eigen::MatrixXd x(8, 2);
    x << 1, 4, 2, 1, 3, 3, 4, 2,  // treated
        1, 4, 2, 1, 3, 3, 4, 2;   // control, same covariate rows
    Eigen::VectorXd a(8), y(8);
    a << 1, 1, 1, 1, 0, 0, 0, 0;
    y << 1, 2, 3, 4, 5, 6, 7, 8;
    return Dataset(x, a, y);
}

Dataset separable_1d() {
    Eigen::MatrixXd x(10, 1);
    Eigen::VectorXd a(10), y(10);
    for (int i = 0; i < 10; ++i) {
        x(i, 0) = i + 1;
        a[i] = i >= 5 ? 1 : 0;
        y[i] = i;
    }
    return Dataset(x, a, y);
}

/// Pseudo-random values with no relation to the data.
class NoiseOracle final : public OracleProvider {
public:
    double propensity(const Dataset&, Index row) const override {
        return 0.05 + 0.9 * RngContract(77).child("noise", static_cast<std::uint64_t>(row)).stream().uniform();
    }
    double outcome(const Dataset&, Index row, int arm) const override {
        return 3.0 * RngContract(78 + arm).child("noise", static_cast<std::uint64_t>(row)).stream().normal();
    }
    std::string name() const override { return "noise"; }
};

/// Fails on every lookup.
class BrokenOracle final : public OracleProvider {
public:
    double propensity(const Dataset&, Index) const override { throw DataError("no propensity"); }
    double outcome(const Dataset&, Index, int) const override { throw DataError("no outcome"); }
    std::string name() const override { return "broken"; }
};

const RngContract kRng(11);

}  // namespace

TEST(LearnerSpec, ParseAndDescribe) {
    EXPECT_EQ(LearnerSpec::parse("logistic").kind, LearnerKind::Logistic);
    EXPECT_EQ(LearnerSpec::parse("GBT").kind, LearnerKind::GbtStumps);
    const auto s = LearnerSpec::parse("stack(linear+gbt[rounds=50])");
    ASSERT_EQ(s.kind, LearnerKind::Stack);
    ASSERT_EQ(s.stack_members.size(), 2u);
    EXPECT_DOUBLE_EQ(s.stack_members[1].param("rounds", 0), 50);
    EXPECT_EQ(s.describe(), "stack(linear+gbt_stumps[rounds=50])");
    EXPECT_THROW(LearnerSpec::parse("forest"), ConfigError);
    EXPECT_THROW(LearnerSpec::parse("oracle"), ConfigError);
}

TEST(LearnerSpec, ValidationRules) {
    EXPECT_THROW(LearnerSpec::parse("stack(linear)").validate(NuisanceTarget::Outcome0), ConfigError);
    EXPECT_THROW(LearnerSpec::parse("gbt[rounds=0]").validate(NuisanceTarget::Outcome0), ConfigError);
    EXPECT_THROW(LearnerSpec::parse("gbt[learning_rate=1.5]").validate(NuisanceTarget::Outcome0), ConfigError);
    EXPECT_THROW(LearnerSpec::parse("gbt[depth=2]").validate(NuisanceTarget::Outcome0), ConfigError);
    EXPECT_THROW(LearnerSpec::parse("linear").validate(NuisanceTarget::Propensity), ConfigError);
    EXPECT_THROW(LearnerSpec::parse("logistic").validate(NuisanceTarget::Outcome1), ConfigError);
    auto nested = LearnerSpec::stack({LearnerSpec::parse("linear"), LearnerSpec::parse("stack(linear+gbt)")});
    EXPECT_THROW(nested.validate(NuisanceTarget::Outcome0), ConfigError);
    EXPECT_NO_THROW(LearnerSpec::parse("gbt[learning_rate=1]").validate(NuisanceTarget::Propensity));
}

TEST(ClipBounds, Validation) {
    EXPECT_NO_THROW((ClipBounds{0.01, 0.99}.validate()));
    EXPECT_THROW((ClipBounds{0.0, 0.99}.validate()), ConfigError);
    EXPECT_THROW((ClipBounds{0.6, 0.4}.validate()), ConfigError);
}

TEST(Propensity, ZeroSignalGivesTreatedFraction) {
    const auto d = balanced_zero_signal();
    const auto m = fit_propensity(d, d.all_rows(), LearnerSpec::of(LearnerKind::Logistic), kRng);
    const auto p = m->predict(d, d.all_rows());
    for (Index i = 0; i < p.size(); ++i) EXPECT_NEAR(p[i], 0.5, 1e-6);
}

TEST(Propensity, SeparableDataEngagesRidgeAtPenalizedOptimum) {
    const auto d = separable_1d();
    const auto rows = d.all_rows();
    const auto m = fit_propensity(d, rows, LearnerSpec::of(LearnerKind::Logistic), kRng);
    EXPECT_GT(m->ridge(), 0.0);
    const auto p = m->predict(d, rows);
    EXPECT_TRUE(p.allFinite());

    // Oracle: the gradient of the penalized log-likelihood vanishes at the fit.
    glm::FeatureMap map(d.covariates(), false);
    const Eigen::MatrixXd z = map.design(d.covariates());
    const auto sol = glm::logistic(z, d.treatment(), {});
    Eigen::VectorXd prob(10);
    for (Index i = 0; i < 10; ++i) prob[i] = glm::sigmoid(z.row(i).dot(sol.coef));
    Eigen::VectorXd grad = z.transpose() * (d.treatment() - prob);
    grad.tail(1) -= sol.ridge * 10 * sol.coef.tail(1);
    EXPECT_LT(grad.cwiseAbs().maxCoeff(), 1e-6);
    EXPECT_NEAR((prob - p).cwiseAbs().maxCoeff(), 0.0, 1e-12);
}

TEST(Propensity, IrlsDevianceDecreasesMonotonically) {
    const auto d = wate::testing::random_dataset(300, 4, 3);
    glm::FeatureMap map(d.covariates(), true);
    const auto sol = glm::logistic(map.design(d.covariates()), d.treatment(), {});
    ASSERT_TRUE(sol.converged);
    EXPECT_EQ(sol.ridge, 0.0);
    for (std::size_t i = 1; i < sol.deviance_trace.size(); ++i)
        EXPECT_LE(sol.deviance_trace[i], sol.deviance_trace[i - 1]);
}

TEST(Propensity, ConvergenceErrorCarriesDeviance) {
    const auto d = wate::testing::random_dataset(300, 4, 3);
    glm::FeatureMap map(d.covariates(), false);
    glm::IrlsOptions opts;
    opts.max_iter = 1;
    opts.tol = 1e-300;
    try {
        glm::logistic(map.design(d.covariates()), d.treatment(), opts);
        FAIL() << "expected ConvergenceError";
    } catch (const ConvergenceError& e) {
        EXPECT_TRUE(std::isfinite(e.last_deviance()));
        EXPECT_GT(e.last_deviance(), 0.0);
    }
}

TEST(Propensity, SingleArmRowsRejected) {
    const auto d = separable_1d();
    const RowSet treated{5, 6, 7, 8, 9};
    EXPECT_THROW(fit_propensity(d, treated, LearnerSpec::of(LearnerKind::Logistic), kRng), DataError);
}

TEST(Propensity, OracleOnRandomDesign) {
    const auto dgp = DgpSpec::named(4);
    const auto sim = generate(dgp, 50, kRng);
    const auto spec = LearnerSpec::oracle_of(std::make_shared<DgpOracle>(dgp));
    const auto p = fit_propensity(sim.data, sim.data.all_rows(), spec, kRng)->predict(sim.data, sim.data.all_rows());
    for (Index i = 0; i < p.size(); ++i) EXPECT_EQ(p[i], 0.3);
}

TEST(Propensity, GbtProbabilitiesInsideUnitInterval) {
    const auto d = wate::testing::random_dataset(200, 3, 4);
    const auto p = fit_propensity(d, d.all_rows(), LearnerSpec::parse("gbt"), kRng)->predict(d, d.all_rows());
    EXPECT_GT(p.minCoeff(), 0.0);
    EXPECT_LT(p.maxCoeff(), 1.0);
}

TEST(Outcome, ConstantOutcomePredictsConstant) {
    Eigen::MatrixXd x = Eigen::MatrixXd::Random(12, 3);
    Eigen::VectorXd a(12), y = Eigen::VectorXd::Constant(12, 4.25);
    for (int i = 0; i < 12; ++i) a[i] = i % 2;
    const Dataset d(x, a, y);
    for (const char* kind : {"linear", "linear_interactions", "gbt"}) {
        const auto p = fit_outcome(d, d.all_rows(), 1, LearnerSpec::parse(kind), kRng)->predict(d, d.all_rows());
        for (Index i = 0; i < p.size(); ++i) EXPECT_NEAR(p[i], 4.25, 1e-10) << kind;
    }
}

TEST(Outcome, ExactLinearTruthInterpolated) {
    auto s = RngContract(8).stream();
    Eigen::MatrixXd x(40, 3);
    Eigen::VectorXd a(40), y(40);
    for (int i = 0; i < 40; ++i) {
        for (int j = 0; j < 3; ++j) x(i, j) = s.normal();
        a[i] = i % 2;
        y[i] = 2.0 - x(i, 0) + 3.0 * x(i, 2);
    }
    const Dataset d(x, a, y);
    const RowSet treated = d.arm_rows(d.all_rows(), 1);
    const auto p = fit_outcome(d, d.all_rows(), 1, LearnerSpec::of(LearnerKind::Linear), kRng)->predict(d, treated);
    for (std::size_t i = 0; i < treated.size(); ++i) EXPECT_NEAR(p[static_cast<Index>(i)], y[treated[i]], 1e-8);
}

TEST(Outcome, OlsMatchesNormalEquations) {
    const auto d = wate::testing::random_dataset(150, 5, 21);
    const RowSet control = d.arm_rows(d.all_rows(), 0);
    const auto p = fit_outcome(d, d.all_rows(), 0, LearnerSpec::of(LearnerKind::Linear), kRng)->predict(d, control);
    // Oracle: raw (unstandardized) normal equations.
    Eigen::MatrixXd z(static_cast<Index>(control.size()), 6);
    Eigen::VectorXd y(static_cast<Index>(control.size()));
    for (std::size_t i = 0; i < control.size(); ++i) {
        z(static_cast<Index>(i), 0) = 1.0;
        z.row(static_cast<Index>(i)).tail(5) = d.covariates().row(control[i]);
        y[static_cast<Index>(i)] = d.outcome()[control[i]];
    }
    const Eigen::VectorXd beta = (z.transpose() * z).ldlt().solve(z.transpose() * y);
    EXPECT_LT((z * beta - p).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Outcome, RankDeficientDesignFallsBackToRidge) {
    auto s = RngContract(2).stream();
    Eigen::MatrixXd x(6, 8);
    for (Index i = 0; i < 6; ++i)
        for (Index j = 0; j < 8; ++j) x(i, j) = s.normal();
    Eigen::VectorXd a = Eigen::VectorXd::Ones(6), y(6);
    a[0] = 0;
    for (Index i = 0; i < 6; ++i) y[i] = s.normal();
    const Dataset d(x, a, y);
    const auto m = fit_outcome(d, d.all_rows(), 1, LearnerSpec::of(LearnerKind::Linear), kRng);
    EXPECT_GT(m->ridge(), 0.0);
    EXPECT_TRUE(m->predict(d, d.all_rows()).allFinite());
}

TEST(Outcome, EmptyArmRejected) {
    const auto d = separable_1d();
    const RowSet control{0, 1, 2, 3, 4};
    EXPECT_THROW(fit_outcome(d, control, 1, LearnerSpec::of(LearnerKind::Linear), kRng), DataError);
}

TEST(Outcome, OracleOnDesignReturnsTrueMean) {
    const auto dgp = DgpSpec::named(2);
    const auto sim = generate(dgp, 30, kRng);
    const auto spec = LearnerSpec::oracle_of(std::make_shared<DgpOracle>(dgp));
    const auto rows = sim.data.all_rows();
    const auto p0 = fit_outcome(sim.data, rows, 0, spec, kRng)->predict(sim.data, rows);
    const auto& x = sim.data.covariates();
    for (Index i = 0; i < 30; ++i) EXPECT_DOUBLE_EQ(p0[i], x(i, 0) + x(i, 4) + x(i, 3) * x(i, 4));
}

TEST(Stumps, RegressionRecoversStep) {
    Eigen::MatrixXd x(100, 1);
    Eigen::VectorXd y(100);
    for (int i = 0; i < 100; ++i) {
        x(i, 0) = i;
        y[i] = i < 40 ? -1.0 : 2.0;
    }
    const auto b = StumpBooster::fit(x, y, {200, 0.1, false});
    const auto p = b.predict(x);
    EXPECT_NEAR(p[0], -1.0, 1e-6);
    EXPECT_NEAR(p[99], 2.0, 1e-6);
    EXPECT_NEAR(b.stumps().front().threshold, 39.5, 1e-12);
}

TEST(Stacking, SimplexProjection) {
    Eigen::VectorXd v(2);
    v << 2.0, 0.0;
    EXPECT_TRUE(project_to_simplex(v).isApprox(Eigen::Vector2d(1.0, 0.0)));
    v << 0.6, 0.6;
    EXPECT_TRUE(project_to_simplex(v).isApprox(Eigen::Vector2d(0.5, 0.5)));
    Eigen::VectorXd w(3);
    w << 0.2, -1.0, 0.5;
    const auto p = project_to_simplex(w);
    EXPECT_NEAR(p.sum(), 1.0, 1e-15);
    EXPECT_GE(p.minCoeff(), 0.0);
    EXPECT_EQ(p[1], 0.0);
}

TEST(Stacking, ProjectedGradientMatchesGridSearch) {
    auto s = RngContract(4).stream();
    const Index m = 300;
    Eigen::MatrixXd preds(m, 2);
    Eigen::VectorXd y(m);
    for (Index i = 0; i < m; ++i) {
        const double truth = s.normal();
        preds(i, 0) = truth + 0.8 * s.normal();
        preds(i, 1) = truth + 0.5 * s.normal();
        y[i] = truth + 0.3 * s.normal();
    }
    const auto w = simplex_projected_gradient(preds, y, false);
    double best_w = 0, best_loss = 1e300;
    for (int k = 0; k <= 100000; ++k) {
        const double a = k / 100000.0;
        const double loss = (a * preds.col(0) + (1 - a) * preds.col(1) - y).squaredNorm();
        if (loss < best_loss) best_loss = loss, best_w = a;
    }
    EXPECT_NEAR(w[0], best_w, 1e-4);
    EXPECT_NEAR(w[0] + w[1], 1.0, 1e-12);
}

TEST(Stacking, IdenticalMembersSplitEvenly) {
    const auto d = wate::testing::random_dataset(200, 3, 5);
    const auto spec = LearnerSpec::stack({LearnerSpec::parse("linear"), LearnerSpec::parse("linear")});
    const auto m = fit_stack(d, d.all_rows(), NuisanceTarget::Outcome1, spec, kRng);
    EXPECT_DOUBLE_EQ(m->weights()[0], 0.5);
    EXPECT_DOUBLE_EQ(m->weights()[1], 0.5);
}

TEST(Stacking, OracleMemberDominatesNoise) {
    const auto dgp = DgpSpec::named(2);
    const auto sim = generate(dgp, 2000, RngContract(31));
    const auto oracle = LearnerSpec::oracle_of(std::make_shared<DgpOracle>(dgp));
    const auto noise = LearnerSpec::oracle_of(std::make_shared<NoiseOracle>());
    const auto spec = LearnerSpec::stack({noise, oracle});
    const auto rows = sim.data.all_rows();
    for (auto target : {NuisanceTarget::Outcome0, NuisanceTarget::Outcome1, NuisanceTarget::Propensity}) {
        const auto m = fit_stack(sim.data, rows, target, spec, kRng);
        EXPECT_GE(m->weights()[1], 0.99) << target_name(target);
        EXPECT_NEAR(m->weights()[0] + m->weights()[1], 1.0, 1e-12);
    }
}

TEST(Stacking, MemberFailingEverywhereIsNamed) {
    const auto d = wate::testing::random_dataset(100, 2, 12);
    const auto spec = LearnerSpec::stack({LearnerSpec::parse("linear"), LearnerSpec::oracle_of(std::make_shared<BrokenOracle>())});
    try {
        fit_stack(d, d.all_rows(), NuisanceTarget::Outcome1, spec, kRng);
        FAIL() << "expected ConfigError";
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("broken"), std::string::npos) << e.what();
    }
}

TEST(Stacking, PartiallyFailingMembersAreExcluded) {
    // The treated unit is held out of one CV fold, so every member fails
    // there and none is usable.
    Eigen::MatrixXd x(4, 1);
    x << 1, 2, 3, 4;
    Eigen::VectorXd a(4), y(4);
    a << 1, 0, 0, 0;
    y << 1, 2, 3, 4;
    const Dataset d(x, a, y);
    const auto spec = LearnerSpec::stack({LearnerSpec::parse("logistic"), LearnerSpec::parse("gbt")}, 4);
    EXPECT_THROW(fit_stack(d, d.all_rows(), NuisanceTarget::Propensity, spec, kRng), ConfigError);
}

TEST(CrossFit, OracleFoldsCarryTrueFunctions) {
    const auto dgp = DgpSpec::named(2);
    const auto sim = generate(dgp, 200, kRng);
    const auto plan = SplitPlan::make(200, 2, 1, 3);
    const auto specs = NuisanceSpecs::oracle(std::make_shared<DgpOracle>(dgp));
    const auto fits = cross_fit_nuisances(sim.data, plan, 0, specs, {1e-6, 1 - 1e-6}, kRng);
    ASSERT_EQ(fits.size(), 2u);
    for (int k = 0; k < 2; ++k) {
        const auto& f = fits[static_cast<std::size_t>(k)];
        EXPECT_TRUE(audit_honesty(f, plan, 0, k));
        for (Index i = 0; i < f.size(); ++i) {
            const Index r = f.rows[static_cast<std::size_t>(i)];
            EXPECT_DOUBLE_EQ(f.mu0_hat[i], sim.mu0[r]);
            EXPECT_DOUBLE_EQ(f.mu1_hat[i], sim.mu1[r]);
            EXPECT_DOUBLE_EQ(f.e_raw[i], sim.e[r]);
        }
    }
}

TEST(CrossFit, HonestyAuditDetectsLeakage) {
    const auto d = wate::testing::random_dataset(100, 3, 6);
    const auto plan = SplitPlan::make(100, 5, 1, 3);
    auto fits = cross_fit_nuisances(d, plan, 0, NuisanceSpecs::simple_glm(), {}, kRng);
    EXPECT_TRUE(audit_honesty(fits[2], plan, 0, 2));
    // A fit trained on all rows, including its own fold, fails the audit.
    const auto leaky = fit_nuisances(d, d.all_rows(), plan.fold_rows(0, 2), NuisanceSpecs::simple_glm(), {}, kRng);
    EXPECT_FALSE(audit_honesty(leaky, plan, 0, 2));
    EXPECT_FALSE(audit_honesty(fits[1], plan, 0, 2));
}

TEST(CrossFit, LogisticFitsRespectClipBounds) {
    const auto sim = generate(DgpSpec::named(2), 1000, RngContract(17));
    const auto plan = SplitPlan::make(1000, 5, 1, 17);
    const ClipBounds clip{0.01, 0.99};
    const auto fits = cross_fit_nuisances(sim.data, plan, 0, NuisanceSpecs::simple_glm(), clip, kRng);
    ASSERT_EQ(fits.size(), 5u);
    for (const auto& f : fits) {
        EXPECT_GE(f.e_hat.minCoeff(), clip.lo);
        EXPECT_LE(f.e_hat.maxCoeff(), clip.hi);
        EXPECT_TRUE(f.mu0_hat.allFinite());
        EXPECT_TRUE(f.mu1_hat.allFinite());
    }
}

TEST(CrossFit, ClippingCountsAndBounds) {
    const auto d = separable_1d();
    const auto fit = fit_nuisances(d, d.all_rows(), d.all_rows(), NuisanceSpecs::simple_glm(), {0.1, 0.9}, kRng);
    EXPECT_GT(fit.clipped_low() + fit.clipped_high(), 0);
    EXPECT_GE(fit.e_hat.minCoeff(), 0.1);
    EXPECT_LE(fit.e_hat.maxCoeff(), 0.9);
}

TEST(CrossFit, BitIdenticalAcrossThreadCounts) {
    const auto d = wate::testing::random_dataset(300, 4, 9);
    const auto plan = SplitPlan::make(300, 5, 1, 9);
    const auto specs = NuisanceSpecs::uniform(LearnerSpec::parse("stack(logistic+gbt[rounds=30])"),
                                              LearnerSpec::parse("stack(linear+gbt[rounds=30])"));
    const auto a = cross_fit_nuisances(d, plan, 0, specs, {}, kRng, 1);
    const auto b = cross_fit_nuisances(d, plan, 0, specs, {}, kRng, 3);
    for (std::size_t k = 0; k < a.size(); ++k) {
        EXPECT_EQ(a[k].rows, b[k].rows);
        EXPECT_TRUE(a[k].e_hat == b[k].e_hat);
        EXPECT_TRUE(a[k].mu0_hat == b[k].mu0_hat);
        EXPECT_TRUE(a[k].mu1_hat == b[k].mu1_hat);
        EXPECT_EQ(a[k].provenance.stack_weights, b[k].provenance.stack_weights);
    }
}

TEST(CrossFit, FoldIndexTaggedOnFailure) {
    // A single treated unit: the training rows of its own fold have none.
    Eigen::MatrixXd x = Eigen::MatrixXd::Random(10, 1);
    Eigen::VectorXd a = Eigen::VectorXd::Zero(10), y = Eigen::VectorXd::LinSpaced(10, 0, 9);
    a[0] = 1;
    const Dataset d(x, a, y);
    const auto plan = SplitPlan::make(10, 5, 1, 1);
    try {
        cross_fit_nuisances(d, plan, 0, NuisanceSpecs::simple_glm(), {}, kRng);
        FAIL() << "expected DataError";
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("fold "), std::string::npos);
    }
}
