#include "wate/dataset.hpp"
#include "wate/errors.hpp"
#include "wate/estimand.hpp"
#include "wate/parallel.hpp"
#include "wate/rng.hpp"
#include "wate/split_plan.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <set>

using namespace wate;

namespace {

Dataset small(Eigen::VectorXd a, Eigen::VectorXd y) {
    Eigen::MatrixXd x = Eigen::MatrixXd::Random(a.size(), 2);
    return Dataset(x, std::move(a), std::move(y));
}

}  // namespace

TEST(SplitPlan, EqualFoldsWhenDivisible) {
    const auto plan = SplitPlan::make(10, 5, 1, 7);
    for (Index s : plan.fold_sizes(0)) EXPECT_EQ(s, 2);
}

TEST(SplitPlan, FoldSizesDifferByAtMostOne) {
    const auto plan = SplitPlan::make(11, 5, 1, 7);
    auto sizes = plan.fold_sizes(0);
    std::sort(sizes.begin(), sizes.end());
    EXPECT_EQ(sizes, (std::vector<Index>{2, 2, 2, 2, 3}));
    for (Index n : {20, 37, 101, 999}) {
        const auto p = SplitPlan::make(n, 7 > n / 2 ? 2 : 7, 3, 99);
        for (int s = 0; s < 3; ++s) {
            const auto sz = p.fold_sizes(s);
            EXPECT_LE(*std::max_element(sz.begin(), sz.end()) - *std::min_element(sz.begin(), sz.end()), 1);
        }
    }
}

TEST(SplitPlan, DeterministicForSameInputs) {
    const auto a = SplitPlan::make(10, 5, 2, 7);
    const auto b = SplitPlan::make(10, 5, 2, 7);
    EXPECT_EQ(a.fold_assignment(0), b.fold_assignment(0));
    EXPECT_EQ(a.fold_assignment(1), b.fold_assignment(1));
    EXPECT_TRUE(a == b);
}

TEST(SplitPlan, SplitsAndSeedsDiffer) {
    const auto a = SplitPlan::make(200, 5, 2, 7);
    const auto b = SplitPlan::make(200, 5, 2, 8);
    EXPECT_NE(a.fold_assignment(0), a.fold_assignment(1));
    EXPECT_NE(a.fold_assignment(0), b.fold_assignment(0));
}

TEST(SplitPlan, JsonRoundTripReproducesFolds) {
    const auto a = SplitPlan::make(57, 4, 3, 123456789);
    const auto b = SplitPlan::from_json(nlohmann::json::parse(a.to_json().dump()));
    EXPECT_TRUE(a == b);
}

TEST(SplitPlan, FoldsPartitionRows) {
    const auto plan = SplitPlan::make(53, 5, 4, 1);
    for (int s = 0; s < 4; ++s) {
        std::set<Index> seen;
        for (int k = 0; k < 5; ++k) {
            for (Index r : plan.fold_rows(s, k)) EXPECT_TRUE(seen.insert(r).second) << "row in two folds";
            const auto train = plan.training_rows(s, k);
            EXPECT_EQ(train.size() + plan.fold_rows(s, k).size(), 53u);
        }
        EXPECT_EQ(seen.size(), 53u);
    }
}

TEST(SplitPlan, UnderfillNamesMinimum) {
    try {
        SplitPlan::make(9, 5, 1, 1);
        FAIL() << "expected DataError";
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("n >= 10"), std::string::npos);
    }
    EXPECT_THROW(SplitPlan::make(10, 1, 1, 1), ConfigError);
    EXPECT_THROW(SplitPlan::make(10, 2, 0, 1), ConfigError);
}

TEST(RngContract, PathKeyedStreamsAreIndependentOfOrder) {
    const RngContract root(42);
    const auto a1 = root.child("rep", 3).stream_seed();
    // Creating other children first does not perturb the seed.
    (void)root.child("rep", 0).stream().next_u64();
    (void)root.child("split", 3).stream().next_u64();
    EXPECT_EQ(root.child("rep", 3).stream_seed(), a1);
    EXPECT_NE(root.child("rep", 4).stream_seed(), a1);
    EXPECT_NE(root.child("split", 3).stream_seed(), a1);
    EXPECT_NE(RngContract(43).child("rep", 3).stream_seed(), a1);
    EXPECT_NE(root.child("rep", 3).child("fold", 0).stream_seed(), root.child("rep", 3).stream_seed());
}

TEST(RngContract, UniformAndNormalMoments) {
    auto s = RngContract(5).stream();
    const int n = 200000;
    double su = 0, sn = 0, sn2 = 0;
    for (int i = 0; i < n; ++i) {
        const double u = s.uniform();
        ASSERT_GE(u, 0.0);
        ASSERT_LT(u, 1.0);
        su += u;
        const double z = s.normal();
        sn += z;
        sn2 += z * z;
    }
    EXPECT_NEAR(su / n, 0.5, 0.005);
    EXPECT_NEAR(sn / n, 0.0, 0.01);
    EXPECT_NEAR(sn2 / n, 1.0, 0.015);
}

TEST(RngContract, BelowIsInRangeAndCoversIt) {
    auto s = RngContract(9).stream();
    std::vector<int> counts(7, 0);
    for (int i = 0; i < 70000; ++i) ++counts[s.below(7)];
    for (int c : counts) EXPECT_NEAR(c, 10000, 500);
}

TEST(RngContract, DigestIsOrderInsensitiveAndContentSensitive) {
    std::vector<std::ptrdiff_t> a{1, 5, 9}, b{9, 1, 5}, c{1, 5, 10}, d{1, 5};
    EXPECT_EQ(digest_rows(a), digest_rows(b));
    EXPECT_NE(digest_rows(a), digest_rows(c));
    EXPECT_NE(digest_rows(a), digest_rows(d));
}

TEST(Parallel, ResultsIndependentOfThreadCount) {
    for (int threads : {1, 2, 5}) {
        std::vector<double> out(100);
        parallel_for(out.size(), threads, [&](std::size_t i) {
            out[i] = RngContract(1).child("item", i).stream().normal();
        });
        std::vector<double> ref(100);
        for (std::size_t i = 0; i < 100; ++i) ref[i] = RngContract(1).child("item", i).stream().normal();
        EXPECT_EQ(out, ref);
    }
}

TEST(Parallel, RethrowsWorkerException) {
    EXPECT_THROW(parallel_for(10, 3, [](std::size_t i) {
                     if (i == 7) throw DataError("boom");
                 }),
                 DataError);
}

TEST(Dataset, ConstructionChecksShapeAndBinaryTreatment) {
    Eigen::MatrixXd x(3, 1);
    x << 1, 2, 3;
    Eigen::VectorXd a(3), y(3);
    a << 0, 1, 0;
    y << 1, 2, 3;
    EXPECT_NO_THROW(Dataset(x, a, y));
    Eigen::VectorXd bad = a;
    bad[1] = 0.5;
    EXPECT_THROW(Dataset(x, bad, y), DataError);
    EXPECT_THROW(Dataset(x, a, Eigen::VectorXd::Zero(2)), DataError);
    EXPECT_THROW(Dataset(Eigen::MatrixXd::Zero(1, 1), Eigen::VectorXd::Zero(1), Eigen::VectorXd::Zero(1)), DataError);
    EXPECT_THROW(Dataset(Eigen::MatrixXd::Zero(3, 0), a, y), DataError);
}

TEST(Dataset, ValidationFlagsSingleArm) {
    Eigen::VectorXd a = Eigen::VectorXd::Ones(4), y(4);
    y << 1, 2, 3, 4;
    const auto rep = validate_dataset(small(a, y));
    EXPECT_TRUE(rep.has(IssueKind::ControlArmEmpty));
    EXPECT_NE(rep.summary().find("control arm empty"), std::string::npos);
}

TEST(Dataset, ValidationFlagsNanOutcomeRow) {
    Eigen::VectorXd a(4), y(4);
    a << 1, 0, 1, 0;
    y << 1, std::numeric_limits<double>::quiet_NaN(), 3, 4;
    const auto rep = validate_dataset(small(a, y));
    ASSERT_TRUE(rep.has(IssueKind::NonFiniteOutcome));
    bool found = false;
    for (const auto& i : rep.issues)
        if (i.kind == IssueKind::NonFiniteOutcome) found = i.row && *i.row == 1;
    EXPECT_TRUE(found);
}

TEST(Dataset, CleanDataHasEmptyReport) {
    Eigen::VectorXd a(4), y(4);
    a << 1, 0, 1, 0;
    y << 1, 2, 3, 4;
    EXPECT_TRUE(validate_dataset(small(a, y)).ok());
}

TEST(Dataset, ConstantOutcomeIsReported) {
    Eigen::VectorXd a(4), y = Eigen::VectorXd::Constant(4, 2.0);
    a << 1, 0, 1, 0;
    const auto d = small(a, y);
    EXPECT_TRUE(validate_dataset(d).has(IssueKind::ConstantOutcome));
    EXPECT_THROW(require_estimable(d), DataError);
    EXPECT_NO_THROW(require_estimable(d, false));
}

TEST(Csv, ParsesCovariatesAndColumns) {
    const auto loaded = parse_csv("X1,A,note_free,Y\n1.5,1,3,2\n-2,0,4,0.5\n", {});
    EXPECT_EQ(loaded.data.n(), 2);
    EXPECT_EQ(loaded.data.p(), 2);
    EXPECT_EQ(loaded.data.covariate_names()[1], "note_free");
    EXPECT_DOUBLE_EQ(loaded.data.outcome()[1], 0.5);
}

TEST(Csv, NonNumericCovariateNamesColumn) {
    try {
        parse_csv("X1,A,color,Y\n1,1,red,2\n2,0,blue,3\n", {});
        FAIL() << "expected DataError";
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("color"), std::string::npos);
    }
}

TEST(Csv, DelimiterAndReservedColumns) {
    CsvOptions o;
    o.delimiter = ';';
    o.treatment_col = "T";
    o.outcome_col = "out";
    o.reserved_cols = {"e"};
    const auto loaded = parse_csv("x;T;out;e\n1;1;2;0.4\n2;0;3;0.6\n", o);
    EXPECT_EQ(loaded.data.p(), 1);
    EXPECT_DOUBLE_EQ(loaded.reserved.at("e")[1], 0.6);
}

TEST(Csv, MissingHeaderColumnIsDataError) {
    EXPECT_THROW(parse_csv("X1,Y\n1,2\n3,4\n", {}), DataError);
    EXPECT_THROW(parse_csv("", {}), DataError);
}

TEST(Estimand, ParsesNamesAndBeta) {
    EXPECT_EQ(EstimandSpec::parse("att").family(), Family::ATT);
    const auto b = EstimandSpec::parse("ATB(3,4)");
    EXPECT_EQ(b.family(), Family::ATB);
    EXPECT_DOUBLE_EQ(*b.nu1(), 3.0);
    EXPECT_DOUBLE_EQ(*b.nu2(), 4.0);
    EXPECT_EQ(b.label(), "ATB(3,4)");
    EXPECT_EQ(EstimandSpec::parse("ATB:2.5,3").label(), "ATB(2.5,3)");
}

TEST(Estimand, UnknownNameListsChoices) {
    try {
        EstimandSpec::parse("ATX");
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("ATEN"), std::string::npos);
    }
}

TEST(Estimand, BetaParametersBelowOneRejected) {
    EXPECT_THROW(EstimandSpec::atb(0.5, 2), ConfigError);
    EXPECT_THROW(EstimandSpec::of(Family::ATB), ConfigError);
}

TEST(Estimand, WarningForSmallBetaParameters) {
    EXPECT_TRUE(EstimandSpec::atb(1.5, 3).warning().has_value());
    EXPECT_FALSE(EstimandSpec::atb(2, 3).warning().has_value());
    EXPECT_FALSE(EstimandSpec::of(Family::ATE).warning().has_value());
}

TEST(Estimand, DefaultList) {
    std::vector<std::string> labels;
    for (const auto& e : default_estimands()) labels.push_back(e.label());
    EXPECT_EQ(labels, (std::vector<std::string>{"ATE", "ATT", "ATC", "ATO", "ATEN"}));
}
