#pragma once

#include "wate/dataset.hpp"
#include "wate/estimand.hpp"
#include "wate/learners.hpp"
#include "wate/pipeline.hpp"
#include "wate/rng.hpp"
#include "wate/weights.hpp"

#include <nlohmann/json.hpp>

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace wate {

enum class PsKind { Random, Linear, Interaction, Nonlinear };
enum class CateKind { Zero, Binary, Linear, Nonlinear };

/// Synthetic design: X iid N(0,1) with p columns, mu0 = X1 + X5 + X4 X5,
/// e = Phi((a(X) - E a) / sd a), tau by kind, Y = tau A + mu0 + U with
/// U ~ N(0,1) shared by both potential outcomes. Covariates are 1-based
/// in the formulas below.
///
///   ps random       e = ps_const
///   ps linear       a = X2 + X3 + X5 - X8
///   ps interaction  a = X'b + X2 + X5 + X3 X8,        b_j = 1/j
///   ps nonlinear    a = X'b + X2 + 1.5 cos(X4 X8) + 2 sin(X5)
///   cate zero       0
///   cate binary     2 if X2 >= 0 else -1
///   cate linear     X1 + X2
///   cate nonlinear  2 sin(X1 + 0.5 X2 + 0.33 X3) + 1.5 cos(X10)
struct DgpSpec {
    PsKind ps_kind = PsKind::Linear;
    CateKind cate_kind = CateKind::Linear;
    int p = 10;
    double ps_const = 0.3;

    /// Designs 1..5: (nonlinear, nonlinear), (linear, linear),
    /// (interaction, binary), (random, linear), (linear, zero).
    static DgpSpec named(int index);
    /// "dgp3", "DGP3", "3", or "ps=linear,cate=zero[,p=12]".
    static DgpSpec parse(std::string_view text);

    std::string label() const;
    void validate() const;
    nlohmann::json to_json() const;
};

std::string_view ps_kind_name(PsKind k);
std::string_view cate_kind_name(CateKind k);

double dgp_mu0(std::span<const double> x);
double dgp_tau(const DgpSpec& dgp, std::span<const double> x);
/// Raw propensity index a(X) before standardization.
double dgp_index(const DgpSpec& dgp, std::span<const double> x);
double dgp_propensity(const DgpSpec& dgp, std::span<const double> x);

/// Standardization constants of a(X), estimated once per (ps kind, p) from
/// 10^6 draws of a fixed calibration stream and cached for the process.
struct Calibration {
    double mean = 0.0;
    double sd = 1.0;
};
Calibration dgp_calibration(const DgpSpec& dgp);

/// True nuisance functions of a design, evaluated on dataset covariates.
class DgpOracle final : public OracleProvider {
public:
    explicit DgpOracle(DgpSpec dgp) : dgp_(dgp) { dgp_.validate(); }

    double propensity(const Dataset& d, Index row) const override;
    double outcome(const Dataset& d, Index row, int arm) const override;
    std::string name() const override { return dgp_.label(); }

private:
    DgpSpec dgp_;
};

struct SimulatedData {
    Dataset data;
    Eigen::VectorXd e, mu0, mu1, tau, y0, y1;
};

/// X, A and U come from the child streams "X", "A" and "U" of `rng`.
SimulatedData generate(const DgpSpec& dgp, Index n, const RngContract& rng);

/// Replaces every oracle spec lacking a provider (including stack members)
/// with one backed by `provider`.
NuisanceSpecs bind_oracle(NuisanceSpecs specs, const std::shared_ptr<const OracleProvider>& provider);

struct TruthResult {
    EstimandSpec estimand = EstimandSpec::of(Family::ATE);
    double gamma0 = 0.0;
    double se = 0.0;  // between-replication standard error
    std::vector<double> per_rep;

    nlohmann::json to_json() const;
};

/// Average over `reps` draws of size n_large of sum(lambda(e) tau) / sum(lambda(e))
/// with the true e and tau. Replication r uses stream ("truth", r).
std::vector<TruthResult> true_gamma(const DgpSpec& dgp, const std::vector<EstimandSpec>& estimands,
                                    const RngContract& rng, Index n_large = 1'000'000, int reps = 10,
                                    int threads = 1);

struct StudyConfig {
    DgpSpec dgp;
    std::vector<EstimandSpec> estimands = default_estimands();
    std::vector<Method> methods = all_methods();
    Index n = 1000;
    int m_reps = 100;
    NuisanceSpecs specs = NuisanceSpecs::simple_glm();
    int k_folds = 5;
    int n_splits = 10;
    Aggregation aggregation = Aggregation::Median;
    ClipBounds clip;
    double alpha = 0.05;
    bool dml1_size_weighted = false;
    std::uint64_t seed = 0;
    /// Known truths by estimand label; missing ones are computed.
    std::map<std::string, double> gamma0;
    Index truth_n = 1'000'000;
    int truth_reps = 10;
    int threads = 1;

    void validate() const;
};

struct MetricsRow {
    std::string estimand;
    std::string method;
    Index n = 0;
    int m_reps = 0;
    int successes = 0;
    int failures = 0;
    double gamma0 = 0.0;
    double mean_estimate = 0.0;
    double abias = 0.0;
    double sd = 0.0;    // 1/M normalization
    double rmse = 0.0;
    double cp_pct = 0.0;
    double mean_se = 0.0;
    Interval mc_band;
};

/// nominal +/- 1.96 sqrt(nominal (100 - nominal) / m) with nominal = 100 (1 - alpha).
Interval coverage_band(int m, double alpha = 0.05);

struct StudyResult {
    StudyConfig config;
    std::vector<MetricsRow> rows;
    std::vector<TruthResult> truth;
    int failed_reps = 0;
    std::vector<std::string> failure_messages;  // first few, by replication index

    static constexpr int kSchemaVersion = 1;
    std::string to_csv() const;
    nlohmann::json to_json() const;
};

/// Replication m draws its data from ("rep", m) and fits from its children.
/// Failed replications are counted and excluded from the metrics.
StudyResult run_study(const StudyConfig& cfg);

/// Metrics for one (estimand, method) from per-replication results; a
/// replication contributes when its estimate is finite.
MetricsRow score_replications(const std::vector<double>& estimates, const std::vector<Interval>& cis, double gamma0,
                              double alpha);

/// A nuisance perturbation (delta_e, delta_mu0, delta_mu1) as functions of
/// a covariate row; absent components are zero.
struct ProbeDirection {
    std::string name;
    std::function<double(std::span<const double>)> de, dmu0, dmu1;
};

struct ProbeOptions {
    Index n_mc = 1'000'000;
    /// Small steps keep cubic and higher terms of g(r) out of the fitted
    /// slope; the slope's Monte Carlo SE does not depend on the step size.
    std::vector<double> steps = {-0.02, -0.01, -0.005, 0.0, 0.005, 0.01, 0.02};
    /// Defaults to the in-sample estimand with true nuisances.
    std::optional<double> gamma0;
};

/// Mean linear score g(r) at gamma0 and nuisances phi0 + r * direction on a
/// step grid, with the least-squares quadratic through it. Per-observation
/// slopes share the grid, so their spread gives the Monte Carlo SE.
struct ProbeResult {
    double gamma0 = 0.0;
    double slope = 0.0;
    double slope_se = 0.0;
    double curvature = 0.0;  // second derivative at r = 0
    double curvature_se = 0.0;
    std::vector<double> steps;
    std::vector<double> g;
};

ProbeResult orthogonality_probe(const DgpSpec& dgp, const WeightFamily& w, const ProbeDirection& direction,
                                const ProbeOptions& opts, const RngContract& rng);

}  // namespace wate
