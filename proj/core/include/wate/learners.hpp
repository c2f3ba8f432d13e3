#pragma once

#include "wate/dataset.hpp"
#include "wate/rng.hpp"
#include "wate/split_plan.hpp"

#include <Eigen/Dense>

#include <map>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace wate {

enum class LearnerKind { Linear, Logistic, LinearInteractions, LogisticInteractions, GbtStumps, Oracle, Stack };
enum class NuisanceTarget { Propensity, Outcome0, Outcome1 };

std::string_view learner_kind_name(LearnerKind k);
std::string_view target_name(NuisanceTarget t);

/// Source of true nuisance values, used by oracle learners. Lookups are by
/// dataset row so providers can be backed by functions of X or by columns.
class OracleProvider {
public:
    virtual ~OracleProvider() = default;
    virtual double propensity(const Dataset& d, Index row) const = 0;
    virtual double outcome(const Dataset& d, Index row, int arm) const = 0;
    virtual std::string name() const = 0;
};

/// Oracle values read from per-row vectors (e.g. CSV columns).
class ColumnOracle final : public OracleProvider {
public:
    ColumnOracle(std::string name, Eigen::VectorXd e, Eigen::VectorXd mu0, Eigen::VectorXd mu1)
        : name_(std::move(name)), e_(std::move(e)), mu0_(std::move(mu0)), mu1_(std::move(mu1)) {}

    double propensity(const Dataset&, Index row) const override { return e_[row]; }
    double outcome(const Dataset&, Index row, int arm) const override { return arm == 1 ? mu1_[row] : mu0_[row]; }
    std::string name() const override { return name_; }

private:
    std::string name_;
    Eigen::VectorXd e_, mu0_, mu1_;
};

struct LearnerSpec {
    LearnerKind kind = LearnerKind::Linear;
    std::vector<LearnerSpec> stack_members;
    int stack_cv_folds = 5;
    std::shared_ptr<const OracleProvider> oracle;
    std::map<std::string, double> hyperparams;

    static LearnerSpec of(LearnerKind kind) { return LearnerSpec{kind, {}, 5, nullptr, {}}; }
    static LearnerSpec oracle_of(std::shared_ptr<const OracleProvider> provider);
    static LearnerSpec stack(std::vector<LearnerSpec> members, int cv_folds = 5);

    /// Text form used by the CLI and in provenance: "logistic", "glm",
    /// "gbt", "stack(linear+gbt)", "gbt[rounds=50,learning_rate=0.2]".
    /// Oracle specs cannot be parsed; they need a provider.
    static LearnerSpec parse(std::string_view text);
    std::string describe() const;

    /// Throws ConfigError for bad hyperparameters, nested stacks, or a kind
    /// that does not match the target (e.g. linear for a propensity).
    void validate(NuisanceTarget target) const;

    double param(const std::string& name, double fallback) const;
};

/// Learner triple for (propensity, control outcome, treated outcome).
struct NuisanceSpecs {
    LearnerSpec propensity;
    LearnerSpec outcome0;
    LearnerSpec outcome1;

    /// Logistic propensity, linear outcomes.
    static NuisanceSpecs simple_glm();
    static NuisanceSpecs oracle(std::shared_ptr<const OracleProvider> provider);
    static NuisanceSpecs uniform(const LearnerSpec& propensity, const LearnerSpec& outcome);
};

class FittedModel {
public:
    virtual ~FittedModel() = default;
    /// Propensities in (0,1) for propensity models, real means otherwise.
    virtual Eigen::VectorXd predict(const Dataset& d, std::span<const Index> rows) const = 0;
    virtual std::string describe() const = 0;
    /// Ridge penalty that ended up in use (0 when none was needed).
    virtual double ridge() const { return 0.0; }
};

using ModelPtr = std::shared_ptr<const FittedModel>;

class StackedModel final : public FittedModel {
public:
    StackedModel(std::vector<ModelPtr> members, std::vector<double> weights, std::vector<std::string> names)
        : members_(std::move(members)), weights_(std::move(weights)), names_(std::move(names)) {}

    Eigen::VectorXd predict(const Dataset& d, std::span<const Index> rows) const override;
    std::string describe() const override;
    const std::vector<double>& weights() const noexcept { return weights_; }
    const std::vector<std::string>& member_names() const noexcept { return names_; }

private:
    std::vector<ModelPtr> members_;
    std::vector<double> weights_;
    std::vector<std::string> names_;
};

/// Throws DataError when `rows` holds a single arm, ConvergenceError when
/// IRLS fails at every ridge penalty.
ModelPtr fit_propensity(const Dataset& d, std::span<const Index> rows, const LearnerSpec& spec,
                        const RngContract& rng);

/// Fits E[Y | A=arm, X] on the rows of `rows` that belong to `arm`.
ModelPtr fit_outcome(const Dataset& d, std::span<const Index> rows, int arm, const LearnerSpec& spec,
                     const RngContract& rng);

/// Convex combination of member fits with weights minimizing cross-validated
/// loss (squared error for outcomes, log loss for the propensity), found by
/// projected gradient on the simplex starting from uniform weights.
std::shared_ptr<const StackedModel> fit_stack(const Dataset& d, std::span<const Index> rows, NuisanceTarget target,
                                              const LearnerSpec& spec, const RngContract& rng);

/// Minimizes a convex loss over the probability simplex (exported for tests).
std::vector<double> simplex_projected_gradient(const Eigen::MatrixXd& preds, const Eigen::VectorXd& y, bool log_loss,
                                               int iterations = 500);
Eigen::VectorXd project_to_simplex(const Eigen::VectorXd& v);

struct ClipBounds {
    double lo = 0.01;
    double hi = 0.99;

    void validate() const;
};

struct NuisanceProvenance {
    std::string propensity;
    std::string outcome0;
    std::string outcome1;
    std::uint64_t training_digest = 0;
    Index training_size = 0;
    /// Per target, member weights of a stacked learner.
    std::map<std::string, std::vector<std::pair<std::string, double>>> stack_weights;
    /// Per target, ridge penalty the final fit used.
    std::map<std::string, double> ridge;
};

/// Nuisance predictions on a set of rows; e_hat is clipped to [lo, hi].
struct NuisanceFit {
    RowSet rows;
    Eigen::VectorXd e_hat;
    Eigen::VectorXd e_raw;
    Eigen::VectorXd mu0_hat;
    Eigen::VectorXd mu1_hat;
    ClipBounds clip;
    NuisanceProvenance provenance;

    Index size() const noexcept { return static_cast<Index>(rows.size()); }
    Index clipped_low() const;
    Index clipped_high() const;
};

/// Fits on `train` and predicts on `predict`.
NuisanceFit fit_nuisances(const Dataset& d, const RowSet& train, const RowSet& predict, const NuisanceSpecs& specs,
                          const ClipBounds& clip, const RngContract& rng);

/// One NuisanceFit per fold of `split`, trained on the fold's complement.
/// Fit errors are rethrown with the fold index in the message.
std::vector<NuisanceFit> cross_fit_nuisances(const Dataset& d, const SplitPlan& plan, int split,
                                             const NuisanceSpecs& specs, const ClipBounds& clip,
                                             const RngContract& rng, int threads = 1);

/// True when the fit covers exactly fold `fold` and its training digest is
/// the digest of that fold's complement.
bool audit_honesty(const NuisanceFit& fit, const SplitPlan& plan, int split, int fold);

}  // namespace wate
