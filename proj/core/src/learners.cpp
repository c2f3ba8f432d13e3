#include "wate/learners.hpp"

#include "wate/errors.hpp"
#include "wate/glm.hpp"
#include "wate/parallel.hpp"
#include "wate/stumps.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <numeric>
#include <optional>

namespace wate {

std::string_view learner_kind_name(LearnerKind k) {
    switch (k) {
        case LearnerKind::Linear: return "linear";
        case LearnerKind::Logistic: return "logistic";
        case LearnerKind::LinearInteractions: return "linear_interactions";
        case LearnerKind::LogisticInteractions: return "logistic_interactions";
        case LearnerKind::GbtStumps: return "gbt_stumps";
        case LearnerKind::Oracle: return "oracle";
        case LearnerKind::Stack: return "stack";
    }
    return "?";
}

std::string_view target_name(NuisanceTarget t) {
    switch (t) {
        case NuisanceTarget::Propensity: return "propensity";
        case NuisanceTarget::Outcome0: return "outcome0";
        case NuisanceTarget::Outcome1: return "outcome1";
    }
    return "?";
}

// ---------------------------------------------------------------------------
// LearnerSpec

LearnerSpec LearnerSpec::oracle_of(std::shared_ptr<const OracleProvider> provider) {
    LearnerSpec s = of(LearnerKind::Oracle);
    s.oracle = std::move(provider);
    return s;
}

LearnerSpec LearnerSpec::stack(std::vector<LearnerSpec> members, int cv_folds) {
    LearnerSpec s = of(LearnerKind::Stack);
    s.stack_members = std::move(members);
    s.stack_cv_folds = cv_folds;
    return s;
}

double LearnerSpec::param(const std::string& name, double fallback) const {
    const auto it = hyperparams.find(name);
    return it == hyperparams.end() ? fallback : it->second;
}

namespace {

std::string lower(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t");
    return std::string(s.substr(b, e - b + 1));
}

std::string fmt_g(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

}  // namespace

LearnerSpec LearnerSpec::parse(std::string_view text) {
    std::string s = lower(trim(text));
    std::map<std::string, double> params;
    if (const auto lb = s.find('['); lb != std::string::npos && s.rfind("stack", 0) != 0) {
        if (s.back() != ']') throw ConfigError("malformed learner '" + std::string(text) + "'");
        std::string body = s.substr(lb + 1, s.size() - lb - 2);
        s = s.substr(0, lb);
        std::size_t pos = 0;
        while (pos <= body.size()) {
            const auto comma = std::min(body.find(',', pos), body.size());
            const std::string item = trim(std::string_view(body).substr(pos, comma - pos));
            if (!item.empty()) {
                const auto eq = item.find('=');
                if (eq == std::string::npos) throw ConfigError("learner parameter '" + item + "' needs name=value");
                char* end = nullptr;
                const std::string val = item.substr(eq + 1);
                const double v = std::strtod(val.c_str(), &end);
                if (end != val.c_str() + val.size()) throw ConfigError("learner parameter '" + item + "' is not numeric");
                params[trim(item.substr(0, eq))] = v;
            }
            pos = comma + 1;
        }
    }
    LearnerSpec spec;
    if (s == "linear" || s == "ols" || s == "lm") {
        spec = of(LearnerKind::Linear);
    } else if (s == "logistic" || s == "logit") {
        spec = of(LearnerKind::Logistic);
    } else if (s == "linear_interactions" || s == "glm.interaction_linear") {
        spec = of(LearnerKind::LinearInteractions);
    } else if (s == "logistic_interactions") {
        spec = of(LearnerKind::LogisticInteractions);
    } else if (s == "gbt" || s == "gbt_stumps") {
        spec = of(LearnerKind::GbtStumps);
    } else if (s.rfind("stack(", 0) == 0 && s.back() == ')') {
        std::vector<LearnerSpec> members;
        const std::string body = s.substr(6, s.size() - 7);
        std::size_t pos = 0;
        while (pos <= body.size()) {
            const auto plus = std::min(body.find('+', pos), body.size());
            members.push_back(parse(body.substr(pos, plus - pos)));
            pos = plus + 1;
        }
        spec = stack(std::move(members));
    } else if (s == "oracle") {
        throw ConfigError("oracle learners need a provider (data columns or a simulation design)");
    } else {
        throw ConfigError("unknown learner '" + std::string(text) +
                          "'; valid: glm, linear, logistic, linear_interactions, logistic_interactions, gbt, "
                          "stack(a+b+...)");
    }
    spec.hyperparams = std::move(params);
    return spec;
}

std::string LearnerSpec::describe() const {
    if (kind == LearnerKind::Oracle) return "oracle(" + (oracle ? oracle->name() : std::string("?")) + ")";
    if (kind == LearnerKind::Stack) {
        std::string out = "stack(";
        for (std::size_t i = 0; i < stack_members.size(); ++i) {
            if (i) out += "+";
            out += stack_members[i].describe();
        }
        return out + ")";
    }
    std::string out(learner_kind_name(kind));
    if (!hyperparams.empty()) {
        out += "[";
        bool first = true;
        for (const auto& [k, v] : hyperparams) {
            if (!first) out += ",";
            first = false;
            out += k + "=" + fmt_g(v);
        }
        out += "]";
    }
    return out;
}

void LearnerSpec::validate(NuisanceTarget target) const {
    const bool ps = target == NuisanceTarget::Propensity;
    switch (kind) {
        case LearnerKind::Linear:
        case LearnerKind::LinearInteractions:
            if (ps) throw ConfigError(std::string(learner_kind_name(kind)) + " cannot model a propensity; use logistic");
            break;
        case LearnerKind::Logistic:
        case LearnerKind::LogisticInteractions:
            if (!ps) throw ConfigError(std::string(learner_kind_name(kind)) + " cannot model an outcome; use linear");
            if (param("max_iter", 50) < 1) throw ConfigError("max_iter must be >= 1");
            if (!(param("tol", 1e-10) > 0)) throw ConfigError("tol must be > 0");
            break;
        case LearnerKind::GbtStumps: {
            if (param("rounds", 200) < 1) throw ConfigError("gbt rounds must be >= 1");
            const double lr = param("learning_rate", 0.1);
            if (!(lr > 0.0 && lr <= 1.0)) throw ConfigError("gbt learning_rate must lie in (0,1]");
            break;
        }
        case LearnerKind::Oracle:
            if (!oracle) throw ConfigError("oracle learner has no provider");
            break;
        case LearnerKind::Stack:
            if (stack_members.size() < 2) throw ConfigError("stack needs at least 2 members");
            if (stack_cv_folds < 2) throw ConfigError("stack_cv_folds must be >= 2");
            for (const auto& m : stack_members) {
                if (m.kind == LearnerKind::Stack) throw ConfigError("nested stacks are not supported");
                m.validate(target);
            }
            break;
    }
    for (const auto& [k, v] : hyperparams) {
        static const std::vector<std::string> known{"max_iter", "tol", "rounds", "learning_rate"};
        if (std::find(known.begin(), known.end(), k) == known.end())
            throw ConfigError("unknown learner parameter '" + k + "'");
    }
}

NuisanceSpecs NuisanceSpecs::simple_glm() {
    return {LearnerSpec::of(LearnerKind::Logistic), LearnerSpec::of(LearnerKind::Linear),
            LearnerSpec::of(LearnerKind::Linear)};
}

NuisanceSpecs NuisanceSpecs::oracle(std::shared_ptr<const OracleProvider> provider) {
    auto s = LearnerSpec::oracle_of(std::move(provider));
    return {s, s, s};
}

NuisanceSpecs NuisanceSpecs::uniform(const LearnerSpec& propensity, const LearnerSpec& outcome) {
    return {propensity, outcome, outcome};
}

void ClipBounds::validate() const {
    if (!(lo > 0.0 && lo < hi && hi < 1.0))
        throw ConfigError("clip bounds must satisfy 0 < lo < hi < 1 (got " + fmt_g(lo) + "," + fmt_g(hi) + ")");
}

// ---------------------------------------------------------------------------
// Models

namespace {

Eigen::MatrixXd gather(const Eigen::MatrixXd& x, std::span<const Index> rows) {
    Eigen::MatrixXd out(static_cast<Index>(rows.size()), x.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Index>(i)) = x.row(rows[i]);
    return out;
}

Eigen::VectorXd gather(const Eigen::VectorXd& v, std::span<const Index> rows) {
    Eigen::VectorXd out(static_cast<Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) out[static_cast<Index>(i)] = v[rows[i]];
    return out;
}

class GlmModel final : public FittedModel {
public:
    GlmModel(glm::FeatureMap map, Eigen::VectorXd coef, bool logistic, double ridge, std::string name)
        : map_(std::move(map)), coef_(std::move(coef)), logistic_(logistic), ridge_(ridge), name_(std::move(name)) {}

    Eigen::VectorXd predict(const Dataset& d, std::span<const Index> rows) const override {
        Eigen::VectorXd eta = map_.design(gather(d.covariates(), rows)) * coef_;
        if (logistic_)
            for (Index i = 0; i < eta.size(); ++i) eta[i] = glm::sigmoid(eta[i]);
        return eta;
    }
    std::string describe() const override { return name_; }
    double ridge() const override { return ridge_; }

private:
    glm::FeatureMap map_;
    Eigen::VectorXd coef_;
    bool logistic_;
    double ridge_;
    std::string name_;
};

class BoosterModel final : public FittedModel {
public:
    BoosterModel(StumpBooster b, std::string name) : booster_(std::move(b)), name_(std::move(name)) {}

    Eigen::VectorXd predict(const Dataset& d, std::span<const Index> rows) const override {
        return booster_.predict(gather(d.covariates(), rows));
    }
    std::string describe() const override { return name_; }

private:
    StumpBooster booster_;
    std::string name_;
};

class OracleModel final : public FittedModel {
public:
    OracleModel(std::shared_ptr<const OracleProvider> p, NuisanceTarget t) : provider_(std::move(p)), target_(t) {}

    Eigen::VectorXd predict(const Dataset& d, std::span<const Index> rows) const override {
        Eigen::VectorXd out(static_cast<Index>(rows.size()));
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const auto r = rows[i];
            out[static_cast<Index>(i)] = target_ == NuisanceTarget::Propensity
                                             ? provider_->propensity(d, r)
                                             : provider_->outcome(d, r, target_ == NuisanceTarget::Outcome1 ? 1 : 0);
        }
        return out;
    }
    std::string describe() const override { return "oracle(" + provider_->name() + ")"; }

private:
    std::shared_ptr<const OracleProvider> provider_;
    NuisanceTarget target_;
};

// Fits a non-stack learner for `target` on exactly `rows` (already arm-filtered for outcomes).
ModelPtr fit_base(const Dataset& d, std::span<const Index> rows, NuisanceTarget target, const LearnerSpec& spec) {
    const bool ps = target == NuisanceTarget::Propensity;
    const Eigen::VectorXd y = gather(ps ? d.treatment() : d.outcome(), rows);
    switch (spec.kind) {
        case LearnerKind::Logistic:
        case LearnerKind::LogisticInteractions: {
            const Eigen::MatrixXd raw = gather(d.covariates(), rows);
            glm::FeatureMap map(raw, spec.kind == LearnerKind::LogisticInteractions);
            glm::IrlsOptions opts;
            opts.max_iter = static_cast<int>(spec.param("max_iter", 50));
            opts.tol = spec.param("tol", 1e-10);
            auto sol = glm::logistic(map.design(raw), y, opts);
            return std::make_shared<GlmModel>(std::move(map), std::move(sol.coef), true, sol.ridge, spec.describe());
        }
        case LearnerKind::Linear:
        case LearnerKind::LinearInteractions: {
            const Eigen::MatrixXd raw = gather(d.covariates(), rows);
            glm::FeatureMap map(raw, spec.kind == LearnerKind::LinearInteractions);
            auto sol = glm::least_squares(map.design(raw), y);
            return std::make_shared<GlmModel>(std::move(map), std::move(sol.coef), false, sol.ridge, spec.describe());
        }
        case LearnerKind::GbtStumps: {
            StumpBooster::Options o;
            o.rounds = static_cast<int>(spec.param("rounds", 200));
            o.learning_rate = spec.param("learning_rate", 0.1);
            o.classification = ps;
            return std::make_shared<BoosterModel>(StumpBooster::fit(gather(d.covariates(), rows), y, o),
                                                  spec.describe());
        }
        case LearnerKind::Oracle:
            return std::make_shared<OracleModel>(spec.oracle, target);
        case LearnerKind::Stack:
            break;
    }
    throw ConfigError("internal: fit_base called with a stack spec");
}

void require_both_arms(const Dataset& d, std::span<const Index> rows) {
    bool t = false, c = false;
    for (Index r : rows) (d.arm(r) == 1 ? t : c) = true;
    if (!t) throw DataError("propensity training rows contain no treated units (treated arm empty)");
    if (!c) throw DataError("propensity training rows contain no control units (control arm empty)");
}

RowSet filter_arm(const Dataset& d, std::span<const Index> rows, int arm) {
    RowSet out;
    for (Index r : rows)
        if (d.arm(r) == arm) out.push_back(r);
    return out;
}

}  // namespace

Eigen::VectorXd StackedModel::predict(const Dataset& d, std::span<const Index> rows) const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Index>(rows.size()));
    for (std::size_t j = 0; j < members_.size(); ++j)
        if (weights_[j] > 0.0) out += weights_[j] * members_[j]->predict(d, rows);
    return out;
}

std::string StackedModel::describe() const {
    std::string out = "stack(";
    for (std::size_t j = 0; j < names_.size(); ++j) {
        if (j) out += "+";
        out += names_[j] + ":" + fmt_g(weights_[j]);
    }
    return out + ")";
}

// ---------------------------------------------------------------------------
// Stacking

Eigen::VectorXd project_to_simplex(const Eigen::VectorXd& v) {
    std::vector<double> u(v.data(), v.data() + v.size());
    std::sort(u.begin(), u.end(), std::greater<>());
    double cum = 0.0, theta = 0.0;
    for (std::size_t j = 0; j < u.size(); ++j) {
        cum += u[j];
        const double t = (cum - 1.0) / static_cast<double>(j + 1);
        if (u[j] - t > 0.0) theta = t;
    }
    return (v.array() - theta).max(0.0).matrix();
}

std::vector<double> simplex_projected_gradient(const Eigen::MatrixXd& preds, const Eigen::VectorXd& y, bool log_loss,
                                               int iterations) {
    const auto m = static_cast<double>(preds.rows());
    const auto k = preds.cols();
    Eigen::VectorXd w = Eigen::VectorXd::Constant(k, 1.0 / static_cast<double>(k));

    // Global Lipschitz bound of the gradient over the simplex.
    Eigen::MatrixXd curvature;
    if (log_loss) {
        Eigen::VectorXd c(preds.rows());
        for (Index i = 0; i < preds.rows(); ++i) {
            const double qmin = preds.row(i).minCoeff();
            const double qmax = preds.row(i).maxCoeff();
            c[i] = y[i] / (qmin * qmin) + (1.0 - y[i]) / ((1.0 - qmax) * (1.0 - qmax));
        }
        curvature = preds.transpose() * c.asDiagonal() * preds / m;
    } else {
        curvature = 2.0 * preds.transpose() * preds / m;
    }
    const double lip = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(curvature, Eigen::EigenvaluesOnly)
                           .eigenvalues()
                           .maxCoeff();
    if (!(lip > 0.0)) return {w.data(), w.data() + k};
    const double step = 1.0 / lip;

    for (int it = 0; it < iterations; ++it) {
        const Eigen::VectorXd q = preds * w;
        Eigen::VectorXd g;
        if (log_loss) {
            Eigen::VectorXd r(q.size());
            for (Index i = 0; i < q.size(); ++i) r[i] = -(y[i] / q[i] - (1.0 - y[i]) / (1.0 - q[i]));
            g = preds.transpose() * r / m;
        } else {
            g = 2.0 * preds.transpose() * (q - y) / m;
        }
        w = project_to_simplex(w - step * g);
    }
    return {w.data(), w.data() + k};
}

std::shared_ptr<const StackedModel> fit_stack(const Dataset& d, std::span<const Index> rows, NuisanceTarget target,
                                              const LearnerSpec& spec, const RngContract& rng) {
    if (spec.kind != LearnerKind::Stack) throw ConfigError("fit_stack needs a stack spec");
    spec.validate(target);
    const bool ps = target == NuisanceTarget::Propensity;

    RowSet train;
    if (ps) {
        train.assign(rows.begin(), rows.end());
        require_both_arms(d, train);
    } else {
        train = filter_arm(d, rows, target == NuisanceTarget::Outcome1 ? 1 : 0);
        if (train.empty()) throw DataError(std::string(target_name(target)) + ": arm has no training rows");
    }
    const auto m = train.size();
    const int folds = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(spec.stack_cv_folds), m));

    // Shuffled round-robin CV folds from the learner's own stream.
    std::vector<std::size_t> perm(m);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    auto stream = rng.child("stack_cv", static_cast<std::uint64_t>(target)).stream();
    for (std::size_t i = m - 1; i > 0 && m > 1; --i) std::swap(perm[i], perm[stream.below(i + 1)]);
    std::vector<int> fold_of(m);
    for (std::size_t pos = 0; pos < m; ++pos) fold_of[perm[pos]] = static_cast<int>(pos % static_cast<std::size_t>(folds));

    const auto k = spec.stack_members.size();
    Eigen::MatrixXd oof = Eigen::MatrixXd::Zero(static_cast<Index>(m), static_cast<Index>(k));
    std::vector<bool> usable(k, true);
    for (std::size_t j = 0; j < k; ++j) {
        const auto& member = spec.stack_members[j];
        int failures = 0;
        std::string last_error;
        for (int f = 0; f < folds; ++f) {
            RowSet fit_rows, hold_rows;
            std::vector<std::size_t> hold_pos;
            for (std::size_t i = 0; i < m; ++i) {
                if (fold_of[i] == f) {
                    hold_rows.push_back(train[i]);
                    hold_pos.push_back(i);
                } else {
                    fit_rows.push_back(train[i]);
                }
            }
            try {
                if (ps) require_both_arms(d, fit_rows);
                if (fit_rows.empty()) throw DataError("empty CV training fold");
                const auto model = fit_base(d, fit_rows, target, member);
                const Eigen::VectorXd pred = model->predict(d, hold_rows);
                for (std::size_t h = 0; h < hold_pos.size(); ++h)
                    oof(static_cast<Index>(hold_pos[h]), static_cast<Index>(j)) = pred[static_cast<Index>(h)];
            } catch (const Error& e) {
                ++failures;
                last_error = e.what();
            }
        }
        if (failures == folds)
            throw ConfigError("stack member '" + member.describe() + "' failed on every CV fold: " + last_error);
        if (failures > 0) usable[j] = false;
    }

    std::vector<Index> active;
    for (std::size_t j = 0; j < k; ++j)
        if (usable[j]) active.push_back(static_cast<Index>(j));
    if (active.empty()) throw ConfigError("no stack member produced predictions on every CV fold");
    Eigen::MatrixXd p_active(static_cast<Index>(m), static_cast<Index>(active.size()));
    for (std::size_t a = 0; a < active.size(); ++a) p_active.col(static_cast<Index>(a)) = oof.col(active[a]);
    if (ps) p_active = p_active.cwiseMax(0.01).cwiseMin(0.99);
    Eigen::VectorXd y(static_cast<Index>(m));
    for (std::size_t i = 0; i < m; ++i) y[static_cast<Index>(i)] = ps ? d.treatment()[train[i]] : d.outcome()[train[i]];

    const auto w_active = simplex_projected_gradient(p_active, y, ps);
    std::vector<double> weights(k, 0.0);
    for (std::size_t a = 0; a < active.size(); ++a) weights[static_cast<std::size_t>(active[a])] = w_active[a];

    std::vector<ModelPtr> members;
    std::vector<std::string> names;
    for (std::size_t j = 0; j < k; ++j) {
        names.push_back(spec.stack_members[j].describe());
        members.push_back(weights[j] > 0.0 ? fit_base(d, train, target, spec.stack_members[j]) : nullptr);
    }
    return std::make_shared<StackedModel>(std::move(members), std::move(weights), std::move(names));
}

ModelPtr fit_propensity(const Dataset& d, std::span<const Index> rows, const LearnerSpec& spec,
                        const RngContract& rng) {
    spec.validate(NuisanceTarget::Propensity);
    require_both_arms(d, rows);
    if (spec.kind == LearnerKind::Stack) return fit_stack(d, rows, NuisanceTarget::Propensity, spec, rng);
    return fit_base(d, rows, NuisanceTarget::Propensity, spec);
}

ModelPtr fit_outcome(const Dataset& d, std::span<const Index> rows, int arm, const LearnerSpec& spec,
                     const RngContract& rng) {
    const auto target = arm == 1 ? NuisanceTarget::Outcome1 : NuisanceTarget::Outcome0;
    spec.validate(target);
    const RowSet arm_rows = filter_arm(d, rows, arm);
    if (arm_rows.empty())
        throw DataError(std::string(arm == 1 ? "treated" : "control") + " arm empty in outcome training rows");
    if (spec.kind == LearnerKind::Stack) return fit_stack(d, rows, target, spec, rng);
    return fit_base(d, arm_rows, target, spec);
}

// ---------------------------------------------------------------------------
// Nuisance fits

Index NuisanceFit::clipped_low() const {
    Index c = 0;
    for (Index i = 0; i < e_raw.size(); ++i) c += e_raw[i] < clip.lo;
    return c;
}

Index NuisanceFit::clipped_high() const {
    Index c = 0;
    for (Index i = 0; i < e_raw.size(); ++i) c += e_raw[i] > clip.hi;
    return c;
}

namespace {

void record_model(NuisanceProvenance& prov, NuisanceTarget t, const ModelPtr& model) {
    const std::string key(target_name(t));
    prov.ridge[key] = model->ridge();
    if (const auto* st = dynamic_cast<const StackedModel*>(model.get())) {
        auto& w = prov.stack_weights[key];
        for (std::size_t j = 0; j < st->weights().size(); ++j) w.emplace_back(st->member_names()[j], st->weights()[j]);
    }
}

}  // namespace

NuisanceFit fit_nuisances(const Dataset& d, const RowSet& train, const RowSet& predict, const NuisanceSpecs& specs,
                          const ClipBounds& clip, const RngContract& rng) {
    clip.validate();
    const auto ps = fit_propensity(d, train, specs.propensity, rng.child("propensity", 0));
    const auto m0 = fit_outcome(d, train, 0, specs.outcome0, rng.child("outcome", 0));
    const auto m1 = fit_outcome(d, train, 1, specs.outcome1, rng.child("outcome", 1));

    NuisanceFit fit;
    fit.rows = predict;
    fit.clip = clip;
    fit.e_raw = ps->predict(d, predict);
    fit.e_hat = fit.e_raw.cwiseMax(clip.lo).cwiseMin(clip.hi);
    fit.mu0_hat = m0->predict(d, predict);
    fit.mu1_hat = m1->predict(d, predict);
    if (!fit.e_raw.allFinite() || !fit.mu0_hat.allFinite() || !fit.mu1_hat.allFinite())
        throw ConvergenceError("nuisance predictions are not finite", std::numeric_limits<double>::quiet_NaN());

    fit.provenance.propensity = specs.propensity.describe();
    fit.provenance.outcome0 = specs.outcome0.describe();
    fit.provenance.outcome1 = specs.outcome1.describe();
    fit.provenance.training_digest = digest_rows(train);
    fit.provenance.training_size = static_cast<Index>(train.size());
    record_model(fit.provenance, NuisanceTarget::Propensity, ps);
    record_model(fit.provenance, NuisanceTarget::Outcome0, m0);
    record_model(fit.provenance, NuisanceTarget::Outcome1, m1);
    return fit;
}

std::vector<NuisanceFit> cross_fit_nuisances(const Dataset& d, const SplitPlan& plan, int split,
                                             const NuisanceSpecs& specs, const ClipBounds& clip,
                                             const RngContract& rng, int threads) {
    if (plan.n() != d.n()) throw RowError("split plan built for n=" + std::to_string(plan.n()) +
                                          " but dataset has n=" + std::to_string(d.n()));
    const auto k = static_cast<std::size_t>(plan.k_folds());
    std::vector<std::optional<NuisanceFit>> fits(k);
    parallel_for(k, threads, [&](std::size_t f) {
        const int fold = static_cast<int>(f);
        const std::string tag = "fold " + std::to_string(fold) + ": ";
        try {
            fits[f] = fit_nuisances(d, plan.training_rows(split, fold), plan.fold_rows(split, fold), specs, clip,
                                    rng.child("fold", f));
        } catch (const ConvergenceError& e) {
            throw ConvergenceError(tag + e.what(), e.last_deviance());
        } catch (const DataError& e) {
            throw DataError(tag + e.what());
        } catch (const ConfigError& e) {
            throw ConfigError(tag + e.what());
        } catch (const Error& e) {
            throw Error(tag + e.what());
        }
    });
    std::vector<NuisanceFit> out;
    out.reserve(k);
    for (auto& f : fits) out.push_back(std::move(*f));
    return out;
}

bool audit_honesty(const NuisanceFit& fit, const SplitPlan& plan, int split, int fold) {
    RowSet rows = fit.rows;
    std::sort(rows.begin(), rows.end());
    if (rows != plan.fold_rows(split, fold)) return false;
    return fit.provenance.training_digest == digest_rows(plan.training_rows(split, fold));
}

}  // namespace wate
