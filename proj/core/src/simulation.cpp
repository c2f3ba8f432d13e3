#include "wate/simulation.hpp"

#include "wate/errors.hpp"
#include "wate/inference.hpp"
#include "wate/parallel.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <mutex>
#include <sstream>

namespace wate {

namespace {

constexpr std::uint64_t kCalibrationSeed = 0x5EED'CA1B'0000'0001ULL;
constexpr Index kCalibrationRows = 1'000'000;
constexpr std::size_t kMaxFailureMessages = 10;

// Neumaier compensated summation.
class Sum {
public:
    void add(double x) {
        const double t = sum_ + x;
        comp_ += std::abs(sum_) >= std::abs(x) ? (sum_ - t) + x : (x - t) + sum_;
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

std::string lower(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

std::string fmt6(double v) {
    if (std::isnan(v)) return "NA";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

std::vector<double> row_of(const Eigen::MatrixXd& x, Index r) {
    std::vector<double> out(static_cast<std::size_t>(x.cols()));
    for (Index j = 0; j < x.cols(); ++j) out[static_cast<std::size_t>(j)] = x(r, j);
    return out;
}

}  // namespace

std::string_view ps_kind_name(PsKind k) {
    switch (k) {
        case PsKind::Random: return "random";
        case PsKind::Linear: return "linear";
        case PsKind::Interaction: return "interaction";
        case PsKind::Nonlinear: return "nonlinear";
    }
    return "?";
}

std::string_view cate_kind_name(CateKind k) {
    switch (k) {
        case CateKind::Zero: return "zero";
        case CateKind::Binary: return "binary";
        case CateKind::Linear: return "linear";
        case CateKind::Nonlinear: return "nonlinear";
    }
    return "?";
}

DgpSpec DgpSpec::named(int index) {
    switch (index) {
        case 1: return {PsKind::Nonlinear, CateKind::Nonlinear};
        case 2: return {PsKind::Linear, CateKind::Linear};
        case 3: return {PsKind::Interaction, CateKind::Binary};
        case 4: return {PsKind::Random, CateKind::Linear};
        case 5: return {PsKind::Linear, CateKind::Zero};
        default: break;
    }
    throw ConfigError("unknown design " + std::to_string(index) + "; valid: dgp1..dgp5");
}

DgpSpec DgpSpec::parse(std::string_view text) {
    const std::string s = lower(text);
    const std::string digits = s.rfind("dgp", 0) == 0 ? s.substr(3) : s;
    if (digits.size() == 1 && digits[0] >= '1' && digits[0] <= '5') return named(digits[0] - '0');
    if (s.find('=') == std::string::npos)
        throw ConfigError("unknown design '" + std::string(text) + "'; valid: dgp1..dgp5 or ps=<kind>,cate=<kind>");

    DgpSpec out;
    std::stringstream in(s);
    std::string item;
    while (std::getline(in, item, ',')) {
        const auto eq = item.find('=');
        if (eq == std::string::npos) throw ConfigError("design field '" + item + "' needs key=value");
        const std::string key = item.substr(0, eq);
        const std::string val = item.substr(eq + 1);
        if (key == "ps") {
            bool found = false;
            for (auto k : {PsKind::Random, PsKind::Linear, PsKind::Interaction, PsKind::Nonlinear})
                if (val == ps_kind_name(k)) out.ps_kind = k, found = true;
            if (!found) throw ConfigError("unknown ps kind '" + val + "'; valid: random, linear, interaction, nonlinear");
        } else if (key == "cate") {
            bool found = false;
            for (auto k : {CateKind::Zero, CateKind::Binary, CateKind::Linear, CateKind::Nonlinear})
                if (val == cate_kind_name(k)) out.cate_kind = k, found = true;
            if (!found) throw ConfigError("unknown cate kind '" + val + "'; valid: zero, binary, linear, nonlinear");
        } else if (key == "p") {
            out.p = std::stoi(val);
        } else if (key == "ps_const") {
            out.ps_const = std::stod(val);
        } else {
            throw ConfigError("unknown design field '" + key + "'");
        }
    }
    out.validate();
    return out;
}

std::string DgpSpec::label() const {
    for (int i = 1; i <= 5; ++i) {
        const DgpSpec d = named(i);
        if (d.ps_kind == ps_kind && d.cate_kind == cate_kind && p == 10 && ps_const == 0.3)
            return "dgp" + std::to_string(i);
    }
    std::string out = "ps=" + std::string(ps_kind_name(ps_kind)) + ",cate=" + std::string(cate_kind_name(cate_kind)) +
                      ",p=" + std::to_string(p);
    if (ps_kind == PsKind::Random) out += ",ps_const=" + fmt6(ps_const);
    return out;
}

void DgpSpec::validate() const {
    if (p < 10) throw ConfigError("designs use covariates up to X10; p must be >= 10");
    if (ps_kind == PsKind::Random && !(ps_const > 0.0 && ps_const < 1.0))
        throw ConfigError("ps_const must lie in (0,1)");
}

nlohmann::json DgpSpec::to_json() const {
    return {{"label", label()},
            {"ps_kind", ps_kind_name(ps_kind)},
            {"cate_kind", cate_kind_name(cate_kind)},
            {"p", p},
            {"ps_const", ps_const}};
}

double dgp_mu0(std::span<const double> x) { return x[0] + x[4] + x[3] * x[4]; }

double dgp_tau(const DgpSpec& dgp, std::span<const double> x) {
    switch (dgp.cate_kind) {
        case CateKind::Zero: return 0.0;
        case CateKind::Binary: return x[1] >= 0.0 ? 2.0 : -1.0;
        case CateKind::Linear: return x[0] + x[1];
        case CateKind::Nonlinear: return 2.0 * std::sin(x[0] + 0.5 * x[1] + 0.33 * x[2]) + 1.5 * std::cos(x[9]);
    }
    return 0.0;
}

double dgp_index(const DgpSpec& dgp, std::span<const double> x) {
    auto xb = [&] {
        double s = 0.0;
        for (std::size_t j = 0; j < x.size(); ++j) s += x[j] / static_cast<double>(j + 1);
        return s;
    };
    switch (dgp.ps_kind) {
        case PsKind::Random: return 0.0;
        case PsKind::Linear: return x[1] + x[2] + x[4] - x[7];
        case PsKind::Interaction: return xb() + x[1] + x[4] + x[2] * x[7];
        case PsKind::Nonlinear: return xb() + x[1] + 1.5 * std::cos(x[3] * x[7]) + 2.0 * std::sin(x[4]);
    }
    return 0.0;
}

Calibration dgp_calibration(const DgpSpec& dgp) {
    if (dgp.ps_kind == PsKind::Random) return {};
    static std::mutex mu;
    static std::map<std::pair<int, int>, Calibration> cache;
    const auto key = std::make_pair(static_cast<int>(dgp.ps_kind), dgp.p);
    std::lock_guard lock(mu);
    if (auto it = cache.find(key); it != cache.end()) return it->second;

    auto stream = RngContract(kCalibrationSeed)
                      .child("calibration", static_cast<std::uint64_t>(key.first) * 1000 + static_cast<std::uint64_t>(dgp.p))
                      .stream();
    std::vector<double> x(static_cast<std::size_t>(dgp.p));
    Sum s1, s2;
    std::vector<double> a(kCalibrationRows);
    for (Index i = 0; i < kCalibrationRows; ++i) {
        for (auto& v : x) v = stream.normal();
        a[static_cast<std::size_t>(i)] = dgp_index(dgp, x);
        s1.add(a[static_cast<std::size_t>(i)]);
    }
    const double mean = s1.value() / static_cast<double>(kCalibrationRows);
    for (double v : a) s2.add((v - mean) * (v - mean));
    const Calibration c{mean, std::sqrt(s2.value() / static_cast<double>(kCalibrationRows))};
    cache.emplace(key, c);
    return c;
}

double dgp_propensity(const DgpSpec& dgp, std::span<const double> x) {
    if (dgp.ps_kind == PsKind::Random) return dgp.ps_const;
    const Calibration c = dgp_calibration(dgp);
    const double e = normal_cdf((dgp_index(dgp, x) - c.mean) / c.sd);
    // Keep e strictly inside (0,1) where the normal CDF rounds to an endpoint.
    return std::clamp(e, 1e-300, 1.0 - 0x1.0p-53);
}

double DgpOracle::propensity(const Dataset& d, Index row) const {
    return dgp_propensity(dgp_, row_of(d.covariates(), row));
}

double DgpOracle::outcome(const Dataset& d, Index row, int arm) const {
    const auto x = row_of(d.covariates(), row);
    return dgp_mu0(x) + (arm == 1 ? dgp_tau(dgp_, x) : 0.0);
}

SimulatedData generate(const DgpSpec& dgp, Index n, const RngContract& rng) {
    dgp.validate();
    if (n < 2) throw ConfigError("generated datasets need n >= 2");
    auto xs = rng.child("X", 0).stream();
    auto as = rng.child("A", 0).stream();
    auto us = rng.child("U", 0).stream();

    Eigen::MatrixXd x(n, dgp.p);
    Eigen::VectorXd a(n), y(n), e(n), mu0(n), mu1(n), tau(n), y0(n), y1(n);
    std::vector<double> row(static_cast<std::size_t>(dgp.p));
    for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < dgp.p; ++j) x(i, j) = row[static_cast<std::size_t>(j)] = xs.normal();
        e[i] = dgp_propensity(dgp, row);
        mu0[i] = dgp_mu0(row);
        tau[i] = dgp_tau(dgp, row);
        mu1[i] = mu0[i] + tau[i];
        a[i] = as.bernoulli(e[i]) ? 1.0 : 0.0;
        const double u = us.normal();
        y0[i] = mu0[i] + u;
        y1[i] = mu1[i] + u;
        y[i] = a[i] == 1.0 ? y1[i] : y0[i];
    }
    return {Dataset(std::move(x), std::move(a), std::move(y)), e, mu0, mu1, tau, y0, y1};
}

NuisanceSpecs bind_oracle(NuisanceSpecs specs, const std::shared_ptr<const OracleProvider>& provider) {
    auto bind = [&](LearnerSpec& s) {
        if (s.kind == LearnerKind::Oracle && !s.oracle) s.oracle = provider;
        for (auto& m : s.stack_members)
            if (m.kind == LearnerKind::Oracle && !m.oracle) m.oracle = provider;
    };
    bind(specs.propensity);
    bind(specs.outcome0);
    bind(specs.outcome1);
    return specs;
}

nlohmann::json TruthResult::to_json() const {
    return {{"estimand", estimand.label()}, {"gamma0", gamma0}, {"se", se}, {"per_rep", per_rep}};
}

std::vector<TruthResult> true_gamma(const DgpSpec& dgp, const std::vector<EstimandSpec>& estimands,
                                    const RngContract& rng, Index n_large, int reps, int threads) {
    dgp.validate();
    if (n_large < 2 || reps < 1) throw ConfigError("true_gamma needs n_large >= 2 and reps >= 1");
    std::vector<WeightFamily> families(estimands.begin(), estimands.end());
    const std::size_t f = families.size();
    std::vector<std::vector<double>> per_rep(f, std::vector<double>(static_cast<std::size_t>(reps)));
    if (dgp.ps_kind != PsKind::Random) dgp_calibration(dgp);  // warm the cache outside the workers

    parallel_for(static_cast<std::size_t>(reps), threads, [&](std::size_t r) {
        auto xs = rng.child("truth", r).stream();
        std::vector<double> row(static_cast<std::size_t>(dgp.p));
        std::vector<Sum> num(f), den(f);
        for (Index i = 0; i < n_large; ++i) {
            for (auto& v : row) v = xs.normal();
            const double e = dgp_propensity(dgp, row);
            const double tau = dgp_tau(dgp, row);
            for (std::size_t k = 0; k < f; ++k) {
                const double lam = families[k].lambda(e);
                num[k].add(lam * tau);
                den[k].add(lam);
            }
        }
        for (std::size_t k = 0; k < f; ++k) per_rep[k][r] = num[k].value() / den[k].value();
    });

    std::vector<TruthResult> out;
    for (std::size_t k = 0; k < f; ++k) {
        TruthResult t;
        t.estimand = estimands[k];
        t.per_rep = per_rep[k];
        Sum s;
        for (double v : t.per_rep) s.add(v);
        t.gamma0 = s.value() / reps;
        if (reps > 1) {
            Sum ss;
            for (double v : t.per_rep) ss.add((v - t.gamma0) * (v - t.gamma0));
            t.se = std::sqrt(ss.value() / (reps - 1) / reps);
        }
        out.push_back(std::move(t));
    }
    return out;
}

void StudyConfig::validate() const {
    dgp.validate();
    if (estimands.empty()) throw ConfigError("at least one estimand is required");
    if (methods.empty()) throw ConfigError("at least one method is required");
    if (n < 2 * k_folds) throw ConfigError("n must be at least 2 * k_folds");
    if (m_reps < 1) throw ConfigError("reps must be >= 1");
    if (truth_reps < 1 || truth_n < 2) throw ConfigError("truth settings must be positive");
    if (threads < 1) throw ConfigError("threads must be >= 1");
}

Interval coverage_band(int m, double alpha) {
    const double nominal = 100.0 * (1.0 - alpha);
    const double half = 1.96 * std::sqrt(nominal * (100.0 - nominal) / static_cast<double>(m));
    return {nominal - half, nominal + half};
}

MetricsRow score_replications(const std::vector<double>& estimates, const std::vector<Interval>& cis, double gamma0,
                              double alpha) {
    MetricsRow row;
    row.gamma0 = gamma0;
    row.m_reps = static_cast<int>(estimates.size());
    Sum mean_sum;
    std::vector<std::size_t> ok;
    for (std::size_t i = 0; i < estimates.size(); ++i) {
        if (std::isfinite(estimates[i])) {
            ok.push_back(i);
            mean_sum.add(estimates[i]);
        }
    }
    row.successes = static_cast<int>(ok.size());
    row.failures = row.m_reps - row.successes;
    if (ok.empty()) {
        row.mean_estimate = row.abias = row.sd = row.rmse = row.cp_pct = row.mean_se =
            std::numeric_limits<double>::quiet_NaN();
        row.mc_band = {row.cp_pct, row.cp_pct};
        return row;
    }
    const auto m = static_cast<double>(ok.size());
    row.mean_estimate = mean_sum.value() / m;
    Sum var, mse, se_sum;
    int covered = 0, se_count = 0;
    const double z = normal_quantile(1.0 - alpha / 2.0);
    for (std::size_t i : ok) {
        const double g = estimates[i];
        var.add((g - row.mean_estimate) * (g - row.mean_estimate));
        mse.add((g - gamma0) * (g - gamma0));
        if (cis[i].lo <= gamma0 && gamma0 <= cis[i].hi) ++covered;
        const double half = 0.5 * (cis[i].hi - cis[i].lo);
        if (std::isfinite(half)) {
            se_sum.add(half / z);
            ++se_count;
        }
    }
    row.abias = std::abs(row.mean_estimate - gamma0);
    row.sd = std::sqrt(var.value() / m);
    row.rmse = std::sqrt(mse.value() / m);
    row.cp_pct = 100.0 * covered / m;
    row.mean_se = se_count ? se_sum.value() / se_count : std::numeric_limits<double>::quiet_NaN();
    row.mc_band = coverage_band(row.successes, alpha);
    return row;
}

StudyResult run_study(const StudyConfig& cfg) {
    cfg.validate();
    StudyResult result;
    result.config = cfg;
    const RngContract root(cfg.seed);

    // Truth for every estimand not supplied.
    std::vector<EstimandSpec> missing;
    for (const auto& e : cfg.estimands)
        if (!cfg.gamma0.count(e.label())) missing.push_back(e);
    std::map<std::string, double> gamma0 = cfg.gamma0;
    if (!missing.empty()) {
        for (auto& t : true_gamma(cfg.dgp, missing, root.child("truth_root", 0), cfg.truth_n, cfg.truth_reps,
                                  cfg.threads)) {
            gamma0[t.estimand.label()] = t.gamma0;
            result.truth.push_back(std::move(t));
        }
    }

    EstimationOptions opts;
    opts.estimands = cfg.estimands;
    opts.methods = cfg.methods;
    opts.k_folds = cfg.k_folds;
    opts.n_splits = cfg.n_splits;
    opts.specs = bind_oracle(cfg.specs, std::make_shared<DgpOracle>(cfg.dgp));
    opts.clip = cfg.clip;
    opts.alpha = cfg.alpha;
    opts.aggregation = cfg.n_splits == 1 ? Aggregation::Single : cfg.aggregation;
    opts.dml1_size_weighted = cfg.dml1_size_weighted;
    opts.threads = 1;
    opts.validate();

    const std::size_t reps = static_cast<std::size_t>(cfg.m_reps);
    std::vector<std::optional<EstimationRun>> runs(reps);
    std::vector<std::string> errors(reps);
    if (cfg.dgp.ps_kind != PsKind::Random) dgp_calibration(cfg.dgp);
    parallel_for(reps, cfg.threads, [&](std::size_t m) {
        const RngContract rep = root.child("rep", m);
        try {
            const SimulatedData sim = generate(cfg.dgp, cfg.n, rep.child("data", 0));
            runs[m] = run_estimation(sim.data, opts, rep.child("fit", 0), rep.child("plan", 0).stream_seed());
        } catch (const Error& e) {
            errors[m] = e.what();
        }
    });

    for (std::size_t m = 0; m < reps; ++m) {
        if (runs[m]) continue;
        ++result.failed_reps;
        if (result.failure_messages.size() < kMaxFailureMessages)
            result.failure_messages.push_back("rep " + std::to_string(m) + ": " + errors[m]);
    }

    const std::size_t n_methods = cfg.methods.size();
    for (std::size_t e = 0; e < cfg.estimands.size(); ++e) {
        for (std::size_t k = 0; k < n_methods; ++k) {
            std::vector<double> est(reps, std::numeric_limits<double>::quiet_NaN());
            std::vector<Interval> cis(reps);
            for (std::size_t m = 0; m < reps; ++m) {
                if (!runs[m]) continue;
                const auto& r = runs[m]->reports[e * n_methods + k];
                est[m] = r.gamma_hat;
                cis[m] = r.ci;
            }
            MetricsRow row = score_replications(est, cis, gamma0.at(cfg.estimands[e].label()), cfg.alpha);
            row.estimand = cfg.estimands[e].label();
            row.method = std::string(method_name(cfg.methods[k]));
            row.n = cfg.n;
            result.rows.push_back(std::move(row));
        }
    }
    return result;
}

std::string StudyResult::to_csv() const {
    std::ostringstream out;
    out << "schema_version,design,estimand,method,n,m_reps,successes,failures,gamma0,mean_estimate,abias,sd,rmse,"
           "cp_pct,mean_se,mc_band_lo,mc_band_hi\n";
    for (const auto& r : rows) {
        out << kSchemaVersion << ',' << config.dgp.label() << ',' << r.estimand << ',' << r.method << ',' << r.n << ','
            << r.m_reps << ',' << r.successes << ',' << r.failures << ',' << fmt6(r.gamma0) << ','
            << fmt6(r.mean_estimate) << ',' << fmt6(r.abias) << ',' << fmt6(r.sd) << ',' << fmt6(r.rmse) << ','
            << fmt6(r.cp_pct) << ',' << fmt6(r.mean_se) << ',' << fmt6(r.mc_band.lo) << ',' << fmt6(r.mc_band.hi)
            << '\n';
    }
    return out.str();
}

nlohmann::json StudyResult::to_json() const {
    auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
    nlohmann::json metrics = nlohmann::json::array();
    for (const auto& r : rows) {
        metrics.push_back({{"estimand", r.estimand},
                           {"method", r.method},
                           {"n", r.n},
                           {"m_reps", r.m_reps},
                           {"successes", r.successes},
                           {"failures", r.failures},
                           {"gamma0", num(r.gamma0)},
                           {"mean_estimate", num(r.mean_estimate)},
                           {"abias", num(r.abias)},
                           {"sd", num(r.sd)},
                           {"rmse", num(r.rmse)},
                           {"cp_pct", num(r.cp_pct)},
                           {"mean_se", num(r.mean_se)},
                           {"mc_band", {num(r.mc_band.lo), num(r.mc_band.hi)}}});
    }
    nlohmann::json truth_json = nlohmann::json::array();
    for (const auto& t : truth) truth_json.push_back(t.to_json());
    return {{"schema_version", kSchemaVersion},
            {"design", config.dgp.to_json()},
            {"failed_reps", failed_reps},
            {"failure_messages", failure_messages},
            {"truth", truth_json},
            {"metrics", metrics}};
}

ProbeResult orthogonality_probe(const DgpSpec& dgp, const WeightFamily& w, const ProbeDirection& direction,
                                const ProbeOptions& opts, const RngContract& rng) {
    if (opts.steps.size() < 3) throw ConfigError("the probe needs at least 3 steps for a quadratic fit");
    const SimulatedData sim = generate(dgp, opts.n_mc, rng);
    const Index n = opts.n_mc;
    const auto& X = sim.data.covariates();
    const auto& A = sim.data.treatment();
    const auto& Y = sim.data.outcome();

    ProbeResult out;
    out.steps = opts.steps;
    if (opts.gamma0) {
        out.gamma0 = *opts.gamma0;
    } else {
        Sum num, den;
        for (Index i = 0; i < n; ++i) {
            const double lam = w.lambda(sim.e[i]);
            num.add(lam * sim.tau[i]);
            den.add(lam);
        }
        out.gamma0 = num.value() / den.value();
    }

    // Least-squares weights: coefficient c = (R'R)^-1 R' g over the grid r.
    const auto q = static_cast<Index>(opts.steps.size());
    Eigen::MatrixXd R(q, 3);
    for (Index k = 0; k < q; ++k) {
        const double r = opts.steps[static_cast<std::size_t>(k)];
        R.row(k) << 1.0, r, r * r;
    }
    const Eigen::MatrixXd coef_map = (R.transpose() * R).ldlt().solve(R.transpose());

    Sum slope_sum, slope_sq, curv_sum, curv_sq;
    std::vector<Sum> g(static_cast<std::size_t>(q));
    std::vector<double> row(static_cast<std::size_t>(dgp.p));
    Eigen::VectorXd l(q);
    for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < dgp.p; ++j) row[static_cast<std::size_t>(j)] = X(i, j);
        const double de = direction.de ? direction.de(row) : 0.0;
        const double dm0 = direction.dmu0 ? direction.dmu0(row) : 0.0;
        const double dm1 = direction.dmu1 ? direction.dmu1(row) : 0.0;
        for (Index k = 0; k < q; ++k) {
            const double r = opts.steps[static_cast<std::size_t>(k)];
            const double e = sim.e[i] + r * de;
            if (!(e > 0.0 && e < 1.0))
                throw ConfigError("probe direction '" + direction.name + "' moves the propensity outside (0,1) at r=" +
                                  fmt6(r));
            const double mu0 = sim.mu0[i] + r * dm0;
            const double mu1 = sim.mu1[i] + r * dm1;
            const double tau = mu1 - mu0;
            const double a = A[i];
            const double psi = a / e * (Y[i] - mu1) - (1.0 - a) / (1.0 - e) * (Y[i] - mu0) + tau;
            const double lam = w.eval(e, 0);
            const double dlam = w.eval(e, 1);
            const double dval = lam + dlam * (a - e);
            const double nval = lam * psi + dlam * tau * (a - e);
            l[k] = out.gamma0 * dval - nval;
            g[static_cast<std::size_t>(k)].add(l[k]);
        }
        const Eigen::Vector3d c = coef_map * l;
        const double curv = 2.0 * c[2];
        slope_sum.add(c[1]);
        slope_sq.add(c[1] * c[1]);
        curv_sum.add(curv);
        curv_sq.add(curv * curv);
    }
    const auto nd = static_cast<double>(n);
    out.slope = slope_sum.value() / nd;
    out.curvature = curv_sum.value() / nd;
    const double slope_var = std::max(0.0, slope_sq.value() / nd - out.slope * out.slope);
    const double curv_var = std::max(0.0, curv_sq.value() / nd - out.curvature * out.curvature);
    out.slope_se = std::sqrt(slope_var / nd);
    out.curvature_se = std::sqrt(curv_var / nd);
    for (auto& s : g) out.g.push_back(s.value() / nd);
    return out;
}

}  // namespace wate
