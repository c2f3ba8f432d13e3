#include "cli.hpp"

#include "wate/dataset.hpp"
#include "wate/diagnostics.hpp"
#include "wate/errors.hpp"
#include "wate/estimand.hpp"
#include "wate/learners.hpp"
#include "wate/pipeline.hpp"
#include "wate/rng.hpp"
#include "wate/simulation.hpp"
#include "wate/weights.hpp"

#ifdef WATE_CLI11_SINGLE_HEADER
#include <CLI11.hpp>
#else
#include <CLI/CLI.hpp>
#endif

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

namespace wate::cli {

namespace {

constexpr const char* kVersion = WATE_VERSION;

std::string fmt6(double v) {
    if (!std::isfinite(v)) return "NA";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

/// Shortest decimal form that parses back to the same double.
std::string fmt_full(double v) {
    char buf[40];
    for (int digits = 15; digits <= 17; ++digits) {
        std::snprintf(buf, sizeof buf, "%.*g", digits, v);
        if (std::strtod(buf, nullptr) == v) break;
    }
    return buf;
}

std::string hex64(std::uint64_t v) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

void write_file(const std::string& path, const std::string& text, std::ostream& out) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot write output file '" + path + "'");
    f << text;
    if (!f) throw ConfigError("failed writing output file '" + path + "'");
    out << path << '\n';
}

bool want_csv(const RunConfig& c) { return c.format == "csv" || c.format == "both"; }
bool want_json(const RunConfig& c) { return c.format == "json" || c.format == "both"; }

// ---------------------------------------------------------------------------
// Resolution of config strings into library types

std::vector<EstimandSpec> resolve_estimands(const RunConfig& c) {
    std::vector<EstimandSpec> out;
    for (const auto& s : c.estimands) out.push_back(EstimandSpec::parse(s));
    if (out.empty()) throw ConfigError("at least one --estimand is required");
    return out;
}

std::vector<Method> resolve_methods(const RunConfig& c) {
    std::vector<Method> out;
    for (const auto& s : c.methods) out.push_back(parse_method(s));
    if (out.empty()) throw ConfigError("at least one --method is required");
    return out;
}

ClipBounds resolve_clip(const RunConfig& c) {
    ClipBounds b{c.clip_lo, c.clip_hi};
    b.validate();
    return b;
}

std::vector<std::string> split_list(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream in(s);
    std::string item;
    while (std::getline(in, item, sep)) out.push_back(item);
    return out;
}

/// Column oracle references: "oracle:<col>" for the propensity and
/// "oracle:<mu0 col>,<mu1 col>" for outcomes.
struct OracleColumns {
    std::string e_col;
    std::string mu0_col;
    std::string mu1_col;
};

OracleColumns oracle_columns(const RunConfig& c) {
    OracleColumns oc;
    if (c.learner_ps.rfind("oracle:", 0) == 0) {
        oc.e_col = c.learner_ps.substr(7);
        if (oc.e_col.empty()) throw ConfigError("--learner-ps oracle:<column> needs a column name");
    }
    if (c.learner_outcome.rfind("oracle:", 0) == 0) {
        const auto cols = split_list(c.learner_outcome.substr(7), ',');
        if (cols.size() != 2 || cols[0].empty() || cols[1].empty())
            throw ConfigError("--learner-outcome oracle:<mu0 column>,<mu1 column> needs two column names");
        oc.mu0_col = cols[0];
        oc.mu1_col = cols[1];
    }
    return oc;
}

CsvOptions csv_options(const RunConfig& c, const OracleColumns& oc) {
    if (c.delimiter.size() != 1) throw ConfigError("--delimiter must be a single character");
    CsvOptions o;
    o.treatment_col = c.treatment_col;
    o.outcome_col = c.outcome_col;
    o.delimiter = c.delimiter[0];
    o.id_col = c.id_col;
    for (const auto* col : {&oc.e_col, &oc.mu0_col, &oc.mu1_col})
        if (!col->empty() && std::find(o.reserved_cols.begin(), o.reserved_cols.end(), *col) == o.reserved_cols.end())
            o.reserved_cols.push_back(*col);
    return o;
}

NuisanceSpecs resolve_data_specs(const RunConfig& c, const LoadedData& loaded, const OracleColumns& oc) {
    const Index n = loaded.data.n();
    auto column = [&](const std::string& name) {
        return name.empty() ? Eigen::VectorXd(Eigen::VectorXd::Zero(n)) : loaded.reserved.at(name);
    };
    NuisanceSpecs specs;
    if (!oc.e_col.empty()) {
        const Eigen::VectorXd e = column(oc.e_col);
        for (Index i = 0; i < n; ++i)
            if (!(e[i] > 0.0 && e[i] < 1.0))
                throw DataError("oracle propensity column '" + oc.e_col + "' must lie in (0,1) (row " +
                                std::to_string(i) + ")");
        specs.propensity = LearnerSpec::oracle_of(
            std::make_shared<ColumnOracle>("column:" + oc.e_col, e, Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n)));
    } else {
        specs.propensity = LearnerSpec::parse(c.learner_ps);
    }
    if (!oc.mu0_col.empty()) {
        auto provider = std::make_shared<ColumnOracle>("columns:" + oc.mu0_col + "," + oc.mu1_col,
                                                       Eigen::VectorXd::Constant(n, 0.5), column(oc.mu0_col),
                                                       column(oc.mu1_col));
        specs.outcome0 = specs.outcome1 = LearnerSpec::oracle_of(provider);
    } else {
        specs.outcome0 = specs.outcome1 = LearnerSpec::parse(c.learner_outcome);
    }
    return specs;
}

LearnerSpec parse_sim_learner(const std::string& text) {
    if (text == "oracle") return LearnerSpec::of(LearnerKind::Oracle);
    return LearnerSpec::parse(text);
}

Aggregation resolve_aggregation(const RunConfig& c) { return parse_aggregation(c.aggregate); }

void check_common(const RunConfig& c) {
    if (c.format != "csv" && c.format != "json" && c.format != "both")
        throw ConfigError("--format must be csv, json or both");
    if (!(c.alpha > 0.0 && c.alpha < 1.0)) throw ConfigError("--alpha must lie in (0,1)");
}

nlohmann::json report_header(const RunConfig& c) {
    return {{"tool", "wate"},
            {"version", kVersion},
            {"command", c.command},
            {"seed", c.seed},
            {"config_digest", c.digest()},
            {"config", c.to_json()}};
}

nlohmann::json provenance_json(const NuisanceProvenance& p) {
    nlohmann::json stacks = nlohmann::json::object();
    for (const auto& [target, weights] : p.stack_weights) {
        nlohmann::json w = nlohmann::json::object();
        for (const auto& [name, v] : weights) w[name] = v;
        stacks[target] = w;
    }
    return {{"propensity", p.propensity},
            {"outcome0", p.outcome0},
            {"outcome1", p.outcome1},
            {"training_digest", hex64(p.training_digest)},
            {"training_size", p.training_size},
            {"ridge", p.ridge},
            {"stack_weights", stacks}};
}

// ---------------------------------------------------------------------------
// Commands

int cmd_estimate(const RunConfig& c, std::ostream& out, std::ostream& err) {
    check_common(c);
    if (c.data_path.empty()) throw ConfigError("--data is required");
    const auto oc = oracle_columns(c);
    const LoadedData loaded = read_csv(c.data_path, csv_options(c, oc));

    EstimationOptions opts;
    opts.estimands = resolve_estimands(c);
    opts.methods = resolve_methods(c);
    opts.k_folds = c.k_folds;
    opts.n_splits = c.n_splits;
    opts.seed = c.seed;
    opts.specs = resolve_data_specs(c, loaded, oc);
    opts.clip = resolve_clip(c);
    opts.alpha = c.alpha;
    opts.aggregation = resolve_aggregation(c);
    opts.dml1_size_weighted = c.dml1_size_weighted;
    opts.threads = c.threads;

    const EstimationRun run = run_estimation(loaded.data, opts);
    for (const auto& w : run.warnings) err << "warning: " << w << '\n';

    if (want_csv(c)) {
        std::ostringstream csv;
        csv << "estimand,method,gamma_hat,se,ci_lo,ci_hi,sigma2,alpha,n,k_folds,n_splits,aggregation\n";
        for (const auto& r : run.reports) {
            csv << r.estimand.label() << ',' << method_name(r.method) << ',' << fmt6(r.gamma_hat) << ',' << fmt6(r.se)
                << ',' << fmt6(r.ci.lo) << ',' << fmt6(r.ci.hi) << ',' << fmt6(r.sigma2) << ',' << fmt6(r.alpha) << ','
                << r.n << ',' << r.k_folds << ',' << r.n_splits << ',' << aggregation_name(r.aggregation) << '\n';
        }
        write_file(c.out + ".csv", csv.str(), out);
    }
    if (want_json(c)) {
        nlohmann::json j = report_header(c);
        j["clip"] = {{"lo", opts.clip.lo}, {"hi", opts.clip.hi}};
        j["n"] = loaded.data.n();
        if (run.full_sample_provenance) {
            j["full_sample"] = {{"clipped_low", run.clipped_low},
                                {"clipped_high", run.clipped_high},
                                {"provenance", provenance_json(*run.full_sample_provenance)}};
        }
        j["warnings"] = run.warnings;
        nlohmann::json results = nlohmann::json::array();
        for (const auto& r : run.reports) results.push_back(r.to_json());
        j["results"] = results;
        write_file(c.out + ".json", j.dump(2) + "\n", out);
    }
    return kOk;
}

int cmd_simulate(const RunConfig& c, std::ostream& out, std::ostream&) {
    check_common(c);
    StudyConfig s;
    s.dgp = DgpSpec::parse(c.dgp);
    s.estimands = resolve_estimands(c);
    s.methods = resolve_methods(c);
    s.n = c.n;
    s.m_reps = c.reps;
    s.specs.propensity = parse_sim_learner(c.learner_ps);
    s.specs.outcome0 = s.specs.outcome1 = parse_sim_learner(c.learner_outcome);
    s.k_folds = c.k_folds;
    s.n_splits = c.n_splits;
    s.aggregation = resolve_aggregation(c);
    s.clip = resolve_clip(c);
    s.alpha = c.alpha;
    s.dml1_size_weighted = c.dml1_size_weighted;
    s.seed = c.seed;
    s.truth_n = c.truth_n;
    s.truth_reps = c.truth_reps;
    s.threads = c.threads;

    const StudyResult result = run_study(s);
    if (want_csv(c)) write_file(c.out + ".csv", result.to_csv(), out);
    if (want_json(c)) {
        nlohmann::json j = report_header(c);
        const Interval band = coverage_band(c.reps, c.alpha);
        j["cp_band"] = {band.lo, band.hi};
        j["cp_band_rounded"] = {std::round(band.lo), std::round(band.hi)};
        j.update(result.to_json());
        write_file(c.out + ".json", j.dump(2) + "\n", out);
    }
    return kOk;
}

int cmd_balance(const RunConfig& c, std::ostream& out, std::ostream&) {
    check_common(c);
    if (c.data_path.empty()) throw ConfigError("--data is required");
    const auto oc = oracle_columns(c);
    CsvOptions opts = csv_options(c, oc);
    // Balance reads only X and A: an outcome column is excluded when present and not required.
    {
        std::ifstream f(c.data_path);
        if (!f) throw DataError("cannot open data file '" + c.data_path + "'");
        std::string header;
        std::getline(f, header);
        if (!header.empty() && header.back() == '\r') header.pop_back();
        bool has_outcome = false;
        for (const auto& h : split_list(header, opts.delimiter)) has_outcome |= (h == opts.outcome_col);
        if (has_outcome && !opts.outcome_col.empty()) opts.reserved_cols.push_back(opts.outcome_col);
        opts.outcome_col.clear();
    }
    const LoadedData loaded = read_csv(c.data_path, opts);
    const Dataset& d = loaded.data;
    require_estimable(d, false);

    const ClipBounds clip = resolve_clip(c);
    const LearnerSpec ps = oc.e_col.empty() ? LearnerSpec::parse(c.learner_ps)
                                            : resolve_data_specs(c, loaded, oc).propensity;
    const RowSet all = d.all_rows();
    const auto model = fit_propensity(d, all, ps, RngContract(c.seed).child("full", 0).child("propensity", 0));
    NuisanceFit fit;
    fit.rows = all;
    fit.clip = clip;
    fit.e_raw = model->predict(d, all);
    fit.e_hat = fit.e_raw.cwiseMax(clip.lo).cwiseMin(clip.hi);
    fit.mu0_hat = fit.mu1_hat = Eigen::VectorXd::Zero(d.n());

    std::vector<WeightFamily> families;
    for (const auto& e : resolve_estimands(c)) families.emplace_back(e);
    AsmdScale scale;
    if (c.asmd_scale == "unweighted") scale = AsmdScale::UnweightedPooled;
    else if (c.asmd_scale == "weighted") scale = AsmdScale::WeightedPooled;
    else throw ConfigError("--asmd-scale must be unweighted or weighted");

    const BalanceTable table = balance_table(d, fit, families, c.threshold, scale);
    const OverlapSummary overlap = overlap_summary(d, fit, c.bins);
    if (want_csv(c)) {
        write_file(c.out + "_balance.csv", table.to_csv(), out);
        write_file(c.out + "_love.csv", table.love_plot_csv(), out);
        write_file(c.out + "_overlap.csv", overlap.to_csv(), out);
    }
    if (want_json(c)) {
        nlohmann::json j = report_header(c);
        j["propensity_learner"] = ps.describe();
        j["clip"] = {{"lo", clip.lo}, {"hi", clip.hi}};
        j["balance"] = table.to_json();
        j["overlap"] = overlap.to_json();
        write_file(c.out + ".json", j.dump(2) + "\n", out);
    }
    return kOk;
}

int cmd_truth(const RunConfig& c, std::ostream& out, std::ostream&) {
    check_common(c);
    const DgpSpec dgp = DgpSpec::parse(c.dgp);
    const auto truths = true_gamma(dgp, resolve_estimands(c), RngContract(c.seed), c.truth_n, c.truth_reps, c.threads);
    if (want_csv(c)) {
        std::ostringstream csv;
        csv << "design,estimand,gamma0,se,reps,n_large\n";
        for (const auto& t : truths)
            csv << dgp.label() << ',' << t.estimand.label() << ',' << fmt6(t.gamma0) << ',' << fmt6(t.se) << ','
                << c.truth_reps << ',' << c.truth_n << '\n';
        write_file(c.out + ".csv", csv.str(), out);
    }
    if (want_json(c)) {
        nlohmann::json j = report_header(c);
        j["design"] = dgp.to_json();
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& t : truths) arr.push_back(t.to_json());
        j["truth"] = arr;
        write_file(c.out + ".json", j.dump(2) + "\n", out);
    }
    return kOk;
}

// ---------------------------------------------------------------------------
// Argument parsing

std::optional<std::string> find_config_path(int argc, const char* const* argv) {
    for (int i = 1; i < argc; ++i) {
        const std::string a = argv[i];
        if (a == "--config" && i + 1 < argc) return std::string(argv[i + 1]);
        if (a.rfind("--config=", 0) == 0) return a.substr(9);
    }
    return std::nullopt;
}

RunConfig load_config_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config file '" + path + "'");
    nlohmann::json j;
    try {
        f >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
    }
    return RunConfig::from_json(j.contains("config") ? j.at("config") : j);
}

struct ClipText {
    std::string text;
};

void add_data_options(CLI::App* sub, RunConfig& c) {
    sub->add_option("--data", c.data_path, "CSV file with a header row");
    sub->add_option("--treatment", c.treatment_col, "Treatment column (0/1)")->capture_default_str();
    sub->add_option("--outcome", c.outcome_col, "Outcome column")->capture_default_str();
    sub->add_option("--id", c.id_col, "Optional row-label column");
    sub->add_option("--delimiter", c.delimiter, "Field delimiter")->capture_default_str();
}

void add_estimand_options(CLI::App* sub, RunConfig& c) {
    sub->add_option("--estimand", c.estimands, "ATE, ATT, ATC, ATO, ATEN or ATB(nu1,nu2); repeatable")
        ->delimiter(';')
        ->capture_default_str();
}

void add_estimation_options(CLI::App* sub, RunConfig& c, ClipText& clip) {
    sub->add_option("--method", c.methods, "naive1, naive2, eif, dml1, dml2; repeatable")
        ->delimiter(',')
        ->capture_default_str();
    sub->add_option("--k-folds", c.k_folds, "Cross-fitting folds")->capture_default_str();
    sub->add_option("--splits", c.n_splits, "Independent sample splits")->capture_default_str();
    sub->add_option("--clip", clip.text, "Propensity clipping bounds lo,hi")->capture_default_str();
    sub->add_option("--alpha", c.alpha, "Confidence level is 1 - alpha")->capture_default_str();
    sub->add_option("--aggregate", c.aggregate, "Split aggregation: mean or median")->capture_default_str();
    sub->add_option("--learner-ps", c.learner_ps, "Propensity learner")->capture_default_str();
    sub->add_option("--learner-outcome", c.learner_outcome, "Outcome learner")->capture_default_str();
    sub->add_flag("--dml1-size-weighted", c.dml1_size_weighted, "Weight DML-1 fold estimates by fold size");
}

void add_run_options(CLI::App* sub, RunConfig& c) {
    sub->add_option("--seed", c.seed, "Root seed")->capture_default_str();
    sub->add_option("--out", c.out, "Output path prefix")->capture_default_str();
    sub->add_option("--format", c.format, "csv, json or both")->capture_default_str();
    sub->add_option("--threads", c.threads, "Worker threads (0 = all cores); results do not depend on it")
        ->capture_default_str();
    sub->add_option("--config", "Rerun from a report or config JSON; other flags override it");
}

void add_truth_options(CLI::App* sub, RunConfig& c) {
    sub->add_option("--dgp", c.dgp, "dgp1..dgp5 or ps=<kind>,cate=<kind>")->capture_default_str();
    sub->add_option("--truth-n", c.truth_n, "Rows per truth replication")->capture_default_str();
    sub->add_option("--truth-reps", c.truth_reps, "Truth replications")->capture_default_str();
}

ClipBounds parse_clip(const std::string& text) {
    const auto parts = split_list(text, ',');
    if (parts.size() != 2) throw ConfigError("--clip expects lo,hi");
    try {
        return {std::stod(parts[0]), std::stod(parts[1])};
    } catch (const std::exception&) {
        throw ConfigError("--clip expects two numbers, got '" + text + "'");
    }
}

}  // namespace

nlohmann::json RunConfig::to_json() const {
    return {{"command", command},
            {"data_path", data_path},
            {"treatment_col", treatment_col},
            {"outcome_col", outcome_col},
            {"id_col", id_col},
            {"delimiter", delimiter},
            {"estimands", estimands},
            {"methods", methods},
            {"k_folds", k_folds},
            {"n_splits", n_splits},
            {"seed", seed},
            {"learner_ps", learner_ps},
            {"learner_outcome", learner_outcome},
            {"clip_lo", clip_lo},
            {"clip_hi", clip_hi},
            {"alpha", alpha},
            {"aggregate", aggregate},
            {"dml1_size_weighted", dml1_size_weighted},
            {"dgp", dgp},
            {"n", n},
            {"reps", reps},
            {"truth_n", truth_n},
            {"truth_reps", truth_reps},
            {"threshold", threshold},
            {"bins", bins},
            {"asmd_scale", asmd_scale},
            {"out", out},
            {"format", format}};
}

RunConfig RunConfig::from_json(const nlohmann::json& j) {
    RunConfig c;
    try {
        c.command = j.value("command", c.command);
        c.data_path = j.value("data_path", c.data_path);
        c.treatment_col = j.value("treatment_col", c.treatment_col);
        c.outcome_col = j.value("outcome_col", c.outcome_col);
        c.id_col = j.value("id_col", c.id_col);
        c.delimiter = j.value("delimiter", c.delimiter);
        c.estimands = j.value("estimands", c.estimands);
        c.methods = j.value("methods", c.methods);
        c.k_folds = j.value("k_folds", c.k_folds);
        c.n_splits = j.value("n_splits", c.n_splits);
        c.seed = j.value("seed", c.seed);
        c.learner_ps = j.value("learner_ps", c.learner_ps);
        c.learner_outcome = j.value("learner_outcome", c.learner_outcome);
        c.clip_lo = j.value("clip_lo", c.clip_lo);
        c.clip_hi = j.value("clip_hi", c.clip_hi);
        c.alpha = j.value("alpha", c.alpha);
        c.aggregate = j.value("aggregate", c.aggregate);
        c.dml1_size_weighted = j.value("dml1_size_weighted", c.dml1_size_weighted);
        c.dgp = j.value("dgp", c.dgp);
        c.n = j.value("n", c.n);
        c.reps = j.value("reps", c.reps);
        c.truth_n = j.value("truth_n", c.truth_n);
        c.truth_reps = j.value("truth_reps", c.truth_reps);
        c.threshold = j.value("threshold", c.threshold);
        c.bins = j.value("bins", c.bins);
        c.asmd_scale = j.value("asmd_scale", c.asmd_scale);
        c.out = j.value("out", c.out);
        c.format = j.value("format", c.format);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed config: ") + e.what());
    }
    return c;
}

std::string RunConfig::digest() const { return hex64(fnv1a(to_json().dump())); }

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    try {
        RunConfig file_cfg;
        const auto config_path = find_config_path(argc, argv);
        if (config_path) file_cfg = load_config_file(*config_path);

        // Each subcommand binds to its own copy so per-command defaults can differ.
        RunConfig est = file_cfg, sim = file_cfg, bal = file_cfg, tru = file_cfg;
        if (!config_path) {
            sim.n_splits = 10;
            sim.methods = {"naive1", "naive2", "eif", "dml1", "dml2"};
        }
        ClipText est_clip{fmt_full(est.clip_lo) + "," + fmt_full(est.clip_hi)};
        ClipText sim_clip{fmt_full(sim.clip_lo) + "," + fmt_full(sim.clip_hi)};
        ClipText bal_clip{fmt_full(bal.clip_lo) + "," + fmt_full(bal.clip_hi)};

        CLI::App app{"Weighted average treatment effect estimation"};
        app.set_version_flag("--version", std::string(kVersion));
        app.require_subcommand(1);

        auto* e = app.add_subcommand("estimate", "Estimate WATEs from a CSV file");
        add_data_options(e, est);
        add_estimand_options(e, est);
        add_estimation_options(e, est, est_clip);
        add_run_options(e, est);

        auto* s = app.add_subcommand("simulate", "Monte Carlo study on a synthetic design");
        add_estimand_options(s, sim);
        add_estimation_options(s, sim, sim_clip);
        add_truth_options(s, sim);
        s->add_option("--n", sim.n, "Sample size per replication")->capture_default_str();
        s->add_option("--reps", sim.reps, "Monte Carlo replications")->capture_default_str();
        add_run_options(s, sim);

        auto* b = app.add_subcommand("balance", "Covariate balance and propensity overlap");
        add_data_options(b, bal);
        add_estimand_options(b, bal);
        b->add_option("--learner-ps", bal.learner_ps, "Propensity learner")->capture_default_str();
        b->add_option("--clip", bal_clip.text, "Propensity clipping bounds lo,hi")->capture_default_str();
        b->add_option("--threshold", bal.threshold, "ASMD flag threshold")->capture_default_str();
        b->add_option("--bins", bal.bins, "Histogram bins")->capture_default_str();
        b->add_option("--asmd-scale", bal.asmd_scale, "unweighted or weighted pooled SD")->capture_default_str();
        add_run_options(b, bal);

        auto* t = app.add_subcommand("truth", "Large-sample truth for a synthetic design");
        add_estimand_options(t, tru);
        add_truth_options(t, tru);
        add_run_options(t, tru);

        try {
            app.parse(argc, argv);
        } catch (const CLI::CallForHelp& ex) {
            return app.exit(ex, out, err);
        } catch (const CLI::CallForAllHelp& ex) {
            return app.exit(ex, out, err);
        } catch (const CLI::CallForVersion& ex) {
            return app.exit(ex, out, err);
        } catch (const CLI::ParseError& ex) {
            app.exit(ex, out, err);
            return kConfig;
        }

        auto finish = [](RunConfig& c, const char* name, const ClipText* clip) {
            c.command = name;
            if (clip) {
                const ClipBounds cb = parse_clip(clip->text);
                c.clip_lo = cb.lo;
                c.clip_hi = cb.hi;
            }
            if (c.threads == 0) c.threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
            if (c.threads < 0) throw ConfigError("--threads must be >= 0");
        };
        if (e->parsed()) {
            finish(est, "estimate", &est_clip);
            return cmd_estimate(est, out, err);
        }
        if (s->parsed()) {
            finish(sim, "simulate", &sim_clip);
            return cmd_simulate(sim, out, err);
        }
        if (b->parsed()) {
            finish(bal, "balance", &bal_clip);
            return cmd_balance(bal, out, err);
        }
        finish(tru, "truth", nullptr);
        return cmd_truth(tru, out, err);
    } catch (const ConfigError& ex) {
        err << "config error: " << ex.what() << '\n';
        return kConfig;
    } catch (const DataError& ex) {
        err << "data error: " << ex.what() << '\n';
        return kData;
    } catch (const ConvergenceError& ex) {
        err << "estimation error: " << ex.what() << '\n';
        return kDegenerate;
    } catch (const DegenerateError& ex) {
        err << "estimation error: " << ex.what() << '\n';
        return kDegenerate;
    } catch (const DomainError& ex) {
        err << "estimation error: " << ex.what() << '\n';
        return kDegenerate;
    } catch (const Error& ex) {
        err << "error: " << ex.what() << '\n';
        return kDegenerate;
    } catch (const std::exception& ex) {
        err << "internal error: " << ex.what() << '\n';
        return kInternal;
    }
}

}  // namespace wate::cli
