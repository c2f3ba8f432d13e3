#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace wate::cli {

enum ExitCode : int {
    kOk = 0,
    kInternal = 1,
    kConfig = 2,
    kData = 3,
    kDegenerate = 4,
};

/// Everything a run depends on. Serialized into every report so a run can be
/// repeated with --config; the worker count is left out on purpose because
/// outputs do not depend on it.
struct RunConfig {
    std::string command;

    std::string data_path;
    std::string treatment_col = "A";
    std::string outcome_col = "Y";
    std::string id_col;
    std::string delimiter = ",";

    std::vector<std::string> estimands{"ATE", "ATT", "ATC", "ATO", "ATEN"};
    std::vector<std::string> methods{"naive1", "naive2", "eif", "dml1", "dml2"};
    int k_folds = 5;
    int n_splits = 100;
    std::uint64_t seed = 1;
    std::string learner_ps = "logistic";
    std::string learner_outcome = "linear";
    double clip_lo = 0.01;
    double clip_hi = 0.99;
    double alpha = 0.05;
    std::string aggregate = "median";
    bool dml1_size_weighted = false;

    std::string dgp = "dgp1";
    long long n = 1000;
    int reps = 100;
    long long truth_n = 1'000'000;
    int truth_reps = 10;

    double threshold = 0.1;
    int bins = 20;
    std::string asmd_scale = "unweighted";

    std::string out = "wate_out";
    std::string format = "both";

    int threads = 1;  // not serialized

    nlohmann::json to_json() const;
    static RunConfig from_json(const nlohmann::json& j);
    /// Hex digest of the serialized config.
    std::string digest() const;
};

/// Entry point shared by the executable and the tests. Messages go to `err`,
/// the list of written files to `out`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace wate::cli
