#pragma once

#include <Eigen/Dense>

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace wate {

using Index = Eigen::Index;
using RowSet = std::vector<Index>;

/// Observed triples (X, A, Y).
///
/// Construction checks shape and that treatment is binary. Non-finite values
/// are allowed through so that validate_dataset() can report them by row;
/// estimation entry points call require_estimable() first.
class Dataset {
public:
    Dataset(Eigen::MatrixXd covariates, Eigen::VectorXd treatment, Eigen::VectorXd outcome,
            std::vector<std::string> covariate_names = {}, std::vector<std::string> ids = {});

    Index n() const noexcept { return covariates_.rows(); }
    Index p() const noexcept { return covariates_.cols(); }

    const Eigen::MatrixXd& covariates() const noexcept { return covariates_; }
    const Eigen::VectorXd& treatment() const noexcept { return treatment_; }
    const Eigen::VectorXd& outcome() const noexcept { return outcome_; }
    const std::vector<std::string>& covariate_names() const noexcept { return names_; }
    const std::vector<std::string>& ids() const noexcept { return ids_; }

    int arm(Index row) const { return treatment_[row] > 0.5 ? 1 : 0; }
    Index treated_count() const;

    RowSet all_rows() const;
    /// Rows of `rows` whose treatment equals `arm`.
    RowSet arm_rows(const RowSet& rows, int arm) const;

private:
    Eigen::MatrixXd covariates_;
    Eigen::VectorXd treatment_;
    Eigen::VectorXd outcome_;
    std::vector<std::string> names_;
    std::vector<std::string> ids_;
};

enum class IssueKind {
    NonFiniteCovariate,
    NonFiniteOutcome,
    TreatedArmEmpty,
    ControlArmEmpty,
    ConstantOutcome,
};

struct ValidationIssue {
    IssueKind kind;
    std::optional<Index> row;
    std::optional<Index> column;
    std::string message;
};

struct ValidationReport {
    std::vector<ValidationIssue> issues;

    bool ok() const noexcept { return issues.empty(); }
    bool has(IssueKind kind) const;
    std::string summary() const;
};

/// Lists every estimability violation; an empty report means estimable.
ValidationReport validate_dataset(const Dataset& d);

/// Throws DataError carrying the report summary unless the data is estimable.
/// With `needs_outcome` false, outcome-related issues are ignored.
void require_estimable(const Dataset& d, bool needs_outcome = true);

struct CsvOptions {
    std::string treatment_col = "A";
    /// Empty means no outcome column (outcome filled with zeros).
    std::string outcome_col = "Y";
    char delimiter = ',';
    /// Numeric columns kept aside instead of becoming covariates.
    std::vector<std::string> reserved_cols;
    /// Optional row-label column.
    std::string id_col;
};

struct LoadedData {
    Dataset data;
    std::map<std::string, Eigen::VectorXd> reserved;
};

LoadedData read_csv(const std::string& path, const CsvOptions& opts);
LoadedData parse_csv(const std::string& text, const CsvOptions& opts);

}  // namespace wate
