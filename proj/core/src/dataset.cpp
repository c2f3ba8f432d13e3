#include "wate/dataset.hpp"

#include "wate/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace wate {

Dataset::Dataset(Eigen::MatrixXd covariates, Eigen::VectorXd treatment, Eigen::VectorXd outcome,
                 std::vector<std::string> covariate_names, std::vector<std::string> ids)
    : covariates_(std::move(covariates)),
      treatment_(std::move(treatment)),
      outcome_(std::move(outcome)),
      names_(std::move(covariate_names)),
      ids_(std::move(ids)) {
    const Index n = covariates_.rows();
    if (n < 2) throw DataError("dataset needs at least 2 rows, got " + std::to_string(n));
    if (covariates_.cols() < 1) throw DataError("dataset needs at least 1 covariate");
    if (treatment_.size() != n || outcome_.size() != n)
        throw DataError("covariates, treatment and outcome must share length n=" + std::to_string(n));
    if (!ids_.empty() && static_cast<Index>(ids_.size()) != n)
        throw DataError("ids must have length n");
    for (Index i = 0; i < n; ++i) {
        if (treatment_[i] != 0.0 && treatment_[i] != 1.0)
            throw DataError("treatment must be 0 or 1 (row " + std::to_string(i) + ")");
    }
    if (names_.empty()) {
        for (Index j = 0; j < covariates_.cols(); ++j) names_.push_back("X" + std::to_string(j + 1));
    } else if (static_cast<Index>(names_.size()) != covariates_.cols()) {
        throw DataError("covariate_names must have length p");
    }
}

Index Dataset::treated_count() const {
    return static_cast<Index>(treatment_.sum());
}

RowSet Dataset::all_rows() const {
    RowSet rows(static_cast<std::size_t>(n()));
    for (Index i = 0; i < n(); ++i) rows[static_cast<std::size_t>(i)] = i;
    return rows;
}

RowSet Dataset::arm_rows(const RowSet& rows, int a) const {
    RowSet out;
    for (Index r : rows)
        if (arm(r) == a) out.push_back(r);
    return out;
}

bool ValidationReport::has(IssueKind kind) const {
    for (const auto& i : issues)
        if (i.kind == kind) return true;
    return false;
}

std::string ValidationReport::summary() const {
    std::string out;
    for (const auto& i : issues) {
        if (!out.empty()) out += "; ";
        out += i.message;
    }
    return out;
}

ValidationReport validate_dataset(const Dataset& d) {
    ValidationReport report;
    const auto& X = d.covariates();
    for (Index i = 0; i < d.n(); ++i) {
        for (Index j = 0; j < d.p(); ++j) {
            if (!std::isfinite(X(i, j))) {
                report.issues.push_back({IssueKind::NonFiniteCovariate, i, j,
                                         "non-finite covariate '" + d.covariate_names()[static_cast<std::size_t>(j)] +
                                             "' at row " + std::to_string(i)});
            }
        }
    }
    bool outcome_finite = true;
    for (Index i = 0; i < d.n(); ++i) {
        if (!std::isfinite(d.outcome()[i])) {
            outcome_finite = false;
            report.issues.push_back(
                {IssueKind::NonFiniteOutcome, i, std::nullopt, "non-finite outcome at row " + std::to_string(i)});
        }
    }
    const Index treated = d.treated_count();
    if (treated == 0) report.issues.push_back({IssueKind::TreatedArmEmpty, {}, {}, "treated arm empty"});
    if (treated == d.n()) report.issues.push_back({IssueKind::ControlArmEmpty, {}, {}, "control arm empty"});
    if (outcome_finite && (d.outcome().array() == d.outcome()[0]).all())
        report.issues.push_back({IssueKind::ConstantOutcome, {}, {}, "constant outcome"});
    return report;
}

void require_estimable(const Dataset& d, bool needs_outcome) {
    auto report = validate_dataset(d);
    if (!needs_outcome) {
        std::erase_if(report.issues, [](const ValidationIssue& i) {
            return i.kind == IssueKind::NonFiniteOutcome || i.kind == IssueKind::ConstantOutcome;
        });
    }
    if (!report.ok()) throw DataError(report.summary());
}

namespace {

std::vector<std::string> split_line(const std::string& line, char delim) {
    std::vector<std::string> out;
    std::string cell;
    bool quoted = false;
    for (char c : line) {
        if (c == '"') {
            quoted = !quoted;
        } else if (c == delim && !quoted) {
            out.push_back(cell);
            cell.clear();
        } else if (c != '\r') {
            cell.push_back(c);
        }
    }
    out.push_back(cell);
    for (auto& s : out) {
        const auto b = s.find_first_not_of(" \t");
        const auto e = s.find_last_not_of(" \t");
        s = b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    }
    return out;
}

bool is_missing(const std::string& s) {
    return s.empty() || s == "NA" || s == "NaN" || s == "nan" || s == "." ;
}

std::optional<double> parse_number(const std::string& s) {
    if (is_missing(s)) return std::numeric_limits<double>::quiet_NaN();
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size()) return std::nullopt;
    return v;
}

}  // namespace

LoadedData parse_csv(const std::string& text, const CsvOptions& opts) {
    std::istringstream in(text);
    std::string line;
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        header = split_line(line, opts.delimiter);
        break;
    }
    if (header.empty()) throw DataError("CSV is empty: a header row is required");

    auto find_col = [&](const std::string& name) -> std::optional<std::size_t> {
        for (std::size_t j = 0; j < header.size(); ++j)
            if (header[j] == name) return j;
        return std::nullopt;
    };
    const auto treat_idx = find_col(opts.treatment_col);
    if (!treat_idx) throw DataError("treatment column '" + opts.treatment_col + "' not found in header");
    std::optional<std::size_t> outcome_idx;
    if (!opts.outcome_col.empty()) {
        outcome_idx = find_col(opts.outcome_col);
        if (!outcome_idx) throw DataError("outcome column '" + opts.outcome_col + "' not found in header");
    }
    std::optional<std::size_t> id_idx;
    if (!opts.id_col.empty()) {
        id_idx = find_col(opts.id_col);
        if (!id_idx) throw DataError("id column '" + opts.id_col + "' not found in header");
    }
    std::vector<std::size_t> reserved_idx;
    for (const auto& name : opts.reserved_cols) {
        const auto j = find_col(name);
        if (!j) throw DataError("column '" + name + "' not found in header");
        reserved_idx.push_back(*j);
    }
    std::vector<std::size_t> cov_idx;
    for (std::size_t j = 0; j < header.size(); ++j) {
        if (j == *treat_idx || (outcome_idx && j == *outcome_idx) || (id_idx && j == *id_idx)) continue;
        if (std::find(reserved_idx.begin(), reserved_idx.end(), j) != reserved_idx.end()) continue;
        cov_idx.push_back(j);
    }

    std::vector<std::vector<std::string>> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        auto cells = split_line(line, opts.delimiter);
        if (cells.size() != header.size())
            throw DataError("line " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                            " fields, got " + std::to_string(cells.size()));
        rows.push_back(std::move(cells));
    }
    const auto n = static_cast<Index>(rows.size());
    Eigen::MatrixXd X(n, static_cast<Index>(cov_idx.size()));
    Eigen::VectorXd A(n), Y = Eigen::VectorXd::Zero(n);
    std::vector<std::string> ids;
    std::map<std::string, Eigen::VectorXd> reserved;
    for (std::size_t r = 0; r < reserved_idx.size(); ++r) reserved[opts.reserved_cols[r]] = Eigen::VectorXd(n);

    for (Index i = 0; i < n; ++i) {
        const auto& cells = rows[static_cast<std::size_t>(i)];
        for (std::size_t c = 0; c < cov_idx.size(); ++c) {
            const auto v = parse_number(cells[cov_idx[c]]);
            if (!v)
                throw DataError("covariate column '" + header[cov_idx[c]] + "' is not numeric (row " +
                                std::to_string(i) + ": '" + cells[cov_idx[c]] + "')");
            X(i, static_cast<Index>(c)) = *v;
        }
        const auto a = parse_number(cells[*treat_idx]);
        if (!a || (*a != 0.0 && *a != 1.0))
            throw DataError("treatment column '" + opts.treatment_col + "' must be 0 or 1 (row " + std::to_string(i) +
                            ": '" + cells[*treat_idx] + "')");
        A[i] = *a;
        if (outcome_idx) {
            const auto y = parse_number(cells[*outcome_idx]);
            if (!y)
                throw DataError("outcome column '" + opts.outcome_col + "' is not numeric (row " + std::to_string(i) +
                                ": '" + cells[*outcome_idx] + "')");
            Y[i] = *y;
        }
        for (std::size_t r = 0; r < reserved_idx.size(); ++r) {
            const auto v = parse_number(cells[reserved_idx[r]]);
            if (!v) throw DataError("column '" + header[reserved_idx[r]] + "' is not numeric (row " + std::to_string(i) + ")");
            reserved[opts.reserved_cols[r]][i] = *v;
        }
        if (id_idx) ids.push_back(cells[*id_idx]);
    }
    std::vector<std::string> names;
    for (auto j : cov_idx) names.push_back(header[j]);
    return LoadedData{Dataset(std::move(X), std::move(A), std::move(Y), std::move(names), std::move(ids)),
                      std::move(reserved)};
}

LoadedData read_csv(const std::string& path, const CsvOptions& opts) {
    std::ifstream f(path);
    if (!f) throw DataError("cannot open data file '" + path + "'");
    std::stringstream buf;
    buf << f.rdbuf();
    return parse_csv(buf.str(), opts);
}

}  // namespace wate
