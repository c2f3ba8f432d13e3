#pragma once

#include "wate/dataset.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <vector>

namespace wate {

/// K-fold partitions for S independent sample splits.
///
/// Fold labels are 0-based. Within a split, indices are shuffled with the
/// split's own stream and dealt round-robin, so fold sizes differ by at most
/// one. The assignment is a pure function of (seed, n, K, S).
class SplitPlan {
public:
    /// Throws DataError when n < 2k (every fold needs two observations).
    static SplitPlan make(Index n, int k_folds, int n_splits, std::uint64_t seed);

    Index n() const noexcept { return n_; }
    int k_folds() const noexcept { return k_; }
    int n_splits() const noexcept { return s_; }
    std::uint64_t seed() const noexcept { return seed_; }

    /// Fold label of every observation in split s.
    const std::vector<int>& fold_assignment(int split) const { return folds_.at(static_cast<std::size_t>(split)); }

    RowSet fold_rows(int split, int fold) const;
    RowSet training_rows(int split, int fold) const;
    std::vector<Index> fold_sizes(int split) const;

    /// Only the generating tuple is stored; from_json regenerates the folds.
    nlohmann::json to_json() const;
    static SplitPlan from_json(const nlohmann::json& j);

    bool operator==(const SplitPlan&) const = default;

private:
    SplitPlan() = default;

    Index n_ = 0;
    int k_ = 0;
    int s_ = 0;
    std::uint64_t seed_ = 0;
    std::vector<std::vector<int>> folds_;
};

}  // namespace wate
