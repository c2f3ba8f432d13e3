#include "wate/split_plan.hpp"

#include "wate/errors.hpp"
#include "wate/rng.hpp"

#include <numeric>

namespace wate {

SplitPlan SplitPlan::make(Index n, int k_folds, int n_splits, std::uint64_t seed) {
    if (k_folds < 2) throw ConfigError("k_folds must be >= 2, got " + std::to_string(k_folds));
    if (n_splits < 1) throw ConfigError("n_splits must be >= 1, got " + std::to_string(n_splits));
    if (n < 2 * static_cast<Index>(k_folds))
        throw DataError("fold underfill: " + std::to_string(k_folds) + " folds need n >= " +
                        std::to_string(2 * k_folds) + ", got n=" + std::to_string(n));

    SplitPlan plan;
    plan.n_ = n;
    plan.k_ = k_folds;
    plan.s_ = n_splits;
    plan.seed_ = seed;
    const RngContract root(seed);
    std::vector<Index> perm(static_cast<std::size_t>(n));
    for (int s = 0; s < n_splits; ++s) {
        std::iota(perm.begin(), perm.end(), Index{0});
        auto stream = root.child("folds", static_cast<std::uint64_t>(s)).stream();
        for (std::size_t i = perm.size() - 1; i > 0; --i) {
            const auto j = static_cast<std::size_t>(stream.below(i + 1));
            std::swap(perm[i], perm[j]);
        }
        std::vector<int> assign(static_cast<std::size_t>(n));
        for (std::size_t pos = 0; pos < perm.size(); ++pos)
            assign[static_cast<std::size_t>(perm[pos])] = static_cast<int>(pos % static_cast<std::size_t>(k_folds));
        plan.folds_.push_back(std::move(assign));
    }
    return plan;
}

RowSet SplitPlan::fold_rows(int split, int fold) const {
    const auto& a = fold_assignment(split);
    RowSet rows;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i] == fold) rows.push_back(static_cast<Index>(i));
    return rows;
}

RowSet SplitPlan::training_rows(int split, int fold) const {
    const auto& a = fold_assignment(split);
    RowSet rows;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i] != fold) rows.push_back(static_cast<Index>(i));
    return rows;
}

std::vector<Index> SplitPlan::fold_sizes(int split) const {
    std::vector<Index> sizes(static_cast<std::size_t>(k_), 0);
    for (int f : fold_assignment(split)) ++sizes[static_cast<std::size_t>(f)];
    return sizes;
}

nlohmann::json SplitPlan::to_json() const {
    return {{"n", n_}, {"k_folds", k_}, {"n_splits", s_}, {"seed", seed_}};
}

SplitPlan SplitPlan::from_json(const nlohmann::json& j) {
    return make(j.at("n").get<Index>(), j.at("k_folds").get<int>(), j.at("n_splits").get<int>(),
                j.at("seed").get<std::uint64_t>());
}

}  // namespace wate
