#include "wate/estimators.hpp"
#include "wate/glm.hpp"
#include "wate/inference.hpp"
#include "wate/learners.hpp"
#include "wate/pipeline.hpp"
#include "wate/simulation.hpp"
#include "wate/stumps.hpp"

#include <benchmark/benchmark.h>

#include <map>

using namespace wate;

namespace {

const SimulatedData& sample(Index n) {
    static std::map<Index, SimulatedData> cache;
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, generate(DgpSpec::named(1), n, RngContract(42))).first;
    return it->second;
}

void BM_ScoreAndVariance(benchmark::State& state) {
    const auto& sim = sample(state.range(0));
    NuisanceFit fit;
    fit.rows = sim.data.all_rows();
    fit.e_hat = fit.e_raw = sim.e.cwiseMax(0.01).cwiseMin(0.99);
    fit.mu0_hat = sim.mu0;
    fit.mu1_hat = sim.mu1;
    const WeightFamily w(EstimandSpec::of(Family::ATEN));
    for (auto _ : state) {
        const double g = estimate_eif(sim.data, fit, w);
        benchmark::DoNotOptimize(variance_eif(sim.data, fit, w, g));
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ScoreAndVariance)->Arg(1000)->Arg(100000);

void BM_LogisticIrls(benchmark::State& state) {
    const auto& sim = sample(state.range(0));
    const glm::FeatureMap map(sim.data.covariates(), false);
    const Eigen::MatrixXd z = map.design(sim.data.covariates());
    for (auto _ : state) benchmark::DoNotOptimize(glm::logistic(z, sim.data.treatment()));
}
BENCHMARK(BM_LogisticIrls)->Arg(1000)->Arg(10000);

void BM_StumpBooster(benchmark::State& state) {
    const auto& sim = sample(state.range(0));
    for (auto _ : state)
        benchmark::DoNotOptimize(StumpBooster::fit(sim.data.covariates(), sim.data.outcome(), {200, 0.1, false}));
}
BENCHMARK(BM_StumpBooster)->Arg(1000);

void BM_CrossFitGlm(benchmark::State& state) {
    const auto& sim = sample(1000);
    const auto plan = SplitPlan::make(1000, 5, 1, 7);
    for (auto _ : state)
        benchmark::DoNotOptimize(
            cross_fit_nuisances(sim.data, plan, 0, NuisanceSpecs::simple_glm(), {}, RngContract(1)));
}
BENCHMARK(BM_CrossFitGlm);

void BM_FullEstimation(benchmark::State& state) {
    const auto& sim = sample(1000);
    EstimationOptions opts;
    opts.n_splits = static_cast<int>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(run_estimation(sim.data, opts));
}
BENCHMARK(BM_FullEstimation)->Arg(1)->Arg(10)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
