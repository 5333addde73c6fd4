#include <benchmark/benchmark.h>

#include <map>
#include <random>
#include <vector>

#include "driftguard/covariance.hpp"
#include "driftguard/isolation_forest.hpp"
#include "driftguard/pipeline.hpp"
#include "driftguard/rng.hpp"
#include "driftguard/simulator.hpp"

namespace {

using namespace driftguard;

const std::vector<StateVector>& baseline_cache(int dimension, int n) {
    static std::map<std::pair<int, int>, std::vector<StateVector>> cache;
    auto& entry = cache[{dimension, n}];
    if (entry.empty()) entry = generate_baseline(dimension, n, 1, 7, 10.0, dimension / 8);
    return entry;
}

ModelBundle make_bundle(int dimension, int baseline_n) {
    ModelBundle models;
    const auto& baseline = baseline_cache(dimension, baseline_n);
    models.forest =
        IsolationForest::fit(baseline, {.n_trees = 100, .subsample_size = 256, .seed = 7});
    models.manifold = fit_mixture(baseline, {.components = 1, .seed = 7});
    models.hmm = make_hmm_params(BeliefConfig{}, 8.0, 1.0, 0.5);
    CoxModel cox;
    cox.beta = CovariateVector(1.0, 0.5, 0.8, 0.0);
    cox.baseline_steps = {{1, 1e-3}};
    models.cox = cox;
    return models;
}

void BM_ForestScore(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    const auto& baseline = baseline_cache(64, n);
    const auto forest =
        IsolationForest::fit(baseline, {.n_trees = 100, .subsample_size = 256, .seed = 3});
    Rng rng = make_rng(11);
    std::normal_distribution<double> gauss;
    Eigen::VectorXd v(64);
    for (int j = 0; j < 64; ++j) v[j] = gauss(rng);
    for (auto _ : state) {
        benchmark::DoNotOptimize(forest.score(v));
    }
}
BENCHMARK(BM_ForestScore)->Arg(1000)->Arg(10000)->Arg(100000);

void BM_Mahalanobis(benchmark::State& state) {
    const int d = static_cast<int>(state.range(0));
    const auto& baseline = baseline_cache(d, 2048);
    const auto model = fit_mixture(baseline, {.components = 1, .seed = 5});
    const Eigen::VectorXd v = Eigen::VectorXd::Constant(d, 0.5);
    for (auto _ : state) {
        benchmark::DoNotOptimize(model.mahalanobis(v));
    }
}
BENCHMARK(BM_Mahalanobis)->Arg(64)->Arg(256)->Arg(512);

void BM_AssessTurn(benchmark::State& state) {
    const int d = 256;
    const auto models = make_bundle(d, 2048);
    PipelineConfig config;
    config.trigger_threshold = 0.99;  // exercise the skip branch
    config.hazard_threshold = 1e9;
    config.audit_probability = 0.5;  // half the turns run full tier 2
    Rng rng = make_rng(13);
    std::normal_distribution<double> gauss;
    SessionMonitor monitor("bench", models, config);
    int turn = 0;
    Eigen::VectorXd v(d);
    for (auto _ : state) {
        for (int j = 0; j < d; ++j) v[j] = gauss(rng);
        ++turn;
        benchmark::DoNotOptimize(
            monitor.assess_turn(StateVector(v, d - d / 8, turn, turn)));
    }
}
BENCHMARK(BM_AssessTurn);

void BM_CovarianceFit(benchmark::State& state) {
    const int d = static_cast<int>(state.range(0));
    const auto& baseline = baseline_cache(d, 512);
    for (auto _ : state) {
        benchmark::DoNotOptimize(fit_shrunk_gaussian(baseline));
    }
}
BENCHMARK(BM_CovarianceFit)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
