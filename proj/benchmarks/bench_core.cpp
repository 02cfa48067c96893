#include <benchmark/benchmark.h>

#include <vector>

#include "qdt/estimator.hpp"
#include "qdt/evalsim.hpp"
#include "qdt/model.hpp"
#include "qdt/trials.hpp"

namespace {

using namespace qdt;

SyntheticSubject bench_subject() {
    UtilityParams up;
    up.alpha = 0.9;
    up.delta = 1.1;
    up.gamma = 0.75;
    up.phi = 0.1;
    AttractionParams ap;
    ap.mask = ComponentMask::all();
    ap.c1 = 0.6;
    ap.c2 = 0.2;
    ap.c3 = 0.05;
    ap.c4 = 0.005;
    ap.a = 0.1;
    return generate_synthetic_subject(ExperimentDescriptor::dataset1(), up, ap, "bench", 1);
}

void BM_ProspectProbabilities(benchmark::State& state) {
    const auto trials = derive_features(bench_subject().trials);
    UtilityParams up;
    up.alpha = 0.88;
    up.delta = 1.0;
    up.gamma = 0.74;
    up.phi = 0.1;
    AttractionParams ap;
    ap.mask = ComponentMask::all();
    ap.c1 = 0.5;
    ap.c3 = 0.02;
    ap.c4 = 0.003;
    ap.a = 0.08;
    std::size_t i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(prospect_probabilities(trials[i], up, ap));
        i = (i + 1) % trials.size();
    }
}
BENCHMARK(BM_ProspectProbabilities);

void BM_RegularizedNll960(benchmark::State& state) {
    ObjectiveSpec spec;
    spec.trials = derive_features(bench_subject().trials);
    UtilityParams up;
    up.alpha = 0.88;
    up.delta = 1.0;
    up.gamma = 0.74;
    up.phi = 0.1;
    AttractionParams ap;
    ap.mask = ComponentMask::all();
    ap.c1 = 0.5;
    ap.a = 0.08;
    for (auto _ : state) benchmark::DoNotOptimize(regularized_nll(spec, up, ap));
}
BENCHMARK(BM_RegularizedNll960);

void BM_GridSearchInit(benchmark::State& state) {
    ObjectiveSpec spec;
    spec.trials = derive_features(bench_subject().trials);
    for (auto _ : state) benchmark::DoNotOptimize(grid_search_init(spec));
}
BENCHMARK(BM_GridSearchInit)->Unit(benchmark::kMillisecond);

void BM_NelderMeadRosenbrock(benchmark::State& state) {
    const auto rosenbrock = [](const std::vector<double>& x) {
        const double a = 1.0 - x[0];
        const double b = x[1] - x[0] * x[0];
        return a * a + 100.0 * b * b;
    };
    SimplexConfig config;
    config.tolerance = 1e-10;
    for (auto _ : state)
        benchmark::DoNotOptimize(nelder_mead_minimize(rosenbrock, {-1.2, 1.0}, config));
}
BENCHMARK(BM_NelderMeadRosenbrock)->Unit(benchmark::kMicrosecond);

void BM_FitFold(benchmark::State& state) {
    const auto trials = derive_features(bench_subject().trials);
    const FoldPlan plan = kfold_split(trials, 6, 42);
    FitOptions options;
    for (auto _ : state) {
        const auto fits = fit_subject(trials, ModelKind::Cpt, ComponentMask::none(), plan, options);
        benchmark::DoNotOptimize(fits);
    }
}
BENCHMARK(BM_FitFold)->Unit(benchmark::kMillisecond)->Iterations(3);

} // namespace

BENCHMARK_MAIN();
