// Serial reference kernels against their OpenMP counterparts.

#include "crfmm/protocol.hpp"

#include <benchmark/benchmark.h>

using namespace crfmm;

namespace {

struct Fixture {
    ProtocolConfig cfg;
    Dataset data;
    CrfModel model;
    std::vector<TrainingInstance> instances;

    Fixture() {
        cfg.interval_s = 30.0;
        data = make_dataset(cfg);
        MethodOutcome m = run_method(data, method_by_name("CRFs_L2", cfg.filter), cfg);
        model = m.model;
        for (std::size_t i = 0; i < data.trajectories.size(); ++i)
            for (std::size_t k = 0; k < m.prepared[i].features.size(); ++k) {
                const auto labels = label_lattice(m.prepared[i].build.pieces[k], data.truths[i]);
                if (labels.complete()) instances.push_back({m.prepared[i].features[k], truth_assignment(labels), i});
            }
    }
};

const Fixture& fixture() {
    static const Fixture f;
    return f;
}

void BM_ObjectiveSerial(benchmark::State& state) {
    const auto& f = fixture();
    const auto w = f.model.weights();
    std::vector<double> grad(w.size());
    for (auto _ : state) benchmark::DoNotOptimize(objective_serial(f.instances, w, 0.1, grad));
}

void BM_ObjectiveParallel(benchmark::State& state) {
    const auto& f = fixture();
    const auto w = f.model.weights();
    std::vector<double> grad(w.size());
    for (auto _ : state) benchmark::DoNotOptimize(objective_parallel(f.instances, w, 0.1, grad));
}

void BM_PrepareSerial(benchmark::State& state) {
    const auto& f = fixture();
    for (auto _ : state)
        benchmark::DoNotOptimize(prepare_all_serial(f.data.trajectories, f.data.net, f.model.catalog, f.cfg.lattice));
}

void BM_PrepareParallel(benchmark::State& state) {
    const auto& f = fixture();
    for (auto _ : state)
        benchmark::DoNotOptimize(prepare_all_parallel(f.data.trajectories, f.data.net, f.model.catalog, f.cfg.lattice));
}

void BM_MatchSerial(benchmark::State& state) {
    const auto& f = fixture();
    for (auto _ : state) benchmark::DoNotOptimize(match_all_serial(f.data.trajectories, f.data.net, f.model));
}

void BM_MatchParallel(benchmark::State& state) {
    const auto& f = fixture();
    for (auto _ : state) benchmark::DoNotOptimize(match_all_parallel(f.data.trajectories, f.data.net, f.model));
}

} // namespace

BENCHMARK(BM_ObjectiveSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ObjectiveParallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PrepareSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PrepareParallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MatchSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MatchParallel)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
