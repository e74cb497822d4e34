// Serial reference vs OpenMP kernels on seed-model data. Run with
//   ./actseq_bench [--benchmark_filter=...]
// Thread counts are the benchmark argument.

#include <benchmark/benchmark.h>

#include "actseq/counts.hpp"
#include "actseq/evaluation.hpp"
#include "actseq/fixture.hpp"
#include "actseq/generator.hpp"

using namespace actseq;

namespace {

ModelParams bench_model() {
    ModelParams seed = seed_model();
    ModelParams s0 = seed;
    s0.groups = {"ALL"};
    s0.spec_id = "S0";
    s0.covariate = "none";
    s0.pi.assign(seed.pi.begin(), seed.pi.begin() + seed.K);
    s0.theta.assign(seed.theta.begin(),
                    seed.theta.begin() +
                        static_cast<std::ptrdiff_t>(seed.T - 1) * seed.K * seed.K);
    s0.hazard.assign(seed.hazard.begin(),
                     seed.hazard.begin() +
                         static_cast<std::ptrdiff_t>(seed.T - 1) * seed.K * seed.M);
    return s0;
}

const ModelParams& model() {
    static const ModelParams m = bench_model();
    return m;
}

const DiaryGrid& grid() {
    static const DiaryGrid g = [] {
        const auto days = generate_batch(model(), 0, 20000, 1);
        DiaryGrid grid = grid_from_sequences(days, model().T,
                                             {"Male", "South", "Employed", "Weekday", 2,
                                              "2023-03-15"},
                                             "B");
        grid.group_labels = {"ALL"};
        for (int& group : grid.group) group = 0;
        return grid;
    }();
    return g;
}

}  // namespace

static void BM_accumulate_serial(benchmark::State& state) {
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            serial_ref::accumulate(grid(), RunLengthBins::defaults(), BlockMap::dayparts()));
    }
}
BENCHMARK(BM_accumulate_serial);

static void BM_accumulate_omp(benchmark::State& state) {
    const int workers = static_cast<int>(state.range(0));
    for (auto _ : state) {
        benchmark::DoNotOptimize(accumulate(grid(), RunLengthBins::defaults(),
                                            BlockMap::dayparts(), kNumStates, workers));
    }
}
BENCHMARK(BM_accumulate_omp)->Arg(1)->Arg(2)->Arg(4)->Arg(8);

static void BM_evaluate_serial(benchmark::State& state) {
    for (auto _ : state) {
        benchmark::DoNotOptimize(serial_ref::evaluate(model(), grid(), "bench"));
    }
}
BENCHMARK(BM_evaluate_serial);

static void BM_evaluate_omp(benchmark::State& state) {
    const int workers = static_cast<int>(state.range(0));
    for (auto _ : state) {
        benchmark::DoNotOptimize(evaluate(model(), grid(), "bench", workers));
    }
}
BENCHMARK(BM_evaluate_omp)->Arg(1)->Arg(2)->Arg(4)->Arg(8);

static void BM_generate_serial(benchmark::State& state) {
    for (auto _ : state) {
        benchmark::DoNotOptimize(serial_ref::generate_batch(model(), 0, 5000, 7));
    }
}
BENCHMARK(BM_generate_serial);

static void BM_generate_omp(benchmark::State& state) {
    const int workers = static_cast<int>(state.range(0));
    for (auto _ : state) {
        benchmark::DoNotOptimize(generate_batch(model(), 0, 5000, 7, workers));
    }
}
BENCHMARK(BM_generate_omp)->Arg(1)->Arg(2)->Arg(4)->Arg(8);

BENCHMARK_MAIN();
