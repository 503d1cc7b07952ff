#include <benchmark/benchmark.h>

#include "amlab/defense.hpp"
#include "amlab/metrics.hpp"
#include "amlab/sweep.hpp"
#include "amlab/train.hpp"

namespace {

amlab::TaskBundle& task() {
    static amlab::TaskBundle t = amlab::make_separable_task(1);
    return t;
}

void BM_Forward(benchmark::State& state) {
    amlab::Classifier model(task().arch, task().num_classes, 1);
    const amlab::Tensor& x = task().test.input(0);
    for (auto _ : state) benchmark::DoNotOptimize(model.forward(x));
}
BENCHMARK(BM_Forward);

void BM_TrainEpoch(benchmark::State& state) {
    for (auto _ : state) {
        amlab::Classifier model(task().arch, task().num_classes, 1);
        amlab::TrainConfig cfg{0.1, 1, 16, 0.0, 1};
        amlab::train(model, task().train, nullptr, cfg, amlab::LossKind::standard);
    }
}
BENCHMARK(BM_TrainEpoch);

void BM_DefendedQuery(benchmark::State& state) {
    auto defender = amlab::train_defender_on(task(), amlab::default_defender_train(1));
    auto mis = amlab::train_misinformer(task().train, task().arch,
                                        amlab::default_misinformer_train(1));
    amlab::DefenseConfig cfg;
    cfg.kind = amlab::DefenseKind::am;
    cfg.tau = 0.9;
    amlab::DefendedModel victim(defender, mis, cfg);
    const amlab::Tensor& x = task().test.input(0);
    for (auto _ : state) benchmark::DoNotOptimize(victim.query(x));
}
BENCHMARK(BM_DefendedQuery);

}  // namespace

BENCHMARK_MAIN();
