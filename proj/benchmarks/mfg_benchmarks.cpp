#include <benchmark/benchmark.h>

#include "mfg/lq_benchmark.hpp"
#include "mfg/particle_system.hpp"
#include "mfg/posterior.hpp"
#include "mfg/trainer.hpp"

namespace {

using namespace mfg;

struct Problem {
  MarketModel model = lq_model(LqWeights{});
  InitialParams init = initial_params(0);
  std::vector<double> x0;
  SupplyPath supply;

  Problem(std::size_t agents, std::size_t steps) {
    Rng pop(1), sup(2);
    x0 = sample_initial(model, agents, pop);
    supply = simulate_supply(model, steps, sup);
  }
};

void BM_LossForward(benchmark::State& state) {
  const Problem p(static_cast<std::size_t>(state.range(0)), 40);
  for (auto _ : state) {
    ad::Tape tape;
    LossGraph g = build_loss(tape, p.model, p.init.control, true, p.init.price, false, p.x0, p.supply);
    benchmark::DoNotOptimize(g.loss.scalar());
  }
}
BENCHMARK(BM_LossForward)->Arg(30)->Arg(120)->Unit(benchmark::kMillisecond);

void BM_LossForwardBackward(benchmark::State& state) {
  const Problem p(static_cast<std::size_t>(state.range(0)), 40);
  for (auto _ : state) {
    ad::Tape tape;
    LossGraph g = build_loss(tape, p.model, p.init.control, true, p.init.price, true, p.x0, p.supply);
    benchmark::DoNotOptimize(tape.backward(g.loss));
  }
}
BENCHMARK(BM_LossForwardBackward)->Arg(30)->Arg(120)->Unit(benchmark::kMillisecond);

void BM_TrainingEpoch(benchmark::State& state) {
  const MarketModel model = lq_model(LqWeights{});
  TrainConfig config;
  config.iterations = 50;
  config.epoch_size = 50;
  for (auto _ : state) benchmark::DoNotOptimize(train(model, config).log.steps.back().loss);
  state.SetItemsProcessed(state.iterations() * 50);
}
BENCHMARK(BM_TrainingEpoch)->Unit(benchmark::kMillisecond);

void BM_EvaluationBatch(benchmark::State& state) {
  const Problem p(30, 40);
  for (auto _ : state) {
    const ParticleBatch batch = evaluation_batch(p.model, p.init.control, p.init.price, 40, 30, 60, 0, 1);
    benchmark::DoNotOptimize(evaluate_posterior(p.model, batch).mse_eb);
  }
}
BENCHMARK(BM_EvaluationBatch)->Unit(benchmark::kMillisecond);

void BM_AffineCoefficients(benchmark::State& state) {
  const MarketModel model = lq_model(LqWeights{});
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve_affine_coefficients(model, static_cast<std::size_t>(state.range(0))).w0);
  }
}
BENCHMARK(BM_AffineCoefficients)->Arg(400)->Arg(4000);

}  // namespace

BENCHMARK_MAIN();
