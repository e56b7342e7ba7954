#include <vector>

#include <benchmark/benchmark.h>

#include "scout/logdet.hpp"
#include "scout/model.hpp"
#include "scout/sem.hpp"

using namespace scout;

namespace {

struct Fixture {
  ModelConfig cfg;
  ModelState state;
  MaskSample masks;
  Eigen::MatrixXd x;
  std::vector<int> experiment;
  BatchSeriesDraw series;

  Fixture(int d, int batch) {
    Rng rng(1);
    state = ModelState::init(d, d, cfg, rng);
    masks = sample_masks(state.phi, state.psi, cfg.tau_graph, cfg.tau_target, rng);
    x = Eigen::MatrixXd::Random(batch, d);
    experiment.resize(static_cast<std::size_t>(batch));
    for (int b = 0; b < batch; ++b) experiment[static_cast<std::size_t>(b)] = b % d;
    series = draw_batch_series(batch, d, cfg.poisson_mean, rng);
  }
};

void BM_BatchLoss(benchmark::State& st) {
  const Fixture f(static_cast<int>(st.range(0)), 512);
  const bool backward = st.range(1) != 0;
  for (auto _ : st) {
    ad::Tape tape;
    const ModelVars vars = record_parameters(tape, f.state, f.cfg);
    const BatchLoss loss = batch_loss(tape, vars, f.state, f.x, f.experiment, f.masks, f.cfg, LossWeights{},
                                      LogdetMode::Series, &f.series);
    if (backward) tape.backward(loss.loss);
    benchmark::DoNotOptimize(loss.loss.scalar());
  }
}
BENCHMARK(BM_BatchLoss)->ArgsProduct({{10, 30}, {0, 1}})->Unit(benchmark::kMillisecond);

void BM_SeriesEstimate(benchmark::State& st) {
  const int d = static_cast<int>(st.range(0));
  Rng rng(2);
  const GroundTruthSem sem =
      make_sem(er_sample(d, 2.0, rng), MechanismKind::Linear, NoiseFamily{}, 0.9, rng);
  const Eigen::MatrixXd j = sem.weights.transpose();
  const JvpOracle jvp = [&j](const Eigen::VectorXd& v) -> Eigen::VectorXd { return j * v; };
  for (auto _ : st) benchmark::DoNotOptimize(logdet_series_estimate(jvp, d, 4.0, rng));
}
BENCHMARK(BM_SeriesEstimate)->Arg(10)->Arg(30)->Arg(100);

void BM_FixedPoint(benchmark::State& st) {
  const int d = static_cast<int>(st.range(0));
  Rng rng(3);
  const GroundTruthSem sem =
      make_sem(er_sample(d, 2.0, rng), MechanismKind::TanhMlp, NoiseFamily{}, 0.9, rng);
  const Mechanism f = [&sem](const Eigen::VectorXd& v) { return mechanism_eval(sem, v); };
  const Eigen::VectorXd eta = Eigen::VectorXd::Random(d);
  for (auto _ : st) benchmark::DoNotOptimize(solve_fixed_point(f, eta).x);
}
BENCHMARK(BM_FixedPoint)->Arg(10)->Arg(30)->Arg(100);

}  // namespace
BENCHMARK_MAIN();
