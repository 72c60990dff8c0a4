#include <benchmark/benchmark.h>

#include <Eigen/Dense>

#include "quarks/als.hpp"
#include "quarks/baselines.hpp"
#include "quarks/datagen.hpp"

namespace {

quarks::SensorBatch bench_data(int n, int p, int r, Eigen::Index samples) {
  quarks::QuarksModel truth = quarks::random_quarks_model(n, p, r, 42 + n);
  std::vector<Eigen::MatrixXd> init(p, Eigen::MatrixXd::Zero(n, n));
  auto sim = quarks::simulate(truth, init, samples + 200, 1.0, 7 + n);
  return sim.batch.slice(200, samples);
}

}  // namespace

static void BM_AlsIteration(benchmark::State& state) {
  const int n = int(state.range(0));
  const int p = 4, r = 2;
  quarks::SensorBatch data = bench_data(n, p, r, Eigen::Index(10) * p * r * n);
  quarks::AlsOptions opt;
  opt.max_iterations = 1;
  opt.patience = 1;
  opt.tolerance = 1e-300;
  for (auto _ : state) {
    quarks::AlsFit fit = quarks::als_fit(data, p, r, opt);
    benchmark::DoNotOptimize(&fit);
  }
  state.SetComplexityN(n);
}
BENCHMARK(BM_AlsIteration)->DenseRange(6, 18, 4)->Complexity();

static void BM_DenseVarFit(benchmark::State& state) {
  const int n = int(state.range(0));
  const int p = 4;
  quarks::SensorBatch data = bench_data(n, p, 2, Eigen::Index(50) * n * n);
  for (auto _ : state) {
    quarks::DenseVarModel m = quarks::fit_dense_var(data, p);
    benchmark::DoNotOptimize(&m);
  }
  state.SetComplexityN(n);
}
BENCHMARK(BM_DenseVarFit)->DenseRange(6, 14, 4)->Complexity();

int main(int argc, char** argv) {
  ::benchmark::Initialize(&argc, argv);
  if (::benchmark::ReportUnrecognizedArguments(argc, argv)) return 1;
  ::benchmark::RunSpecifiedBenchmarks();
  ::benchmark::Shutdown();
  return 0;
}
