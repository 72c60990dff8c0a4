#include <benchmark/benchmark.h>

#include <Eigen/Dense>
#include <random>

#include "quarks/kron.hpp"

namespace {

Eigen::MatrixXd randm(Eigen::Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index c = 0; c < n; ++c)
    for (Eigen::Index r = 0; r < n; ++r) m(r, c) = gauss(rng);
  return m;
}

quarks::KronSum random_sum(Eigen::Index n, int terms, std::mt19937_64& rng) {
  std::vector<quarks::KronSum::Term> ts;
  for (int j = 0; j < terms; ++j) ts.push_back({randm(n, rng), randm(n, rng)});
  return quarks::KronSum(ts, quarks::BlockPartition(n, n, n, n));
}

}  // namespace

static void BM_Reshuffle(benchmark::State& state) {
  const Eigen::Index n = state.range(0);
  std::mt19937_64 rng(1);
  Eigen::MatrixXd x = randm(n * n, rng);
  quarks::BlockPartition part(n, n, n, n);
  for (auto _ : state) {
    Eigen::MatrixXd r = quarks::reshuffle(x, part);
    benchmark::DoNotOptimize(r.data());
  }
  state.SetComplexityN(n);
}
BENCHMARK(BM_Reshuffle)->RangeMultiplier(2)->Range(4, 32)->Complexity();

static void BM_StructuredMatvec(benchmark::State& state) {
  const Eigen::Index n = state.range(0);
  std::mt19937_64 rng(2);
  quarks::KronSum m = random_sum(n, 3, rng);
  Eigen::VectorXd x = Eigen::VectorXd::Random(n * n);
  for (auto _ : state) {
    Eigen::VectorXd y = quarks::kron_matvec(m, x);
    benchmark::DoNotOptimize(y.data());
  }
  state.SetComplexityN(n);
}
BENCHMARK(BM_StructuredMatvec)->RangeMultiplier(2)->Range(8, 64)->Complexity();

static void BM_DenseMatvec(benchmark::State& state) {
  const Eigen::Index n = state.range(0);
  std::mt19937_64 rng(2);
  Eigen::MatrixXd m = random_sum(n, 3, rng).dense();
  Eigen::VectorXd x = Eigen::VectorXd::Random(n * n);
  for (auto _ : state) {
    Eigen::VectorXd y = m * x;
    benchmark::DoNotOptimize(y.data());
  }
  state.SetComplexityN(n);
}
BENCHMARK(BM_DenseMatvec)->RangeMultiplier(2)->Range(8, 64)->Complexity();

static void BM_KronDecompose(benchmark::State& state) {
  const Eigen::Index n = state.range(0);
  std::mt19937_64 rng(3);
  Eigen::MatrixXd x = random_sum(n, 4, rng).dense();
  quarks::BlockPartition part(n, n, n, n);
  for (auto _ : state) {
    quarks::KronSum s = quarks::kron_decompose(x, part, 4);
    benchmark::DoNotOptimize(&s);
  }
  state.SetComplexityN(n);
}
BENCHMARK(BM_KronDecompose)->RangeMultiplier(2)->Range(4, 16)->Complexity();
