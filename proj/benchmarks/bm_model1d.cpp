#include <benchmark/benchmark.h>

#include "robinspec/model1d.hpp"

using namespace robinspec;

namespace {

IntervalOperator robin_neumann(double length, double beta) {
  IntervalOperator op;
  op.length = length;
  op.left = EndCondition::robin(beta);
  op.right = EndCondition::neumann();
  return op;
}

void BM_transcendental_eigs(benchmark::State& state) {
  const auto op = robin_neumann(static_cast<double>(state.range(0)), 1.0);
  const int n = static_cast<int>(state.range(1));
  for (auto _ : state) {
    auto eigs = interval_eigs(op, n, Method1D::Transcendental);
    benchmark::DoNotOptimize(eigs);
  }
}
BENCHMARK(BM_transcendental_eigs)->Args({10, 4})->Args({30, 4})->Args({30, 16});

void BM_finite_difference_eigs(benchmark::State& state) {
  const auto op = robin_neumann(10.0, 1.0);
  const int pts = static_cast<int>(state.range(0));
  for (auto _ : state) {
    auto eigs = interval_eigs(op, 4, Method1D::FiniteDifference, pts);
    benchmark::DoNotOptimize(eigs);
  }
}
BENCHMARK(BM_finite_difference_eigs)->Arg(512)->Arg(2048);

}  // namespace

BENCHMARK_MAIN();
