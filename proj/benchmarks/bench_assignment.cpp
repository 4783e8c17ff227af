#include <benchmark/benchmark.h>

#include "nightwatch/assignment.hpp"
#include "nightwatch/rng.hpp"

using namespace nightwatch;

static CostMatrix random_matrix(int n, int m, uint64_t seed) {
  Rng rng(seed);
  CostMatrix costs(n, m);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < m; ++c)
      if (rng.next_double() >= 0.2) costs.set(r, c, rng.uniform(0.0, 1e5));
  return costs;
}

static void BM_SolveLap(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const CostMatrix costs = random_matrix(n, n, 42);
  for (auto _ : state) {
    const Assignment a = solve_lap(costs);
    benchmark::DoNotOptimize(a.total_cost);
  }
  state.SetComplexityN(n);
}
BENCHMARK(BM_SolveLap)->Arg(16)->Arg(64)->Arg(256)->Complexity();
