// Serial against OpenMP timings for the two parallel kernels: scoring a DE
// population and running selection-test replicates.

#include <benchmark/benchmark.h>

#include <cmath>
#include <vector>

#include "selmeta/de.hpp"
#include "selmeta/fit.hpp"
#include "selmeta/inference.hpp"
#include "selmeta/likelihood.hpp"
#include "selmeta/model.hpp"
#include "selmeta/stats.hpp"

using namespace selmeta;

namespace {

MetaDataset synthetic(std::size_t n) {
  RngStream rng(11, n);
  std::vector<Study> studies;
  for (std::size_t i = 0; i < n; ++i) {
    const double u = rng.uniform(0.1, 0.5);
    studies.push_back({std::to_string(i), 0.2 + std::sqrt(u * u + 0.05) * rng.normal(), u});
  }
  return MetaDataset(std::move(studies));
}

void population_scoring(benchmark::State& state, Execution execution) {
  const LogLikContext ctx(synthetic(static_cast<std::size_t>(state.range(0))));
  const std::size_t k = ctx.k();
  const std::size_t np = 10 * (k + 1);
  RngStream rng(3, 0);
  std::vector<std::vector<double>> population(np, std::vector<double>(k + 1));
  for (auto& m : population) {
    for (std::size_t d = 0; d + 1 < k; ++d) m[d] = rng.uniform(0.01, 1.0);
    sort_leading(m, k - 1);
    m[k - 1] = rng.uniform(-0.5, 0.8);
    m[k] = rng.uniform(0.0, 0.3);
  }
  const Objective objective = [&ctx, k](std::span<const double> x) {
    thread_local std::vector<double> w;
    w.assign(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(k - 1));
    w.push_back(1.0);
    return log_likelihood(ctx, w, x[k - 1], x[k]);
  };
  std::vector<double> values(np);
  for (auto _ : state) {
    evaluate_population(objective, {}, population, values, execution);
    benchmark::DoNotOptimize(values.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(np));
}

void replicates(benchmark::State& state, Execution execution) {
  const MetaDataset data = education_dataset();
  SelectionTestOptions options;
  options.replicates = static_cast<std::size_t>(state.range(0));
  options.execution = execution;
  for (auto _ : state) {
    const SelectionTestResult r = selection_test(data, DEConfig{}, options);
    benchmark::DoNotOptimize(r.p_value);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK_CAPTURE(population_scoring, serial, Execution::serial)->Arg(10)->Arg(40)->Arg(100);
BENCHMARK_CAPTURE(population_scoring, parallel, Execution::parallel)->Arg(10)->Arg(40)->Arg(100);
BENCHMARK_CAPTURE(replicates, serial, Execution::serial)->Arg(16)->Unit(benchmark::kSecond);
BENCHMARK_CAPTURE(replicates, parallel, Execution::parallel)->Arg(16)->Unit(benchmark::kSecond);

BENCHMARK_MAIN();
