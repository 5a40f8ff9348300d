// Serial reference loop vs the OpenMP loop on the two hot kernels: the
// oracle's lattice convolution and the billiard trajectory ensemble.

#include <benchmark/benchmark.h>

#include "lorentz/billiard.hpp"
#include "lorentz/markov.hpp"
#include "lorentz/parallel.hpp"
#include "lorentz/stats.hpp"

using namespace lorentz;

namespace {

ExecPolicy policy_for(const benchmark::State& state) {
  return state.range(0) == 0 ? ExecPolicy::serial() : ExecPolicy::threads(static_cast<int>(state.range(0)));
}

void BM_Convolution(benchmark::State& state) {
  const auto srw = markov::simple_random_walk();
  const auto n = static_cast<std::size_t>(state.range(1));
  for (auto _ : state) {
    const auto dist = markov::exact_distribution(srw, n, {false, policy_for(state), markov::kDefaultCellBudget});
    benchmark::DoNotOptimize(dist.q(Cell{}));
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n * n));
}

const billiard::BilliardTable& table() {
  static const billiard::BilliardTable t = [] {
    auto tab = billiard::default_table();
    billiard::validate_table(tab, 8, 20'000);
    return tab;
  }();
  return t;
}

void BM_BilliardEnsemble(benchmark::State& state) {
  const billiard::BilliardSystem sys(table());
  const std::size_t n_samples = 2000;
  const std::array<std::size_t, 1> times{static_cast<std::size_t>(state.range(1))};
  for (auto _ : state) {
    const auto sums = ensemble_map<Cell>(
        n_samples, [&](std::size_t i) { return stats::sums_at(sys, sys.sample(RngSpec{7, i}), times)[0]; },
        policy_for(state));
    benchmark::DoNotOptimize(sums.data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n_samples) * state.range(1));
}

}  // namespace

// range(0): 0 = serial reference, k > 0 = OpenMP with k threads
BENCHMARK(BM_Convolution)->ArgsProduct({{0, 1, 2, 4}, {200}})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BilliardEnsemble)->ArgsProduct({{0, 1, 2, 4}, {100}})->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
