#include <benchmark/benchmark.h>
#include <omp.h>

#include "lfire/engine.hpp"

using namespace lfire;

namespace {

struct Setup {
  Model model = make_model(ArchModelSpec{}, [] {
    SummaryMapSpec s;
    s.base = BaseMap::Arch;
    return s;
  }());
  SummaryMap map = summary_map_for(model, Dataset::Zero(1, 100));
  MarginalBank bank;
  Eigen::MatrixXd nodes = grid_nodes({cell_centered_axis(-1, 1, 4), cell_centered_axis(0, 1, 4)});
  NodeOptions options;

  Setup() {
    options.n_theta = 200;
    options.synthetic = true;
    Rng rng = stream_rng(1, StreamTag::Bank);
    bank = build_marginal_bank(model, map, 200, rng);
  }
};

const Setup& setup() {
  static const Setup s;
  return s;
}

void BM_nodes_serial(benchmark::State& state) {
  const Setup& s = setup();
  for (auto _ : state) {
    auto r = evaluate_nodes_serial(s.model, s.map, &s.bank, s.nodes, 7, s.options);
    benchmark::DoNotOptimize(r);
  }
  state.SetItemsProcessed(state.iterations() * s.nodes.rows());
}

void BM_nodes_parallel(benchmark::State& state) {
  const Setup& s = setup();
  const auto workers = static_cast<int>(state.range(0));
  for (auto _ : state) {
    auto r = evaluate_nodes(s.model, s.map, &s.bank, s.nodes, 7, s.options, workers);
    benchmark::DoNotOptimize(r);
  }
  state.SetItemsProcessed(state.iterations() * s.nodes.rows());
}

void BM_bank(benchmark::State& state) {
  const Setup& s = setup();
  for (auto _ : state) {
    Rng rng = stream_rng(2, StreamTag::Bank);
    auto b = build_marginal_bank(s.model, s.map, static_cast<int>(state.range(0)), rng);
    benchmark::DoNotOptimize(b);
  }
}

}  // namespace

BENCHMARK(BM_nodes_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_nodes_parallel)
    ->Unit(benchmark::kMillisecond)
    ->Arg(1)
    ->Arg(2)
    ->Arg(4)
    ->Arg(omp_get_max_threads());
BENCHMARK(BM_bank)->Unit(benchmark::kMillisecond)->Arg(1000);

BENCHMARK_MAIN();
