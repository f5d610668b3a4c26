// Serial reference loop vs OpenMP batch evaluation of both operators on a
// field-sized batch of material points (one per FEM element).
#include <map>
#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "hystkit/kernels.hpp"

using namespace hystkit;

namespace {

struct Workload {
  MaterialParams params;
  std::vector<Vector2> h, b;
  std::vector<MaterialState> prev;
};

const Workload& workload(int nchi, int points) {
  static std::map<std::pair<int, int>, Workload> cache;
  auto [it, fresh] = cache.try_emplace({nchi, points});
  Workload& w = it->second;
  if (!fresh) return w;
  w.params = MaterialParams::linear_spread(nchi, 90.302, 1.573, 150.0);
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> u(-500.0, 500.0);
  for (int i = 0; i < points; ++i) {
    const auto start =
        forward_update(w.params, {u(rng), u(rng)}, MaterialState::virgin(w.params), {});
    w.prev.push_back(start.next);
    w.h.emplace_back(u(rng), u(rng));
    w.b.push_back(forward_update(w.params, w.h.back(), start.next, {}).b);
  }
  return w;
}

void forward(benchmark::State& state, Execution execution) {
  const Workload& w = workload(static_cast<int>(state.range(0)),
                               static_cast<int>(state.range(1)));
  std::vector<ForwardResult> out(w.h.size());
  BatchOptions opt;
  opt.execution = execution;
  opt.tangent = true;
  for (auto _ : state) {
    forward_batch(w.params, w.h, w.prev, {}, out, opt);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(1));
  state.counters["threads"] = execution == Execution::Serial ? 1 : batch_threads();
}

void inverse(benchmark::State& state, Execution execution) {
  const Workload& w = workload(static_cast<int>(state.range(0)),
                               static_cast<int>(state.range(1)));
  std::vector<InverseResult> out(w.b.size());
  BatchOptions opt;
  opt.execution = execution;
  opt.tangent = true;
  for (auto _ : state) {
    inverse_batch(w.params, w.b, w.prev, {}, out, opt);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(1));
  state.counters["threads"] = execution == Execution::Serial ? 1 : batch_threads();
}

void sizes(benchmark::internal::Benchmark* b) {
  for (int nchi : {5, 20}) b->Args({nchi, 4096});
  b->Unit(benchmark::kMillisecond);
}

}  // namespace

BENCHMARK_CAPTURE(forward, serial, Execution::Serial)->Apply(sizes);
BENCHMARK_CAPTURE(forward, parallel, Execution::Parallel)->Apply(sizes);
BENCHMARK_CAPTURE(inverse, serial, Execution::Serial)->Apply(sizes);
BENCHMARK_CAPTURE(inverse, parallel, Execution::Parallel)->Apply(sizes);

BENCHMARK_MAIN();
