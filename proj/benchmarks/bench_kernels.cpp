// Microbenchmarks for the hot kernels.

#include <benchmark/benchmark.h>

#include <vector>

#include "radocc/deform_attn.hpp"
#include "radocc/matching.hpp"
#include "radocc/rng.hpp"
#include "radocc/tensor.hpp"

namespace {

radocc::Tensor random_tensor(radocc::Shape shape, std::uint64_t seed) {
  radocc::CounterRng rng(seed, "bench");
  radocc::Tensor t(std::move(shape));
  for (auto& v : t.data()) v = rng.uniform(-1.0, 1.0);
  return t;
}

void BM_Conv3d(benchmark::State& state) {
  const auto c = static_cast<std::size_t>(state.range(0));
  const radocc::Tensor x = random_tensor({c, 20, 30, 4}, 1);
  const radocc::Tensor k = random_tensor({c, c, 3, 3, 3}, 2);
  for (auto _ : state) benchmark::DoNotOptimize(radocc::conv3d(x, k, {}, 1, 1));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * x.size()));
}
BENCHMARK(BM_Conv3d)->Arg(8)->Arg(16)->Unit(benchmark::kMillisecond);

void BM_TrilinearSample(benchmark::State& state) {
  const radocc::Tensor vol = random_tensor({16, 40, 60, 8}, 3);
  radocc::CounterRng rng(4, "pts");
  std::vector<radocc::Point3> pts(static_cast<std::size_t>(state.range(0)));
  for (auto& p : pts) p = {rng.uniform(0, 59), rng.uniform(0, 39), rng.uniform(0, 7)};
  for (auto _ : state) benchmark::DoNotOptimize(radocc::trilinear_sample(vol, pts));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * pts.size()));
}
BENCHMARK(BM_TrilinearSample)->Arg(1 << 10)->Arg(1 << 14);

void BM_DeformAttn3d(benchmark::State& state) {
  radocc::CounterRng rng(5, "da");
  const auto p = radocc::DeformAttnParams::seeded(16, 4, 4, 3, rng);
  const radocc::Tensor value = random_tensor({16, 20, 30, 4}, 6);
  const radocc::Tensor projected = radocc::project_values(value, p);
  std::vector<double> q(16), out(16);
  for (auto& v : q) v = rng.uniform(-1, 1);
  const double ref[3] = {12.3, 7.7, 1.5};
  for (auto _ : state) {
    radocc::deform_attn_projected(q, ref, projected, p, out);
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK(BM_DeformAttn3d);

void BM_Hungarian(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const radocc::Tensor cost = random_tensor({n, 900}, 7);
  for (auto _ : state) benchmark::DoNotOptimize(radocc::solve_assignment(cost));
}
BENCHMARK(BM_Hungarian)->Arg(10)->Arg(50)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
