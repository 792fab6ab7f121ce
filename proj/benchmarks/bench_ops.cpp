#include <benchmark/benchmark.h>

#include "csr/de_kernel.hpp"
#include "csr/de_op.hpp"
#include "csr/metrics.hpp"
#include "csr/resample.hpp"
#include "csr/rng.hpp"
#include "csr/synthetic.hpp"

namespace {

csr::Grid random_normalized(int h, int w, int c, std::uint64_t seed) {
  csr::Rng rng(seed);
  csr::Grid g(h, w, c);
  g.normalized = true;
  for (double& v : g.data) v = rng.uniform(-1.0, 1.0);
  return g;
}

void EnforceBlock(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const std::size_t m = static_cast<std::size_t>(n) * n;
  csr::Rng rng(1);
  std::vector<double> x(m), y(m);
  for (double& v : x) v = rng.uniform(-1.0, 1.0);
  const double target = rng.uniform(-1.0, 1.0);
  for (auto _ : state) {
    csr::de_kernel::apply(x.data(), m, target, y.data());
    benchmark::DoNotOptimize(y.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<long>(m));
}
BENCHMARK(EnforceBlock)->Arg(2)->Arg(4)->Arg(8)->Arg(16);

void EnforceGrid(benchmark::State& state) {
  const csr::Grid lr = random_normalized(48, 48, 1, 2);
  const csr::Grid hr = random_normalized(192, 192, 1, 3);
  for (auto _ : state) {
    csr::Grid out = csr::de_forward_grid(hr, lr, 4);
    benchmark::DoNotOptimize(out.data.data());
  }
  state.SetItemsProcessed(state.iterations() * 192 * 192);
}
BENCHMARK(EnforceGrid);

void EnforceVjp(benchmark::State& state) {
  csr::Rng rng(4);
  csr::Block b;
  b.hr.resize(16);
  for (double& v : b.hr) v = rng.uniform(-1.0, 1.0);
  b.lr = rng.uniform(-1.0, 1.0);
  std::vector<double> upstream(16);
  for (double& v : upstream) v = rng.uniform(-1.0, 1.0);
  for (auto _ : state) {
    csr::BlockVjp g = csr::de_vjp(b, upstream);
    benchmark::DoNotOptimize(g.dx.data());
  }
}
BENCHMARK(EnforceVjp);

void DownsampleAvg(benchmark::State& state) {
  const csr::Grid g = random_normalized(192, 192, 1, 5);
  for (auto _ : state) {
    csr::Grid out = csr::downsample_avg(g, 4);
    benchmark::DoNotOptimize(out.data.data());
  }
  state.SetItemsProcessed(state.iterations() * 192 * 192);
}
BENCHMARK(DownsampleAvg);

void UpsampleBilinear(benchmark::State& state) {
  const csr::Grid g = random_normalized(48, 48, 1, 6);
  for (auto _ : state) {
    csr::Grid out = csr::upsample_bilinear(g, 4);
    benchmark::DoNotOptimize(out.data.data());
  }
}
BENCHMARK(UpsampleBilinear);

void Ssim(benchmark::State& state) {
  const csr::Grid a = csr::synthetic_texture(192, 8, 0);
  const csr::Grid b = csr::synthetic_texture(192, 9, 1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(csr::ssim(a, b));
  }
}
BENCHMARK(Ssim);

}  // namespace

BENCHMARK_MAIN();
