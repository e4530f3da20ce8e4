#include <benchmark/benchmark.h>

#include "otbv/ot1d.hpp"
#include "otbv/projection.hpp"
#include "otbv/rng.hpp"
#include "otbv/sinkhorn.hpp"

namespace {

otbv::GridDensity bumps_1d(int n, std::uint64_t stream) {
  const double h = 2.0 / n;
  return otbv::random_smooth_density(otbv::Grid::line(n, -1.0 + 0.5 * h, h),
                                     7u, stream, 3, 1.0);
}

void BM_TotalVariation1D(benchmark::State& state) {
  const auto rho = bumps_1d(static_cast<int>(state.range(0)), 0);
  for (auto _ : state)
    benchmark::DoNotOptimize(otbv::total_variation(rho));
}
BENCHMARK(BM_TotalVariation1D)->Arg(256)->Arg(4096);

void BM_W2Quantile1D(benchmark::State& state) {
  const auto a = bumps_1d(static_cast<int>(state.range(0)), 0);
  const auto b = bumps_1d(static_cast<int>(state.range(0)), 1);
  for (auto _ : state) benchmark::DoNotOptimize(otbv::w2_1d(a, b));
}
BENCHMARK(BM_W2Quantile1D)->Arg(256)->Arg(4096);

void BM_ProjectIsotonic1D(benchmark::State& state) {
  auto g = bumps_1d(static_cast<int>(state.range(0)), 2);
  g = otbv::rescale_mass(g, 1.5);
  for (auto _ : state)
    benchmark::DoNotOptimize(otbv::project_k1_1d(g, 0.8));
}
BENCHMARK(BM_ProjectIsotonic1D)->Arg(256)->Arg(4096);

void BM_ProjectLp1D(benchmark::State& state) {
  const auto g = bumps_1d(static_cast<int>(state.range(0)), 3);
  const auto f = otbv::ConstraintField::constant(g.grid, 0.8);
  for (auto _ : state) benchmark::DoNotOptimize(otbv::project_lp(g, f));
}
BENCHMARK(BM_ProjectLp1D)->Arg(128)->Arg(256);

void BM_Sinkhorn1D(benchmark::State& state) {
  const auto a = bumps_1d(64, 4);
  const auto b = bumps_1d(64, 5);
  const double eps = 1e-3 * 4.0;
  for (auto _ : state)
    benchmark::DoNotOptimize(otbv::sinkhorn(a, b, eps, 50000, 1e-7));
}
BENCHMARK(BM_Sinkhorn1D);

}  // namespace

BENCHMARK_MAIN();
