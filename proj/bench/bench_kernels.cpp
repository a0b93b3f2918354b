#include <benchmark/benchmark.h>

#include <cmath>
#include <random>
#include <vector>

#include "kinlim/kernels/hard_sphere.hpp"
#include "kinlim/kernels/kinetic.hpp"
#include "kinlim/velocity_space.hpp"

using namespace kinlim;

namespace {

constexpr std::size_t kCells = 400;

GridPtr transport_grid() {
  static const GridPtr g = VelocityGrid::build({16, 12, 12}, 6.0, 1.2);
  return g;
}

GridPtr collision_grid() {
  static const GridPtr g = VelocityGrid::build({12, 12, 12}, 5.0, 1.2);
  return g;
}

// Maxwellian data with a seeded relative perturbation in every cell.
std::vector<double> field(const VelocityGrid& grid, std::size_t n_cells, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-0.1, 0.1);
  const auto M = maxwellian({1.0, {0.0, 0.0, 0.0}, 1.0}, grid);
  std::vector<double> f(n_cells * grid.size());
  for (std::size_t i = 0; i < n_cells; ++i)
    for (std::size_t k = 0; k < grid.size(); ++k) f[i * grid.size() + k] = M[k] * (1.0 + u(rng));
  return f;
}

struct TransportCase {
  GridPtr g = transport_grid();
  std::size_t nv = g->size();
  std::vector<double> f = field(*g, kCells, 1), out = f, gl = field(*g, 2, 2), gr = field(*g, 2, 3);
  std::vector<double> fl = std::vector<double>(nv), fr = std::vector<double>(nv);
  kernels::TransportArgs args{kCells, nv, g->xi1(), 0.9 / g->max_abs_xi1(),
                              kernels::Limiter::Minmod, gl, gr};
};

template <bool Parallel>
void BM_Transport(benchmark::State& state) {
  TransportCase c;
  for (auto _ : state) {
    if constexpr (Parallel)
      kernels::omp::transport(c.args, c.f, c.out, c.fl, c.fr);
    else
      kernels::serial::transport(c.args, c.f, c.out, c.fl, c.fr);
    benchmark::DoNotOptimize(c.out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(kCells * c.nv));
}

template <bool Parallel>
void BM_BgkRelax(benchmark::State& state) {
  const auto g = transport_grid();
  const auto f0 = field(*g, kCells, 4);
  auto f = f0;
  for (auto _ : state) {
    state.PauseTiming();
    f = f0;
    state.ResumeTiming();
    if constexpr (Parallel)
      kernels::omp::bgk_relax(*g, kCells, std::exp(-0.5), f);
    else
      kernels::serial::bgk_relax(*g, kCells, std::exp(-0.5), f);
    benchmark::DoNotOptimize(f.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(kCells * g->size()));
}

void BM_HardSphereSerial(benchmark::State& state) {
  const auto g = collision_grid();
  const auto rule = kernels::AngularRule::make(8, 8);
  const auto f = field(*g, 1, 5), W = maxwellian({1.0, {0.0, 0.0, 0.0}, 1.0}, *g);
  std::vector<double> out(g->size());
  for (auto _ : state) {
    kernels::serial::collision(*g, rule, W, f, f, out);
    benchmark::DoNotOptimize(out.data());
  }
}

void BM_HardSphereOmp(benchmark::State& state) {
  const auto g = collision_grid();
  const auto rule = kernels::AngularRule::make(8, 8);
  const kernels::HsTable table(*g, rule);
  const auto f = field(*g, 1, 5), W = maxwellian({1.0, {0.0, 0.0, 0.0}, 1.0}, *g);
  std::vector<double> out(g->size());
  for (auto _ : state) {
    kernels::omp::collision(table, W, f, f, out);
    benchmark::DoNotOptimize(out.data());
  }
}

}  // namespace

BENCHMARK(BM_Transport<false>)->Name("transport/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Transport<true>)->Name("transport/omp")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BgkRelax<false>)->Name("bgk_relax/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BgkRelax<true>)->Name("bgk_relax/omp")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_HardSphereSerial)->Name("hard_sphere/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_HardSphereOmp)->Name("hard_sphere/omp")->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
