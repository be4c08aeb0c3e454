// Serial against OpenMP kernels, and the FFT routes against each other.
// Run with OMP_NUM_THREADS set to compare thread counts.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "qkr/kernels.hpp"
#include "qkr/propagators.hpp"

namespace {

using qkr::cplx;

std::vector<cplx> random_field(std::size_t n) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> d;
  std::vector<cplx> v(n);
  for (auto& z : v) z = {d(rng), d(rng)};
  return v;
}

qkr::WaveFunction random_state(long n_modes) {
  qkr::WaveFunction psi(qkr::ModeGrid{n_modes, 2.89});
  const auto v = random_field(static_cast<std::size_t>(n_modes));
  std::copy(v.begin(), v.end(), psi.amplitudes().begin());
  psi.normalize();
  return psi;
}

template <void (*Kernel)(std::span<cplx>, double)>
void BM_nonlinear(benchmark::State& state) {
  auto u = random_field(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    Kernel(u, 1e-6);
    benchmark::DoNotOptimize(u.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <double (*Kernel)(std::span<const cplx>)>
void BM_sum_abs2(benchmark::State& state) {
  const auto u = random_field(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(Kernel(u));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_F_exact(benchmark::State& state) {
  const auto psi = random_state(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(qkr::compute_F_exact(psi));
}

void BM_F_paa(benchmark::State& state) {
  const auto psi = random_state(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(qkr::compute_F_paa(psi));
}

void BM_period(benchmark::State& state, qkr::Method method) {
  qkr::SimulationParams p;
  p.method = method;
  p.coupling = 10.0;
  p.kick_strength = 12.0;
  p.n_modes = state.range(0);
  p.dt = 1e-3;
  p.boundary_threshold = 1.0;
  auto prop = qkr::make_propagator(p);
  auto psi = qkr::make_plane_wave(1, qkr::ModeGrid::from(p));
  for (auto _ : state) {
    prop->advance(psi);
    benchmark::DoNotOptimize(psi.amplitudes().data());
  }
}

}  // namespace

BENCHMARK(BM_nonlinear<qkr::kernels::serial::nonlinear_phase>)->Name("nonlinear_phase/serial")->Range(1 << 10, 1 << 20);
BENCHMARK(BM_nonlinear<qkr::kernels::parallel::nonlinear_phase>)->Name("nonlinear_phase/parallel")->Range(1 << 10, 1 << 20);
BENCHMARK(BM_sum_abs2<qkr::kernels::serial::sum_abs2>)->Name("sum_abs2/serial")->Range(1 << 10, 1 << 20);
BENCHMARK(BM_sum_abs2<qkr::kernels::parallel::sum_abs2>)->Name("sum_abs2/parallel")->Range(1 << 10, 1 << 20);
BENCHMARK(BM_F_exact)->Range(256, 8192);
BENCHMARK(BM_F_paa)->Range(256, 8192);
BENCHMARK_CAPTURE(BM_period, gpe, qkr::Method::GPE)->Range(512, 4096)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_period, paa, qkr::Method::PAA)->Range(512, 4096)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_period, lma, qkr::Method::LMA)->Range(512, 4096)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
