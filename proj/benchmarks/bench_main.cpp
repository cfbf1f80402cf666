#include <benchmark/benchmark.h>

#include <cmath>

#include "dotlab/device.hpp"
#include "dotlab/dot_physics.hpp"
#include "dotlab/electrostatics.hpp"
#include "dotlab/spin.hpp"

namespace {

dotlab::DeviceDescription reference() {
  return dotlab::load_device_config_file(DOTLAB_CONFIG_DIR "/device_reference.json");
}

void BM_PoissonSolve(benchmark::State& state) {
  const auto device = reference();
  dotlab::GridResolution res;
  res.nx = static_cast<int>(state.range(0));
  const auto grid = dotlab::build_grid(device, res);
  for (auto _ : state) benchmark::DoNotOptimize(dotlab::solve_poisson(grid));
  state.counters["nodes"] = static_cast<double>(grid.nx * grid.nz);
}
BENCHMARK(BM_PoissonSolve)->Arg(200)->Arg(400)->Unit(benchmark::kMillisecond);

void BM_SelfConsistent(benchmark::State& state) {
  const auto device = reference();
  const auto grid = dotlab::build_grid(device);
  for (auto _ : state) benchmark::DoNotOptimize(dotlab::solve_selfconsistent(grid, device.charge_model, {}));
}
BENCHMARK(BM_SelfConsistent)->Unit(benchmark::kMillisecond);

void BM_Eigensolve(benchmark::State& state) {
  dotlab::PotentialProfile1D p;
  const int n = static_cast<int>(state.range(0));
  for (int i = 0; i < n; ++i) {
    const double x = -150.0 + 300.0 * i / (n - 1);
    p.x_nm.push_back(x);
    p.u_ev.push_back(-0.01 * std::exp(-std::pow((x + 40) / 20, 2)) - 0.01 * std::exp(-std::pow((x - 40) / 20, 2)));
  }
  for (auto _ : state) benchmark::DoNotOptimize(dotlab::solve_schrodinger_1d(p, 0.19, 3));
}
BENCHMARK(BM_Eigensolve)->Arg(601)->Arg(1201)->Arg(4801);

void BM_Propagator(benchmark::State& state) {
  dotlab::SpinSystem s;
  const int n = static_cast<int>(state.range(0));
  s.reference_hz = 15e9;
  for (int q = 0; q < n; ++q) {
    s.detuning_hz.push_back(100e6 * q);
    s.slope_hz_per_v.push_back(0.0);
  }
  for (int q = 0; q + 1 < n; ++q) s.exchange.push_back({q, q + 1, 2e3, 38.0, 0.0});
  std::vector<dotlab::ExchangePulse> windows;
  for (int q = 0; q + 1 < n; ++q) windows.push_back({q, q + 1, 0.2});
  const auto h = dotlab::build_hamiltonian(s, {{0, s.reference_hz, 5e6, 0.0}}, windows);
  auto psi = dotlab::QuantumState::basis(n, 1);
  for (auto _ : state) {
    dotlab::evolve(psi, h, 1e-9);
    benchmark::DoNotOptimize(psi.amplitudes.data());
  }
}
BENCHMARK(BM_Propagator)->Arg(2)->Arg(4);

}  // namespace
BENCHMARK_MAIN();
