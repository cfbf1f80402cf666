#include <gtest/gtest.h>

#include <algorithm>

#include "dotlab/electrostatics.hpp"
#include "dotlab/error.hpp"
#include "oracle_values.hpp"
#include "support.hpp"

using namespace dotlab;
using namespace testing_support;

TEST(Grid, ReferenceTwoDegRowAtConfiguredDepth) {
  const auto d = reference_device();
  const auto g = build_grid(d, {});
  EXPECT_NEAR(g.z_nm(g.two_deg_row), d.two_deg_height_nm(), 1e-9);
  EXPECT_NEAR(d.stack_height_nm() - d.two_deg_height_nm(), 30.0 + 20.0 + 8.0 + 8.0 + 35.0, 1e-12);
  EXPECT_NEAR((g.nz - 1) * g.dz_nm, d.stack_height_nm(), 0.5 * g.dz_nm);
  EXPECT_EQ(g.nx, 400);
}

TEST(Grid, UniformStackHasConstantPermittivity) {
  auto d = parallel_plate(0.1);
  for (auto& l : d.stack) l.relative_permittivity = 11.7;
  const auto g = build_grid(d, plate_resolution());
  for (int j = 0; j < g.nz; ++j) EXPECT_DOUBLE_EQ(g.row_permittivity[j], 11.7);
  for (double e : g.zlink_permittivity) EXPECT_NEAR(e, 11.7, 1e-12);
}

TEST(Grid, GateOutsideDomainRejected) {
  auto res = plate_resolution();
  res.x_range_nm = std::pair{-50.0, 50.0};
  EXPECT_THROW(build_grid(parallel_plate(0.1), res), DomainError);
  res.nx = 10;
  EXPECT_THROW(build_grid(parallel_plate(0.1), res), DomainError);
}

TEST(Poisson, GroundedLaplaceIsZero) {
  auto d = reference_device();
  for (const auto& id : d.gate_ids()) d.voltages.set(id, 0.0);
  const auto f = solve_poisson(build_grid(d, {}));
  EXPECT_LT(*std::max_element(f.volts.begin(), f.volts.end(), [](double a, double b) { return std::abs(a) < std::abs(b); }),
            1e-12);
  const auto p = potential_profile(f);
  for (double u : p.u_ev) EXPECT_EQ(u, 0.0);
}

TEST(Poisson, TwoDielectricDivider) {
  const auto f = solve_poisson(build_grid(parallel_plate(0.3), plate_resolution()));
  const auto p = potential_profile(f);
  for (double u : p.u_ev) EXPECT_NEAR(-u, oracle::plate_divider_v, 1e-3 * oracle::plate_divider_v);
}

TEST(Poisson, SuperpositionAndLinearity) {
  const auto d = reference_device();
  const auto grid = build_grid(d, {});
  PoissonSolver solver(grid);
  std::vector<double> a(grid.gate_volts.size(), 0.0), b = a, ab = a;
  a[0] = 0.7;
  b[3] = -0.4;
  ab[0] = 0.7;
  ab[3] = -0.4;
  const auto fa = solver.solve(a, {}), fb = solver.solve(b, {}), fab = solver.solve(ab, {});
  for (std::size_t k = 0; k < fab.volts.size(); k += 97) EXPECT_NEAR(fab.volts[k], fa.volts[k] + fb.volts[k], 1e-10);
}

TEST(ThomasFermi, Density) {
  ChargeModel m;
  EXPECT_EQ(thomas_fermi_density(-0.1, m), 0.0);
  EXPECT_EQ(thomas_fermi_density(0.0, m), 0.0);
  EXPECT_NEAR(thomas_fermi_density(0.01, m), oracle::tf_sigma_at_10mv, 1e-12 * std::abs(oracle::tf_sigma_at_10mv));
}

TEST(SelfConsistent, DepletedDeviceMatchesChargeFree) {
  auto d = reference_device();
  for (const auto& id : d.gate_ids()) d.voltages.set(id, -1.0);
  const auto grid = build_grid(d, {});
  const auto free = solve_poisson(grid);
  for (auto method : {SelfConsistentMethod::damped_fixed_point, SelfConsistentMethod::newton}) {
    const auto r = solve_selfconsistent(grid, d.charge_model, {1e-9, 50, 0.1, method});
    for (double s : r.charge.sigma) EXPECT_EQ(s, 0.0);
    EXPECT_LE(r.iterations, 2);
    for (std::size_t k = 0; k < free.volts.size(); k += 53) EXPECT_NEAR(r.field.volts[k], free.volts[k], 1e-12);
  }
}

TEST(SelfConsistent, ParallelPlateMatchesBisection) {
  const auto grid = build_grid(parallel_plate(0.3), plate_resolution());
  const auto newton = solve_selfconsistent(grid, {}, {1e-9, 50, 1.0, SelfConsistentMethod::newton});
  for (double u : potential_profile(newton.field).u_ev) EXPECT_NEAR(-u, oracle::plate_tf_v, 1e-5);
  // C_q / C_geo is ~55 here: plain mixing only converges for lambda < 2 / (1 + C_q / C_geo).
  const auto fp = solve_selfconsistent(grid, {}, {1e-9, 5000, 0.02, SelfConsistentMethod::damped_fixed_point});
  for (double u : potential_profile(fp.field).u_ev) EXPECT_NEAR(-u, oracle::plate_tf_v, 1e-5);
  EXPECT_THROW(solve_selfconsistent(grid, {}, {1e-9, 500, 0.5, SelfConsistentMethod::damped_fixed_point}),
               ConvergenceError);
}

TEST(SelfConsistent, ChargeOnlyUnderPositivePlungers) {
  auto d = reference_device();
  for (const auto& g : d.gates) d.voltages.set(g.id, g.role == GateRole::screening ? -1.0 : (g.role == GateRole::plunger ? 1.5 : -0.5));
  d.charge_model.fermi_energy_ev = 0.0;
  const auto grid = build_grid(d, {});
  const auto r = solve_selfconsistent(grid, d.charge_model, {1e-7, 100, 0.1, SelfConsistentMethod::newton});
  bool any = false;
  for (int i = 0; i < grid.nx; ++i) {
    const double x = grid.x_nm(i);
    const double s = r.charge.sigma[i];
    EXPECT_LE(s, 0.0);
    for (const auto& g : d.gates)
      if (g.role == GateRole::screening && x >= g.x0_nm && x <= g.x1_nm) EXPECT_EQ(s, 0.0) << x;
    if (s < 0.0) {
      any = true;
      EXPECT_GT(x, d.gate("S1").x1_nm - 40.0);
      EXPECT_LT(x, d.gate("S2").x0_nm + 40.0);
    }
  }
  EXPECT_TRUE(any);
}

TEST(Profile, InterchangedDoubleWellUnderPlungers) {
  const auto d = with_strategy(reference_device(), TuningStrategy::interchanged);
  const auto grid = build_grid(d, {});
  const auto r = solve_selfconsistent(grid, d.charge_model, {1e-7, 100, 0.1, SelfConsistentMethod::newton});
  const auto p = potential_profile(r.field);
  // Local minima of U between the screening gates sit under plunger spans.
  int minima = 0;
  for (std::size_t i = 1; i + 1 < p.u_ev.size(); ++i) {
    if (p.u_ev[i] < p.u_ev[i - 1] && p.u_ev[i] <= p.u_ev[i + 1]) {
      bool under = false;
      for (const auto& g : d.gates) under = under || (g.role == GateRole::plunger && p.x_nm[i] >= g.x0_nm && p.x_nm[i] <= g.x1_nm);
      EXPECT_TRUE(under) << "minimum at " << p.x_nm[i];
      ++minima;
    }
  }
  EXPECT_EQ(minima, 4);
}

TEST(Profile, Resample) {
  PotentialProfile1D p{{0, 1, 2, 3}, {0, 1, 4, 9}};
  const auto r = p.resample(0.5, 2.5, 3);
  EXPECT_DOUBLE_EQ(r.u_ev[0], 0.5);
  EXPECT_DOUBLE_EQ(r.u_ev[1], 2.5);
  EXPECT_DOUBLE_EQ(r.u_ev[2], 6.5);
  EXPECT_THROW(p.resample(2, 1, 3), DomainError);
  EXPECT_THROW((PotentialProfile1D{{0, 1, 3}, {0, 0, 0}}.validate()), DomainError);
}

TEST(SolverSettings, Validation) {
  EXPECT_THROW((SolverSettings{0.0, 10, 0.1}.validate()), DomainError);
  EXPECT_THROW((SolverSettings{1e-6, 10, 1.5}.validate()), DomainError);
  EXPECT_THROW((SolverSettings{1e-6, 0, 0.1}.validate()), DomainError);
}
