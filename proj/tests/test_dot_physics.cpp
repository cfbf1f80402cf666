#include <gtest/gtest.h>

#include <cmath>

#include "dotlab/constants.hpp"
#include "dotlab/dot_physics.hpp"
#include "dotlab/error.hpp"
#include "dotlab/stability.hpp"
#include "dotlab/tridiagonal.hpp"
#include "oracle_values.hpp"
#include "support.hpp"

using namespace dotlab;
using namespace testing_support;

namespace {

PotentialProfile1D flat(double half_box, int nodes) {
  PotentialProfile1D p;
  for (int i = 0; i < nodes; ++i) {
    p.x_nm.push_back(-half_box + 2 * half_box * i / (nodes - 1));
    p.u_ev.push_back(0.0);
  }
  return p;
}

TunnelCouplingCurve synthetic_curve(double decades_per_v) {
  TunnelCouplingCurve c;
  for (int k = 0; k <= 6; ++k) {
    const double v = 0.05 * k;
    c.points.push_back({v, 1e6 * std::pow(10.0, decades_per_v * v), PointFlag::ok, 0.0});
  }
  return c;
}

}  // namespace

TEST(Tridiagonal, SturmCountAndEigenpairs) {
  // 1D Laplacian: eigenvalues 2 - 2 cos(k pi / (n + 1)).
  const int n = 50;
  std::vector<double> d(n, 2.0), off(n - 1, -1.0);
  EXPECT_EQ(sturm_count(d, off, 0.0), 0);
  EXPECT_EQ(sturm_count(d, off, 4.0), n);
  const auto pairs = lowest_eigenpairs(d, off, 3);
  for (int k = 0; k < 3; ++k)
    EXPECT_NEAR(pairs.values[k], 2.0 - 2.0 * std::cos((k + 1) * constants::pi / (n + 1)), 1e-12);
}

TEST(Schrodinger, InfiniteWellRatio) {
  const auto e = solve_schrodinger_1d(flat(50.0, 2001), 0.19, 3);
  EXPECT_NEAR(e.energies_ev[1] / e.energies_ev[0], 4.0, 1e-4);
  EXPECT_NEAR(e.energies_ev[2] / e.energies_ev[0], 9.0, 1e-3);
  EXPECT_NEAR(e.overlap(0, 0), 1.0, 1e-12);
  EXPECT_NEAR(e.overlap(0, 1), 0.0, 1e-10);
}

TEST(Schrodinger, HarmonicSpacing) {
  using namespace constants;
  const double hw_ev = 2e-3;
  const double omega = hw_ev * elementary_charge / hbar;
  auto p = flat(200.0, 4001);
  for (std::size_t i = 0; i < p.x_nm.size(); ++i) {
    const double x = p.x_nm[i] * nm;
    p.u_ev[i] = 0.5 * 0.19 * electron_mass * omega * omega * x * x / elementary_charge;
  }
  const auto e = solve_schrodinger_1d(p, 0.19, 4);
  EXPECT_NEAR(e.energies_ev[0], 0.5 * hw_ev, 1e-3 * hw_ev);
  for (int k = 1; k < 4; ++k) EXPECT_NEAR(e.energies_ev[k] - e.energies_ev[k - 1], hw_ev, 1e-3 * hw_ev);
}

TEST(Schrodinger, DoubleWellParity) {
  const auto e = solve_schrodinger_1d(double_gaussian(0.01, 0.01), 0.19, 2);
  const auto& x = e.profile.x_nm;
  const std::size_t n = x.size();
  const double dx = e.profile.spacing_nm();
  for (int s = 0; s < 2; ++s) {
    double mirror = 0.0;
    for (std::size_t i = 0; i < n; ++i) mirror += e.wavefunctions[s][i] * e.wavefunctions[s][n - 1 - i] * dx;
    EXPECT_NEAR(mirror, s == 0 ? 1.0 : -1.0, 1e-9);
  }
  EXPECT_NEAR((e.energies_ev[1] - e.energies_ev[0]) / 2 * constants::ev_to_hz, oracle::double_well_half_split_hz,
              1e-6 * oracle::double_well_half_split_hz);
}

TEST(Schrodinger, RejectsBadInput) {
  EXPECT_THROW(solve_schrodinger_1d(flat(50.0, 100), 0.19, 2), DomainError);
  EXPECT_THROW(solve_schrodinger_1d(flat(50.0, 400), 0.19, 1), DomainError);
  EXPECT_THROW(solve_schrodinger_1d(flat(50.0, 400), -1.0, 2), DomainError);
}

TEST(Localization, SymmetricIdentity) {
  const auto e = solve_schrodinger_1d(double_gaussian(0.01, 0.01), 0.19, 3);
  const auto b = maximally_localized_basis(e);
  const double expected = (e.energies_ev[1] - e.energies_ev[0]) / 2 * constants::ev_to_hz;
  EXPECT_LT(std::abs(b.tunnel_coupling_hz - expected) / expected, 1e-3);
  EXPECT_LT(b.center_left_nm, 0.0);
  EXPECT_GT(b.center_right_nm, 0.0);
  EXPECT_NEAR(b.center_left_nm, -b.center_right_nm, 1e-6);
  EXPECT_TRUE(b.well_separated);
}

TEST(Localization, AsymmetricStable) {
  const auto sym = maximally_localized_basis(solve_schrodinger_1d(double_gaussian(0.01, 0.01), 0.19, 3));
  const double tc_ev = sym.tunnel_coupling_hz / constants::ev_to_hz;
  // Depth offsets giving localized detunings from 0 up to about 1.5 t_c.
  for (double frac : {0.25, 0.5, 1.0, 1.5}) {
    const auto e = solve_schrodinger_1d(double_gaussian(0.01, 0.01 + frac * tc_ev), 0.19, 3);
    const auto b = maximally_localized_basis(e);
    const double eps = b.detuning_ev();
    const double t = b.hamiltonian_ev[0][1];
    // The 2x2 model reproduces the exact pair splitting.
    EXPECT_NEAR(std::sqrt(eps * eps + 4 * t * t), e.energies_ev[1] - e.energies_ev[0], 1e-9 * tc_ev);
    EXPECT_GT(std::abs(eps), 0.5 * frac * tc_ev);
    if (std::abs(eps) <= 1.01 * tc_ev || frac <= 1.0)
      EXPECT_LT(std::abs(b.tunnel_coupling_hz - sym.tunnel_coupling_hz) / sym.tunnel_coupling_hz, 0.05) << frac;
  }
}

TEST(Localization, SingleWellIsMerged) {
  const auto e = solve_schrodinger_1d(double_gaussian(0.01, 0.0, 0.0, 30.0), 0.19, 3);
  try {
    maximally_localized_basis(e);
    FAIL() << "expected merged dots";
  } catch (const DomainError& err) {
    EXPECT_NE(std::string(err.what()).find("merged dots"), std::string::npos);
  }
}

TEST(Hubbard, Examples) {
  EXPECT_NEAR(exchange_from_hubbard({1e6, 1e9, 0.0}), 4e3, 1e-9);
  for (double d : {1e8, 5e8, 9e8})
    EXPECT_DOUBLE_EQ(exchange_from_hubbard({1e6, 1e9, d}), exchange_from_hubbard({1e6, 1e9, -d}));
  EXPECT_GT(exchange_from_hubbard({1e6, 1e9, 5e8}), exchange_from_hubbard({1e6, 1e9, 0.0}));
  EXPECT_THROW(exchange_from_hubbard({1e6, 1e9, 1e9}), DomainError);
  EXPECT_THROW(exchange_from_hubbard({1e6, 1e9, -2e9}), DomainError);
}

TEST(Slope, SyntheticAndConstant) {
  EXPECT_NEAR(slope_dec_per_volt(synthetic_curve(5.0)), 5.0, 1e-9);
  EXPECT_NEAR(slope_dec_per_volt(synthetic_curve(0.0)), 0.0, 1e-12);
  EXPECT_NEAR(slope_dec_per_volt(synthetic_curve(5.0), {0.1, 0.2}), 5.0, 1e-9);
  auto bad = synthetic_curve(5.0);
  bad.points[2].flag = PointFlag::merged;
  bad.points[2].tc_hz = NAN;
  EXPECT_THROW(slope_dec_per_volt(bad), DomainError);
  EXPECT_THROW(slope_dec_per_volt(synthetic_curve(5.0), {0.0, 0.06}), DomainError);
}

TEST(Sweep, SinglePointCurve) {
  const auto d = reference_device();
  const auto c = tunnel_coupling_sweep(d, TuningStrategy::interchanged, "B3", {0.0});
  ASSERT_EQ(c.points.size(), 1u);
  EXPECT_EQ(c.points[0].flag, PointFlag::ok);
  EXPECT_GT(c.points[0].tc_hz, 0.0);
  EXPECT_THROW(tunnel_coupling_sweep(d, TuningStrategy::interchanged, "B3", {0.1, 0.0}), DomainError);
  EXPECT_THROW(tunnel_coupling_sweep(d, TuningStrategy::interchanged, "B3", {5.0}), DomainError);
}

TEST(Sweep, PairWindowBracketsBarrier) {
  const auto d = with_strategy(reference_device(), TuningStrategy::interchanged);
  const auto [x0, x1] = dot_pair_window(d.gates, "B3");
  const double c = d.gate("B3").center_nm();
  EXPECT_LT(x0, c);
  EXPECT_GT(x1, c);
  EXPECT_NEAR(c - x0, x1 - c, 1e-9);
}

TEST(Stability, NegativeGatesEmpty) {
  StabilityModel m{{3e-3, 3e-3}, 0.5e-3, {{{0.1, 0.02}, {0.02, 0.1}}}};
  const auto d = stability_diagram(m, {-1.0, -0.5, 20}, {-1.0, -0.5, 20}, 3);
  for (const auto& o : d.occupation) EXPECT_EQ(o, Occupation(0, 0));
  EXPECT_TRUE(d.transitions.empty());
}

TEST(Stability, DecoupledDotsFormRectangularGrid) {
  StabilityModel m{{3e-3, 4e-3}, 0.0, {{{0.1, 0.0}, {0.0, 0.1}}}};
  // Grid offset so no node sits exactly on a transition line.
  const auto d = stability_diagram(m, {0.0011, 0.2011, 81}, {0.0011, 0.2011, 81}, 4);
  // n1 depends only on v1, n2 only on v2.
  for (int k2 = 0; k2 < 81; ++k2)
    for (int k1 = 0; k1 < 81; ++k1) {
      EXPECT_EQ(d.at(k1, k2).first, d.at(k1, 0).first);
      EXPECT_EQ(d.at(k1, k2).second, d.at(0, k2).second);
    }
}

TEST(Stability, SymmetricUnderDotAndGateSwap) {
  StabilityModel m{{3e-3, 3e-3}, 0.7e-3, {{{0.1, 0.03}, {0.03, 0.1}}}};
  const auto d = stability_diagram(m, {0.0, 0.15, 50}, {0.0, 0.15, 50}, 4);
  // Brute-force argmin with the same tie-break, then the swap symmetry.
  for (int k2 = 0; k2 < 50; ++k2)
    for (int k1 = 0; k1 < 50; ++k1) {
      Occupation best{0, 0};
      double e = m.energy_ev(0, 0, d.gate1.at(k1), d.gate2.at(k2));
      for (int a = 0; a <= 4; ++a)
        for (int b = 0; b <= 4; ++b) {
          const double x = m.energy_ev(a, b, d.gate1.at(k1), d.gate2.at(k2));
          if (x < e) e = x, best = {a, b};
        }
      EXPECT_EQ(d.at(k1, k2), best);
      const auto& o = d.at(k1, k2);
      const auto& s = d.at(k2, k1);
      if (std::abs(m.energy_ev(o.first, o.second, d.gate1.at(k1), d.gate2.at(k2)) -
                   m.energy_ev(o.second, o.first, d.gate1.at(k1), d.gate2.at(k2))) > 1e-15)
        EXPECT_EQ(Occupation(s.second, s.first), o) << k1 << "," << k2;
    }
}

TEST(Stability, ValidationAndTransitions) {
  StabilityModel bad{{-1e-3, 3e-3}, 0.0, {{{0.1, 0.0}, {0.0, 0.1}}}};
  EXPECT_THROW(bad.validate(), DomainError);
  StabilityModel m{{3e-3, 3e-3}, 0.5e-3, {{{0.1, 0.02}, {0.02, 0.1}}}};
  const auto d = stability_diagram(m, {0.0, 0.1, 41}, {0.0, 0.1, 41}, 2);
  ASSERT_FALSE(d.transitions.empty());
  for (const auto& t : d.transitions) {
    EXPECT_LT(t.from, t.to);
    EXPECT_TRUE(std::is_sorted(t.points.begin(), t.points.end()));
  }
}
