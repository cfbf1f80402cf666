#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "dotlab/device.hpp"
#include "dotlab/electrostatics.hpp"

namespace dotlab {

/// Eigenstates of the 1D single-particle Hamiltonian on a profile. Wavefunctions
/// are normalised so that sum |psi|^2 dx = 1 (units nm^-1/2).
struct EigenSolution {
  std::vector<double> energies_ev;
  std::vector<std::vector<double>> wavefunctions;
  PotentialProfile1D profile;

  double overlap(std::size_t a, std::size_t b) const;
};

EigenSolution solve_schrodinger_1d(const PotentialProfile1D& profile, double effective_mass_me, int count);

struct LocalizedBasis {
  std::vector<double> left;   // |L>
  std::vector<double> right;  // |R>
  std::array<std::array<double, 2>, 2> hamiltonian_ev{};  // in the {L, R} basis
  double center_left_nm = 0.0;
  double center_right_nm = 0.0;
  double tunnel_coupling_hz = 0.0;
  // False when E2 - E1 < 5 (E1 - E0): the two-level truncation is questionable.
  bool well_separated = true;

  double detuning_ev() const { return hamiltonian_ev[1][1] - hamiltonian_ev[0][0]; }
};

/// Rotates {psi0, psi1} to the eigenbasis of the position operator restricted
/// to their span. Throws DomainError("merged dots") when the two centres are
/// not separated by a potential barrier.
LocalizedBasis maximally_localized_basis(const EigenSolution& eigs);

enum class PointFlag { ok, merged, poorly_separated };
std::string_view to_string(PointFlag flag);

struct TunnelPoint {
  double v = 0.0;
  double tc_hz = 0.0;  // NaN when merged
  PointFlag flag = PointFlag::ok;
  double plunger_offset_v = 0.0;  // balancing correction on the right plunger
};

struct TunnelCouplingCurve {
  TuningStrategy strategy = TuningStrategy::conventional;
  std::string barrier;
  std::vector<TunnelPoint> points;
};

struct SweepOptions {
  GridResolution resolution{};
  SolverSettings solver{1e-6, 200, 0.1, SelfConsistentMethod::newton};
  int window_nodes = 600;
  int jobs = 1;
  // Re-tune the right plunger at every point so both well minima line up
  // (an ideal virtual barrier holding the pair at zero detuning).
  bool balance_detuning = true;
  double balance_tolerance_ev = 1e-5;
};

/// For each barrier increment v (added to the configured barrier voltage):
/// self-consistent solve -> 2DEG profile -> eigenstates of the dot pair that the
/// barrier separates -> localisation -> t_c.
TunnelCouplingCurve tunnel_coupling_sweep(const DeviceDescription& device, TuningStrategy strategy,
                                          const std::string& barrier_gate, const std::vector<double>& v_values,
                                          const SweepOptions& options = {});

/// Lateral window [x0, x1] enclosing the two dots separated by `barrier` (role label or id).
std::pair<double, double> dot_pair_window(const GateLayout& gates, const std::string& barrier);

struct HubbardParams {
  double t_hz = 0.0;
  double u_hz = 1e9;
  double detuning_hz = 0.0;
};

/// Two-site Hubbard exchange J = 4 t^2 U / (U^2 - Delta^2).
double exchange_from_hubbard(const HubbardParams& p);

struct SlopeWindow {
  double v_min = -1e300;
  double v_max = 1e300;
};

/// Least-squares slope of log10(t_c) against v over the window, decades per volt.
double slope_dec_per_volt(const TunnelCouplingCurve& curve, SlopeWindow window = {});

}  // namespace dotlab
