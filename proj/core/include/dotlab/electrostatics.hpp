#pragma once

#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dotlab/device.hpp"

namespace dotlab {

struct GridResolution {
  int nx = 400;
  int nz = 160;
  // Lateral padding beyond the outermost gate; defaults to three nanogate pitches.
  std::optional<double> lateral_padding_nm;
  // Explicit lateral extent [x_min, x_max]; overrides padding. Gates must fit inside.
  std::optional<std::pair<double, double>> x_range_nm;
};

/// Node-centred finite-volume grid of the x-z cross-section.
/// Node (i, j) sits at x = x_min + i*dx, z = j*dz (z = 0 is the grounded bottom).
struct SimulationGrid {
  int nx = 0;
  int nz = 0;
  double dx_nm = 0.0;
  double dz_nm = 0.0;
  double x_min_nm = 0.0;
  int two_deg_row = 0;

  // Relative permittivity sampled at node rows (laterally uniform stack).
  std::vector<double> row_permittivity;
  // Effective permittivity of the vertical link between rows j and j+1
  // (length-weighted harmonic mean, exact for layered media).
  std::vector<double> zlink_permittivity;
  // Effective permittivity of horizontal links on row j (arithmetic mean
  // over the row's control-volume height).
  std::vector<double> xlink_permittivity;

  // Dirichlet mask: -1 free, 0 grounded substrate, k >= 1 gate k-1.
  std::vector<int> dirichlet;
  std::vector<std::string> gate_ids;
  std::vector<double> gate_volts;

  std::size_t index(int i, int j) const { return static_cast<std::size_t>(j) * nx + i; }
  double x_nm(int i) const { return x_min_nm + i * dx_nm; }
  double z_nm(int j) const { return j * dz_nm; }
  double permittivity(int i, int j) const { (void)i; return row_permittivity[j]; }
  bool is_dirichlet(int i, int j) const { return dirichlet[index(i, j)] >= 0; }
  double dirichlet_volts(int i, int j) const;
  /// Same geometry and mask, different gate voltages.
  SimulationGrid with_voltages(const VoltageConfiguration& volts) const;
};

SimulationGrid build_grid(const DeviceDescription& device, const GridResolution& resolution = {});

/// Electrostatic potential in volts on every grid node.
struct PotentialField {
  int nx = 0;
  int nz = 0;
  double dx_nm = 0.0;
  double dz_nm = 0.0;
  double x_min_nm = 0.0;
  int two_deg_row = 0;
  std::vector<double> volts;
  double residual = 0.0;  // max-norm residual of the linear system, volts-equivalent

  double at(int i, int j) const { return volts[static_cast<std::size_t>(j) * nx + i]; }
};

/// Areal charge density on the 2DEG row, C/m^2, one value per column.
struct ChargeSheet {
  std::vector<double> sigma;
  ChargeModel model;
};

/// Thomas-Fermi sheet density for a local potential `volts`.
/// sigma = -e * g_v m_t / (pi hbar^2) * (E_F + eV) for E_F + eV > 0, else 0.
double thomas_fermi_density(double volts, const ChargeModel& model);
/// d sigma / dV where charge is present (C/m^2/V, negative).
double thomas_fermi_capacitance(const ChargeModel& model);

/// Factorised Poisson operator for one grid geometry. Reusable across gate
/// voltages and sheet charges; const member functions are thread-safe.
class PoissonSolver {
 public:
  explicit PoissonSolver(const SimulationGrid& grid);
  ~PoissonSolver();
  PoissonSolver(PoissonSolver&&) noexcept;
  PoissonSolver& operator=(PoissonSolver&&) noexcept;

  /// `sigma` may be empty (no charge) or hold grid.nx values.
  PotentialField solve(std::span<const double> gate_volts, std::span<const double> sigma) const;
  /// 2DEG-row potential produced by a unit sheet charge (1 C/m^2) in column `col`, all gates grounded.
  std::vector<double> row_response(int col) const;

  const SimulationGrid& grid() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

PotentialField solve_poisson(const SimulationGrid& grid, const ChargeSheet* charge = nullptr);

enum class SelfConsistentMethod { damped_fixed_point, newton };

struct SolverSettings {
  double tolerance_v = 1e-6;
  int max_iterations = 500;
  double damping = 0.1;
  SelfConsistentMethod method = SelfConsistentMethod::damped_fixed_point;
  void validate() const;
};

struct SelfConsistentResult {
  PotentialField field;
  ChargeSheet charge;
  int iterations = 0;
  std::vector<double> residual_history;  // max |V_{k+1} - V_k| on the 2DEG row
};

/// Self-consistent Poisson / Thomas-Fermi solve.
///
/// damped_fixed_point: sigma_{k+1} = (1-lambda) sigma_k + lambda TF(V_k),
///   V_k = Poisson(sigma_k), sigma_0 = 0, stop when the 2DEG-row update drops
///   below tolerance. Diverges when the 2DEG quantum capacitance dominates the
///   gate capacitance unless lambda < 2 / (1 + C_q / C_geo).
/// newton: active-set Newton on the 2DEG row (the TF law is piecewise linear),
///   converging in a handful of iterations regardless of C_q / C_geo.
class SelfConsistentSolver {
 public:
  SelfConsistentSolver(const SimulationGrid& grid, ChargeModel model);
  SelfConsistentResult solve(std::span<const double> gate_volts, const SolverSettings& settings) const;
  const PoissonSolver& poisson() const { return poisson_; }

 private:
  SelfConsistentResult solve_fixed_point(std::span<const double> gate_volts, const SolverSettings& settings) const;
  SelfConsistentResult solve_newton(std::span<const double> gate_volts, const SolverSettings& settings) const;
  // Row response to a unit sheet charge in column `col`, computed on first use.
  std::shared_ptr<const std::vector<double>> response_column(int col) const;

  PoissonSolver poisson_;
  ChargeModel model_;
  mutable std::mutex cache_mutex_;
  mutable std::vector<std::shared_ptr<const std::vector<double>>> columns_;
};

SelfConsistentResult solve_selfconsistent(const SimulationGrid& grid, const ChargeModel& model,
                                          const SolverSettings& settings = {});

struct PotentialProfile1D {
  std::vector<double> x_nm;  // uniform spacing
  std::vector<double> u_ev;  // electron potential energy

  double spacing_nm() const { return x_nm.size() > 1 ? x_nm[1] - x_nm[0] : 0.0; }
  void validate() const;
  /// Linear-interpolated sub-window [x0, x1] resampled on `nodes` points.
  PotentialProfile1D resample(double x0_nm, double x1_nm, int nodes) const;
  double value_at(double x_nm) const;
};

/// U(x) = -e V(x, z_2DEG), in eV.
PotentialProfile1D potential_profile(const PotentialField& field);

}  // namespace dotlab
