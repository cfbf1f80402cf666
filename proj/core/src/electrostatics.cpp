#include "dotlab/electrostatics.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "dotlab/constants.hpp"
#include "dotlab/error.hpp"

namespace dotlab {

namespace {

// Piecewise-constant permittivity profile of the stack along z.
class LayerProfile {
 public:
  explicit LayerProfile(const DeviceDescription& d) {
    double z = 0.0;
    for (const auto& l : d.stack) {
      z += l.thickness_nm;
      tops_.push_back(z);
      eps_.push_back(l.relative_permittivity);
    }
  }

  // Integral of f(eps(z)) over [a, b]; above the stack the top slab continues.
  template <class F>
  double integrate(double a, double b, F f) const {
    double total = 0.0;
    double lo = a;
    for (std::size_t k = 0; k < tops_.size() && lo < b; ++k) {
      const double top = (k + 1 == tops_.size()) ? std::max(b, tops_[k]) : tops_[k];
      if (top <= lo) continue;
      const double hi = std::min(b, top);
      total += (hi - lo) * f(eps_[k]);
      lo = hi;
    }
    return total;
  }

  double harmonic_mean(double a, double b) const {
    return (b - a) / integrate(a, b, [](double e) { return 1.0 / e; });
  }
  double arithmetic_mean(double a, double b) const {
    return integrate(a, b, [](double e) { return e; }) / (b - a);
  }
  double at(double z) const {
    for (std::size_t k = 0; k < tops_.size(); ++k)
      if (z < tops_[k]) return eps_[k];
    return eps_.back();
  }

 private:
  std::vector<double> tops_;
  std::vector<double> eps_;
};

double nanogate_pitch(const GateLayout& gates) {
  std::vector<double> centers;
  double widest = 0.0;
  for (const auto& g : gates) {
    widest = std::max(widest, g.x1_nm - g.x0_nm);
    if (g.metal_layer > 1) centers.push_back(g.center_nm());
  }
  if (centers.size() < 2) return widest;
  std::sort(centers.begin(), centers.end());
  std::vector<double> gaps;
  for (std::size_t k = 1; k < centers.size(); ++k) gaps.push_back(centers[k] - centers[k - 1]);
  std::nth_element(gaps.begin(), gaps.begin() + gaps.size() / 2, gaps.end());
  return gaps[gaps.size() / 2];
}

}  // namespace

double SimulationGrid::dirichlet_volts(int i, int j) const {
  const int code = dirichlet[index(i, j)];
  return code >= 1 ? gate_volts[static_cast<std::size_t>(code - 1)] : 0.0;
}

SimulationGrid SimulationGrid::with_voltages(const VoltageConfiguration& volts) const {
  SimulationGrid g = *this;
  for (std::size_t k = 0; k < gate_ids.size(); ++k) g.gate_volts[k] = volts.at(gate_ids[k]);
  return g;
}

SimulationGrid build_grid(const DeviceDescription& device, const GridResolution& res) {
  if (res.nx < 64 || res.nz < 32) throw DomainError("grid resolution below floor (nx >= 64, nz >= 32)");
  if (device.gates.empty()) throw DomainError("device has no gates");

  double gx0 = device.gates.front().x0_nm, gx1 = device.gates.front().x1_nm;
  for (const auto& g : device.gates) {
    gx0 = std::min(gx0, g.x0_nm);
    gx1 = std::max(gx1, g.x1_nm);
  }
  double x_min, x_max;
  if (res.x_range_nm) {
    std::tie(x_min, x_max) = *res.x_range_nm;
    if (!(x_min < x_max)) throw DomainError("empty lateral domain");
    const double slack = 1e-9 * (x_max - x_min);
    for (const auto& g : device.gates) {
      if (g.x0_nm < x_min - slack || g.x1_nm > x_max + slack) {
        throw DomainError("gate '" + g.id + "' span outside the simulation domain");
      }
    }
  } else {
    const double pad = res.lateral_padding_nm.value_or(3.0 * nanogate_pitch(device.gates));
    if (pad < 0.0) throw DomainError("lateral padding must be >= 0");
    x_min = gx0 - pad;
    x_max = gx1 + pad;
  }

  SimulationGrid grid;
  grid.nx = res.nx;
  grid.x_min_nm = x_min;
  grid.dx_nm = (x_max - x_min) / (res.nx - 1);

  const double height = device.stack_height_nm();
  const double z2 = device.two_deg_height_nm();
  const double dz_nominal = height / (res.nz - 1);
  const long k2 = std::max(1L, std::lround(z2 / dz_nominal));
  grid.dz_nm = z2 / static_cast<double>(k2);
  grid.two_deg_row = static_cast<int>(k2);
  grid.nz = static_cast<int>(std::lround(height / grid.dz_nm)) + 1;
  if (grid.two_deg_row >= grid.nz - 1) throw DomainError("2DEG plane cannot be aligned with an interior grid row");

  const LayerProfile layers(device);
  const double top = (grid.nz - 1) * grid.dz_nm;
  grid.row_permittivity.resize(grid.nz);
  grid.xlink_permittivity.resize(grid.nz);
  grid.zlink_permittivity.resize(grid.nz - 1);
  for (int j = 0; j < grid.nz; ++j) {
    const double z = grid.z_nm(j);
    grid.row_permittivity[j] = layers.at(std::min(z, top - 0.5 * grid.dz_nm));
    const double lo = std::max(0.0, z - 0.5 * grid.dz_nm);
    const double hi = std::min(top, z + 0.5 * grid.dz_nm);
    grid.xlink_permittivity[j] = layers.arithmetic_mean(lo, hi);
    if (j + 1 < grid.nz) grid.zlink_permittivity[j] = layers.harmonic_mean(z, z + grid.dz_nm);
  }

  grid.dirichlet.assign(static_cast<std::size_t>(grid.nx) * grid.nz, -1);
  for (int i = 0; i < grid.nx; ++i) grid.dirichlet[grid.index(i, 0)] = 0;

  for (std::size_t k = 0; k < device.gates.size(); ++k) {
    const auto& g = device.gates[k];
    grid.gate_ids.push_back(g.id);
    grid.gate_volts.push_back(device.voltages.at(g.id));
    const int row = static_cast<int>(std::lround(device.gate_plane_height_nm(g.metal_layer) / grid.dz_nm));
    if (row <= grid.two_deg_row || row >= grid.nz) throw DomainError("gate '" + g.id + "' plane falls outside the grid");
    const int i0 = static_cast<int>(std::ceil((g.x0_nm - x_min) / grid.dx_nm - 1e-9));
    const int i1 = static_cast<int>(std::floor((g.x1_nm - x_min) / grid.dx_nm + 1e-9));
    if (i1 < i0) throw DomainError("gate '" + g.id + "' is narrower than the grid spacing");
    for (int i = std::max(0, i0); i <= std::min(grid.nx - 1, i1); ++i) {
      auto& cell = grid.dirichlet[grid.index(i, row)];
      if (cell >= 1) {
        throw DomainError("gates '" + grid.gate_ids[static_cast<std::size_t>(cell - 1)] + "' and '" + g.id +
                          "' touch on the same grid row");
      }
      cell = static_cast<int>(k) + 1;
    }
  }
  return grid;
}

double thomas_fermi_capacitance(const ChargeModel& m) {
  using namespace constants;
  const double dos = m.valley_degeneracy * m.transverse_mass_me * electron_mass / (pi * hbar * hbar);  // 1/(J m^2)
  return -elementary_charge * elementary_charge * dos;
}

double thomas_fermi_density(double volts, const ChargeModel& m) {
  const double excess_ev = m.fermi_energy_ev + volts;
  if (!(excess_ev > 0.0)) return 0.0;
  return thomas_fermi_capacitance(m) * excess_ev;
}

// ---------------------------------------------------------------------------
// Poisson operator

struct PoissonSolver::Impl {
  SimulationGrid grid;
  std::vector<int> unknown;  // node -> unknown index or -1
  std::vector<int> node_of;  // unknown -> node
  struct Coupling {
    int unknown;
    int node;  // Dirichlet node
    double c;
  };
  std::vector<Coupling> boundary;
  Eigen::SparseMatrix<double> a;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>, Eigen::Lower, Eigen::AMDOrdering<int>> ldlt;

  double width(int i) const { return (i == 0 || i == grid.nx - 1) ? 0.5 * grid.dx_nm : grid.dx_nm; }
  double height(int j) const { return j == grid.nz - 1 ? 0.5 * grid.dz_nm : grid.dz_nm; }

  explicit Impl(const SimulationGrid& g) : grid(g) {
    const std::size_t nodes = static_cast<std::size_t>(g.nx) * g.nz;
    unknown.assign(nodes, -1);
    for (std::size_t n = 0; n < nodes; ++n) {
      if (g.dirichlet[n] < 0) {
        unknown[n] = static_cast<int>(node_of.size());
        node_of.push_back(static_cast<int>(n));
      }
    }
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(node_of.size() * 5);
    auto link = [&](int na, int nb, double c) {
      const int ua = unknown[na], ub = unknown[nb];
      if (ua >= 0) trip.emplace_back(ua, ua, c);
      if (ub >= 0) trip.emplace_back(ub, ub, c);
      if (ua >= 0 && ub >= 0) {
        trip.emplace_back(ua, ub, -c);
        trip.emplace_back(ub, ua, -c);
      } else if (ua >= 0) {
        boundary.push_back({ua, nb, c});
      } else if (ub >= 0) {
        boundary.push_back({ub, na, c});
      }
    };
    for (int j = 0; j < g.nz; ++j) {
      for (int i = 0; i < g.nx; ++i) {
        const int n = static_cast<int>(g.index(i, j));
        if (i + 1 < g.nx) link(n, n + 1, g.xlink_permittivity[j] * height(j) / g.dx_nm);
        if (j + 1 < g.nz) link(n, n + g.nx, g.zlink_permittivity[j] * width(i) / g.dz_nm);
      }
    }
    a.resize(static_cast<Eigen::Index>(node_of.size()), static_cast<Eigen::Index>(node_of.size()));
    a.setFromTriplets(trip.begin(), trip.end());
    ldlt.compute(a);
    if (ldlt.info() != Eigen::Success) throw ConvergenceError("Poisson factorisation failed", 0, 0.0);
  }

  Eigen::VectorXd rhs(std::span<const double> gate_volts, std::span<const double> sigma) const {
    Eigen::VectorXd b = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(node_of.size()));
    for (const auto& c : boundary) {
      const int code = grid.dirichlet[static_cast<std::size_t>(c.node)];
      const double v = code >= 1 ? gate_volts[static_cast<std::size_t>(code - 1)] : 0.0;
      b[c.unknown] += c.c * v;
    }
    if (!sigma.empty()) {
      const double scale = constants::nm / constants::vacuum_permittivity;
      for (int i = 0; i < grid.nx; ++i) {
        const int u = unknown[grid.index(i, grid.two_deg_row)];
        if (u >= 0) b[u] += sigma[static_cast<std::size_t>(i)] * width(i) * scale;
      }
    }
    return b;
  }

  PotentialField solve(std::span<const double> gate_volts, std::span<const double> sigma) const {
    if (gate_volts.size() != grid.gate_ids.size()) throw DomainError("gate voltage count does not match grid");
    if (!sigma.empty() && sigma.size() != static_cast<std::size_t>(grid.nx)) {
      throw DomainError("sheet charge must have one entry per grid column");
    }
    const Eigen::VectorXd b = rhs(gate_volts, sigma);
    Eigen::VectorXd v = ldlt.solve(b);
    const double scale = std::max(b.lpNorm<Eigen::Infinity>(), std::numeric_limits<double>::min());
    double residual = (a * v - b).lpNorm<Eigen::Infinity>() / scale;
    for (int refine = 0; refine < 3 && residual >= 1e-10; ++refine) {
      v += ldlt.solve(b - a * v);
      residual = (a * v - b).lpNorm<Eigen::Infinity>() / scale;
    }
    if (!(residual < 1e-10)) throw ConvergenceError("linear Poisson solve did not reach 1e-10 relative residual", 4, residual);

    PotentialField f;
    f.nx = grid.nx;
    f.nz = grid.nz;
    f.dx_nm = grid.dx_nm;
    f.dz_nm = grid.dz_nm;
    f.x_min_nm = grid.x_min_nm;
    f.two_deg_row = grid.two_deg_row;
    f.residual = residual;
    f.volts.resize(static_cast<std::size_t>(grid.nx) * grid.nz);
    for (std::size_t n = 0; n < f.volts.size(); ++n) {
      const int u = unknown[n];
      if (u >= 0) {
        f.volts[n] = v[u];
      } else {
        const int code = grid.dirichlet[n];
        f.volts[n] = code >= 1 ? gate_volts[static_cast<std::size_t>(code - 1)] : 0.0;
      }
    }
    return f;
  }
};

PoissonSolver::PoissonSolver(const SimulationGrid& grid) : impl_(std::make_unique<Impl>(grid)) {}
PoissonSolver::~PoissonSolver() = default;
PoissonSolver::PoissonSolver(PoissonSolver&&) noexcept = default;
PoissonSolver& PoissonSolver::operator=(PoissonSolver&&) noexcept = default;

const SimulationGrid& PoissonSolver::grid() const { return impl_->grid; }

PotentialField PoissonSolver::solve(std::span<const double> gate_volts, std::span<const double> sigma) const {
  return impl_->solve(gate_volts, sigma);
}

std::vector<double> PoissonSolver::row_response(int col) const {
  const auto& g = impl_->grid;
  std::vector<double> zero(g.gate_ids.size(), 0.0);
  std::vector<double> sigma(static_cast<std::size_t>(g.nx), 0.0);
  sigma[static_cast<std::size_t>(col)] = 1.0;
  const Eigen::VectorXd b = impl_->rhs(zero, sigma);
  const Eigen::VectorXd v = impl_->ldlt.solve(b);
  std::vector<double> row(static_cast<std::size_t>(g.nx));
  for (int i = 0; i < g.nx; ++i) row[static_cast<std::size_t>(i)] = v[impl_->unknown[g.index(i, g.two_deg_row)]];
  return row;
}

PotentialField solve_poisson(const SimulationGrid& grid, const ChargeSheet* charge) {
  PoissonSolver solver(grid);
  return solver.solve(grid.gate_volts, charge ? std::span<const double>(charge->sigma) : std::span<const double>{});
}

// ---------------------------------------------------------------------------
// Self-consistent Thomas-Fermi loop

void SolverSettings::validate() const {
  if (!(tolerance_v > 0.0)) throw DomainError("solver tolerance must be > 0");
  if (!(damping > 0.0 && damping <= 1.0)) throw DomainError("damping must lie in (0, 1]");
  if (max_iterations < 1) throw DomainError("max_iterations must be >= 1");
}

SelfConsistentSolver::SelfConsistentSolver(const SimulationGrid& grid, ChargeModel model)
    : poisson_(grid), model_(model), columns_(static_cast<std::size_t>(grid.nx)) {}

std::shared_ptr<const std::vector<double>> SelfConsistentSolver::response_column(int col) const {
  {
    std::lock_guard lock(cache_mutex_);
    if (auto c = columns_[static_cast<std::size_t>(col)]) return c;
  }
  auto computed = std::make_shared<const std::vector<double>>(poisson_.row_response(col));
  std::lock_guard lock(cache_mutex_);
  auto& slot = columns_[static_cast<std::size_t>(col)];
  if (!slot) slot = computed;
  return slot;
}

namespace {

std::vector<double> two_deg_row(const PotentialField& f) {
  return {f.volts.begin() + static_cast<std::ptrdiff_t>(f.two_deg_row) * f.nx,
          f.volts.begin() + static_cast<std::ptrdiff_t>(f.two_deg_row + 1) * f.nx};
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

bool stalled(const std::vector<double>& history) {
  constexpr std::size_t window = 10;
  if (history.size() <= window) return false;
  for (std::size_t k = history.size() - window; k < history.size(); ++k) {
    if (history[k] < history[k - 1]) return false;
  }
  return true;
}

}  // namespace

SelfConsistentResult SelfConsistentSolver::solve(std::span<const double> gate_volts, const SolverSettings& settings) const {
  settings.validate();
  return settings.method == SelfConsistentMethod::newton ? solve_newton(gate_volts, settings)
                                                         : solve_fixed_point(gate_volts, settings);
}

SelfConsistentResult SelfConsistentSolver::solve_fixed_point(std::span<const double> gate_volts,
                                                             const SolverSettings& settings) const {
  const int nx = poisson_.grid().nx;
  const double lambda = settings.damping;
  SelfConsistentResult out;
  out.charge.model = model_;
  std::vector<double> sigma(static_cast<std::size_t>(nx), 0.0);
  std::vector<double> previous;
  for (int k = 1; k <= settings.max_iterations; ++k) {
    PotentialField field = poisson_.solve(gate_volts, sigma);
    auto row = two_deg_row(field);
    if (!previous.empty()) {
      const double r = max_abs_diff(row, previous);
      out.residual_history.push_back(r);
      if (r < settings.tolerance_v) {
        out.field = std::move(field);
        out.charge.sigma = sigma;
        out.iterations = k;
        return out;
      }
      if (!std::isfinite(r) || r > 1e3) {
        throw ConvergenceError("self-consistent iteration diverged; reduce damping", static_cast<std::size_t>(k), r);
      }
      if (stalled(out.residual_history)) {
        std::ostringstream os;
        os << "oscillation detected in self-consistent iteration (residual non-decreasing over 10 iterations); "
              "try a damping smaller than "
           << lambda;
        throw ConvergenceError(os.str(), static_cast<std::size_t>(k), r);
      }
    }
    for (int i = 0; i < nx; ++i) {
      const auto s = static_cast<std::size_t>(i);
      sigma[s] = (1.0 - lambda) * sigma[s] + lambda * thomas_fermi_density(row[s], model_);
    }
    previous = std::move(row);
  }
  throw ConvergenceError("self-consistent iteration reached max_iterations", static_cast<std::size_t>(settings.max_iterations),
                         out.residual_history.empty() ? 0.0 : out.residual_history.back());
}

SelfConsistentResult SelfConsistentSolver::solve_newton(std::span<const double> gate_volts,
                                                        const SolverSettings& settings) const {
  const int nx = poisson_.grid().nx;
  const double cq = thomas_fermi_capacitance(model_);  // negative
  const double ef = model_.fermi_energy_ev;
  const auto base = two_deg_row(poisson_.solve(gate_volts, {}));

  SelfConsistentResult out;
  out.charge.model = model_;
  std::vector<double> v = base;
  for (int k = 1; k <= settings.max_iterations; ++k) {
    std::vector<int> active;
    for (int i = 0; i < nx; ++i)
      if (ef + v[static_cast<std::size_t>(i)] > 0.0) active.push_back(i);

    // Charge lives only on active columns: V = V0 + sum_a G[:,a] cq (V_a + ef).
    std::vector<double> next = base;
    if (!active.empty()) {
      const auto m = static_cast<Eigen::Index>(active.size());
      std::vector<std::shared_ptr<const std::vector<double>>> cols;
      cols.reserve(active.size());
      for (int c : active) cols.push_back(response_column(c));
      Eigen::MatrixXd jac(m, m);
      Eigen::VectorXd rhs(m);
      for (Eigen::Index r = 0; r < m; ++r) {
        const auto ir = static_cast<std::size_t>(active[static_cast<std::size_t>(r)]);
        rhs[r] = base[ir];
        for (Eigen::Index c = 0; c < m; ++c) {
          const double g = (*cols[static_cast<std::size_t>(c)])[ir];
          jac(r, c) = (r == c ? 1.0 : 0.0) - g * cq;
          rhs[r] += g * cq * ef;
        }
      }
      const Eigen::VectorXd va = jac.partialPivLu().solve(rhs);
      for (int i = 0; i < nx; ++i) {
        double s = 0.0;
        for (Eigen::Index c = 0; c < m; ++c) s += (*cols[static_cast<std::size_t>(c)])[static_cast<std::size_t>(i)] * cq * (va[c] + ef);
        next[static_cast<std::size_t>(i)] += s;
      }
    }
    const double r = max_abs_diff(next, v);
    out.residual_history.push_back(r);
    v = std::move(next);
    if (r < settings.tolerance_v) {
      out.charge.sigma.resize(static_cast<std::size_t>(nx));
      for (int i = 0; i < nx; ++i) out.charge.sigma[static_cast<std::size_t>(i)] = thomas_fermi_density(v[static_cast<std::size_t>(i)], model_);
      out.field = poisson_.solve(gate_volts, out.charge.sigma);
      out.iterations = k;
      return out;
    }
  }
  throw ConvergenceError("Newton self-consistent solve reached max_iterations", static_cast<std::size_t>(settings.max_iterations),
                         out.residual_history.back());
}

SelfConsistentResult solve_selfconsistent(const SimulationGrid& grid, const ChargeModel& model,
                                          const SolverSettings& settings) {
  SelfConsistentSolver solver(grid, model);
  return solver.solve(grid.gate_volts, settings);
}

// ---------------------------------------------------------------------------
// 1D profile

PotentialProfile1D potential_profile(const PotentialField& field) {
  PotentialProfile1D p;
  p.x_nm.resize(static_cast<std::size_t>(field.nx));
  p.u_ev.resize(static_cast<std::size_t>(field.nx));
  for (int i = 0; i < field.nx; ++i) {
    p.x_nm[static_cast<std::size_t>(i)] = field.x_min_nm + i * field.dx_nm;
    p.u_ev[static_cast<std::size_t>(i)] = -field.at(i, field.two_deg_row);
  }
  return p;
}

void PotentialProfile1D::validate() const {
  if (x_nm.size() != u_ev.size() || x_nm.size() < 3) throw DomainError("profile needs >= 3 matching x/U samples");
  const double h = spacing_nm();
  if (!(h > 0.0)) throw DomainError("profile spacing must be positive");
  for (std::size_t i = 1; i < x_nm.size(); ++i) {
    if (std::abs((x_nm[i] - x_nm[i - 1]) - h) > 1e-6 * h) throw DomainError("profile spacing must be uniform");
  }
  for (double u : u_ev)
    if (!std::isfinite(u)) throw DomainError("profile contains non-finite energies");
}

double PotentialProfile1D::value_at(double x) const {
  const double h = spacing_nm();
  const double t = (x - x_nm.front()) / h;
  if (t <= 0.0) return u_ev.front();
  const auto last = static_cast<double>(x_nm.size() - 1);
  if (t >= last) return u_ev.back();
  const auto k = static_cast<std::size_t>(t);
  const double f = t - static_cast<double>(k);
  return (1.0 - f) * u_ev[k] + f * u_ev[k + 1];
}

PotentialProfile1D PotentialProfile1D::resample(double x0, double x1, int nodes) const {
  if (nodes < 3 || !(x0 < x1)) throw DomainError("invalid resampling window");
  PotentialProfile1D out;
  out.x_nm.resize(static_cast<std::size_t>(nodes));
  out.u_ev.resize(static_cast<std::size_t>(nodes));
  const double h = (x1 - x0) / (nodes - 1);
  for (int k = 0; k < nodes; ++k) {
    const double x = x0 + k * h;
    out.x_nm[static_cast<std::size_t>(k)] = x;
    out.u_ev[static_cast<std::size_t>(k)] = value_at(x);
  }
  return out;
}

}  // namespace dotlab
