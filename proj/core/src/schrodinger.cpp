#include <algorithm>
#include <cmath>

#include "dotlab/constants.hpp"
#include "dotlab/dot_physics.hpp"
#include "dotlab/error.hpp"
#include "dotlab/tridiagonal.hpp"

namespace dotlab {

namespace {

// hbar^2 / (2 m_e) in eV nm^2.
double kinetic_prefactor_ev_nm2() {
  using namespace constants;
  return hbar * hbar / (2.0 * electron_mass) / elementary_charge / (nm * nm);
}

double position_element(const EigenSolution& s, std::size_t a, std::size_t b) {
  const auto& x = s.profile.x_nm;
  const auto& pa = s.wavefunctions[a];
  const auto& pb = s.wavefunctions[b];
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) acc += x[i] * pa[i] * pb[i];
  return acc * s.profile.spacing_nm();
}

}  // namespace

double EigenSolution::overlap(std::size_t a, std::size_t b) const {
  const auto& pa = wavefunctions.at(a);
  const auto& pb = wavefunctions.at(b);
  double acc = 0.0;
  for (std::size_t i = 0; i < pa.size(); ++i) acc += pa[i] * pb[i];
  return acc * profile.spacing_nm();
}

EigenSolution solve_schrodinger_1d(const PotentialProfile1D& profile, double effective_mass_me, int count) {
  profile.validate();
  if (count < 2) throw DomainError("at least two eigenstates are required");
  if (!(effective_mass_me > 0.0)) throw DomainError("effective mass must be positive");
  const std::size_t n = profile.x_nm.size();
  if (n < 200) throw DomainError("profile too coarse: " + std::to_string(n) + " nodes (need >= 200)");
  const std::size_t m = n - 2;  // end nodes are hard walls
  if (static_cast<std::size_t>(count) > m)
    throw DomainError("requested " + std::to_string(count) + " states from " + std::to_string(m) + " interior nodes");

  const double h = profile.spacing_nm();
  const double t = kinetic_prefactor_ev_nm2() / (effective_mass_me * h * h);
  std::vector<double> diag(m), off(m - 1, -t);
  for (std::size_t i = 0; i < m; ++i) diag[i] = 2.0 * t + profile.u_ev[i + 1];

  auto pairs = lowest_eigenpairs(diag, off, count);

  EigenSolution out;
  out.profile = profile;
  out.energies_ev = std::move(pairs.values);
  const double norm = 1.0 / std::sqrt(h);
  for (auto& v : pairs.vectors) {
    std::vector<double> psi(n, 0.0);
    double sum = 0.0;
    std::size_t peak = 0;
    for (std::size_t i = 0; i < m; ++i) {
      psi[i + 1] = v[i] * norm;
      sum += psi[i + 1];
      if (std::abs(psi[i + 1]) > std::abs(psi[peak])) peak = i + 1;
    }
    // Sign convention: positive area, or positive peak for odd states.
    const double ref = std::abs(sum) * h > 1e-6 ? sum : psi[peak];
    if (ref < 0.0)
      for (double& p : psi) p = -p;
    out.wavefunctions.push_back(std::move(psi));
  }
  return out;
}

LocalizedBasis maximally_localized_basis(const EigenSolution& eigs) {
  if (eigs.energies_ev.size() < 2 || eigs.wavefunctions.size() < 2) throw DomainError("need at least two eigenstates");
  const double x00 = position_element(eigs, 0, 0);
  const double x11 = position_element(eigs, 1, 1);
  const double x01 = position_element(eigs, 0, 1);

  // Rotation diagonalising [[x00, x01], [x01, x11]].
  const double theta = 0.5 * std::atan2(2.0 * x01, x00 - x11);
  const double c = std::cos(theta), s = std::sin(theta);
  // Columns of R: coefficients of (psi0, psi1) in each localised state.
  std::array<std::array<double, 2>, 2> r{{{c, -s}, {s, c}}};
  double xa = c * c * x00 + 2 * c * s * x01 + s * s * x11;
  double xb = s * s * x00 - 2 * c * s * x01 + c * c * x11;
  if (xa > xb) {
    std::swap(r[0][0], r[0][1]);
    std::swap(r[1][0], r[1][1]);
    std::swap(xa, xb);
  }

  const auto& prof = eigs.profile;
  const double h = prof.spacing_nm();
  if (xb - xa < h) throw DomainError("merged dots: localized centers closer than the grid spacing");
  // A barrier must separate the two centres.
  const double u_l = prof.value_at(xa), u_r = prof.value_at(xb);
  double barrier = -1e300;
  for (std::size_t i = 0; i < prof.x_nm.size(); ++i)
    if (prof.x_nm[i] > xa && prof.x_nm[i] < xb) barrier = std::max(barrier, prof.u_ev[i]);
  if (!(barrier > std::max(u_l, u_r))) throw DomainError("merged dots: no barrier between the localized centers");

  LocalizedBasis out;
  const std::size_t n = eigs.wavefunctions[0].size();
  out.left.resize(n);
  out.right.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.left[i] = r[0][0] * eigs.wavefunctions[0][i] + r[1][0] * eigs.wavefunctions[1][i];
    out.right[i] = r[0][1] * eigs.wavefunctions[0][i] + r[1][1] * eigs.wavefunctions[1][i];
  }
  const double e0 = eigs.energies_ev[0], e1 = eigs.energies_ev[1];
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) out.hamiltonian_ev[a][b] = r[0][a] * r[0][b] * e0 + r[1][a] * r[1][b] * e1;
  const double sym = 0.5 * (out.hamiltonian_ev[0][1] + out.hamiltonian_ev[1][0]);
  out.hamiltonian_ev[0][1] = out.hamiltonian_ev[1][0] = sym;
  out.center_left_nm = xa;
  out.center_right_nm = xb;
  out.tunnel_coupling_hz = std::abs(sym) * constants::ev_to_hz;
  if (eigs.energies_ev.size() >= 3) out.well_separated = (eigs.energies_ev[2] - e1) > 5.0 * (e1 - e0);

  // 2x2 reconstruction check.
  const double tr = out.hamiltonian_ev[0][0] + out.hamiltonian_ev[1][1];
  const double disc = std::hypot(0.5 * (out.hamiltonian_ev[0][0] - out.hamiltonian_ev[1][1]), sym);
  const double scale = std::max({1.0, std::abs(e0), std::abs(e1)});
  if (std::abs(0.5 * tr - disc - e0) > 1e-10 * scale || std::abs(0.5 * tr + disc - e1) > 1e-10 * scale)
    throw DomainError("localized Hamiltonian does not reproduce the two lowest energies");
  return out;
}

}  // namespace dotlab
