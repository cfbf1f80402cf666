#include "dotlab/stability.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "dotlab/error.hpp"

namespace dotlab {

void StabilityModel::validate() const {
  for (double ec : charging_ev)
    if (!(ec > 0.0)) throw DomainError("charging energies must be positive");
  if (!(mutual_ev >= 0.0) || !(mutual_ev < std::min(charging_ev[0], charging_ev[1])))
    throw DomainError("mutual charging energy must satisfy 0 <= E_Cm < min E_C");
  for (const auto& row : lever)
    for (double a : row)
      if (!(a >= 0.0 && a <= 1.0)) throw DomainError("lever arms must lie in [0, 1]");
}

// Energies in eV with voltages in volts: e * alpha * V is alpha * V eV.
double StabilityModel::energy_ev(int n1, int n2, double v1, double v2) const {
  const double mu1 = lever[0][0] * v1 + lever[0][1] * v2;
  const double mu2 = lever[1][0] * v1 + lever[1][1] * v2;
  return 0.5 * charging_ev[0] * n1 * n1 + 0.5 * charging_ev[1] * n2 * n2 + mutual_ev * n1 * n2 - n1 * mu1 - n2 * mu2;
}

StabilityDiagram stability_diagram(const StabilityModel& model, VoltageRange gate1, VoltageRange gate2, int max_electrons) {
  model.validate();
  if (max_electrons < 1) throw DomainError("max_electrons must be >= 1");
  for (const auto* r : {&gate1, &gate2}) {
    if (r->count < 1) throw DomainError("voltage range needs at least one point");
    if (!std::isfinite(r->min) || !std::isfinite(r->max)) throw DomainError("voltage range must be finite");
  }

  StabilityDiagram out;
  out.gate1 = gate1;
  out.gate2 = gate2;
  const std::size_t total = static_cast<std::size_t>(gate1.count) * gate2.count;
  out.occupation.resize(total);
  out.energy_ev.resize(total);
  for (int k2 = 0; k2 < gate2.count; ++k2) {
    const double v2 = gate2.at(k2);
    for (int k1 = 0; k1 < gate1.count; ++k1) {
      const double v1 = gate1.at(k1);
      Occupation best{0, 0};
      double e_best = model.energy_ev(0, 0, v1, v2);
      // Strict comparison in lexicographic scan order keeps the smallest (n1, n2) on ties.
      for (int n1 = 0; n1 <= max_electrons; ++n1) {
        for (int n2 = 0; n2 <= max_electrons; ++n2) {
          const double e = model.energy_ev(n1, n2, v1, v2);
          if (e < e_best) {
            e_best = e;
            best = {n1, n2};
          }
        }
      }
      const std::size_t idx = static_cast<std::size_t>(k2) * gate1.count + k1;
      out.occupation[idx] = best;
      out.energy_ev[idx] = e_best;
    }
  }

  // Transition segments: midpoints between neighbouring pixels of different occupation.
  std::map<std::pair<Occupation, Occupation>, std::vector<std::pair<double, double>>> lines;
  auto add = [&](const Occupation& a, const Occupation& b, double v1, double v2) {
    auto key = a < b ? std::make_pair(a, b) : std::make_pair(b, a);
    lines[key].emplace_back(v1, v2);
  };
  for (int k2 = 0; k2 < gate2.count; ++k2) {
    for (int k1 = 0; k1 < gate1.count; ++k1) {
      const auto& here = out.at(k1, k2);
      if (k1 + 1 < gate1.count && out.at(k1 + 1, k2) != here)
        add(here, out.at(k1 + 1, k2), 0.5 * (gate1.at(k1) + gate1.at(k1 + 1)), gate2.at(k2));
      if (k2 + 1 < gate2.count && out.at(k1, k2 + 1) != here)
        add(here, out.at(k1, k2 + 1), gate1.at(k1), 0.5 * (gate2.at(k2) + gate2.at(k2 + 1)));
    }
  }
  for (auto& [key, pts] : lines) {
    std::sort(pts.begin(), pts.end());
    out.transitions.push_back({key.first, key.second, std::move(pts)});
  }
  return out;
}

}  // namespace dotlab
