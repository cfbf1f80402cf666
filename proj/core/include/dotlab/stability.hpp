#pragma once

#include <array>
#include <utility>
#include <vector>

namespace dotlab {

/// Constant-interaction model of a double dot driven by two gates.
struct StabilityModel {
  std::array<double, 2> charging_ev{};           // E_C,i
  double mutual_ev = 0.0;                        // E_Cm
  std::array<std::array<double, 2>, 2> lever{};  // alpha[dot][gate]

  void validate() const;
  double energy_ev(int n1, int n2, double v1, double v2) const;
};

struct VoltageRange {
  double min = 0.0;
  double max = 0.0;
  int count = 1;
  double at(int k) const { return count == 1 ? min : min + (max - min) * k / (count - 1); }
};

using Occupation = std::pair<int, int>;

struct TransitionLine {
  Occupation from;
  Occupation to;
  std::vector<std::pair<double, double>> points;  // (v1, v2), ordered along v1 then v2
};

struct StabilityDiagram {
  VoltageRange gate1;
  VoltageRange gate2;
  std::vector<Occupation> occupation;  // row-major: index = k2 * gate1.count + k1
  std::vector<double> energy_ev;
  std::vector<TransitionLine> transitions;

  const Occupation& at(int k1, int k2) const { return occupation[static_cast<std::size_t>(k2) * gate1.count + k1]; }
};

/// Ground-state occupation map; ties resolve to the lexicographically smallest (n1, n2).
StabilityDiagram stability_diagram(const StabilityModel& model, VoltageRange gate1, VoltageRange gate2, int max_electrons);

}  // namespace dotlab
