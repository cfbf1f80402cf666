#include "dotlab/dot_physics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dotlab/error.hpp"
#include "parallel.hpp"

namespace dotlab {

std::string_view to_string(PointFlag flag) {
  switch (flag) {
    case PointFlag::ok: return "ok";
    case PointFlag::merged: return "merged";
    case PointFlag::poorly_separated: return "poorly_separated";
  }
  return "?";
}

std::pair<double, double> dot_pair_window(const GateLayout& gates, const std::string& barrier) {
  std::vector<const GateElectrode*> nano;
  for (const auto& g : gates)
    if (g.metal_layer > 1) nano.push_back(&g);
  std::sort(nano.begin(), nano.end(), [](auto* a, auto* b) { return a->center_nm() < b->center_nm(); });
  std::size_t b = nano.size();
  for (std::size_t i = 0; i < nano.size(); ++i)
    if (nano[i]->id == barrier || nano[i]->label == barrier) b = i;
  if (b == nano.size()) throw ConfigError("barrier", "unknown nanogate '" + barrier + "'");
  if (nano[b]->role != GateRole::barrier) throw DomainError("gate '" + barrier + "' is not a barrier in this tuning");
  if (b == 0 || b + 1 >= nano.size() || nano[b - 1]->role != GateRole::plunger || nano[b + 1]->role != GateRole::plunger)
    throw DomainError("barrier '" + barrier + "' does not separate two dots");
  const auto* lp = nano[b - 1];
  const auto* rp = nano[b + 1];
  const double x0 = b >= 2 ? nano[b - 2]->center_nm() : lp->x0_nm - (lp->x1_nm - lp->x0_nm);
  const double x1 = b + 2 < nano.size() ? nano[b + 2]->center_nm() : rp->x1_nm + (rp->x1_nm - rp->x0_nm);
  return {x0, x1};
}

TunnelCouplingCurve tunnel_coupling_sweep(const DeviceDescription& device, TuningStrategy strategy,
                                          const std::string& barrier_gate, const std::vector<double>& v_values,
                                          const SweepOptions& options) {
  if (v_values.empty()) throw DomainError("empty barrier sweep");
  for (std::size_t i = 1; i < v_values.size(); ++i)
    if (!(v_values[i] > v_values[i - 1])) throw DomainError("barrier sweep values must be strictly increasing");
  options.solver.validate();
  if (options.window_nodes < 200) throw DomainError("window_nodes must be >= 200");

  const DeviceDescription dev = with_strategy(device, strategy);
  const GateElectrode& barrier = dev.gate(barrier_gate);
  const auto window = dot_pair_window(dev.gates, barrier.id);
  const double base_v = dev.voltages.at(barrier.id);

  // Every point passes the breakdown check before any solve starts.
  std::vector<std::vector<double>> gate_volts(v_values.size());
  const SimulationGrid grid = build_grid(dev, options.resolution);
  for (std::size_t k = 0; k < v_values.size(); ++k) {
    VoltageConfiguration volts = dev.voltages;
    volts.set(barrier.id, base_v + v_values[k]);
    volts.check_breakdown(dev.limits.breakdown_v);
    for (const auto& id : grid.gate_ids) gate_volts[k].push_back(volts.at(id));
  }

  const SelfConsistentSolver solver(grid, dev.charge_model);
  TunnelCouplingCurve curve;
  curve.strategy = strategy;
  curve.barrier = barrier.label;
  curve.points.resize(v_values.size());

  // Right plunger of the pair, used for balancing.
  std::size_t right_plunger = grid.gate_ids.size();
  {
    const double xb = barrier.center_nm();
    double best = 1e300;
    for (const auto& g : dev.gates) {
      if (g.role != GateRole::plunger || g.center_nm() <= xb) continue;
      if (g.center_nm() - xb < best) {
        best = g.center_nm() - xb;
        right_plunger = static_cast<std::size_t>(
            std::find(grid.gate_ids.begin(), grid.gate_ids.end(), g.id) - grid.gate_ids.begin());
      }
    }
  }

  detail::parallel_for(v_values.size(), options.jobs, [&](std::size_t k) {
    auto window_profile = [&](double offset) {
      auto volts = gate_volts[k];
      volts[right_plunger] += offset;
      const auto sc = solver.solve(volts, options.solver);
      return potential_profile(sc.field).resample(window.first, window.second, options.window_nodes);
    };
    // Difference of the two well minima (left - right), eV.
    auto imbalance = [&](const PotentialProfile1D& prof) {
      double left = 1e300, right = 1e300;
      for (std::size_t i = 0; i < prof.x_nm.size(); ++i) {
        if (prof.x_nm[i] < barrier.center_nm()) left = std::min(left, prof.u_ev[i]);
        else right = std::min(right, prof.u_ev[i]);
      }
      return left - right;
    };

    double offset = 0.0;
    auto profile = window_profile(offset);
    if (options.balance_detuning) {
      double d0 = imbalance(profile);
      double o_prev = 0.0, d_prev = d0;
      double o = -d0 / 0.1;  // first guess: lever arm 0.1 eV/V, right well moves down for positive offset
      o = std::clamp(o, -0.5, 0.5);
      for (int it = 0; it < 12 && std::abs(d0) > options.balance_tolerance_ev; ++it) {
        auto trial = window_profile(o);
        const double d = imbalance(trial);
        profile = std::move(trial);
        offset = o;
        d0 = d;
        if (std::abs(d) <= options.balance_tolerance_ev) break;
        const double slope = (d - d_prev) / (o - o_prev);
        o_prev = o;
        d_prev = d;
        if (!(std::abs(slope) > 1e-9)) break;
        o = std::clamp(o - d / slope, -0.5, 0.5);
      }
      auto volts = gate_volts[k];
      volts[right_plunger] += offset;
      VoltageConfiguration check;
      for (std::size_t g = 0; g < volts.size(); ++g) check.set(grid.gate_ids[g], volts[g]);
      check.check_breakdown(dev.limits.breakdown_v);
    }

    const auto eigs = solve_schrodinger_1d(profile, dev.charge_model.transverse_mass_me, 3);
    TunnelPoint p{v_values[k], 0.0, PointFlag::ok, offset};
    try {
      const auto loc = maximally_localized_basis(eigs);
      p.tc_hz = loc.tunnel_coupling_hz;
      if (!loc.well_separated) p.flag = PointFlag::poorly_separated;
    } catch (const DomainError&) {
      p.tc_hz = std::numeric_limits<double>::quiet_NaN();
      p.flag = PointFlag::merged;
    }
    curve.points[k] = p;
  });
  return curve;
}

double exchange_from_hubbard(const HubbardParams& p) {
  if (!(p.u_hz > 0.0)) throw DomainError("Hubbard U must be positive");
  if (!(std::abs(p.detuning_hz) < p.u_hz)) throw DomainError("|detuning| must be below U");
  return 4.0 * p.t_hz * p.t_hz * p.u_hz / (p.u_hz * p.u_hz - p.detuning_hz * p.detuning_hz);
}

double slope_dec_per_volt(const TunnelCouplingCurve& curve, SlopeWindow window) {
  std::vector<double> xs, ys;
  for (const auto& p : curve.points) {
    if (p.v < window.v_min || p.v > window.v_max) continue;
    if (p.flag == PointFlag::merged || !(p.tc_hz > 0.0)) throw DomainError("t_c must be positive inside the slope window");
    xs.push_back(p.v);
    ys.push_back(std::log10(p.tc_hz));
  }
  if (xs.size() < 3) throw DomainError("slope needs at least 3 points in the window");
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  if (!(sxx > 0.0)) throw DomainError("slope window has no voltage spread");
  return sxy / sxx;
}

}  // namespace dotlab
