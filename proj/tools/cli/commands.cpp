#include <cmath>
#include <fstream>
#include <iostream>

#include "context.hpp"
#include "dotlab/calibration.hpp"
#include "dotlab/dot_physics.hpp"
#include "dotlab/electrostatics.hpp"
#include "dotlab/error.hpp"
#include "dotlab/stability.hpp"

namespace dotlab::cli {

using nlohmann::json;

namespace {

using Handlers = std::vector<std::pair<CLI::App*, Handler>>;

SpinParams spin_params(const DeviceDescription& device) {
  if (!device.spin) throw ConfigError("spin", "config has no spin block");
  return *device.spin;
}

// Overrides applied on top of the config's spin block.
struct SpinOverrides {
  std::optional<double> rabi_hz;
  std::optional<double> snr;
};

void add_spin_overrides(CLI::App* sub, SpinOverrides& o) {
  sub->add_option("--rabi", o.rabi_hz, "Rabi frequency in Hz (overrides spin.rabi_hz)");
  sub->add_option("--snr", o.snr, "Readout SNR (overrides spin.readout_snr)");
}

SpinParams apply(SpinParams p, const SpinOverrides& o) {
  if (o.rabi_hz) p.rabi_hz = *o.rabi_hz;
  if (o.snr) p.readout_snr = *o.snr;
  return p;
}

std::vector<double> range_option(const std::string& text, const char* field) {
  try {
    return parse_list(text, 3);
  } catch (const ConfigError&) {
    throw ConfigError(field, "expected min,max,count");
  }
}

VoltageRange voltage_range(const std::string& text, const char* field) {
  const auto r = range_option(text, field);
  if (r[2] < 1 || r[2] != std::floor(r[2])) throw ConfigError(field, "count must be a positive integer");
  return {r[0], r[1], static_cast<int>(r[2])};
}

CsvTable tunnel_table(const TunnelCouplingCurve& curve) {
  CsvTable t{{"v_volts", "tc_hz", "flag", "plunger_offset_v"}, {}};
  for (const auto& p : curve.points)
    t.add_row({format_number(p.v), format_number(p.tc_hz), std::string(to_string(p.flag)), format_number(p.plunger_offset_v)});
  return t;
}

json curve_summary(const TunnelCouplingCurve& curve) {
  json doc;
  doc["barrier"] = curve.barrier;
  bool all_ok = true;
  for (const auto& p : curve.points) all_ok = all_ok && p.flag != PointFlag::merged;
  double slope = NAN;
  if (all_ok && curve.points.size() >= 3) slope = slope_dec_per_volt(curve);
  doc["slope_dec_per_v"] = number(slope);
  bool monotone = all_ok;
  for (std::size_t k = 1; monotone && k < curve.points.size(); ++k)
    monotone = curve.points[k].tc_hz > curve.points[k - 1].tc_hz;
  doc["monotone_increasing"] = monotone;
  return doc;
}

}  // namespace

// Shared with reproduce-figure 2c.
json run_tunnel_sweeps(Context& ctx, const DeviceDescription& device, const std::vector<TuningStrategy>& strategies,
                       const std::string& barrier, const std::vector<double>& v, const SweepOptions& options) {
  json summary;
  summary["barrier"] = barrier;
  json curves = json::object();
  for (const auto s : strategies) {
    const auto curve = tunnel_coupling_sweep(device, s, barrier, v, options);
    const std::string name(to_string(s));
    ctx.write_csv("tunnel_coupling_" + name + ".csv", tunnel_table(curve));
    curves[name] = curve_summary(curve);
  }
  summary["strategies"] = curves;
  if (curves.contains("conventional") && curves.contains("interchanged")) {
    const auto& c = curves["conventional"]["slope_dec_per_v"];
    const auto& i = curves["interchanged"]["slope_dec_per_v"];
    summary["slope_ratio"] = c.is_number() && i.is_number() ? number(i.get<double>() / c.get<double>()) : json(nullptr);
  }
  return summary;
}

namespace {

void simulate_potential(CLI::App& app, Common& common, Handlers& handlers) {
  auto* sub = app.add_subcommand("simulate-potential", "Self-consistent gate electrostatics; writes the 2DEG potential");
  add_common(sub, common, false);
  sub->add_option("--config,-c", common.config, "Device JSON")->required();
  struct Opts {
    std::string strategy;
    GridResolution res;
    SolverSettings solver{1e-6, 200, 0.1, SelfConsistentMethod::newton};
    std::string method = "newton";
    bool field = false;
  };
  auto o = std::make_shared<Opts>();
  sub->add_option("--strategy", o->strategy, "conventional or interchanged (default: config strategy)");
  sub->add_option("--nx", o->res.nx, "Lateral grid nodes");
  sub->add_option("--nz", o->res.nz, "Vertical grid nodes");
  sub->add_option("--method", o->method, "newton or fixed-point")->check(CLI::IsMember({"newton", "fixed-point"}));
  sub->add_option("--damping", o->solver.damping, "Fixed-point mixing factor");
  sub->add_option("--tolerance", o->solver.tolerance_v, "Convergence tolerance in volts");
  sub->add_option("--max-iterations", o->solver.max_iterations, "Iteration cap");
  sub->add_flag("--field", o->field, "Also write the full 2D field");
  handlers.emplace_back(sub, [o](Context& ctx) {
    auto device = ctx.device();
    if (!o->strategy.empty()) device = with_strategy(device, parse_strategy(o->strategy));
    device.voltages.check_breakdown(device.limits.breakdown_v);
    o->solver.method = o->method == "newton" ? SelfConsistentMethod::newton : SelfConsistentMethod::damped_fixed_point;
    const auto grid = build_grid(device, o->res);
    const auto result = solve_selfconsistent(grid, device.charge_model, o->solver);
    const auto profile = potential_profile(result.field);
    CsvTable t{{"x_nm", "U_eV", "sigma_c_per_m2"}, {}};
    for (std::size_t i = 0; i < profile.x_nm.size(); ++i)
      t.add_row({format_number(profile.x_nm[i]), format_number(profile.u_ev[i]), format_number(result.charge.sigma[i])});
    ctx.write_csv("potential_2deg.csv", t);
    if (o->field) {
      const auto& f = result.field;
      CsvTable ft{{"x_nm", "z_nm", "v_volts"}, {}};
      for (int j = 0; j < f.nz; ++j)
        for (int i = 0; i < f.nx; ++i)
          ft.add_row({format_number(f.x_min_nm + i * f.dx_nm), format_number(j * f.dz_nm), format_number(f.at(i, j))});
      ctx.write_csv("potential_field.csv", ft);
    }
    json s;
    s["strategy"] = std::string(to_string(device.strategy));
    s["method"] = o->method;
    s["iterations"] = result.iterations;
    s["final_residual_v"] = number(result.residual_history.empty() ? 0.0 : result.residual_history.back());
    s["residual_history_v"] = result.residual_history;
    s["poisson_residual"] = result.field.residual;
    s["grid"] = {{"nx", grid.nx}, {"nz", grid.nz}, {"dx_nm", grid.dx_nm}, {"dz_nm", grid.dz_nm}, {"x_min_nm", grid.x_min_nm}};
    ctx.write_json("potential_summary.json", s);
  });
}

void sweep_tunnel(CLI::App& app, Common& common, Handlers& handlers) {
  auto* sub = app.add_subcommand("sweep-tunnel-coupling", "Tunnel coupling against a barrier-gate increment");
  add_common(sub, common, false);
  sub->add_option("--config,-c", common.config, "Device JSON")->required();
  struct Opts {
    std::string strategy = "both";
    std::string barrier = "B3";
    double vmin = 0.0, vmax = 0.3;
    int points = 7;
    SweepOptions sweep;
    bool no_balance = false;
  };
  auto o = std::make_shared<Opts>();
  sub->add_option("--strategy", o->strategy, "conventional, interchanged or both")
      ->check(CLI::IsMember({"conventional", "interchanged", "both"}));
  sub->add_option("--barrier", o->barrier, "Barrier gate (role label or id)");
  sub->add_option("--vmin", o->vmin, "First barrier increment (V)");
  sub->add_option("--vmax", o->vmax, "Last barrier increment (V)");
  sub->add_option("--points", o->points, "Number of increments")->check(CLI::PositiveNumber);
  sub->add_option("--nx", o->sweep.resolution.nx, "Lateral grid nodes");
  sub->add_option("--nz", o->sweep.resolution.nz, "Vertical grid nodes");
  sub->add_flag("--no-balance", o->no_balance, "Keep plungers fixed instead of holding the pair at zero detuning");
  handlers.emplace_back(sub, [o](Context& ctx) {
    const auto device = ctx.device();
    std::vector<TuningStrategy> strategies;
    if (o->strategy == "both")
      strategies = {TuningStrategy::conventional, TuningStrategy::interchanged};
    else
      strategies = {parse_strategy(o->strategy)};
    o->sweep.jobs = ctx.common().jobs;
    o->sweep.balance_detuning = !o->no_balance;
    const auto summary =
        run_tunnel_sweeps(ctx, device, strategies, o->barrier, linspace(o->vmin, o->vmax, o->points), o->sweep);
    ctx.write_json("tunnel_coupling_summary.json", summary);
  });
}

void stability(CLI::App& app, Common& common, Handlers& handlers) {
  auto* sub = app.add_subcommand("stability-diagram", "Constant-interaction double-dot charge stability map");
  add_common(sub, common, false);
  struct Opts {
    std::string ec = "3e-3,3e-3";
    double ecm = 0.5e-3;
    std::string lever = "0.1,0.02,0.02,0.1";
    std::string v1 = "0,0.2,101";
    std::string v2 = "0,0.2,101";
    int max_electrons = 4;
  };
  auto o = std::make_shared<Opts>();
  sub->add_option("--ec", o->ec, "Charging energies E_C1,E_C2 (eV)");
  sub->add_option("--ecm", o->ecm, "Mutual charging energy (eV)");
  sub->add_option("--lever", o->lever, "Lever arms a11,a12,a21,a22 (dot, gate)");
  sub->add_option("--v1", o->v1, "Gate 1 range min,max,count");
  sub->add_option("--v2", o->v2, "Gate 2 range min,max,count");
  sub->add_option("--max-electrons", o->max_electrons, "Largest occupation per dot")->check(CLI::NonNegativeNumber);
  handlers.emplace_back(sub, [o](Context& ctx) {
    StabilityModel m;
    const auto ec = parse_list(o->ec, 2);
    const auto lv = parse_list(o->lever, 4);
    m.charging_ev = {ec[0], ec[1]};
    m.mutual_ev = o->ecm;
    m.lever = {{{lv[0], lv[1]}, {lv[2], lv[3]}}};
    const auto d = stability_diagram(m, voltage_range(o->v1, "v1"), voltage_range(o->v2, "v2"), o->max_electrons);
    CsvTable t{{"v1", "v2", "n1", "n2"}, {}};
    for (int k2 = 0; k2 < d.gate2.count; ++k2)
      for (int k1 = 0; k1 < d.gate1.count; ++k1) {
        const auto& n = d.at(k1, k2);
        t.add_row({format_number(d.gate1.at(k1)), format_number(d.gate2.at(k2)), std::to_string(n.first),
                   std::to_string(n.second)});
      }
    ctx.write_csv("stability.csv", t);
    CsvTable tr{{"n1_from", "n2_from", "n1_to", "n2_to", "v1", "v2"}, {}};
    for (const auto& line : d.transitions)
      for (const auto& [a, b] : line.points)
        tr.add_row({std::to_string(line.from.first), std::to_string(line.from.second), std::to_string(line.to.first),
                    std::to_string(line.to.second), format_number(a), format_number(b)});
    ctx.write_csv("stability_transitions.csv", tr);
  });
}

void rabi(CLI::App& app, Common& common, Handlers& handlers) {
  auto* sub = app.add_subcommand("rabi", "Single-qubit Rabi oscillation");
  add_common(sub, common, true);
  sub->add_option("--config,-c", common.config, "Device JSON with a spin block")->required();
  struct Opts {
    std::string qubit = "Q1";
    double tmax = 2e-6;
    int points = 101;
    double detuning = 0.0;
    SpinOverrides spin;
  };
  auto o = std::make_shared<Opts>();
  sub->add_option("--qubit", o->qubit, "Driven qubit");
  sub->add_option("--tmax", o->tmax, "Longest burst (s)");
  sub->add_option("--points", o->points, "Burst durations from 0 to tmax")->check(CLI::PositiveNumber);
  sub->add_option("--detuning", o->detuning, "Drive detuning from the qubit frequency (Hz)");
  add_spin_overrides(sub, o->spin);
  handlers.emplace_back(sub, [o](Context& ctx) {
    const auto params = apply(spin_params(ctx.device()), o->spin);
    const auto system = SpinSystem::from_params(params);
    const auto t = linspace(0.0, o->tmax, o->points);
    const auto p = simulate_rabi(system, parse_qubit(o->qubit), t, o->detuning, ctx.trace_options(params));
    CsvTable tab{{"t_s", "probability"}, {}};
    for (std::size_t k = 0; k < t.size(); ++k) tab.add_row({format_number(t[k]), format_number(p[k])});
    ctx.write_csv("rabi.csv", tab);
  });
}

void spectroscopy(CLI::App& app, Common& common, Handlers& handlers) {
  auto* sub = app.add_subcommand("exchange-spectroscopy", "Conditional ESR of the target against barrier amplitude");
  add_common(sub, common, true);
  sub->add_option("--config,-c", common.config, "Device JSON with a spin block")->required();
  struct Opts {
    std::string pair = "Q1,Q2";
    double vmin = 0.0, vmax = 0.28;
    int points = 15;
    double fspan = 200e6;
    int fpoints = 201;
    SpinOverrides spin;
  };
  auto o = std::make_shared<Opts>();
  sub->add_option("--pair", o->pair, "control,target");
  sub->add_option("--vmin", o->vmin, "First barrier amplitude (V)");
  sub->add_option("--vmax", o->vmax, "Last barrier amplitude (V)");
  sub->add_option("--points", o->points, "Barrier amplitudes")->check(CLI::PositiveNumber);
  sub->add_option("--fspan", o->fspan, "Frequency span centred on the target (Hz)");
  sub->add_option("--fpoints", o->fpoints, "Frequency points")->check(CLI::PositiveNumber);
  add_spin_overrides(sub, o->spin);
  handlers.emplace_back(sub, [o](Context& ctx) {
    const auto params = apply(spin_params(ctx.device()), o->spin);
    const auto system = SpinSystem::from_params(params);
    const auto [c, t] = parse_pair(o->pair);
    const double f0 = system.larmor_hz(t);
    const auto map = simulate_exchange_spectroscopy(system, c, t, linspace(o->vmin, o->vmax, o->points),
                                                    linspace(f0 - o->fspan / 2, f0 + o->fspan / 2, o->fpoints),
                                                    ctx.trace_options(params));
    CsvTable tab{{"v_volts", "f_hz", "probability"}, {}};
    const std::size_t nf = map.frequencies_hz.size();
    for (std::size_t i = 0; i < map.amplitudes_v.size(); ++i)
      for (std::size_t j = 0; j < nf; ++j)
        tab.add_row({format_number(map.amplitudes_v[i]), format_number(map.frequencies_hz[j]),
                     format_number(map.probability[i * nf + j])});
    ctx.write_csv("spectroscopy.csv", tab);
  });
}

}  // namespace

// dCZ trace plus fit; shared with reproduce-figure 4a/4b. Fit failures are recorded, not thrown.
json dcz_fit_json(const std::vector<double>& tau, const std::vector<double>& p) {
  json doc;
  try {
    const auto fit = fit_damped_sinusoid(tau, p);
    doc["ok"] = true;
    doc["frequency_hz"] = fit.frequency_hz;
    doc["j_hz"] = extract_J_from_dcz(fit);
    doc["amplitude"] = fit.amplitude;
    doc["decay_time_s"] = number(fit.decay_time_s);
    doc["phase_rad"] = fit.phase_rad;
    doc["offset"] = fit.offset;
    doc["residual_rms"] = fit.residual_rms;
    doc["iterations"] = fit.iterations;
    doc["converged"] = fit.converged;
  } catch (const DomainError& e) {
    doc["ok"] = false;
    doc["error"] = e.what();
  }
  return doc;
}

namespace {

void dcz(CLI::App& app, Common& common, Handlers& handlers) {
  auto* sub = app.add_subcommand("dcz", "Decoupled controlled-Z oscillation and J fit");
  add_common(sub, common, true);
  sub->add_option("--config,-c", common.config, "Device JSON with a spin block")->required();
  struct Opts {
    std::string pair = "Q1,Q2";
    double amplitude = 0.1;
    double tmax = 4e-6;
    int points = 160;
    SpinOverrides spin;
  };
  auto o = std::make_shared<Opts>();
  sub->add_option("--pair", o->pair, "control,target");
  sub->add_option("--amplitude", o->amplitude, "Barrier pulse amplitude (V)");
  sub->add_option("--tmax", o->tmax, "Longest total exchange time (s)");
  sub->add_option("--points", o->points, "Exchange times from 0 to tmax")->check(CLI::PositiveNumber);
  add_spin_overrides(sub, o->spin);
  handlers.emplace_back(sub, [o](Context& ctx) {
    const auto params = apply(spin_params(ctx.device()), o->spin);
    const auto system = SpinSystem::from_params(params);
    const auto [c, t] = parse_pair(o->pair);
    DczOptions opts;
    static_cast<TraceOptions&>(opts) = ctx.trace_options(params);
    const auto tau = linspace(0.0, o->tmax, o->points);
    const auto p = simulate_dcz(system, c, t, o->amplitude, tau, opts);
    CsvTable tab{{"tau_s", "probability"}, {}};
    for (std::size_t k = 0; k < tau.size(); ++k) tab.add_row({format_number(tau[k]), format_number(p[k])});
    ctx.write_csv("dcz.csv", tab);
    auto fit = dcz_fit_json(tau, p);
    fit["configured_j_hz"] = system.exchange_hz(c, t, o->amplitude);
    fit["amplitude_v"] = o->amplitude;
    if (!fit["ok"].get<bool>()) std::cerr << "warning: dCZ fit failed: " << fit["error"].get<std::string>() << "\n";
    ctx.write_json("dcz_fit.json", fit);
  });
}

std::vector<double> column_any(const CsvTable& t, std::initializer_list<const char*> names, const std::string& path) {
  for (const char* n : names)
    for (const auto& h : t.header)
      if (h == n) return t.numbers(n);
  throw ConfigError("curve", path + ": missing column " + *names.begin());
}

}  // namespace

json fit_json(const ExponentialFit& f) {
  return {{"amplitude_hz", f.amplitude_hz},
          {"rate_per_v", f.rate_per_v},
          {"tunability_dec_per_v", f.tunability_dec_per_v},
          {"points", f.points}};
}

json tunability_json(const TunabilityReport& r) {
  json pairs = json::array();
  for (const auto& p : r.pairs)
    pairs.push_back({{"pair", p.pair},
                     {"conventional", fit_json(p.conventional)},
                     {"interchanged", fit_json(p.interchanged)},
                     {"ratio", p.ratio},
                     {"flagged", p.flagged}});
  return {{"pairs", pairs}, {"any_flagged", r.any_flagged()}};
}

namespace {

void fit_tunability(CLI::App& app, Common& common, Handlers& handlers) {
  auto* sub = app.add_subcommand("fit-tunability", "Exponential J(v) fits per pair and strategy");
  add_common(sub, common, false);
  struct Opts {
    std::vector<std::string> curves;
    FitWindow window;
  };
  auto o = std::make_shared<Opts>();
  sub->add_option("--curve", o->curves, "pair:strategy:path to a CSV with v_volts and j_hz columns")->required();
  sub->add_option("--vmin", o->window.v_min, "Lower fit window (V)");
  sub->add_option("--vmax", o->window.v_max, "Upper fit window (V)");
  handlers.emplace_back(sub, [o](Context& ctx) {
    std::vector<ExchangeCurve> curves;
    for (const auto& spec : o->curves) {
      const auto a = spec.find(':');
      const auto b = a == std::string::npos ? a : spec.find(':', a + 1);
      if (b == std::string::npos) throw ConfigError("curve", "expected pair:strategy:path, got '" + spec + "'");
      const std::string path = spec.substr(b + 1);
      const auto table = read_csv_file(path);
      curves.push_back({spec.substr(0, a), parse_strategy(spec.substr(a + 1, b - a - 1)),
                        column_any(table, {"v_volts", "v"}, path), column_any(table, {"j_hz", "J_hz"}, path)});
    }
    ctx.write_json("tunability.json", tunability_json(tunability_report(curves, o->window)));
  });
}

std::string pad(std::string s, std::size_t w) {
  if (s.size() < w) s.insert(0, w - s.size(), ' ');
  return s;
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

void report(CLI::App& app, Common& common, Handlers& handlers) {
  auto* sub = app.add_subcommand("report", "Tunability ratios against lever-arm ratios");
  add_common(sub, common, false);
  struct Opts {
    std::string tunability;
    std::string ratios;
    std::string levers = "1.75,3.18,2.71";
  };
  auto o = std::make_shared<Opts>();
  auto* a = sub->add_option("--tunability", o->tunability, "tunability.json from fit-tunability");
  auto* b = sub->add_option("--tunability-ratios", o->ratios, "Comma-separated interchanged/conventional ratios");
  a->excludes(b);
  sub->add_option("--lever-ratios", o->levers, "Comma-separated lever-arm ratios, one per pair");
  handlers.emplace_back(sub, [o](Context& ctx) {
    std::vector<std::string> names;
    std::vector<double> ratios;
    json source;
    if (!o->tunability.empty()) {
      std::ifstream in(o->tunability);
      if (!in) throw ConfigError("tunability", "file not found: " + o->tunability);
      try {
        source = json::parse(in);
        for (const auto& p : source.at("pairs")) {
          names.push_back(p.at("pair").get<std::string>());
          ratios.push_back(p.at("ratio").get<double>());
        }
      } catch (const json::exception& e) {
        throw ConfigError("tunability", e.what());
      }
    } else if (!o->ratios.empty()) {
      ratios = parse_list(o->ratios);
    } else {
      throw ConfigError("tunability", "give --tunability or --tunability-ratios");
    }
    for (std::size_t k = names.size(); k < ratios.size(); ++k) names.push_back("pair" + std::to_string(k + 1));
    const auto cmp = lever_arm_comparison(parse_list(o->levers), ratios);

    std::string txt = "pair        tunability ratio   lever ratio   excess   exceeds\n";
    json rows = json::array();
    for (std::size_t k = 0; k < ratios.size(); ++k) {
      std::string name = names[k];
      name.resize(std::max<std::size_t>(name.size(), 10), ' ');
      txt += name + "  " + pad(fixed(cmp.tunability_ratios[k], 3), 16) + "  " + pad(fixed(cmp.lever_ratios[k], 3), 12) +
             "  " + pad(fixed(cmp.excess[k], 3), 7) + "  " + pad(cmp.exceeds[k] ? "yes" : "no", 8) + "\n";
      rows.push_back({{"pair", names[k]},
                      {"tunability_ratio", cmp.tunability_ratios[k]},
                      {"lever_ratio", cmp.lever_ratios[k]},
                      {"excess", cmp.excess[k]},
                      {"exceeds", static_cast<bool>(cmp.exceeds[k])}});
    }
    ctx.write("report.txt", txt);
    ctx.write_json("report.json", {{"pairs", rows}});
    std::cout << txt;
  });
}

}  // namespace

void register_commands(CLI::App& app, Common& common, Handlers& handlers) {
  simulate_potential(app, common, handlers);
  sweep_tunnel(app, common, handlers);
  stability(app, common, handlers);
  rabi(app, common, handlers);
  spectroscopy(app, common, handlers);
  dcz(app, common, handlers);
  fit_tunability(app, common, handlers);
  report(app, common, handlers);
}

}  // namespace dotlab::cli
