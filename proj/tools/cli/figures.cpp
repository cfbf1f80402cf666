#include <array>
#include <cmath>

#include "context.hpp"
#include "dotlab/error.hpp"

namespace dotlab::cli {

using nlohmann::json;

namespace {

using Handlers = std::vector<std::pair<CLI::App*, Handler>>;

constexpr double kLn10 = 2.302585092994046;

// Published exchange tunabilities (dec/V) for Q1-Q2, Q2-Q3, Q3-Q4.
constexpr std::array<double, 3> kConventionalDecades{7.25, 3.87, 4.32};
constexpr std::array<double, 3> kInterchangedDecades{16.6, 11.4, 15.4};
// Conventional curves are anchored at J(0.4 V) = 10 MHz; interchanged ones use A = 2 kHz.
constexpr double kConventionalAnchorV = 0.4;
constexpr double kConventionalAnchorHz = 10e6;
constexpr double kInterchangedAmplitudeHz = 2e3;

SpinParams with_exchange(SpinParams p, TuningStrategy s) {
  for (std::size_t k = 0; k < p.exchange.size() && k < 3; ++k) {
    auto& e = p.exchange[k];
    if (s == TuningStrategy::conventional) {
      e.rate_per_v = kConventionalDecades[k] * kLn10;
      e.amplitude_hz = kConventionalAnchorHz * std::exp(-e.rate_per_v * kConventionalAnchorV);
    } else {
      e.rate_per_v = kInterchangedDecades[k] * kLn10;
      e.amplitude_hz = kInterchangedAmplitudeHz;
    }
  }
  return p;
}

double amplitude_for(const ExchangeParams& e, double j_hz) { return std::log(j_hz / e.amplitude_hz) / e.rate_per_v; }

std::vector<double> geomspace(double a, double b, int n) {
  auto out = linspace(std::log(a), std::log(b), n);
  for (auto& x : out) x = std::exp(x);
  return out;
}

std::string pair_name(const ExchangeParams& e) {
  return "Q" + std::to_string(e.qubit_a + 1) + "-Q" + std::to_string(e.qubit_b + 1);
}

struct DczRun {
  std::vector<double> tau;
  std::vector<double> p;
  json fit;
};

// Three J/2 periods sampled at `points`.
DczRun run_dcz(const Context& ctx, const SpinParams& params, const ExchangeParams& e, double v, int points) {
  const auto system = SpinSystem::from_params(params);
  const double j = system.exchange_hz(e.qubit_a, e.qubit_b, v);
  DczOptions opts;
  static_cast<TraceOptions&>(opts) = ctx.trace_options(params);
  DczRun r;
  r.tau = linspace(0.0, 6.0 / j, points);
  r.p = simulate_dcz(system, e.qubit_a, e.qubit_b, v, r.tau, opts);
  r.fit = dcz_fit_json(r.tau, r.p);
  r.fit["amplitude_v"] = v;
  r.fit["configured_j_hz"] = j;
  return r;
}

void figure_2c(Context& ctx, const DeviceDescription& device) {
  SweepOptions opts;
  opts.jobs = ctx.common().jobs;
  const auto summary = run_tunnel_sweeps(ctx, device, {TuningStrategy::conventional, TuningStrategy::interchanged}, "B3",
                                         linspace(0.0, 0.3, 7), opts);
  ctx.write_json("figure_2c.json", summary);
}

void figure_3(Context& ctx, const DeviceDescription& device, TuningStrategy s, double vmax, const std::string& tag) {
  const auto params = with_exchange(*device.spin, s);
  const auto system = SpinSystem::from_params(params);
  const auto& e = params.exchange.at(0);
  const int c = e.qubit_a, t = e.qubit_b;
  const auto v = linspace(0.0, vmax, 15);
  const double jmax = system.exchange_hz(c, t, vmax);
  const double span = std::max(3.0 * jmax, 20.0 * params.rabi_hz);
  const double f0 = system.larmor_hz(t) + params.spectroscopy_slope_hz_per_v.at(static_cast<std::size_t>(t)) * vmax / 2;
  const auto f = linspace(f0 - span / 2, f0 + span / 2, 241);
  const auto map = simulate_exchange_spectroscopy(system, c, t, v, f, ctx.trace_options(params));
  CsvTable tab{{"v_volts", "f_hz", "probability"}, {}};
  for (std::size_t i = 0; i < v.size(); ++i)
    for (std::size_t k = 0; k < f.size(); ++k)
      tab.add_row({format_number(v[i]), format_number(f[k]), format_number(map.probability[i * f.size() + k])});
  ctx.write_csv("spectroscopy_" + tag + ".csv", tab);

  // Branch separation wherever the two lines are resolved (J >= 4 Omega).
  CsvTable br{{"v_volts", "j_configured_hz", "f_low_hz", "f_high_hz", "separation_hz"}, {}};
  for (double x : v) {
    const double j = system.exchange_hz(c, t, x);
    if (j < 4.0 * params.rabi_hz) continue;
    const auto [lo_c, hi_c] = conditional_transition_frequencies(system, c, t, x);
    const double mid = 0.5 * (lo_c + hi_c);
    const auto [a, b] = spectroscopy_branches(system, c, t, x, mid - j, mid + j, params.rabi_hz);
    br.add_row({format_number(x), format_number(j), format_number(std::min(a, b)), format_number(std::max(a, b)),
                format_number(std::abs(b - a))});
  }
  ctx.write_csv("branches_" + tag + ".csv", br);
  ctx.write_json("figure_" + tag + ".json", {{"strategy", std::string(to_string(s))},
                                             {"pair", pair_name(e)},
                                             {"amplitude_hz", e.amplitude_hz},
                                             {"rate_per_v", e.rate_per_v},
                                             {"tunability_dec_per_v", e.rate_per_v / kLn10},
                                             {"j_at_vmax_hz", jmax},
                                             {"rabi_hz", params.rabi_hz}});
}

void figure_4a(Context& ctx, const DeviceDescription& device) {
  const auto params = with_exchange(*device.spin, TuningStrategy::interchanged);
  const auto& e = params.exchange.at(0);
  CsvTable tab{{"v_volts", "tau_s", "probability"}, {}};
  json fits = json::array();
  for (double j : {0.5e6, 1e6, 2e6, 4e6}) {
    const double v = amplitude_for(e, j);
    const auto r = run_dcz(ctx, params, e, v, 160);
    for (std::size_t k = 0; k < r.tau.size(); ++k)
      tab.add_row({format_number(v), format_number(r.tau[k]), format_number(r.p[k])});
    fits.push_back(r.fit);
  }
  ctx.write_csv("dcz_traces.csv", tab);
  ctx.write_json("figure_4a.json", {{"pair", pair_name(e)}, {"strategy", "interchanged"}, {"fits", fits}});
}

void figure_4b(Context& ctx, const DeviceDescription& device) {
  std::vector<ExchangeCurve> curves;
  CsvTable tab{{"pair", "strategy", "v_volts", "j_configured_hz", "j_hz"}, {}};
  json failures = json::array();
  for (const auto s : {TuningStrategy::conventional, TuningStrategy::interchanged}) {
    const auto params = with_exchange(*device.spin, s);
    for (const auto& e : params.exchange) {
      ExchangeCurve curve{pair_name(e), s, {}, {}};
      for (double j : geomspace(0.25e6, 4e6, 6)) {
        const double v = amplitude_for(e, j);
        const auto r = run_dcz(ctx, params, e, v, 120);
        if (!r.fit["ok"].get<bool>()) {
          failures.push_back(r.fit);
          continue;
        }
        const double jfit = r.fit["j_hz"].get<double>();
        curve.v.push_back(v);
        curve.j_hz.push_back(jfit);
        tab.add_row({curve.pair, std::string(to_string(s)), format_number(v), format_number(j), format_number(jfit)});
      }
      curves.push_back(std::move(curve));
    }
  }
  ctx.write_csv("exchange_curves.csv", tab);
  const auto report = tunability_report(curves);
  std::vector<double> ratios;
  for (const auto& p : report.pairs) ratios.push_back(p.ratio);
  const auto lever = lever_arm_comparison({1.75, 3.18, 2.71}, ratios);
  auto doc = tunability_json(report);
  doc["lever_ratios"] = lever.lever_ratios;
  doc["excess"] = lever.excess;
  doc["fit_failures"] = failures;
  ctx.write_json("figure_4b.json", doc);
}

}  // namespace

void register_figures(CLI::App& app, Common& common, Handlers& handlers) {
  auto* sub = app.add_subcommand("reproduce-figure", "Run the pipeline behind one of the reference figures");
  add_common(sub, common, true);
  sub->add_option("--config,-c", common.config, "Reference device JSON")->required();
  auto figure = std::make_shared<std::string>();
  sub->add_option("--figure", *figure, "2c, 3b, 3c, 4a or 4b")
      ->required()
      ->check(CLI::IsMember({"2c", "3b", "3c", "4a", "4b"}));
  handlers.emplace_back(sub, [figure](Context& ctx) {
    const auto device = ctx.device();
    if (*figure != "2c" && !device.spin) throw ConfigError("spin", "config has no spin block");
    if (*figure == "2c") figure_2c(ctx, device);
    if (*figure == "3b") figure_3(ctx, device, TuningStrategy::conventional, 0.4, "3b");
    if (*figure == "3c") figure_3(ctx, device, TuningStrategy::interchanged, 0.28, "3c");
    if (*figure == "4a") figure_4a(ctx, device);
    if (*figure == "4b") figure_4b(ctx, device);
  });
}

}  // namespace dotlab::cli
