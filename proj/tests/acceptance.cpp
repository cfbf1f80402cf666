// Acceptance run: one PASS/FAIL line per criterion, with measured values and wall time.
// Exit status is 0 when the set of failing criteria equals the --expect-fail list.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <fstream>
#include <array>
#include <iterator>

#include "cli.hpp"
#include "dotlab/calibration.hpp"
#include "dotlab/constants.hpp"
#include "dotlab/dot_physics.hpp"
#include "dotlab/electrostatics.hpp"
#include "dotlab/error.hpp"
#include "dotlab/spin.hpp"
#include "oracle_values.hpp"
#include "support.hpp"

using namespace dotlab;
using namespace testing_support;
namespace fs = std::filesystem;

namespace {

constexpr double kLn10 = 2.302585092994046;

struct Outcome {
  bool pass = true;
  std::ostringstream detail;
  void check(bool ok, const std::string& what) {
    if (!ok) pass = false;
    detail << (detail.tellp() > 0 ? "; " : "") << (ok ? "" : "FAILED ") << what;
  }
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

SpinSystem pair_system(double df, double j_hz, double rabi) {
  SpinSystem s;
  s.reference_hz = 15e9;
  s.detuning_hz = {0.0, df};
  s.slope_hz_per_v = {0.0, 0.0};
  s.exchange = {ExchangeParams{0, 1, j_hz, 0.0, 0.0}};
  s.rabi_hz = rabi;
  return s;
}

void electrostatics(Outcome& o) {
  auto d = reference_device();
  for (const auto& id : d.gate_ids()) d.voltages.set(id, 0.0);
  const auto zero = solve_poisson(build_grid(d, {}));
  double vmax = 0.0;
  for (double v : zero.volts) vmax = std::max(vmax, std::abs(v));
  o.check(vmax <= 1e-12, "Laplace max|V| " + fmt(vmax));

  const auto plate = potential_profile(solve_poisson(build_grid(parallel_plate(0.3), plate_resolution())));
  double rel = 0.0;
  for (double u : plate.u_ev) rel = std::max(rel, std::abs(-u - oracle::plate_divider_v) / oracle::plate_divider_v);
  o.check(rel < 1e-3, "divider rel err " + fmt(rel));

  const auto tf = solve_selfconsistent(build_grid(parallel_plate(0.3), plate_resolution()), {},
                                       {1e-10, 50, 1.0, SelfConsistentMethod::newton});
  double err = 0.0;
  for (double u : potential_profile(tf.field).u_ev) err = std::max(err, std::abs(-u - oracle::plate_tf_v));
  o.check(err < 1e-5, "TF plate err " + fmt(err) + " V");
}

void tunnel_coupling(Outcome& o) {
  const auto e = solve_schrodinger_1d(double_gaussian(0.01, 0.01), 0.19, 3);
  const auto b = maximally_localized_basis(e);
  const double ref = (e.energies_ev[1] - e.energies_ev[0]) / 2 * constants::ev_to_hz;
  const double rel = std::abs(b.tunnel_coupling_hz - ref) / ref;
  o.check(rel < 1e-3, "symmetric |t_c-(E1-E0)/2|/t_c " + fmt(rel));

  const double tc_ev = b.tunnel_coupling_hz / constants::ev_to_hz;
  double worst = 0.0, max_eps = 0.0;
  for (double frac : {0.25, 0.5, 0.75, 1.0}) {
    const auto a = maximally_localized_basis(solve_schrodinger_1d(double_gaussian(0.01, 0.01 + frac * tc_ev), 0.19, 3));
    if (std::abs(a.detuning_ev()) > 1.0001 * tc_ev) continue;
    max_eps = std::max(max_eps, std::abs(a.detuning_ev()) / tc_ev);
    worst = std::max(worst, std::abs(a.tunnel_coupling_hz - b.tunnel_coupling_hz) / b.tunnel_coupling_hz);
  }
  o.check(worst < 0.05 && max_eps > 0.5, "asymmetric drift " + fmt(worst) + " up to eps/t_c " + fmt(max_eps));
}

void strategy_contrast(Outcome& o) {
  const auto d = reference_device();
  std::vector<double> v;
  for (int k = 0; k <= 6; ++k) v.push_back(0.05 * k);
  SweepOptions opts;
  opts.jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  double slope[2] = {0, 0};
  for (int s = 0; s < 2; ++s) {
    const auto strategy = s == 0 ? TuningStrategy::conventional : TuningStrategy::interchanged;
    const auto c = tunnel_coupling_sweep(d, strategy, "B3", v, opts);
    bool mono = true;
    for (std::size_t k = 0; k < c.points.size(); ++k) {
      mono = mono && c.points[k].flag == PointFlag::ok;
      if (k) mono = mono && c.points[k].tc_hz > c.points[k - 1].tc_hz;
    }
    slope[s] = mono ? slope_dec_per_volt(c) : NAN;
    o.check(mono, std::string(to_string(strategy)) + " monotone, t_c " + fmt(c.points.front().tc_hz) + " -> " +
                      fmt(c.points.back().tc_hz) + " Hz, " + fmt(slope[s]) + " dec/V");
  }
  const double ratio = slope[1] / slope[0];
  o.check(ratio >= 1.5, "slope ratio " + fmt(ratio));
}

double echo_deviation(double df_over_j) {
  double echo = 0.0;
  for (double j : {1e6, 4e6, 10e6}) {
    const auto s = pair_system(df_over_j * j, j, 2e6 * std::max(1.0, j / 1e6));
    std::vector<double> tau;
    for (int k = 0; k < 80; ++k) tau.push_back(4.0 / j * k / 79);
    DczOptions base;
    base.ideal_readout = true;
    const auto p0 = simulate_dcz(s, 0, 1, 0.0, tau, base);
    for (const std::vector<double>& z : {std::vector<double>{10e6, 0.0}, std::vector<double>{0.0, -7e6}}) {
      DczOptions shifted = base;
      shifted.z_offset_hz = z;
      const auto p1 = simulate_dcz(s, 0, 1, 0.0, tau, shifted);
      for (std::size_t k = 0; k < tau.size(); ++k) echo = std::max(echo, std::abs(p1[k] - p0[k]));
    }
  }
  return echo;
}

void dcz_law(Outcome& o) {
  double worst = 0.0;
  for (double j : {1e6, 4e6, 10e6}) {
    const auto s = pair_system(50 * j, j, 2e6 * std::max(1.0, j / 1e6));
    std::vector<double> tau;
    for (int k = 0; k < 160; ++k) tau.push_back(4.0 / j * k / 159);
    DczOptions opt;
    opt.ideal_readout = true;
    const auto fit = fit_damped_sinusoid(tau, simulate_dcz(s, 0, 1, 0.0, tau, opt));
    worst = std::max(worst, std::abs(extract_J_from_dcz(fit) - j) / j);
  }
  o.check(worst < 0.01, "J recovery max rel err " + fmt(worst));

  const double echo = echo_deviation(50.0);
  o.check(echo < 1e-6, "echo invariance max |dP| " + fmt(echo) + " (bound 1e-6)");
  // Flip-flop leakage of a square exchange pulse scales as (J/df)^2; show the trend.
  o.detail << "; |dP| at df=500J " << fmt(echo_deviation(500.0)) << ", df=5000J " << fmt(echo_deviation(5000.0));
}

void spectroscopy(Outcome& o) {
  double worst = 0.0;
  for (double j : {1e6, 10e6, 100e6}) {
    const double rabi = j / 20;
    const auto s = pair_system(50 * j, j, rabi);
    const auto [lo, hi] = conditional_transition_frequencies(s, 0, 1, 0.0);
    const double mid = 0.5 * (lo + hi);
    const auto [a, b] = spectroscopy_branches(s, 0, 1, 0.0, mid - j, mid + j, rabi);
    // Exact 4x4 branch separation equals J for isotropic exchange.
    worst = std::max(worst, std::abs((b - a) - j) / rabi);
  }
  o.check(worst < 0.1, "max |split-J|/linewidth " + fmt(worst));

  SpinSystem fig;
  fig.reference_hz = 15.2e9;
  fig.detuning_hz = {0.0, 400e6};
  fig.slope_hz_per_v = {0.0, 0.0};
  fig.exchange = {ExchangeParams{0, 1, 2e3, 16.6 * kLn10, 0.0}};
  const double j028 = fig.exchange_hz(0, 1, 0.28);
  o.check(j028 >= 80e6 && j028 <= 120e6, "J(0.28 V) " + fmt(j028 / 1e6) + " MHz");
}

void tunability(Outcome& o) {
  std::vector<double> v, j;
  for (int k = 0; k <= 10; ++k) {
    v.push_back(0.028 * k);
    j.push_back(1e5 * std::exp(16.6 * kLn10 * v.back()));
  }
  const double dec = fit_exponential(v, j).tunability_dec_per_v;
  o.check(std::abs(dec - 16.6) < 1e-9, "synthetic " + fmt(dec) + " dec/V");

  const std::array<double, 3> conv{7.25, 3.87, 4.32}, inter{16.6, 11.4, 15.4};
  std::vector<ExchangeCurve> curves;
  for (int k = 0; k < 3; ++k)
    for (auto [s, d] : {std::pair{TuningStrategy::conventional, conv[k]}, std::pair{TuningStrategy::interchanged, inter[k]}}) {
      ExchangeCurve c{"pair" + std::to_string(k), s, {}, {}};
      for (int i = 0; i < 5; ++i) {
        c.v.push_back(0.05 * i);
        c.j_hz.push_back(2e3 * std::pow(10.0, d * c.v.back()));
      }
      curves.push_back(c);
    }
  const auto report = tunability_report(curves);
  std::vector<double> ratios;
  for (const auto& p : report.pairs) ratios.push_back(std::round(p.ratio * 100) / 100);
  o.check(ratios == std::vector<double>{2.29, 2.95, 3.56}, "ratios " + fmt(ratios[0]) + "/" + fmt(ratios[1]) + "/" + fmt(ratios[2]));
  const auto lever = lever_arm_comparison({1.75, 3.18, 2.71}, {2.29, 2.95, 3.56});
  std::vector<double> excess;
  for (double e : lever.excess) excess.push_back(std::round(e * 1000) / 1000);
  o.check(excess == std::vector<double>{1.309, 0.928, 1.314},
          "excess " + fmt(excess[0]) + "/" + fmt(excess[1]) + "/" + fmt(excess[2]));
}

void readout(Outcome& o) {
  const double f = readout_fidelity_from_snr(10.6);
  o.check(f > 0.999, "1-F(10.6) " + fmt(1 - f));
  const int shots = 100000;
  double worst_sigma = 0.0;
  std::uint64_t seed = 1;
  for (double snr : {4.97, 6.54, 7.48, 10.6, 13.9}) {
    ReadoutModel r;
    r.snr = snr;
    r.seed = seed;
    auto rng = make_rng(seed++, 0);
    long flips = 0;
    for (int k = 0; k < shots; ++k) {
      auto st = QuantumState::basis(2, 2);
      const auto out = parity_measure(st, 0, 1, r, rng);
      flips += out.reported != out.actual;
    }
    const double p = readout_error_from_snr(snr);
    const double sigma = std::sqrt(shots * p * (1 - p));
    const double z = sigma > 0 ? std::abs(flips - shots * p) / sigma : (flips == 0 ? 0.0 : INFINITY);
    worst_sigma = std::max(worst_sigma, z);
    o.check(std::abs(flips - shots * p) <= 3 * sigma + 1e-12 || (flips == 0 && shots * p < 1e-3),
            "snr " + fmt(snr) + ": " + std::to_string(flips) + " flips vs " + fmt(shots * p));
  }
  o.detail << "; worst " << fmt(worst_sigma) << " sigma";
}

std::string slurp_all(const fs::path& dir) {
  std::string all;
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.path().extension() == ".csv") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  for (const auto& f : files) all += f.filename().string() + "\n" + slurp(f.string());
  return all;
}

void determinism(Outcome& o) {
  const auto root = fs::temp_directory_path() / "dotlab_acceptance";
  fs::remove_all(root);
  const std::string cfg = config_path("device_reference.json");
  const std::vector<std::vector<std::string>> commands{
      {"simulate-potential", "--config", cfg},
      {"sweep-tunnel-coupling", "--config", cfg, "--points", "3", "--vmax", "0.2", "--jobs", "2"},
      {"stability-diagram"},
      {"rabi", "--config", cfg},
      {"exchange-spectroscopy", "--config", cfg, "--points", "5", "--fpoints", "41", "--jobs", "2"},
      {"dcz", "--config", cfg, "--pair", "Q1,Q2", "--amplitude", "0.2"},
      {"rabi", "--config", cfg, "--shots", "500", "--seed", "1234"},
      {"exchange-spectroscopy", "--config", cfg, "--points", "3", "--fpoints", "21", "--shots", "200", "--seed", "77"},
      {"dcz", "--config", cfg, "--amplitude", "0.2", "--shots", "300", "--seed", "5", "--jobs", "3"},
  };
  int idx = 0;
  for (const auto& cmd : commands) {
    const auto a = root / ("a" + std::to_string(idx)), b = root / ("b" + std::to_string(idx));
    ++idx;
    auto args = cmd;
    args.insert(args.begin(), "dotlab");
    args.insert(args.end(), {"--output-dir", a.string()});
    const int rc = cli::run(args);
    // Second run replays the recorded argv with only the output directory changed.
    std::ifstream m(a / "manifest.json");
    std::string text((std::istreambuf_iterator<char>(m)), {});
    auto replay = args;
    replay.back() = b.string();
    const int rc2 = text.find("\"argv\"") != std::string::npos ? cli::run(replay) : -1;
    const bool same = rc == 0 && rc2 == 0 && slurp_all(a) == slurp_all(b) && !slurp_all(a).empty();
    o.check(same, cmd.front() + (std::find(cmd.begin(), cmd.end(), "--shots") != cmd.end() ? " (seeded)" : " (exact)"));
  }
  fs::remove_all(root);
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> expected;
  for (int i = 1; i + 1 < argc; ++i)
    if (std::string(argv[i]) == "--expect-fail") {
      std::stringstream ss(argv[++i]);
      std::string item;
      while (std::getline(ss, item, ',')) expected.insert(std::stoi(item));
    }

  struct Criterion {
    int id;
    const char* name;
    double budget_s;
    std::function<void(Outcome&)> run;
  };
  const std::vector<Criterion> criteria{
      {1, "electrostatics oracles", 10, electrostatics},
      {2, "tunnel-coupling correctness", 5, tunnel_coupling},
      {3, "strategy contrast", 300, strategy_contrast},
      {4, "dCZ frequency law", 30, dcz_law},
      {5, "spectroscopy splitting", 60, spectroscopy},
      {6, "tunability fits", 1, tunability},
      {7, "readout model", 30, readout},
      {8, "determinism", 300, determinism},
  };

  std::set<int> failed;
  for (const auto& c : criteria) {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      c.run(o);
    } catch (const std::exception& e) {
      o.check(false, std::string("exception: ") + e.what());
    }
    const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    o.check(dt < c.budget_s, "runtime " + fmt(dt) + " s (< " + fmt(c.budget_s) + " s)");
    if (!o.pass) failed.insert(c.id);
    std::printf("%s criterion %d (%s): %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.str().c_str());
    std::fflush(stdout);
  }
  if (failed == expected) {
    if (!failed.empty()) std::printf("failing set matches the documented expectation\n");
    return 0;
  }
  std::printf("failing set differs from the documented expectation\n");
  return 1;
}
