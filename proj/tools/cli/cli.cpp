#include "cli.hpp"

#include <chrono>
#include <cstdlib>
#include <iostream>

#include "context.hpp"
#include "dotlab/error.hpp"

namespace dotlab::cli {

namespace fs = std::filesystem;
using nlohmann::json;

Context::Context(std::string command, const Common& common, std::uint64_t seed)
    : command_(std::move(command)), common_(common), seed_(seed) {}

DeviceDescription Context::device() const {
  if (common_.config.empty()) throw ConfigError("", "--config is required");
  return load_device_config_file(common_.config);
}

TraceOptions Context::trace_options(const SpinParams& spin) const {
  TraceOptions o;
  o.shots = common_.shots;
  o.seed = seed_;
  o.ideal_readout = common_.ideal_readout;
  o.readout_snr = spin.readout_snr;
  o.jobs = common_.jobs;
  return o;
}

void Context::write(const std::string& name, const std::string& content) {
  fs::create_directories(common_.output_dir);
  write_file_atomic((fs::path(common_.output_dir) / name).string(), content);
  outputs_.push_back(name);
}

std::pair<int, int> parse_pair(const std::string& text) {
  const auto comma = text.find(',');
  if (comma == std::string::npos) throw ConfigError("pair", "expected two qubits like Q1,Q2");
  return {parse_qubit(text.substr(0, comma)), parse_qubit(text.substr(comma + 1))};
}

int parse_qubit(const std::string& text) {
  std::string t = text;
  if (!t.empty() && (t[0] == 'Q' || t[0] == 'q')) t = t.substr(1);
  std::size_t used = 0;
  int q = 0;
  try {
    q = std::stoi(t, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != t.size() || q < 1) throw ConfigError("qubit", "invalid qubit '" + text + "'");
  return q - 1;
}

std::vector<double> parse_list(const std::string& text, std::size_t expected) {
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto end = text.find(',', start);
    const std::string item = text.substr(start, end == std::string::npos ? std::string::npos : end - start);
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size()) throw ConfigError("list", "invalid number '" + item + "' in '" + text + "'");
    out.push_back(v);
    if (end == std::string::npos) break;
    start = end + 1;
  }
  if (expected && out.size() != expected)
    throw ConfigError("list", "expected " + std::to_string(expected) + " values in '" + text + "'");
  return out;
}

std::vector<double> linspace(double a, double b, int n) {
  if (n < 1) throw ConfigError("points", "need at least one point");
  std::vector<double> out(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) out[k] = n == 1 ? a : a + (b - a) * k / (n - 1);
  return out;
}

json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

void add_common(CLI::App* sub, Common& common, bool stochastic) {
  sub->add_option("--output-dir,-o", common.output_dir, "Directory for CSV/JSON outputs and manifest.json");
  sub->add_option("--seed", common.seed, "Master RNG seed (fallback: DOTLAB_SEED, then 0)");
  sub->add_option("--jobs,-j", common.jobs, "Worker threads for independent sweep points")->check(CLI::PositiveNumber);
  if (stochastic) {
    sub->add_option("--shots", common.shots, "Shots per point (0: exact probabilities)")->check(CLI::NonNegativeNumber);
    sub->add_flag("--ideal-readout", common.ideal_readout, "Disable the readout bit-flip error");
  }
}

namespace {

std::uint64_t resolve_seed(const Common& common) {
  if (common.seed) return *common.seed;
  if (const char* env = std::getenv("DOTLAB_SEED")) {
    try {
      std::size_t used = 0;
      const auto v = std::stoull(env, &used);
      if (used == std::string(env).size()) return v;
    } catch (const std::exception&) {
    }
    throw ConfigError("DOTLAB_SEED", std::string("not an unsigned integer: '") + env + "'");
  }
  return 0;
}

json manifest(const Context& ctx, const CLI::App& sub, const std::vector<std::string>& argv, double seconds) {
  json params = json::object();
  for (const auto* opt : sub.get_options()) {
    if (opt->count() == 0 || opt->get_name() == "--help") continue;
    const auto& res = opt->results();
    params[opt->get_name()] = res.size() == 1 ? json(res.front()) : json(res);
  }
  json doc;
  doc["command"] = ctx.command();
  doc["argv"] = argv;
  doc["config"] = ctx.common().config.empty() ? json(nullptr) : json(ctx.common().config);
  doc["parameters"] = params;
  doc["seed"] = ctx.seed();
  doc["shots"] = ctx.common().shots;
  doc["output_dir"] = ctx.common().output_dir;
  doc["tool_version"] = DOTLAB_VERSION;
  doc["wall_clock_s"] = seconds;
  doc["outputs"] = ctx.outputs();
  return doc;
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"dotlab: quantum-dot device simulation and calibration toolkit", "dotlab"};
  app.set_version_flag("--version", DOTLAB_VERSION);
  app.require_subcommand(1);
  Common common;
  std::vector<std::pair<CLI::App*, Handler>> handlers;
  register_commands(app, common, handlers);
  register_figures(app, common, handlers);

  std::vector<std::string> reversed(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  for (auto& [sub, handler] : handlers) {
    if (!sub->parsed()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      Context ctx(sub->get_name(), common, resolve_seed(common));
      handler(ctx);
      const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      ctx.write_json("manifest.json", manifest(ctx, *sub, args, seconds));
      return 0;
    } catch (const Error& e) {
      std::cerr << "error: " << e.what() << "\n";
      return 1;
    } catch (const std::filesystem::filesystem_error& e) {
      std::cerr << "error: " << e.what() << "\n";
      return 1;
    }
  }
  return 2;
}

int run(int argc, char** argv) { return run(std::vector<std::string>(argv, argv + argc)); }

}  // namespace dotlab::cli
