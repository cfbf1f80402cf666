#pragma once

#include <CLI11.hpp>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "dotlab/calibration.hpp"
#include "dotlab/csv.hpp"
#include "dotlab/dot_physics.hpp"
#include "dotlab/device.hpp"
#include "dotlab/spin.hpp"

namespace dotlab::cli {

// Options shared by every subcommand.
struct Common {
  std::string output_dir = ".";
  std::optional<std::uint64_t> seed;
  int jobs = 1;
  int shots = 0;
  bool ideal_readout = false;
  std::string config;
};

class Context {
 public:
  Context(std::string command, const Common& common, std::uint64_t seed);

  const std::string& command() const { return command_; }
  const Common& common() const { return common_; }
  std::uint64_t seed() const { return seed_; }

  DeviceDescription device() const;
  TraceOptions trace_options(const SpinParams& spin) const;

  void write(const std::string& name, const std::string& content);
  void write_csv(const std::string& name, const CsvTable& table) { write(name, table.str()); }
  void write_json(const std::string& name, const nlohmann::json& doc) { write(name, doc.dump(2) + "\n"); }
  const std::vector<std::string>& outputs() const { return outputs_; }

 private:
  std::string command_;
  Common common_;
  std::uint64_t seed_;
  std::vector<std::string> outputs_;
};

using Handler = std::function<void(Context&)>;

// Each registers one subcommand on `app`; the returned handler runs it.
void register_commands(CLI::App& app, Common& common, std::vector<std::pair<CLI::App*, Handler>>& handlers);
void register_figures(CLI::App& app, Common& common, std::vector<std::pair<CLI::App*, Handler>>& handlers);

// "Q1,Q2" or "1,2" -> zero-based pair.
std::pair<int, int> parse_pair(const std::string& text);
int parse_qubit(const std::string& text);
std::vector<double> parse_list(const std::string& text, std::size_t expected = 0);
std::vector<double> linspace(double a, double b, int n);
nlohmann::json number(double v);  // null for non-finite

// Helpers shared between plain subcommands and reproduce-figure.
nlohmann::json run_tunnel_sweeps(Context& ctx, const DeviceDescription& device,
                                 const std::vector<TuningStrategy>& strategies, const std::string& barrier,
                                 const std::vector<double>& v, const SweepOptions& options);
nlohmann::json fit_json(const ExponentialFit& f);
nlohmann::json tunability_json(const TunabilityReport& r);
nlohmann::json dcz_fit_json(const std::vector<double>& tau, const std::vector<double>& p);

void add_common(CLI::App* sub, Common& common, bool stochastic);

}  // namespace dotlab::cli
