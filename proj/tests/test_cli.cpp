#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <json.hpp>

#include "cli.hpp"
#include "dotlab/calibration.hpp"
#include "dotlab/csv.hpp"
#include "support.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using testing_support::config_path;
using testing_support::data_path;
using testing_support::slurp;

namespace {

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    root_ = fs::temp_directory_path() / ("dotlab_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(root_);
    fs::create_directories(root_);
  }
  void TearDown() override { fs::remove_all(root_); }

  std::string dir(const std::string& name) const { return (root_ / name).string(); }

  static int run(std::vector<std::string> args) {
    args.insert(args.begin(), "dotlab");
    return dotlab::cli::run(args);
  }

  fs::path root_;
};

const std::string kConfig = config_path("device_reference.json");

std::vector<std::string> dcz_args(const std::string& out) {
  return {"dcz", "--config", kConfig, "--pair", "Q1,Q2", "--amplitude", "0.1", "--tmax", "4e-6", "--points", "160",
          "--output-dir", out};
}

}  // namespace

TEST_F(Cli, HelpAndUsageErrors) {
  ::testing::internal::CaptureStdout();
  EXPECT_EQ(run({"--help"}), 0);
  const auto help = ::testing::internal::GetCapturedStdout();
  EXPECT_NE(help.find("sweep-tunnel-coupling"), std::string::npos);
  ::testing::internal::CaptureStderr();
  EXPECT_EQ(run({"no-such-command"}), 2);
  EXPECT_EQ(run({}), 2);
  EXPECT_EQ(run({"dcz", "--config", kConfig, "--bogus-flag"}), 2);
  EXPECT_EQ(run({"dcz", "--config", kConfig, "--points", "abc"}), 2);
  ::testing::internal::GetCapturedStderr();
}

TEST_F(Cli, MissingConfig) {
  ::testing::internal::CaptureStderr();
  EXPECT_EQ(run({"dcz", "--config", "nowhere.json", "--output-dir", dir("x")}), 1);
  const auto err = ::testing::internal::GetCapturedStderr();
  EXPECT_NE(err.find("config not found: nowhere.json"), std::string::npos) << err;
  EXPECT_FALSE(fs::exists(dir("x") + "/manifest.json"));
}

TEST_F(Cli, DomainErrorExitsOne) {
  ::testing::internal::CaptureStderr();
  EXPECT_EQ(run({"dcz", "--config", kConfig, "--pair", "Q1,Q3", "--output-dir", dir("x")}), 1);
  EXPECT_EQ(run({"stability-diagram", "--ec", "-1e-3,3e-3", "--output-dir", dir("y")}), 1);
  const auto err = ::testing::internal::GetCapturedStderr();
  EXPECT_NE(err.find("error:"), std::string::npos);
}

TEST_F(Cli, DczGoldenTraceAndManifest) {
  ::testing::internal::CaptureStderr();
  ASSERT_EQ(run(dcz_args(dir("a"))), 0);
  ::testing::internal::GetCapturedStderr();
  const auto csv = slurp(dir("a") + "/dcz.csv");
  EXPECT_EQ(csv, slurp(data_path("golden/dcz_q1q2_a0p1.csv")));

  // Trace follows cos^2(pi J tau / 2) mixed with the SNR 10.6 readout error.
  const auto t = dotlab::parse_csv(csv);
  const double j = 2000.0 * std::exp(38.2229 * 0.1);
  const double err = dotlab::readout_error_from_snr(10.6);
  const auto tau = t.numbers("tau_s"), p = t.numbers("probability");
  ASSERT_EQ(tau.size(), 160u);
  for (std::size_t k = 0; k < tau.size(); ++k) {
    const double ideal = std::pow(std::cos(M_PI * j * tau[k] / 2), 2);
    EXPECT_NEAR(p[k], (1 - err) * ideal + err * (1 - ideal), 1e-6);
  }

  const auto m = json::parse(slurp(dir("a") + "/manifest.json"));
  EXPECT_EQ(m["command"], "dcz");
  EXPECT_EQ(m["config"], kConfig);
  EXPECT_EQ(m["seed"], 0);
  EXPECT_EQ(m["shots"], 0);
  EXPECT_EQ(m["parameters"]["--amplitude"], "0.1");
  EXPECT_TRUE(m.contains("tool_version"));
  EXPECT_GE(m["wall_clock_s"].get<double>(), 0.0);
  EXPECT_EQ(m["outputs"], json({"dcz.csv", "dcz_fit.json"}));
  const auto fit = json::parse(slurp(dir("a") + "/dcz_fit.json"));
  EXPECT_FALSE(fit["ok"].get<bool>());  // J/2 ~ 46 kHz: under 1.5 periods in 4 us
  int manifests = 0;
  for (const auto& e : fs::directory_iterator(dir("a"))) manifests += e.path().filename() == "manifest.json";
  EXPECT_EQ(manifests, 1);
}

TEST_F(Cli, ManifestReproducesRun) {
  ASSERT_EQ(run({"rabi", "--config", kConfig, "--qubit", "Q2", "--shots", "200", "--seed", "42", "--points", "41",
                 "--output-dir", dir("a")}),
            0);
  auto argv = json::parse(slurp(dir("a") + "/manifest.json"))["argv"].get<std::vector<std::string>>();
  for (std::size_t k = 0; k + 1 < argv.size(); ++k)
    if (argv[k] == "--output-dir") argv[k + 1] = dir("b");
  ASSERT_EQ(dotlab::cli::run(argv), 0);
  EXPECT_EQ(slurp(dir("a") + "/rabi.csv"), slurp(dir("b") + "/rabi.csv"));
}

TEST_F(Cli, SeedsAndEnvironmentFallback) {
  auto rabi = [&](const std::string& out, std::vector<std::string> extra) {
    std::vector<std::string> a{"rabi", "--config", kConfig, "--shots", "100", "--points", "21", "--output-dir", dir(out)};
    a.insert(a.end(), extra.begin(), extra.end());
    EXPECT_EQ(run(a), 0);
    return slurp(dir(out) + "/rabi.csv");
  };
  EXPECT_EQ(rabi("s1", {"--seed", "7"}), rabi("s2", {"--seed", "7"}));
  EXPECT_NE(rabi("s1", {"--seed", "7"}), rabi("s3", {"--seed", "8"}));
  ::setenv("DOTLAB_SEED", "7", 1);
  EXPECT_EQ(rabi("env", {}), rabi("s2", {"--seed", "7"}));
  EXPECT_EQ(json::parse(slurp(dir("env") + "/manifest.json"))["seed"], 7);
  EXPECT_EQ(rabi("flag", {"--seed", "9"}), rabi("s4", {"--seed", "9"}));
  ::setenv("DOTLAB_SEED", "junk", 1);
  ::testing::internal::CaptureStderr();
  EXPECT_EQ(run({"rabi", "--config", kConfig, "--output-dir", dir("bad")}), 1);
  ::testing::internal::GetCapturedStderr();
  ::unsetenv("DOTLAB_SEED");
}

TEST_F(Cli, ExactModeByteIdenticalAcrossJobs) {
  auto spec = [&](const std::string& out, const std::string& jobs) {
    EXPECT_EQ(run({"exchange-spectroscopy", "--config", kConfig, "--points", "4", "--fpoints", "31", "--jobs", jobs,
                   "--output-dir", dir(out)}),
              0);
    return slurp(dir(out) + "/spectroscopy.csv");
  };
  const auto a = spec("j1", "1");
  EXPECT_EQ(a, spec("j1b", "1"));
  EXPECT_EQ(a, spec("j3", "3"));
  EXPECT_EQ(dotlab::parse_csv(a).rows.size(), 4u * 31u);
}

TEST_F(Cli, StabilityDiagramOutputs) {
  ASSERT_EQ(run({"stability-diagram", "--v1", "0,0.1,11", "--v2", "0,0.1,21", "--output-dir", dir("s")}), 0);
  const auto grid = dotlab::read_csv_file(dir("s") + "/stability.csv");
  EXPECT_EQ(grid.header, (std::vector<std::string>{"v1", "v2", "n1", "n2"}));
  EXPECT_EQ(grid.rows.size(), 11u * 21u);
  EXPECT_TRUE(fs::exists(dir("s") + "/stability_transitions.csv"));
}

TEST_F(Cli, FitTunabilityAndReport) {
  const std::array<double, 3> conv{7.25, 3.87, 4.32}, inter{16.6, 11.4, 15.4};
  std::vector<std::string> args{"fit-tunability", "--output-dir", dir("fit")};
  fs::create_directories(dir("in"));
  for (int k = 0; k < 3; ++k) {
    for (auto [name, dec] : {std::pair{"conventional", conv[k]}, std::pair{"interchanged", inter[k]}}) {
      dotlab::CsvTable t{{"v_volts", "j_hz"}, {}};
      for (int i = 0; i < 5; ++i) {
        const double v = 0.05 * i;
        t.add_row({dotlab::format_number(v), dotlab::format_number(1e4 * std::pow(10.0, dec * v))});
      }
      const auto path = dir("in") + "/q" + std::to_string(k) + name + ".csv";
      dotlab::write_file_atomic(path, t.str());
      args.push_back("--curve");
      args.push_back("Q" + std::to_string(k + 1) + "-Q" + std::to_string(k + 2) + ":" + name + ":" + path);
    }
  }
  ASSERT_EQ(run(args), 0);
  const auto tj = json::parse(slurp(dir("fit") + "/tunability.json"));
  EXPECT_NEAR(tj["pairs"][0]["interchanged"]["tunability_dec_per_v"].get<double>(), 16.6, 1e-9);
  EXPECT_NEAR(tj["pairs"][2]["ratio"].get<double>(), 15.4 / 4.32, 1e-9);

  ::testing::internal::CaptureStdout();
  ASSERT_EQ(run({"report", "--tunability", dir("fit") + "/tunability.json", "--output-dir", dir("rep")}), 0);
  ASSERT_EQ(run({"report", "--tunability-ratios", "2.29,2.95,3.56", "--output-dir", dir("rep2")}), 0);
  ::testing::internal::GetCapturedStdout();
  const auto r = json::parse(slurp(dir("rep2") + "/report.json"));
  EXPECT_NEAR(r["pairs"][0]["excess"].get<double>(), 1.309, 5e-4);
  EXPECT_NEAR(r["pairs"][1]["excess"].get<double>(), 0.928, 5e-4);
  EXPECT_NEAR(r["pairs"][2]["excess"].get<double>(), 1.314, 5e-4);
  EXPECT_NE(slurp(dir("rep") + "/report.txt").find("Q1-Q2"), std::string::npos);

  ::testing::internal::CaptureStderr();
  EXPECT_EQ(run({"fit-tunability", "--curve", "Q1-Q2:conventional:" + dir("in") + "/none.csv", "--output-dir", dir("e")}), 1);
  EXPECT_EQ(run({"fit-tunability", "--curve", "nonsense", "--output-dir", dir("e")}), 1);
  ::testing::internal::GetCapturedStderr();
}

TEST_F(Cli, SimulatePotential) {
  ASSERT_EQ(run({"simulate-potential", "--config", kConfig, "--nx", "200", "--nz", "80", "--output-dir", dir("p")}), 0);
  const auto t = dotlab::read_csv_file(dir("p") + "/potential_2deg.csv");
  EXPECT_EQ(t.header, (std::vector<std::string>{"x_nm", "U_eV", "sigma_c_per_m2"}));
  EXPECT_EQ(t.rows.size(), 200u);
  const auto s = json::parse(slurp(dir("p") + "/potential_summary.json"));
  EXPECT_GE(s["iterations"].get<int>(), 1);
  EXPECT_TRUE(s.contains("final_residual_v"));
}

TEST_F(Cli, ReproduceFigure4b) {
  ASSERT_EQ(run({"reproduce-figure", "--config", kConfig, "--figure", "4b", "--output-dir", dir("f")}), 0);
  const auto doc = json::parse(slurp(dir("f") + "/figure_4b.json"));
  ASSERT_EQ(doc["pairs"].size(), 3u);
  const std::array<double, 3> ratios{16.6 / 7.25, 11.4 / 3.87, 15.4 / 4.32};
  for (int k = 0; k < 3; ++k) EXPECT_NEAR(doc["pairs"][k]["ratio"].get<double>(), ratios[k], 0.01 * ratios[k]);
  EXPECT_TRUE(doc["fit_failures"].empty());
  EXPECT_TRUE(fs::exists(dir("f") + "/exchange_curves.csv"));
}
