#pragma once

#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

#include "dotlab/device.hpp"
#include "dotlab/electrostatics.hpp"

namespace testing_support {

inline std::string data_path(const std::string& name) { return std::string(DOTLAB_TEST_DATA) + "/" + name; }
inline std::string config_path(const std::string& name) { return std::string(DOTLAB_CONFIG_DIR) + "/" + name; }

inline std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

inline dotlab::DeviceDescription reference_device() {
  return dotlab::load_device_config_file(config_path("device_reference.json"));
}

// Laterally uniform two-slab capacitor: grounded bottom, one gate covering the whole top.
// The 2DEG plane sits at the slab interface.
inline dotlab::DeviceDescription parallel_plate(double gate_v, double fermi_ev = 0.0) {
  using namespace dotlab;
  DeviceDescription d;
  d.stack = {MaterialLayer{"lower", 30.0, 13.2, LayerKind::quantum_well, std::nullopt},
             MaterialLayer{"upper", 20.0, 9.0, LayerKind::dielectric, 1}};
  d.gates = {GateElectrode{"T", 1, -100.0, 100.0, GateRole::screening, "T"}};
  d.voltages.set("T", gate_v);
  d.charge_model.fermi_energy_ev = fermi_ev;
  return d;
}

inline dotlab::GridResolution plate_resolution() {
  dotlab::GridResolution r;
  r.nx = 64;
  r.nz = 51;
  r.x_range_nm = std::pair{-100.0, 100.0};
  return r;
}

// Two Gaussian wells of depth `depth_ev` at +-`centre` nm on a hard-wall box.
inline dotlab::PotentialProfile1D double_gaussian(double depth_l, double depth_r, double centre = 40.0,
                                                  double width = 20.0, double half_box = 150.0, int nodes = 1201) {
  dotlab::PotentialProfile1D p;
  for (int i = 0; i < nodes; ++i) {
    const double x = -half_box + 2.0 * half_box * i / (nodes - 1);
    p.x_nm.push_back(x);
    p.u_ev.push_back(-depth_l * std::exp(-std::pow((x + centre) / width, 2)) -
                     depth_r * std::exp(-std::pow((x - centre) / width, 2)));
  }
  return p;
}

}  // namespace testing_support
