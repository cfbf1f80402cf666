#include "dotlab/device.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "dotlab/error.hpp"
#include "json.hpp"

namespace dotlab {

using nlohmann::json;

namespace {

constexpr std::string_view kLayerKinds[] = {"dielectric", "semiconductor_barrier", "quantum_well", "substrate"};

LayerKind parse_kind(const std::string& text, const std::string& field) {
  for (std::size_t i = 0; i < std::size(kLayerKinds); ++i) {
    if (text == kLayerKinds[i]) return static_cast<LayerKind>(i);
  }
  throw ConfigError(field, "unknown layer kind '" + text + "'");
}

// Typed accessors that report the JSON path of the offending field.
const json& require(const json& obj, const char* key, const std::string& path) {
  if (!obj.is_object()) throw ConfigError(path, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) throw ConfigError(path.empty() ? key : path + "." + key, "missing required field");
  return *it;
}

double as_number(const json& value, const std::string& path) {
  if (!value.is_number()) throw ConfigError(path, "expected a number");
  double v = value.get<double>();
  if (!std::isfinite(v)) throw ConfigError(path, "expected a finite number");
  return v;
}

std::string as_string(const json& value, const std::string& path) {
  if (!value.is_string()) throw ConfigError(path, "expected a string");
  return value.get<std::string>();
}

int as_int(const json& value, const std::string& path) {
  if (!value.is_number_integer()) throw ConfigError(path, "expected an integer");
  return value.get<int>();
}

std::vector<double> as_number_array(const json& value, const std::string& path) {
  if (!value.is_array()) throw ConfigError(path, "expected an array");
  std::vector<double> out;
  for (std::size_t i = 0; i < value.size(); ++i) out.push_back(as_number(value[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

std::vector<std::string> as_string_array(const json& value, const std::string& path) {
  if (!value.is_array()) throw ConfigError(path, "expected an array");
  std::vector<std::string> out;
  for (std::size_t i = 0; i < value.size(); ++i) out.push_back(as_string(value[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

void reject_unknown_keys(const json& obj, std::initializer_list<std::string_view> known, const std::string& path) {
  for (const auto& [key, _] : obj.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw ConfigError(path.empty() ? key : path + "." + key, "unknown field");
    }
  }
}

MaterialLayer parse_layer(const json& j, const std::string& path) {
  reject_unknown_keys(j, {"name", "thickness_nm", "permittivity", "kind", "gate_plane"}, path);
  MaterialLayer layer;
  layer.name = as_string(require(j, "name", path), path + ".name");
  layer.thickness_nm = as_number(require(j, "thickness_nm", path), path + ".thickness_nm");
  layer.relative_permittivity = as_number(require(j, "permittivity", path), path + ".permittivity");
  layer.kind = parse_kind(as_string(require(j, "kind", path), path + ".kind"), path + ".kind");
  if (j.contains("gate_plane")) layer.gate_plane = as_int(j["gate_plane"], path + ".gate_plane");
  if (!(layer.thickness_nm > 0.0)) throw ConfigError(path + ".thickness_nm", "thickness must be > 0");
  if (layer.relative_permittivity < 1.0) throw ConfigError(path + ".permittivity", "relative permittivity must be >= 1");
  if (layer.gate_plane && (*layer.gate_plane < 1 || *layer.gate_plane > 3)) {
    throw ConfigError(path + ".gate_plane", "metal layer must be 1, 2 or 3");
  }
  return layer;
}

GateElectrode parse_gate(const json& j, const std::string& path) {
  reject_unknown_keys(j, {"id", "metal_layer", "span_nm"}, path);
  GateElectrode g;
  g.id = as_string(require(j, "id", path), path + ".id");
  if (g.id.empty()) throw ConfigError(path + ".id", "gate id must not be empty");
  g.metal_layer = as_int(require(j, "metal_layer", path), path + ".metal_layer");
  if (g.metal_layer < 1 || g.metal_layer > 3) throw ConfigError(path + ".metal_layer", "metal layer must be 1, 2 or 3");
  auto span = as_number_array(require(j, "span_nm", path), path + ".span_nm");
  if (span.size() != 2) throw ConfigError(path + ".span_nm", "expected [x0, x1]");
  g.x0_nm = span[0];
  g.x1_nm = span[1];
  if (!(g.x0_nm < g.x1_nm)) throw ConfigError(path + ".span_nm", "span requires x0 < x1");
  g.role = GateRole::screening;
  g.label = g.id;
  return g;
}

SpinParams parse_spin(const json& j, const std::string& path) {
  reject_unknown_keys(j, {"larmor_hz", "spectroscopy_slope_hz_per_v", "rabi_hz", "exchange", "readout_snr",
                          "integration_time_s"},
                      path);
  SpinParams s;
  s.larmor_hz = as_number_array(require(j, "larmor_hz", path), path + ".larmor_hz");
  if (j.contains("spectroscopy_slope_hz_per_v")) {
    s.spectroscopy_slope_hz_per_v = as_number_array(j["spectroscopy_slope_hz_per_v"], path + ".spectroscopy_slope_hz_per_v");
  } else {
    s.spectroscopy_slope_hz_per_v.assign(s.larmor_hz.size(), 0.0);
  }
  if (s.spectroscopy_slope_hz_per_v.size() != s.larmor_hz.size()) {
    throw ConfigError(path + ".spectroscopy_slope_hz_per_v", "length must match larmor_hz");
  }
  if (j.contains("rabi_hz")) s.rabi_hz = as_number(j["rabi_hz"], path + ".rabi_hz");
  if (j.contains("readout_snr")) s.readout_snr = as_number(j["readout_snr"], path + ".readout_snr");
  if (j.contains("integration_time_s")) s.integration_time_s = as_number(j["integration_time_s"], path + ".integration_time_s");
  if (!(s.rabi_hz >= 0.0)) throw ConfigError(path + ".rabi_hz", "Rabi frequency must be >= 0");
  if (!(s.readout_snr > 0.0)) throw ConfigError(path + ".readout_snr", "snr must be > 0");
  if (j.contains("exchange")) {
    const auto& arr = j["exchange"];
    if (!arr.is_array()) throw ConfigError(path + ".exchange", "expected an array");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string p = path + ".exchange[" + std::to_string(i) + "]";
      reject_unknown_keys(arr[i], {"pair", "A_hz", "B_per_v", "residual_hz"}, p);
      ExchangeParams e;
      auto pair = as_number_array(require(arr[i], "pair", p), p + ".pair");
      if (pair.size() != 2) throw ConfigError(p + ".pair", "expected two 1-based qubit indices");
      e.qubit_a = static_cast<int>(pair[0]) - 1;
      e.qubit_b = static_cast<int>(pair[1]) - 1;
      e.amplitude_hz = as_number(require(arr[i], "A_hz", p), p + ".A_hz");
      e.rate_per_v = as_number(require(arr[i], "B_per_v", p), p + ".B_per_v");
      if (arr[i].contains("residual_hz")) e.residual_hz = as_number(arr[i]["residual_hz"], p + ".residual_hz");
      if (!(e.amplitude_hz > 0.0)) throw ConfigError(p + ".A_hz", "A must be > 0");
      s.exchange.push_back(e);
    }
  }
  return s;
}

void validate_device(DeviceDescription& d) {
  if (d.stack.empty()) throw ConfigError("stack", "stack must contain at least one layer");
  int wells = 0;
  std::set<int> planes;
  for (std::size_t i = 0; i < d.stack.size(); ++i) {
    if (d.stack[i].kind == LayerKind::quantum_well) ++wells;
    if (auto p = d.stack[i].gate_plane) {
      if (!planes.insert(*p).second) {
        throw ConfigError("stack[" + std::to_string(i) + "].gate_plane", "metal layer hosted by more than one slab");
      }
    }
  }
  if (wells != 1) throw ConfigError("stack", "exactly one quantum_well layer is required (found " + std::to_string(wells) + ")");

  std::set<std::string> ids;
  for (std::size_t i = 0; i < d.gates.size(); ++i) {
    const auto& g = d.gates[i];
    if (!ids.insert(g.id).second) throw ConfigError("gates[" + std::to_string(i) + "].id", "duplicate gate id '" + g.id + "'");
    if (!planes.count(g.metal_layer)) {
      throw ConfigError("gates[" + std::to_string(i) + "].metal_layer",
                        "no stack layer declares gate_plane " + std::to_string(g.metal_layer));
    }
    if (d.gate_plane_height_nm(g.metal_layer) <= d.two_deg_height_nm()) {
      throw ConfigError("gates[" + std::to_string(i) + "].metal_layer", "gate plane must lie above the 2DEG");
    }
  }
  for (std::size_t i = 0; i < d.gates.size(); ++i) {
    for (std::size_t j = i + 1; j < d.gates.size(); ++j) {
      const auto& a = d.gates[i];
      const auto& b = d.gates[j];
      if (a.metal_layer == b.metal_layer && a.x0_nm < b.x1_nm && b.x0_nm < a.x1_nm) {
        throw ConfigError("gates[" + std::to_string(j) + "].span_nm",
                          "overlapping electrodes '" + a.id + "' and '" + b.id + "' on metal layer " +
                              std::to_string(a.metal_layer));
      }
    }
  }

  bool has_nanogates = std::any_of(d.gates.begin(), d.gates.end(), [](const auto& g) { return g.metal_layer > 1; });
  if (has_nanogates) d.gates = assign_roles(d.gates, d.strategy);

  if (!(d.limits.breakdown_v > 0.0)) throw ConfigError("limits.breakdown_v", "breakdown limit must be > 0");
  auto check_volts = [&](const VoltageConfiguration& volts, const std::string& path) {
    for (const auto& g : d.gates) {
      if (!volts.contains(g.id)) throw ConfigError(path + "." + g.id, "missing voltage for gate");
    }
    for (const auto& [id, v] : volts.values()) {
      if (!ids.count(id)) throw ConfigError(path + "." + id, "voltage given for unknown gate");
    }
    try {
      volts.check_breakdown(d.limits.breakdown_v);
    } catch (const DomainError& e) {
      throw ConfigError(path, e.what());
    }
  };
  check_volts(d.voltages, "voltages");
  for (const auto& [s, volts] : d.tunings) check_volts(volts, "tunings." + std::string(to_string(s)));

  if (d.virtual_gates.names.empty()) {
    auto gate_ids = d.gate_ids();
    d.virtual_gates = VirtualGateMatrix::identity(gate_ids);
  }
  const auto& vg = d.virtual_gates;
  if (vg.gates.size() != vg.names.size() || vg.matrix.size() != vg.names.size() * vg.gates.size()) {
    throw ConfigError("virtual_gates.matrix", "virtual gate matrix must be square and match names/gates");
  }
  for (std::size_t i = 0; i < vg.gates.size(); ++i) {
    try {
      (void)d.gate(vg.gates[i]);
    } catch (const ConfigError&) {
      throw ConfigError("virtual_gates.gates[" + std::to_string(i) + "]", "unknown gate '" + vg.gates[i] + "'");
    }
  }
  try {
    vg.validate();
  } catch (const DomainError& e) {
    throw ConfigError("virtual_gates.matrix", e.what());
  }

  if (d.spin) {
    const auto n = d.spin->larmor_hz.size();
    if (n < 2 || n > 5) throw ConfigError("spin.larmor_hz", "2 to 5 qubits are supported");
    for (std::size_t i = 0; i < d.spin->exchange.size(); ++i) {
      const auto& e = d.spin->exchange[i];
      if (e.qubit_a < 0 || e.qubit_b < 0 || e.qubit_a >= static_cast<int>(n) || e.qubit_b >= static_cast<int>(n) ||
          std::abs(e.qubit_a - e.qubit_b) != 1) {
        throw ConfigError("spin.exchange[" + std::to_string(i) + "].pair", "pair must name adjacent qubits");
      }
    }
  }
  if (d.occupation) {
    for (std::size_t i = 0; i < d.occupation->electrons.size(); ++i) {
      if (d.occupation->electrons[i] < 0) throw ConfigError("occupation[" + std::to_string(i) + "]", "electron count must be >= 0");
    }
  }
}

}  // namespace

double VoltageConfiguration::at(std::string_view gate_id) const {
  auto it = volts_.find(std::string(gate_id));
  if (it == volts_.end()) throw ConfigError("voltages." + std::string(gate_id), "no voltage for gate");
  return it->second;
}

double VoltageConfiguration::max_difference() const {
  if (volts_.empty()) return 0.0;
  auto [lo, hi] = std::minmax_element(volts_.begin(), volts_.end(),
                                      [](const auto& a, const auto& b) { return a.second < b.second; });
  return hi->second - lo->second;
}

void VoltageConfiguration::check_breakdown(double limit_v) const {
  const double diff = max_difference();
  if (diff > limit_v) {
    std::ostringstream os;
    os << "inter-gate voltage difference " << diff << " V exceeds breakdown limit " << limit_v << " V";
    throw DomainError(os.str());
  }
}

VirtualGateMatrix VirtualGateMatrix::identity(std::span<const std::string> gate_ids) {
  VirtualGateMatrix m;
  const auto n = gate_ids.size();
  for (const auto& id : gate_ids) {
    m.names.push_back("v" + id);
    m.gates.push_back(id);
  }
  m.matrix.assign(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) m.matrix[i * n + i] = 1.0;
  return m;
}

void VirtualGateMatrix::validate() const {
  const auto n = names.size();
  if (n == 0 || gates.size() != n || matrix.size() != n * n) throw DomainError("virtual gate matrix must be square");
  Eigen::MatrixXd m(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) m(i, j) = matrix[i * n + j];
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const auto& s = svd.singularValues();
  if (s(0) == 0.0 || s(n - 1) / s(0) < 1e-10) throw DomainError("virtual gate matrix is numerically singular");
}

double DeviceDescription::stack_height_nm() const {
  double h = 0.0;
  for (const auto& l : stack) h += l.thickness_nm;
  return h;
}

double DeviceDescription::two_deg_height_nm() const {
  double h = 0.0;
  for (const auto& l : stack) {
    h += l.thickness_nm;
    if (l.kind == LayerKind::quantum_well) return h;
  }
  throw ConfigError("stack", "no quantum_well layer");
}

double DeviceDescription::two_deg_depth_nm() const { return stack_height_nm() - two_deg_height_nm(); }

double DeviceDescription::gate_plane_height_nm(int metal_layer) const {
  double h = 0.0;
  for (const auto& l : stack) {
    h += l.thickness_nm;
    if (l.gate_plane && *l.gate_plane == metal_layer) return h;
  }
  throw ConfigError("stack", "no slab hosts metal layer " + std::to_string(metal_layer));
}

double DeviceDescription::permittivity_at(double z_nm) const {
  double h = 0.0;
  for (const auto& l : stack) {
    h += l.thickness_nm;
    if (z_nm < h) return l.relative_permittivity;
  }
  return stack.back().relative_permittivity;
}

const GateElectrode& DeviceDescription::gate(std::string_view id_or_label) const {
  for (const auto& g : gates)
    if (g.id == id_or_label) return g;
  for (const auto& g : gates)
    if (g.label == id_or_label) return g;
  throw ConfigError("gates", "unknown gate '" + std::string(id_or_label) + "'");
}

std::vector<std::string> DeviceDescription::gate_ids() const {
  std::vector<std::string> ids;
  for (const auto& g : gates) ids.push_back(g.id);
  return ids;
}

std::size_t DeviceDescription::dot_count() const {
  return static_cast<std::size_t>(
      std::count_if(gates.begin(), gates.end(), [](const auto& g) { return g.role == GateRole::plunger; }));
}

GateLayout assign_roles(const GateLayout& layout, TuningStrategy strategy) {
  std::vector<std::size_t> nano;
  for (std::size_t i = 0; i < layout.size(); ++i)
    if (layout[i].metal_layer > 1) nano.push_back(i);
  std::sort(nano.begin(), nano.end(), [&](auto a, auto b) { return layout[a].center_nm() < layout[b].center_nm(); });

  bool has2 = false, has3 = false;
  for (auto i : nano) (layout[i].metal_layer == 2 ? has2 : has3) = true;
  if (!has2 || !has3) throw DomainError("layout lacking alternating layer-2/layer-3 electrodes");
  for (std::size_t k = 1; k < nano.size(); ++k) {
    if (layout[nano[k]].metal_layer == layout[nano[k - 1]].metal_layer) {
      throw DomainError("layout lacking alternating layer-2/layer-3 electrodes (" + layout[nano[k - 1]].id + ", " +
                        layout[nano[k]].id + ")");
    }
  }

  const int plunger_layer = strategy == TuningStrategy::conventional ? 2 : 3;
  GateLayout out = layout;
  int plungers_left = 0;
  for (auto i : nano) {
    auto& g = out[i];
    if (g.metal_layer == plunger_layer) {
      ++plungers_left;
      g.role = GateRole::plunger;
      g.label = "P" + std::to_string(plungers_left);
    } else {
      g.role = GateRole::barrier;
      g.label = "B" + std::to_string(plungers_left + 1);
    }
  }
  for (auto& g : out) {
    if (g.metal_layer == 1) {
      g.role = GateRole::screening;
      g.label = g.id;
    }
  }
  return out;
}

VoltageConfiguration apply_virtual_gates(const DeviceDescription& device, const VoltageConfiguration& base,
                                         const std::map<std::string, double>& dv) {
  const auto& m = device.virtual_gates;
  std::vector<double> dvv(m.names.size(), 0.0);
  for (const auto& [name, value] : dv) {
    auto it = std::find(m.names.begin(), m.names.end(), name);
    // "v<label>" also names the identity column of the gate carrying that role label.
    if (it == m.names.end() && name.size() > 1 && name[0] == 'v') {
      for (const auto& g : device.gates)
        if (g.label == name.substr(1)) it = std::find(m.names.begin(), m.names.end(), "v" + g.id);
    }
    if (it == m.names.end()) throw DomainError("unknown virtual gate '" + name + "'");
    dvv[static_cast<std::size_t>(it - m.names.begin())] = value;
  }
  VoltageConfiguration out = base;
  for (std::size_t r = 0; r < m.gates.size(); ++r) {
    double inc = 0.0;
    for (std::size_t c = 0; c < dvv.size(); ++c) inc += m(r, c) * dvv[c];
    const auto& id = device.gate(m.gates[r]).id;
    out.set(id, base.at(id) + inc);
  }
  out.check_breakdown(device.limits.breakdown_v);
  return out;
}

DeviceDescription load_device_config(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError("", std::string("malformed JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("", "top-level document must be an object");
  reject_unknown_keys(doc, {"stack", "gates", "strategy", "voltages", "virtual_gates", "limits", "charge_model", "spin",
                            "occupation", "description", "tunings"},
                      "");

  DeviceDescription d;
  const auto& stack = require(doc, "stack", "");
  if (!stack.is_array()) throw ConfigError("stack", "expected an array");
  for (std::size_t i = 0; i < stack.size(); ++i) d.stack.push_back(parse_layer(stack[i], "stack[" + std::to_string(i) + "]"));

  const auto& gates = require(doc, "gates", "");
  if (!gates.is_array()) throw ConfigError("gates", "expected an array");
  for (std::size_t i = 0; i < gates.size(); ++i) d.gates.push_back(parse_gate(gates[i], "gates[" + std::to_string(i) + "]"));

  d.strategy = [&] {
    const auto text = as_string(require(doc, "strategy", ""), "strategy");
    try {
      return parse_strategy(text);
    } catch (const DomainError& e) {
      throw ConfigError("strategy", e.what());
    }
  }();

  const auto& volts = require(doc, "voltages", "");
  if (!volts.is_object()) throw ConfigError("voltages", "expected an object of gate id -> volts");
  for (const auto& [id, v] : volts.items()) d.voltages.set(id, as_number(v, "voltages." + id));

  if (doc.contains("tunings")) {
    const auto& tn = doc["tunings"];
    if (!tn.is_object()) throw ConfigError("tunings", "expected an object of strategy -> voltages");
    for (const auto& [name, set] : tn.items()) {
      TuningStrategy s;
      try {
        s = parse_strategy(name);
      } catch (const DomainError& e) {
        throw ConfigError("tunings." + name, e.what());
      }
      if (!set.is_object()) throw ConfigError("tunings." + name, "expected an object of gate id -> volts");
      VoltageConfiguration vc;
      for (const auto& [id, v] : set.items()) vc.set(id, as_number(v, "tunings." + name + "." + id));
      d.tunings[s] = vc;
    }
  }

  if (doc.contains("virtual_gates")) {
    const auto& vg = doc["virtual_gates"];
    reject_unknown_keys(vg, {"names", "gates", "matrix"}, "virtual_gates");
    d.virtual_gates.names = as_string_array(require(vg, "names", "virtual_gates"), "virtual_gates.names");
    d.virtual_gates.gates = as_string_array(require(vg, "gates", "virtual_gates"), "virtual_gates.gates");
    d.virtual_gates.matrix = as_number_array(require(vg, "matrix", "virtual_gates"), "virtual_gates.matrix");
  }
  if (doc.contains("limits")) {
    reject_unknown_keys(doc["limits"], {"breakdown_v"}, "limits");
    if (doc["limits"].contains("breakdown_v")) d.limits.breakdown_v = as_number(doc["limits"]["breakdown_v"], "limits.breakdown_v");
  }
  if (doc.contains("charge_model")) {
    const auto& cm = doc["charge_model"];
    reject_unknown_keys(cm, {"valley_degeneracy", "transverse_mass_me", "fermi_energy_ev"}, "charge_model");
    if (cm.contains("valley_degeneracy")) d.charge_model.valley_degeneracy = as_number(cm["valley_degeneracy"], "charge_model.valley_degeneracy");
    if (cm.contains("transverse_mass_me")) d.charge_model.transverse_mass_me = as_number(cm["transverse_mass_me"], "charge_model.transverse_mass_me");
    if (cm.contains("fermi_energy_ev")) d.charge_model.fermi_energy_ev = as_number(cm["fermi_energy_ev"], "charge_model.fermi_energy_ev");
    if (!(d.charge_model.transverse_mass_me > 0.0)) throw ConfigError("charge_model.transverse_mass_me", "mass must be > 0");
    if (!(d.charge_model.valley_degeneracy > 0.0)) throw ConfigError("charge_model.valley_degeneracy", "degeneracy must be > 0");
  }
  if (doc.contains("spin")) d.spin = parse_spin(doc["spin"], "spin");
  if (doc.contains("occupation")) {
    const auto& occ = doc["occupation"];
    if (!occ.is_array()) throw ConfigError("occupation", "expected an array of electron counts");
    ChargeConfiguration c;
    for (std::size_t i = 0; i < occ.size(); ++i) c.electrons.push_back(as_int(occ[i], "occupation[" + std::to_string(i) + "]"));
    d.occupation = c;
  }

  validate_device(d);
  return d;
}

DeviceDescription load_device_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "config not found: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return load_device_config(buf.str());
}

std::string serialize_device_config(const DeviceDescription& d) {
  json doc;
  doc["stack"] = json::array();
  for (const auto& l : d.stack) {
    json j{{"name", l.name},
           {"thickness_nm", l.thickness_nm},
           {"permittivity", l.relative_permittivity},
           {"kind", std::string(to_string(l.kind))}};
    if (l.gate_plane) j["gate_plane"] = *l.gate_plane;
    doc["stack"].push_back(j);
  }
  doc["gates"] = json::array();
  for (const auto& g : d.gates) doc["gates"].push_back({{"id", g.id}, {"metal_layer", g.metal_layer}, {"span_nm", {g.x0_nm, g.x1_nm}}});
  doc["strategy"] = std::string(to_string(d.strategy));
  doc["voltages"] = json::object();
  for (const auto& [id, v] : d.voltages.values()) doc["voltages"][id] = v;
  if (!d.tunings.empty()) {
    doc["tunings"] = json::object();
    for (const auto& [st, volts] : d.tunings) {
      json set = json::object();
      for (const auto& [id, v] : volts.values()) set[id] = v;
      doc["tunings"][std::string(to_string(st))] = set;
    }
  }
  doc["virtual_gates"] = {{"names", d.virtual_gates.names}, {"gates", d.virtual_gates.gates}, {"matrix", d.virtual_gates.matrix}};
  doc["limits"] = {{"breakdown_v", d.limits.breakdown_v}};
  doc["charge_model"] = {{"valley_degeneracy", d.charge_model.valley_degeneracy},
                         {"transverse_mass_me", d.charge_model.transverse_mass_me},
                         {"fermi_energy_ev", d.charge_model.fermi_energy_ev}};
  if (d.spin) {
    const auto& s = *d.spin;
    json ex = json::array();
    for (const auto& e : s.exchange) {
      ex.push_back({{"pair", {e.qubit_a + 1, e.qubit_b + 1}},
                    {"A_hz", e.amplitude_hz},
                    {"B_per_v", e.rate_per_v},
                    {"residual_hz", e.residual_hz}});
    }
    doc["spin"] = {{"larmor_hz", s.larmor_hz},
                   {"spectroscopy_slope_hz_per_v", s.spectroscopy_slope_hz_per_v},
                   {"rabi_hz", s.rabi_hz},
                   {"exchange", ex},
                   {"readout_snr", s.readout_snr},
                   {"integration_time_s", s.integration_time_s}};
  }
  if (d.occupation) doc["occupation"] = d.occupation->electrons;
  return doc.dump(2);
}

DeviceDescription with_strategy(const DeviceDescription& device, TuningStrategy strategy) {
  DeviceDescription d = device;
  d.strategy = strategy;
  d.gates = assign_roles(device.gates, strategy);
  if (auto it = device.tunings.find(strategy); it != device.tunings.end()) {
    d.voltages = it->second;
  } else if (strategy != device.strategy) {
    throw ConfigError("tunings." + std::string(to_string(strategy)), "no operating point for this strategy");
  }
  return d;
}

std::string_view to_string(TuningStrategy s) { return s == TuningStrategy::conventional ? "conventional" : "interchanged"; }

std::string_view to_string(GateRole r) {
  switch (r) {
    case GateRole::screening: return "screening";
    case GateRole::plunger: return "plunger";
    case GateRole::barrier: return "barrier";
  }
  return "?";
}

std::string_view to_string(LayerKind k) { return kLayerKinds[static_cast<std::size_t>(k)]; }

TuningStrategy parse_strategy(std::string_view text) {
  if (text == "conventional") return TuningStrategy::conventional;
  if (text == "interchanged") return TuningStrategy::interchanged;
  throw DomainError("unknown tuning strategy '" + std::string(text) + "'");
}

}  // namespace dotlab
