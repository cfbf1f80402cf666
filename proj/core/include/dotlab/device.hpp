#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dotlab {

enum class LayerKind { dielectric, semiconductor_barrier, quantum_well, substrate };

/// One slab of the heterostructure / gate stack. Stacks are ordered bottom-up.
/// `gate_plane` names the metal layer whose electrodes sit on the top surface
/// of this slab (thin-gate approximation).
struct MaterialLayer {
  std::string name;
  double thickness_nm = 0.0;
  double relative_permittivity = 1.0;
  LayerKind kind = LayerKind::dielectric;
  std::optional<int> gate_plane;

  bool operator==(const MaterialLayer&) const = default;
};

enum class GateRole { screening, plunger, barrier };

/// Metal layer 1 holds screening gates, layers 2 and 3 the alternating nanogates.
struct GateElectrode {
  std::string id;
  int metal_layer = 1;
  double x0_nm = 0.0;
  double x1_nm = 0.0;
  GateRole role = GateRole::screening;
  // Role-derived display name ("P2", "B3", or the id for screening gates).
  std::string label;

  double center_nm() const { return 0.5 * (x0_nm + x1_nm); }
  bool operator==(const GateElectrode&) const = default;
};

enum class TuningStrategy { conventional, interchanged };

using GateLayout = std::vector<GateElectrode>;

/// Volts per gate id.
class VoltageConfiguration {
 public:
  VoltageConfiguration() = default;
  explicit VoltageConfiguration(std::map<std::string, double> volts) : volts_(std::move(volts)) {}

  double at(std::string_view gate_id) const;
  void set(const std::string& gate_id, double volts) { volts_[gate_id] = volts; }
  bool contains(std::string_view gate_id) const { return volts_.find(std::string(gate_id)) != volts_.end(); }
  const std::map<std::string, double>& values() const { return volts_; }

  /// Largest |V_a - V_b| over all gate pairs.
  double max_difference() const;
  /// Throws DomainError when max_difference() exceeds `limit_v`.
  void check_breakdown(double limit_v) const;

  bool operator==(const VoltageConfiguration&) const = default;

 private:
  std::map<std::string, double> volts_;
};

/// Maps virtual increments to physical increments: dv_phys = M * dv_virt.
/// Rows follow `gates` (physical ids or role labels), columns follow `names`.
struct VirtualGateMatrix {
  std::vector<std::string> names;
  std::vector<std::string> gates;
  std::vector<double> matrix;  // row-major, gates.size() x names.size()

  static VirtualGateMatrix identity(std::span<const std::string> gate_ids);
  std::size_t size() const { return names.size(); }
  double operator()(std::size_t row, std::size_t col) const { return matrix[row * names.size() + col]; }
  /// Throws DomainError unless square and numerically invertible (1/cond > 1e-10).
  void validate() const;

  bool operator==(const VirtualGateMatrix&) const = default;
};

struct ChargeConfiguration {
  std::vector<int> electrons;
  bool operator==(const ChargeConfiguration&) const = default;
};

/// Thomas-Fermi 2DEG parameters. The transverse mass is not a measured value
/// of the reference device; 0.19 m_e is the textbook Si value.
struct ChargeModel {
  double valley_degeneracy = 2.0;
  double transverse_mass_me = 0.19;
  double fermi_energy_ev = 0.0;
  bool operator==(const ChargeModel&) const = default;
};

struct ExchangeParams {
  int qubit_a = 0;
  int qubit_b = 1;
  double amplitude_hz = 0.0;    // A in J = A exp(B v)
  double rate_per_v = 0.0;      // B
  double residual_hz = 0.0;     // J outside exchange windows
  bool operator==(const ExchangeParams&) const = default;
};

/// Spin-qubit parameters carried alongside the device (optional `spin` block).
struct SpinParams {
  std::vector<double> larmor_hz;              // absolute, typically 15-16 GHz
  std::vector<double> spectroscopy_slope_hz_per_v;
  double rabi_hz = 2e6;
  std::vector<ExchangeParams> exchange;
  double readout_snr = 10.6;
  double integration_time_s = 2e-6;
  bool operator==(const SpinParams&) const = default;
};

struct DeviceLimits {
  double breakdown_v = 4.0;
  bool operator==(const DeviceLimits&) const = default;
};

struct DeviceDescription {
  std::vector<MaterialLayer> stack;  // bottom-up
  GateLayout gates;
  TuningStrategy strategy = TuningStrategy::conventional;
  VoltageConfiguration voltages;
  // Optional per-strategy operating points (same device retuned).
  std::map<TuningStrategy, VoltageConfiguration> tunings;
  VirtualGateMatrix virtual_gates;
  DeviceLimits limits;
  ChargeModel charge_model;
  std::optional<SpinParams> spin;
  std::optional<ChargeConfiguration> occupation;

  /// Distance from the top of the stack down to the 2DEG plane.
  double two_deg_depth_nm() const;
  /// Height of the 2DEG plane above the bottom of the stack.
  double two_deg_height_nm() const;
  double stack_height_nm() const;
  /// Height of the plane carrying metal layer `metal_layer`.
  double gate_plane_height_nm(int metal_layer) const;
  double permittivity_at(double z_nm) const;

  /// Lookup by id first, then by role label. Throws ConfigError when absent.
  const GateElectrode& gate(std::string_view id_or_label) const;
  std::vector<std::string> gate_ids() const;
  std::size_t dot_count() const;

  bool operator==(const DeviceDescription&) const = default;
};

/// Parses and validates a device JSON document; fills defaults.
DeviceDescription load_device_config(std::string_view json_text);
DeviceDescription load_device_config_file(const std::string& path);
/// Canonical JSON text for `device`; load_device_config(serialize) == device.
std::string serialize_device_config(const DeviceDescription& device);

/// Copy of `device` operated under `strategy`: roles reassigned and voltages
/// taken from `tunings` (or kept when the strategy is unchanged).
DeviceDescription with_strategy(const DeviceDescription& device, TuningStrategy strategy);

/// Relabels layer-2/layer-3 nanogates as plungers or barriers per `strategy`.
GateLayout assign_roles(const GateLayout& layout, TuningStrategy strategy);

/// v_phys = v_base + M * dv. Unknown virtual names and breakdown violations throw.
VoltageConfiguration apply_virtual_gates(const DeviceDescription& device, const VoltageConfiguration& base,
                                         const std::map<std::string, double>& dv);

std::string_view to_string(TuningStrategy strategy);
std::string_view to_string(GateRole role);
std::string_view to_string(LayerKind kind);
TuningStrategy parse_strategy(std::string_view text);

}  // namespace dotlab
