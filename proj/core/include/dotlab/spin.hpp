#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <random>
#include <variant>
#include <vector>

#include "dotlab/device.hpp"

namespace dotlab {

/// Exchange-coupled spin chain in a frame rotating at `reference_hz`.
/// Basis index bit (n-1-i) holds qubit i (qubit 0 is the most significant
/// bit); bit value 1 is spin up, Sz|up> = +1/2.
struct SpinSystem {
  double reference_hz = 0.0;
  std::vector<double> detuning_hz;      // f_i - reference
  std::vector<double> slope_hz_per_v;   // Z shift per volt of barrier pulse on the pulsed pair
  std::vector<ExchangeParams> exchange;
  double rabi_hz = 2e6;

  int size() const { return static_cast<int>(detuning_hz.size()); }
  double larmor_hz(int q) const { return reference_hz + detuning_hz.at(static_cast<std::size_t>(q)); }
  void validate() const;
  /// Exchange entry for an adjacent pair (either order). Throws DomainError.
  const ExchangeParams& pair(int a, int b) const;
  /// J = A exp(B v) for the pair.
  double exchange_hz(int a, int b, double v) const;

  static SpinSystem from_params(const SpinParams& params);
};

struct QuantumState {
  std::vector<std::complex<double>> amplitudes;
  double time_s = 0.0;  // absolute sequence clock, sets drive phases

  static QuantumState basis(int qubits, std::uint64_t index = 0);
  int qubits() const;
  double norm() const;
  /// Probability that qubit q is up.
  double probability_up(int q) const;
};

struct Drive {
  int target = 0;
  double frequency_hz = 0.0;  // absolute microwave frequency
  double rabi_hz = 0.0;
  double phase_rad = 0.0;
};

struct ExchangePulse {
  int qubit_a = 0;
  int qubit_b = 1;
  double amplitude_v = 0.0;
};

/// Piecewise-constant control segment. Drives may run concurrently with
/// exchange pulses; `z_offset_hz` adds static per-qubit detunings.
struct Segment {
  double duration_s = 0.0;
  std::vector<Drive> drives;
  std::vector<ExchangePulse> exchange;
  std::vector<double> z_offset_hz;
};

struct MicrowaveDrive {
  int target = 0;
  double frequency_hz = 0.0;
  double rabi_hz = 0.0;
  double phase_rad = 0.0;
  double duration_s = 0.0;
};

struct ExchangeWindow {
  int qubit_a = 0;
  int qubit_b = 1;
  double amplitude_v = 0.0;
  double duration_s = 0.0;
  std::vector<double> z_offset_hz;
};

struct Idle {
  double duration_s = 0.0;
  std::vector<double> z_offset_hz;
};

enum class Parity { even, odd };

struct ParityMeasure {
  int qubit_a = 0;
  int qubit_b = 1;
};

/// Instantaneous pi rotation about the target's x axis, applied when the last
/// reported parity equals `condition`.
struct ConditionalPi {
  int target = 0;
  Parity condition = Parity::even;
};

/// Ideal zCNOT: flips the target when the control is down.
struct ZCnot {
  int control = 0;
  int target = 1;
};

using PulseElement = std::variant<MicrowaveDrive, ExchangeWindow, Idle, Segment, ParityMeasure, ConditionalPi, ZCnot>;
using PulseSequence = std::vector<PulseElement>;

struct ReadoutModel {
  double snr = 10.6;
  double integration_time_s = 2e-6;
  std::uint64_t seed = 0;
  bool ideal = false;

  void validate() const;
  double fidelity() const;
};

struct MeasurementResult {
  std::vector<Parity> outcomes;  // reported (after readout error)
  QuantumState state;            // post-sequence state
};

/// Dense 2^n x 2^n Hermitian matrix, row-major, in Hz (H/h).
struct Hamiltonian {
  int dimension = 0;
  std::vector<std::complex<double>> elements;
  std::complex<double> operator()(int r, int c) const { return elements[static_cast<std::size_t>(r) * dimension + c]; }
};

/// Frame-rotating-at-drive Hamiltonian for one segment: every qubit rotates at
/// the (single) drive frequency, or at the reference when undriven.
/// H/h = sum_i (f_i - f_frame) Sz_i + drives Omega (cos phi Sx + sin phi Sy)
///       + sum_pairs J (S_a.S_b - 1/4).
Hamiltonian build_hamiltonian(const SpinSystem& system, const std::vector<Drive>& drives,
                              const std::vector<ExchangePulse>& windows, const std::vector<double>& z_offset_hz = {});

/// state <- exp(-i 2 pi H dt) state (time-independent H; the clock is not advanced).
void evolve(QuantumState& state, const Hamiltonian& h, double dt);

/// Splitmix64-derived stream seeded per (master seed, run index).
std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t index);
double uniform01(std::mt19937_64& rng);

void apply_segment(const SpinSystem& system, QuantumState& state, const Segment& seg);

struct ParityOutcome {
  Parity reported = Parity::even;
  Parity actual = Parity::even;
};

/// Projective parity measurement of (a, b); the reported outcome is flipped
/// with probability 1 - F.
ParityOutcome parity_measure(QuantumState& state, int a, int b, const ReadoutModel& readout, std::mt19937_64& rng);

MeasurementResult run_sequence(const SpinSystem& system, const QuantumState& initial, const PulseSequence& sequence,
                               const ReadoutModel& readout);

struct TraceOptions {
  int shots = 0;  // 0: exact probabilities
  std::uint64_t seed = 0;
  bool ideal_readout = false;
  double readout_snr = 10.6;
  std::optional<double> rabi_hz;
  int jobs = 1;
};

/// Reported probability for a binary event with true probability p, exact or sampled.
double report_probability(double p, const TraceOptions& options, std::uint64_t index);

/// Flip probability of `target` after a burst of duration t at f_target + detuning.
std::vector<double> simulate_rabi(const SpinSystem& system, int target, const std::vector<double>& t_values,
                                  double detuning_hz = 0.0, const TraceOptions& options = {});

struct SpectroscopyMap {
  std::vector<double> amplitudes_v;
  std::vector<double> frequencies_hz;   // absolute
  std::vector<double> probability;      // row-major: index = iv * frequencies + jf
};

/// X(control) then an exchange window at v with a concurrent pi burst on the
/// target at f_MW; records the target flip probability.
SpectroscopyMap simulate_exchange_spectroscopy(const SpinSystem& system, int control, int target,
                                               const std::vector<double>& amplitudes_v,
                                               const std::vector<double>& frequencies_hz, const TraceOptions& options = {});

/// Exact flip probability of one spectroscopy point.
double spectroscopy_point(const SpinSystem& system, int control, int target, double v, double f_hz, double rabi_hz);

/// The two branch centres of an exact spectroscopy line at amplitude v,
/// located by scanning [f_lo, f_hi] and refining each peak by golden section.
std::pair<double, double> spectroscopy_branches(const SpinSystem& system, int control, int target, double v,
                                                double f_lo, double f_hi, double rabi_hz, int scan_points = 801);

/// Target transition frequencies (control down, control up) of the pair with
/// exchange pulse v, from the drive-free Hamiltonian.
std::pair<double, double> conditional_transition_frequencies(const SpinSystem& system, int control, int target, double v);

struct DczOptions : TraceOptions {
  std::vector<double> z_offset_hz;  // static detunings during the exchange windows
};

/// X(target) - exchange tau/2 - X^2(both) - exchange tau/2 - X^2(both) - X(target); target flip probability.
std::vector<double> simulate_dcz(const SpinSystem& system, int control, int target, double amplitude_v,
                                 const std::vector<double>& tau_values, const DczOptions& options = {});

/// Dimensionless ZZ error parameter J / Omega.
double residual_zz_coefficient(double j_hz, double rabi_hz);

enum class InitMode { none, ideal_zcnot, physical_crot };

struct InitOptions {
  InitMode init2 = InitMode::none;
  double crot_amplitude_v = 0.0;
  std::optional<double> crot_rabi_hz;
};

/// init1: parity readout, then a pi pulse on the second qubit of the pair when even.
/// init2: zCNOT (control = first qubit) as an ideal unitary or a conditional
/// rotation at the control-down branch.
PulseSequence initialize_odd_parity(const SpinSystem& system, int a, int b, const InitOptions& options = {});

/// Physical conditional rotation: pi burst on the target at its control-down branch frequency during exchange v.
Segment conditional_rotation(const SpinSystem& system, int control, int target, double amplitude_v, double rabi_hz);

}  // namespace dotlab
