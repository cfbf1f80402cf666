#include "dotlab/spin.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <set>

#include "dotlab/calibration.hpp"
#include "dotlab/constants.hpp"
#include "dotlab/error.hpp"
#include "parallel.hpp"

namespace dotlab {

using cd = std::complex<double>;
constexpr double kTwoPi = 2.0 * constants::pi;

namespace {

int bit(std::size_t state, int q, int n) { return static_cast<int>((state >> (n - 1 - q)) & 1U); }
double sz(std::size_t state, int q, int n) { return bit(state, q, n) ? 0.5 : -0.5; }
std::size_t flip(std::size_t state, int q, int n) { return state ^ (std::size_t{1} << (n - 1 - q)); }

void check_qubit(const SpinSystem& s, int q) {
  if (q < 0 || q >= s.size()) throw DomainError("qubit index " + std::to_string(q) + " out of range");
}

// Hamiltonian (Hz) in a frame where qubit i rotates at frame_hz[i] (relative
// to the reference), evaluated at absolute time t.
Eigen::MatrixXcd frame_hamiltonian(const SpinSystem& sys, const std::vector<Drive>& drives,
                                   const std::vector<ExchangePulse>& windows, const std::vector<double>& z_offset,
                                   const std::vector<double>& frame_hz, double t) {
  const int n = sys.size();
  const std::size_t dim = std::size_t{1} << n;
  Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));

  std::vector<double> z(static_cast<std::size_t>(n));
  for (int q = 0; q < n; ++q) {
    z[q] = sys.detuning_hz[q] - frame_hz[q];
    if (!z_offset.empty()) z[q] += z_offset.at(static_cast<std::size_t>(q));
  }
  for (const auto& w : windows) {
    z[w.qubit_a] += sys.slope_hz_per_v[w.qubit_a] * w.amplitude_v;
    z[w.qubit_b] += sys.slope_hz_per_v[w.qubit_b] * w.amplitude_v;
  }
  for (std::size_t s = 0; s < dim; ++s) {
    double e = 0.0;
    for (int q = 0; q < n; ++q) e += z[q] * sz(s, q, n);
    h(s, s) += e;
  }

  for (const auto& d : drives) {
    const cd up = 0.5 * d.rabi_hz * std::exp(cd(0.0, -d.phase_rad));  // <up|H|down>
    for (std::size_t s = 0; s < dim; ++s) {
      if (bit(s, d.target, n)) continue;
      const std::size_t u = flip(s, d.target, n);
      h(u, s) += up;
      h(s, u) += std::conj(up);
    }
  }

  for (const auto& ex : sys.exchange) {
    double j = ex.residual_hz;
    for (const auto& w : windows) {
      if ((w.qubit_a == ex.qubit_a && w.qubit_b == ex.qubit_b) || (w.qubit_a == ex.qubit_b && w.qubit_b == ex.qubit_a))
        j = ex.amplitude_hz * std::exp(ex.rate_per_v * w.amplitude_v);
    }
    if (j == 0.0) continue;
    const int a = ex.qubit_a, b = ex.qubit_b;
    const cd hop = 0.5 * j * std::exp(cd(0.0, kTwoPi * (frame_hz[a] - frame_hz[b]) * t));
    for (std::size_t s = 0; s < dim; ++s) {
      const int ba = bit(s, a, n), bb = bit(s, b, n);
      if (ba == bb) continue;
      h(s, s) += -0.5 * j;
      if (ba == 0) {  // |a down, b up> -> |a up, b down>
        const std::size_t u = flip(flip(s, a, n), b, n);
        h(u, s) += hop;
        h(s, u) += std::conj(hop);
      }
    }
  }
  return 0.5 * (h + h.adjoint());
}

void propagate(Eigen::VectorXcd& psi, const Eigen::MatrixXcd& h, double dt) {
  if (dt == 0.0) return;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);
  const Eigen::VectorXcd phases = (es.eigenvalues().cast<cd>() * cd(0.0, -kTwoPi * dt)).array().exp();
  psi = es.eigenvectors() * (phases.asDiagonal() * (es.eigenvectors().adjoint() * psi));
}

// Multiplies by exp(-i 2 pi t sum_q f_q Sz_q) (sign = +1) or its inverse (sign = -1).
void frame_rotation(Eigen::VectorXcd& psi, const std::vector<double>& frame_hz, double t, int sign, int n) {
  for (Eigen::Index s = 0; s < psi.size(); ++s) {
    double phase = 0.0;
    for (int q = 0; q < n; ++q) phase += frame_hz[q] * sz(static_cast<std::size_t>(s), q, n);
    psi[s] *= std::exp(cd(0.0, -sign * kTwoPi * phase * t));
  }
}

Eigen::VectorXcd to_vector(const QuantumState& st) {
  Eigen::VectorXcd v(static_cast<Eigen::Index>(st.amplitudes.size()));
  for (std::size_t i = 0; i < st.amplitudes.size(); ++i) v[static_cast<Eigen::Index>(i)] = st.amplitudes[i];
  return v;
}

void from_vector(QuantumState& st, const Eigen::VectorXcd& v) {
  for (std::size_t i = 0; i < st.amplitudes.size(); ++i) st.amplitudes[i] = v[static_cast<Eigen::Index>(i)];
}

void check_norm(const QuantumState& st) {
  if (std::abs(st.norm() - 1.0) > 1e-9) throw DomainError("state norm drifted beyond 1e-9");
}

// Ideal pi rotation about the x axis of qubit q's own rotating frame.
void ideal_pi(QuantumState& st, int q, double frame_hz, std::optional<std::pair<int, int>> control_down = std::nullopt) {
  const int n = st.qubits();
  const double alpha = kTwoPi * frame_hz * st.time_s;
  const cd to_up = cd(0.0, -1.0) * std::exp(cd(0.0, -alpha));
  const cd to_down = cd(0.0, -1.0) * std::exp(cd(0.0, alpha));
  auto next = st.amplitudes;
  for (std::size_t s = 0; s < st.amplitudes.size(); ++s) {
    if (control_down && bit(s, control_down->first, n) != 0) continue;
    const std::size_t u = flip(s, q, n);
    next[u] = (bit(s, q, n) == 0 ? to_up : to_down) * st.amplitudes[s];
  }
  st.amplitudes = std::move(next);
}

Segment to_segment(const MicrowaveDrive& m) {
  return {m.duration_s, {Drive{m.target, m.frequency_hz, m.rabi_hz, m.phase_rad}}, {}, {}};
}
Segment to_segment(const ExchangeWindow& w) { return {w.duration_s, {}, {{w.qubit_a, w.qubit_b, w.amplitude_v}}, w.z_offset_hz}; }
Segment to_segment(const Idle& i) { return {i.duration_s, {}, {}, i.z_offset_hz}; }

}  // namespace

// ---------------------------------------------------------------------------

void SpinSystem::validate() const {
  const int n = size();
  if (n < 2 || n > 5) throw DomainError("spin system needs 2-5 qubits");
  if (slope_hz_per_v.size() != detuning_hz.size()) throw DomainError("one spectroscopy slope per qubit is required");
  if (!(rabi_hz >= 0.0)) throw DomainError("Rabi frequency must be >= 0");
  std::set<std::pair<int, int>> seen;
  for (const auto& e : exchange) {
    const int lo = std::min(e.qubit_a, e.qubit_b), hi = std::max(e.qubit_a, e.qubit_b);
    if (lo < 0 || hi >= n || hi - lo != 1) throw DomainError("exchange pairs must be adjacent qubits");
    if (!seen.insert({lo, hi}).second) throw DomainError("duplicate exchange pair");
    if (!(e.amplitude_hz > 0.0)) throw DomainError("exchange amplitude A must be > 0");
    if (!(e.residual_hz >= 0.0)) throw DomainError("residual exchange must be >= 0");
  }
  std::vector<double> gaps;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) gaps.push_back(std::abs(detuning_hz[i] - detuning_hz[j]));
  std::sort(gaps.begin(), gaps.end());
  for (std::size_t k = 0; k < gaps.size(); ++k) {
    if (gaps[k] == 0.0 || (k > 0 && gaps[k] == gaps[k - 1]))
      throw DomainError("qubit frequency differences must be distinct and nonzero");
  }
}

const ExchangeParams& SpinSystem::pair(int a, int b) const {
  for (const auto& e : exchange)
    if ((e.qubit_a == a && e.qubit_b == b) || (e.qubit_a == b && e.qubit_b == a)) return e;
  throw DomainError("no exchange configured for pair (" + std::to_string(a + 1) + "," + std::to_string(b + 1) + ")");
}

double SpinSystem::exchange_hz(int a, int b, double v) const {
  const auto& e = pair(a, b);
  return e.amplitude_hz * std::exp(e.rate_per_v * v);
}

SpinSystem SpinSystem::from_params(const SpinParams& p) {
  SpinSystem s;
  if (p.larmor_hz.empty()) throw DomainError("spin block lists no Larmor frequencies");
  s.reference_hz = p.larmor_hz.front();
  for (double f : p.larmor_hz) s.detuning_hz.push_back(f - s.reference_hz);
  s.slope_hz_per_v = p.spectroscopy_slope_hz_per_v;
  if (s.slope_hz_per_v.empty()) s.slope_hz_per_v.assign(p.larmor_hz.size(), 0.0);
  s.exchange = p.exchange;
  s.rabi_hz = p.rabi_hz;
  s.validate();
  return s;
}

QuantumState QuantumState::basis(int qubits, std::uint64_t index) {
  QuantumState st;
  st.amplitudes.assign(std::size_t{1} << qubits, cd(0.0, 0.0));
  st.amplitudes.at(index) = 1.0;
  return st;
}

int QuantumState::qubits() const {
  int n = 0;
  while ((std::size_t{1} << n) < amplitudes.size()) ++n;
  return n;
}

double QuantumState::norm() const {
  double s = 0.0;
  for (const auto& a : amplitudes) s += std::norm(a);
  return std::sqrt(s);
}

double QuantumState::probability_up(int q) const {
  const int n = qubits();
  double p = 0.0;
  for (std::size_t s = 0; s < amplitudes.size(); ++s)
    if (bit(s, q, n)) p += std::norm(amplitudes[s]);
  return p;
}

Hamiltonian build_hamiltonian(const SpinSystem& system, const std::vector<Drive>& drives,
                              const std::vector<ExchangePulse>& windows, const std::vector<double>& z_offset_hz) {
  const int n = system.size();
  std::vector<double> frame(static_cast<std::size_t>(n), 0.0);
  std::set<int> targets;
  for (const auto& d : drives) {
    check_qubit(system, d.target);
    if (!targets.insert(d.target).second) throw DomainError("simultaneous drives on one qubit");
    if (d.frequency_hz - system.reference_hz != drives.front().frequency_hz - system.reference_hz)
      throw DomainError("build_hamiltonian expects a single drive frequency; use apply_segment");
  }
  if (!drives.empty()) frame.assign(static_cast<std::size_t>(n), drives.front().frequency_hz - system.reference_hz);
  const auto m = frame_hamiltonian(system, drives, windows, z_offset_hz, frame, 0.0);
  Hamiltonian out;
  out.dimension = static_cast<int>(m.rows());
  out.elements.resize(static_cast<std::size_t>(m.size()));
  for (int r = 0; r < out.dimension; ++r)
    for (int c = 0; c < out.dimension; ++c) out.elements[static_cast<std::size_t>(r) * out.dimension + c] = m(r, c);
  return out;
}

void evolve(QuantumState& state, const Hamiltonian& h, double dt) {
  if (dt < 0.0) throw DomainError("evolution time must be >= 0");
  Eigen::MatrixXcd m(h.dimension, h.dimension);
  for (int r = 0; r < h.dimension; ++r)
    for (int c = 0; c < h.dimension; ++c) m(r, c) = h(r, c);
  m = 0.5 * (m + m.adjoint()).eval();
  auto psi = to_vector(state);
  propagate(psi, m, dt);
  from_vector(state, psi);
  check_norm(state);
}

std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t index) {
  // splitmix64 over (seed, index)
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  z ^= z >> 31;
  return std::mt19937_64(z);
}

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

void apply_segment(const SpinSystem& system, QuantumState& state, const Segment& seg) {
  if (seg.duration_s < 0.0) throw DomainError("segment duration must be >= 0");
  const int n = system.size();
  if (state.qubits() != n) throw DomainError("state size does not match the spin system");
  if (!seg.z_offset_hz.empty() && static_cast<int>(seg.z_offset_hz.size()) != n)
    throw DomainError("z offsets need one entry per qubit");
  std::set<int> targets;
  for (const auto& d : seg.drives) {
    check_qubit(system, d.target);
    if (!(d.rabi_hz >= 0.0)) throw DomainError("Rabi frequency must be >= 0");
    if (!targets.insert(d.target).second) throw DomainError("simultaneous drives on one qubit");
  }
  for (const auto& w : seg.exchange) {
    check_qubit(system, w.qubit_a);
    check_qubit(system, w.qubit_b);
    system.pair(w.qubit_a, w.qubit_b);
  }
  if (seg.duration_s == 0.0) return;

  // Frames: one common frame when all drives share a frequency, otherwise
  // each driven qubit rotates at its own drive frequency.
  std::vector<double> frame(static_cast<std::size_t>(n), 0.0);
  std::set<double> freqs;
  for (const auto& d : seg.drives) freqs.insert(d.frequency_hz - system.reference_hz);
  if (freqs.size() == 1) {
    frame.assign(static_cast<std::size_t>(n), *freqs.begin());
  } else {
    for (const auto& d : seg.drives) frame[d.target] = d.frequency_hz - system.reference_hz;
  }

  // Exchange between qubits in different frames is time dependent: slice it.
  double beat = 0.0;
  for (const auto& ex : system.exchange) {
    double j = ex.residual_hz;
    for (const auto& w : seg.exchange)
      if ((w.qubit_a == ex.qubit_a && w.qubit_b == ex.qubit_b) || (w.qubit_a == ex.qubit_b && w.qubit_b == ex.qubit_a))
        j = 1.0;
    if (j != 0.0) beat = std::max(beat, std::abs(frame[ex.qubit_a] - frame[ex.qubit_b]));
  }
  const long slices = beat == 0.0 ? 1 : std::max(1L, static_cast<long>(std::ceil(seg.duration_s * beat * 64.0)));

  auto psi = to_vector(state);
  const double t0 = state.time_s;
  frame_rotation(psi, frame, t0, -1, n);
  const double dt = seg.duration_s / static_cast<double>(slices);
  if (slices == 1) {
    propagate(psi, frame_hamiltonian(system, seg.drives, seg.exchange, seg.z_offset_hz, frame, t0), dt);
  } else {
    for (long k = 0; k < slices; ++k) {
      const double tm = t0 + (static_cast<double>(k) + 0.5) * dt;
      propagate(psi, frame_hamiltonian(system, seg.drives, seg.exchange, seg.z_offset_hz, frame, tm), dt);
    }
  }
  state.time_s = t0 + seg.duration_s;
  frame_rotation(psi, frame, state.time_s, +1, n);
  from_vector(state, psi);
  check_norm(state);
}

void ReadoutModel::validate() const {
  if (!(snr > 0.0)) throw DomainError("readout SNR must be > 0");
  if (!(integration_time_s > 0.0)) throw DomainError("integration time must be > 0");
}

double ReadoutModel::fidelity() const { return ideal ? 1.0 : readout_fidelity_from_snr(snr); }

ParityOutcome parity_measure(QuantumState& state, int a, int b, const ReadoutModel& readout, std::mt19937_64& rng) {
  readout.validate();
  const int n = state.qubits();
  if (a < 0 || b < 0 || a >= n || b >= n || a == b) throw DomainError("invalid parity pair");
  double p_odd = 0.0;
  for (std::size_t s = 0; s < state.amplitudes.size(); ++s)
    if (bit(s, a, n) != bit(s, b, n)) p_odd += std::norm(state.amplitudes[s]);
  const double u = uniform01(rng);
  ParityOutcome out;
  out.actual = u < p_odd ? Parity::odd : Parity::even;
  const double keep = out.actual == Parity::odd ? p_odd : 1.0 - p_odd;
  const double scale = 1.0 / std::sqrt(keep);
  for (std::size_t s = 0; s < state.amplitudes.size(); ++s) {
    const bool odd = bit(s, a, n) != bit(s, b, n);
    if (odd == (out.actual == Parity::odd)) state.amplitudes[s] *= scale;
    else state.amplitudes[s] = 0.0;
  }
  const bool flip_report = uniform01(rng) < (readout.ideal ? 0.0 : readout_error_from_snr(readout.snr));
  out.reported = flip_report ? (out.actual == Parity::odd ? Parity::even : Parity::odd) : out.actual;
  return out;
}

MeasurementResult run_sequence(const SpinSystem& system, const QuantumState& initial, const PulseSequence& sequence,
                               const ReadoutModel& readout) {
  system.validate();
  readout.validate();
  MeasurementResult result;
  result.state = initial;
  if (result.state.qubits() != system.size() || result.state.amplitudes.size() != (std::size_t{1} << system.size()))
    throw DomainError("initial state size does not match the spin system");
  auto rng = make_rng(readout.seed, 0);
  std::optional<Parity> last;
  for (const auto& element : sequence) {
    std::visit(
        [&](const auto& el) {
          using T = std::decay_t<decltype(el)>;
          if constexpr (std::is_same_v<T, Segment>) {
            apply_segment(system, result.state, el);
          } else if constexpr (std::is_same_v<T, ParityMeasure>) {
            const auto o = parity_measure(result.state, el.qubit_a, el.qubit_b, readout, rng);
            result.outcomes.push_back(o.reported);
            last = o.reported;
          } else if constexpr (std::is_same_v<T, ConditionalPi>) {
            check_qubit(system, el.target);
            if (!last) throw DomainError("conditional pulse without a preceding parity measurement");
            if (*last == el.condition) ideal_pi(result.state, el.target, system.detuning_hz[el.target]);
          } else if constexpr (std::is_same_v<T, ZCnot>) {
            check_qubit(system, el.control);
            check_qubit(system, el.target);
            if (el.control == el.target) throw DomainError("zCNOT needs distinct qubits");
            ideal_pi(result.state, el.target, system.detuning_hz[el.target], std::make_pair(el.control, 0));
          } else {
            apply_segment(system, result.state, to_segment(el));
          }
        },
        element);
  }
  return result;
}

double report_probability(double p, const TraceOptions& options, std::uint64_t index) {
  const double err = options.ideal_readout ? 0.0 : readout_error_from_snr(options.readout_snr);
  if (options.shots <= 0) return (1.0 - err) * p + err * (1.0 - p);
  auto rng = make_rng(options.seed, index);
  long hits = 0;
  for (int k = 0; k < options.shots; ++k) {
    const bool event = uniform01(rng) < p;
    const bool wrong = uniform01(rng) < err;
    hits += event != wrong ? 1 : 0;
  }
  return static_cast<double>(hits) / options.shots;
}

std::vector<double> simulate_rabi(const SpinSystem& system, int target, const std::vector<double>& t_values,
                                  double detuning_hz, const TraceOptions& options) {
  system.validate();
  check_qubit(system, target);
  const double rabi = options.rabi_hz.value_or(system.rabi_hz);
  if (!(rabi > 0.0)) throw DomainError("Rabi drive not configured for the target");
  std::vector<double> out(t_values.size());
  detail::parallel_for(t_values.size(), options.jobs, [&](std::size_t k) {
    if (t_values[k] < 0.0) throw DomainError("burst durations must be >= 0");
    auto st = QuantumState::basis(system.size());
    apply_segment(system, st, to_segment(MicrowaveDrive{target, system.larmor_hz(target) + detuning_hz, rabi, 0.0, t_values[k]}));
    out[k] = report_probability(st.probability_up(target), options, k);
  });
  return out;
}

namespace {

QuantumState spectroscopy_state(const SpinSystem& system, int control, int target, double v, double f_hz, double rabi_hz) {
  auto st = QuantumState::basis(system.size());
  apply_segment(system, st,
                to_segment(MicrowaveDrive{control, system.larmor_hz(control), system.rabi_hz, 0.0, 0.25 / system.rabi_hz}));
  Segment burst{0.5 / rabi_hz, {Drive{target, f_hz, rabi_hz, 0.0}}, {{control, target, v}}, {}};
  apply_segment(system, st, burst);
  return st;
}

}  // namespace

double spectroscopy_point(const SpinSystem& system, int control, int target, double v, double f_hz, double rabi_hz) {
  return spectroscopy_state(system, control, target, v, f_hz, rabi_hz).probability_up(target);
}

SpectroscopyMap simulate_exchange_spectroscopy(const SpinSystem& system, int control, int target,
                                               const std::vector<double>& amplitudes_v,
                                               const std::vector<double>& frequencies_hz, const TraceOptions& options) {
  system.validate();
  check_qubit(system, control);
  check_qubit(system, target);
  system.pair(control, target);
  const double rabi = options.rabi_hz.value_or(system.rabi_hz);
  if (!(rabi > 0.0) || !(system.rabi_hz > 0.0)) throw DomainError("spectroscopy needs a positive Rabi frequency");
  SpectroscopyMap map{amplitudes_v, frequencies_hz, std::vector<double>(amplitudes_v.size() * frequencies_hz.size())};
  const std::size_t nf = frequencies_hz.size();
  detail::parallel_for(map.probability.size(), options.jobs, [&](std::size_t k) {
    const double p = spectroscopy_point(system, control, target, amplitudes_v[k / nf], frequencies_hz[k % nf], rabi);
    map.probability[k] = report_probability(p, options, k);
  });
  return map;
}

std::pair<double, double> spectroscopy_branches(const SpinSystem& system, int control, int target, double v,
                                                double f_lo, double f_hi, double rabi_hz, int scan_points) {
  if (scan_points < 5 || !(f_hi > f_lo)) throw DomainError("invalid branch scan");
  auto p = [&](double f) { return spectroscopy_point(system, control, target, v, f, rabi_hz); };
  const double step = (f_hi - f_lo) / (scan_points - 1);
  std::vector<double> vals(static_cast<std::size_t>(scan_points));
  for (int k = 0; k < scan_points; ++k) vals[k] = p(f_lo + k * step);
  std::vector<int> peaks;
  for (int k = 1; k + 1 < scan_points; ++k)
    if (vals[k] >= vals[k - 1] && vals[k] > vals[k + 1]) peaks.push_back(k);
  if (peaks.size() < 2) throw DomainError("fewer than two spectroscopy branches in the scan window");
  std::sort(peaks.begin(), peaks.end(), [&](int a, int b) { return vals[a] > vals[b]; });
  std::array<double, 2> centre{};
  for (int i = 0; i < 2; ++i) {
    double a = f_lo + (peaks[i] - 1) * step, b = f_lo + (peaks[i] + 1) * step;
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    double c = b - g * (b - a), d = a + g * (b - a);
    double pc = p(c), pd = p(d);
    for (int it = 0; it < 80 && (b - a) > 1e-9 * std::max(1.0, std::abs(a)); ++it) {
      if (pc > pd) {
        b = d;
        d = c;
        pd = pc;
        c = b - g * (b - a);
        pc = p(c);
      } else {
        a = c;
        c = d;
        pc = pd;
        d = a + g * (b - a);
        pd = p(d);
      }
    }
    centre[i] = 0.5 * (a + b);
  }
  return {std::min(centre[0], centre[1]), std::max(centre[0], centre[1])};
}

std::pair<double, double> conditional_transition_frequencies(const SpinSystem& system, int control, int target, double v) {
  const auto& ex = system.pair(control, target);
  (void)ex;
  // Two-qubit sub-Hamiltonian of the pair in the reference frame, basis |c t>.
  const double j = system.exchange_hz(control, target, v);
  const double fc = system.detuning_hz[control] + system.slope_hz_per_v[control] * v;
  const double ft = system.detuning_hz[target] + system.slope_hz_per_v[target] * v;
  Eigen::Matrix4d h = Eigen::Matrix4d::Zero();
  for (int s = 0; s < 4; ++s) {
    const double mc = (s & 2) ? 0.5 : -0.5, mt = (s & 1) ? 0.5 : -0.5;
    h(s, s) = fc * mc + ft * mt + (mc != mt ? -0.5 * j : 0.0);
  }
  h(1, 2) = h(2, 1) = 0.5 * j;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> es(h);
  std::array<double, 4> e{};
  for (int s = 0; s < 4; ++s) {
    int best = 0;
    for (int k = 1; k < 4; ++k)
      if (std::abs(es.eigenvectors()(s, k)) > std::abs(es.eigenvectors()(s, best))) best = k;
    e[s] = es.eigenvalues()(best);
  }
  return {system.reference_hz + e[1] - e[0], system.reference_hz + e[3] - e[2]};
}

std::vector<double> simulate_dcz(const SpinSystem& system, int control, int target, double amplitude_v,
                                 const std::vector<double>& tau_values, const DczOptions& options) {
  system.validate();
  check_qubit(system, control);
  check_qubit(system, target);
  system.pair(control, target);
  const double rabi = options.rabi_hz.value_or(system.rabi_hz);
  if (!(rabi > 0.0)) throw DomainError("dCZ needs both qubits drivable");
  if (!options.z_offset_hz.empty() && static_cast<int>(options.z_offset_hz.size()) != system.size())
    throw DomainError("z offsets need one entry per qubit");
  const double fc = system.larmor_hz(control), ft = system.larmor_hz(target);
  const Segment x_target{0.25 / rabi, {Drive{target, ft, rabi, 0.0}}, {}, {}};
  const Segment x2_both{0.5 / rabi, {Drive{control, fc, rabi, 0.0}, Drive{target, ft, rabi, 0.0}}, {}, {}};
  std::vector<double> out(tau_values.size());
  detail::parallel_for(tau_values.size(), options.jobs, [&](std::size_t k) {
    if (tau_values[k] < 0.0) throw DomainError("exchange times must be >= 0");
    const Segment half{0.5 * tau_values[k], {}, {{control, target, amplitude_v}}, options.z_offset_hz};
    auto st = QuantumState::basis(system.size());
    for (const auto* seg : {&x_target, &half, &x2_both, &half, &x2_both, &x_target}) apply_segment(system, st, *seg);
    out[k] = report_probability(st.probability_up(target), options, k);
  });
  return out;
}

double residual_zz_coefficient(double j_hz, double rabi_hz) {
  if (!(rabi_hz > 0.0)) throw DomainError("Rabi frequency must be > 0");
  return j_hz / rabi_hz;
}

Segment conditional_rotation(const SpinSystem& system, int control, int target, double amplitude_v, double rabi_hz) {
  if (!(rabi_hz > 0.0)) throw DomainError("Rabi frequency must be > 0");
  const double f = conditional_transition_frequencies(system, control, target, amplitude_v).first;
  return Segment{0.5 / rabi_hz, {Drive{target, f, rabi_hz, 0.0}}, {{control, target, amplitude_v}}, {}};
}

PulseSequence initialize_odd_parity(const SpinSystem& system, int a, int b, const InitOptions& options) {
  check_qubit(system, a);
  check_qubit(system, b);
  PulseSequence seq{ParityMeasure{a, b}, ConditionalPi{b, Parity::even}};
  switch (options.init2) {
    case InitMode::none: break;
    case InitMode::ideal_zcnot: seq.push_back(ZCnot{a, b}); break;
    case InitMode::physical_crot:
      seq.push_back(conditional_rotation(system, a, b, options.crot_amplitude_v, options.crot_rabi_hz.value_or(system.rabi_hz)));
      break;
  }
  return seq;
}

}  // namespace dotlab
