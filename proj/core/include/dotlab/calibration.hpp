#pragma once

#include <array>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "dotlab/device.hpp"

namespace dotlab {

/// p(t) = offset + amplitude * exp(-t / decay_time) * cos(2 pi f t + phase)
struct DampedSinusoidFit {
  double amplitude = 0.0;
  double frequency_hz = 0.0;
  double decay_time_s = 0.0;
  double phase_rad = 0.0;
  double offset = 0.0;
  double residual_rms = 0.0;
  double initial_residual_rms = 0.0;  // residual of the periodogram starting guess
  int iterations = 0;
  bool converged = false;

  double operator()(double t) const;
};

DampedSinusoidFit fit_damped_sinusoid(const std::vector<double>& t, const std::vector<double>& p);

/// J = 2 f for a decoupled-CZ oscillation.
double extract_J_from_dcz(const DampedSinusoidFit& fit);

struct ExponentialFit {
  double amplitude_hz = 0.0;   // A
  double rate_per_v = 0.0;     // B
  double tunability_dec_per_v = 0.0;
  std::array<std::array<double, 2>, 2> covariance{};  // of (ln A, B)
  std::size_t points = 0;

  double operator()(double v) const;
};

struct FitWindow {
  double v_min = -1e300;
  double v_max = 1e300;
};

/// Least squares of ln J against v.
ExponentialFit fit_exponential(const std::vector<double>& v, const std::vector<double>& j_hz, FitWindow window = {});

/// Assignment fidelity of two equal-variance Gaussians separated by snr
/// sigma with a midpoint threshold: F = 1 - erfc(snr / (2 sqrt 2)) / 2.
/// `separation_factor` rescales the SNR convention (separation / (factor sigma)).
double readout_fidelity_from_snr(double snr, double separation_factor = 1.0);
/// Complementary error probability 1 - F, evaluated without cancellation.
double readout_error_from_snr(double snr, double separation_factor = 1.0);

struct ExchangeCurve {
  std::string pair;
  TuningStrategy strategy = TuningStrategy::conventional;
  std::vector<double> v;
  std::vector<double> j_hz;
};

struct PairTunability {
  std::string pair;
  ExponentialFit conventional;
  ExponentialFit interchanged;
  double ratio = 0.0;  // interchanged / conventional tunability
  bool flagged = false;  // interchanged <= conventional
};

struct TunabilityReport {
  std::vector<PairTunability> pairs;  // ordered by first appearance
  bool any_flagged() const;
};

TunabilityReport tunability_report(const std::vector<ExchangeCurve>& curves, FitWindow window = {});

struct LeverArmComparison {
  std::vector<double> lever_ratios;
  std::vector<double> tunability_ratios;
  std::vector<double> excess;   // tunability ratio / lever ratio
  std::vector<bool> exceeds;    // excess > 1
};

LeverArmComparison lever_arm_comparison(const std::vector<double>& lever_ratios, const std::vector<double>& tunability_ratios);

}  // namespace dotlab
