#include "dotlab/calibration.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

#include "dotlab/constants.hpp"
#include "dotlab/error.hpp"

namespace dotlab {

namespace {

constexpr double kTwoPi = 2.0 * constants::pi;

// Parameters: offset, amplitude, frequency, decay rate, phase.
using Params = Eigen::Matrix<double, 5, 1>;

double model(const Params& x, double t) {
  return x[0] + x[1] * std::exp(-x[3] * t) * std::cos(kTwoPi * x[2] * t + x[4]);
}

double rms(const Params& x, const std::vector<double>& t, const std::vector<double>& p) {
  double s = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double r = p[i] - model(x, t[i]);
    s += r * r;
  }
  return std::sqrt(s / static_cast<double>(t.size()));
}

double periodogram(const std::vector<double>& t, const std::vector<double>& y, double f) {
  double re = 0.0, im = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    re += y[i] * std::cos(kTwoPi * f * t[i]);
    im -= y[i] * std::sin(kTwoPi * f * t[i]);
  }
  return re * re + im * im;
}

}  // namespace

double DampedSinusoidFit::operator()(double t) const {
  const double decay = std::isinf(decay_time_s) ? 1.0 : std::exp(-t / decay_time_s);
  return offset + amplitude * decay * std::cos(kTwoPi * frequency_hz * t + phase_rad);
}

DampedSinusoidFit fit_damped_sinusoid(const std::vector<double>& t, const std::vector<double>& p) {
  if (t.size() != p.size()) throw DomainError("trace needs matching time and value samples");
  if (t.size() < 8) throw DomainError("insufficient span: at least 8 samples are required");
  for (std::size_t i = 1; i < t.size(); ++i)
    if (!(t[i] > t[i - 1])) throw DomainError("trace times must be strictly increasing");
  for (double v : p)
    if (!std::isfinite(v)) throw DomainError("trace contains non-finite values");
  const std::size_t n = t.size();
  const double span = t.back() - t.front();

  double mean = 0.0;
  for (double v : p) mean += v;
  mean /= static_cast<double>(n);
  std::vector<double> y(n);
  double var = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = p[i] - mean;
    var += y[i] * y[i];
  }
  var /= static_cast<double>(n);
  const double scale = std::max(1.0, std::abs(mean));
  if (var <= 1e-24 * scale * scale) throw DomainError("no spectral peak: trace is constant");

  // Zero-padded periodogram from 1/(4 span) up to the Nyquist frequency of the mean spacing.
  const double dt = span / static_cast<double>(n - 1);
  const double f_max = 0.5 / dt;
  const std::size_t bins = 8 * n;
  const double df = f_max / static_cast<double>(bins);
  std::vector<double> power(bins + 1);
  for (std::size_t k = 0; k <= bins; ++k) power[k] = periodogram(t, y, k * df);
  const std::size_t k_min = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(0.25 / span / df)));
  std::size_t k_best = k_min;
  double mean_power = 0.0;
  for (std::size_t k = k_min; k <= bins; ++k) {
    mean_power += power[k];
    if (power[k] > power[k_best]) k_best = k;
  }
  mean_power /= static_cast<double>(bins + 1 - k_min);
  if (!(power[k_best] > 4.0 * mean_power)) throw DomainError("no spectral peak above the noise floor");
  double f0 = k_best * df;
  if (k_best > k_min && k_best < bins) {
    const double a = power[k_best - 1], b = power[k_best], c = power[k_best + 1];
    const double denom = a - 2.0 * b + c;
    if (denom < 0.0) f0 += 0.5 * (a - c) / denom * df;
  }
  if (f0 * span < 1.5) throw DomainError("insufficient span: trace covers fewer than 1.5 oscillation periods");

  // Linear least squares for offset and quadrature amplitudes at f0.
  Eigen::MatrixXd design(static_cast<Eigen::Index>(n), 3);
  Eigen::VectorXd rhs(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    design(r, 0) = 1.0;
    design(r, 1) = std::cos(kTwoPi * f0 * t[i]);
    design(r, 2) = std::sin(kTwoPi * f0 * t[i]);
    rhs[r] = p[i];
  }
  const Eigen::Vector3d lin = design.colPivHouseholderQr().solve(rhs);
  Params x;
  x << lin[0], std::hypot(lin[1], lin[2]), f0, 0.0, std::atan2(-lin[2], lin[1]);

  DampedSinusoidFit fit;
  fit.initial_residual_rms = rms(x, t, p);
  double current = fit.initial_residual_rms;

  // Levenberg-Marquardt-damped Gauss-Newton.
  double mu = 1e-3;
  int it = 0;
  for (; it < 200; ++it) {
    Eigen::MatrixXd jac(static_cast<Eigen::Index>(n), 5);
    Eigen::VectorXd res(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
      const auto r = static_cast<Eigen::Index>(i);
      const double e = std::exp(-x[3] * t[i]);
      const double arg = kTwoPi * x[2] * t[i] + x[4];
      const double c = std::cos(arg), s = std::sin(arg);
      jac(r, 0) = 1.0;
      jac(r, 1) = e * c;
      jac(r, 2) = -x[1] * e * s * kTwoPi * t[i];
      jac(r, 3) = -x[1] * e * c * t[i];
      jac(r, 4) = -x[1] * e * s;
      res[r] = p[i] - (x[0] + x[1] * e * c);
    }
    const Eigen::Matrix<double, 5, 5> jtj = jac.transpose() * jac;
    const Params jtr = jac.transpose() * res;
    bool accepted = false;
    Params step = Params::Zero();
    for (int tries = 0; tries < 30 && !accepted; ++tries) {
      Eigen::Matrix<double, 5, 5> a = jtj;
      for (int d = 0; d < 5; ++d) a(d, d) += mu * std::max(jtj(d, d), 1e-300);
      step = a.ldlt().solve(jtr);
      Params trial = x + step;
      if (trial[3] < 0.0) trial[3] = 0.0;
      const double r = rms(trial, t, p);
      if (std::isfinite(r) && r <= current) {
        step = trial - x;
        x = trial;
        current = r;
        mu = std::max(mu * 0.3, 1e-12);
        accepted = true;
      } else {
        mu *= 10.0;
      }
    }
    if (!accepted) {
      fit.converged = true;  // no further descent possible
      break;
    }
    // Relative step in natural units: frequency against f, rate against 1/span, phase in rad.
    const double rel = std::max({std::abs(step[0]) / std::max(std::abs(x[0]), std::abs(x[1])),
                                 std::abs(step[1]) / std::max(std::abs(x[1]), 1e-300), std::abs(step[2]) / x[2],
                                 std::abs(step[3]) * span, std::abs(step[4])});
    if (rel < 1e-9) {
      fit.converged = true;
      ++it;
      break;
    }
  }

  if (x[1] < 0.0) {
    x[1] = -x[1];
    x[4] += constants::pi;
  }
  if (x[2] < 0.0) {
    x[2] = -x[2];
    x[4] = -x[4];
  }
  x[4] = std::remainder(x[4], kTwoPi);
  fit.offset = x[0];
  fit.amplitude = x[1];
  fit.frequency_hz = x[2];
  fit.decay_time_s = x[3] > 0.0 ? 1.0 / x[3] : std::numeric_limits<double>::infinity();
  fit.phase_rad = x[4];
  fit.residual_rms = current;
  fit.iterations = it;
  return fit;
}

double extract_J_from_dcz(const DampedSinusoidFit& fit) { return 2.0 * fit.frequency_hz; }

double ExponentialFit::operator()(double v) const { return amplitude_hz * std::exp(rate_per_v * v); }

ExponentialFit fit_exponential(const std::vector<double>& v, const std::vector<double>& j_hz, FitWindow window) {
  if (v.size() != j_hz.size()) throw DomainError("exponential fit needs matching v and J samples");
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v[i] < window.v_min || v[i] > window.v_max) continue;
    if (!(j_hz[i] > 0.0)) throw DomainError("exponential fit needs J > 0");
    xs.push_back(v[i]);
    ys.push_back(std::log(j_hz[i]));
  }
  if (xs.size() < 2) throw DomainError("exponential fit needs at least two points in the window");
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  if (!(sxx > 0.0)) throw DomainError("degenerate exponential fit: all v are equal");
  ExponentialFit fit;
  fit.rate_per_v = sxy / sxx;
  const double ln_a = my - fit.rate_per_v * mx;
  fit.amplitude_hz = std::exp(ln_a);
  fit.tunability_dec_per_v = fit.rate_per_v / std::log(10.0);
  fit.points = xs.size();
  double rss = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double r = ys[i] - (ln_a + fit.rate_per_v * xs[i]);
    rss += r * r;
  }
  const double s2 = xs.size() > 2 ? rss / (n - 2.0) : 0.0;
  fit.covariance[1][1] = s2 / sxx;
  fit.covariance[0][1] = fit.covariance[1][0] = -mx * s2 / sxx;
  fit.covariance[0][0] = s2 * (1.0 / n + mx * mx / sxx);
  return fit;
}

double readout_error_from_snr(double snr, double separation_factor) {
  if (!(snr > 0.0)) throw DomainError("SNR must be > 0");
  if (!(separation_factor > 0.0)) throw DomainError("SNR convention factor must be > 0");
  return 0.5 * std::erfc(separation_factor * snr / (2.0 * std::sqrt(2.0)));
}

double readout_fidelity_from_snr(double snr, double separation_factor) {
  return 1.0 - readout_error_from_snr(snr, separation_factor);
}

bool TunabilityReport::any_flagged() const {
  return std::any_of(pairs.begin(), pairs.end(), [](const auto& p) { return p.flagged; });
}

TunabilityReport tunability_report(const std::vector<ExchangeCurve>& curves, FitWindow window) {
  std::vector<std::string> order;
  for (const auto& c : curves)
    if (std::find(order.begin(), order.end(), c.pair) == order.end()) order.push_back(c.pair);
  TunabilityReport report;
  for (const auto& name : order) {
    const ExchangeCurve* conv = nullptr;
    const ExchangeCurve* inter = nullptr;
    for (const auto& c : curves) {
      if (c.pair != name) continue;
      auto& slot = c.strategy == TuningStrategy::conventional ? conv : inter;
      if (slot) throw DomainError("duplicate " + std::string(to_string(c.strategy)) + " curve for pair " + name);
      slot = &c;
    }
    if (!conv || !inter)
      throw DomainError("missing " + std::string(conv ? "interchanged" : "conventional") + " curve for pair " + name);
    PairTunability p;
    p.pair = name;
    p.conventional = fit_exponential(conv->v, conv->j_hz, window);
    p.interchanged = fit_exponential(inter->v, inter->j_hz, window);
    if (p.conventional.tunability_dec_per_v == 0.0) throw DomainError("conventional tunability is zero for pair " + name);
    p.ratio = p.interchanged.tunability_dec_per_v / p.conventional.tunability_dec_per_v;
    p.flagged = !(p.interchanged.tunability_dec_per_v > p.conventional.tunability_dec_per_v);
    report.pairs.push_back(p);
  }
  return report;
}

LeverArmComparison lever_arm_comparison(const std::vector<double>& lever_ratios, const std::vector<double>& tunability_ratios) {
  if (lever_ratios.size() != tunability_ratios.size()) throw DomainError("lever-arm and tunability ratios differ in length");
  LeverArmComparison out{lever_ratios, tunability_ratios, {}, {}};
  for (std::size_t i = 0; i < lever_ratios.size(); ++i) {
    if (lever_ratios[i] == 0.0) throw DomainError("zero lever-arm ratio");
    const double e = tunability_ratios[i] / lever_ratios[i];
    if (!std::isfinite(e) || !(e > 0.0)) throw DomainError("lever-arm excess must be finite and positive");
    out.excess.push_back(e);
    out.exceeds.push_back(e > 1.0);
  }
  return out;
}

}  // namespace dotlab
