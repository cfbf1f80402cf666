#include "dotlab/tridiagonal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dotlab/error.hpp"

namespace dotlab {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

// Solves (T - shift) y = b in place with partial pivoting (tridiagonal LU).
void shifted_solve(std::span<const double> d, std::span<const double> e, double shift, std::vector<double>& b) {
  const std::size_t n = d.size();
  if (n == 1) {
    double p = d[0] - shift;
    if (p == 0.0) p = kEps;
    b[0] /= p;
    return;
  }
  // Upper factor has up to two super-diagonals after pivoting.
  std::vector<double> u0(n), u1(n, 0.0), u2(n, 0.0), l(n, 0.0);
  std::vector<char> swapped(n, 0);
  double diag = d[0] - shift;
  double sup = e[0];
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double sub = e[i];
    const double next_diag = d[i + 1] - shift;
    const double next_sup = i + 2 < n ? e[i + 1] : 0.0;
    if (std::abs(diag) >= std::abs(sub)) {
      if (diag == 0.0) diag = kEps;
      const double m = sub / diag;
      u0[i] = diag;
      u1[i] = sup;
      u2[i] = 0.0;
      l[i] = m;
      diag = next_diag - m * sup;
      sup = next_sup;
    } else {
      const double m = diag / sub;
      u0[i] = sub;
      u1[i] = next_diag;
      u2[i] = next_sup;
      l[i] = m;
      swapped[i] = 1;
      diag = sup - m * next_diag;
      sup = -m * next_sup;
    }
  }
  u0[n - 1] = diag == 0.0 ? kEps : diag;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (swapped[i]) std::swap(b[i], b[i + 1]);
    b[i + 1] -= l[i] * b[i];
  }
  for (std::size_t k = n; k-- > 0;) {
    double s = b[k];
    if (k + 1 < n) s -= u1[k] * b[k + 1];
    if (k + 2 < n) s -= u2[k] * b[k + 2];
    b[k] = s / u0[k];
  }
}

double norm2(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace

int sturm_count(std::span<const double> d, std::span<const double> e, double x) {
  int count = 0;
  double q = d[0] - x;
  const double tiny = kEps * kEps;
  if (q < 0.0) ++count;
  for (std::size_t i = 1; i < d.size(); ++i) {
    if (std::abs(q) < tiny) q = -tiny;
    q = d[i] - x - e[i - 1] * e[i - 1] / q;
    if (q < 0.0) ++count;
  }
  return count;
}

TridiagonalEigenpairs lowest_eigenpairs(std::span<const double> d, std::span<const double> e, int count) {
  const std::size_t n = d.size();
  if (n == 0 || e.size() + 1 != n) throw DomainError("tridiagonal: inconsistent diagonal sizes");
  if (count < 1 || static_cast<std::size_t>(count) > n)
    throw DomainError("requested " + std::to_string(count) + " eigenpairs from a grid of " + std::to_string(n));

  double lo = std::numeric_limits<double>::max();
  double hi = std::numeric_limits<double>::lowest();
  for (std::size_t i = 0; i < n; ++i) {
    const double r = (i > 0 ? std::abs(e[i - 1]) : 0.0) + (i + 1 < n ? std::abs(e[i]) : 0.0);
    lo = std::min(lo, d[i] - r);
    hi = std::max(hi, d[i] + r);
  }
  const double scale = std::max(std::abs(lo), std::abs(hi));
  lo -= 2.0 * kEps * scale + kEps;
  hi += 2.0 * kEps * scale + kEps;

  TridiagonalEigenpairs out;
  for (int k = 0; k < count; ++k) {
    // Smallest x with sturm_count(x) > k.
    double a = k > 0 ? out.values.back() - 2.0 * kEps * scale : lo;
    if (sturm_count(d, e, a) > k) a = lo;
    double b = hi;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (a + b);
      if (mid <= a || mid >= b) break;
      if (sturm_count(d, e, mid) > k) b = mid;
      else a = mid;
      if (b - a <= 2.0 * kEps * std::max(std::abs(a), std::abs(b)) + 1e-300) break;
    }
    out.values.push_back(0.5 * (a + b));
  }

  const double perturb = 8.0 * kEps * scale;
  for (int k = 0; k < count; ++k) {
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = 1.0 + 0.37 * std::sin(0.731 * static_cast<double>(i) + k);
    const double shift = out.values[k] - perturb;
    bool ok = false;
    for (int it = 0; it < 8; ++it) {
      for (const auto& prev : out.vectors) {
        double dot = 0.0;
        for (std::size_t i = 0; i < n; ++i) dot += prev[i] * v[i];
        for (std::size_t i = 0; i < n; ++i) v[i] -= dot * prev[i];
      }
      double nv = norm2(v);
      if (nv == 0.0 || !std::isfinite(nv)) break;
      for (double& x : v) x /= nv;
      std::vector<double> y = v;
      shifted_solve(d, e, shift, y);
      for (const auto& prev : out.vectors) {
        double dot = 0.0;
        for (std::size_t i = 0; i < n; ++i) dot += prev[i] * y[i];
        for (std::size_t i = 0; i < n; ++i) y[i] -= dot * prev[i];
      }
      const double ny = norm2(y);
      if (ny == 0.0 || !std::isfinite(ny)) break;
      for (double& x : y) x /= ny;
      // Converged once the residual ||(T - lambda) y|| is at rounding level.
      double res = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        double r = (d[i] - out.values[k]) * y[i];
        if (i > 0) r += e[i - 1] * y[i - 1];
        if (i + 1 < n) r += e[i] * y[i + 1];
        res = std::max(res, std::abs(r));
      }
      v = std::move(y);
      if (it >= 3 && res <= 1e-10 * scale) {
        ok = true;
        break;
      }
    }
    if (!ok) throw ConvergenceError("inverse iteration did not converge for eigenpair " + std::to_string(k), 8, 0.0);
    out.vectors.push_back(std::move(v));
  }
  return out;
}

}  // namespace dotlab
