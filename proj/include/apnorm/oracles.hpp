#pragma once

// Brute-force references. Nothing here touches the FFT path: the direct
// transform is a plain double loop and Bessel values come from Miller's
// downward recurrence or from trapezoidal quadrature of Bessel's integral.

#include <cmath>
#include <complex>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "apnorm/common.hpp"
#include "apnorm/torus_spectra.hpp"

namespace apnorm::oracles {

struct OracleReport {
  std::string quantity;
  double oracle = 0.0;
  double fast = 0.0;
  double abs_error = 0.0;
  double rel_error = 0.0;
};

inline OracleReport compare(std::string quantity, double oracle, double fast) {
  OracleReport r{std::move(quantity), oracle, fast, std::abs(fast - oracle), 0.0};
  r.rel_error = oracle != 0.0 ? r.abs_error / std::abs(oracle) : r.abs_error;
  return r;
}

/// n^{-m} sum_j f(t_j) e^{-i(k,t_j)} by direct summation.
inline Complex direct_coefficient(const Field& field, std::span<const std::int64_t> k) {
  const GridSpec& g = field.grid();
  if (static_cast<int>(k.size()) != g.dim()) throw DomainError("frequency dimension mismatch");
  const auto n = static_cast<std::int64_t>(g.n());
  const auto m = static_cast<std::size_t>(g.dim());
  std::vector<std::size_t> idx(m);
  Complex acc = 0.0;
  for (std::size_t flat = 0; flat < g.size(); ++flat) {
    std::size_t rest = flat;
    for (std::size_t a = m; a-- > 0;) {
      idx[a] = rest % g.n();
      rest /= g.n();
    }
    std::int64_t phase_index = 0;
    for (std::size_t a = 0; a < m; ++a) {
      phase_index = (phase_index + (k[a] % n) * static_cast<std::int64_t>(idx[a])) % n;
    }
    phase_index = (phase_index + n) % n;
    const double angle = -two_pi * static_cast<double>(phase_index) / static_cast<double>(n);
    acc += field.values()[flat] * Complex(std::cos(angle), std::sin(angle));
  }
  return acc / static_cast<double>(g.size());
}

/// Every coefficient by direct summation; quadratic cost, small grids only.
inline Spectrum direct_analyze(const Field& field) {
  const GridSpec& g = field.grid();
  if (g.size() > 4096) throw DomainError("direct_analyze is limited to n^m <= 4096");
  const auto m = static_cast<std::size_t>(g.dim());
  std::vector<Complex> out(g.size());
  std::vector<std::size_t> idx(m);
  std::vector<std::int64_t> k(m);
  for (std::size_t flat = 0; flat < g.size(); ++flat) {
    std::size_t rest = flat;
    for (std::size_t a = m; a-- > 0;) {
      idx[a] = rest % g.n();
      rest /= g.n();
    }
    for (std::size_t a = 0; a < m; ++a) k[a] = g.frequency(idx[a]);
    out[flat] = direct_coefficient(field, k);
  }
  return Spectrum(g, std::move(out));
}

/// J_0(x), ..., J_kmax(x) by Miller's downward recurrence, normalized with
/// J_0 + 2 sum_{k>=1} J_{2k} = 1.
inline std::vector<double> bessel_coefficients(double x, int kmax) {
  if (!std::isfinite(x)) throw DomainError("bessel_coefficients: argument must be finite");
  if (kmax < 0 || static_cast<double>(kmax) < std::abs(x) + 40.0) {
    throw DomainError("bessel_coefficients: kmax must be at least |x| + 40");
  }
  std::vector<double> out(static_cast<std::size_t>(kmax) + 1, 0.0);
  if (x == 0.0) {
    out[0] = 1.0;
    return out;
  }
  const double ax = std::abs(x);
  int start = kmax + 20 + static_cast<int>(std::sqrt(40.0 * (kmax + ax)));
  if (start % 2 != 0) ++start;
  std::vector<double> v(static_cast<std::size_t>(start) + 2, 0.0);
  v[static_cast<std::size_t>(start)] = 1e-300;
  for (int k = start; k >= 1; --k) {
    const auto uk = static_cast<std::size_t>(k);
    v[uk - 1] = (2.0 * k / ax) * v[uk] - v[uk + 1];
    if (std::abs(v[uk - 1]) > 1e250) {
      for (std::size_t i = uk - 1; i < v.size(); ++i) v[i] *= 1e-250;
    }
  }
  double norm = v[0];
  for (std::size_t k = 2; k < v.size(); k += 2) norm += 2.0 * v[k];
  for (std::size_t k = 0; k < out.size(); ++k) {
    out[k] = v[k] / norm;
    if (x < 0.0 && (k % 2 == 1)) out[k] = -out[k];
  }
  return out;
}

/// J_k(x) = (2 pi)^{-1} int_0^{2 pi} cos(k tau - x sin tau) d tau, trapezoidal rule
/// (spectrally accurate for the periodic integrand).
inline double bessel_by_quadrature(double x, int k) {
  const std::size_t nodes = 2 * next_power_of_two(static_cast<std::size_t>(std::abs(x) + std::abs(k)) + 64);
  CompensatedSum acc;
  for (std::size_t j = 0; j < nodes; ++j) {
    const double tau = two_pi * static_cast<double>(j) / static_cast<double>(nodes);
    acc.add(std::cos(k * tau - x * std::sin(tau)));
  }
  return acc.value() / static_cast<double>(nodes);
}

/// (sum_{k in Z} |J_k(x)|^p)^{1/p}, the A_p norm of e^{i x cos t}.
inline double bessel_lp_norm(double x, double p) {
  const int kmax = static_cast<int>(std::ceil(std::abs(x))) + 60;
  const auto j = bessel_coefficients(x, kmax);
  CompensatedSum acc;
  for (int k = kmax; k >= 1; --k) acc.add(2.0 * std::pow(std::abs(j[static_cast<std::size_t>(k)]), p));
  acc.add(std::pow(std::abs(j[0]), p));
  return std::pow(acc.value(), 1.0 / p);
}

/// sum_{|k| >= B} |J_k(x)|^p over both signs of k.
inline double bessel_tail_power_sum(double x, double p, double B) {
  const int kmax = static_cast<int>(std::ceil(std::max(std::abs(x), B))) + 60;
  const auto j = bessel_coefficients(x, kmax);
  CompensatedSum acc;
  for (int k = kmax; k >= 0; --k) {
    if (static_cast<double>(k) < B) break;
    const double w = k == 0 ? 1.0 : 2.0;
    acc.add(w * std::pow(std::abs(j[static_cast<std::size_t>(k)]), p));
  }
  return acc.value();
}

/// i^k J_k(x): the Fourier coefficient of e^{i x cos t} at frequency k.
inline Complex cosine_phase_coefficient(std::span<const double> bessel, std::int64_t k) {
  const auto ak = static_cast<std::size_t>(k < 0 ? -k : k);
  // J_{-k} = (-1)^k J_k
  const double jk = bessel[ak];
  static constexpr Complex powers[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
  const auto r = static_cast<std::size_t>(((k % 4) + 4) % 4);
  const double sign = (k < 0 && (ak % 2 == 1)) ? -1.0 : 1.0;
  return powers[r] * (sign * jk);
}

}  // namespace apnorm::oracles
