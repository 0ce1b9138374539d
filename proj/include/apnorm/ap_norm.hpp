#pragma once

// A_p norms of e^{i lambda phi} with grid refinement, truncation-tail control
// and the smoothness-based upper bounds.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "apnorm/common.hpp"
#include "apnorm/phases.hpp"
#include "apnorm/torus_spectra.hpp"

namespace apnorm {

struct GridPolicy {
  std::size_t min_n = 64;
  double oversample = 8.0;             // points per unit of lambda * G
  std::size_t degree_factor = 16;      // points per harmonic of a nonlinear trig phase
  int max_doublings = 3;
  std::size_t max_points = std::size_t{1} << 22;
  double annulus_tolerance = 1e-10;
  std::size_t fixed_n = 0;             // nonzero: use exactly this n, no diagnostic doubling
  bool allow_factored = true;

  std::size_t initial_n(const Phase& phase, double lambda) const {
    if (fixed_n != 0) return fixed_n;
    const double lg = std::ceil(std::abs(lambda) * phase.gradient_bound());
    std::size_t n = std::max<std::size_t>(min_n, static_cast<std::size_t>(oversample * lg));
    if (lambda != 0.0) n = std::max(n, degree_factor * phase.traits().spectral_degree);
    return next_power_of_two(std::max<std::size_t>(n, 4));
  }

  std::string describe() const {
    if (fixed_n != 0) return "fixed n=" + std::to_string(fixed_n);
    return "n0=pow2>=max(" + std::to_string(min_n) + "," + format_double(oversample) + "*ceil(|lambda|G)," +
           std::to_string(degree_factor) + "*degree); doublings<=" + std::to_string(max_doublings) +
           "; annulus<" + format_double(annulus_tolerance) + "; max_points=" + std::to_string(max_points) +
           (allow_factored ? "; factored" : "");
  }
};

struct NormEstimate {
  std::string phase;
  int m = 1;
  double lambda = 0.0;
  double p = 1.0;
  double value = 0.0;
  std::size_t grid_n = 0;
  int doublings = 0;
  double tail_bound = 0.0;       // bound on sum |f^(k)|^p outside the box; inf when unbounded
  bool tail_bounded = true;
  double annulus_ratio = 0.0;    // annulus mass / total mass at the final grid
  std::string method = "direct"; // "direct" or "factored"
  double divergence_indicator = std::numeric_limits<double>::quiet_NaN();
};

/// Smoothness budget the interpolation upper bound uses for a phase.
inline SmoothnessBudget seminorm_budget(const Phase& phase) {
  const SmoothnessBudget& s = phase.smoothness();
  if (s.infinitely_smooth) return {1, 1.0, true};
  return s;
}

/// C^{1,a} norm bound of e^{i lambda phi}: K_phi * max(1,|lambda|)^{1+a} where
/// K_phi = max(1,G) + C_H + 2^{1-a} G |grad phi|_inf^a dominates every term of
/// the chain rule for |lambda| >= 1.
inline double phase_seminorm(const Phase& phase, double lambda) {
  const auto& tr = phase.traits();
  const SmoothnessBudget budget = seminorm_budget(phase);
  const double a = budget.gradient_alpha();
  const double g = tr.gradient_bound;
  const double k = std::max(1.0, g) + tr.gradient_holder_constant +
                   std::pow(2.0, 1.0 - a) * g * std::pow(tr.gradient_norm_bound, a);
  return k * std::pow(std::max(1.0, std::abs(lambda)), 1.0 + a);
}

/// tau = m(1/p - 1/2) / (nu + alpha).
inline double interpolation_tau(const SmoothnessBudget& budget, double p, int m) {
  return m * (1.0 / p - 0.5) / budget.order();
}

struct InterpolationConstants {
  double tau = 0.0;
  double decay = 0.0;  // p (nu+alpha)(1 - tau)
  double shell = 0.0;  // shell l^2 constant
  double tail = 0.0;   // tail l^p constant
  double core = 0.0;   // low-frequency l^p constant
};

inline InterpolationConstants interpolation_constants(const SmoothnessBudget& budget, double p, int m) {
  check_exponent(p);
  if (m < 1) throw DomainError("dimension must be positive");
  InterpolationConstants c;
  c.tau = interpolation_tau(budget, p, m);
  if (!(c.tau < 1.0)) {
    throw HypothesisFailure("smoothness " + format_double(budget.order()) + " is not above m(1/p-1/2) = " +
                            format_double(m * (1.0 / p - 0.5)));
  }
  c.decay = p * budget.order() * (1.0 - c.tau);
  const double md = static_cast<double>(m);
  const double s1 = std::sin(1.0);
  c.shell = std::pow(md, budget.nu) * md * std::pow(4.0, budget.alpha - 1.0) *
            std::pow(2.0, 2.0 * budget.nu + 2.0) / (s1 * s1);
  const double count_exp = md * (1.0 - 0.5 * p);
  c.tail = std::pow(c.shell, 0.5 * p) * std::pow(2.0, count_exp) / (1.0 - std::pow(2.0, -c.decay));
  c.core = std::pow(3.0, count_exp);
  return c;
}

/// Upper bound on sum_{|k| >= B} |f^(k)|^p for f with C^{nu,alpha} seminorm <= seminorm.
inline double tail_bound(const SmoothnessBudget& budget, double seminorm, double B, double p, int m) {
  if (!(B >= 1.0)) throw DomainError("tail_bound needs B >= 1");
  if (!(seminorm >= 0.0)) throw DomainError("tail_bound needs a nonnegative seminorm");
  const InterpolationConstants c = interpolation_constants(budget, p, m);
  return c.tail * std::pow(seminorm, p) * std::pow(B, -c.decay);
}

/// ||f||_{A_p} <= (C_tail + C_core)^{1/p} seminorm^tau l2^{1-tau}.
inline double interpolation_bound(const SmoothnessBudget& budget, double seminorm, double l2norm, double p, int m) {
  const InterpolationConstants c = interpolation_constants(budget, p, m);
  if (!(c.tau > 0.0)) throw DomainError("interpolation bound needs tau in (0,1), got " + format_double(c.tau));
  if (!(l2norm > 0.0) || !(seminorm >= l2norm)) {
    throw DomainError("interpolation bound needs seminorm >= l2norm > 0");
  }
  return std::pow(c.tail + c.core, 1.0 / p) * std::pow(seminorm, c.tau) * std::pow(l2norm, 1.0 - c.tau);
}

inline double lemma2_interpolation(const Spectrum& spectrum, const SmoothnessBudget& budget, double seminorm,
                                   double l2norm, double p) {
  return interpolation_bound(budget, seminorm, l2norm, p, spectrum.grid().dim());
}

struct UpperTheory {
  double exponent = 0.0;
  bool valid = false;
  double value = std::numeric_limits<double>::quiet_NaN();  // |lambda|^exponent when valid
};

inline UpperTheory upper_theory(double lambda, double p, int m, const SmoothnessBudget& budget) {
  UpperTheory u;
  u.exponent = m * (1.0 / p - 0.5);
  u.valid = budget.infinitely_smooth || (budget.order() >= 1.0 && budget.order() > u.exponent);
  if (u.valid) u.value = std::pow(std::abs(lambda), u.exponent);
  return u;
}

struct DyadicProfile {
  double zero_mode = 0.0;        // |f^(0)|^2
  std::vector<double> shells;    // shells[n-1] = sum_{2^{n-1} <= |k| < 2^n} |f^(k)|^2
};

inline DyadicProfile dyadic_profile(const Spectrum& spectrum) {
  const GridSpec& g = spectrum.grid();
  const auto m = static_cast<std::size_t>(g.dim());
  DyadicProfile prof;
  std::vector<CompensatedSum> acc;
  std::array<std::int64_t, max_dimension> k{};
  for (std::size_t flat = 0; flat < g.size(); ++flat) {
    spectrum.frequency_of(flat, std::span(k).first(m));
    std::int64_t norm2 = 0;
    for (std::size_t a = 0; a < m; ++a) norm2 += k[a] * k[a];
    const double mag2 = std::norm(spectrum.coefficients()[flat]);
    if (norm2 == 0) {
      prof.zero_mode = mag2;
      continue;
    }
    // shell n holds 4^{n-1} <= |k|^2 < 4^n
    std::size_t shell = 1;
    while ((std::int64_t{1} << (2 * shell)) <= norm2) ++shell;
    if (acc.size() < shell) acc.resize(shell);
    acc[shell - 1].add(mag2);
  }
  for (const auto& s : acc) prof.shells.push_back(s.value());
  return prof;
}

struct ShellIdentity {
  double lhs = 0.0;  // mean over T^m of |d^nu_j f(t + d xi) - d^nu_j f(t - d xi)|^2
  double rhs = 0.0;  // 4 sum_k k_j^{2 nu} |f^(k)|^2 sin^2(d (k, xi))
};

/// Both sides of the Parseval shell identity for the trigonometric polynomial
/// carried by the spectrum. The left side evaluates the polynomial pointwise on
/// a grid twice as fine, which integrates |.|^2 exactly.
inline ShellIdentity shell_identity(const Spectrum& spectrum, int nu, int axis, double delta,
                                    std::span<const double> xi) {
  const GridSpec& g = spectrum.grid();
  const auto m = static_cast<std::size_t>(g.dim());
  if (g.size() > 4096) throw DomainError("shell_identity is limited to n^m <= 4096");
  if (axis < 0 || axis >= g.dim() || xi.size() != m) throw DomainError("shell_identity: bad axis or direction");
  if (nu < 0) throw DomainError("shell_identity: nu must be nonnegative");

  std::vector<std::array<std::int64_t, max_dimension>> freqs(g.size());
  std::vector<Complex> weights(g.size());
  CompensatedSum rhs;
  for (std::size_t flat = 0; flat < g.size(); ++flat) {
    spectrum.frequency_of(flat, std::span(freqs[flat]).first(m));
    const double kj = static_cast<double>(freqs[flat][static_cast<std::size_t>(axis)]);
    Complex deriv = 1.0;
    for (int i = 0; i < nu; ++i) deriv *= Complex(0.0, kj);
    weights[flat] = deriv * spectrum.coefficients()[flat];
    double dot = 0.0;
    for (std::size_t a = 0; a < m; ++a) dot += static_cast<double>(freqs[flat][a]) * xi[a];
    const double s = std::sin(delta * dot);
    rhs.add(4.0 * std::norm(weights[flat]) * s * s);
  }

  const GridSpec fine(g.dim(), 2 * g.n());
  std::array<std::size_t, max_dimension> idx{};
  auto eval = [&](std::span<const double> t) {
    Complex s = 0.0;
    for (std::size_t flat = 0; flat < g.size(); ++flat) {
      double arg = 0.0;
      for (std::size_t a = 0; a < m; ++a) arg += static_cast<double>(freqs[flat][a]) * t[a];
      s += weights[flat] * Complex(std::cos(arg), std::sin(arg));
    }
    return s;
  };
  CompensatedSum lhs;
  std::array<double, max_dimension> tp{}, tm{};
  for (std::size_t flat = 0; flat < fine.size(); ++flat) {
    fine.unflatten(flat, std::span(idx).first(m));
    for (std::size_t a = 0; a < m; ++a) {
      tp[a] = fine.node(idx[a]) + delta * xi[a];
      tm[a] = fine.node(idx[a]) - delta * xi[a];
    }
    lhs.add(std::norm(eval(std::span<const double>(tp.data(), m)) - eval(std::span<const double>(tm.data(), m))));
  }
  return {lhs.value() / static_cast<double>(fine.size()), rhs.value()};
}

namespace detail {

struct Resolution {
  std::size_t n = 0;
  int doublings = 0;
  std::string method = "direct";
  std::vector<double> power_sums;      // one per requested p
  std::vector<double> annulus_ratios;  // one per requested p
  std::vector<double> half_grid_sums;  // direct path only: power sums at n/2 (empty if n/2 < 4)
  std::optional<Spectrum> spectrum;
};

inline std::vector<double> descending(std::vector<double> v) {
  std::sort(v.begin(), v.end(), std::greater<>());
  return v;
}

/// Power sums of a spectrum restricted to the box of side n/2 (the previous grid).
inline std::vector<double> inner_box_power_sums(const Spectrum& s, std::span<const double> ps) {
  const GridSpec& g = s.grid();
  const auto m = static_cast<std::size_t>(g.dim());
  const auto quarter = static_cast<std::int64_t>(g.n() / 4);
  std::vector<double> mags;
  std::array<std::int64_t, max_dimension> k{};
  for (std::size_t flat = 0; flat < g.size(); ++flat) {
    s.frequency_of(flat, std::span(k).first(m));
    bool inside = true;
    for (std::size_t a = 0; a < m; ++a) inside = inside && k[a] >= -quarter && k[a] < quarter;
    if (inside) mags.push_back(std::abs(s.coefficients()[flat]));
  }
  mags = descending(std::move(mags));
  std::vector<double> out;
  for (double p : ps) out.push_back(sorted_power_sum(mags, p));
  return out;
}

inline Resolution resolve(const Phase& phase, double lambda, std::span<const double> ps, const GridPolicy& policy,
                          bool keep_spectrum);

inline Resolution resolve_factored(const Phase& phase, double lambda, std::span<const double> ps,
                                   const GridPolicy& policy) {
  Resolution out;
  out.method = "factored";
  out.power_sums.assign(ps.size(), 1.0);
  out.annulus_ratios.assign(ps.size(), 0.0);
  std::map<std::string, Resolution> done;
  std::size_t min_n = std::numeric_limits<std::size_t>::max();
  for (const Phase& factor : phase.axis_factors()) {
    auto it = done.find(factor.name());
    if (it == done.end()) it = done.emplace(factor.name(), resolve(factor, lambda, ps, policy, false)).first;
    const Resolution& r = it->second;
    for (std::size_t i = 0; i < ps.size(); ++i) {
      out.power_sums[i] *= r.power_sums[i];
      out.annulus_ratios[i] = std::max(out.annulus_ratios[i], r.annulus_ratios[i]);
    }
    out.n = std::max(out.n, r.n);
    min_n = std::min(min_n, r.n);
    out.doublings = std::max(out.doublings, r.doublings);
  }
  // The product box is only guaranteed to contain the smallest factor box.
  out.n = std::min(out.n, min_n);
  return out;
}

inline Resolution resolve(const Phase& phase, double lambda, std::span<const double> ps, const GridPolicy& policy,
                          bool keep_spectrum) {
  if (!std::isfinite(lambda)) throw DomainError("lambda must be finite");
  for (double p : ps) check_exponent(p);
  std::size_t n = policy.initial_n(phase, lambda);
  const int m = phase.dim();
  for (int d = 0;; ++d) {
    const std::size_t points = checked_power(n, m);
    if (points == 0 || points > policy.max_points) {
      if (policy.allow_factored && !keep_spectrum && !phase.axis_factors().empty()) {
        return resolve_factored(phase, lambda, ps, policy);
      }
      throw GridExhausted("lambda=" + format_double(lambda) + " for " + phase.name() + " needs n=" +
                          std::to_string(n) + " per axis, beyond the " + std::to_string(policy.max_points) +
                          "-point budget");
    }
    const GridSpec grid(m, n);
    Spectrum spectrum = analyze(sample_phase(phase, lambda, grid));
    const std::vector<double> mags = descending(magnitudes(spectrum));
    const std::vector<double> ann = descending(annulus_magnitudes(spectrum));
    Resolution r;
    r.n = n;
    r.doublings = d;
    bool resolved = true;
    for (double p : ps) {
      const double total = sorted_power_sum(mags, p);
      const double outer = sorted_power_sum(ann, p);
      r.power_sums.push_back(total);
      const double ratio = total > 0.0 ? outer / total : 0.0;
      r.annulus_ratios.push_back(ratio);
      if (!(ratio < policy.annulus_tolerance)) resolved = false;
    }
    if (resolved || policy.fixed_n != 0) {
      if (n / 2 >= 4) r.half_grid_sums = inner_box_power_sums(spectrum, ps);
      if (keep_spectrum) r.spectrum = std::move(spectrum);
      return r;
    }
    if (d >= policy.max_doublings) {
      throw GridExhausted("annulus diagnostic still failing for " + phase.name() + " at lambda=" +
                          format_double(lambda) + " after " + std::to_string(d) + " doublings (n=" +
                          std::to_string(n) + ")");
    }
    n *= 2;
  }
}

}  // namespace detail

/// Norm estimates for several exponents from one resolved spectrum.
inline std::vector<NormEstimate> ap_norms(const Phase& phase, double lambda, std::span<const double> ps,
                                          const GridPolicy& policy = {}) {
  const detail::Resolution r = detail::resolve(phase, lambda, ps, policy, false);
  const int m = phase.dim();
  const SmoothnessBudget budget = seminorm_budget(phase);
  std::vector<NormEstimate> out;
  for (std::size_t i = 0; i < ps.size(); ++i) {
    const double p = ps[i];
    NormEstimate e;
    e.phase = phase.name();
    e.m = m;
    e.lambda = lambda;
    e.p = p;
    e.value = std::pow(r.power_sums[i], 1.0 / p);
    e.grid_n = r.n;
    e.doublings = r.doublings;
    e.annulus_ratio = r.annulus_ratios[i];
    e.method = r.method;
    if (interpolation_tau(budget, p, m) < 1.0) {
      const double B = static_cast<double>(r.n) / 2.0;
      e.tail_bound = tail_bound(budget, phase_seminorm(phase, lambda), B, p, m);
    } else {
      e.tail_bounded = false;
      e.tail_bound = std::numeric_limits<double>::infinity();
      if (!r.half_grid_sums.empty() && r.half_grid_sums[i] > 0.0) {
        e.divergence_indicator = std::pow(r.power_sums[i] / r.half_grid_sums[i], 1.0 / p) - 1.0;
      }
    }
    out.push_back(std::move(e));
  }
  return out;
}

inline NormEstimate ap_norm(const Phase& phase, double lambda, double p, const GridPolicy& policy = {}) {
  const double ps[] = {p};
  return ap_norms(phase, lambda, ps, policy).front();
}

/// The direct-path spectrum the policy settles on for (phase, lambda, p).
inline Spectrum resolve_spectrum(const Phase& phase, double lambda, double p, const GridPolicy& policy = {}) {
  const double ps[] = {p};
  return std::move(*detail::resolve(phase, lambda, ps, policy, true).spectrum);
}

}  // namespace apnorm
