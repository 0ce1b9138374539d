#pragma once

// Lower-bound certificates: triangle windows, the window size delta_lambda,
// windowed concentration of |f^| around lambda * grad phi, and the assembled
// bound 0.5 c_m delta^m lambda^{m/p} |W|^{1/p}.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "apnorm/ap_norm.hpp"
#include "apnorm/common.hpp"
#include "apnorm/modulus.hpp"
#include "apnorm/phase_analysis.hpp"
#include "apnorm/phases.hpp"
#include "apnorm/torus_spectra.hpp"

namespace apnorm {

/// Fourier transform of the unit-height triangle on (-delta, delta), one axis:
/// (2 pi)^{-1} delta sinc^2(u delta / 2).
inline double triangle_hat_1d(double delta, double u) {
  const double x = 0.5 * u * delta;
  const double sinc = x == 0.0 ? 1.0 : std::sin(x) / x;
  return delta / two_pi * sinc * sinc;
}

/// Product of the per-axis transforms over the cube (-delta, delta)^m.
inline double triangle_hat(double delta, std::span<const double> u) {
  if (!(delta > 0.0)) throw DomainError("triangle window needs delta > 0");
  double v = 1.0;
  for (double ua : u) v *= triangle_hat_1d(delta, ua);
  return v;
}

/// delta with chi(2 sqrt(m) delta) = 1 / (2 c_fit lambda).
inline double delta_lambda(double lambda, const Modulus& omega, double c_fit, int m) {
  if (!(lambda >= 1.0)) throw DomainError("delta_lambda needs lambda >= 1");
  if (!(c_fit > 0.0)) throw DomainError("delta_lambda needs a positive modulus constant");
  if (m < 1) throw DomainError("dimension must be positive");
  double root = 0.0;
  try {
    root = chi_inverse(omega, 1.0 / (2.0 * c_fit * lambda));
  } catch (const DomainError& e) {
    throw DomainError("delta_lambda: lambda=" + format_double(lambda) + " is too small for the tabulated modulus (" +
                      e.what() + ")");
  }
  return root / (2.0 * std::sqrt(static_cast<double>(m)));
}

struct Concentration {
  std::vector<std::int64_t> u;
  double value = 0.0;
  double threshold = 0.0;
  bool pass = false;
};

/// sum_k triangle_hat(delta, u - k) |f^(k)| over the resolved box.
inline Concentration concentration_check(const Spectrum& spectrum, std::span<const std::int64_t> u, double delta) {
  if (!spectrum.contains(u)) throw DomainError("concentration_check: u lies outside the resolved box");
  if (!(delta > 0.0)) throw DomainError("concentration_check needs delta > 0");
  const GridSpec& g = spectrum.grid();
  const auto m = static_cast<std::size_t>(g.dim());
  // The window factorizes, so tabulate one axis over every offset u_a - k_a.
  std::vector<std::vector<double>> axis(m, std::vector<double>(g.n()));
  for (std::size_t a = 0; a < m; ++a) {
    for (std::size_t j = 0; j < g.n(); ++j) {
      axis[a][j] = triangle_hat_1d(delta, static_cast<double>(u[a] - g.frequency(j)));
    }
  }
  CompensatedSum acc;
  std::array<std::size_t, max_dimension> idx{};
  for (std::size_t flat = 0; flat < g.size(); ++flat) {
    g.unflatten(flat, std::span(idx).first(m));
    double w = 1.0;
    for (std::size_t a = 0; a < m; ++a) w *= axis[a][idx[a]];
    acc.add(w * std::abs(spectrum.coefficients()[flat]));
  }
  Concentration c;
  c.u.assign(u.begin(), u.end());
  c.value = acc.value();
  c.threshold = 0.5 * std::pow(delta / two_pi, static_cast<double>(m));
  c.pass = c.value >= c.threshold;
  return c;
}

/// u = round(lambda grad phi(t0)) for uniformly sampled t0, sorted lexicographically.
inline std::vector<std::vector<std::int64_t>> sample_image_frequencies(const Phase& phase, double lambda,
                                                                      std::size_t count, std::uint64_t seed) {
  const auto m = static_cast<std::size_t>(phase.dim());
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform(0.0, two_pi);
  std::vector<double> t(m), g(m);
  std::vector<std::vector<std::int64_t>> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    for (auto& ta : t) ta = uniform(rng);
    phase.gradient(t, g);
    std::vector<std::int64_t> u(m);
    for (std::size_t a = 0; a < m; ++a) u[a] = static_cast<std::int64_t>(std::llround(lambda * g[a]));
    out.push_back(std::move(u));
  }
  std::sort(out.begin(), out.end());
  return out;
}

struct ConcentrationSummary {
  std::vector<Concentration> results;  // sorted by u
  double pass_rate = 0.0;
};

inline ConcentrationSummary concentration_sweep(const Spectrum& spectrum,
                                                const std::vector<std::vector<std::int64_t>>& us, double delta) {
  ConcentrationSummary s;
  std::size_t passed = 0;
  for (const auto& u : us) {
    s.results.push_back(concentration_check(spectrum, u, delta));
    if (s.results.back().pass) ++passed;
  }
  s.pass_rate = us.empty() ? 0.0 : static_cast<double>(passed) / static_cast<double>(us.size());
  return s;
}

struct Certificate {
  std::string phase;
  int m = 1;
  double lambda = 0.0;
  double p = 1.0;
  double delta = 0.0;
  double c_fit = 0.0;
  double model_alpha = 1.0;
  double measure = 0.0;
  double bound = 0.0;
  double exponent = 0.0;  // lambda-exponent of the bound for a power-law modulus
  double norm = std::numeric_limits<double>::quiet_NaN();
  double pass_rate = std::numeric_limits<double>::quiet_NaN();
  std::size_t tested_u = 0;
  bool sound = false;
};

/// c_m = (1/2)(2 pi)^{-m}.
inline double window_constant(int m) { return 0.5 * std::pow(two_pi, -static_cast<double>(m)); }

inline Certificate gradient_range_bound(double lambda, double p, const GradientRange& range, const Modulus& omega,
                                  double c_fit, int m) {
  check_exponent(p);
  if (!(range.measure > 0.0)) {
    throw HypothesisFailure("gradient range has measure 0: grad phi(T^m) is degenerate, no lower bound is claimed");
  }
  Certificate c;
  c.m = m;
  c.lambda = lambda;
  c.p = p;
  c.c_fit = c_fit;
  c.measure = range.measure;
  c.delta = delta_lambda(lambda, omega, c_fit, m);
  const double md = static_cast<double>(m);
  c.bound = 0.5 * window_constant(m) * std::pow(c.delta, md) * std::pow(lambda, md / p) *
            std::pow(range.measure, 1.0 / p);
  if (omega.is_power_law()) {
    c.model_alpha = omega.alpha();
    c.exponent = md * (1.0 / p - 1.0 / (1.0 + omega.alpha()));
  } else {
    c.model_alpha = std::numeric_limits<double>::quiet_NaN();
    c.exponent = std::numeric_limits<double>::quiet_NaN();
  }
  return c;
}

struct CertifyOptions {
  std::size_t range_resolution = 0;     // 0: 4096 (m=1), 1024 (m=2), 128 (m>=3)
  std::vector<double> modulus_scales;   // empty: dyadic defaults per dimension
  ModulusFitOptions fit;
  double safety = 1.1;
  std::size_t concentration_samples = 100;
  std::uint64_t seed = 0x0c0ffee;
};

/// Per-phase data shared by every lambda: |W|, the fitted modulus and c_fit.
struct CertContext {
  GradientRange range;
  ModulusTable table;
  double model_alpha = 1.0;
  double c_fit = 0.0;

  Modulus model() const { return Modulus::power_law(model_alpha); }
};

inline std::vector<double> default_modulus_scales(int m) {
  if (m == 1) return dyadic_scales(2, 10);
  if (m == 2) return dyadic_scales(1, 4);
  return dyadic_scales(1, 2);
}

inline CertContext certification_context(const Phase& phase, const CertifyOptions& options = {}) {
  const int m = phase.dim();
  CertContext ctx;
  std::size_t res = options.range_resolution;
  if (res == 0) res = m == 1 ? 4096 : (m == 2 ? 1024 : 128);
  ctx.range = gradient_range(phase, res);
  if (!(ctx.range.measure > 0.0)) return ctx;
  const double a = phase.smoothness().gradient_alpha();
  if (!(a > 0.0)) throw HypothesisFailure("phase " + phase.name() + " has no Hoelder gradient; no modulus model");
  ctx.model_alpha = a;
  const std::vector<double> scales =
      options.modulus_scales.empty() ? default_modulus_scales(m) : options.modulus_scales;
  ctx.table = modulus_fit(phase, scales, options.fit);
  ctx.c_fit = modulus_constant(ctx.table, ctx.model(), options.safety);
  if (!(ctx.c_fit > 0.0)) throw HypothesisFailure("fitted modulus vanishes on every scale for " + phase.name());
  return ctx;
}

/// Certificate for one (lambda, p); soundness compares against the computed norm.
inline Certificate certify(const Phase& phase, double lambda, double p, const CertContext& ctx,
                           const GridPolicy& policy = {}, const CertifyOptions& options = {}) {
  Certificate c = gradient_range_bound(lambda, p, ctx.range, ctx.model(), ctx.c_fit, phase.dim());
  c.phase = phase.name();
  c.norm = ap_norm(phase, lambda, p, policy).value;
  c.sound = c.bound <= c.norm;
  if (options.concentration_samples > 0) {
    const Spectrum spectrum = resolve_spectrum(phase, lambda, p, policy);
    const auto us = sample_image_frequencies(phase, lambda, options.concentration_samples, options.seed);
    c.pass_rate = concentration_sweep(spectrum, us, c.delta).pass_rate;
    c.tested_u = us.size();
  }
  return c;
}

}  // namespace apnorm
