#pragma once

// The acceptance suite: ten numbered criteria, each with its own tolerance
// and runtime budget. Shared by the acceptance test binary and `apnorm verify`.

#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "apnorm/ap_norm.hpp"
#include "apnorm/common.hpp"
#include "apnorm/growth.hpp"
#include "apnorm/lower_cert.hpp"
#include "apnorm/oracles.hpp"
#include "apnorm/phase_analysis.hpp"
#include "apnorm/phases.hpp"

namespace apnorm::acceptance {

struct Options {
  double tolerance_scale = 1.0;  // < 1 tightens every numeric tolerance
  bool enforce_runtime = true;
  std::string cache_dir;  // sweeps read and write rows here when set
};

/// One measured quantity against its tolerance; margin = error / tolerance.
struct Check {
  std::string label;
  double error = 0.0;
  double tolerance = 0.0;
  bool ok = false;
  double margin() const { return tolerance > 0.0 ? error / tolerance : (ok ? 0.0 : std::numeric_limits<double>::infinity()); }
};

struct Result {
  int id = 0;
  std::string title;
  bool pass = false;
  double seconds = 0.0;
  double budget_seconds = 0.0;
  std::vector<Check> checks;
  std::vector<std::string> notes;
  std::string error;  // exception text when the criterion crashed

  double worst_margin() const {
    double w = 0.0;
    for (const Check& c : checks) w = std::max(w, c.margin());
    return w;
  }
};

namespace detail {

class Recorder {
 public:
  explicit Recorder(Result& r, const Options& o) : r_(r), options_(o), scale_(o.tolerance_scale) {}

  const Options& options() const { return options_; }

  /// |measured - expected| <= tolerance * scale
  void near(std::string label, double measured, double expected, double tolerance) {
    const double err = std::abs(measured - expected);
    const double tol = tolerance * scale_;
    r_.checks.push_back({label + ": " + format_double(measured) + " vs " + format_double(expected), err, tol,
                         err <= tol});
  }

  /// |measured / expected - 1| <= tolerance * scale
  void relative(std::string label, double measured, double expected, double tolerance) {
    const double err = std::abs(measured - expected) / std::abs(expected);
    const double tol = tolerance * scale_;
    r_.checks.push_back({label + ": " + format_double(measured) + " vs " + format_double(expected), err, tol,
                         err <= tol});
  }

  /// lo <= measured <= hi, with the bracket narrowed by the scale around its midpoint
  void within(std::string label, double measured, double lo, double hi) {
    const double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo) * scale_;
    const double err = std::abs(measured - mid);
    r_.checks.push_back({label + ": " + format_double(measured) + " in [" + format_double(mid - half) + ", " +
                             format_double(mid + half) + "]",
                         err, half, err <= half});
  }

  /// measured <= limit (one-sided, not scaled)
  void at_most(std::string label, double measured, double limit) {
    r_.checks.push_back({label + ": " + format_double(measured) + " <= " + format_double(limit),
                         std::max(0.0, measured - limit), 0.0, measured <= limit});
  }

  void holds(std::string label, bool ok) { r_.checks.push_back({std::move(label), ok ? 0.0 : 1.0, 0.0, ok}); }

  void note(std::string text) { r_.notes.push_back(std::move(text)); }

 private:
  Result& r_;
  const Options& options_;
  double scale_;
};

inline std::vector<Phase> builtins_in(int m) {
  std::vector<Phase> v{constant_phase(0.0, m), builtin("linear", m), cosine_sum_phase(m),
                       tensor_sum(cosine_phase(), m), tensor_sum(weierstrass_phase(0.5, 12), m)};
  if (m == 1) {
    v.push_back(cosine_phase());
    v.push_back(weierstrass_phase(0.5, 12));
  }
  return v;
}

inline void parseval(Recorder& rec) {
  double worst = 0.0;
  std::size_t count = 0;
  for (int m : {1, 2}) {
    for (const Phase& ph : builtins_in(m)) {
      for (double lambda : {1.0, 8.0, 64.0}) {
        const NormEstimate e = ap_norm(ph, lambda, 2.0);
        rec.near(ph.name() + " m=" + std::to_string(m) + " lambda=" + format_double(lambda) + " [" + e.method + "]",
                 e.value, 1.0, 1e-9);
        worst = std::max(worst, std::abs(e.value - 1.0));
        ++count;
      }
    }
  }
  rec.note(std::to_string(count) + " norms, max |norm - 1| = " + format_double(worst));
}

inline void oracle_agreement(Recorder& rec) {
  for (double lambda : {1.0, 5.0, 10.0, 20.0}) {
    for (double p : {1.0, 1.5}) {
      rec.relative("cosine lambda=" + format_double(lambda) + " p=" + format_double(p),
                   ap_norm(cosine_phase(), lambda, p).value, oracles::bessel_lp_norm(lambda, p), 1e-8);
    }
  }
}

inline void two_sided_exponent(Recorder& rec) {
  struct Case {
    Phase phase;
    int last;
    double tol;
    std::size_t discard;
  };
  // m=2 stops at 128: keeping 4 fitted rows leaves room to discard only one point
  const Case cases[] = {{cosine_phase(), 8, 0.05, 2}, {cosine_sum_phase(2), 7, 0.1, 1}};
  for (const Case& c : cases) {
    SweepPlan plan;
    plan.phase = c.phase;
    plan.ps = {1.0, 1.5};
    plan.lambdas = dyadic_lambdas(3, c.last);
    plan.with_certificates = false;
    plan.discard_prefix = c.discard;
    plan.cache_dir = rec.options().cache_dir;
    const SweepResult res = sweep(plan);
    for (const GrowthReport& rep : growth_reports(plan, res)) {
      const double target = rep.m * (1.0 / rep.p - 0.5);
      if (!rep.fit) {
        rec.holds(rep.phase + " p=" + format_double(rep.p) + " fit: " + rep.fit_error, false);
        continue;
      }
      rec.near(rep.phase + " m=" + std::to_string(rep.m) + " p=" + format_double(rep.p) + " slope", rep.fit->line.slope,
               target, c.tol);
      rec.note(rep.phase + " p=" + format_double(rep.p) + ": slope " + format_double(rep.fit->line.slope) +
               " rms " + format_double(rep.fit->line.residual_rms) + " over " + std::to_string(rep.fit->points) +
               " points");
    }
  }
}

inline void tensor_multiplicativity(Recorder& rec) {
  GridPolicy direct;
  direct.allow_factored = false;
  const Phase two = tensor_sum(cosine_phase(), 2);
  for (double lambda : {8.0, 32.0}) {
    for (double p : {1.0, 1.5}) {
      const double one = ap_norm(cosine_phase(), lambda, p, direct).value;
      rec.relative("lambda=" + format_double(lambda) + " p=" + format_double(p), ap_norm(two, lambda, p, direct).value,
                   one * one, 1e-8);
    }
  }
}

inline void certificate_soundness(Recorder& rec) {
  const std::vector<double> lambdas{16, 32, 64, 128};
  for (const Phase& ph : {cosine_phase(), cosine_sum_phase(2)}) {
    CertifyOptions opts;
    opts.concentration_samples = 0;
    const CertContext ctx = certification_context(ph, opts);
    rec.note(ph.name() + ": |W| = " + format_double(ctx.range.measure) + ", c_fit = " + format_double(ctx.c_fit));
    for (double p : {1.0, 1.5}) {
      std::vector<double> bounds;
      for (double lambda : lambdas) {
        const Certificate c = certify(ph, lambda, p, ctx, {}, opts);
        rec.at_most(ph.name() + " lambda=" + format_double(lambda) + " p=" + format_double(p) + " bound <= norm",
                    c.bound, c.norm);
        bounds.push_back(c.bound);
      }
      const double slope = fit_power_law(lambdas, bounds, 0).line.slope;
      rec.near(ph.name() + " p=" + format_double(p) + " certificate exponent", slope, ph.dim() * (1.0 / p - 0.5),
               1e-6);
    }
  }
}

inline void concentration(Recorder& rec) {
  const Phase c = cosine_phase();
  const ModulusTable table = modulus_fit(c, default_modulus_scales(1));
  const Modulus fitted = table.modulus();
  const double c_fit = modulus_constant(table, fitted);
  for (double lambda : {16.0, 64.0}) {
    const double delta = delta_lambda(lambda, fitted, c_fit, 1);
    const Spectrum s = resolve_spectrum(c, lambda, 1.0);
    const auto us = sample_image_frequencies(c, lambda, 100, 0x5eed + static_cast<std::uint64_t>(lambda));
    const ConcentrationSummary sum = concentration_sweep(s, us, delta);
    // pass rate gate: 1 - rate <= 0.05
    rec.near("lambda=" + format_double(lambda) + " pass rate (delta=" + format_double(delta) + ")",
             std::min(1.0, sum.pass_rate), 1.0, 0.05);
  }
}

inline void upper_sandwich(Recorder& rec) {
  const Phase c = cosine_phase();
  const SmoothnessBudget b = seminorm_budget(c);
  for (double lambda : {8.0, 32.0}) {
    const double norm = ap_norm(c, lambda, 1.0).value;
    const double seminorm = phase_seminorm(c, lambda);
    const Spectrum s = resolve_spectrum(c, lambda, 1.0);
    const double bound = lemma2_interpolation(s, b, seminorm, 1.0, 1.0);
    rec.at_most("lambda=" + format_double(lambda) + " norm <= interpolation bound", norm, bound);
    const double B = 4.0 * lambda;
    const double tail = oracles::bessel_tail_power_sum(lambda, 1.0, B);
    rec.at_most("lambda=" + format_double(lambda) + " Bessel tail at B=4 lambda <= tail_bound", tail,
                tail_bound(b, seminorm, B, 1.0, 1));
  }
}

inline void theta_scales(Recorder& rec) {
  const Modulus lin = Modulus::power_law(1.0);
  for (double y : {100.0, 1e4}) rec.relative("Theta_1(" + format_double(y) + ")", theta_scale(lin, 1.0, y), std::sqrt(y), 1e-12);
  const Modulus half = Modulus::power_law(0.5);
  std::vector<double> ly, lt;
  for (int i = 0; i <= 8; ++i) {
    const double y = std::pow(10.0, 2.0 + 0.25 * i);
    ly.push_back(std::log(y));
    lt.push_back(std::log(theta_scale(half, 1.2, y)));
  }
  const double slope = least_squares(ly, lt).slope;
  rec.relative("Theta_1.2 slope over [1e2,1e4]", slope, 1.0 / 1.2 - 1.0 / 1.5, 0.02);
  const double ratio = theta_scale(half, 1.8, 1e4) / theta_scale(half, 1.8, 1e2);
  rec.at_most("Theta_1.8(1e4)/Theta_1.8(1e2)", ratio, 1.2);
}

inline void degenerate(Recorder& rec) {
  for (const std::vector<int>& k : {std::vector<int>{1}, {3}, {-2}, {2, 1}, {-1, 3}}) {
    const Phase ph = linear_phase(k);
    for (double lambda : {1.0, 2.0, 5.0}) {
      for (double p : {1.0, 1.5, 2.0}) {
        rec.near(ph.name() + " lambda=" + format_double(lambda) + " p=" + format_double(p), ap_norm(ph, lambda, p).value,
                 1.0, 1e-12);
      }
    }
    const CertContext ctx = certification_context(ph);
    bool refused = false;
    try {
      certify(ph, 8.0, 1.0, ctx);
    } catch (const HypothesisFailure&) {
      refused = true;
    }
    rec.holds(ph.name() + " certificate refused (|W| = " + format_double(ctx.range.measure) + ")", refused);
  }
}

inline void weierstrass_bracket(Recorder& rec) {
  SweepPlan plan;
  plan.phase = weierstrass_phase(0.5, 12);
  plan.ps = {1.0};
  plan.lambdas = dyadic_lambdas(3, 8);
  plan.with_certificates = false;
  plan.cache_dir = rec.options().cache_dir;
  const SweepResult res = sweep(plan);
  const GrowthReport rep = growth_reports(plan, res).front();
  if (!rep.fit) {
    rec.holds("fit: " + rep.fit_error, false);
    return;
  }
  rec.within("weierstrass(1/2) p=1 slope", rep.fit->line.slope, 1.0 / 3.0 - 0.1, 0.5 + 0.05);
  rec.note("slope " + format_double(rep.fit->line.slope) + ", lower exponent " +
           format_double(rep.theory.lower.exponent) + ", norm/Theta_1 in [" + format_double(rep.theta_ratio_min) +
           ", " + format_double(rep.theta_ratio_max) + "]");
}

}  // namespace detail

struct Criterion {
  int id;
  std::string title;
  double budget_seconds;
  std::function<void(detail::Recorder&)> body;
};

inline const std::vector<Criterion>& criteria() {
  static const std::vector<Criterion> all{
      {1, "Parseval control", 10, detail::parseval},
      {2, "oracle agreement", 10, detail::oracle_agreement},
      {3, "two-sided growth exponent", 300, detail::two_sided_exponent},
      {4, "tensor multiplicativity", 30, detail::tensor_multiplicativity},
      {5, "certificate soundness", 120, detail::certificate_soundness},
      {6, "windowed concentration", 60, detail::concentration},
      {7, "upper-bound sandwich", 30, detail::upper_sandwich},
      {8, "Theta scales", 10, detail::theta_scales},
      {9, "degenerate gradient", 5, detail::degenerate},
      {10, "weierstrass bracket", 120, detail::weierstrass_bracket},
  };
  return all;
}

inline Result run(const Criterion& c, const Options& options = {}) {
  Result r;
  r.id = c.id;
  r.title = c.title;
  r.budget_seconds = c.budget_seconds;
  detail::Recorder rec(r, options);
  const auto start = std::chrono::steady_clock::now();
  try {
    c.body(rec);
  } catch (const std::exception& e) {
    r.error = e.what();
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  r.pass = r.error.empty() && !r.checks.empty();
  for (const Check& ch : r.checks) r.pass = r.pass && ch.ok;
  if (options.enforce_runtime && r.seconds > r.budget_seconds) r.pass = false;
  return r;
}

inline Result run(int id, const Options& options = {}) {
  for (const Criterion& c : criteria()) {
    if (c.id == id) return run(c, options);
  }
  throw DomainError("no acceptance criterion " + std::to_string(id));
}

/// "PASS criterion 3 ..." plus indented failing checks (all checks when verbose).
inline std::string describe(const Result& r, bool verbose = false) {
  std::ostringstream out;
  out << (r.pass ? "PASS" : "FAIL") << "  criterion " << r.id << "  " << r.title << "  ("
      << format_double(std::round(r.seconds * 100) / 100) << " s of " << format_double(r.budget_seconds)
      << " s, worst margin " << format_double(std::round(r.worst_margin() * 1000) / 1000) << ")\n";
  if (!r.error.empty()) out << "    error: " << r.error << '\n';
  if (r.seconds > r.budget_seconds) out << "    runtime budget exceeded\n";
  for (const Check& c : r.checks) {
    if (verbose || !c.ok || c.margin() > 0.5) out << "    " << (c.ok ? "ok   " : "FAIL ") << c.label << '\n';
  }
  for (const std::string& n : r.notes) out << "    note: " << n << '\n';
  return out.str();
}

}  // namespace apnorm::acceptance
