#pragma once

// Catalog of analytic phase functions on the torus T^m with exact gradients
// and the constants the norm engine and the certificates need.

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "apnorm/common.hpp"

namespace apnorm {

/// Smoothness class C^{nu,alpha}. Analytic phases set infinitely_smooth and
/// carry the C^{1,1} budget that the upper-bound machinery works with.
struct SmoothnessBudget {
  int nu = 1;
  double alpha = 1.0;
  bool infinitely_smooth = false;

  double order() const { return nu + alpha; }

  /// Hoelder exponent of the gradient: C^{nu,alpha} with nu >= 2 is C^{1,1}.
  double gradient_alpha() const {
    if (infinitely_smooth || nu >= 2) return 1.0;
    return nu == 1 ? alpha : 0.0;
  }
};

/// Parameters accepted by the built-in families (config keys of the same name).
struct PhaseParams {
  double value = 0.0;            // constant
  std::vector<int> k;            // linear
  double alpha = 0.5;            // weierstrass
  int depth = 12;                // weierstrass
  std::string base = "cosine";   // tensor_sum factor family
};

class Phase {
 public:
  using Point = std::span<const double>;
  using Eval = std::function<double(Point)>;
  using Grad = std::function<void(Point, std::span<double>)>;

  struct Traits {
    SmoothnessBudget smoothness;
    double gradient_bound = 0.0;            // sup over axes of |d phi / d t_j|
    double gradient_norm_bound = 0.0;       // sup of |grad phi|
    double gradient_holder_constant = 0.0;  // sup omega(grad phi, d) / d^alpha
    std::size_t spectral_degree = 0;        // highest harmonic of a nonlinear trig phase
    std::optional<std::vector<int>> linear_coefficients;
  };

  Phase(std::string name, std::string family, int dim, Eval eval, Grad grad, Traits traits,
        std::vector<Phase> axis_factors = {})
      : name_(std::move(name)),
        family_(std::move(family)),
        dim_(dim),
        eval_(std::move(eval)),
        grad_(std::move(grad)),
        traits_(std::move(traits)) {
    if (dim_ < 1) throw DomainError("phase dimension must be positive");
    if (!axis_factors.empty()) {
      if (static_cast<int>(axis_factors.size()) != dim_) {
        throw DomainError("axis factor count must equal the phase dimension");
      }
      factors_ = std::make_shared<const std::vector<Phase>>(std::move(axis_factors));
    }
  }

  const std::string& name() const { return name_; }
  const std::string& family() const { return family_; }
  int dim() const { return dim_; }
  const Traits& traits() const { return traits_; }
  const SmoothnessBudget& smoothness() const { return traits_.smoothness; }
  double gradient_bound() const { return traits_.gradient_bound; }

  double operator()(Point t) const { return eval_(t); }

  void gradient(Point t, std::span<double> out) const { grad_(t, out); }

  std::vector<double> gradient(Point t) const {
    std::vector<double> g(static_cast<std::size_t>(dim_));
    grad_(t, g);
    return g;
  }

  /// phi(t) = sum_j factor_j(t_j); empty when the phase is not an axis-wise sum.
  std::span<const Phase> axis_factors() const {
    if (!factors_) return {};
    return *factors_;
  }

 private:
  std::string name_;
  std::string family_;
  int dim_;
  Eval eval_;
  Grad grad_;
  Traits traits_;
  std::shared_ptr<const std::vector<Phase>> factors_;
};

namespace detail {

inline SmoothnessBudget analytic_budget() { return {1, 1.0, true}; }

/// sup_{d>0} sum_n a_n min(2, b_n d) / d^alpha, bounded interval by interval
/// between the breakpoints d = 2 / b_n.
inline double lacunary_holder_constant(std::span<const double> a, std::span<const double> b,
                                       double alpha) {
  std::vector<double> breaks;
  for (double bn : b) breaks.push_back(2.0 / bn);
  std::sort(breaks.begin(), breaks.end());
  auto parts = [&](double d) {
    double slope = 0.0, flat = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (b[i] * d < 2.0) {
        slope += a[i] * b[i];
      } else {
        flat += 2.0 * a[i];
      }
    }
    return std::pair{slope, flat};
  };
  double best = 0.0;
  // (0, first break]: purely linear part, ratio increasing in d.
  {
    const auto [slope, flat] = parts(0.5 * breaks.front());
    best = std::max(best, slope * std::pow(breaks.front(), 1.0 - alpha) +
                              flat * std::pow(breaks.front(), -alpha));
  }
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    const double lo = breaks[i], hi = breaks[i + 1];
    const auto [slope, flat] = parts(0.5 * (lo + hi));
    best = std::max(best, slope * std::pow(hi, 1.0 - alpha) + flat * std::pow(lo, -alpha));
  }
  {
    const double lo = breaks.back();
    const auto [slope, flat] = parts(2.0 * lo);
    best = std::max(best, slope * std::pow(lo, 1.0 - alpha) + flat * std::pow(lo, -alpha));
  }
  return best;
}

}  // namespace detail

inline Phase constant_phase(double value, int m = 1) {
  Phase::Traits tr;
  tr.smoothness = detail::analytic_budget();
  std::vector<Phase> factors;
  if (m > 1) {
    factors.push_back(constant_phase(value, 1));
    for (int j = 1; j < m; ++j) factors.push_back(constant_phase(0.0, 1));
  }
  return Phase(
      "constant(value=" + format_double(value) + ")", "constant", m,
      [value](Phase::Point) { return value; },
      [](Phase::Point, std::span<double> g) { std::fill(g.begin(), g.end(), 0.0); }, tr,
      std::move(factors));
}

inline Phase linear_phase(std::vector<int> k) {
  if (k.empty()) throw DomainError("linear phase needs at least one coefficient");
  const int m = static_cast<int>(k.size());
  Phase::Traits tr;
  tr.smoothness = detail::analytic_budget();
  double norm2 = 0.0;
  for (int kj : k) {
    tr.gradient_bound = std::max(tr.gradient_bound, std::abs(static_cast<double>(kj)));
    norm2 += static_cast<double>(kj) * kj;
  }
  tr.gradient_norm_bound = std::sqrt(norm2);
  tr.linear_coefficients = k;
  std::string name = "linear(k=";
  for (int j = 0; j < m; ++j) name += (j ? ";" : "") + std::to_string(k[static_cast<std::size_t>(j)]);
  name += ")";
  std::vector<Phase> factors;
  if (m > 1) {
    for (int kj : k) factors.push_back(linear_phase({kj}));
  }
  return Phase(
      std::move(name), "linear", m,
      [k](Phase::Point t) {
        double s = 0.0;
        for (std::size_t j = 0; j < k.size(); ++j) s += k[j] * t[j];
        return s;
      },
      [k](Phase::Point, std::span<double> g) {
        for (std::size_t j = 0; j < k.size(); ++j) g[j] = k[j];
      },
      tr, std::move(factors));
}

inline Phase cosine_phase() {
  Phase::Traits tr;
  tr.smoothness = detail::analytic_budget();
  tr.gradient_bound = 1.0;
  tr.gradient_norm_bound = 1.0;
  tr.gradient_holder_constant = 1.0;
  tr.spectral_degree = 1;
  return Phase(
      "cosine", "cosine", 1, [](Phase::Point t) { return std::cos(t[0]); },
      [](Phase::Point t, std::span<double> g) { g[0] = -std::sin(t[0]); }, tr);
}

inline Phase cosine_sum_phase(int m) {
  if (m < 1) throw DomainError("cosine_sum dimension must be positive");
  Phase::Traits tr;
  tr.smoothness = detail::analytic_budget();
  tr.gradient_bound = 1.0;
  tr.gradient_norm_bound = std::sqrt(static_cast<double>(m));
  tr.gradient_holder_constant = 1.0;
  tr.spectral_degree = 1;
  std::vector<Phase> factors;
  if (m > 1) factors.assign(static_cast<std::size_t>(m), cosine_phase());
  return Phase(
      "cosine_sum", "cosine_sum", m,
      [](Phase::Point t) {
        double s = 0.0;
        for (double tj : t) s += std::cos(tj);
        return s;
      },
      [](Phase::Point t, std::span<double> g) {
        for (std::size_t j = 0; j < t.size(); ++j) g[j] = -std::sin(t[j]);
      },
      tr, std::move(factors));
}

/// phi_0(t) = sum_{n=1}^{depth} 2^{-n(1+alpha)} cos(2^n t), a C^{1,alpha} phase on T.
inline Phase weierstrass_phase(double alpha, int depth = 12) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw DomainError("weierstrass: alpha must lie in (0,1]");
  if (depth < 1 || depth > 30) throw DomainError("weierstrass: depth must lie in [1,30]");
  std::vector<double> freq, amp, grad_amp;
  for (int n = 1; n <= depth; ++n) {
    const double f = std::ldexp(1.0, n);
    freq.push_back(f);
    amp.push_back(std::pow(f, -(1.0 + alpha)));
    grad_amp.push_back(std::pow(f, -alpha));
  }
  Phase::Traits tr;
  tr.smoothness = {1, alpha, false};
  for (double g : grad_amp) tr.gradient_bound += g;
  tr.gradient_norm_bound = tr.gradient_bound;
  tr.gradient_holder_constant = detail::lacunary_holder_constant(grad_amp, freq, alpha);
  tr.spectral_degree = std::size_t{1} << depth;
  return Phase(
      "weierstrass(alpha=" + format_double(alpha) + ";depth=" + std::to_string(depth) + ")",
      "weierstrass", 1,
      [freq, amp](Phase::Point t) {
        double s = 0.0;
        for (std::size_t i = 0; i < freq.size(); ++i) s += amp[i] * std::cos(freq[i] * t[0]);
        return s;
      },
      [freq, grad_amp](Phase::Point t, std::span<double> g) {
        double s = 0.0;
        for (std::size_t i = 0; i < freq.size(); ++i) s -= grad_amp[i] * std::sin(freq[i] * t[0]);
        g[0] = s;
      },
      tr);
}

/// phi(t) = phi_0(t_1) + ... + phi_0(t_m) for a one-dimensional phi_0.
inline Phase tensor_sum(const Phase& base, int m) {
  if (base.dim() != 1) throw DomainError("tensor_sum: base phase must be one-dimensional");
  if (m < 1) throw DomainError("tensor_sum: dimension must be positive");
  if (m == 1) return base;
  Phase::Traits tr = base.traits();
  const double a = tr.smoothness.gradient_alpha();
  tr.gradient_norm_bound = std::sqrt(static_cast<double>(m)) * base.traits().gradient_norm_bound;
  tr.gradient_holder_constant =
      base.traits().gradient_holder_constant * std::pow(static_cast<double>(m), 0.5 * (1.0 - a));
  tr.linear_coefficients.reset();
  std::vector<Phase> factors(static_cast<std::size_t>(m), base);
  return Phase(
      "tensor_sum(" + base.name() + ")", "tensor_sum", m,
      [base](Phase::Point t) {
        double s = 0.0;
        for (std::size_t j = 0; j < t.size(); ++j) s += base(t.subspan(j, 1));
        return s;
      },
      [base](Phase::Point t, std::span<double> g) {
        for (std::size_t j = 0; j < t.size(); ++j) base.gradient(t.subspan(j, 1), g.subspan(j, 1));
      },
      tr, std::move(factors));
}

/// Built-in family by name. Families: constant, linear, cosine, cosine_sum,
/// weierstrass, tensor_sum (factor chosen by params.base).
inline Phase builtin(std::string_view family, int m, const PhaseParams& params = {}) {
  if (m < 1) throw DomainError("phase dimension must be positive");
  if (family == "constant") return constant_phase(params.value, m);
  if (family == "linear") {
    std::vector<int> k = params.k;
    if (k.empty()) k.assign(static_cast<std::size_t>(m), 1);
    if (static_cast<int>(k.size()) != m) {
      throw DomainError("linear: k must have exactly m entries");
    }
    return linear_phase(std::move(k));
  }
  if (family == "cosine") {
    if (m != 1) throw DomainError("cosine is one-dimensional; use cosine_sum or tensor_sum");
    return cosine_phase();
  }
  if (family == "cosine_sum") return cosine_sum_phase(m);
  if (family == "weierstrass") {
    if (m != 1) throw DomainError("weierstrass is one-dimensional; use tensor_sum with base=weierstrass");
    return weierstrass_phase(params.alpha, params.depth);
  }
  if (family == "tensor_sum") {
    if (params.base == "tensor_sum") throw DomainError("tensor_sum: base cannot itself be tensor_sum");
    return tensor_sum(builtin(params.base, 1, params), m);
  }
  throw DomainError("unknown phase family '" + std::string(family) + "'");
}

struct ParamInfo {
  std::string key;
  std::string type;
  std::string default_value;
  std::string description;
};

struct FamilyInfo {
  std::string name;
  std::string dimensions;
  std::string formula;
  std::string smoothness;
  std::vector<ParamInfo> params;
};

inline std::vector<FamilyInfo> phase_catalog() {
  return {
      {"constant", "any", "phi(t) = value", "C^inf", {{"value", "real", "0", "constant value"}}},
      {"linear", "len(k)", "phi(t) = (k, t)", "C^inf",
       {{"k", "integer list", "1,...,1", "integer direction, one entry per axis"}}},
      {"cosine", "1", "phi(t) = cos t", "C^inf", {}},
      {"cosine_sum", "any", "phi(t) = cos t_1 + ... + cos t_m", "C^inf", {}},
      {"weierstrass", "1", "phi(t) = sum_{n=1}^{depth} 2^{-n(1+alpha)} cos(2^n t)", "C^{1,alpha}",
       {{"alpha", "real in (0,1]", "0.5", "Hoelder exponent of the derivative"},
        {"depth", "integer in [1,30]", "12", "number of lacunary harmonics"}}},
      {"tensor_sum", "any", "phi(t) = phi_0(t_1) + ... + phi_0(t_m)", "that of phi_0",
       {{"base", "family name", "cosine", "one-dimensional factor phi_0"},
        {"alpha", "real in (0,1]", "0.5", "passed to a weierstrass base"},
        {"depth", "integer in [1,30]", "12", "passed to a weierstrass base"}}},
  };
}

}  // namespace apnorm
