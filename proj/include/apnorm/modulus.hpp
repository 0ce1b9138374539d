#pragma once

// Moduli of continuity omega, chi(d) = d * omega(d) and its inverse.

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "apnorm/common.hpp"

namespace apnorm {

/// Either the power law omega(d) = d^alpha or a table interpolated linearly
/// with omega(0) = 0.
class Modulus {
 public:
  static Modulus power_law(double alpha) {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw DomainError("power-law modulus needs alpha in (0,1]");
    Modulus w;
    w.alpha_ = alpha;
    return w;
  }

  /// deltas strictly increasing and positive, omegas nondecreasing and nonnegative.
  static Modulus tabulated(std::vector<double> deltas, std::vector<double> omegas) {
    if (deltas.size() != omegas.size() || deltas.empty()) {
      throw DomainError("tabulated modulus needs matching, nonempty tables");
    }
    for (std::size_t i = 0; i < deltas.size(); ++i) {
      if (!(deltas[i] > 0.0) || (i > 0 && !(deltas[i] > deltas[i - 1]))) {
        throw DomainError("tabulated modulus scales must be positive and increasing");
      }
      if (!(omegas[i] >= 0.0) || (i > 0 && omegas[i] < omegas[i - 1])) {
        throw DomainError("tabulated modulus values must be nonnegative and nondecreasing");
      }
    }
    Modulus w;
    w.deltas_.push_back(0.0);
    w.omegas_.push_back(0.0);
    w.deltas_.insert(w.deltas_.end(), deltas.begin(), deltas.end());
    w.omegas_.insert(w.omegas_.end(), omegas.begin(), omegas.end());
    return w;
  }

  bool is_power_law() const { return deltas_.empty(); }
  double alpha() const { return alpha_; }

  /// Largest delta at which the modulus is defined.
  double max_delta() const {
    return is_power_law() ? std::numeric_limits<double>::infinity() : deltas_.back();
  }

  double operator()(double delta) const {
    if (delta < 0.0) throw DomainError("modulus evaluated at a negative scale");
    if (is_power_law()) return std::pow(delta, alpha_);
    if (delta > deltas_.back()) throw DomainError("scale beyond the tabulated modulus domain");
    const auto it = std::upper_bound(deltas_.begin(), deltas_.end(), delta);
    if (it == deltas_.end()) return omegas_.back();
    const auto i = static_cast<std::size_t>(it - deltas_.begin());
    const double s = (delta - deltas_[i - 1]) / (deltas_[i] - deltas_[i - 1]);
    return omegas_[i - 1] + s * (omegas_[i] - omegas_[i - 1]);
  }

  double chi(double delta) const { return delta * (*this)(delta); }

 private:
  Modulus() = default;
  double alpha_ = 1.0;
  std::vector<double> deltas_;
  std::vector<double> omegas_;
};

/// delta with chi(delta) = y. Closed form for power laws, bisection otherwise.
inline double chi_inverse(const Modulus& omega, double y) {
  if (!(y > 0.0) || !std::isfinite(y)) throw DomainError("chi_inverse needs a finite y > 0");
  if (omega.is_power_law()) return std::pow(y, 1.0 / (1.0 + omega.alpha()));
  double hi = omega.max_delta();
  if (omega.chi(hi) < y) throw DomainError("y lies outside the range of chi on the tabulated domain");
  double lo = 0.0;
  for (int it = 0; it < 200 && hi - lo > 0.0; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    if (omega.chi(mid) < y) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  // chi is continuous, so the bracket closes on the root; pick the closer end.
  return std::abs(omega.chi(lo) - y) < std::abs(omega.chi(hi) - y) ? lo : hi;
}

}  // namespace apnorm
