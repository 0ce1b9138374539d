#pragma once

// Uniform grids on T^m, discrete Fourier analysis normalized so that
// f^(k) = n^{-m} sum_j f(t_j) e^{-i(k,t_j)}, and l^p spectral sums.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include <fftw3.h>

#include "apnorm/common.hpp"
#include "apnorm/phases.hpp"

namespace apnorm {

using Complex = std::complex<double>;

inline constexpr int max_dimension = 4;

class GridSpec {
 public:
  GridSpec(int dim, std::size_t points_per_axis) : dim_(dim), n_(points_per_axis) {
    if (dim_ < 1 || dim_ > max_dimension) {
      throw DomainError("grid dimension must lie in [1," + std::to_string(max_dimension) + "]");
    }
    if (n_ < 4 || !is_power_of_two(n_)) {
      throw DomainError("points per axis must be a power of two >= 4");
    }
    size_ = checked_power(n_, dim_);
    if (size_ == 0) throw DomainError("grid size n^m overflows");
  }

  int dim() const { return dim_; }
  std::size_t n() const { return n_; }
  std::size_t size() const { return size_; }

  double spacing() const { return two_pi / static_cast<double>(n_); }
  double node(std::size_t j) const { return two_pi * static_cast<double>(j) / static_cast<double>(n_); }

  /// Flat index (axis 0 slowest) to per-axis indices.
  void unflatten(std::size_t flat, std::span<std::size_t> idx) const {
    for (int a = dim_ - 1; a >= 0; --a) {
      idx[static_cast<std::size_t>(a)] = flat % n_;
      flat /= n_;
    }
  }

  /// Signed frequency in [-n/2, n/2) for a transform-order index.
  std::int64_t frequency(std::size_t j) const {
    const auto s = static_cast<std::int64_t>(j);
    return j < n_ / 2 ? s : s - static_cast<std::int64_t>(n_);
  }

  bool contains_frequency(std::int64_t k) const {
    const auto half = static_cast<std::int64_t>(n_ / 2);
    return k >= -half && k < half;
  }

  std::size_t index_of_frequency(std::int64_t k) const {
    const auto nn = static_cast<std::int64_t>(n_);
    return static_cast<std::size_t>(((k % nn) + nn) % nn);
  }

  bool operator==(const GridSpec&) const = default;

 private:
  int dim_;
  std::size_t n_;
  std::size_t size_ = 0;
};

/// Complex samples at the grid nodes, flat row-major order.
class Field {
 public:
  Field(GridSpec grid, std::vector<Complex> values) : grid_(grid), values_(std::move(values)) {
    if (values_.size() != grid_.size()) throw DomainError("field value count must equal n^m");
  }
  const GridSpec& grid() const { return grid_; }
  std::span<const Complex> values() const { return values_; }

 private:
  GridSpec grid_;
  std::vector<Complex> values_;
};

/// Fourier coefficients on the box [-n/2, n/2)^m, stored in transform order.
class Spectrum {
 public:
  Spectrum(GridSpec grid, std::vector<Complex> coefficients)
      : grid_(grid), coefficients_(std::move(coefficients)) {
    if (coefficients_.size() != grid_.size()) {
      throw DomainError("spectrum coefficient count must equal n^m");
    }
  }
  const GridSpec& grid() const { return grid_; }
  std::span<const Complex> coefficients() const { return coefficients_; }

  bool contains(std::span<const std::int64_t> k) const {
    if (static_cast<int>(k.size()) != grid_.dim()) return false;
    return std::all_of(k.begin(), k.end(), [&](std::int64_t kj) { return grid_.contains_frequency(kj); });
  }

  Complex at(std::span<const std::int64_t> k) const {
    if (!contains(k)) throw DomainError("frequency outside the resolved box");
    std::size_t flat = 0;
    for (std::int64_t kj : k) flat = flat * grid_.n() + grid_.index_of_frequency(kj);
    return coefficients_[flat];
  }

  /// Signed frequency vector of a flat index.
  void frequency_of(std::size_t flat, std::span<std::int64_t> k) const {
    std::array<std::size_t, max_dimension> idx{};
    grid_.unflatten(flat, std::span(idx).first(static_cast<std::size_t>(grid_.dim())));
    for (int a = 0; a < grid_.dim(); ++a) k[static_cast<std::size_t>(a)] = grid_.frequency(idx[static_cast<std::size_t>(a)]);
  }

 private:
  GridSpec grid_;
  std::vector<Complex> coefficients_;
};

namespace detail {

inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

/// In-place unnormalized m-dimensional DFT; sign is FFTW_FORWARD or FFTW_BACKWARD.
inline void fft_in_place(const GridSpec& grid, std::vector<Complex>& data, int sign) {
  std::array<int, max_dimension> dims{};
  for (int a = 0; a < grid.dim(); ++a) dims[static_cast<std::size_t>(a)] = static_cast<int>(grid.n());
  auto* ptr = reinterpret_cast<fftw_complex*>(data.data());
  fftw_plan plan = nullptr;
  {
    std::lock_guard lock(fftw_planner_mutex());
    plan = fftw_plan_dft(grid.dim(), dims.data(), ptr, ptr, sign, FFTW_ESTIMATE);
  }
  if (plan == nullptr) throw std::runtime_error("FFTW could not create a plan");
  fftw_execute(plan);
  std::lock_guard lock(fftw_planner_mutex());
  fftw_destroy_plan(plan);
}

}  // namespace detail

/// Samples e^{i lambda phi(t_j)} on every grid node.
inline Field sample_phase(const Phase& phase, double lambda, const GridSpec& grid) {
  if (phase.dim() != grid.dim()) {
    throw DomainError("phase dimension " + std::to_string(phase.dim()) +
                      " does not match grid dimension " + std::to_string(grid.dim()));
  }
  const auto m = static_cast<std::size_t>(grid.dim());
  std::vector<Complex> values(grid.size());
  std::array<std::size_t, max_dimension> idx{};
  std::array<double, max_dimension> t{};
  for (std::size_t flat = 0; flat < grid.size(); ++flat) {
    grid.unflatten(flat, std::span(idx).first(m));
    for (std::size_t a = 0; a < m; ++a) t[a] = grid.node(idx[a]);
    const double arg = lambda * phase(std::span<const double>(t.data(), m));
    values[flat] = Complex(std::cos(arg), std::sin(arg));
  }
  return Field(grid, std::move(values));
}

inline Spectrum analyze(const Field& field) {
  std::vector<Complex> data(field.values().begin(), field.values().end());
  detail::fft_in_place(field.grid(), data, FFTW_FORWARD);
  const double scale = 1.0 / static_cast<double>(field.grid().size());
  for (auto& c : data) c *= scale;
  return Spectrum(field.grid(), std::move(data));
}

inline Field synthesize(const Spectrum& spectrum) {
  std::vector<Complex> data(spectrum.coefficients().begin(), spectrum.coefficients().end());
  detail::fft_in_place(spectrum.grid(), data, FFTW_BACKWARD);
  return Field(spectrum.grid(), std::move(data));
}

inline void check_exponent(double p) {
  if (!(p >= 1.0 && p <= 2.0)) throw DomainError("exponent p must lie in [1,2], got " + format_double(p));
}

/// sum |c|^p over magnitudes already sorted in descending order, compensated.
inline double sorted_power_sum(std::span<const double> descending, double p) {
  CompensatedSum acc;
  if (p == 2.0) {
    for (double a : descending) acc.add(a * a);
  } else if (p == 1.0) {
    for (double a : descending) acc.add(a);
  } else {
    for (double a : descending) acc.add(std::pow(a, p));
  }
  return acc.value();
}

/// sum |c|^p in descending magnitude order with compensated accumulation.
inline double lp_power_sum(std::vector<double> magnitudes, double p) {
  std::sort(magnitudes.begin(), magnitudes.end(), std::greater<>());
  return sorted_power_sum(magnitudes, p);
}

inline std::vector<double> magnitudes(const Spectrum& spectrum) {
  std::vector<double> mags;
  mags.reserve(spectrum.coefficients().size());
  for (const Complex& c : spectrum.coefficients()) mags.push_back(std::abs(c));
  return mags;
}

/// (sum_k |f^(k)|^p)^{1/p} over the resolved box.
inline double lp_sum(const Spectrum& spectrum, double p) {
  check_exponent(p);
  return std::pow(lp_power_sum(magnitudes(spectrum), p), 1.0 / p);
}

/// Magnitudes on the outer annulus |k|_inf > n/4 (aliasing diagnostic).
inline std::vector<double> annulus_magnitudes(const Spectrum& spectrum) {
  const GridSpec& g = spectrum.grid();
  const auto quarter = static_cast<std::int64_t>(g.n() / 4);
  std::vector<double> mags;
  std::array<std::int64_t, max_dimension> k{};
  const auto m = static_cast<std::size_t>(g.dim());
  for (std::size_t flat = 0; flat < g.size(); ++flat) {
    spectrum.frequency_of(flat, std::span(k).first(m));
    std::int64_t kinf = 0;
    for (std::size_t a = 0; a < m; ++a) kinf = std::max(kinf, k[a] < 0 ? -k[a] : k[a]);
    if (kinf > quarter) mags.push_back(std::abs(spectrum.coefficients()[flat]));
  }
  return mags;
}

/// sum of |f^(k)|^p over the outer annulus |k|_inf > n/4.
inline double annulus_power_sum(const Spectrum& spectrum, double p) {
  check_exponent(p);
  return lp_power_sum(annulus_magnitudes(spectrum), p);
}

}  // namespace apnorm
