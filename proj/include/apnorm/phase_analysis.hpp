#pragma once

// Sampled moduli of continuity of grad phi and outer estimates of the
// measure of the gradient range grad phi(T^m).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "apnorm/common.hpp"
#include "apnorm/modulus.hpp"
#include "apnorm/phases.hpp"

namespace apnorm {

struct ModulusFitOptions {
  std::size_t random_pairs = 1'000'000;  // per scale
  std::size_t resolution = 0;            // grid points per axis; 0 picks the coarsest valid one
  std::size_t max_nodes = std::size_t{1} << 22;
  std::uint64_t seed = 0x5eed;
};

struct ModulusTable {
  std::vector<double> deltas;  // increasing
  std::vector<double> omegas;  // nondecreasing
  std::optional<double> fitted_alpha;
  double fitted_log_constant = 0.0;
  std::size_t resolution = 0;

  Modulus modulus() const { return Modulus::tabulated(deltas, omegas); }
};

/// delta_i = 2^{-i} for i = first..last, decreasing.
inline std::vector<double> dyadic_scales(int first, int last) {
  std::vector<double> s;
  for (int i = first; i <= last; ++i) s.push_back(std::ldexp(1.0, -i));
  return s;
}

namespace detail {

inline double vector_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

}  // namespace detail

/// omega(grad phi, delta) = sup_{|t1 - t2| <= delta} |grad phi(t1) - grad phi(t2)|,
/// estimated from random pairs at distance delta plus every axis-aligned pair
/// anchored on a grid with spacing <= min(delta)/8.
inline ModulusTable modulus_fit(const Phase& phase, std::span<const double> scales,
                                const ModulusFitOptions& options = {}) {
  if (scales.empty()) throw DomainError("modulus_fit needs at least one scale");
  for (std::size_t i = 0; i < scales.size(); ++i) {
    if (!(scales[i] > 0.0) || (i > 0 && !(scales[i] < scales[i - 1]))) {
      throw DomainError("modulus_fit scales must be positive and strictly decreasing");
    }
  }
  const int m = phase.dim();
  const auto um = static_cast<std::size_t>(m);
  const double min_delta = scales.back();
  std::size_t res = options.resolution;
  if (res == 0) res = std::max<std::size_t>(64, next_power_of_two(static_cast<std::size_t>(std::ceil(8.0 * two_pi / min_delta))));
  if (two_pi / static_cast<double>(res) > min_delta / 8.0) {
    throw DomainError("modulus_fit: scale " + format_double(min_delta) +
                      " is below the resolvable spacing of a " + std::to_string(res) + "-point grid");
  }
  const std::size_t nodes = checked_power(res, m);
  if (nodes == 0 || nodes > options.max_nodes) {
    throw DomainError("modulus_fit: scale " + format_double(min_delta) +
                      " needs more grid nodes than the budget allows");
  }

  std::vector<double> grads(nodes * um);
  std::vector<double> t(um), t2(um), g2(um), dir(um);
  std::vector<std::size_t> idx(um);
  for (std::size_t flat = 0; flat < nodes; ++flat) {
    std::size_t rest = flat;
    for (std::size_t a = um; a-- > 0;) {
      idx[a] = rest % res;
      rest /= res;
    }
    for (std::size_t a = 0; a < um; ++a) t[a] = two_pi * static_cast<double>(idx[a]) / static_cast<double>(res);
    phase.gradient(t, std::span(grads).subspan(flat * um, um));
  }

  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> uniform(0.0, two_pi);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> g1(um);

  std::vector<double> omega_desc(scales.size(), 0.0);
  for (std::size_t si = 0; si < scales.size(); ++si) {
    const double delta = scales[si];
    double best = 0.0;
    for (std::size_t flat = 0; flat < nodes; ++flat) {
      std::size_t rest = flat;
      for (std::size_t a = um; a-- > 0;) {
        idx[a] = rest % res;
        rest /= res;
      }
      for (std::size_t a = 0; a < um; ++a) t[a] = two_pi * static_cast<double>(idx[a]) / static_cast<double>(res);
      const std::span<const double> g0(grads.data() + flat * um, um);
      for (std::size_t axis = 0; axis < um; ++axis) {
        t2 = t;
        t2[axis] += delta;
        phase.gradient(t2, g2);
        best = std::max(best, detail::vector_distance(g0, g2));
      }
    }
    for (std::size_t s = 0; s < options.random_pairs; ++s) {
      double norm = 0.0;
      for (std::size_t a = 0; a < um; ++a) {
        t[a] = uniform(rng);
        dir[a] = m == 1 ? 1.0 : normal(rng);
        norm += dir[a] * dir[a];
      }
      norm = std::sqrt(norm);
      if (norm == 0.0) continue;
      for (std::size_t a = 0; a < um; ++a) t2[a] = t[a] + delta * dir[a] / norm;
      phase.gradient(t, g1);
      phase.gradient(t2, g2);
      best = std::max(best, detail::vector_distance(g1, g2));
    }
    omega_desc[si] = best;
  }

  ModulusTable table;
  table.resolution = res;
  // sup over |t1 - t2| <= delta includes every smaller scale.
  double running = 0.0;
  for (std::size_t i = scales.size(); i-- > 0;) {
    running = std::max(running, omega_desc[i]);
    table.deltas.push_back(scales[i]);
    table.omegas.push_back(running);
  }
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < table.deltas.size(); ++i) {
    if (table.omegas[i] > 0.0) {
      lx.push_back(std::log(table.deltas[i]));
      ly.push_back(std::log(table.omegas[i]));
    }
  }
  if (lx.size() >= 2) {
    const LineFit fit = least_squares(lx, ly);
    table.fitted_alpha = fit.slope;
    table.fitted_log_constant = fit.intercept;
  }
  return table;
}

/// Smallest c with omega_i <= c * model(delta_i) over the table, times a safety factor.
inline double modulus_constant(const ModulusTable& table, const Modulus& model, double safety = 1.1) {
  double c = 0.0;
  for (std::size_t i = 0; i < table.deltas.size(); ++i) {
    const double ref = model(table.deltas[i]);
    if (ref <= 0.0) continue;
    c = std::max(c, table.omegas[i] / ref);
  }
  return safety * c;
}

struct GradientRange {
  double measure = 0.0;
  double cell_size = 0.0;
  std::size_t resolution = 0;
  std::size_t cell_count = 0;
  std::vector<double> origin;                       // lower corner of cell (0,...,0)
  std::vector<std::vector<std::int64_t>> cells;     // only when requested
};

/// Outer covering of grad phi(T^m): sample grad phi on a resolution^m grid, take
/// the largest jump d between neighbouring samples (axis and diagonal) as the
/// cell side, and mark every cell that meets the box of half-width d/2 around
/// an image point. Returns measure 0 when every sample has the same gradient.
inline GradientRange gradient_range(const Phase& phase, std::size_t resolution, bool keep_cells = false) {
  if (resolution < 64) throw DomainError("gradient_range needs resolution >= 64");
  const int m = phase.dim();
  const auto um = static_cast<std::size_t>(m);
  const std::size_t nodes = checked_power(resolution, m);
  if (nodes == 0 || nodes > (std::size_t{1} << 26)) {
    throw DomainError("gradient_range: resolution^m exceeds the sampling budget");
  }
  std::vector<double> grads(nodes * um);
  std::vector<double> t(um);
  std::vector<std::size_t> idx(um);
  std::vector<double> lo(um, std::numeric_limits<double>::infinity());
  std::vector<double> hi(um, -std::numeric_limits<double>::infinity());
  for (std::size_t flat = 0; flat < nodes; ++flat) {
    std::size_t rest = flat;
    for (std::size_t a = um; a-- > 0;) {
      idx[a] = rest % resolution;
      rest /= resolution;
    }
    for (std::size_t a = 0; a < um; ++a) t[a] = two_pi * static_cast<double>(idx[a]) / static_cast<double>(resolution);
    auto g = std::span(grads).subspan(flat * um, um);
    phase.gradient(t, g);
    for (std::size_t a = 0; a < um; ++a) {
      lo[a] = std::min(lo[a], g[a]);
      hi[a] = std::max(hi[a], g[a]);
    }
  }

  // Largest sup-norm jump to any forward neighbour (offsets in {0,1}^m \ {0}).
  double jump = 0.0;
  const std::size_t offsets = std::size_t{1} << um;
  std::vector<std::size_t> nidx(um);
  for (std::size_t flat = 0; flat < nodes; ++flat) {
    std::size_t rest = flat;
    for (std::size_t a = um; a-- > 0;) {
      idx[a] = rest % resolution;
      rest /= resolution;
    }
    for (std::size_t off = 1; off < offsets; ++off) {
      std::size_t nflat = 0;
      for (std::size_t a = 0; a < um; ++a) {
        nidx[a] = (idx[a] + ((off >> a) & 1U)) % resolution;
        nflat = nflat * resolution + nidx[a];
      }
      for (std::size_t a = 0; a < um; ++a) {
        jump = std::max(jump, std::abs(grads[flat * um + a] - grads[nflat * um + a]));
      }
    }
  }

  GradientRange out;
  out.resolution = resolution;
  if (jump == 0.0) return out;

  const double h = jump;
  out.cell_size = h;
  out.origin.resize(um);
  std::vector<std::int64_t> extent(um);
  std::size_t total = 1;
  for (std::size_t a = 0; a < um; ++a) {
    out.origin[a] = lo[a] - h;
    extent[a] = static_cast<std::int64_t>(std::ceil((hi[a] - lo[a]) / h)) + 3;
    total *= static_cast<std::size_t>(extent[a]);
  }
  const bool dense = total <= (std::size_t{1} << 27);
  std::vector<bool> marked(dense ? total : 0, false);
  std::unordered_set<std::uint64_t> sparse;
  std::vector<std::int64_t> first(um), last(um), cur(um);
  for (std::size_t flat = 0; flat < nodes; ++flat) {
    for (std::size_t a = 0; a < um; ++a) {
      const double g = grads[flat * um + a];
      first[a] = static_cast<std::int64_t>(std::floor((g - 0.5 * h - out.origin[a]) / h));
      last[a] = static_cast<std::int64_t>(std::floor((g + 0.5 * h - out.origin[a]) / h));
      cur[a] = first[a];
    }
    while (true) {
      std::uint64_t key = 0;
      for (std::size_t a = 0; a < um; ++a) key = key * static_cast<std::uint64_t>(extent[a]) + static_cast<std::uint64_t>(cur[a]);
      if (dense) {
        marked[key] = true;
      } else {
        sparse.insert(key);
      }
      std::size_t a = um;
      while (a-- > 0) {
        if (++cur[a] <= last[a]) break;
        cur[a] = first[a];
      }
      if (a == static_cast<std::size_t>(-1)) break;
    }
  }
  auto decode = [&](std::uint64_t key) {
    std::vector<std::int64_t> c(um);
    for (std::size_t a = um; a-- > 0;) {
      c[a] = static_cast<std::int64_t>(key % static_cast<std::uint64_t>(extent[a]));
      key /= static_cast<std::uint64_t>(extent[a]);
    }
    return c;
  };
  if (dense) {
    for (std::size_t key = 0; key < total; ++key) {
      if (!marked[key]) continue;
      ++out.cell_count;
      if (keep_cells) out.cells.push_back(decode(key));
    }
  } else {
    out.cell_count = sparse.size();
    if (keep_cells) {
      std::vector<std::uint64_t> keys(sparse.begin(), sparse.end());
      std::sort(keys.begin(), keys.end());
      for (auto key : keys) out.cells.push_back(decode(key));
    }
  }
  out.measure = static_cast<double>(out.cell_count) * std::pow(h, m);
  return out;
}

}  // namespace apnorm
