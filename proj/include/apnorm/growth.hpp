#pragma once

// Lambda sweeps over a phase, exponent fits on (log lambda, log norm), the
// theoretical exponents and the slow-growth reference scales Theta_p.

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <system_error>
#include <thread>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "json.hpp"

#include "apnorm/ap_norm.hpp"
#include "apnorm/common.hpp"
#include "apnorm/lower_cert.hpp"
#include "apnorm/modulus.hpp"
#include "apnorm/phases.hpp"

namespace apnorm {

// ---------------------------------------------------------------- theory

struct ExponentClaim {
  double exponent = std::numeric_limits<double>::quiet_NaN();
  bool valid = false;
};

struct TheoryExponents {
  ExponentClaim lower;  // m(1/p - 1/(1+a)), a the Hoelder exponent of grad phi
  ExponentClaim upper;  // m(1/p - 1/2)
  bool two_sided = false;
  bool lower_nontrivial = false;  // p < 1 + a
};

inline TheoryExponents theory_exponents(int m, double p, const SmoothnessBudget& budget) {
  check_exponent(p);
  TheoryExponents t;
  const double md = static_cast<double>(m);
  if (budget.infinitely_smooth || budget.nu >= 1) {
    const double a = budget.gradient_alpha();
    t.lower.exponent = md * (1.0 / p - 1.0 / (1.0 + a));
    t.lower.valid = true;
    t.lower_nontrivial = p < 1.0 + a;
  }
  const UpperTheory u = upper_theory(1.0, p, m, budget);
  t.upper.exponent = u.exponent;
  t.upper.valid = u.valid;
  t.two_sided = (budget.infinitely_smooth || budget.order() >= 2.0) && t.upper.valid && t.lower.valid;
  return t;
}

/// Theta_1(y) = (y / log y) chi^{-1}((log y)^2 / y) for y > e;
/// Theta_p(y) = (int_1^y chi^{-1}(1/tau)^p dtau)^{1/p} for 1 < p <= 2, y > 1.
inline double theta_scale(const Modulus& omega, double p, double y) {
  check_exponent(p);
  if (!std::isfinite(y)) throw DomainError("theta_scale needs a finite y");
  if (p == 1.0) {
    if (!(y > std::numbers::e)) throw DomainError("Theta_1 needs y > e");
    const double ly = std::log(y);
    return y / ly * chi_inverse(omega, ly * ly / y);
  }
  if (!(y > 1.0)) throw DomainError("Theta_p needs y > 1");
  // tau = e^s: int_0^{log y} chi^{-1}(e^{-s})^p e^s ds
  auto integrand = [&](double s) { return std::pow(chi_inverse(omega, std::exp(-s)), p) * std::exp(s); };
  double error = 0.0;
  const double integral =
      boost::math::quadrature::gauss_kronrod<double, 61>::integrate(integrand, 0.0, std::log(y), 15, 1e-13, &error);
  return std::pow(integral, 1.0 / p);
}

// ---------------------------------------------------------------- fits

struct PowerFit {
  LineFit line;
  std::size_t points = 0;
};

/// Least squares of log value on log lambda after dropping the first discard_prefix points.
inline PowerFit fit_power_law(std::span<const double> lambdas, std::span<const double> values,
                              std::size_t discard_prefix = 2) {
  if (lambdas.size() != values.size()) throw DomainError("fit: lambda and value counts differ");
  std::vector<double> lx, ly;
  for (std::size_t i = discard_prefix; i < lambdas.size(); ++i) {
    if (!(lambdas[i] > 0.0) || !(values[i] > 0.0) || !std::isfinite(values[i])) continue;
    lx.push_back(std::log(lambdas[i]));
    ly.push_back(std::log(values[i]));
  }
  if (lx.size() < 4) {
    throw DomainError("fit needs at least 4 usable rows after discarding " + std::to_string(discard_prefix) +
                      ", got " + std::to_string(lx.size()));
  }
  return {least_squares(lx, ly), lx.size()};
}

// ---------------------------------------------------------------- sweep

struct SweepRow {
  NormEstimate estimate;
  double cert_lower = std::numeric_limits<double>::quiet_NaN();
  double upper_bound = std::numeric_limits<double>::quiet_NaN();
  TheoryExponents theory;
  bool failed = false;
  bool grid_failure = false;
  std::string error;
  bool cache_hit = false;
};

struct GrowthReport {
  std::string phase;
  int m = 1;
  double p = 1.0;
  std::optional<PowerFit> fit;
  std::string fit_error;
  TheoryExponents theory;
  double cert_exponent = std::numeric_limits<double>::quiet_NaN();
  double upper_exponent = std::numeric_limits<double>::quiet_NaN();
  double theta_ratio_min = std::numeric_limits<double>::quiet_NaN();  // norm / Theta_p(lambda)
  double theta_ratio_max = std::numeric_limits<double>::quiet_NaN();
};

struct SweepPlan {
  Phase phase = cosine_phase();
  std::vector<double> ps{1.0};
  std::vector<double> lambdas{8, 16, 32, 64, 128, 256};
  GridPolicy policy;
  unsigned workers = 0;  // 0: hardware concurrency
  bool with_certificates = true;
  CertifyOptions cert;
  std::string cache_dir;  // empty: no cache
  std::size_t discard_prefix = 2;

  void validate() const {
    if (lambdas.empty()) throw DomainError("sweep needs at least one lambda");
    if (ps.empty()) throw DomainError("sweep needs at least one p");
    for (std::size_t i = 0; i < lambdas.size(); ++i) {
      if (!(lambdas[i] >= 1.0) || !std::isfinite(lambdas[i])) throw DomainError("sweep lambdas must be finite and >= 1");
      if (i > 0 && !(lambdas[i] > lambdas[i - 1])) throw DomainError("sweep lambdas must be strictly increasing");
    }
    for (double p : ps) check_exponent(p);
  }
};

struct SweepResult {
  std::vector<SweepRow> rows;        // requested p values, ordered by (p, lambda)
  std::vector<SweepRow> controls;    // p = 2 normalization rows when 2 was not requested
  double parseval_max_error = 0.0;   // max |norm - 1| over every p = 2 row
  std::size_t computed = 0;
  std::size_t cache_hits = 0;
  std::optional<CertContext> cert_context;
  std::string cert_refusal;
};

/// One JSON file per key under a directory; unreadable or mismatched files are ignored.
class RowCache {
 public:
  explicit RowCache(std::string dir) : dir_(std::move(dir)) {}

  bool enabled() const { return !dir_.empty(); }

  static std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
      h ^= c;
      h *= 1099511628211ULL;
    }
    return h;
  }

  std::filesystem::path path_for(const std::string& key) const {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fnv1a(key)));
    return std::filesystem::path(dir_) / (std::string(buf) + ".json");
  }

  std::optional<nlohmann::json> load(const std::string& key) const {
    if (!enabled()) return std::nullopt;
    std::ifstream in(path_for(key));
    if (!in) return std::nullopt;
    try {
      nlohmann::json j = nlohmann::json::parse(in);
      if (!j.is_object() || !j.contains("key") || j["key"] != key || !j.contains("data")) return std::nullopt;
      return j["data"];
    } catch (const std::exception&) {
      return std::nullopt;
    }
  }

  void store(const std::string& key, const nlohmann::json& data) {
    if (!enabled()) return;
    std::lock_guard lock(mutex_);
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    const auto path = path_for(key);
    const auto tmp = path.string() + ".tmp";
    {
      std::ofstream out(tmp, std::ios::trunc);
      if (!out) return;
      out << nlohmann::json{{"key", key}, {"data", data}}.dump() << '\n';
    }
    std::filesystem::rename(tmp, path, ec);
  }

 private:
  std::string dir_;
  std::mutex mutex_;
};

namespace detail {

inline double parse_double(const nlohmann::json& j) {
  const std::string s = j.get<std::string>();
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw std::runtime_error("bad number in cache");
  return v;
}

inline nlohmann::json estimate_to_json(const NormEstimate& e) {
  return {{"value", format_double(e.value)},       {"grid_n", e.grid_n},
          {"doublings", e.doublings},              {"tail_bound", format_double(e.tail_bound)},
          {"tail_bounded", e.tail_bounded},        {"annulus_ratio", format_double(e.annulus_ratio)},
          {"method", e.method},                    {"divergence", format_double(e.divergence_indicator)}};
}

inline NormEstimate estimate_from_json(const nlohmann::json& j, const Phase& phase, double lambda, double p) {
  NormEstimate e;
  e.phase = phase.name();
  e.m = phase.dim();
  e.lambda = lambda;
  e.p = p;
  e.value = parse_double(j.at("value"));
  e.grid_n = j.at("grid_n").get<std::size_t>();
  e.doublings = j.at("doublings").get<int>();
  e.tail_bound = parse_double(j.at("tail_bound"));
  e.tail_bounded = j.at("tail_bounded").get<bool>();
  e.annulus_ratio = parse_double(j.at("annulus_ratio"));
  e.method = j.at("method").get<std::string>();
  e.divergence_indicator = parse_double(j.at("divergence"));
  return e;
}

inline std::string norm_key(const Phase& phase, const GridPolicy& policy, double lambda, double p) {
  return "norm|v1|" + phase.name() + "|m=" + std::to_string(phase.dim()) +
         "|n0=" + std::to_string(policy.initial_n(phase, lambda)) + "|lambda=" + format_double(lambda) +
         "|p=" + format_double(p) + "|policy=" + policy.describe();
}

inline std::string context_key(const Phase& phase, const CertifyOptions& o) {
  std::string scales;
  for (double s : o.modulus_scales) scales += format_double(s) + ";";
  return "certctx|v1|" + phase.name() + "|m=" + std::to_string(phase.dim()) +
         "|res=" + std::to_string(o.range_resolution) + "|scales=" + scales + "|safety=" + format_double(o.safety) +
         "|pairs=" + std::to_string(o.fit.random_pairs) + "|fitres=" + std::to_string(o.fit.resolution) +
         "|seed=" + std::to_string(o.fit.seed);
}

}  // namespace detail

/// Per-phase certificate context, read from or written to the cache.
inline CertContext cached_context(const Phase& phase, const CertifyOptions& options, RowCache& cache,
                                  bool* hit = nullptr) {
  const std::string key = detail::context_key(phase, options);
  if (auto j = cache.load(key)) {
    try {
      CertContext ctx;
      ctx.range.measure = detail::parse_double(j->at("measure"));
      ctx.range.cell_size = detail::parse_double(j->at("cell_size"));
      ctx.range.resolution = j->at("resolution").get<std::size_t>();
      ctx.range.cell_count = j->at("cell_count").get<std::size_t>();
      ctx.model_alpha = detail::parse_double(j->at("model_alpha"));
      ctx.c_fit = detail::parse_double(j->at("c_fit"));
      for (const auto& d : j->at("deltas")) ctx.table.deltas.push_back(detail::parse_double(d));
      for (const auto& w : j->at("omegas")) ctx.table.omegas.push_back(detail::parse_double(w));
      if (hit) *hit = true;
      return ctx;
    } catch (const std::exception&) {
      // fall through and recompute
    }
  }
  if (hit) *hit = false;
  CertContext ctx = certification_context(phase, options);
  nlohmann::json deltas = nlohmann::json::array(), omegas = nlohmann::json::array();
  for (double d : ctx.table.deltas) deltas.push_back(format_double(d));
  for (double w : ctx.table.omegas) omegas.push_back(format_double(w));
  cache.store(key, {{"measure", format_double(ctx.range.measure)},
                    {"cell_size", format_double(ctx.range.cell_size)},
                    {"resolution", ctx.range.resolution},
                    {"cell_count", ctx.range.cell_count},
                    {"model_alpha", format_double(ctx.model_alpha)},
                    {"c_fit", format_double(ctx.c_fit)},
                    {"deltas", deltas},
                    {"omegas", omegas}});
  return ctx;
}

/// Closed-form bound columns of a row: certificate lower bound and interpolation upper bound.
inline void fill_bounds(SweepRow& row, const Phase& phase, const std::optional<CertContext>& ctx) {
  const double lambda = row.estimate.lambda, p = row.estimate.p;
  const int m = phase.dim();
  const SmoothnessBudget budget = seminorm_budget(phase);
  row.theory = theory_exponents(m, p, phase.smoothness());
  const double tau = interpolation_tau(budget, p, m);
  if (tau > 0.0 && tau < 1.0) row.upper_bound = interpolation_bound(budget, phase_seminorm(phase, lambda), 1.0, p, m);
  if (ctx && ctx->range.measure > 0.0 && lambda >= 1.0) {
    row.cert_lower = gradient_range_bound(lambda, p, ctx->range, ctx->model(), ctx->c_fit, m).bound;
  }
}

inline SweepResult sweep(const SweepPlan& plan) {
  plan.validate();
  const Phase& phase = plan.phase;
  RowCache cache(plan.cache_dir);
  SweepResult result;

  if (plan.with_certificates) {
    try {
      bool hit = false;
      CertContext ctx = cached_context(phase, plan.cert, cache, &hit);
      if (ctx.range.measure > 0.0) {
        result.cert_context = std::move(ctx);
      } else {
        result.cert_refusal = "gradient range of " + phase.name() + " has measure 0";
      }
      if (hit) ++result.cache_hits;
    } catch (const std::exception& e) {
      result.cert_refusal = e.what();
    }
  }

  std::vector<double> all_ps = plan.ps;
  const bool add_control = std::find(all_ps.begin(), all_ps.end(), 2.0) == all_ps.end();
  if (add_control) all_ps.push_back(2.0);

  // rows_by_lambda[i][j]: lambda i, exponent all_ps[j]
  std::vector<std::vector<SweepRow>> grid_rows(plan.lambdas.size(), std::vector<SweepRow>(all_ps.size()));
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> computed{0}, hits{0};

  auto work = [&] {
    for (std::size_t i = next++; i < plan.lambdas.size(); i = next++) {
      const double lambda = plan.lambdas[i];
      auto& rows = grid_rows[i];
      std::vector<std::size_t> missing;
      for (std::size_t j = 0; j < all_ps.size(); ++j) {
        rows[j].estimate.phase = phase.name();
        rows[j].estimate.m = phase.dim();
        rows[j].estimate.lambda = lambda;
        rows[j].estimate.p = all_ps[j];
        bool ok = false;
        if (auto rec = cache.load(detail::norm_key(phase, plan.policy, lambda, all_ps[j]))) {
          try {
            rows[j].estimate = detail::estimate_from_json(*rec, phase, lambda, all_ps[j]);
            rows[j].cache_hit = true;
            ok = true;
          } catch (const std::exception&) {
          }
        }
        if (!ok) missing.push_back(j);
      }
      hits += all_ps.size() - missing.size();
      if (!missing.empty()) {
        std::vector<double> ps;
        for (std::size_t j : missing) ps.push_back(all_ps[j]);
        try {
          const auto estimates = ap_norms(phase, lambda, ps, plan.policy);
          for (std::size_t q = 0; q < missing.size(); ++q) {
            rows[missing[q]].estimate = estimates[q];
            cache.store(detail::norm_key(phase, plan.policy, lambda, ps[q]), detail::estimate_to_json(estimates[q]));
          }
          computed += missing.size();
        } catch (const GridExhausted& e) {
          for (std::size_t j : missing) {
            rows[j].failed = rows[j].grid_failure = true;
            rows[j].error = e.what();
            rows[j].estimate.value = std::numeric_limits<double>::quiet_NaN();
            rows[j].estimate.tail_bound = std::numeric_limits<double>::quiet_NaN();
          }
        } catch (const std::exception& e) {
          for (std::size_t j : missing) {
            rows[j].failed = true;
            rows[j].error = e.what();
            rows[j].estimate.value = std::numeric_limits<double>::quiet_NaN();
            rows[j].estimate.tail_bound = std::numeric_limits<double>::quiet_NaN();
          }
        }
      }
      for (auto& row : rows) {
        if (!row.failed) fill_bounds(row, phase, result.cert_context);
        else row.theory = theory_exponents(phase.dim(), row.estimate.p, phase.smoothness());
      }
    }
  };

  unsigned workers = plan.workers != 0 ? plan.workers : std::max(1U, std::thread::hardware_concurrency());
  workers = std::min<unsigned>(workers, static_cast<unsigned>(plan.lambdas.size()));
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  result.computed = computed;
  result.cache_hits += hits;

  std::vector<std::size_t> order(plan.ps.size());
  for (std::size_t j = 0; j < order.size(); ++j) order[j] = j;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return plan.ps[a] < plan.ps[b]; });
  for (std::size_t j : order) {
    for (std::size_t i = 0; i < plan.lambdas.size(); ++i) result.rows.push_back(grid_rows[i][j]);
  }
  if (add_control) {
    for (std::size_t i = 0; i < plan.lambdas.size(); ++i) result.controls.push_back(grid_rows[i].back());
  }
  for (std::size_t i = 0; i < plan.lambdas.size(); ++i) {
    for (std::size_t j = 0; j < all_ps.size(); ++j) {
      const SweepRow& r = grid_rows[i][j];
      if (all_ps[j] == 2.0 && !r.failed) {
        result.parseval_max_error = std::max(result.parseval_max_error, std::abs(r.estimate.value - 1.0));
      }
    }
  }
  return result;
}

/// One report per requested p, fitted over the non-failed rows.
inline std::vector<GrowthReport> growth_reports(const SweepPlan& plan, const SweepResult& result) {
  std::vector<GrowthReport> out;
  std::vector<double> ps = plan.ps;
  std::sort(ps.begin(), ps.end());
  ps.erase(std::unique(ps.begin(), ps.end()), ps.end());
  for (double p : ps) {
    GrowthReport rep;
    rep.phase = plan.phase.name();
    rep.m = plan.phase.dim();
    rep.p = p;
    rep.theory = theory_exponents(rep.m, p, plan.phase.smoothness());
    std::vector<double> lam, norm, cert, upper;
    for (const SweepRow& r : result.rows) {
      if (r.estimate.p != p || r.failed) continue;
      lam.push_back(r.estimate.lambda);
      norm.push_back(r.estimate.value);
      cert.push_back(r.cert_lower);
      upper.push_back(r.upper_bound);
    }
    try {
      rep.fit = fit_power_law(lam, norm, plan.discard_prefix);
    } catch (const DomainError& e) {
      rep.fit_error = e.what();
    }
    try {
      rep.cert_exponent = fit_power_law(lam, cert, plan.discard_prefix).line.slope;
    } catch (const DomainError&) {
    }
    try {
      rep.upper_exponent = fit_power_law(lam, upper, plan.discard_prefix).line.slope;
    } catch (const DomainError&) {
    }
    const double a = plan.phase.smoothness().gradient_alpha();
    if (a > 0.0) {
      const Modulus model = Modulus::power_law(a);
      for (std::size_t i = 0; i < lam.size(); ++i) {
        if (p == 1.0 && !(lam[i] > std::numbers::e)) continue;
        if (p > 1.0 && !(lam[i] > 1.0)) continue;
        const double theta = std::pow(theta_scale(model, p, lam[i]), rep.m);
        const double ratio = norm[i] / theta;
        rep.theta_ratio_min = std::isnan(rep.theta_ratio_min) ? ratio : std::min(rep.theta_ratio_min, ratio);
        rep.theta_ratio_max = std::isnan(rep.theta_ratio_max) ? ratio : std::max(rep.theta_ratio_max, ratio);
      }
    }
    out.push_back(std::move(rep));
  }
  return out;
}

/// lambda = 2^first, ..., 2^last.
inline std::vector<double> dyadic_lambdas(int first, int last) {
  std::vector<double> v;
  for (int i = first; i <= last; ++i) v.push_back(std::ldexp(1.0, i));
  return v;
}

}  // namespace apnorm
