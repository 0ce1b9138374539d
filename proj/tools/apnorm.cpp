// apnorm: command-line driver for sweeps, certificates, exports and the
// acceptance suite.
//
// Exit codes: 0 success, 1 acceptance failure or internal error,
// 2 configuration or usage error, 3 unresolvable grid, 4 certificate refused or unsound.

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "apnorm/apnorm.hpp"

namespace {

using namespace apnorm;

enum Exit { ok = 0, failure = 1, config_error = 2, grid_error = 3, certificate_error = 4 };

/// Flags collected as raw settings so that they merge after the config file.
struct ConfigFlags {
  std::string config_path;
  Settings flags;
  std::vector<std::string> assignments;

  void attach(CLI::App& cmd) {
    cmd.add_option("-c,--config", config_path, "flat key=value config file");
    const auto key = [&](const std::string& name, const std::string& setting, const std::string& help) {
      cmd.add_option_function<std::string>(name, [this, setting](const std::string& v) { flags[setting] = v; }, help);
    };
    key("--family", "family", "phase family (see `apnorm phases`)");
    key("--m", "m", "torus dimension");
    key("--alpha", "alpha", "weierstrass Hoelder exponent");
    key("--depth", "depth", "weierstrass harmonic count");
    key("--k", "k", "linear phase direction, comma separated");
    key("--base", "base", "tensor_sum factor family");
    key("--value", "value", "constant phase value");
    key("--p", "p", "exponent list, comma separated");
    key("--lambda", "lambda", "explicit lambda list, comma separated");
    key("--lambda-min", "lambda_min", "first dyadic lambda");
    key("--lambda-max", "lambda_max", "last dyadic lambda");
    key("--fixed-n", "grid.fixed_n", "use this grid size and skip refinement");
    key("--discard-prefix", "discard_prefix", "leading rows dropped from fits, or auto");
    key("--samples", "samples", "concentration samples per certificate");
    key("--seed", "seed", "random seed");
    key("--workers", "workers", "worker threads (0: hardware concurrency)");
    key("--cache-dir", "cache_dir", "row cache directory");
    key("--format", "format", "csv or json");
    key("-o,--output", "output", "output file (default stdout)");
    key("--plot-dir", "plot_dir", "directory for log-log plot data");
    cmd.add_option("--set", assignments, "any config key as key=value");
  }

  /// file < environment < flags
  RunConfig resolve() const {
    Settings merged;
    if (!config_path.empty()) merge_settings(merged, read_config_file(config_path));
    if (const char* env = std::getenv(cache_env_var); env && *env) merged["cache_dir"] = env;
    merge_settings(merged, flags);
    for (const std::string& a : assignments) {
      const auto eq = a.find('=');
      if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + a + "'");
      merged[a.substr(0, eq)] = a.substr(eq + 1);
    }
    return parse_settings(merged);
  }
};

/// Writes to the configured output file, or stdout when none is set.
class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty()) {
      file_ = std::make_unique<std::ofstream>(path, std::ios::trunc);
      if (!*file_) throw ConfigError("cannot open output file " + path);
    }
  }
  std::ostream& stream() { return file_ ? *file_ : std::cout; }

 private:
  std::unique_ptr<std::ofstream> file_;
};

int cmd_sweep(const RunConfig& cfg) {
  const SweepPlan plan = cfg.plan();
  const SweepResult res = sweep(plan);
  const auto reports = growth_reports(plan, res);
  Output out(cfg.output);
  if (cfg.format == "json") {
    report::write_sweep_json(out.stream(), cfg, res, reports);
  } else {
    report::write_sweep_csv(out.stream(), cfg, res, reports);
  }
  if (!cfg.plot_dir.empty()) report::write_plot_data(cfg.plot_dir, cfg, res);
  std::cerr << "sweep: " << res.rows.size() << " rows, " << res.computed << " computed, " << res.cache_hits
            << " from cache\n";
  bool grid_failed = false;
  for (const SweepRow& r : res.rows) {
    if (r.failed) std::cerr << "row failed: lambda=" << format_double(r.estimate.lambda) << ": " << r.error << '\n';
    grid_failed = grid_failed || r.grid_failure;
  }
  return grid_failed ? grid_error : ok;
}

int cmd_certify(const RunConfig& cfg) {
  const Phase phase = cfg.phase();
  SweepPlan plan = cfg.plan();
  CertContext ctx;
  {
    RowCache cache(cfg.cache_dir);
    ctx = cached_context(phase, plan.cert, cache);
  }
  Output out(cfg.output);
  std::vector<Certificate> certs;
  std::string refusal;
  try {
    for (double p : cfg.ps) {
      for (double lambda : cfg.lambdas()) certs.push_back(certify(phase, lambda, p, ctx, cfg.policy, plan.cert));
    }
  } catch (const HypothesisFailure& e) {
    refusal = e.what();
  }
  const bool all_sound = std::all_of(certs.begin(), certs.end(), [](const Certificate& c) { return c.sound; });
  if (cfg.format == "json") {
    report::ordered_json list = report::ordered_json::array();
    for (const Certificate& c : certs) list.push_back(report::certificate_json(c));
    report::ordered_json doc{{"metadata", report::metadata_json(cfg, "certify")}, {"certificates", list}};
    if (!refusal.empty()) doc["refusal"] = refusal;
    out.stream() << doc.dump(2) << '\n';
  } else {
    report::write_metadata(out.stream(), cfg, "certify");
    out.stream() << report::certificate_header << '\n';
    for (const Certificate& c : certs) out.stream() << report::csv_row(c) << '\n';
    if (!refusal.empty()) out.stream() << "# refused: " << refusal << '\n';
  }
  if (!refusal.empty()) {
    std::cerr << "certificate refused: " << refusal << '\n';
    return certificate_error;
  }
  if (!all_sound) {
    std::cerr << "certificate unsound: bound exceeds the computed norm\n";
    return certificate_error;
  }
  return ok;
}

int cmd_export(const RunConfig& cfg, const std::string& what, double min_abs) {
  const Phase phase = cfg.phase();
  const int m = phase.dim();
  Output out(cfg.output);
  std::ostream& os = out.stream();
  report::write_metadata(os, cfg, "export " + what);
  if (what == "spectrum") {
    const double lambda = cfg.lambdas().front();
    const Spectrum s = resolve_spectrum(phase, lambda, 2.0, cfg.policy);
    os << "# lambda=" << format_double(lambda) << " n=" << s.grid().n() << " min_abs=" << format_double(min_abs) << '\n';
    std::vector<std::pair<std::vector<std::int64_t>, Complex>> kept;
    std::vector<std::int64_t> k(static_cast<std::size_t>(m));
    const auto coeffs = s.coefficients();
    for (std::size_t i = 0; i < coeffs.size(); ++i) {
      if (std::abs(coeffs[i]) < min_abs) continue;
      s.frequency_of(i, k);
      kept.emplace_back(k, coeffs[i]);
    }
    std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    for (int a = 0; a < m; ++a) os << 'k' << a << ',';
    os << "re,im,abs\n";
    for (const auto& [freq, c] : kept) {
      for (std::int64_t kj : freq) os << kj << ',';
      os << format_double(c.real()) << ',' << format_double(c.imag()) << ',' << format_double(std::abs(c)) << '\n';
    }
  } else if (what == "cells") {
    const std::size_t res = m == 1 ? 4096 : m == 2 ? 1024 : 128;
    const GradientRange r = gradient_range(phase, res, true);
    os << "# measure=" << format_double(r.measure) << " cell_size=" << format_double(r.cell_size)
       << " cells=" << r.cell_count << '\n';
    for (int a = 0; a < m; ++a) os << (a ? "," : "") << 'x' << a;
    os << '\n';
    for (const auto& cell : r.cells) {
      for (int a = 0; a < m; ++a) {
        const auto ua = static_cast<std::size_t>(a);
        os << (a ? "," : "") << format_double(r.origin[ua] + static_cast<double>(cell[ua]) * r.cell_size);
      }
      os << '\n';
    }
  } else if (what == "modulus") {
    ModulusFitOptions fit;
    fit.seed = cfg.seed;
    const ModulusTable t = modulus_fit(phase, default_modulus_scales(m), fit);
    os << "# fitted_alpha=" << (t.fitted_alpha ? format_double(*t.fitted_alpha) : std::string("nan")) << '\n';
    os << "delta,omega\n";
    for (std::size_t i = 0; i < t.deltas.size(); ++i) {
      os << format_double(t.deltas[i]) << ',' << format_double(t.omegas[i]) << '\n';
    }
  } else {
    throw ConfigError("export target must be spectrum, cells or modulus");
  }
  return ok;
}

int cmd_verify(double tolerance_scale, const std::vector<int>& ids, bool verbose, std::string cache_dir) {
  acceptance::Options options;
  options.tolerance_scale = tolerance_scale;
  if (cache_dir.empty()) {
    if (const char* env = std::getenv(cache_env_var); env) cache_dir = env;
  }
  options.cache_dir = cache_dir;
  std::vector<int> run = ids;
  if (run.empty()) {
    for (const auto& c : acceptance::criteria()) run.push_back(c.id);
  }
  std::vector<int> failed;
  std::vector<int> marginal;
  for (int id : run) {
    const acceptance::Result r = acceptance::run(id, options);
    std::cout << acceptance::describe(r, verbose) << std::flush;
    if (!r.pass) failed.push_back(id);
    if (r.pass && r.worst_margin() > 0.5) marginal.push_back(id);
  }
  const auto list = [](const std::vector<int>& v) {
    std::string s;
    for (int id : v) s += ' ' + std::to_string(id);
    return s;
  };
  std::cout << (run.size() - failed.size()) << " of " << run.size() << " criteria passed\n";
  if (!marginal.empty()) std::cout << "marginal (margin > 0.5):" << list(marginal) << '\n';
  if (!failed.empty()) std::cout << "failed:" << list(failed) << '\n';
  return failed.empty() ? ok : failure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"A_p norms of exponential phase functions on the torus"};
  app.set_version_flag("--version", std::string(apnorm::version));
  app.require_subcommand(1);

  bool phases_json = false;
  auto* phases = app.add_subcommand("phases", "list built-in phase families");
  phases->add_flag("--json", phases_json, "machine-readable listing");

  ConfigFlags sweep_flags, certify_flags, export_flags;
  auto* sweep_cmd = app.add_subcommand("sweep", "norm table over a lambda plan with fits and bounds");
  sweep_flags.attach(*sweep_cmd);
  auto* certify_cmd = app.add_subcommand("certify", "lower-bound certificates for each (p, lambda)");
  certify_flags.attach(*certify_cmd);

  std::string export_target;
  double min_abs = 1e-14;
  auto* export_cmd = app.add_subcommand("export", "dump a spectrum, gradient-range cells or a modulus table");
  export_cmd->add_option("target", export_target, "spectrum | cells | modulus")->required();
  export_cmd->add_option("--min-abs", min_abs, "smallest coefficient magnitude written");
  export_flags.attach(*export_cmd);

  double tolerance_scale = 1.0;
  std::vector<int> criteria;
  bool verbose = false;
  std::string verify_cache;
  auto* verify = app.add_subcommand("verify", "run the acceptance criteria");
  verify->add_option("--tolerance-scale", tolerance_scale, "multiply every tolerance (below 1 tightens)")
      ->check(CLI::PositiveNumber);
  verify->add_option("--criteria", criteria, "run only these criterion numbers")->delimiter(',');
  verify->add_flag("-v,--verbose", verbose, "print every check");
  verify->add_option("--cache-dir", verify_cache, "row cache for the sweep-based criteria");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : config_error;
  }

  try {
    if (phases->parsed()) {
      phases_json ? report::write_phases_json(std::cout) : report::write_phases_text(std::cout);
      return ok;
    }
    if (verify->parsed()) return cmd_verify(tolerance_scale, criteria, verbose, verify_cache);
    if (sweep_cmd->parsed()) return cmd_sweep(sweep_flags.resolve());
    if (certify_cmd->parsed()) return cmd_certify(certify_flags.resolve());
    if (export_cmd->parsed()) return cmd_export(export_flags.resolve(), export_target, min_abs);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return config_error;
  } catch (const GridExhausted& e) {
    std::cerr << "grid error: " << e.what() << '\n';
    return grid_error;
  } catch (const HypothesisFailure& e) {
    std::cerr << "hypothesis failed: " << e.what() << '\n';
    return certificate_error;
  } catch (const DomainError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return config_error;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return failure;
  }
  return failure;
}
