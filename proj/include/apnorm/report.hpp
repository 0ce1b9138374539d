#pragma once

// Output schemas: sweep tables, certificate records, phase listings and
// plot-data files. Every writer is deterministic for a given input.

#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <string>
#include <vector>

#include "apnorm/growth.hpp"
#include "apnorm/lower_cert.hpp"
#include "apnorm/phases.hpp"
#include "apnorm/run_config.hpp"
#include "apnorm/version.hpp"
#include "json.hpp"

namespace apnorm::report {

using ordered_json = nlohmann::ordered_json;

inline constexpr const char* sweep_header =
    "phase,m,p,lambda,grid_n,norm,tail_bound,cert_lower,upper_bound,theory_lower_exp,theory_upper_exp";

inline constexpr const char* certificate_header =
    "phase,m,p,lambda,delta,c_fit,model_alpha,measure,bound,exponent,norm,pass_rate,tested_u,sound";

namespace detail {

/// NaN and infinities become null; JSON has no spelling for them.
inline ordered_json number(double x) { return std::isfinite(x) ? ordered_json(x) : ordered_json(nullptr); }

inline double claim(const ExponentClaim& c) { return c.valid ? c.exponent : std::nan(""); }

/// Quotes a CSV field only when it contains a comma or a quote.
inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + '"';
}

}  // namespace detail

/// '#' lines: version, config echo, grid policy.
inline void write_metadata(std::ostream& out, const RunConfig& cfg, const std::string& command) {
  out << "# apnorm " << version << '\n';
  out << "# command: " << command << '\n';
  for (const auto& [k, v] : cfg.echo()) out << "# config: " << k << '=' << v << '\n';
  out << "# grid_policy: " << cfg.policy.describe() << '\n';
}

inline ordered_json metadata_json(const RunConfig& cfg, const std::string& command) {
  ordered_json config = ordered_json::object();
  for (const auto& [k, v] : cfg.echo()) config[k] = v;
  return {{"version", version}, {"command", command}, {"config", config}, {"grid_policy", cfg.policy.describe()}};
}

inline std::string csv_row(const SweepRow& r) {
  const NormEstimate& e = r.estimate;
  std::string s = detail::csv_field(e.phase);
  for (const std::string& f :
       {std::to_string(e.m), format_double(e.p), format_double(e.lambda), std::to_string(e.grid_n),
        format_double(e.value), format_double(e.tail_bound), format_double(r.cert_lower), format_double(r.upper_bound),
        format_double(detail::claim(r.theory.lower)), format_double(detail::claim(r.theory.upper))}) {
    s += ',';
    s += f;
  }
  return s;
}

inline ordered_json row_json(const SweepRow& r) {
  const NormEstimate& e = r.estimate;
  ordered_json j{{"phase", e.phase},
                 {"m", e.m},
                 {"p", e.p},
                 {"lambda", e.lambda},
                 {"grid_n", e.grid_n},
                 {"norm", detail::number(e.value)},
                 {"tail_bound", detail::number(e.tail_bound)},
                 {"cert_lower", detail::number(r.cert_lower)},
                 {"upper_bound", detail::number(r.upper_bound)},
                 {"theory_lower_exp", detail::number(detail::claim(r.theory.lower))},
                 {"theory_upper_exp", detail::number(detail::claim(r.theory.upper))}};
  if (r.failed) j["error"] = r.error;
  return j;
}

inline ordered_json summary_json(const GrowthReport& g) {
  ordered_json j{{"phase", g.phase}, {"m", g.m}, {"p", g.p}};
  if (g.fit) {
    j["fitted_exponent"] = g.fit->line.slope;
    j["intercept"] = g.fit->line.intercept;
    j["residual_rms"] = g.fit->line.residual_rms;
    j["fit_points"] = g.fit->points;
  } else {
    j["fit_error"] = g.fit_error;
  }
  j["theory_lower_exp"] = detail::number(detail::claim(g.theory.lower));
  j["theory_upper_exp"] = detail::number(detail::claim(g.theory.upper));
  j["two_sided"] = g.theory.two_sided;
  j["cert_exponent"] = detail::number(g.cert_exponent);
  j["upper_exponent"] = detail::number(g.upper_exponent);
  j["theta_ratio_min"] = detail::number(g.theta_ratio_min);
  j["theta_ratio_max"] = detail::number(g.theta_ratio_max);
  return j;
}

inline void write_sweep_csv(std::ostream& out, const RunConfig& cfg, const SweepResult& res,
                            const std::vector<GrowthReport>& reports) {
  write_metadata(out, cfg, "sweep");
  out << sweep_header << '\n';
  for (const SweepRow& r : res.rows) out << csv_row(r) << '\n';
  for (const GrowthReport& g : reports) {
    out << "# summary:";
    const ordered_json fields = summary_json(g);
    for (const auto& [k, v] : fields.items()) {
      out << ' ' << k << '=';
      if (v.is_string()) {
        out << v.get<std::string>();
      } else if (v.is_null()) {
        out << "nan";
      } else if (v.is_number_float()) {
        out << format_double(v.get<double>());
      } else {
        out << v.dump();
      }
    }
    out << '\n';
  }
  if (!res.controls.empty()) {
    out << "# control: p=2 rows=" << res.controls.size()
        << " parseval_max_error=" << format_double(res.parseval_max_error) << '\n';
  }
  if (!res.cert_refusal.empty()) out << "# certificates: refused: " << res.cert_refusal << '\n';
  for (const SweepRow& r : res.rows) {
    if (r.failed) {
      out << "# failed: p=" << format_double(r.estimate.p) << " lambda=" << format_double(r.estimate.lambda) << ' '
          << r.error << '\n';
    }
  }
}

inline void write_sweep_json(std::ostream& out, const RunConfig& cfg, const SweepResult& res,
                             const std::vector<GrowthReport>& reports) {
  ordered_json rows = ordered_json::array(), summary = ordered_json::array();
  for (const SweepRow& r : res.rows) rows.push_back(row_json(r));
  for (const GrowthReport& g : reports) summary.push_back(summary_json(g));
  ordered_json doc{{"metadata", metadata_json(cfg, "sweep")}, {"rows", rows}, {"summary", summary}};
  if (!res.controls.empty()) {
    doc["control"] = {{"p", 2.0}, {"rows", res.controls.size()}, {"parseval_max_error", res.parseval_max_error}};
  }
  if (!res.cert_refusal.empty()) doc["certificate_refusal"] = res.cert_refusal;
  out << doc.dump(2) << '\n';
}

/// File-system friendly stem: runs of other characters collapse to '_'.
inline std::string file_stem(const std::string& phase, double p) {
  std::string s;
  for (char c : phase + "_p" + format_double(p)) {
    const bool keep = std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '-';
    if (keep) {
      s += c;
    } else if (s.empty() || s.back() != '_') {
      s += '_';
    }
  }
  while (!s.empty() && s.back() == '_') s.pop_back();
  return s;
}

/// One two-column file (log lambda, log norm) per (phase, p); failed rows are skipped.
inline std::vector<std::filesystem::path> write_plot_data(const std::string& dir, const RunConfig& cfg,
                                                          const SweepResult& res) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> written;
  for (double p : cfg.ps) {
    const auto path = std::filesystem::path(dir) / (file_stem(cfg.phase().name(), p) + ".dat");
    std::ofstream out(path, std::ios::trunc);
    write_metadata(out, cfg, "sweep");
    out << "# p=" << format_double(p) << "\n# log_lambda log_norm\n";
    for (const SweepRow& r : res.rows) {
      if (r.estimate.p != p || r.failed) continue;
      out << format_double(std::log(r.estimate.lambda)) << ' ' << format_double(std::log(r.estimate.value)) << '\n';
    }
    if (!out) throw std::runtime_error("cannot write " + path.string());
    written.push_back(path);
  }
  return written;
}

inline std::string csv_row(const Certificate& c) {
  std::string s = detail::csv_field(c.phase);
  for (const std::string& f :
       {std::to_string(c.m), format_double(c.p), format_double(c.lambda), format_double(c.delta), format_double(c.c_fit),
        format_double(c.model_alpha), format_double(c.measure), format_double(c.bound), format_double(c.exponent),
        format_double(c.norm), format_double(c.pass_rate), std::to_string(c.tested_u),
        std::string(c.sound ? "true" : "false")}) {
    s += ',';
    s += f;
  }
  return s;
}

inline ordered_json certificate_json(const Certificate& c) {
  return {{"phase", c.phase},
          {"m", c.m},
          {"p", c.p},
          {"lambda", c.lambda},
          {"delta", c.delta},
          {"c_fit", c.c_fit},
          {"model_alpha", c.model_alpha},
          {"measure", c.measure},
          {"bound", detail::number(c.bound)},
          {"exponent", c.exponent},
          {"norm", detail::number(c.norm)},
          {"pass_rate", detail::number(c.pass_rate)},
          {"tested_u", c.tested_u},
          {"sound", c.sound}};
}

inline void write_phases_text(std::ostream& out) {
  for (const FamilyInfo& f : phase_catalog()) {
    out << f.name << "  m=" << f.dimensions << "  " << f.formula << "  [" << f.smoothness << "]\n";
    for (const ParamInfo& p : f.params) {
      out << "    " << p.key << " (" << p.type << ", default " << p.default_value << "): " << p.description << '\n';
    }
  }
}

inline void write_phases_json(std::ostream& out) {
  ordered_json list = ordered_json::array();
  for (const FamilyInfo& f : phase_catalog()) {
    ordered_json params = ordered_json::array();
    for (const ParamInfo& p : f.params) {
      params.push_back({{"key", p.key}, {"type", p.type}, {"default", p.default_value}, {"description", p.description}});
    }
    list.push_back({{"name", f.name},
                    {"dimensions", f.dimensions},
                    {"formula", f.formula},
                    {"smoothness", f.smoothness},
                    {"params", params}});
  }
  out << ordered_json{{"version", version}, {"families", list}}.dump(2) << '\n';
}

}  // namespace apnorm::report
