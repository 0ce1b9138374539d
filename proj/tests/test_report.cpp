#include <catch_amalgamated.hpp>

#include <sstream>

#include "apnorm/report.hpp"
#include "apnorm/run_config.hpp"

using namespace apnorm;

TEST_CASE("settings parse into a run config", "[cli]") {
  const RunConfig c = parse_settings({{"family", "weierstrass"}, {"alpha", "0.25"}, {"depth", "8"}, {"p", "1, 1.5"},
                                      {"lambda_min", "8"}, {"lambda_max", "256"}, {"grid.fixed_n", "4096"}});
  CHECK(c.phase().name() == "weierstrass(alpha=0.25;depth=8)");
  CHECK(c.ps == std::vector<double>{1.0, 1.5});
  CHECK(c.lambdas() == std::vector<double>{8, 16, 32, 64, 128, 256});
  CHECK(c.policy.fixed_n == 4096);
  CHECK(c.effective_discard() == 2);
}

TEST_CASE("automatic discard keeps four fitted rows", "[cli]") {
  CHECK(parse_settings({{"lambda", "8,16,32,64"}}).effective_discard() == 0);
  CHECK(parse_settings({{"lambda", "8,16,32,64,128"}}).effective_discard() == 1);
  CHECK(parse_settings({{"lambda", "8,16,32,64,128,256,512"}}).effective_discard() == 2);
  CHECK(parse_settings({{"lambda", "8,16"}, {"discard_prefix", "1"}}).effective_discard() == 1);
}

TEST_CASE("config errors", "[cli]") {
  CHECK_THROWS_AS(parse_settings({{"famly", "cosine"}}), ConfigError);
  CHECK_THROWS_AS(parse_settings({{"m", "two"}}), ConfigError);
  CHECK_THROWS_AS(parse_settings({{"p", "1,"}}), ConfigError);
  CHECK_THROWS_AS(parse_settings({{"p", "3"}}), ConfigError);
  CHECK_THROWS_AS(parse_settings({{"family", "cosine"}, {"m", "2"}}), ConfigError);
  CHECK_THROWS_AS(parse_settings({{"lambda", "16,8"}}), ConfigError);
  CHECK_THROWS_AS(parse_settings({{"format", "xml"}}), ConfigError);
  CHECK_THROWS_AS(parse_settings({{"grid.fixed_n", "100"}}), ConfigError);
  CHECK_THROWS_AS(parse_settings({{"certificates", "maybe"}}), ConfigError);
}

TEST_CASE("later settings win", "[cli]") {
  Settings s{{"family", "cosine"}, {"p", "1"}};
  merge_settings(s, {{"p", "1.5"}});
  CHECK(parse_settings(s).ps == std::vector<double>{1.5});
}

TEST_CASE("config echo covers every key once", "[cli]") {
  const auto echo = RunConfig{}.echo();
  REQUIRE(echo.size() == config_keys().size());
  for (std::size_t i = 0; i < echo.size(); ++i) CHECK(echo[i].first == config_keys()[i]);
}

TEST_CASE("echoed config parses back to the same echo", "[cli][property]") {
  const RunConfig c = parse_settings({{"family", "linear"}, {"m", "2"}, {"k", "2,-1"}, {"p", "1.25"}, {"lambda", "1,3"}});
  Settings round;
  for (const auto& [k, v] : c.echo()) {
    if (!v.empty()) round[k] = v;
  }
  CHECK(parse_settings(round).echo() == c.echo());
}

TEST_CASE("sweep CSV rows use shortest round-trip floats", "[cli]") {
  SweepRow r;
  r.estimate.phase = "linear(k=2;1)";
  r.estimate.m = 2;
  r.estimate.p = 1.5;
  r.estimate.lambda = 8;
  r.estimate.grid_n = 64;
  r.estimate.value = 0.1;
  r.estimate.tail_bound = 1e-300;
  r.theory.upper = {0.5, true};
  CHECK(report::csv_row(r) == "linear(k=2;1),2,1.5,8,64,0.1,1e-300,nan,nan,nan,0.5");
  CHECK(report::detail::csv_field("a,b") == "\"a,b\"");
  CHECK(report::detail::csv_field("say \"hi\"") == "\"say \"\"hi\"\"\"");
}

TEST_CASE("plot file stems are filesystem friendly", "[cli]") {
  CHECK(report::file_stem("weierstrass(alpha=0.5;depth=12)", 1.5) == "weierstrass_alpha_0.5_depth_12_p1.5");
  CHECK(report::file_stem("cosine", 1) == "cosine_p1");
}

TEST_CASE("phase listing names every family", "[cli]") {
  std::ostringstream text, json;
  report::write_phases_text(text);
  report::write_phases_json(json);
  const auto doc = nlohmann::json::parse(json.str());
  CHECK(doc["families"].size() == phase_catalog().size());
  for (const auto& f : phase_catalog()) CHECK(text.str().find(f.name) != std::string::npos);
}
