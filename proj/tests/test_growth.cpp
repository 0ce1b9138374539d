#include <catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "apnorm/growth.hpp"

using namespace apnorm;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

std::string fresh_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("apnorm_test_" + name);
  std::filesystem::remove_all(dir);
  return dir.string();
}

bool same_rows(const std::vector<SweepRow>& a, const std::vector<SweepRow>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto &x = a[i].estimate, &y = b[i].estimate;
    if (x.value != y.value || x.grid_n != y.grid_n || x.lambda != y.lambda || x.p != y.p) return false;
    if (format_double(x.tail_bound) != format_double(y.tail_bound)) return false;
    if (format_double(a[i].cert_lower) != format_double(b[i].cert_lower)) return false;
    if (format_double(a[i].upper_bound) != format_double(b[i].upper_bound)) return false;
  }
  return true;
}

SweepPlan quick_plan() {
  SweepPlan plan;
  plan.phase = cosine_phase();
  plan.ps = {1.0};
  plan.lambdas = {8, 16, 32, 64};
  plan.cert.concentration_samples = 0;
  plan.cert.fit.random_pairs = 20000;
  plan.workers = 1;
  return plan;
}

}  // namespace

TEST_CASE("theory exponents", "[growth]") {
  SECTION("two-sided for C^{2,0} in m = 2") {
    const TheoryExponents t = theory_exponents(2, 1.0, {2, 0.0, false});
    CHECK(t.lower.exponent == 1.0);
    CHECK(t.upper.exponent == 1.0);
    CHECK(t.two_sided);
  }
  SECTION("C^{1,1/2} in m = 1") {
    const TheoryExponents t = theory_exponents(1, 1.0, {1, 0.5, false});
    CHECK_THAT(t.lower.exponent, WithinAbs(1.0 / 3.0, 1e-15));
    CHECK(t.upper.exponent == 0.5);
    CHECK(t.upper.valid);
    CHECK_FALSE(t.two_sided);
  }
  SECTION("m = 3, p = 1.5, alpha = 1") {
    const TheoryExponents t = theory_exponents(3, 1.5, {1, 1.0, false});
    CHECK_THAT(t.lower.exponent, WithinAbs(0.5, 1e-15));
  }
  SECTION("two-sided implies equal exponents") {
    for (int m = 1; m <= 4; ++m) {
      for (double p : {1.0, 1.2, 1.5, 1.9, 2.0}) {
        for (SmoothnessBudget b : {SmoothnessBudget{1, 1.0, true}, SmoothnessBudget{2, 0.3, false},
                                   SmoothnessBudget{1, 0.5, false}, SmoothnessBudget{3, 0.0, false}}) {
          const TheoryExponents t = theory_exponents(m, p, b);
          if (t.two_sided) CHECK_THAT(t.lower.exponent, WithinAbs(t.upper.exponent, 1e-15));
        }
      }
    }
  }
  SECTION("no gradient, no lower exponent") {
    CHECK_FALSE(theory_exponents(1, 1.0, {0, 0.9, false}).lower.valid);
  }
}

TEST_CASE("Theta_1 for the Lipschitz modulus is sqrt(y)", "[growth]") {
  const Modulus lin = Modulus::power_law(1.0);
  CHECK_THAT(theta_scale(lin, 1.0, 100.0), WithinRel(10.0, 1e-12));
  CHECK_THAT(theta_scale(lin, 1.0, 1e4), WithinRel(100.0, 1e-12));
  CHECK_THROWS_AS(theta_scale(lin, 1.0, 2.0), DomainError);
}

TEST_CASE("Theta_p quadrature matches the closed-form integral", "[growth][oracle]") {
  // omega = delta^a: int_1^y tau^{-p/(1+a)} dtau = (y^{1-q} - 1)/(1-q), q = p/(1+a)
  for (double a : {0.5, 1.0}) {
    for (double p : {1.2, 1.5, 1.8}) {
      const double q = p / (1.0 + a);
      for (double y : {2.0, 100.0, 1e4, 1e8}) {
        const double exact = q == 1.0 ? std::pow(std::log(y), 1.0 / p)
                                      : std::pow((std::pow(y, 1.0 - q) - 1.0) / (1.0 - q), 1.0 / p);
        CHECK_THAT(theta_scale(Modulus::power_law(a), p, y), WithinRel(exact, 1e-10));
      }
    }
  }
}

TEST_CASE("Theta_p slope approaches 1/p - 1/(1+a) for large y", "[growth]") {
  const Modulus w = Modulus::power_law(0.5);
  const double p = 1.2;
  const double y = 1e12;
  const double local = (std::log(theta_scale(w, p, 2 * y)) - std::log(theta_scale(w, p, y))) / std::log(2.0);
  CHECK_THAT(local, WithinRel(1.0 / p - 1.0 / 1.5, 0.02));
}

TEST_CASE("Theta_p is bounded above the critical exponent", "[growth]") {
  const Modulus w = Modulus::power_law(0.5);
  // int_1^inf tau^{-1.2} dtau = 5
  CHECK(theta_scale(w, 1.8, 1e12) < std::pow(5.0, 1.0 / 1.8));
  CHECK_THAT(theta_scale(w, 1.8, 1e30), WithinRel(std::pow(5.0, 1.0 / 1.8), 1e-4));
}

TEST_CASE("exact power laws fit exactly", "[growth]") {
  std::vector<double> lam, val;
  for (double l = 8; l <= 1024; l *= 2) {
    lam.push_back(l);
    val.push_back(3.0 * std::pow(l, 0.7));
  }
  const PowerFit f = fit_power_law(lam, val, 2);
  CHECK_THAT(f.line.slope, WithinAbs(0.7, 1e-12));
  CHECK_THAT(f.line.intercept, WithinAbs(std::log(3.0), 1e-11));
  CHECK_THAT(f.line.residual_rms, WithinAbs(0.0, 1e-12));
  CHECK(f.points == lam.size() - 2);
  const std::vector<double> few(lam.begin(), lam.begin() + 5), fewv(val.begin(), val.begin() + 5);
  CHECK_THROWS_AS(fit_power_law(few, fewv, 2), DomainError);
}

TEST_CASE("sweep plan validation", "[growth]") {
  SweepPlan plan = quick_plan();
  plan.lambdas = {8, 4};
  CHECK_THROWS_AS(sweep(plan), DomainError);
  plan.lambdas = {0.5};
  CHECK_THROWS_AS(sweep(plan), DomainError);
  plan.lambdas = {8};
  plan.ps = {2.5};
  CHECK_THROWS_AS(sweep(plan), DomainError);
}

TEST_CASE("single-row sweep", "[growth]") {
  SweepPlan plan = quick_plan();
  plan.lambdas = {1};
  plan.ps = {2.0};
  const SweepResult r = sweep(plan);
  REQUIRE(r.rows.size() == 1);
  CHECK(r.controls.empty());
  CHECK_THAT(r.rows[0].estimate.value, WithinAbs(1.0, 1e-12));
}

TEST_CASE("cosine norms increase along the dyadic sweep", "[growth]") {
  const SweepResult r = sweep(quick_plan());
  REQUIRE(r.rows.size() == 4);
  REQUIRE(r.controls.size() == 4);
  CHECK(r.parseval_max_error < 1e-9);
  for (std::size_t i = 1; i < r.rows.size(); ++i) CHECK(r.rows[i].estimate.value > r.rows[i - 1].estimate.value);
}

TEST_CASE("rows are ordered by (p, lambda) and workers do not change them", "[growth]") {
  SweepPlan plan = quick_plan();
  plan.ps = {1.5, 1.0};
  plan.workers = 1;
  const SweepResult serial = sweep(plan);
  plan.workers = 4;
  const SweepResult parallel = sweep(plan);
  CHECK(same_rows(serial.rows, parallel.rows));
  REQUIRE(serial.rows.size() == 8);
  for (std::size_t i = 0; i < 4; ++i) CHECK(serial.rows[i].estimate.p == 1.0);
  for (std::size_t i = 4; i < 8; ++i) CHECK(serial.rows[i].estimate.p == 1.5);
}

TEST_CASE("cached sweeps reuse every row", "[growth]") {
  SweepPlan plan = quick_plan();
  plan.cache_dir = fresh_dir("cache");
  const SweepResult first = sweep(plan);
  CHECK(first.computed == 8);
  const SweepResult second = sweep(plan);
  CHECK(second.computed == 0);
  CHECK(second.cache_hits == 9);  // 8 norm rows plus the certificate context
  CHECK(same_rows(first.rows, second.rows));
  CHECK(same_rows(first.controls, second.controls));

  SECTION("corrupt records are recomputed") {
    for (const auto& entry : std::filesystem::directory_iterator(plan.cache_dir)) {
      std::ofstream(entry.path(), std::ios::trunc) << "{not json";
    }
    const SweepResult third = sweep(plan);
    CHECK(third.computed == 8);
    CHECK(same_rows(first.rows, third.rows));
  }
  SECTION("a different grid never collides") {
    SweepPlan fixed = plan;
    fixed.policy.fixed_n = 4096;
    const SweepResult other = sweep(fixed);
    CHECK(other.computed == 8);
    CHECK(other.rows[0].estimate.grid_n == 4096);
  }
}

TEST_CASE("bound columns are exact power laws at the theory exponents", "[growth][property]") {
  SweepPlan plan = quick_plan();
  plan.ps = {1.0, 1.5};
  plan.lambdas = dyadic_lambdas(3, 8);
  const SweepResult r = sweep(plan);
  const auto reports = growth_reports(plan, r);
  REQUIRE(reports.size() == 2);
  for (const GrowthReport& rep : reports) {
    CHECK_THAT(rep.cert_exponent, WithinAbs(rep.theory.lower.exponent, 1e-6));
    CHECK_THAT(rep.upper_exponent, WithinAbs(rep.theory.upper.exponent, 1e-6));
    REQUIRE(rep.fit.has_value());
    CHECK(rep.fit->line.residual_rms >= 0.0);
  }
  for (const SweepRow& row : r.rows) {
    CHECK(row.cert_lower <= row.estimate.value);
    CHECK(row.estimate.value <= row.upper_bound);
  }
}

TEST_CASE("tensor sums double the fitted exponent", "[growth][property]") {
  SweepPlan one = quick_plan();
  one.with_certificates = false;
  one.lambdas = {8, 16, 32, 64, 128, 256};
  SweepPlan two = one;
  two.phase = tensor_sum(cosine_phase(), 2);
  const auto r1 = growth_reports(one, sweep(one));
  const auto r2 = growth_reports(two, sweep(two));
  REQUIRE(r1[0].fit);
  REQUIRE(r2[0].fit);
  CHECK_THAT(r2[0].fit->line.slope, WithinAbs(2.0 * r1[0].fit->line.slope,
                                              r1[0].fit->line.residual_rms + r2[0].fit->line.residual_rms + 1e-9));
}

TEST_CASE("linear phases have no certificate column", "[growth]") {
  SweepPlan plan = quick_plan();
  plan.phase = linear_phase({1});
  plan.lambdas = {1, 2, 3};
  const SweepResult r = sweep(plan);
  CHECK_FALSE(r.cert_context.has_value());
  CHECK_FALSE(r.cert_refusal.empty());
  for (const SweepRow& row : r.rows) {
    CHECK(std::isnan(row.cert_lower));
    CHECK_THAT(row.estimate.value, WithinAbs(1.0, 1e-12));
  }
}

TEST_CASE("failed rows are marked, not dropped", "[growth]") {
  SweepPlan plan = quick_plan();
  plan.phase = weierstrass_phase(0.5, 12);
  plan.lambdas = {8, 16};
  plan.policy.max_points = 4096;
  plan.with_certificates = false;
  const SweepResult r = sweep(plan);
  REQUIRE(r.rows.size() == 2);
  for (const SweepRow& row : r.rows) {
    CHECK(row.failed);
    CHECK(row.grid_failure);
    CHECK(std::isnan(row.estimate.value));
  }
}
