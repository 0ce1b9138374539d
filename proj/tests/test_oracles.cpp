#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "apnorm/oracles.hpp"
#include "apnorm/phases.hpp"
#include "apnorm/torus_spectra.hpp"

using namespace apnorm;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("direct coefficient of simple fields", "[oracles]") {
  const GridSpec g(1, 16);
  const Field one = sample_phase(constant_phase(0.0), 1.0, g);
  const std::int64_t k0[] = {0}, k2[] = {2}, k3[] = {3};
  CHECK(std::abs(oracles::direct_coefficient(one, k0) - Complex(1.0, 0.0)) < 1e-15);
  const Field h = sample_phase(linear_phase({2}), 1.0, g);
  CHECK(std::abs(oracles::direct_coefficient(h, k2) - Complex(1.0, 0.0)) < 1e-14);
  CHECK(std::abs(oracles::direct_coefficient(h, k3)) < 1e-14);
}

TEST_CASE("direct coefficient matches the fast path at random frequencies", "[oracles]") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> normal;
  const GridSpec g(2, 32);
  std::vector<Complex> v(g.size());
  for (auto& c : v) c = Complex(normal(rng), normal(rng));
  const Field f(g, v);
  const Spectrum s = analyze(f);
  std::uniform_int_distribution<int> pick(-16, 15);
  for (int trial = 0; trial < 50; ++trial) {
    const std::int64_t k[] = {pick(rng), pick(rng)};
    CHECK(std::abs(oracles::direct_coefficient(f, k) - s.at(k)) < 1e-10);
  }
}

TEST_CASE("Bessel coefficients at zero argument", "[oracles]") {
  const auto j = oracles::bessel_coefficients(0.0, 50);
  CHECK(j[0] == 1.0);
  for (std::size_t k = 1; k < j.size(); ++k) CHECK(j[k] == 0.0);
}

TEST_CASE("Bessel normalization identity", "[oracles]") {
  for (double x : {0.3, 5.0, 17.5, 64.0, 250.0}) {
    const int kmax = static_cast<int>(x) + 60;
    const auto j = oracles::bessel_coefficients(x, kmax);
    CompensatedSum s;
    s.add(j[0]);
    for (std::size_t k = 2; k < j.size(); k += 2) s.add(2.0 * j[k]);
    CHECK_THAT(s.value(), WithinAbs(1.0, 1e-12));
    for (double jk : j) CHECK(std::abs(jk) <= 1.0);
  }
}

TEST_CASE("Bessel coefficients match frozen high-precision values", "[oracles]") {
  const auto j = oracles::bessel_coefficients(5.0, 60);
  CHECK_THAT(j[0], WithinAbs(-0.17759677131433830435, 1e-14));
  CHECK_THAT(j[1], WithinAbs(-0.32757913759146522204, 1e-14));
  CHECK_THAT(j[2], WithinAbs(0.046565116277752215532, 1e-14));
  CHECK_THAT(j[10], WithinAbs(0.0014678026473104741311, 1e-15));
  CHECK_THAT(j[20], WithinRel(2.7703300521289416874e-11, 1e-10));
  CHECK_THAT(j[40], WithinRel(8.7022416173888180768e-33, 1e-8));
}

TEST_CASE("recurrence and quadrature agree", "[oracles]") {
  for (double x : {1.0, 5.0, 20.0}) {
    const auto j = oracles::bessel_coefficients(x, static_cast<int>(x) + 60);
    for (int k : {0, 1, 3, 7, 15}) {
      CHECK_THAT(oracles::bessel_by_quadrature(x, k), WithinAbs(j[static_cast<std::size_t>(k)], 1e-13));
    }
  }
}

TEST_CASE("Bessel l^p sums by two independent routes", "[oracles]") {
  // l^1 from the recurrence against the same sum built from quadrature values
  CompensatedSum quad;
  for (int k = 40; k >= 1; --k) quad.add(2.0 * std::abs(oracles::bessel_by_quadrature(5.0, k)));
  quad.add(std::abs(oracles::bessel_by_quadrature(5.0, 0)));
  CHECK_THAT(oracles::bessel_lp_norm(5.0, 1.0), WithinRel(quad.value(), 1e-8));
  CHECK_THAT(oracles::bessel_lp_norm(5.0, 1.0), WithinRel(3.3808220107793052992, 1e-12));
  CHECK_THAT(oracles::bessel_lp_norm(10.0, 1.5), WithinRel(1.6174873447422427856, 1e-12));
}

TEST_CASE("negative arguments flip odd orders", "[oracles]") {
  const auto a = oracles::bessel_coefficients(7.0, 60);
  const auto b = oracles::bessel_coefficients(-7.0, 60);
  for (std::size_t k = 0; k < 20; ++k) CHECK(b[k] == ((k % 2) ? -a[k] : a[k]));
}

TEST_CASE("Bessel tail sums", "[oracles]") {
  CHECK_THAT(oracles::bessel_tail_power_sum(5.0, 1.0, 40.0), WithinRel(1.853716819e-32, 1e-6));
  CHECK_THAT(oracles::bessel_tail_power_sum(8.0, 1.0, 32.0), WithinRel(9.804443626e-17, 1e-6));
}

TEST_CASE("oracle preconditions", "[oracles]") {
  CHECK_THROWS_AS(oracles::bessel_coefficients(5.0, 30), DomainError);
  const Field big = sample_phase(cosine_sum_phase(2), 1.0, GridSpec(2, 128));
  CHECK_THROWS_AS(oracles::direct_analyze(big), DomainError);
}

TEST_CASE("oracle report fields", "[oracles]") {
  const auto r = oracles::compare("x", 2.0, 2.5);
  CHECK(r.abs_error == 0.5);
  CHECK(r.rel_error == 0.25);
}
