#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "apnorm/phase_analysis.hpp"
#include "apnorm/phases.hpp"
#include "apnorm/torus_spectra.hpp"

using namespace apnorm;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

std::vector<Phase> smooth_builtins() {
  return {constant_phase(0.3, 1), linear_phase({2, 1}), cosine_phase(), cosine_sum_phase(2),
          cosine_sum_phase(3), tensor_sum(cosine_phase(), 2)};
}

std::vector<Phase> all_builtins() {
  auto v = smooth_builtins();
  v.push_back(weierstrass_phase(0.5, 12));
  v.push_back(tensor_sum(weierstrass_phase(0.5, 12), 2));
  return v;
}

}  // namespace

TEST_CASE("linear phase values and gradient", "[phases]") {
  const Phase p = builtin("linear", 2, {.k = {2, 1}});
  const double t[] = {0.4, 1.3};
  CHECK_THAT(p(t), WithinAbs(2 * 0.4 + 1.3, 1e-15));
  CHECK(p.gradient(t) == std::vector<double>{2.0, 1.0});
  CHECK(p.gradient_bound() == 2.0);
}

TEST_CASE("cosine_sum gradient", "[phases]") {
  const Phase p = builtin("cosine_sum", 2);
  const double t[] = {0.4, 1.3};
  const auto g = p.gradient(t);
  CHECK(g[0] == -std::sin(0.4));
  CHECK(g[1] == -std::sin(1.3));
}

TEST_CASE("builtin errors", "[phases]") {
  CHECK_THROWS_AS(builtin("spiral", 1), DomainError);
  PhaseParams flat;
  flat.alpha = 0.0;
  CHECK_THROWS_AS(builtin("weierstrass", 1, flat), DomainError);
  flat.alpha = 1.5;
  CHECK_THROWS_AS(builtin("weierstrass", 1, flat), DomainError);
  CHECK_THROWS_AS(builtin("cosine", 2), DomainError);
  CHECK_THROWS_AS(builtin("linear", 2, {.k = {1}}), DomainError);
}

TEST_CASE("weierstrass is tagged C^{1,alpha}", "[phases]") {
  PhaseParams params;
  params.alpha = 0.25;
  params.depth = 8;
  const Phase w = builtin("weierstrass", 1, params);
  CHECK(w.smoothness().nu == 1);
  CHECK(w.smoothness().alpha == 0.25);
  CHECK_FALSE(w.smoothness().infinitely_smooth);
  CHECK(w.traits().spectral_degree == 256);
  CHECK(w.name() == "weierstrass(alpha=0.25;depth=8)");
}

TEST_CASE("built-ins are periodic on every axis", "[phases][property]") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, two_pi);
  for (const Phase& p : all_builtins()) {
    const auto m = static_cast<std::size_t>(p.dim());
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<double> t(m);
      for (auto& x : t) x = u(rng);
      for (std::size_t a = 0; a < m; ++a) {
        auto shifted = t;
        shifted[a] = 0.0;
        auto wrapped = t;
        wrapped[a] = two_pi;
        if (p.traits().linear_coefficients) {
          // (k, t) advances by 2 pi k_a across the axis, so e^{i lambda phi} is periodic for integer lambda
          const double jump = (p(wrapped) - p(shifted)) / two_pi;
          CHECK_THAT(jump, WithinAbs(std::round(jump), 1e-9));
        } else {
          CHECK_THAT(p(shifted), WithinAbs(p(wrapped), 1e-9));
        }
      }
    }
  }
}

TEST_CASE("analytic gradients match central differences to O(h^2)", "[phases][property]") {
  const double h = two_pi / 4096.0;
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, two_pi);
  for (const Phase& p : smooth_builtins()) {
    const auto m = static_cast<std::size_t>(p.dim());
    double worst = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
      std::vector<double> t(m);
      for (auto& x : t) x = u(rng);
      const auto g = p.gradient(t);
      for (std::size_t a = 0; a < m; ++a) {
        auto tp = t, tm = t;
        tp[a] += h;
        tm[a] -= h;
        worst = std::max(worst, std::abs((p(tp) - p(tm)) / (2 * h) - g[a]));
      }
    }
    // third derivatives of these phases are bounded by 1, so the error is <= h^2/6
    CHECK(worst <= h * h / 6.0 + 1e-12);
  }
}

TEST_CASE("tensor_sum spectrum is the outer product of 1-D spectra", "[phases][property]") {
  const Phase base = cosine_phase();
  const Phase sum = tensor_sum(base, 2);
  const double lambda = 7.0;
  const Spectrum s1 = analyze(sample_phase(base, lambda, GridSpec(1, 64)));
  const Spectrum s2 = analyze(sample_phase(sum, lambda, GridSpec(2, 64)));
  double worst = 0.0;
  for (std::int64_t a = -32; a < 32; ++a) {
    for (std::int64_t b = -32; b < 32; ++b) {
      const std::int64_t ka[] = {a}, kb[] = {b}, kab[] = {a, b};
      worst = std::max(worst, std::abs(s2.at(kab) - s1.at(ka) * s1.at(kb)));
    }
  }
  CHECK(worst < 1e-10);
}

TEST_CASE("weierstrass Hoelder constant bounds sampled increments", "[phases][property]") {
  const Phase w = weierstrass_phase(0.5, 12);
  const double c = w.traits().gradient_holder_constant;
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, two_pi);
  for (int i = 0; i < 20000; ++i) {
    const double t1 = u(rng);
    const double d = std::ldexp(1.0, -static_cast<int>(i % 16));
    const double t2 = t1 + d;
    const double a[] = {t1}, b[] = {t2};
    CHECK(std::abs(w.gradient(a)[0] - w.gradient(b)[0]) <= c * std::pow(d, 0.5) * (1 + 1e-12));
  }
}

TEST_CASE("phase catalog lists every family", "[phases]") {
  std::vector<std::string> names;
  for (const auto& f : phase_catalog()) names.push_back(f.name);
  for (const char* want : {"constant", "linear", "cosine", "cosine_sum", "weierstrass", "tensor_sum"}) {
    CHECK(std::find(names.begin(), names.end(), want) != names.end());
  }
}

TEST_CASE("modulus of the cosine gradient", "[phase_analysis]") {
  const std::vector<double> scales{0.4, 0.2, 0.1};
  const ModulusTable t = modulus_fit(cosine_phase(), scales, {.random_pairs = 200000});
  REQUIRE(t.deltas.back() == 0.4);
  // sup |sin a - sin b| over |a - b| <= delta is 2 sin(delta/2)
  CHECK_THAT(t.omegas[0], WithinRel(2.0 * std::sin(0.05), 0.02));
  CHECK(t.omegas[0] <= 2.0 * std::sin(0.05) + 1e-15);
  CHECK(std::is_sorted(t.omegas.begin(), t.omegas.end()));
}

TEST_CASE("modulus of a linear gradient vanishes", "[phase_analysis]") {
  const std::vector<double> scales{0.5, 0.25, 0.125};
  const ModulusTable t = modulus_fit(linear_phase({1, 3}), scales, {.random_pairs = 10000});
  for (double w : t.omegas) CHECK(w == 0.0);
  CHECK_FALSE(t.fitted_alpha.has_value());
}

TEST_CASE("weierstrass modulus exponent", "[phase_analysis]") {
  const auto scales = dyadic_scales(2, 10);
  const ModulusTable t = modulus_fit(weierstrass_phase(0.5, 12), scales, {.random_pairs = 200000});
  REQUIRE(t.fitted_alpha.has_value());
  CHECK(*t.fitted_alpha >= 0.4);
  CHECK(*t.fitted_alpha <= 0.6);
}

TEST_CASE("modulus_fit preconditions", "[phase_analysis]") {
  const std::vector<double> increasing{0.1, 0.2};
  CHECK_THROWS_AS(modulus_fit(cosine_phase(), increasing), DomainError);
  const std::vector<double> fine{0.1, 0.001};
  CHECK_THROWS_AS(modulus_fit(cosine_phase(), fine, {.resolution = 1024}), DomainError);
  CHECK_THROWS_AS(modulus_fit(cosine_sum_phase(2), fine), DomainError);
}

TEST_CASE("modulus constant takes the worst ratio with safety", "[phase_analysis]") {
  ModulusTable t;
  t.deltas = {0.1, 0.2};
  t.omegas = {0.05, 0.3};
  CHECK_THAT(modulus_constant(t, Modulus::power_law(1.0)), WithinRel(1.1 * 1.5, 1e-15));
}

TEST_CASE("gradient range of cosine_sum fills the square", "[phase_analysis]") {
  const GradientRange r = gradient_range(cosine_sum_phase(2), 1024);
  CHECK_THAT(r.measure, WithinRel(4.0, 0.03));
  CHECK(r.measure >= 4.0);
}

TEST_CASE("gradient range of cosine is the interval [-1,1]", "[phase_analysis]") {
  const GradientRange r = gradient_range(cosine_phase(), 4096);
  CHECK_THAT(r.measure, WithinRel(2.0, 0.01));
}

TEST_CASE("gradient range of a linear phase is null", "[phase_analysis]") {
  const GradientRange r = gradient_range(linear_phase({2, -1}), 128, true);
  CHECK(r.measure == 0.0);
  CHECK(r.cells.empty());
}

TEST_CASE("gradient range of cosine_sum in m dimensions is 2^m", "[phase_analysis][property]") {
  CHECK_THAT(gradient_range(cosine_sum_phase(1), 4096).measure, WithinRel(2.0, 0.03));
  CHECK_THAT(gradient_range(cosine_sum_phase(3), 128).measure, WithinRel(8.0, 0.2));
}

TEST_CASE("gradient range of tensor weierstrass is stable under refinement", "[phase_analysis]") {
  const Phase p = tensor_sum(weierstrass_phase(0.5, 12), 2);
  const double coarse = gradient_range(p, 512).measure;
  const double fine = gradient_range(p, 1024).measure;
  CHECK(coarse > 0.0);
  CHECK(fine > 0.0);
  CHECK_THAT(fine, WithinRel(coarse, 0.10));
}

TEST_CASE("gradient range outer estimate shrinks as resolution grows", "[phase_analysis][property]") {
  const Phase p = cosine_sum_phase(2);
  double previous = gradient_range(p, 128).measure;
  for (std::size_t res : {256, 512, 1024}) {
    const double cur = gradient_range(p, res).measure;
    CHECK(cur <= previous * (1 + 1e-3));
    previous = cur;
  }
}
