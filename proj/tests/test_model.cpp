#include <catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <random>

#include "bnls/model.hpp"

using namespace bnls;
using Catch::Approx;

TEST_CASE("derive_params hand-checked values") {
  const auto p = derive_params(2, 0.0, 8.0);
  REQUIRE(p.sigma_c.has_value());
  CHECK(std::abs(*p.sigma_c - 3.0) < 1e-12);
  CHECK(std::abs(p.gamma_c - 0.5) < 1e-12);
  CHECK(p.alpha_star.is_infinite());

  CHECK(derive_params(5, 0.0, 1.3).alpha_star.value() == 8.0);
  CHECK(derive_params(6, 0.0, 1.0).alpha_star.value() == 4.0);

  const auto mc = derive_params(2, 0.0, 4.0);
  CHECK(mc.gamma_c == 0.0);
  CHECK_FALSE(mc.sigma_c.has_value());
  CHECK(classify_regime(mc).tag == RegimeTag::MassCritical);
}

TEST_CASE("derive_params rejects bad input") {
  CHECK_THROWS_AS(derive_params(2, -0.1, 8.0), InvalidParameter);
  CHECK_THROWS_AS(derive_params(2, 0.0, 0.0), InvalidParameter);
  CHECK_THROWS_AS(derive_params(2, 0.0, -1.0), InvalidParameter);
  CHECK_THROWS_AS(derive_params(0, 0.0, 1.0), InvalidParameter);
}

TEST_CASE("classify_regime") {
  const auto r = classify_regime(derive_params(2, 0.0, 8.0));
  CHECK(r.tag == RegimeTag::Intercritical);
  CHECK(r.alpha_le_8);
  CHECK_FALSE(classify_regime(derive_params(2, 0.0, 9.0)).alpha_le_8);
  CHECK(classify_regime(derive_params(6, 0.0, 4.0)).tag == RegimeTag::EnergyCritical);
  CHECK(classify_regime(derive_params(3, 0.0, 1.0)).tag == RegimeTag::OutOfTheory);
  CHECK(classify_regime(derive_params(5, 0.0, 9.0)).tag == RegimeTag::OutOfTheory);
}

TEST_CASE("biharmonic admissibility") {
  const double inf = std::numeric_limits<double>::infinity();
  CHECK(is_biharmonic_admissible(5.0, 10.0, 2));
  CHECK(is_biharmonic_admissible(inf, 2.0, 3));
  CHECK_FALSE(is_biharmonic_admissible(2.0, 2.0, 3));
  // endpoint r = 2N/(N-4) at N = 5 gives q = 2
  CHECK(is_biharmonic_admissible(2.0, 10.0, 5));
  CHECK_FALSE(is_biharmonic_admissible(4.0, 1.5, 1));
}

TEST_CASE("scattering exponents") {
  const auto e = scattering_exponents(derive_params(2, 0.0, 8.0));
  CHECK(std::abs(e.q_bar - 5.0) < 1e-12);
  CHECK(std::abs(e.r_bar - 10.0) < 1e-12);
  CHECK(std::abs(e.k_bar - 40.0 / 3.0) < 1e-12);
  CHECK(std::abs(e.m_bar - 40.0 / 13.0) < 1e-12);
  CHECK(std::abs(e.l_bar - 20.0 / 7.0) < 1e-12);
  CHECK_FALSE(e.a_bar.has_value());

  CHECK(std::abs(scattering_exponents(derive_params(5, 0.0, 2.0)).k_bar - 16.0 / 3.0) < 1e-12);
  CHECK_THROWS_AS(scattering_exponents(derive_params(2, 0.0, 4.0)), InvalidParameter);
  CHECK_THROWS_AS(scattering_exponents(derive_params(3, 0.0, 1.0)), InvalidParameter);
}

TEST_CASE("property: exponent invariants across random intercritical parameters") {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> dim(1, 9);
  std::uniform_real_distribution<double> frac(0.01, 0.99);
  int checked = 0;
  while (checked < 200) {
    const int N = dim(rng);
    const double lo = 8.0 / N;
    const double hi = N >= 5 ? 8.0 / (N - 4) : lo + 20.0;
    const double alpha = lo + frac(rng) * (hi - lo);
    const auto p = derive_params(N, 0.0, alpha);
    REQUIRE(classify_regime(p).tag == RegimeTag::Intercritical);
    CHECK(p.gamma_c > 0.0);
    CHECK(p.gamma_c < 2.0);
    CHECK(*p.sigma_c > 0.0);
    const auto e = scattering_exponents(p);
    CHECK(is_biharmonic_admissible(e.q_bar, e.r_bar, N));
    CHECK(std::abs(1.0 / e.k_bar + 1.0 / e.m_bar - 2.0 / e.q_bar) < 1e-12);
    CHECK(std::abs(e.r_bar - (alpha + 2.0)) < 1e-12);
    ++checked;
  }
}

TEST_CASE("property: gamma_c vanishes on the mass-critical line") {
  for (int N = 1; N <= 10; ++N) {
    const auto p = derive_params(N, 0.0, 8.0 / N);
    CHECK(std::abs(p.gamma_c) < 1e-14);
    CHECK(classify_regime(p).tag == RegimeTag::MassCritical);
  }
}
