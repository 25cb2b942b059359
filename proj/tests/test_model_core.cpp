#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "spikefield/config.hpp"
#include "spikefield/quadrature.hpp"
#include "spikefield/rate.hpp"
#include "spikefield/rng.hpp"
#include "spikefield/stats.hpp"
#include "spikefield/weights.hpp"

using namespace spikefield;

namespace {

// Independent route for the total decay hazard: quadrature of the flow form
// int_0^inf b(x e^{-u}) du, truncated where the integrand is negligible.
double hazard_oracle(const RateFunction& b, double x) {
  return quad::adaptive_gl([&](double u) { return b(x * std::exp(-u)); }, 0.0, 70.0, 1e-13);
}

}  // namespace

TEST_CASE("rate evaluation matches the family formulas", "[model_core]") {
  CHECK(RateFunction::affine(1.0, 0.0)(0.5) == Catch::Approx(0.5));
  CHECK(RateFunction::power(2.0, 2.0, 0.0)(3.0) == Catch::Approx(18.0));
  CHECK(RateFunction::constant(1.5)(7.0) == Catch::Approx(1.5));
  CHECK(RateFunction::power(1.0, 0.5, 0.25)(4.0) == Catch::Approx(2.25));
  CHECK_THROWS_AS(RateFunction::affine(1.0)(-0.1), std::domain_error);
  CHECK_THROWS_AS(RateFunction::power(-1.0, 2.0), std::invalid_argument);
  CHECK_THROWS_AS(RateFunction::affine(-1.0), std::invalid_argument);
}

TEST_CASE("slope at zero classification", "[model_core]") {
  CHECK(RateFunction::constant(2.0).slope_at_zero().is_infinite());
  CHECK(RateFunction::constant(0.0).slope_at_zero().finite_value() == 0.0);
  CHECK(RateFunction::affine(1.0, 0.5).slope_at_zero().is_infinite());
  CHECK(RateFunction::affine(2.0, 0.0).slope_at_zero().finite_value() == Catch::Approx(2.0));
  CHECK(RateFunction::power(1.0, 2.0, 0.1).slope_at_zero().is_infinite());
  CHECK(RateFunction::power(1.0, 2.0, 0.0).slope_at_zero().finite_value() == 0.0);
  CHECK(RateFunction::power(3.0, 1.0, 0.0).slope_at_zero().finite_value() == Catch::Approx(3.0));
  CHECK(RateFunction::power(1.0, 0.5, 0.0).slope_at_zero().is_infinite());
}

TEST_CASE("total decay hazard: closed forms and finiteness", "[model_core]") {
  CHECK(RateFunction::affine(1.0).hazard_to_zero(2.0).finite_value() == Catch::Approx(2.0));
  CHECK(RateFunction::power(1.0, 2.0).hazard_to_zero(1.0).finite_value() == Catch::Approx(0.5));
  CHECK(RateFunction::affine(1.0, 0.1).hazard_to_zero(1.0).is_infinite());
  CHECK(RateFunction::constant(1.0).hazard_to_zero(3.0).is_infinite());
  CHECK(RateFunction::constant(0.0).hazard_to_zero(3.0).finite_value() == 0.0);
  CHECK(RateFunction::affine(1.0).hazard_to_zero(0.0).finite_value() == 0.0);
  CHECK(RateFunction::constant(1.0).hazard_to_zero(0.0).is_infinite());
}

TEST_CASE("finite hazards agree with flow-form quadrature", "[model_core]") {
  const std::vector<std::pair<RateFunction, double>> cases = {
      {RateFunction::affine(1.0), 2.0},
      {RateFunction::affine(0.7), 0.3},
      {RateFunction::power(1.0, 2.0), 1.0},
      {RateFunction::power(2.5, 1.3), 4.0},
      {RateFunction::power(0.8, 3.0), 2.2},
      {RateFunction::power(1.0, 0.7), 1.5},
  };
  for (const auto& [b, x] : cases) {
    const double closed = b.hazard_to_zero(x).finite_value();
    const double numeric = hazard_oracle(b, x);
    CHECK(std::abs(closed - numeric) <= 1e-8 * std::max(1.0, std::abs(closed)));
  }
}

TEST_CASE("rates are non-decreasing on a sample grid", "[model_core]") {
  const std::vector<RateFunction> rates = {
      RateFunction::constant(1.5),        RateFunction::affine(2.0, 0.3),
      RateFunction::power(1.0, 2.0),      RateFunction::power(0.5, 0.5, 0.1),
      RateFunction::power(2.0, 1.7, 0.0), RateFunction::affine(0.0, 0.4),
  };
  for (const auto& b : rates) {
    double prev = b(0.0);
    for (int k = 1; k <= 1000; ++k) {
      const double cur = b(0.01 * k);
      CHECK(cur >= prev);
      prev = cur;
    }
  }
}

TEST_CASE("weight distributions: mean, support, sampling", "[model_core]") {
  RngStream rng(1234);
  const auto cw = WeightDistribution::constant(0.3);
  CHECK(cw.sample(rng) == 0.3);
  CHECK(cw.mean() == 0.3);
  CHECK(cw.support_bound() == 0.3);

  const auto uw = WeightDistribution::uniform(0.0, 1.0);
  CHECK(uw.mean() == 0.5);
  CHECK(uw.support_bound() == 1.0);
  const std::size_t n = 1000000;
  double sum = 0, mx = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = uw.sample(rng);
    sum += w;
    mx = std::max(mx, w);
  }
  const double se = std::sqrt(1.0 / 12.0 / static_cast<double>(n));
  CHECK(std::abs(sum / n - 0.5) <= 3 * se);
  CHECK(mx <= 1.0);

  CHECK_THROWS_AS(WeightDistribution::uniform(0.5, 0.2), std::invalid_argument);
  CHECK_THROWS_AS(WeightDistribution::uniform(-0.1, 0.2), std::invalid_argument);
}

TEST_CASE("weight Laplace transform is stable and normalized", "[model_core]") {
  const auto uw = WeightDistribution::uniform(0.0, 1.0);
  CHECK(uw.laplace(0.0) == 1.0);
  // tiny xi: 1 - xi E(W) + xi^2 E(W^2)/2 + ...
  const double xi = 1e-9;
  CHECK(uw.laplace(xi) == Catch::Approx(1.0 - xi * 0.5).epsilon(1e-12));
  CHECK(uw.laplace(2.0) == Catch::Approx((1.0 - std::exp(-2.0)) / 2.0));
  const auto cw = WeightDistribution::constant(0.7);
  CHECK(cw.laplace(3.0) == Catch::Approx(std::exp(-2.1)));
}

TEST_CASE("rng streams are reproducible and splittable", "[model_core]") {
  RngStream a(42), b(42);
  for (int i = 0; i < 10000; ++i) {
    REQUIRE(a.uniform() == b.uniform());
  }
  RngStream c(42);
  auto c1 = c.split(7), c2 = c.split(7), c3 = c.split(8);
  bool identical = true, differs = false;
  for (int i = 0; i < 100; ++i) {
    const double u1 = c1.uniform(), u2 = c2.uniform(), u3 = c3.uniform();
    identical = identical && (u1 == u2);
    differs = differs || (u1 != u3);
  }
  CHECK(identical);
  CHECK(differs);
  // splitting does not consume parent state
  RngStream d(42);
  (void)d.split(3);
  RngStream e(42);
  CHECK(d.uniform() == e.uniform());
}

TEST_CASE("exponential draws have the right law", "[model_core]") {
  RngStream rng(99);
  std::vector<double> xs(20000);
  for (auto& x : xs) x = rng.exponential(2.0);
  const double d = stats::ks_statistic(xs, [](double x) { return -std::expm1(-2.0 * x); });
  CHECK(d < stats::ks_critical_one_sample(xs.size()));
}

TEST_CASE("initial conditions sample within contract", "[model_core]") {
  RngStream rng(5);
  const auto d = InitialCondition::dirac(1.5).sample(3, rng);
  CHECK(d == std::vector<double>{1.5, 1.5, 1.5});

  auto u = InitialCondition::uniform(0.2, 0.8).sample(10000, rng);
  for (double x : u) {
    CHECK(x >= 0.2);
    CHECK(x <= 0.8);
  }

  // uniform-around: requested standard deviation, clipped at zero
  auto ua = InitialCondition::uniform_around(2.0, 0.2).sample(200000, rng);
  CHECK(stats::mean(ua) == Catch::Approx(2.0).margin(0.005));
  CHECK(std::sqrt(stats::sample_variance(ua)) == Catch::Approx(0.2).margin(0.005));
  auto clipped = InitialCondition::uniform_around(0.05, 0.2).sample(1000, rng);
  for (double x : clipped) CHECK(x >= 0.0);

  CHECK_THROWS_AS(InitialCondition::explicit_values({1.0, 2.0}).sample(3, rng),
                  std::invalid_argument);
  CHECK_THROWS_AS(InitialCondition::uniform(-0.1, 1.0), std::invalid_argument);
}

TEST_CASE("config validation warns only for sub-linear growth", "[model_core]") {
  NetworkConfig ok{10, RateFunction::power(1.0, 2.0), WeightDistribution::constant(1.0),
                   Scaling::kMeanField, 1};
  CHECK(validate_config(ok).empty());
  NetworkConfig affine{10, RateFunction::affine(1.0, 0.5), WeightDistribution::constant(1.0),
                       Scaling::kRaw, 1};
  CHECK(validate_config(affine).empty());
  NetworkConfig sub{10, RateFunction::power(1.0, 0.5), WeightDistribution::constant(1.0),
                    Scaling::kMeanField, 1};
  CHECK(validate_config(sub).size() == 1);
  NetworkConfig bad;
  bad.n = 0;
  CHECK_THROWS_AS(validate_config(bad), std::invalid_argument);
}
