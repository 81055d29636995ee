#include <cmath>
#include <limits>
#include <random>

#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/polygamma.hpp>
#include <boost/math/special_functions/trigamma.hpp>
#include <boost/math/special_functions/zeta.hpp>
#include <doctest.h>

#include "genrep/errors.hpp"
#include "genrep/specialfn.hpp"
#include "support.hpp"

using namespace genrep::specialfn;
using testing::rel_err;

namespace {

constexpr double kEulerGamma = 0.57721566490153286061;
const double kPi = std::acos(-1.0);

// psi(x) = -gamma + sum_{n>=0} (1/(n+1) - 1/(n+x)); the tail past N is
// approximated by its integral from N + 1/2.
double digamma_series(double x, long n_terms = 2000000) {
  double s = 0.0;
  for (long n = n_terms - 1; n >= 0; --n) s += 1.0 / (n + 1.0) - 1.0 / (n + x);
  const double t = n_terms - 0.5;
  return -kEulerGamma + s + std::log((t + x) / (t + 1.0));
}

// psi_1(x) = sum_{n>=0} 1/(n+x)^2 with the same tail treatment.
double trigamma_series(double x, long n_terms = 2000000) {
  double s = 0.0;
  for (long n = n_terms - 1; n >= 0; --n) s += 1.0 / ((n + x) * (n + x));
  return s + 1.0 / (n_terms - 0.5 + x);
}

std::vector<double> log_uniform_points(int n, double lo, double hi, unsigned seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(std::log(lo), std::log(hi));
  std::vector<double> xs;
  for (int i = 0; i < n; ++i) xs.push_back(std::exp(u(gen)));
  return xs;
}

}  // namespace

TEST_SUITE("specialfn") {
  TEST_CASE("log_gamma at known points") {
    CHECK(log_gamma(1.0) == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(log_gamma(5.0) == doctest::Approx(std::log(24.0)).epsilon(1e-14));
    CHECK(log_gamma(0.5) == doctest::Approx(0.5 * std::log(kPi)).epsilon(1e-14));
  }

  TEST_CASE("polygamma values at 1 and 2") {
    CHECK(std::abs(digamma(1.0) + kEulerGamma) < 1e-14);
    CHECK(std::abs(trigamma(1.0) - kPi * kPi / 6) < 1e-14);
    const double zeta3 = boost::math::zeta(3.0);
    CHECK(std::abs(tetragamma(1.0) + 2 * zeta3) < 1e-13);
    CHECK(std::abs(tetragamma(2.0) - (-2 * zeta3 + 2)) < 1e-13);
  }

  TEST_CASE("series oracles") {
    CHECK(std::abs(digamma(10.0) - digamma_series(10.0)) < 1e-9);
    CHECK(digamma(10.0) == doctest::Approx(2.2517525891).epsilon(1e-10));
    CHECK(std::abs(trigamma(0.1) - trigamma_series(0.1)) < 1e-9);
    CHECK(trigamma(0.1) == doctest::Approx(101.4332991).epsilon(1e-9));
  }

  TEST_CASE("recurrences at the listed points") {
    for (double x : {0.3, 1.7, 42.0}) CHECK(std::abs(digamma(x + 1) - digamma(x) - 1 / x) < 1e-10);
    for (double x : {0.3, 2.5}) CHECK(std::abs(trigamma(x + 1) - trigamma(x) + 1 / (x * x)) < 1e-10);
    for (double x : {0.7, 3.0}) CHECK(std::abs(tetragamma(x + 1) - tetragamma(x) - 2 / (x * x * x)) < 1e-9);
  }

  TEST_CASE("recurrences over 1000 random points") {
    // Residual relative to the largest term: near 0 the terms are ~1/x^k and
    // cancel, so the difference alone carries their rounding.
    auto scaled = [](double a, double b, double c) {
      return std::abs(a - b - c) / std::max({std::abs(a), std::abs(b), std::abs(c), 1.0});
    };
    double worst = 0.0;
    for (double x : log_uniform_points(1000, 1e-3, 1e3, 1)) {
      worst = std::max(worst, scaled(digamma(x + 1), digamma(x), 1 / x));
      worst = std::max(worst, scaled(trigamma(x + 1), trigamma(x), -1 / (x * x)));
      worst = std::max(worst, scaled(tetragamma(x + 1), tetragamma(x), 2 / (x * x * x)));
    }
    CHECK(worst < 1e-9);
  }

  TEST_CASE("agreement with Boost.Math") {
    double worst = 0.0;
    for (double x : log_uniform_points(1000, 1e-3, 1e3, 2)) {
      worst = std::max(worst, rel_err(digamma(x), boost::math::digamma(x), 1e-300));
      worst = std::max(worst, rel_err(trigamma(x), boost::math::trigamma(x), 1e-300));
      worst = std::max(worst, rel_err(tetragamma(x), boost::math::polygamma(2, x), 1e-300));
    }
    CHECK(worst < 1e-12);
  }

  TEST_CASE("each function is the derivative of the previous one") {
    for (double x : log_uniform_points(50, 0.05, 200.0, 3)) {
      const double h = 1e-3 * x;
      CHECK(rel_err(digamma(x), testing::five_point(log_gamma, x, h)) < 1e-5);
      CHECK(rel_err(trigamma(x), testing::five_point(digamma, x, h)) < 1e-5);
      CHECK(rel_err(tetragamma(x), testing::five_point(trigamma, x, h)) < 1e-5);
    }
  }

  TEST_CASE("monotonicity on a grid") {
    double prev_psi = -INFINITY, prev_psi1 = INFINITY;
    for (double x = 0.01; x < 100.0; x *= 1.05) {
      CHECK(digamma(x) > prev_psi);
      CHECK(trigamma(x) < prev_psi1);
      CHECK(tetragamma(x) < 0.0);
      prev_psi = digamma(x);
      prev_psi1 = trigamma(x);
    }
  }

  TEST_CASE("domain errors") {
    for (double x : {0.0, -1.0, -0.5, std::numeric_limits<double>::quiet_NaN(),
                     std::numeric_limits<double>::infinity()}) {
      CHECK_THROWS_AS(log_gamma(x), genrep::DomainError);
      CHECK_THROWS_AS(digamma(x), genrep::DomainError);
      CHECK_THROWS_AS(trigamma(x), genrep::DomainError);
      CHECK_THROWS_AS(tetragamma(x), genrep::DomainError);
    }
  }
}
