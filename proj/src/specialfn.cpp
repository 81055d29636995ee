#include "genrep/specialfn.hpp"

#include <cmath>
#include <string>

#include <boost/math/special_functions/gamma.hpp>

#include "genrep/errors.hpp"

namespace genrep::specialfn {

namespace {

constexpr double kShiftThreshold = 10.0;

void require_positive(double x, const char* fn) {
  if (!std::isfinite(x) || x <= 0.0) {
    throw DomainError(std::string(fn) + ": argument must be finite and positive, got " +
                      std::to_string(x));
  }
}

// Tail sums in powers of 1/x^2, Horner form. Coefficients are B_2k / (2k) for
// digamma, B_2k for trigamma, (2k+1) B_2k for tetragamma, k = 1..7.
double digamma_asymptotic(double x) {
  const double r2 = 1.0 / (x * x);
  const double series =
      r2 * (1.0 / 12.0 -
            r2 * (1.0 / 120.0 -
                  r2 * (1.0 / 252.0 -
                        r2 * (1.0 / 240.0 -
                              r2 * (1.0 / 132.0 - r2 * (691.0 / 32760.0 - r2 * (1.0 / 12.0)))))));
  return std::log(x) - 0.5 / x - series;
}

double trigamma_asymptotic(double x) {
  const double r = 1.0 / x;
  const double r2 = r * r;
  const double series =
      r2 * r *
      (1.0 / 6.0 -
       r2 * (1.0 / 30.0 -
             r2 * (1.0 / 42.0 -
                   r2 * (1.0 / 30.0 -
                         r2 * (5.0 / 66.0 - r2 * (691.0 / 2730.0 - r2 * (7.0 / 6.0)))))));
  return r + 0.5 * r2 + series;
}

double tetragamma_asymptotic(double x) {
  const double r = 1.0 / x;
  const double r2 = r * r;
  const double series =
      r2 * r2 *
      (0.5 -
       r2 * (1.0 / 6.0 -
             r2 * (1.0 / 6.0 -
                   r2 * (3.0 / 10.0 -
                         r2 * (5.0 / 6.0 - r2 * (691.0 / 210.0 - r2 * (35.0 / 2.0)))))));
  return -r2 - r2 * r - series;
}

}  // namespace

double log_gamma(double x) {
  require_positive(x, "log_gamma");
  return boost::math::lgamma(x);
}

double digamma(double x) {
  require_positive(x, "digamma");
  double shift = 0.0;
  while (x < kShiftThreshold) {
    shift += 1.0 / x;
    x += 1.0;
  }
  return digamma_asymptotic(x) - shift;
}

double trigamma(double x) {
  require_positive(x, "trigamma");
  double shift = 0.0;
  while (x < kShiftThreshold) {
    shift += 1.0 / (x * x);
    x += 1.0;
  }
  return trigamma_asymptotic(x) + shift;
}

double tetragamma(double x) {
  require_positive(x, "tetragamma");
  double shift = 0.0;
  while (x < kShiftThreshold) {
    shift += 2.0 / (x * x * x);
    x += 1.0;
  }
  return tetragamma_asymptotic(x) - shift;
}

}  // namespace genrep::specialfn
