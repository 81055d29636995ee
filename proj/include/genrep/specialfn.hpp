#pragma once

// Log-gamma and the first three polygamma functions on the positive reals.
//
// digamma/trigamma/tetragamma shift the argument up to x >= 10 with the
// recurrences psi_k(x) = psi_k(x + 1) - (-1)^k k! / x^(k+1) and then sum the
// Bernoulli-number asymptotic series. All functions throw DomainError for
// non-finite or non-positive input.

namespace genrep::specialfn {

double log_gamma(double x);

/// psi(x) = d/dx log Gamma(x)
double digamma(double x);

/// psi_1(x), strictly positive and decreasing.
double trigamma(double x);

/// psi_2(x), strictly negative and increasing.
double tetragamma(double x);

}  // namespace genrep::specialfn
