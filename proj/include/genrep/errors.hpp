#pragma once

#include <stdexcept>
#include <string>

namespace genrep {

/// Argument outside the mathematical domain of an operation
/// (non-positive shape, latent value on a support boundary, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Result not representable (overflow in a forward transform).
class RangeError : public std::range_error {
 public:
  using std::range_error::range_error;
};

/// A numerical routine failed: non-finite gradient, indefinite covariance,
/// exhausted resampling budget.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input file or configuration.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace genrep
