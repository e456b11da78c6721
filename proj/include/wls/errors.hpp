#pragma once

#include <stdexcept>
#include <string>

namespace wls {

/// Argument lies outside the support of a measure, or has the wrong dimension.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A numerical procedure (eigen-solve, tabulation, evaluation) produced an
/// unusable result.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A construction would exceed a configured size cap.
class SizeError : public std::length_error {
 public:
  using std::length_error::length_error;
};

/// Numerical rank below the requested dimension.
class RankError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace wls
