#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hystkit {

/// Bad input: non-finite vectors, infeasible start points, invalid settings.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Argument outside the open domain of the internal energy.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Linear algebra or line-search breakdown inside a solver.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A hysteresis operator failed to solve one of its inner problems.
class OperatorError : public std::runtime_error {
 public:
  OperatorError(const std::string& what, int site)
      : std::runtime_error(what), site_(site) {}

  /// Index of the failing pinning site, or -1 for coupled solves.
  int site() const noexcept { return site_; }

 private:
  int site_;
};

/// Operator failure inside a batch evaluation.
class BatchError : public OperatorError {
 public:
  BatchError(const std::string& what, int site, std::size_t point)
      : OperatorError(what, site), point_(point) {}

  std::size_t point() const noexcept { return point_; }

 private:
  std::size_t point_;
};

}  // namespace hystkit
