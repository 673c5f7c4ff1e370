#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace parab {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Error raised when a point leaves the domain of a potential (collision,
/// origin, cone exit). Carries the offending body indices when known.
class DomainError : public std::runtime_error {
 public:
  DomainError(std::string what, int i = -1, int j = -1)
      : std::runtime_error(std::move(what)), index_i(i), index_j(j) {}
  int index_i;
  int index_j;
};

/// Error for violated call contracts (dimension mismatch, parameter range).
class ContractError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Error raised by iterative solvers that fail to converge or leave their
/// admissible region.
class SolveError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace parab
