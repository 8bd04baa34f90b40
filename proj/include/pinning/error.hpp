#pragma once

#include <stdexcept>
#include <string>

namespace pinning {

// Invalid input: violated precondition, malformed table, bad config value.
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A sum or series whose precondition for convergence is not met.
class DivergenceError : public DomainError {
 public:
  using DomainError::DomainError;
};

// The walk tried to leave the truncated height lattice under the reject policy.
class BoundaryError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

// A numerical procedure could not reach its target (root not bracketed, etc).
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw DomainError(message);
}

}  // namespace pinning
