#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace rtge {

// Argument outside the documented accuracy range of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Invalid configuration (bad N, beta, radius, window, ...).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Quadrature non-convergence, negative determinants, eigensolver failure.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SamplingError : public NumericalError {
 public:
  SamplingError(const std::string& what, std::uint64_t seed)
      : NumericalError(what + " (seed " + std::to_string(seed) + ")"), seed_(seed) {}

  std::uint64_t seed() const noexcept { return seed_; }

 private:
  std::uint64_t seed_;
};

}  // namespace rtge
