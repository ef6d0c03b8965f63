#pragma once

#include <string>

#include "rtge/errors.hpp"

namespace rtge {

// Dyson index of the three classical symmetry classes.
enum class Beta : int { Orthogonal = 1, Unitary = 2, Symplectic = 4 };

inline Beta beta_from_int(int b) {
  switch (b) {
    case 1: return Beta::Orthogonal;
    case 2: return Beta::Unitary;
    case 4: return Beta::Symplectic;
    default: throw InvalidArgument("beta must be 1, 2 or 4 (got " + std::to_string(b) + ")");
  }
}

constexpr int to_int(Beta b) noexcept { return static_cast<int>(b); }
constexpr double to_double(Beta b) noexcept { return static_cast<double>(static_cast<int>(b)); }

// N_beta = N + beta N (N - 1) / 2, the radial exponent of the ensemble.
constexpr double effective_dimension(int n, Beta b) noexcept {
  return n + to_double(b) * n * (n - 1.0) / 2.0;
}

}  // namespace rtge
