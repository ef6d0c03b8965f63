#pragma once

// Sine and Airy scalar kernels, their 2x2 matrix (quaternion) versions for
// beta = 1, 4, and the determinantal correlation predictions built on them.

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rtge/beta.hpp"
#include "rtge/errors.hpp"
#include "rtge/quadrature.hpp"
#include "rtge/specialfn.hpp"

namespace rtge {

enum class KernelFamily { Sine, Airy };

struct KernelKind {
  KernelFamily family;
  Beta beta;
};

inline std::string to_string(KernelFamily f) { return f == KernelFamily::Sine ? "sine" : "airy"; }

using Block2 = Eigen::Matrix2d;

// n x n scalar kernel matrix (beta = 2) or 2n x 2n flattened array of 2x2
// blocks (beta = 1, 4). Block (j, k) occupies rows 2j..2j+1, cols 2k..2k+1.
struct KernelMatrix {
  int n = 0;
  Beta beta = Beta::Unitary;
  Eigen::MatrixXd entries;

  bool is_quaternion() const { return beta != Beta::Unitary; }
  Block2 block(int j, int k) const { return entries.block<2, 2>(2 * j, 2 * k); }
};

// ---------------------------------------------------------------------------
// Sine kernel, as a function of the difference r = x - y.

namespace detail {

inline double sinc_pi(double r) {
  const double z = std::numbers::pi * r;
  if (std::abs(r) < 1e-8) return 1.0 - z * z / 6.0;
  return std::sin(z) / z;
}

// d/dr sinc_pi(r).
inline double sinc_pi_derivative(double r) {
  const double z = std::numbers::pi * r;
  if (std::abs(z) < 1.0) {
    // sum_{k>=1} (-1)^k 2k z^{2k-1} / (2k+1)!, times pi
    const double z2 = z * z;
    double term = -z / 3.0;  // k = 1: -2 z / 3!
    double sum = term;
    for (int k = 2; k < 30; ++k) {
      term *= -z2 * k / ((k - 1.0) * (2.0 * k) * (2.0 * k + 1.0));
      sum += term;
      if (std::abs(term) < 1e-18 * std::abs(sum)) break;
    }
    return std::numbers::pi * sum;
  }
  return (std::cos(z) - std::sin(z) / z) / r;
}

}  // namespace detail

inline double k_sine(double x, double y) { return detail::sinc_pi(x - y); }

// ---------------------------------------------------------------------------
// Airy kernel.

namespace detail {

inline constexpr double kAiryDiagonalBand = 0.5;
inline constexpr int kAiryTaylorTerms = 48;

// Taylor coefficients of Ai about x: a_0 = Ai, a_1 = Ai', a_m = (x a_{m-2} + a_{m-3}) / (m (m - 1)).
inline std::array<double, kAiryTaylorTerms> airy_taylor_coefficients(double x) {
  const AiryPair p = airy_unchecked(x);
  std::array<double, kAiryTaylorTerms> a{};
  a[0] = p.ai;
  a[1] = p.ai_prime;
  a[2] = 0.5 * x * a[0];
  for (int m = 3; m < kAiryTaylorTerms; ++m) a[m] = (x * a[m - 2] + a[m - 3]) / (m * (m - 1.0));
  return a;
}

// K(x, x + h) = -sum_{k>=1} d_k h^{k-1}, d_k = a_0 (k+1) a_{k+1} - a_1 a_k.
inline double airy_kernel_series(const std::array<double, kAiryTaylorTerms>& a, double h) {
  double sum = 0.0, hp = 1.0;
  for (int k = 1; k + 1 < kAiryTaylorTerms; ++k) {
    sum += (a[0] * (k + 1.0) * a[k + 1] - a[1] * a[k]) * hp;
    hp *= h;
  }
  return -sum;
}

// d/dh K(x, x + h) = -sum_{k>=2} (k-1) d_k h^{k-2}.
inline double airy_kernel_dy_series(const std::array<double, kAiryTaylorTerms>& a, double h) {
  double sum = 0.0, hp = 1.0;
  for (int k = 2; k + 1 < kAiryTaylorTerms; ++k) {
    sum += (k - 1.0) * (a[0] * (k + 1.0) * a[k + 1] - a[1] * a[k]) * hp;
    hp *= h;
  }
  return -sum;
}

inline double k_airy_unchecked(double x, double y) {
  const double lo = std::min(x, y);
  const double hi = std::max(x, y);
  const double h = hi - lo;
  if (h <= kAiryDiagonalBand) return airy_kernel_series(airy_taylor_coefficients(lo), h);
  const AiryPair px = airy_unchecked(lo);
  const AiryPair py = airy_unchecked(hi);
  return (px.ai * py.ai_prime - px.ai_prime * py.ai) / (lo - hi);
}

}  // namespace detail

/// (Ai(x)Ai'(y) - Ai'(x)Ai(y)) / (x - y). Within |x - y| <= 0.5 the quotient is
/// replaced by its Taylor expansion about min(x, y), which is exact in the
/// limit and free of cancellation; arguments are ordered first, so the result
/// is bit-for-bit symmetric.
inline double k_airy(double x, double y) {
  detail::check_airy_domain(x, "k_airy");
  detail::check_airy_domain(y, "k_airy");
  return detail::k_airy_unchecked(x, y);
}

// Analytic partial derivative of K_Airy(x, y) in its second argument.
inline double k_airy_dy(double x, double y) {
  detail::check_airy_domain(x, "k_airy_dy");
  detail::check_airy_domain(y, "k_airy_dy");
  const double h = y - x;
  if (std::abs(h) <= detail::kAiryDiagonalBand) {
    return detail::airy_kernel_dy_series(detail::airy_taylor_coefficients(x), h);
  }
  const AiryPair px = detail::airy_unchecked(x);
  const AiryPair py = detail::airy_unchecked(y);
  const double d = x - y;
  const double num = px.ai * py.ai_prime - px.ai_prime * py.ai;
  const double dnum = px.ai * y * py.ai - px.ai_prime * py.ai_prime;
  return dnum / d + num / (d * d);
}

inline constexpr double kAiryTailTruncation = 40.0;

/// int_x^inf K_Airy(z, y) dz, truncated at z = min(x + 40, 40) where the
/// integrand is below 1e-17. Absolute error <= 1e-8 or NumericalError.
inline double airy_kernel_tail_integral(double x, double y, double abs_tol = 1e-10) {
  detail::check_airy_domain(x, "airy_kernel_tail_integral");
  detail::check_airy_domain(y, "airy_kernel_tail_integral");
  const double upper = std::min(x + kAiryTailTruncation, kAiryMax);
  if (upper <= x) return 0.0;
  auto f = [y](double z) { return detail::k_airy_unchecked(z, y); };
  // Split at y, where the integrand switches between series and quotient.
  if (y > x && y < upper) {
    return quad::integrate_adaptive(f, x, y, 0.5 * abs_tol).value +
           quad::integrate_adaptive(f, y, upper, 0.5 * abs_tol).value;
  }
  return quad::integrate_adaptive(f, x, upper, abs_tol).value;
}

// ---------------------------------------------------------------------------
// 2x2 matrix kernels.

namespace detail {

inline Block2 sine_orthogonal_block(double r) {
  Block2 b;
  const double s = sinc_pi(r);
  b << s, sinc_pi_derivative(r), sine_kernel_integral(r) - 0.5 * signum(r), s;
  return b;
}

// `with_sign_term` reproduces a -sgn/2 term in the 21 entry that is carried
// over from the beta = 1 block; without it the 2-point function vanishes
// to fourth order at coincidence as symplectic repulsion requires.
inline Block2 sine_symplectic_block(double r, bool with_sign_term = false) {
  Block2 b;
  const double s = sinc_pi(2.0 * r);
  // d/dx K(2(x-y)) = 2 K'(2r);  int_0^r K(2t) dt = I(2r) / 2.
  const double lower = 0.5 * sine_kernel_integral(2.0 * r) -
                       (with_sign_term ? 0.5 * signum(2.0 * r) : 0.0);
  b << s, 2.0 * sinc_pi_derivative(2.0 * r), lower, s;
  return b;
}

inline Block2 airy_orthogonal_block(double x, double y) {
  const double k = k_airy(x, y);
  const double ai_x = airy_ai(x);
  const double ai_y = airy_ai(y);
  const double tail_x = airy_tail_integral(x);
  const double tail_y = airy_tail_integral(y);
  Block2 b;
  b(0, 0) = k + 0.5 * ai_x * (1.0 - tail_y);
  b(1, 1) = k + 0.5 * ai_y * (1.0 - tail_x);  // 11 entry with arguments exchanged
  b(0, 1) = -k_airy_dy(x, y) - 0.5 * ai_x * ai_y;
  b(1, 0) = -airy_kernel_tail_integral(x, y) +
            0.5 * ((tail_y - tail_x) + tail_x * tail_y) - 0.5 * signum(x - y);
  return b;
}

inline Block2 airy_symplectic_block(double x, double y) {
  const double k = k_airy(x, y);
  const double ai_x = airy_ai(x);
  const double ai_y = airy_ai(y);
  const double tail_x = airy_tail_integral(x);
  const double tail_y = airy_tail_integral(y);
  Block2 b;
  b(0, 0) = k - 0.5 * ai_x * tail_y;
  b(1, 1) = k - 0.5 * ai_y * tail_x;
  b(0, 1) = -k_airy_dy(x, y) - 0.5 * ai_x * ai_y;
  b(1, 0) = -airy_kernel_tail_integral(x, y) + 0.5 * tail_x * tail_y;
  return 0.5 * b;
}

}  // namespace detail

/// 2x2 matrix kernel for beta = 1 or 4.
///
/// The 22 entry is the 11 entry with x and y exchanged, which makes the block
/// matrix self-dual so that its ordinary determinant is the square of the
/// quaternion determinant. On the diagonal x = y the two entries coincide.
inline Block2 matrix_kernel(KernelKind kind, double x, double y) {
  if (kind.beta == Beta::Unitary) throw InvalidArgument("matrix_kernel: beta must be 1 or 4");
  if (!std::isfinite(x) || !std::isfinite(y)) throw DomainError("matrix_kernel: non-finite point");
  if (kind.family == KernelFamily::Sine) {
    return kind.beta == Beta::Orthogonal ? detail::sine_orthogonal_block(x - y)
                                         : detail::sine_symplectic_block(x - y);
  }
  return kind.beta == Beta::Orthogonal ? detail::airy_orthogonal_block(x, y)
                                       : detail::airy_symplectic_block(x, y);
}

inline double scalar_kernel(KernelFamily family, double x, double y) {
  return family == KernelFamily::Sine ? k_sine(x, y) : k_airy(x, y);
}

inline KernelMatrix kernel_matrix(KernelKind kind, std::span<const double> points) {
  const int n = static_cast<int>(points.size());
  KernelMatrix m;
  m.n = n;
  m.beta = kind.beta;
  if (kind.beta == Beta::Unitary) {
    m.entries.resize(n, n);
    for (int j = 0; j < n; ++j) {
      for (int k = j; k < n; ++k) {
        m.entries(j, k) = m.entries(k, j) = scalar_kernel(kind.family, points[j], points[k]);
      }
    }
    return m;
  }
  m.entries.resize(2 * n, 2 * n);
  for (int j = 0; j < n; ++j) {
    for (int k = 0; k < n; ++k) {
      m.entries.block<2, 2>(2 * j, 2 * k) = matrix_kernel(kind, points[j], points[k]);
    }
  }
  return m;
}

inline constexpr double kNegativeDeterminantTolerance = 1e-10;

/// Square root of the ordinary determinant of the flattened 2n x 2n matrix
/// (pivoted LU). Determinants in [-1e-10, 0) are clamped to zero; anything
/// more negative is reported as a NumericalError.
inline double quaternion_det_sqrt(const KernelMatrix& m) {
  if (!m.is_quaternion()) throw InvalidArgument("quaternion_det_sqrt: beta must be 1 or 4");
  if (m.entries.rows() != 2 * m.n || m.entries.cols() != 2 * m.n) {
    throw InvalidArgument("quaternion_det_sqrt: expected a 2n x 2n block matrix");
  }
  if (m.n == 0) return 1.0;
  double det = m.entries.partialPivLu().determinant();
  if (det < 0.0) {
    if (det < -kNegativeDeterminantTolerance) {
      throw NumericalError("quaternion_det_sqrt: determinant " + std::to_string(det) +
                           " is negative");
    }
    det = 0.0;
  }
  return std::sqrt(det);
}

/// det[K(t_j, t_k)] for beta = 2, (det[K^{(beta)}(t_j, t_k)])^{1/2} otherwise.
inline double predicted_correlation_integrand(KernelKind kind, std::span<const double> points) {
  const KernelMatrix m = kernel_matrix(kind, points);
  if (!m.is_quaternion()) {
    if (m.n == 0) return 1.0;
    if (m.n == 1) return m.entries(0, 0);
    return m.entries.partialPivLu().determinant();
  }
  return quaternion_det_sqrt(m);
}

}  // namespace rtge
