#pragma once

// Airy function Ai and its derivative on [-20, 40], the Airy tail integral
// int_y^inf Ai, and the sine-kernel primitive int_0^s sinc(pi t) dt.
//
// Evaluation regions for Ai / Ai':
//   x <= -8        oscillatory asymptotic expansion (modulus/phase form)
//   -8 < x < -4.5  Taylor continuation of the ODE from the Maclaurin value at -4.5
//   -4.5 <= x <= 3 Maclaurin series
//   3 < x < 8      Taylor continuation of the ODE backwards from the value at 8
//   x >= 8         decaying asymptotic expansion
// Continuation always runs in the direction in which the Bi-like component
// decays, so the local error never grows by more than a few ulps per step.

#include <cmath>
#include <complex>
#include <numbers>
#include <string>

#include "rtge/errors.hpp"
#include "rtge/quadrature.hpp"

namespace rtge {

inline constexpr double kAiryMin = -20.0;
inline constexpr double kAiryMax = 40.0;

// Ai(0) = 3^{-2/3} / Gamma(2/3), Ai'(0) = -3^{-1/3} / Gamma(1/3).
inline constexpr double kAiryAi0 = 0.355028053887817239260063186004183176;
inline constexpr double kAiryAiPrime0 = -0.258819403792806798405183560189203963;

struct AiryPair {
  double ai;
  double ai_prime;
};

namespace detail {

inline AiryPair airy_maclaurin(double x) {
  // Ai = c1 f - c2 g with f = sum 3^k (1/3)_k x^{3k}/(3k)!, g = sum 3^k (2/3)_k x^{3k+1}/(3k+1)!.
  const double x3 = x * x * x;
  double f = 1.0, g = x, df = 0.0, dg = 1.0;
  double tf = 1.0, tg = x, tdf = 0.5 * x * x, tdg = 1.0;
  df = tdf;
  for (int k = 1; k < 200; ++k) {
    tf *= x3 / ((3.0 * k) * (3.0 * k - 1.0));
    tg *= x3 / ((3.0 * k) * (3.0 * k + 1.0));
    tdf *= x3 / ((3.0 * k) * (3.0 * k + 2.0));
    tdg *= x3 / ((3.0 * k) * (3.0 * k - 2.0));
    f += tf;
    g += tg;
    df += tdf;
    dg += tdg;
    const double tiny = 1e-18;
    if (std::abs(tf) <= tiny * std::abs(f) && std::abs(tg) <= tiny * (std::abs(g) + 1e-300) &&
        std::abs(tdf) <= tiny * (std::abs(df) + 1e-300) && std::abs(tdg) <= tiny * std::abs(dg)) {
      break;
    }
  }
  const double c1 = kAiryAi0;
  const double c2 = -kAiryAiPrime0;
  return {c1 * f - c2 * g, c1 * df - c2 * dg};
}

// Coefficients u_k of the Airy asymptotic series, u_0 = 1.
inline double airy_u_next(double u_prev, int k) {
  return u_prev * (6.0 * k - 5.0) * (6.0 * k - 3.0) * (6.0 * k - 1.0) /
         ((2.0 * k - 1.0) * 216.0 * k);
}

inline AiryPair airy_asymptotic_positive(double x) {
  const double zeta = 2.0 / 3.0 * x * std::sqrt(x);
  double su = 1.0, sv = 1.0;
  double u = 1.0, p = 1.0, last = 1.0;
  for (int k = 1; k < 60; ++k) {
    u = airy_u_next(u, k);
    const double v = -(6.0 * k + 1.0) / (6.0 * k - 1.0) * u;
    p /= -zeta;
    const double term = u * p;
    if (std::abs(term) >= std::abs(last)) break;  // optimal truncation
    su += term;
    sv += v * p;
    last = term;
    if (std::abs(term) < 1e-18) break;
  }
  const double x14 = std::sqrt(std::sqrt(x));
  const double e = std::exp(-zeta) / (2.0 * std::sqrt(std::numbers::pi));
  return {e / x14 * su, -x14 * e * sv};
}

inline AiryPair airy_asymptotic_negative(double x) {
  const double z = -x;
  const double zeta = 2.0 / 3.0 * z * std::sqrt(z);
  // Even/odd parts of sum (-1)^k u_k zeta^{-k} split by parity of k.
  double ue = 1.0, uo = 0.0, ve = 1.0, vo = 0.0;
  double u = 1.0, p = 1.0, last = 1.0;
  for (int k = 1; k < 60; ++k) {
    u = airy_u_next(u, k);
    const double v = -(6.0 * k + 1.0) / (6.0 * k - 1.0) * u;
    p /= zeta;
    const double term = u * p;
    if (std::abs(term) >= std::abs(last)) break;
    // (-1)^j for the index j within the even or odd subsequence.
    const double sign = ((k / 2) % 2 == 0) ? 1.0 : -1.0;
    if (k % 2 == 0) {
      ue += sign * term;
      ve += sign * v * p;
    } else {
      uo += sign * term;
      vo += sign * v * p;
    }
    last = term;
    if (term < 1e-18) break;
  }
  const double phase = zeta - 0.25 * std::numbers::pi;
  const double c = std::cos(phase), s = std::sin(phase);
  const double z14 = std::sqrt(std::sqrt(z));
  const double rp = 1.0 / std::sqrt(std::numbers::pi);
  return {rp / z14 * (c * ue + s * uo), rp * z14 * (s * ve - c * vo)};
}

// Advances (Ai, Ai') from x0 to x0 + h with the local Taylor series of y'' = x y.
inline AiryPair airy_taylor_step(double x0, AiryPair y, double h) {
  double c_km1 = y.ai_prime;            // c_{k-1}
  double c_k = 0.5 * x0 * y.ai;         // c_2
  double c_km2 = y.ai;                  // c_{k-2}
  double value = y.ai + y.ai_prime * h;
  double deriv = y.ai_prime;
  double hk = h;  // h^{k-1}
  const double scale = std::abs(y.ai) + std::abs(y.ai_prime) + 1e-300;
  for (int k = 2; k < 120; ++k) {
    // c_k is current; accumulate then advance the recurrence
    // c_{k+1} = (x0 c_{k-1} + c_{k-2}) / ((k+1) k).
    deriv += k * c_k * hk;
    hk *= h;
    const double t = c_k * hk;
    value += t;
    if (std::abs(t) < 1e-19 * scale && std::abs(k * c_k * hk / h) < 1e-19 * scale && k > 6) break;
    const double c_next = (x0 * c_km1 + c_km2) / ((k + 1.0) * k);
    c_km2 = c_km1;
    c_km1 = c_k;
    c_k = c_next;
  }
  return {value, deriv};
}

inline AiryPair airy_continue(double from, AiryPair y, double to) {
  constexpr double kMaxStep = 0.5;
  const int steps = static_cast<int>(std::ceil(std::abs(to - from) / kMaxStep));
  const double h = (to - from) / steps;
  double x = from;
  for (int i = 0; i < steps; ++i) {
    y = airy_taylor_step(x, y, h);
    x = (i + 1 == steps) ? to : x + h;
  }
  return y;
}

inline constexpr double kMaclaurinLow = -4.5;
inline constexpr double kMaclaurinHigh = 3.0;
inline constexpr double kAsymptoticNegative = -8.0;
inline constexpr double kAsymptoticPositive = 8.0;

// No domain check; valid for any finite x (used internally past 40).
inline AiryPair airy_unchecked(double x) {
  if (x >= kAsymptoticPositive) return airy_asymptotic_positive(x);
  if (x <= kAsymptoticNegative) return airy_asymptotic_negative(x);
  if (x >= kMaclaurinLow && x <= kMaclaurinHigh) return airy_maclaurin(x);
  if (x > kMaclaurinHigh) {
    return airy_continue(kAsymptoticPositive, airy_asymptotic_positive(kAsymptoticPositive), x);
  }
  return airy_continue(kMaclaurinLow, airy_maclaurin(kMaclaurinLow), x);
}

inline void check_airy_domain(double x, const char* who) {
  if (!(x >= kAiryMin && x <= kAiryMax)) {
    throw DomainError(std::string(who) + ": argument " + std::to_string(x) +
                      " outside [-20, 40]");
  }
}

// int_y^inf Ai for y > 1: direct integration until the integrand has decayed
// by e^{-40} relative to Ai(y).
inline double airy_tail_direct(double y) {
  const double zeta = 2.0 / 3.0 * y * std::sqrt(y);
  const double upper = std::pow(1.5 * (zeta + 40.0), 2.0 / 3.0);
  return quad::gauss_by_width<20>([](double z) { return airy_unchecked(z).ai; }, y, upper, 0.5);
}

}  // namespace detail

inline AiryPair airy(double x) {
  detail::check_airy_domain(x, "airy");
  return detail::airy_unchecked(x);
}

inline double airy_ai(double x) {
  detail::check_airy_domain(x, "airy_ai");
  return detail::airy_unchecked(x).ai;
}

inline double airy_ai_prime(double x) {
  detail::check_airy_domain(x, "airy_ai_prime");
  return detail::airy_unchecked(x).ai_prime;
}

/// int_y^inf Ai(z) dz. Anchored to int_0^inf Ai = 1/3 for y <= 1; integrated
/// directly over the decaying tail for y > 1 so that the result keeps full
/// relative accuracy instead of collapsing to 1/3 - 1/3.
inline double airy_tail_integral(double y) {
  detail::check_airy_domain(y, "airy_tail_integral");
  if (y > 1.0) return detail::airy_tail_direct(y);
  auto ai = [](double z) { return detail::airy_unchecked(z).ai; };
  if (y >= 0.0) return 1.0 / 3.0 - quad::gauss_by_width<20>(ai, 0.0, y, 0.5);
  return 1.0 / 3.0 + quad::gauss_by_width<20>(ai, y, 0.0, 0.5);
}

namespace detail {

// Si(t) for t >= 0.
inline double sine_integral(double t) {
  if (t <= 2.0) {
    const double t2 = t * t;
    double term = t, sum = t;
    for (int k = 1; k < 60; ++k) {
      term *= -t2 / ((2.0 * k) * (2.0 * k + 1.0));
      const double add = term / (2.0 * k + 1.0);
      sum += add;
      if (std::abs(add) < 1e-18 * std::abs(sum)) break;
    }
    return sum;
  }
  // Continued fraction for E1(i t) (modified Lentz).
  using C = std::complex<double>;
  constexpr double kTiny = 1e-300;
  C b(1.0, t);
  C c(1.0 / kTiny, 0.0);
  C d = 1.0 / b;
  C h = d;
  for (int i = 2; i < 100000; ++i) {
    const double a = -static_cast<double>(i - 1) * (i - 1);
    b += 2.0;
    d = 1.0 / (a * d + b);
    c = b + a / c;
    const C del = c * d;
    h *= del;
    if (std::abs(del.real() - 1.0) + std::abs(del.imag()) < 1e-16) break;
  }
  h *= C(std::cos(t), -std::sin(t));
  return 0.5 * std::numbers::pi + h.imag();
}

}  // namespace detail

/// int_0^s sin(pi t)/(pi t) dt = Si(pi s)/pi. Odd in s.
inline double sine_kernel_integral(double s) {
  if (!std::isfinite(s)) throw DomainError("sine_kernel_integral: non-finite argument");
  const double v = detail::sine_integral(std::numbers::pi * std::abs(s)) / std::numbers::pi;
  return s < 0.0 ? -v : v;
}

// sgn with sgn(0) = 0.
inline double signum(double s) {
  return s > 0.0 ? 1.0 : (s < 0.0 ? -1.0 : 0.0);
}

}  // namespace rtge
