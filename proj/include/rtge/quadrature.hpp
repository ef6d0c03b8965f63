#pragma once

// Fixed-order Gauss-Legendre panels (Boost.Math nodes) and a globally
// adaptive Gauss-Kronrod 7/15 integrator with an absolute error contract.

#include <algorithm>
#include <array>
#include <cmath>
#include <queue>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>

#include "rtge/errors.hpp"

namespace rtge::quad {

// Composite Gauss-Legendre rule: `panels` equal panels of `Order` points.
template <unsigned Order = 20, class F>
double gauss_panels(F&& f, double a, double b, int panels) {
  if (panels < 1) throw InvalidArgument("gauss_panels: panels must be >= 1");
  const double h = (b - a) / panels;
  double sum = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double lo = a + p * h;
    const double hi = (p + 1 == panels) ? b : lo + h;
    sum += boost::math::quadrature::gauss<double, Order>::integrate(f, lo, hi);
  }
  return sum;
}

// Panels no wider than `max_width`.
template <unsigned Order = 20, class F>
double gauss_by_width(F&& f, double a, double b, double max_width) {
  if (a == b) return 0.0;
  const int panels = std::max(1, static_cast<int>(std::ceil(std::abs(b - a) / max_width)));
  return gauss_panels<Order>(f, a, b, panels);
}

// Gauss-Legendre nodes and weights mapped onto [a, b], in ascending order.
template <unsigned Order>
void gauss_nodes(double a, double b, std::vector<double>& x, std::vector<double>& w) {
  using Rule = boost::math::quadrature::gauss<double, Order>;
  const auto& abscissa = Rule::abscissa();
  const auto& weights = Rule::weights();
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  std::vector<std::pair<double, double>> pts;
  for (std::size_t i = 0; i < abscissa.size(); ++i) {
    if (abscissa[i] == 0.0) {
      pts.emplace_back(mid, half * weights[i]);
    } else {
      pts.emplace_back(mid - half * abscissa[i], half * weights[i]);
      pts.emplace_back(mid + half * abscissa[i], half * weights[i]);
    }
  }
  std::sort(pts.begin(), pts.end());
  for (const auto& [xi, wi] : pts) {
    x.push_back(xi);
    w.push_back(wi);
  }
}

struct AdaptiveResult {
  double value = 0.0;
  double error = 0.0;
  int intervals = 0;
};

namespace detail {

// Kronrod 15-point extension of the 7-point Gauss rule (QUADPACK qk15).
inline constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Segment {
  double a, b, value, error;
  bool operator<(const Segment& o) const { return error < o.error; }
};

template <class F>
Segment kronrod15(F& f, double a, double b) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  const double fc = f(c);
  double kron = fc * kWgk[7];
  double gauss = fc * kWg[3];
  for (int j = 0; j < 7; ++j) {
    const double dx = h * kXgk[j];
    const double s = f(c - dx) + f(c + dx);
    kron += kWgk[j] * s;
    if (j % 2 == 1) gauss += kWg[j / 2] * s;
  }
  return {a, b, kron * h, std::abs((kron - gauss) * h)};
}

}  // namespace detail

// Globally adaptive bisection: always splits the segment with the largest
// error estimate. Throws NumericalError when the summed estimate stays above
// `abs_tol` after `max_intervals` segments, or on non-finite values.
template <class F>
AdaptiveResult integrate_adaptive(F&& f, double a, double b, double abs_tol,
                                  int max_intervals = 2000) {
  if (a == b) return {};
  std::priority_queue<detail::Segment> heap;
  auto first = detail::kronrod15(f, a, b);
  double total = first.value;
  double error = first.error;
  heap.push(first);
  int count = 1;
  while (error > abs_tol && count < max_intervals) {
    const auto worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    const auto left = detail::kronrod15(f, worst.a, mid);
    const auto right = detail::kronrod15(f, mid, worst.b);
    total += left.value + right.value - worst.value;
    error += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
    ++count;
  }
  // Re-sum to shed accumulated cancellation in the running totals.
  total = 0.0;
  error = 0.0;
  while (!heap.empty()) {
    total += heap.top().value;
    error += heap.top().error;
    heap.pop();
  }
  if (!std::isfinite(total) || error > abs_tol) {
    throw NumericalError("adaptive quadrature did not converge on [" + std::to_string(a) +
                         ", " + std::to_string(b) + "]: error estimate " +
                         std::to_string(error) + " > " + std::to_string(abs_tol));
  }
  return {total, error, count};
}

}  // namespace rtge::quad
