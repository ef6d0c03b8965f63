#pragma once

// Monte Carlo estimators of correlation integrals int f(t) J^n R_n(x(t)) d^n t
// under the zero, bulk and soft-edge scalings, the binned spectral density,
// and the kernel predictions the estimates converge to.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "rtge/ensembles.hpp"
#include "rtge/errors.hpp"
#include "rtge/kernels.hpp"
#include "rtge/quadrature.hpp"

namespace rtge {

/// Semicircle density (2/pi) sqrt(1 - x^2) on [-1, 1].
inline double semicircle_density(double x) {
  return std::abs(x) < 1.0 ? 2.0 / std::numbers::pi * std::sqrt(1.0 - x * x) : 0.0;
}

enum class Regime { Zero, Bulk, Edge };

inline std::string to_string(Regime r) {
  switch (r) {
    case Regime::Zero: return "zero";
    case Regime::Bulk: return "bulk";
    case Regime::Edge: return "edge";
  }
  return "?";
}

/// Affine map t -> x(t) = center + sign * scale * t.
///   Zero:  x = pi t / (2N)
///   Bulk:  x = u + t / (N omega(u))
///   Edge:  x = 1 + t / (2 N^{2/3}), or x = -1 - t / (2 N^{2/3}) at the left edge
class ScalingWindow {
 public:
  static ScalingWindow zero(int n) {
    check_n(n);
    return {Regime::Zero, n, 0.0, false, 0.0, 1.0, std::numbers::pi / (2.0 * n)};
  }

  static ScalingWindow bulk(int n, double u) {
    check_n(n);
    if (!(std::abs(u) < 1.0)) throw InvalidArgument("bulk window requires |u| < 1 (got " + std::to_string(u) + ")");
    return {Regime::Bulk, n, u, false, u, 1.0, 1.0 / (n * semicircle_density(u))};
  }

  static ScalingWindow edge(int n, bool left = false) {
    check_n(n);
    const double scale = 1.0 / (2.0 * std::pow(static_cast<double>(n), 2.0 / 3.0));
    return {Regime::Edge, n, 0.0, left, left ? -1.0 : 1.0, left ? -1.0 : 1.0, scale};
  }

  Regime regime() const { return regime_; }
  int n() const { return n_; }
  double u() const { return u_; }
  bool left_edge() const { return left_; }

  double to_x(double t) const { return center_ + sign_ * scale_ * t; }
  double to_t(double x) const { return (x - center_) / (sign_ * scale_); }
  double jacobian() const { return scale_; }

  Interval x_range(Interval t) const {
    const double a = to_x(t.lo), b = to_x(t.hi);
    return {std::min(a, b), std::max(a, b)};
  }

  KernelFamily kernel_family() const { return regime_ == Regime::Edge ? KernelFamily::Airy : KernelFamily::Sine; }

  std::string name() const {
    if (regime_ == Regime::Bulk) return "bulk(" + std::to_string(u_) + ")";
    if (regime_ == Regime::Edge && left_) return "edge(left)";
    return to_string(regime_);
  }

 private:
  ScalingWindow(Regime r, int n, double u, bool left, double center, double sign, double scale)
      : regime_(r), n_(n), u_(u), left_(left), center_(center), sign_(sign), scale_(scale) {}

  static void check_n(int n) {
    if (n < 1) throw InvalidArgument("window: N must be >= 1");
  }

  Regime regime_;
  int n_;
  double u_;
  bool left_;
  double center_;
  double sign_;
  double scale_;
};

/// Test function on R^n. It vanishes unless every coordinate lies in
/// `support`; `breakpoints` lists the interior points where a coordinate
/// section is not smooth.
struct TestFunction {
  std::string id;
  int arity = 1;
  Interval support{-std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
  std::vector<double> breakpoints;
  std::function<double(std::span<const double>)> eval;

  double operator()(std::span<const double> t) const {
    for (double v : t) {
      if (!support.contains(v)) return 0.0;
    }
    return eval(t);
  }

  bool bounded() const { return std::isfinite(support.lo) && std::isfinite(support.hi); }
};

/// Truncated Gaussian bump of unit mass on [c - R, c + R]:
/// exp(-s^2 / (2 sigma^2)) - exp(-2) with s = t - c, sigma = R / 2.
inline TestFunction gaussian_bump(double radius, double center = 0.0) {
  if (!(radius > 0.0 && std::isfinite(radius))) throw InvalidArgument("gaussian_bump: radius must be positive");
  const double sigma = 0.5 * radius;
  const double floor = std::exp(-2.0);
  const double mass = sigma * std::sqrt(2.0 * std::numbers::pi) * std::erf(std::sqrt(2.0)) - 2.0 * radius * floor;
  TestFunction f;
  f.id = "gauss";
  f.support = {center - radius, center + radius};
  f.eval = [=](std::span<const double> t) {
    const double s = t[0] - center;
    return (std::exp(-s * s / (2.0 * sigma * sigma)) - floor) / mass;
  };
  return f;
}

/// Cubic B-spline of unit mass with knots c + {-R, -R/2, 0, R/2, R}.
inline TestFunction spline_bump(double radius, double center = 0.0) {
  if (!(radius > 0.0 && std::isfinite(radius))) throw InvalidArgument("spline_bump: radius must be positive");
  const double h = 0.5 * radius;
  TestFunction f;
  f.id = "spline";
  f.support = {center - radius, center + radius};
  f.breakpoints = {center - h, center, center + h};
  f.eval = [=](std::span<const double> t) {
    const double u = std::abs(t[0] - center) / h;
    if (u >= 2.0) return 0.0;
    const double b = u < 1.0 ? (4.0 - 6.0 * u * u + 3.0 * u * u * u) / 6.0 : (2.0 - u) * (2.0 - u) * (2.0 - u) / 6.0;
    return b / h;
  };
  return f;
}

/// g(t_1) ... g(t_n).
inline TestFunction product(const TestFunction& g, int arity) {
  if (g.arity != 1) throw InvalidArgument("product: factor must have arity 1");
  if (arity < 1) throw InvalidArgument("product: arity must be >= 1");
  TestFunction f = g;
  f.id = g.id + "^" + std::to_string(arity);
  f.arity = arity;
  f.eval = [g](std::span<const double> t) {
    double p = 1.0;
    for (double v : t) p *= g.eval(std::span<const double>(&v, 1));
    return p;
  };
  return f;
}

/// f = 1 on [-radius, radius]^n (everywhere when radius is infinite). Not
/// continuous; used to count tuples.
inline TestFunction indicator(int arity, double radius = std::numeric_limits<double>::infinity()) {
  if (arity < 1) throw InvalidArgument("indicator: arity must be >= 1");
  TestFunction f;
  f.id = "one";
  f.arity = arity;
  f.support = {-radius, radius};
  f.eval = [](std::span<const double>) { return 1.0; };
  return f;
}

/// Test function by name: "gauss", "spline" (products thereof for arity > 1)
/// or "one".
inline TestFunction make_test_function(const std::string& id, double radius, int arity, double center = 0.0) {
  if (id == "one") return indicator(arity, radius);
  TestFunction g;
  if (id == "gauss") {
    g = gaussian_bump(radius, center);
  } else if (id == "spline") {
    g = spline_bump(radius, center);
  } else {
    throw InvalidArgument("unknown test function '" + id + "' (expected gauss, spline or one)");
  }
  return arity == 1 ? g : product(g, arity);
}

struct CorrelationEstimate {
  double value = 0.0;
  double std_error = 0.0;  // sample standard deviation / sqrt(samples)
  int n = 1;
  std::size_t samples = 0;
  ScalingWindow window = ScalingWindow::zero(1);
};

namespace detail {

inline double ordered_tuple_sum_rec(const TestFunction& f, std::span<const double> t, std::vector<double>& point,
                                    std::vector<char>& used, int depth) {
  if (depth == f.arity) return f(point);
  double sum = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (used[i]) continue;
    used[i] = 1;
    point[depth] = t[i];
    sum += ordered_tuple_sum_rec(f, t, point, used, depth + 1);
    used[i] = 0;
  }
  return sum;
}

}  // namespace detail

/// Sum of f over ordered n-tuples of distinct entries of t.
inline double ordered_tuple_sum(const TestFunction& f, std::span<const double> t) {
  if (static_cast<int>(t.size()) < f.arity) return 0.0;
  std::vector<double> point(f.arity);
  std::vector<char> used(t.size(), 0);
  return detail::ordered_tuple_sum_rec(f, t, point, used, 0);
}

inline bool same_spec(const EnsembleSpec& a, const EnsembleSpec& b) {
  return a.n == b.n && a.beta == b.beta && a.constraint == b.constraint &&
         a.effective_radius() == b.effective_radius();
}

/// Streaming estimator. Samples are folded in the order they are added
/// (Welford), so a fixed sample order gives bit-identical results.
class CorrelationAccumulator {
 public:
  CorrelationAccumulator(TestFunction f, ScalingWindow w) : f_(std::move(f)), w_(w) {
    if (f_.arity < 1) throw InvalidArgument("test function arity must be >= 1");
  }

  void add(const SpectrumSample& s) {
    if (count_ == 0) {
      spec_ = s.spec;
      if (f_.arity > spec_.n) {
        throw InvalidArgument("test function arity " + std::to_string(f_.arity) + " exceeds N = " + std::to_string(spec_.n));
      }
      if (w_.n() != spec_.n) throw InvalidArgument("scaling window N does not match the samples");
    } else if (!same_spec(spec_, s.spec)) {
      throw InvalidArgument("samples do not share one ensemble spec");
    }
    if (s.coverage) {
      const Interval need = w_.x_range(f_.support);
      if (!(s.coverage->lo <= need.lo && s.coverage->hi >= need.hi)) {
        throw InvalidArgument("windowed sample does not cover the support of the test function");
      }
    }
    t_.clear();
    for (double x : s.eigenvalues) {
      const double t = w_.to_t(x);
      if (f_.support.contains(t)) t_.push_back(t);
    }
    const double v = ordered_tuple_sum(f_, t_);
    ++count_;
    const double delta = v - mean_;
    mean_ += delta / static_cast<double>(count_);
    m2_ += delta * (v - mean_);
  }

  std::size_t count() const { return count_; }

  CorrelationEstimate result() const {
    if (count_ == 0) throw InvalidArgument("correlation estimate over an empty sample stream");
    CorrelationEstimate e;
    e.value = mean_;
    e.std_error = count_ > 1 ? std::sqrt(m2_ / static_cast<double>(count_ - 1) / static_cast<double>(count_)) : 0.0;
    e.n = f_.arity;
    e.samples = count_;
    e.window = w_;
    return e;
  }

 private:
  TestFunction f_;
  ScalingWindow w_;
  EnsembleSpec spec_;
  std::size_t count_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
  std::vector<double> t_;
};

inline CorrelationEstimate estimate_correlation_integral(std::span<const SpectrumSample> samples,
                                                         const TestFunction& f, const ScalingWindow& w) {
  CorrelationAccumulator acc(f, w);
  for (const auto& s : samples) acc.add(s);
  return acc.result();
}

/// Draws samples 0 .. count-1 of `master_seed` and estimates the integral.
/// On the tridiagonal path with a bounded test function, only the eigenvalues
/// inside the scaled support are computed.
inline CorrelationEstimate estimate_correlation_integral(const EnsembleSpec& spec, std::size_t count,
                                                         std::uint64_t master_seed, const TestFunction& f,
                                                         const ScalingWindow& w, BatchOptions options = {}) {
  if (count < 1) throw InvalidArgument("sample count must be >= 1");
  if (options.sampler.path == SamplerPath::Tridiagonal && f.bounded() && !options.sampler.window) {
    options.sampler.window = w.x_range(f.support);
  }
  CorrelationAccumulator acc(f, w);
  for_each_sample(spec, count, master_seed, options, [&](const SpectrumSample& s) { acc.add(s); });
  return acc.result();
}

struct DensityHistogram {
  double lo = 0.0;
  double hi = 0.0;
  std::vector<double> values;  // estimate of (1/N) R_1 at the bin centers
  std::size_t samples = 0;
  double fraction_in_range = 0.0;  // sum of values * width

  int bins() const { return static_cast<int>(values.size()); }
  double width() const { return (hi - lo) / bins(); }
  double center(int i) const { return lo + (i + 0.5) * width(); }
};

class DensityAccumulator {
 public:
  DensityAccumulator(int bins, Interval range) : range_(range), counts_(bins > 0 ? bins : 0, 0) {
    if (bins < 1) throw InvalidArgument("bins must be >= 1");
    if (!(range.hi > range.lo)) throw InvalidArgument("density range must have hi > lo");
  }

  void add(const SpectrumSample& s) {
    if (samples_ == 0) {
      n_ = s.spec.n;
    } else if (s.spec.n != n_) {
      throw InvalidArgument("samples do not share one ensemble spec");
    }
    if (s.coverage && !(s.coverage->lo <= range_.lo && s.coverage->hi >= range_.hi)) {
      throw InvalidArgument("windowed sample does not cover the histogram range");
    }
    const int bins = static_cast<int>(counts_.size());
    const double w = (range_.hi - range_.lo) / bins;
    for (double x : s.eigenvalues) {
      if (x < range_.lo || x > range_.hi) continue;
      const int k = std::min(bins - 1, static_cast<int>((x - range_.lo) / w));
      ++counts_[k];
    }
    ++samples_;
  }

  DensityHistogram result() const {
    if (samples_ == 0) throw InvalidArgument("density estimate over an empty sample stream");
    DensityHistogram h;
    h.lo = range_.lo;
    h.hi = range_.hi;
    h.samples = samples_;
    h.values.resize(counts_.size());
    const double w = h.width();
    std::uint64_t total = 0;
    for (std::size_t i = 0; i < counts_.size(); ++i) {
      h.values[i] = static_cast<double>(counts_[i]) / (static_cast<double>(samples_) * n_ * w);
      total += counts_[i];
    }
    h.fraction_in_range = static_cast<double>(total) / (static_cast<double>(samples_) * n_);
    return h;
  }

 private:
  Interval range_;
  std::vector<std::uint64_t> counts_;
  std::size_t samples_ = 0;
  int n_ = 0;
};

inline DensityHistogram empirical_density(std::span<const SpectrumSample> samples, int bins, Interval range) {
  DensityAccumulator acc(bins, range);
  for (const auto& s : samples) acc.add(s);
  return acc.result();
}

namespace detail {

// Breakpoints of one coordinate: support ends, the function's own kinks and
// any extra points, sorted and clipped to the support.
inline std::vector<double> segment_ends(const TestFunction& f, std::initializer_list<double> extra = {}) {
  std::vector<double> e = {f.support.lo, f.support.hi};
  for (double b : f.breakpoints) e.push_back(b);
  for (double b : extra) {
    if (b > f.support.lo && b < f.support.hi) e.push_back(b);
  }
  std::sort(e.begin(), e.end());
  e.erase(std::unique(e.begin(), e.end()), e.end());
  return e;
}

template <class G>
double integrate_segments(G&& g, const std::vector<double>& ends, int panels) {
  double sum = 0.0;
  for (std::size_t i = 0; i + 1 < ends.size(); ++i) sum += quad::gauss_panels<20>(g, ends[i], ends[i + 1], panels);
  return sum;
}

}  // namespace detail

/// int f(t) det[K(t_j, t_k)] d^n t (beta = 2) or with the quaternion
/// determinant (beta = 1, 4), for n = 1, 2. Gauss-Legendre panels are doubled
/// until two successive results agree within `tol`. For n = 2 the inner
/// integral is split at the diagonal, where the beta = 1 integrand has a kink.
inline double predicted_integral(const TestFunction& f, KernelKind kind, double tol = 1e-6) {
  if (f.arity != 1 && f.arity != 2) throw InvalidArgument("predicted_integral supports arity 1 and 2 only");
  if (!f.bounded()) throw InvalidArgument("predicted_integral needs a bounded support");
  auto level = [&](int panels) {
    if (f.arity == 1) {
      auto g = [&](double t) {
        const double p[1] = {t};
        return f(p) * predicted_correlation_integrand(kind, p);
      };
      return detail::integrate_segments(g, detail::segment_ends(f), panels);
    }
    auto outer = [&](double s) {
      auto inner = [&](double t) {
        const double p[2] = {s, t};
        const double fv = f(p);
        return fv == 0.0 ? 0.0 : fv * predicted_correlation_integrand(kind, p);
      };
      return detail::integrate_segments(inner, detail::segment_ends(f, {s}), panels);
    };
    return detail::integrate_segments(outer, detail::segment_ends(f), panels);
  };
  double previous = level(1);
  for (int panels = 2; panels <= 64; panels *= 2) {
    const double current = level(panels);
    if (std::abs(current - previous) <= tol) return current;
    previous = current;
  }
  throw NumericalError("predicted_integral: refinement did not converge to " + std::to_string(tol));
}

}  // namespace rtge
