#pragma once

// Eigenvalue samplers for the Gaussian beta-ensembles with weight
// prod |x_j - x_k|^beta prod exp(-beta N x_i^2), and for their fixed-trace
// (sum x^2 = r^2) and bounded-trace (sum x^2 <= r^2) restrictions.
//
// Fixed trace: an unconstrained draw x projected to r x / |x|. The Gaussian
// weight depends on x only through |x|, so the direction of x has exactly the
// fixed-trace law.
// Bounded trace: a fixed-trace draw scaled by u = U^{1/N_beta}, U uniform,
// which is the radial mixture with density N_beta u^{N_beta - 1} on (0, 1).

#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "rtge/beta.hpp"
#include "rtge/errors.hpp"
#include "rtge/rng.hpp"

namespace rtge {

enum class Constraint { Unconstrained, FixedTrace, BoundedTrace };

inline std::string to_string(Constraint c) {
  switch (c) {
    case Constraint::Unconstrained: return "none";
    case Constraint::FixedTrace: return "fixed";
    case Constraint::BoundedTrace: return "bounded";
  }
  return "?";
}

struct EnsembleSpec {
  int n = 1;
  Beta beta = Beta::Unitary;
  Constraint constraint = Constraint::Unconstrained;
  std::optional<double> radius;  // defaults to sqrt(N)/2

  double effective_radius() const { return radius.value_or(0.5 * std::sqrt(static_cast<double>(n))); }

  void validate() const {
    if (n < 1) throw InvalidArgument("N must be >= 1 (got " + std::to_string(n) + ")");
    if (radius && !(*radius > 0.0 && std::isfinite(*radius))) {
      throw InvalidArgument("constraint radius must be positive and finite");
    }
  }
};

enum class SamplerPath { Dense, Tridiagonal };

inline std::string to_string(SamplerPath p) { return p == SamplerPath::Dense ? "dense" : "tridiagonal"; }

struct Interval {
  double lo;
  double hi;

  bool contains(double x) const { return x >= lo && x <= hi; }
};

struct SpectrumSample {
  std::vector<double> eigenvalues;  // ascending
  std::uint64_t seed = 0;
  EnsembleSpec spec;
  SamplerPath path = SamplerPath::Tridiagonal;
  double trace_sq = 0.0;  // sum of x_i^2 over the full spectrum
  // Set for windowed draws: `eigenvalues` then holds exactly the eigenvalues
  // of the full spectrum that lie in this interval.
  std::optional<Interval> coverage;

  bool is_complete() const { return !coverage.has_value(); }
};

struct SamplerOptions {
  SamplerPath path = SamplerPath::Tridiagonal;
  std::optional<Interval> window;  // tridiagonal only
};

namespace detail {

// ---------------------------------------------------------------------------
// Dense matrix models, entries calibrated to exp(-beta N tr H^2).

inline std::vector<double> sorted(const Eigen::VectorXd& v) {
  std::vector<double> out(v.data(), v.data() + v.size());
  std::sort(out.begin(), out.end());
  return out;
}

inline std::vector<double> dense_goe(int n, RngStream& rng) {
  // diagonal variance 1/(2N), off-diagonal 1/(4N)
  Eigen::MatrixXd h(n, n);
  const double sd_diag = std::sqrt(1.0 / (2.0 * n));
  const double sd_off = std::sqrt(1.0 / (4.0 * n));
  for (int i = 0; i < n; ++i) {
    h(i, i) = rng.normal(sd_diag);
    for (int j = i + 1; j < n; ++j) h(i, j) = h(j, i) = rng.normal(sd_off);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw SamplingError("GOE eigensolver failed", rng.seed());
  return sorted(es.eigenvalues());
}

inline std::vector<double> dense_gue(int n, RngStream& rng) {
  // diagonal variance 1/(4N); real and imaginary parts off the diagonal 1/(8N)
  Eigen::MatrixXcd h(n, n);
  const double sd_diag = std::sqrt(1.0 / (4.0 * n));
  const double sd_off = std::sqrt(1.0 / (8.0 * n));
  for (int i = 0; i < n; ++i) {
    h(i, i) = rng.normal(sd_diag);
    for (int j = i + 1; j < n; ++j) {
      const double re = rng.normal(sd_off);
      const double im = rng.normal(sd_off);
      h(i, j) = {re, im};
      h(j, i) = {re, -im};
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw SamplingError("GUE eigensolver failed", rng.seed());
  return sorted(es.eigenvalues());
}

// All 2N eigenvalues of the 2N x 2N complex representation [[A, B], [-conj B, conj A]]
// of a quaternion self-dual matrix (A Hermitian, B antisymmetric). With the
// quaternion trace tr H^2 = sum A_ii^2 + 2 sum_{i<j} (|A_ij|^2 + |B_ij|^2),
// the diagonal has variance 1/(8N) and each of the four real components of
// an off-diagonal quaternion has variance 1/(16N).
inline std::vector<double> dense_gse_raw(int n, RngStream& rng) {
  Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(2 * n, 2 * n);
  const double sd_diag = std::sqrt(1.0 / (8.0 * n));
  const double sd_off = std::sqrt(1.0 / (16.0 * n));
  for (int i = 0; i < n; ++i) {
    const double d = rng.normal(sd_diag);
    h(i, i) = d;
    h(n + i, n + i) = d;
    for (int j = i + 1; j < n; ++j) {
      const std::complex<double> a(rng.normal(sd_off), rng.normal(sd_off));
      const std::complex<double> b(rng.normal(sd_off), rng.normal(sd_off));
      h(i, j) = a;
      h(j, i) = std::conj(a);
      h(n + i, n + j) = std::conj(a);
      h(n + j, n + i) = a;
      // B antisymmetric; lower-left block is -conj(B).
      h(i, n + j) = b;
      h(j, n + i) = -b;
      h(n + j, i) = std::conj(b);
      h(n + i, j) = -std::conj(b);
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw SamplingError("GSE eigensolver failed", rng.seed());
  return sorted(es.eigenvalues());
}

inline constexpr double kKramersPairTolerance = 1e-8;

inline std::vector<double> dense_gse(int n, RngStream& rng) {
  const std::vector<double> raw = dense_gse_raw(n, rng);
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i) {
    if (std::abs(raw[2 * i] - raw[2 * i + 1]) > kKramersPairTolerance) {
      throw SamplingError("GSE eigenvalues are not doubly degenerate", rng.seed());
    }
    out[i] = 0.5 * (raw[2 * i] + raw[2 * i + 1]);
  }
  return out;
}

inline std::vector<double> dense_eigenvalues(int n, Beta beta, RngStream& rng) {
  switch (beta) {
    case Beta::Orthogonal: return dense_goe(n, rng);
    case Beta::Unitary: return dense_gue(n, rng);
    case Beta::Symplectic: return dense_gse(n, rng);
  }
  return {};
}

// ---------------------------------------------------------------------------
// Tridiagonal beta-Hermite model. Diagonal N(0, 1/(2 beta N)), off-diagonal
// chi_{beta k} / (2 sqrt(beta N)) for k = N-1, ..., 1. The eigenvalue law is
// |Delta|^beta exp(-beta N sum x^2).

struct Tridiagonal {
  Eigen::VectorXd diag;
  Eigen::VectorXd off;  // length N - 1

  double trace_sq() const { return diag.squaredNorm() + 2.0 * off.squaredNorm(); }
};

inline Tridiagonal draw_tridiagonal(int n, Beta beta, RngStream& rng) {
  const double b = to_double(beta);
  Tridiagonal t;
  t.diag.resize(n);
  t.off.resize(std::max(n - 1, 0));
  const double sd = 1.0 / std::sqrt(2.0 * b * n);
  const double off_scale = 1.0 / (2.0 * std::sqrt(b * n));
  for (int i = 0; i < n; ++i) t.diag[i] = rng.normal(sd);
  for (int i = 0; i + 1 < n; ++i) t.off[i] = off_scale * rng.chi(b * (n - 1 - i));
  return t;
}

inline std::vector<double> tridiagonal_eigenvalues(const Tridiagonal& t, std::uint64_t seed) {
  const auto n = t.diag.size();
  if (n == 1) return {t.diag[0]};
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
  es.computeFromTridiagonal(t.diag, t.off, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw SamplingError("tridiagonal eigensolver failed", seed);
  return sorted(es.eigenvalues());
}

// Sturm counts at several shifts in one sweep. The shifts run as independent
// recurrences in the inner loop, which hides the latency of the divisions.
inline void sturm_counts(const Tridiagonal& t, std::span<const double> sigmas, std::span<int> counts) {
  const auto n = t.diag.size();
  const std::size_t m = sigmas.size();
  constexpr double kPivotFloor = 1e-300;
  std::vector<double> q(m);
  for (std::size_t j = 0; j < m; ++j) {
    q[j] = t.diag[0] - sigmas[j];
    counts[j] = 0;
  }
  for (Eigen::Index i = 0;; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      if (q[j] == 0.0) q[j] = -kPivotFloor;
      counts[j] += q[j] < 0.0 ? 1 : 0;
    }
    if (i + 1 == n) break;
    const double d = t.diag[i + 1];
    const double e2 = t.off[i] * t.off[i];
    for (std::size_t j = 0; j < m; ++j) q[j] = (d - sigmas[j]) - e2 / q[j];
  }
}

// Eigenvalues in [lo, hi] by simultaneous Sturm bisection, ascending. Every
// evaluated shift also tightens the brackets of all other eigenvalues.
inline std::vector<double> tridiagonal_eigenvalues_in(const Tridiagonal& t, double lo, double hi) {
  if (!(hi >= lo)) return {};
  const double hi_closed = std::nextafter(hi, std::numeric_limits<double>::infinity());
  const double ends[2] = {lo, hi_closed};
  int end_counts[2];
  sturm_counts(t, ends, end_counts);
  const int first = end_counts[0];
  const int m = end_counts[1] - first;
  if (m <= 0) return {};
  double norm = 0.0;
  for (Eigen::Index i = 0; i < t.diag.size(); ++i) {
    double row = std::abs(t.diag[i]);
    if (i > 0) row += std::abs(t.off[i - 1]);
    if (i + 1 < t.diag.size()) row += std::abs(t.off[i]);
    norm = std::max(norm, row);
  }
  constexpr double eps = std::numeric_limits<double>::epsilon();
  const double abs_tol = 2.0 * eps * norm;
  std::vector<double> a(m, lo), b(m, hi_closed);
  std::vector<double> mids;
  std::vector<int> owner, counts;
  for (int iter = 0; iter < 200; ++iter) {
    mids.clear();
    owner.clear();
    for (int k = 0; k < m; ++k) {
      const double width = b[k] - a[k];
      if (width <= abs_tol + 2.0 * eps * std::max(std::abs(a[k]), std::abs(b[k]))) continue;
      const double mid = 0.5 * (a[k] + b[k]);
      if (mid <= a[k] || mid >= b[k]) continue;
      // Eigenvalues sharing a bracket share the shift.
      if (!mids.empty() && mids.back() == mid) continue;
      mids.push_back(mid);
      owner.push_back(k);
    }
    if (mids.empty()) break;
    counts.resize(mids.size());
    sturm_counts(t, mids, counts);
    for (std::size_t j = 0; j < mids.size(); ++j) {
      const int c = counts[j] - first;  // eigenvalues of the window below mids[j]
      for (int k = 0; k < m; ++k) {
        if (k < c) {
          b[k] = std::min(b[k], mids[j]);
        } else {
          a[k] = std::max(a[k], mids[j]);
        }
      }
    }
  }
  std::vector<double> out(m);
  for (int k = 0; k < m; ++k) out[k] = std::clamp(0.5 * (a[k] + b[k]), lo, hi);
  return out;
}

inline double sum_sq(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return s;
}

}  // namespace detail

/// Unconstrained Gaussian beta-ensemble draw.
inline SpectrumSample sample_unconstrained(const EnsembleSpec& spec, RngStream& rng,
                                           SamplerPath path = SamplerPath::Tridiagonal) {
  spec.validate();
  SpectrumSample s;
  s.seed = rng.seed();
  s.spec = spec;
  s.path = path;
  if (path == SamplerPath::Dense) {
    s.eigenvalues = detail::dense_eigenvalues(spec.n, spec.beta, rng);
  } else {
    s.eigenvalues = detail::tridiagonal_eigenvalues(detail::draw_tridiagonal(spec.n, spec.beta, rng), rng.seed());
  }
  s.trace_sq = detail::sum_sq(s.eigenvalues);
  return s;
}

namespace detail {

inline void project_to_sphere(SpectrumSample& s, double radius) {
  const double norm = std::sqrt(sum_sq(s.eigenvalues));
  for (double& x : s.eigenvalues) x *= radius / norm;
  s.trace_sq = sum_sq(s.eigenvalues);
}

inline SpectrumSample nonzero_unconstrained(const EnsembleSpec& spec, RngStream& rng, SamplerPath path) {
  for (int attempt = 0; attempt < 2; ++attempt) {
    SpectrumSample s = sample_unconstrained(spec, rng, path);
    if (s.trace_sq > 0.0) return s;
  }
  throw SamplingError("degenerate draw with zero norm", rng.seed());
}

inline double radial_mixture_draw(const EnsembleSpec& spec, RngStream& rng) {
  return std::pow(rng.uniform_open(), 1.0 / effective_dimension(spec.n, spec.beta));
}

}  // namespace detail

/// Fixed-trace draw: sum x^2 = r^2.
inline SpectrumSample sample_fixed_trace(const EnsembleSpec& spec, RngStream& rng,
                                         SamplerPath path = SamplerPath::Tridiagonal) {
  if (spec.constraint != Constraint::FixedTrace) throw InvalidArgument("sample_fixed_trace: spec is not fixed-trace");
  SpectrumSample s = detail::nonzero_unconstrained(spec, rng, path);
  detail::project_to_sphere(s, spec.effective_radius());
  s.spec = spec;
  return s;
}

/// Bounded-trace draw: fixed-trace draw at radius r scaled by U^{1/N_beta}.
inline SpectrumSample sample_bounded_trace(const EnsembleSpec& spec, RngStream& rng,
                                           SamplerPath path = SamplerPath::Tridiagonal) {
  if (spec.constraint != Constraint::BoundedTrace) throw InvalidArgument("sample_bounded_trace: spec is not bounded-trace");
  SpectrumSample s = detail::nonzero_unconstrained(spec, rng, path);
  const double u = detail::radial_mixture_draw(spec, rng);
  detail::project_to_sphere(s, u * spec.effective_radius());
  s.spec = spec;
  return s;
}

/// Tridiagonal draw that resolves only the eigenvalues inside `window`.
/// The norm used by the trace constraints is tr T^2 of the tridiagonal model,
/// which equals the sum of squared eigenvalues of the full spectrum.
inline SpectrumSample sample_window(const EnsembleSpec& spec, RngStream& rng, Interval window) {
  spec.validate();
  if (!(window.hi >= window.lo)) throw InvalidArgument("sample_window: empty window");
  detail::Tridiagonal t;
  double trace_sq = 0.0;
  for (int attempt = 0;; ++attempt) {
    t = detail::draw_tridiagonal(spec.n, spec.beta, rng);
    trace_sq = t.trace_sq();
    if (trace_sq > 0.0) break;
    if (attempt == 1) throw SamplingError("degenerate draw with zero norm", rng.seed());
  }
  double scale = 1.0;
  if (spec.constraint == Constraint::FixedTrace) {
    scale = spec.effective_radius() / std::sqrt(trace_sq);
  } else if (spec.constraint == Constraint::BoundedTrace) {
    const double u = detail::radial_mixture_draw(spec, rng);
    scale = u * spec.effective_radius() / std::sqrt(trace_sq);
  }
  SpectrumSample s;
  s.seed = rng.seed();
  s.spec = spec;
  s.path = SamplerPath::Tridiagonal;
  s.coverage = window;
  s.trace_sq = trace_sq * scale * scale;
  s.eigenvalues = detail::tridiagonal_eigenvalues_in(t, window.lo / scale, window.hi / scale);
  for (double& x : s.eigenvalues) x *= scale;
  std::erase_if(s.eigenvalues, [&](double x) { return !window.contains(x); });
  return s;
}

/// Dispatch on the constraint (and on a window, when requested).
inline SpectrumSample sample(const EnsembleSpec& spec, RngStream& rng, const SamplerOptions& options = {}) {
  if (options.window) {
    if (options.path != SamplerPath::Tridiagonal) throw InvalidArgument("windowed sampling requires the tridiagonal path");
    return sample_window(spec, rng, *options.window);
  }
  switch (spec.constraint) {
    case Constraint::Unconstrained: return sample_unconstrained(spec, rng, options.path);
    case Constraint::FixedTrace: return sample_fixed_trace(spec, rng, options.path);
    case Constraint::BoundedTrace: return sample_bounded_trace(spec, rng, options.path);
  }
  return {};
}

struct SampleFailure {
  std::size_t index;
  std::string message;
};

class BatchError : public NumericalError {
 public:
  explicit BatchError(std::vector<SampleFailure> failures)
      : NumericalError(describe(failures)), failures_(std::move(failures)) {}

  const std::vector<SampleFailure>& failures() const noexcept { return failures_; }

 private:
  static std::string describe(const std::vector<SampleFailure>& f) {
    std::string msg = std::to_string(f.size()) + " sample(s) failed:";
    for (std::size_t i = 0; i < f.size() && i < 8; ++i) msg += " [" + std::to_string(f[i].index) + "] " + f[i].message;
    return msg;
  }

  std::vector<SampleFailure> failures_;
};

struct BatchOptions {
  SamplerOptions sampler;
  unsigned workers = 1;
  std::uint64_t first_index = 0;  // global index of the first sample
};

/// Samples first_index .. first_index + count - 1 of the stream defined by
/// `master_seed`. Sample i uses RngStream::for_index(master_seed, i), so the
/// result does not depend on the worker count or on how the index range is
/// partitioned.
inline std::vector<SpectrumSample> sample_batch(const EnsembleSpec& spec, std::size_t count,
                                                std::uint64_t master_seed, const BatchOptions& options = {}) {
  if (count < 1) throw InvalidArgument("sample_batch: count must be >= 1");
  spec.validate();
  std::vector<SpectrumSample> out(count);
  std::vector<std::optional<std::string>> errors(count);
  auto work = [&](std::size_t begin, std::size_t stride) {
    for (std::size_t i = begin; i < count; i += stride) {
      try {
        RngStream rng = RngStream::for_index(master_seed, options.first_index + i);
        out[i] = sample(spec, rng, options.sampler);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  const unsigned workers = std::max(1u, std::min<unsigned>(options.workers, static_cast<unsigned>(count)));
  if (workers == 1) {
    work(0, 1);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work, w, workers);
  }
  std::vector<SampleFailure> failures;
  for (std::size_t i = 0; i < count; ++i) {
    if (errors[i]) failures.push_back({options.first_index + i, *errors[i]});
  }
  if (!failures.empty()) throw BatchError(std::move(failures));
  return out;
}

/// Streams `count` samples in chunks of `chunk` (each chunk generated by
/// sample_batch) and hands them to `consume` in index order.
inline void for_each_sample(const EnsembleSpec& spec, std::size_t count, std::uint64_t master_seed,
                            const BatchOptions& options,
                            const std::function<void(const SpectrumSample&)>& consume,
                            std::size_t chunk = 4096) {
  for (std::size_t start = 0; start < count; start += chunk) {
    BatchOptions o = options;
    o.first_index = options.first_index + start;
    const auto batch = sample_batch(spec, std::min(chunk, count - start), master_seed, o);
    for (const auto& s : batch) consume(s);
  }
}

}  // namespace rtge
