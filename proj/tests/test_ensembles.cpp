#include <catch_amalgamated.hpp>

#include <random>
#include <set>

#include "rtge/ensembles.hpp"
#include "rtge/oracle.hpp"
#include "rtge/stats.hpp"

using namespace rtge;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

struct Moments {
  double mean = 0.0, m2 = 0.0;
  std::size_t n = 0;

  void add(double v) {
    ++n;
    const double d = v - mean;
    mean += d / static_cast<double>(n);
    m2 += d * (v - mean);
  }
  double variance() const { return m2 / (n - 1.0); }
  double stderr_mean() const { return std::sqrt(variance() / n); }
};

}  // namespace

TEST_CASE("effective dimension") {
  CHECK(effective_dimension(1, Beta::Unitary) == 1.0);
  CHECK(effective_dimension(4, Beta::Unitary) == 16.0);
  CHECK(effective_dimension(8, Beta::Symplectic) == 120.0);
}

TEST_CASE("spec validation and default radius") {
  EnsembleSpec s{50, Beta::Unitary, Constraint::FixedTrace};
  CHECK_THAT(s.effective_radius(), WithinRel(std::sqrt(50.0) / 2.0, 1e-15));
  CHECK_THROWS_AS((EnsembleSpec{0, Beta::Unitary}.validate()), InvalidArgument);
  CHECK_THROWS_AS((EnsembleSpec{3, Beta::Unitary, Constraint::FixedTrace, -1.0}.validate()), InvalidArgument);
  CHECK_THROWS_AS(beta_from_int(3), InvalidArgument);
}

TEST_CASE("GUE N = 1 has variance 1/4") {
  Moments m;
  const EnsembleSpec spec{1, Beta::Unitary};
  for (std::size_t i = 0; i < 100000; ++i) {
    RngStream rng = RngStream::for_index(101, i);
    m.add(sample_unconstrained(spec, rng, SamplerPath::Dense).eigenvalues[0]);
  }
  // variance of the sample variance of a normal: 2 sigma^4 / (n - 1)
  const double se = std::sqrt(2.0 / (m.n - 1.0)) * 0.25;
  CHECK(std::abs(m.variance() - 0.25) <= 3.0 * se);
}

TEST_CASE("trace moment identity, both paths, N = 8") {
  for (SamplerPath path : {SamplerPath::Dense, SamplerPath::Tridiagonal}) {
    for (Beta b : {Beta::Orthogonal, Beta::Unitary, Beta::Symplectic}) {
      Moments m;
      BatchOptions o;
      o.sampler.path = path;
      for_each_sample({8, b}, 20000, 202 + to_int(b), o, [&](const SpectrumSample& s) { m.add(s.trace_sq); });
      INFO(to_string(path) << " beta=" << to_int(b));
      CHECK(std::abs(m.mean - oracle::expected_trace_moment(8, b)) <= 4.0 * m.stderr_mean());
    }
  }
}

TEST_CASE("GUE N = 2 matches the exact two-point law") {
  // Weight |d|^2 e^{-4 (x1^2 + x2^2)} = |d|^2 e^{-2 (s^2 + d^2)} with s = x1 + x2,
  // d = x2 - x1, so the gap has density ~ d^2 e^{-2 d^2}: d^2 ~ Gamma(3/2, 1/2).
  std::vector<double> gaps;
  for (std::size_t i = 0; i < 20000; ++i) {
    RngStream rng = RngStream::for_index(303, i);
    const auto s = sample_unconstrained({2, Beta::Unitary}, rng, SamplerPath::Dense);
    gaps.push_back(s.eigenvalues[1] - s.eigenvalues[0]);
  }
  std::mt19937_64 eng(99);
  std::gamma_distribution<double> g(1.5, 0.5);
  std::vector<double> oracle_gaps;
  for (int i = 0; i < 20000; ++i) oracle_gaps.push_back(std::sqrt(g(eng)));
  const auto ks = stats::ks_two_sample(gaps, oracle_gaps);
  INFO("D = " << ks.statistic << " p = " << ks.p_value);
  CHECK(ks.p_value >= 1e-3);
}

TEST_CASE("tridiagonal and dense paths agree on the largest eigenvalue") {
  std::vector<double> dense, tri;
  for (std::size_t i = 0; i < 20000; ++i) {
    RngStream r1 = RngStream::for_index(404, i);
    RngStream r2 = RngStream::for_index(505, i);
    dense.push_back(sample_unconstrained({16, Beta::Unitary}, r1, SamplerPath::Dense).eigenvalues.back());
    tri.push_back(sample_unconstrained({16, Beta::Unitary}, r2, SamplerPath::Tridiagonal).eigenvalues.back());
  }
  const auto ks = stats::ks_two_sample(dense, tri);
  INFO("D = " << ks.statistic << " p = " << ks.p_value);
  CHECK(ks.p_value >= 1e-3);
}

TEST_CASE("GSE dense path produces Kramers pairs") {
  for (std::size_t i = 0; i < 50; ++i) {
    RngStream rng = RngStream::for_index(606, i);
    const auto raw = detail::dense_gse_raw(6, rng);
    REQUIRE(raw.size() == 12);
    for (int k = 0; k < 6; ++k) CHECK(std::abs(raw[2 * k] - raw[2 * k + 1]) <= 1e-8);
  }
}

TEST_CASE("samples are sorted") {
  for (SamplerPath path : {SamplerPath::Dense, SamplerPath::Tridiagonal}) {
    for (Beta b : {Beta::Orthogonal, Beta::Unitary, Beta::Symplectic}) {
      RngStream rng(17);
      const auto s = sample_unconstrained({12, b}, rng, path);
      CHECK(s.eigenvalues.size() == 12);
      CHECK(std::is_sorted(s.eigenvalues.begin(), s.eigenvalues.end()));
    }
  }
}

TEST_CASE("tridiagonal sum of squares equals the trace of T^2") {
  RngStream rng(23);
  const auto t = detail::draw_tridiagonal(30, Beta::Orthogonal, rng);
  const auto ev = detail::tridiagonal_eigenvalues(t, 23);
  CHECK_THAT(detail::sum_sq(ev), WithinRel(t.trace_sq(), 1e-12));
}

TEST_CASE("windowed eigenvalues equal the full spectrum restricted to the window") {
  for (Beta b : {Beta::Orthogonal, Beta::Unitary, Beta::Symplectic}) {
    for (std::size_t i = 0; i < 30; ++i) {
      RngStream rng = RngStream::for_index(707, i);
      const auto t = detail::draw_tridiagonal(120, b, rng);
      const auto full = detail::tridiagonal_eigenvalues(t, 0);
      const auto win = detail::tridiagonal_eigenvalues_in(t, -0.1, 0.25);
      std::vector<double> expect;
      for (double x : full) {
        if (x >= -0.1 && x <= 0.25) expect.push_back(x);
      }
      REQUIRE(win.size() == expect.size());
      for (std::size_t k = 0; k < win.size(); ++k) CHECK_THAT(win[k], WithinAbs(expect[k], 1e-13));
    }
  }
}

TEST_CASE("windowed constrained draws match the full draw with the same seed") {
  for (Constraint c : {Constraint::Unconstrained, Constraint::FixedTrace, Constraint::BoundedTrace}) {
    const EnsembleSpec spec{80, Beta::Unitary, c};
    RngStream r1(31), r2(31);
    const auto full = sample(spec, r1, {SamplerPath::Tridiagonal});
    const auto win = sample(spec, r2, {SamplerPath::Tridiagonal, Interval{0.2, 0.5}});
    REQUIRE(win.coverage.has_value());
    CHECK_FALSE(win.is_complete());
    std::vector<double> expect;
    for (double x : full.eigenvalues) {
      if (x >= 0.2 && x <= 0.5) expect.push_back(x);
    }
    REQUIRE(win.eigenvalues.size() == expect.size());
    for (std::size_t k = 0; k < expect.size(); ++k) CHECK_THAT(win.eigenvalues[k], WithinAbs(expect[k], 1e-13));
    CHECK_THAT(win.trace_sq, WithinRel(full.trace_sq, 1e-12));
  }
}

TEST_CASE("fixed-trace norm invariant") {
  for (Beta b : {Beta::Orthogonal, Beta::Unitary, Beta::Symplectic}) {
    for (SamplerPath path : {SamplerPath::Dense, SamplerPath::Tridiagonal}) {
      const EnsembleSpec spec{20, b, Constraint::FixedTrace, 1.7};
      for (std::size_t i = 0; i < 200; ++i) {
        RngStream rng = RngStream::for_index(808, i);
        const auto s = sample(spec, rng, {path});
        CHECK(std::abs(detail::sum_sq(s.eigenvalues) / (1.7 * 1.7) - 1.0) <= 1e-12);
      }
    }
  }
}

TEST_CASE("bounded-trace support invariant") {
  const EnsembleSpec spec{20, Beta::Orthogonal, Constraint::BoundedTrace};
  const double r2 = spec.effective_radius() * spec.effective_radius();
  for (std::size_t i = 0; i < 500; ++i) {
    RngStream rng = RngStream::for_index(909, i);
    const auto s = sample(spec, rng);
    CHECK(detail::sum_sq(s.eigenvalues) <= r2 * (1.0 + 1e-14));
  }
}

TEST_CASE("bounded trace with N = 1 has a uniform radius") {
  const EnsembleSpec spec{1, Beta::Unitary, Constraint::BoundedTrace, 2.0};
  std::vector<double> u;
  for (std::size_t i = 0; i < 20000; ++i) {
    RngStream rng = RngStream::for_index(111, i);
    u.push_back(std::abs(sample(spec, rng).eigenvalues[0]) / 2.0);
  }
  CHECK(stats::ks_one_sample(u, [](double x) { return std::clamp(x, 0.0, 1.0); }).p_value >= 1e-3);
}

TEST_CASE("bounded-trace radial law (|x|/r)^N_beta is uniform") {
  const EnsembleSpec spec{4, Beta::Unitary, Constraint::BoundedTrace};
  const double nb = effective_dimension(4, Beta::Unitary);
  std::vector<double> v;
  for_each_sample(spec, 100000, 222, {}, [&](const SpectrumSample& s) {
    v.push_back(std::pow(std::sqrt(s.trace_sq) / spec.effective_radius(), nb));
  });
  CHECK(stats::ks_one_sample(v, [](double x) { return std::clamp(x, 0.0, 1.0); }).p_value >= 1e-3);
}

TEST_CASE("fixed-trace samples scale with the radius") {
  // top eigenvalue / r at radius sqrt(N)/2 versus radius 1
  std::vector<double> a, b;
  for (std::size_t i = 0; i < 10000; ++i) {
    RngStream r1 = RngStream::for_index(333, i), r2 = RngStream::for_index(444, i);
    const EnsembleSpec s1{10, Beta::Orthogonal, Constraint::FixedTrace};
    const EnsembleSpec s2{10, Beta::Orthogonal, Constraint::FixedTrace, 1.0};
    a.push_back(sample(s1, r1).eigenvalues.back() / s1.effective_radius());
    b.push_back(sample(s2, r2).eigenvalues.back());
  }
  CHECK(stats::ks_two_sample(a, b).p_value >= 1e-3);
}

TEST_CASE("batches are deterministic and independent of partitioning") {
  const EnsembleSpec spec{10, Beta::Symplectic, Constraint::FixedTrace};
  BatchOptions one;
  BatchOptions four;
  four.workers = 4;
  const auto a = sample_batch(spec, 40, 77, one);
  const auto b = sample_batch(spec, 40, 77, four);
  BatchOptions first_half, second_half;
  second_half.first_index = 20;
  const auto h1 = sample_batch(spec, 20, 77, first_half);
  const auto h2 = sample_batch(spec, 20, 77, second_half);
  for (std::size_t i = 0; i < 40; ++i) {
    CHECK(a[i].eigenvalues == b[i].eigenvalues);
    CHECK(a[i].seed == b[i].seed);
    CHECK(a[i].eigenvalues == (i < 20 ? h1[i] : h2[i - 20]).eigenvalues);
  }
  RngStream rng = RngStream::for_index(77, 0);
  CHECK(sample_batch(spec, 1, 77)[0].eigenvalues == sample(spec, rng).eigenvalues);
}

TEST_CASE("per-index seeds are distinct") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t i = 0; i < 10000; ++i) seen.insert(derive_seed(5, i));
  CHECK(seen.size() == 10000);
}

TEST_CASE("batch argument validation") {
  CHECK_THROWS_AS(sample_batch({4, Beta::Unitary}, 0, 1), InvalidArgument);
  RngStream rng(1);
  CHECK_THROWS_AS(sample({4, Beta::Unitary}, rng, {SamplerPath::Dense, Interval{0.0, 1.0}}), InvalidArgument);
  CHECK_THROWS_AS(sample_fixed_trace({4, Beta::Unitary}, rng), InvalidArgument);
}
