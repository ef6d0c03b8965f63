#include <catch_amalgamated.hpp>

#include <algorithm>
#include <boost/math/special_functions/airy.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "rtge/estimators.hpp"
#include "rtge/oracle.hpp"

using namespace rtge;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

SpectrumSample fake_sample(std::vector<double> x, int n) {
  SpectrumSample s;
  s.eigenvalues = std::move(x);
  s.spec = {n, Beta::Unitary};
  s.trace_sq = detail::sum_sq(s.eigenvalues);
  return s;
}

double integrate(const std::function<double(double)>& g, double a, double b) {
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(g, a, b, 15, 1e-13);
}

}  // namespace

TEST_CASE("semicircle density") {
  CHECK_THAT(semicircle_density(0.0), WithinRel(2.0 / std::numbers::pi, 1e-15));
  CHECK(semicircle_density(1.0) == 0.0);
  CHECK(semicircle_density(-1.5) == 0.0);
  CHECK_THAT(integrate(semicircle_density, -1.0, 1.0), WithinAbs(1.0, 1e-6));
}

TEST_CASE("scaling window maps") {
  const auto z = ScalingWindow::zero(50);
  CHECK_THAT(z.to_x(1.0), WithinRel(std::numbers::pi / 100.0, 1e-15));
  const auto b = ScalingWindow::bulk(50, 0.5);
  CHECK_THAT(b.to_x(1.0), WithinRel(0.5 + 1.0 / (50.0 * (2.0 / std::numbers::pi) * std::sqrt(0.75)), 1e-14));
  const auto e = ScalingWindow::edge(8);
  CHECK_THAT(e.to_x(0.0), WithinAbs(1.0, 1e-15));
  CHECK_THAT(e.to_x(-2.0), WithinRel(1.0 - 2.0 / (2.0 * 4.0), 1e-15));
  const auto l = ScalingWindow::edge(8, true);
  CHECK_THAT(l.to_x(1.0), WithinRel(-1.0 - 1.0 / 8.0, 1e-15));
  CHECK(e.kernel_family() == KernelFamily::Airy);
  CHECK(b.kernel_family() == KernelFamily::Sine);

  for (const auto& w : {z, b, e, l}) {
    for (double t : {-3.0, -0.4, 0.0, 1.7, 5.0}) CHECK_THAT(w.to_t(w.to_x(t)), WithinAbs(t, 1e-14 * (1 + std::abs(t))));
    const Interval r = w.x_range({-1.0, 2.0});
    CHECK(r.lo < r.hi);
  }
}

TEST_CASE("scaling window validation") {
  CHECK_THROWS_AS(ScalingWindow::bulk(10, 1.0), InvalidArgument);
  CHECK_THROWS_AS(ScalingWindow::bulk(10, -1.2), InvalidArgument);
  CHECK_THROWS_AS(ScalingWindow::zero(0), InvalidArgument);
}

TEST_CASE("bumps have unit mass and the advertised support") {
  for (double r : {0.5, 1.5, 2.0}) {
    for (const auto& g : {gaussian_bump(r, 0.3), spline_bump(r, 0.3)}) {
      auto h = [&](double t) {
        const double p[1] = {t};
        return g(p);
      };
      INFO(g.id << " R = " << r);
      CHECK_THAT(integrate(h, 0.3 - r, 0.3 + r), WithinAbs(1.0, 1e-10));
      const double out[1] = {0.3 + r + 1e-9};
      CHECK(g(out) == 0.0);
      const double edge[1] = {0.3 - r};
      CHECK_THAT(g(edge), WithinAbs(0.0, 1e-15));
    }
  }
}

TEST_CASE("test function factory") {
  CHECK(make_test_function("gauss", 1.0, 2).arity == 2);
  CHECK(make_test_function("one", 1.0, 3).id == "one");
  CHECK_THROWS_AS(make_test_function("box", 1.0, 1), InvalidArgument);
  CHECK_THROWS_AS(gaussian_bump(0.0), InvalidArgument);
}

TEST_CASE("ordered tuple sums with f = 1 count tuples") {
  const std::vector<double> t = {-0.3, 0.1, 0.4, 0.9, 1.2};
  CHECK(ordered_tuple_sum(indicator(1), t) == 5.0);
  CHECK(ordered_tuple_sum(indicator(2), t) == 20.0);
  CHECK(ordered_tuple_sum(indicator(3), t) == 60.0);
  CHECK(ordered_tuple_sum(indicator(3), std::vector<double>{1.0, 2.0}) == 0.0);
}

TEST_CASE("ordered tuple sum is invariant under permutation of the input") {
  TestFunction f;
  f.arity = 2;
  f.eval = [](std::span<const double> p) { return std::exp(p[0]) * (1.0 + p[1] * p[1]) + p[0] * p[1]; };
  std::vector<double> t = {0.1, -0.7, 0.35, 1.1};
  const double base = ordered_tuple_sum(f, t);
  std::sort(t.begin(), t.end());
  do {
    CHECK_THAT(ordered_tuple_sum(f, t), WithinRel(base, 1e-14));
  } while (std::next_permutation(t.begin(), t.end()));
}

TEST_CASE("estimator with f = 1 recovers N and N(N - 1)") {
  const EnsembleSpec spec{7, Beta::Orthogonal, Constraint::FixedTrace};
  const auto samples = sample_batch(spec, 50, 3);
  const auto w = ScalingWindow::zero(7);
  const auto e1 = estimate_correlation_integral(samples, indicator(1), w);
  const auto e2 = estimate_correlation_integral(samples, indicator(2), w);
  CHECK(e1.value == 7.0);
  CHECK(e1.std_error == 0.0);
  CHECK(e2.value == 42.0);
  CHECK(e2.samples == 50);
}

TEST_CASE("estimator rejects inconsistent input") {
  const auto w = ScalingWindow::zero(3);
  std::vector<SpectrumSample> mixed = {fake_sample({0.0, 0.1, 0.2}, 3), fake_sample({0.0, 0.1, 0.2, 0.3}, 4)};
  CHECK_THROWS_AS(estimate_correlation_integral(mixed, indicator(1), w), InvalidArgument);
  std::vector<SpectrumSample> small = {fake_sample({0.0, 0.1}, 2)};
  CHECK_THROWS_AS(estimate_correlation_integral(small, indicator(3), ScalingWindow::zero(2)), InvalidArgument);
  CHECK_THROWS_AS(estimate_correlation_integral(small, indicator(1), w), InvalidArgument);
  std::vector<SpectrumSample> none;
  CHECK_THROWS_AS(estimate_correlation_integral(none, indicator(1), w), InvalidArgument);

  SpectrumSample partial = fake_sample({0.0}, 3);
  partial.coverage = Interval{-0.01, 0.01};
  std::vector<SpectrumSample> windowed = {partial};
  CHECK_THROWS_AS(estimate_correlation_integral(windowed, gaussian_bump(2.0), w), InvalidArgument);
}

TEST_CASE("windowed and full estimates agree sample by sample") {
  const EnsembleSpec spec{60, Beta::Symplectic, Constraint::FixedTrace};
  const auto f = product(gaussian_bump(1.5), 2);
  const auto w = ScalingWindow::zero(60);
  BatchOptions full;
  full.sampler.path = SamplerPath::Tridiagonal;
  const auto samples = sample_batch(spec, 200, 12, full);
  const auto a = estimate_correlation_integral(samples, f, w);
  const auto b = estimate_correlation_integral(spec, 200, 12, f, w);
  CHECK_THAT(b.value, WithinRel(a.value, 1e-12));
}

TEST_CASE("estimates are bit-identical across worker counts") {
  const EnsembleSpec spec{30, Beta::Unitary, Constraint::BoundedTrace};
  const auto f = product(gaussian_bump(1.5), 2);
  BatchOptions one, three;
  three.workers = 3;
  const auto a = estimate_correlation_integral(spec, 500, 8, f, ScalingWindow::zero(30), one);
  const auto b = estimate_correlation_integral(spec, 500, 8, f, ScalingWindow::zero(30), three);
  CHECK(a.value == b.value);
  CHECK(a.std_error == b.std_error);
}

TEST_CASE("one-point estimate matches the Hermite kernel for small GUE") {
  // Unconstrained GUE with N = 6 at the zero window against int g(t) K_N(x, x) dx/dt dt.
  const int n = 6;
  const auto w = ScalingWindow::zero(n);
  const auto g = gaussian_bump(2.0);
  const double exact = integrate(
      [&](double t) {
        const double p[1] = {t};
        const double x = w.to_x(t);
        return g(p) * oracle::hermite_kernel_gue(n, x, x) * w.jacobian();
      },
      -2.0, 2.0);
  const auto e = estimate_correlation_integral({n, Beta::Unitary}, 100000, 44, g, w);
  INFO("estimate " << e.value << " +- " << e.std_error << " exact " << exact);
  CHECK(std::abs(e.value - exact) <= 4.0 * e.std_error);
}

TEST_CASE("two-point estimate matches the Hermite determinant for small GUE") {
  const int n = 5;
  const auto w = ScalingWindow::edge(n);
  const auto f = product(gaussian_bump(2.0), 2);
  const double j = w.jacobian();
  const double exact = integrate(
      [&](double s) {
        return integrate(
            [&](double t) {
              const double p[2] = {s, t};
              const double x[2] = {w.to_x(s), w.to_x(t)};
              return f(p) * oracle::hermite_correlation(n, x) * j * j;
            },
            -2.0, 2.0);
      },
      -2.0, 2.0);
  const auto e = estimate_correlation_integral({n, Beta::Unitary}, 100000, 45, f, w);
  INFO("estimate " << e.value << " +- " << e.std_error << " exact " << exact);
  CHECK(std::abs(e.value - exact) <= 4.0 * e.std_error);
}

TEST_CASE("density histogram") {
  const EnsembleSpec spec{40, Beta::Unitary};
  const auto samples = sample_batch(spec, 300, 9);
  const auto h = empirical_density(samples, 48, {-1.2, 1.2});
  CHECK(h.bins() == 48);
  CHECK_THAT(h.width(), WithinRel(0.05, 1e-14));
  CHECK_THAT(h.center(0), WithinRel(-1.175, 1e-14));
  double mass = 0.0;
  for (double v : h.values) mass += v * h.width();
  CHECK_THAT(mass, WithinRel(h.fraction_in_range, 1e-12));
  CHECK(h.fraction_in_range > 0.999);
  CHECK_THROWS_AS(DensityAccumulator(0, {0.0, 1.0}), InvalidArgument);
  CHECK_THROWS_AS(DensityAccumulator(4, {1.0, 1.0}), InvalidArgument);
}

TEST_CASE("bounded-trace spectra stay inside the ball") {
  const EnsembleSpec spec{25, Beta::Symplectic, Constraint::BoundedTrace};
  const auto samples = sample_batch(spec, 200, 10);
  const double r = spec.effective_radius();
  for (const auto& s : samples) {
    for (double x : s.eigenvalues) CHECK(std::abs(x) <= r);
  }
}

TEST_CASE("sine one-point prediction is the mass of the test function") {
  for (Beta b : {Beta::Orthogonal, Beta::Unitary, Beta::Symplectic}) {
    CHECK_THAT(predicted_integral(gaussian_bump(1.5), {KernelFamily::Sine, b}, 1e-12), WithinAbs(1.0, 1e-9));
    CHECK_THAT(predicted_integral(spline_bump(1.0, 0.4), {KernelFamily::Sine, b}, 1e-12), WithinAbs(1.0, 1e-9));
  }
}

TEST_CASE("Airy one-point prediction matches the diagonal Airy kernel") {
  const auto g = gaussian_bump(2.0);
  const double exact = integrate(
      [&](double t) {
        const double p[1] = {t};
        const double ai = boost::math::airy_ai(t), aip = boost::math::airy_ai_prime(t);
        return g(p) * (aip * aip - t * ai * ai);
      },
      -2.0, 2.0);
  CHECK_THAT(predicted_integral(g, {KernelFamily::Airy, Beta::Unitary}, 1e-10), WithinAbs(exact, 1e-8));
}

TEST_CASE("sine two-point prediction for beta = 2 matches 1 - sinc^2") {
  const auto g = gaussian_bump(1.5);
  const auto f = product(g, 2);
  const double pi = std::numbers::pi;
  const double exact = integrate(
      [&](double s) {
        return integrate(
            [&](double t) {
              const double p[2] = {s, t};
              const double d = pi * (s - t);
              const double sinc = d == 0.0 ? 1.0 : std::sin(d) / d;
              return f(p) * (1.0 - sinc * sinc);
            },
            -1.5, 1.5);
      },
      -1.5, 1.5);
  CHECK_THAT(predicted_integral(f, {KernelFamily::Sine, Beta::Unitary}, 1e-10), WithinAbs(exact, 1e-8));
}

TEST_CASE("two-point predictions are converged") {
  const auto f = product(spline_bump(2.0), 2);
  for (KernelKind k : {KernelKind{KernelFamily::Sine, Beta::Orthogonal}, KernelKind{KernelFamily::Sine, Beta::Unitary},
                       KernelKind{KernelFamily::Sine, Beta::Symplectic}, KernelKind{KernelFamily::Airy, Beta::Unitary}}) {
    const double coarse = predicted_integral(f, k, 1e-5);
    const double fine = predicted_integral(f, k, 1e-8);
    CHECK_THAT(coarse, WithinAbs(fine, 1e-5));
  }
}

TEST_CASE("prediction validation") {
  CHECK_THROWS_AS(predicted_integral(indicator(1), {KernelFamily::Sine, Beta::Unitary}), InvalidArgument);
  CHECK_THROWS_AS(predicted_integral(product(gaussian_bump(1.0), 3), {KernelFamily::Sine, Beta::Unitary}),
                  InvalidArgument);
}
