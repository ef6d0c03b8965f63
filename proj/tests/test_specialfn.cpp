#include <catch_amalgamated.hpp>

#include <boost/math/special_functions/airy.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "rtge/specialfn.hpp"

using namespace rtge;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

// Reference values computed with mpmath at 30 digits.
struct AiryRef {
  double x, ai, aip;
};

constexpr AiryRef kAiryRefs[] = {
    {-20.0, -0.17640612707798468959, 0.8928628567364712384},
    {-12.0, -0.066555175054373129474, 1.0231104533679707299},
    {-5.0, 0.35076100902411431979, 0.32719281855444313679},
    {-2.0, 0.22740742820168557599, 0.61825902074169104141},
    {1.0, 0.13529241631288141552, -0.15914744129679321279},
    {2.0, 0.034924130423274379135, -0.053090384433653631704},
    {4.5, 0.00033025032351430898366, -0.00071786656755750888869},
    {5.0, 0.00010834442813607441735, -0.000247413890868462476},
    {8.0, 4.6922076160992316256e-8, -1.3414392979067865743e-7},
    {10.0, 1.1047532552898685934e-10, -3.5206336767389236366e-10},
    {20.0, 1.6916728686705403136e-27, -7.5863916257483549605e-27},
    {40.0, 6.3657426585529149096e-75, -4.0300179776006780423e-74},
};

}  // namespace

TEST_CASE("Airy values at the origin") {
  CHECK_THAT(airy_ai(0.0), WithinRel(0.35502805388781723926, 1e-14));
  CHECK_THAT(airy_ai_prime(0.0), WithinRel(-0.25881940379280679840, 1e-14));
}

TEST_CASE("Airy reference values") {
  for (const auto& r : kAiryRefs) {
    INFO("x = " << r.x);
    CHECK_THAT(airy_ai(r.x), WithinRel(r.ai, 1e-10));
    CHECK_THAT(airy_ai_prime(r.x), WithinRel(r.aip, 1e-10));
  }
}

TEST_CASE("Airy agrees with Boost.Math across the domain") {
  for (double x = -20.0; x <= 40.0; x += 0.0625) {
    const double ai = boost::math::airy_ai(x);
    const double aip = boost::math::airy_ai_prime(x);
    INFO("x = " << x);
    if (std::abs(ai) > 1e-12) {
      CHECK_THAT(airy_ai(x), WithinRel(ai, 1e-10));
    } else {
      CHECK_THAT(airy_ai(x), WithinAbs(ai, 1e-10));
    }
    if (std::abs(aip) > 1e-12) {
      CHECK_THAT(airy_ai_prime(x), WithinRel(aip, 1e-10));
    } else {
      CHECK_THAT(airy_ai_prime(x), WithinAbs(aip, 1e-10));
    }
  }
}

TEST_CASE("Airy branches join continuously at the switchover points") {
  for (double x : {-8.0, -4.5, 3.0, 8.0}) {
    const double below = airy_ai(std::nextafter(x, -100.0));
    const double above = airy_ai(std::nextafter(x, 100.0));
    CHECK_THAT(below, WithinRel(above, 1e-12));
  }
}

TEST_CASE("Airy at x = 20 is tiny and positive") {
  const double v = airy_ai(20.0);
  CHECK(v > 0.0);
  CHECK(v < 1e-17);
}

TEST_CASE("Airy satisfies Ai'' = x Ai") {
  const double h = 1e-3;
  for (double x : {-10.0, -5.0, -2.0, -1.0, 0.0, 1.0, 2.0, 5.0, 10.0}) {
    const double d2 = (-airy_ai(x + 2 * h) + 16 * airy_ai(x + h) - 30 * airy_ai(x) + 16 * airy_ai(x - h) -
                       airy_ai(x - 2 * h)) /
                      (12 * h * h);
    INFO("x = " << x);
    CHECK_THAT(d2 - x * airy_ai(x), WithinAbs(0.0, 1e-7));
  }
}

TEST_CASE("Ai' matches a central difference of Ai") {
  const double h = 1e-5;
  CHECK_THAT((airy_ai(1.0 + h) - airy_ai(1.0 - h)) / (2 * h), WithinAbs(airy_ai_prime(1.0), 1e-7));
}

TEST_CASE("Ai is decreasing for x > 1") {
  double prev = airy_ai(1.0);
  for (double x = 1.05; x <= 40.0; x += 0.05) {
    const double v = airy_ai(x);
    CHECK(v < prev);
    prev = v;
  }
}

TEST_CASE("Airy functions reject arguments outside [-20, 40]") {
  CHECK_THROWS_AS(airy_ai(-20.5), DomainError);
  CHECK_THROWS_AS(airy_ai_prime(41.0), DomainError);
  CHECK_THROWS_AS(airy_tail_integral(std::nan("")), DomainError);
  CHECK_NOTHROW(airy_ai(-20.0));
  CHECK_NOTHROW(airy_ai(40.0));
}

TEST_CASE("Airy tail integral reference values") {
  CHECK_THAT(airy_tail_integral(0.0), WithinRel(1.0 / 3.0, 1e-13));
  const std::pair<double, double> refs[] = {
      {-20.0, 1.0450725859732517933}, {-5.0, 1.0512155378811609825}, {0.5, 0.187380028421476155},
      {1.0, 0.097015991416223553731}, {2.0, 0.020800577552653641681}, {5.0, 4.5743027415453846677e-5},
      {10.0, 3.4164317390540094304e-11},
  };
  for (const auto& [y, v] : refs) {
    INFO("y = " << y);
    CHECK_THAT(airy_tail_integral(y), WithinRel(v, 1e-10));
  }
  CHECK_THAT(airy_tail_integral(40.0), WithinAbs(0.0, 1e-15));
}

TEST_CASE("Airy tail integral at -20 matches 1 minus the left tail") {
  // int_{-inf}^{-20} Ai = int_a^{-20} Ai + int_{-inf}^a Ai with a = -120. The
  // first piece by Gauss-Legendre panels over Boost's Ai; the second from
  // Ai = Ai''/x integrated by parts: Ai'(a)/a + Ai(a)/a^2 + 2 Ai'(a)/a^4.
  const double a = -120.0;
  const double middle = quad::gauss_by_width<20>([](double x) { return boost::math::airy_ai(x); }, a, -20.0, 0.05);
  const double ai = boost::math::airy_ai(a), aip = boost::math::airy_ai_prime(a);
  const double far = aip / a + ai / (a * a) + 2.0 * aip / (a * a * a * a);
  CHECK_THAT(airy_tail_integral(-20.0), WithinAbs(1.0 - (middle + far), 1e-8));
}

TEST_CASE("Airy tail integral is strictly decreasing for y >= 0") {
  double prev = airy_tail_integral(0.0);
  for (double y = 0.1; y <= 30.0; y += 0.1) {
    const double v = airy_tail_integral(y);
    CHECK(v < prev);
    prev = v;
  }
}

TEST_CASE("Sine kernel primitive") {
  CHECK(sine_kernel_integral(0.0) == 0.0);
  CHECK_THAT(sine_kernel_integral(1e4), WithinAbs(0.5, 1e-4));
  CHECK_THAT(sine_kernel_integral(1.0), WithinRel(0.58948987223608363512, 1e-12));
  CHECK_THAT(sine_kernel_integral(3.0), WithinRel(0.53309323761827198255, 1e-12));
  CHECK_THAT(sine_kernel_integral(1e4), WithinRel(0.49998986788165629819, 1e-12));

  boost::math::quadrature::tanh_sinh<double> ts;
  for (double s : {0.3, 1.0, 2.5, 7.0}) {
    const double q = ts.integrate(
        [](double t) { return t == 0.0 ? 1.0 : std::sin(std::numbers::pi * t) / (std::numbers::pi * t); }, 0.0, s);
    INFO("s = " << s);
    CHECK_THAT(sine_kernel_integral(s), WithinAbs(q, 1e-10));
  }
}

TEST_CASE("Sine kernel primitive is exactly odd") {
  for (double s : {1e-9, 0.01, 0.7, 1.9, 2.0, 2.1, 13.0, 1e3}) {
    CHECK(sine_kernel_integral(-s) == -sine_kernel_integral(s));
  }
}

TEST_CASE("signum") {
  CHECK(signum(0.0) == 0.0);
  CHECK(signum(-0.0) == 0.0);
  CHECK(signum(3.2) == 1.0);
  CHECK(signum(-1e-300) == -1.0);
}

TEST_CASE("special functions are pure") {
  for (double x : {-13.7, -4.5, 0.3, 6.1, 33.0}) {
    CHECK(airy_ai(x) == airy_ai(x));
    CHECK(airy_tail_integral(x) == airy_tail_integral(x));
  }
}
