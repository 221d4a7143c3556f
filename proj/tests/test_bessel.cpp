#include <cmath>
#include <initializer_list>

#include <doctest.h>

#include "mdlp/bessel.hpp"

// The eigenvalue solver leans on the standard-library cylindrical Bessel
// routines; these checks pin their accuracy on the argument ranges the
// dispersion equation and the radial profile actually use.

TEST_CASE("J Wronskian: J1(x) Y0(x) - J0(x) Y1(x) = 2/(pi x)") {
  double worst = 0;
  for (double x = 0.05; x < 5.0; x += 0.013) {
    const double lhs = mdlp::bessel::j1(x) * std::cyl_neumann(0.0, x) -
                       mdlp::bessel::j0(x) * std::cyl_neumann(1.0, x);
    worst = std::max(worst, std::abs(lhs * M_PI * x / 2.0 - 1.0));
  }
  CHECK(worst < 1e-12);
}

TEST_CASE("K Wronskian: x (I0 K1 + I1 K0) = 1") {
  double worst = 0;
  for (double x = 0.01; x < 13.0; x += 0.017) {
    const double lhs = std::cyl_bessel_i(0.0, x) * mdlp::bessel::k1(x) +
                       std::cyl_bessel_i(1.0, x) * mdlp::bessel::k0(x);
    worst = std::max(worst, std::abs(lhs * x - 1.0));
  }
  CHECK(worst < 1e-12);
}

TEST_CASE("recurrence J0(x) + J2(x) = 2 J1(x)/x") {
  for (double x : {0.3, 1.1, 2.4048, 3.1, 3.8, 4.5}) {
    const double lhs = mdlp::bessel::j0(x) + std::cyl_bessel_j(2.0, x);
    CHECK(lhs == doctest::Approx(2.0 * mdlp::bessel::j1(x) / x).epsilon(1e-12));
  }
}

TEST_CASE("recurrence K2(x) = K0(x) + 2 K1(x)/x") {
  for (double x : {0.2, 1.0, 4.0, 7.0, 12.0}) {
    const double lhs = std::cyl_bessel_k(2.0, x);
    CHECK(lhs == doctest::Approx(mdlp::bessel::k0(x) + 2.0 * mdlp::bessel::k1(x) / x)
                     .epsilon(1e-12));
  }
}

TEST_CASE("first zeros bracket the LP11 eigenvalue search") {
  // J0's first zero and J1's first zero, the endpoints of the search bracket.
  CHECK(std::abs(mdlp::bessel::j0(2.404825557695773)) < 1e-13);
  CHECK(std::abs(mdlp::bessel::j1(3.831705970207512)) < 1e-13);
  CHECK(mdlp::bessel::j1(0.0) == 0.0);
}
