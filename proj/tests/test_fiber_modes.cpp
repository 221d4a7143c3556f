#include <cmath>
#include <complex>

#include <doctest.h>

#include "mdlp/fiber_modes.hpp"
#include "mdlp/dataset.hpp"
#include "mdlp/imaging.hpp"
#include "mdlp/rng.hpp"

using namespace mdlp;

namespace {

// Independent eigenvalue oracle: bisection on the cross-multiplied form
// u J0(u) K1(w) + w K0(w) J1(u), which shares no code with solve_lp11.
double oracle_lp11_u(double v) {
  auto f = [v](double u) {
    const double w = std::sqrt(v * v - u * u);
    return u * std::cyl_bessel_j(0.0, u) * std::cyl_bessel_k(1.0, w) +
           w * std::cyl_bessel_k(0.0, w) * std::cyl_bessel_j(1.0, u);
  };
  double lo = 2.404825557695773 + 1e-6;
  double hi = std::min(v, 3.831705970207512) - 1e-6;
  double flo = f(lo);
  REQUIRE(flo * f(hi) < 0);
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (flo * f(mid) <= 0) {
      hi = mid;
    } else {
      lo = mid;
      flo = f(lo);
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("v_number of the default fiber") {
  FiberSpec fiber;
  // 2*pi * 12.5 * 0.1 / 1.064
  CHECK(std::abs(v_number(fiber) - 7.3817) < 1e-3);

  FiberSpec doubled = fiber;
  doubled.wavelength_um *= 2.0;
  CHECK(v_number(doubled) == doctest::Approx(v_number(fiber) / 2.0).epsilon(1e-14));
}

TEST_CASE("degenerate fiber parameters are rejected") {
  FiberSpec bad;
  bad.core_radius_um = 0.0;
  CHECK_THROWS_AS(v_number(bad), Error);
  try {
    v_number(bad);
  } catch (const Error& e) {
    CHECK(e.code() == Errc::invalid_argument);
  }
}

TEST_CASE("solve_lp11 satisfies the dispersion relation") {
  FiberSpec fiber;
  const Lp11Basis basis = solve_lp11(fiber);
  CHECK(basis.u > 2.405);
  CHECK(basis.u < 3.8317);
  CHECK(std::abs(lp11_dispersion(basis.u, basis.v)) < 1e-10);
  // u^2 + w^2 = v^2 to 1e-10 relative
  CHECK(std::abs(basis.u * basis.u + basis.w * basis.w - basis.v * basis.v) <
        1e-10 * basis.v * basis.v);
  // independent oracle agreement
  CHECK(std::abs(basis.u - oracle_lp11_u(basis.v)) < 1e-9);

  // deterministic: bit-identical re-solve
  const Lp11Basis again = solve_lp11(fiber);
  CHECK(basis.u == again.u);
  CHECK(basis.w == again.w);
}

TEST_CASE("solve_lp11 below cutoff") {
  FiberSpec fiber;
  fiber.numerical_aperture = 0.01;  // v ~ 0.738
  try {
    solve_lp11(fiber);
    FAIL("expected ModeNotGuided");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::mode_not_guided);
  }
}

TEST_CASE("solve_lp11 with v inside the bracket") {
  FiberSpec fiber;
  fiber.numerical_aperture = 0.0408;  // v ~ 3.01
  const Lp11Basis basis = solve_lp11(fiber);
  CHECK(basis.v < 3.8317);
  CHECK(std::abs(lp11_dispersion(basis.u, basis.v)) < 1e-10);
  CHECK(std::abs(basis.u - oracle_lp11_u(basis.v)) < 1e-9);
}

TEST_CASE("radial profile: center zero, continuity, cladding decay") {
  const Renderer renderer{FiberSpec{}};
  const Lp11Basis& basis = renderer.basis();

  CHECK(radial_profile(basis, 0.0) == 0.0);

  const double inside = radial_profile(basis, 1.0);
  const double outside = radial_profile(basis, std::nextafter(1.0, 2.0));
  CHECK(std::abs(inside - outside) < 1e-12 * std::abs(inside));

  // monotone decay beyond the core
  double prev = std::abs(radial_profile(basis, 1.0));
  for (double rho = 1.25; rho <= 3.0; rho += 0.25) {
    const double cur = std::abs(radial_profile(basis, rho));
    CHECK(cur < prev);
    prev = cur;
  }
  CHECK(std::abs(radial_profile(basis, 3.0)) < std::abs(radial_profile(basis, 1.0)));
}

TEST_CASE("mode fields at theta = 0") {
  const Renderer renderer{FiberSpec{}};
  const Lp11Basis& basis = renderer.basis();
  const double b = radial_profile(basis, 0.7);

  const FieldSample te = mode_field(basis, Mode::TE01, 0.7, 0.0);
  CHECK(te.ex == 0.0);
  CHECK(te.ey == b);

  const FieldSample tm = mode_field(basis, Mode::TM01, 0.7, 0.0);
  CHECK(tm.ex == b);
  CHECK(tm.ey == 0.0);

  const FieldSample he_o = mode_field(basis, Mode::HE21o, 0.7, 0.0);
  CHECK(he_o.ex == 0.0);
  CHECK(he_o.ey == -b);

  const FieldSample he_e = mode_field(basis, Mode::HE21e, 0.7, 0.0);
  CHECK(he_e.ex == -b);
  CHECK(he_e.ey == 0.0);
}

TEST_CASE("eigenmodes have unit grid power and are orthogonal") {
  const Renderer renderer{FiberSpec{}};
  const RenderGrid& grid = renderer.grid();
  const double da = grid.cell_area_um2();
  const std::size_t npix = static_cast<std::size_t>(grid.n) * grid.n;

  double gram[4][4] = {};
  for (std::size_t p = 0; p < npix; ++p) {
    for (int m = 0; m < 4; ++m) {
      const FieldSample em = renderer.mode_at(m, p);
      for (int n = 0; n < 4; ++n) {
        const FieldSample en = renderer.mode_at(n, p);
        gram[m][n] += em.ex * en.ex + em.ey * en.ey;
      }
    }
  }
  for (int m = 0; m < 4; ++m) {
    for (int n = 0; n < 4; ++n) {
      gram[m][n] *= da;
      if (m == n) {
        CHECK(std::abs(gram[m][n] - 1.0) < 1e-9);  // unit power
      } else {
        CHECK(std::abs(gram[m][n]) < 1e-6);  // orthogonality vs unit diagonal
      }
    }
  }
}

TEST_CASE("superpose: identity, circular pair, linearity, conjugation") {
  const Renderer renderer{FiberSpec{}};

  ModeCoefficients e1;
  e1.c = {cplx{1, 0}, cplx{0, 0}, cplx{0, 0}, cplx{0, 0}};
  const FieldMap f1 = renderer.superpose(e1);
  const std::size_t npix = f1.ex.size();
  for (std::size_t p = 0; p < npix; p += 97) {
    const FieldSample te = renderer.mode_at(0, p);
    CHECK(f1.ex[p] == cplx{te.ex, 0.0});
    CHECK(f1.ey[p] == cplx{te.ey, 0.0});
  }

  // C = (1, i, 0, 0): |ex| = |ey| = B(r) at every point
  ModeCoefficients circ;
  circ.c = {cplx{1, 0}, cplx{0, 1}, cplx{0, 0}, cplx{0, 0}};
  const FieldMap fc = renderer.superpose(circ);
  const double a = renderer.fiber().core_radius_um;
  for (int iy = 0; iy < f1.h; iy += 13) {
    for (int ix = 0; ix < f1.w; ix += 11) {
      const std::size_t p = fc.index(iy, ix);
      const double r = std::hypot(renderer.grid().coord_um(ix), renderer.grid().coord_um(iy)) / a;
      const double b = std::abs(radial_profile(renderer.basis(), r));
      CHECK(std::abs(std::abs(fc.ex[p]) - b) < 1e-12);
      CHECK(std::abs(std::abs(fc.ey[p]) - b) < 1e-12);
    }
  }

  // linearity
  Rng rng(7);
  ModeCoefficients ca = sample_coefficients(rng), cb = sample_coefficients(rng);
  ModeCoefficients sum;
  for (int n = 0; n < 4; ++n) sum.c[n] = ca.c[n] + cb.c[n];
  const FieldMap fa = renderer.superpose(ca), fb = renderer.superpose(cb),
                 fs = renderer.superpose(sum);
  for (std::size_t p = 0; p < npix; p += 131) {
    CHECK(std::abs(fa.ex[p] + fb.ex[p] - fs.ex[p]) < 1e-12);
    CHECK(std::abs(fa.ey[p] + fb.ey[p] - fs.ey[p]) < 1e-12);
  }

  // conjugation symmetry is exact: eigenmode fields are real
  const FieldMap fconj = renderer.superpose(ca.conjugated());
  for (std::size_t p = 0; p < npix; p += 89) {
    CHECK(fconj.ex[p] == std::conj(fa.ex[p]));
    CHECK(fconj.ey[p] == std::conj(fa.ey[p]));
  }
}

TEST_CASE("superpose rejects all-zero coefficients") {
  const Renderer renderer{FiberSpec{}};
  ModeCoefficients zero;
  try {
    renderer.superpose(zero);
    FAIL("expected AllZeroCoefficients");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::all_zero_coefficients);
  }
}

TEST_CASE("free superpose matches the renderer's cached path") {
  FiberSpec fiber;
  const Renderer renderer{fiber};
  Rng rng(3);
  const ModeCoefficients c = sample_coefficients(rng);
  const FieldMap via_renderer = renderer.superpose(c);
  const FieldMap direct = superpose(renderer.basis(), fiber, c, renderer.grid());
  for (std::size_t p = 0; p < via_renderer.ex.size(); p += 101) {
    CHECK(via_renderer.ex[p] == direct.ex[p]);
    CHECK(via_renderer.ey[p] == direct.ey[p]);
  }
}
