#include "mdlp/fiber_modes.hpp"

#include <cmath>

#include "mdlp/bessel.hpp"

namespace mdlp {

void FiberSpec::validate() const {
  require(std::isfinite(core_radius_um) && core_radius_um > 0, Errc::invalid_argument,
          "core_radius_um must be > 0");
  require(std::isfinite(numerical_aperture) && numerical_aperture > 0, Errc::invalid_argument,
          "numerical_aperture must be > 0");
  require(std::isfinite(wavelength_um) && wavelength_um > 0, Errc::invalid_argument,
          "wavelength_um must be > 0");
}

double v_number(const FiberSpec& spec) {
  spec.validate();
  return 2.0 * M_PI * spec.core_radius_um * spec.numerical_aperture / spec.wavelength_um;
}

const char* mode_name(Mode m) {
  switch (m) {
    case Mode::TE01: return "TE01";
    case Mode::TM01: return "TM01";
    case Mode::HE21o: return "HE21o";
    case Mode::HE21e: return "HE21e";
  }
  return "?";
}

double lp11_dispersion(double u, double v) {
  const double w = std::sqrt(v * v - u * u);
  return u * bessel::j0(u) / bessel::j1(u) + w * bessel::k0(w) / bessel::k1(w);
}

Lp11Basis solve_lp11(const FiberSpec& spec) {
  const double v = v_number(spec);
  require(v > kLp11CutoffU, Errc::mode_not_guided, "LP11 not guided: V <= 2.405");

  // Bracket between the LP11 cutoff and the first zero of J1 (or V itself
  // when V lies inside that interval), backed off by a small epsilon so the
  // endpoint singularities are never evaluated.
  const double eps = 1e-9;
  double lo = kLp11CutoffU + eps;
  double hi = std::min(v, kJ1FirstZero) - eps;
  require(lo < hi, Errc::no_root_found, "empty bracket");

  double flo = lp11_dispersion(lo, v);
  double fhi = lp11_dispersion(hi, v);
  require(std::isfinite(flo) && std::isfinite(fhi) && flo * fhi < 0, Errc::no_root_found,
          "dispersion function has no sign change in the bracket");

  while (hi - lo > 1e-12) {
    const double mid = 0.5 * (lo + hi);
    const double fmid = lp11_dispersion(mid, v);
    if (flo * fmid <= 0) {
      hi = mid;
      fhi = fmid;
    } else {
      lo = mid;
      flo = fmid;
    }
  }

  Lp11Basis basis;
  basis.v = v;
  basis.u = std::abs(flo) < std::abs(fhi) ? lo : hi;
  basis.w = std::sqrt(v * v - basis.u * basis.u);
  basis.norm = 1.0;
  return basis;
}

double radial_profile(const Lp11Basis& basis, double r_over_a) {
  require(r_over_a >= 0, Errc::invalid_argument, "radius must be >= 0");
  double b;
  if (r_over_a <= 1.0) {
    b = bessel::j1(basis.u * r_over_a) / bessel::j1(basis.u);
  } else {
    b = bessel::k1(basis.w * r_over_a) / bessel::k1(basis.w);
  }
  return basis.norm * b;
}

FieldSample mode_field(const Lp11Basis& basis, Mode mode, double r_over_a, double theta) {
  const double b = radial_profile(basis, r_over_a);
  const double s = std::sin(theta);
  const double c = std::cos(theta);
  switch (mode) {
    case Mode::TE01: return {-b * s, b * c};
    case Mode::TM01: return {b * c, b * s};
    case Mode::HE21o: return {-b * s, -b * c};
    case Mode::HE21e: return {-b * c, b * s};
  }
  fail(Errc::invalid_argument, "unknown mode");
}

bool ModeCoefficients::all_zero() const {
  for (const auto& cn : c) {
    if (cn.real() != 0.0 || cn.imag() != 0.0) return false;
  }
  return true;
}

void ModeCoefficients::validate() const {
  require(c[0].imag() == 0.0, Errc::invalid_argument, "gauge requires y1 == 0");
  require(c[0].real() >= 0.0, Errc::invalid_argument, "gauge requires x1 >= 0");
  require(!all_zero(), Errc::all_zero_coefficients, "all four coefficients are zero");
}

ModeCoefficients ModeCoefficients::conjugated() const {
  ModeCoefficients out;
  for (int n = 0; n < 4; ++n) out.c[n] = std::conj(c[n]);
  return out;
}

FieldMap superpose(const Lp11Basis& basis, const FiberSpec& spec, const ModeCoefficients& coeffs,
                   const RenderGrid& grid) {
  // Intensities are well defined for any coefficients (gauge violations only
  // flip unobservable phases), so only the all-zero case is rejected here.
  require(!coeffs.all_zero(), Errc::all_zero_coefficients, "all four coefficients are zero");
  FieldMap f;
  f.h = f.w = grid.n;
  f.ex.assign(static_cast<std::size_t>(grid.n) * grid.n, cplx{});
  f.ey.assign(f.ex.size(), cplx{});
  const double a = spec.core_radius_um;
  for (int iy = 0; iy < grid.n; ++iy) {
    const double y = grid.coord_um(iy);
    for (int ix = 0; ix < grid.n; ++ix) {
      const double x = grid.coord_um(ix);
      const double r = std::hypot(x, y) / a;
      const double theta = std::atan2(y, x);
      cplx ex{}, ey{};
      for (int n = 0; n < 4; ++n) {
        const FieldSample e = mode_field(basis, kModes[n], r, theta);
        ex += coeffs.c[n] * e.ex;
        ey += coeffs.c[n] * e.ey;
      }
      const std::size_t p = f.index(iy, ix);
      f.ex[p] = ex;
      f.ey[p] = ey;
    }
  }
  return f;
}

double unit_power_norm(const Lp11Basis& basis, const FiberSpec& spec, const RenderGrid& grid) {
  // |E_n|^2 == B(r)^2 for every mode of the group, so one scale serves all.
  Lp11Basis unscaled = basis;
  unscaled.norm = 1.0;
  const double a = spec.core_radius_um;
  double power = 0.0;
  for (int iy = 0; iy < grid.n; ++iy) {
    const double y = grid.coord_um(iy);
    for (int ix = 0; ix < grid.n; ++ix) {
      const double x = grid.coord_um(ix);
      const double b = radial_profile(unscaled, std::hypot(x, y) / a);
      power += b * b;
    }
  }
  power *= grid.cell_area_um2();
  require(power > 0, Errc::invalid_argument, "degenerate grid power");
  return 1.0 / std::sqrt(power);
}

}  // namespace mdlp
