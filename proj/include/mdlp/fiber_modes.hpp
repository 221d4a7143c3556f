#pragma once

#include <array>
#include <complex>
#include <vector>

#include "mdlp/errors.hpp"
#include "mdlp/grid.hpp"

namespace mdlp {

using cplx = std::complex<double>;

/// Step-index fiber and operating wavelength. Defaults describe a 25 um
/// core, NA 0.1 multimode fiber at 1064 nm.
struct FiberSpec {
  double core_radius_um = 12.5;
  double numerical_aperture = 0.1;
  double wavelength_um = 1.064;

  void validate() const;
};

/// Normalized frequency V = 2*pi*a*NA/lambda.
double v_number(const FiberSpec& spec);

// The four degenerate members of the LP11 group, in fixed order.
enum class Mode : int { TE01 = 1, TM01 = 2, HE21o = 3, HE21e = 4 };
inline constexpr std::array<Mode, 4> kModes = {Mode::TE01, Mode::TM01, Mode::HE21o, Mode::HE21e};
const char* mode_name(Mode m);

/// Solved LP11 scalar eigenpair. `norm` scales the shared radial profile so
/// that each eigenmode has unit power on the render grid it was solved for.
struct Lp11Basis {
  double u = 0.0;
  double w = 0.0;
  double v = 0.0;
  double norm = 1.0;
};

// Zeros of J0 and J1 bracketing the first azimuthal-order-1 branch.
inline constexpr double kLp11CutoffU = 2.404825557695773;
inline constexpr double kJ1FirstZero = 3.831705970207512;

/// Weakly-guiding LP eigenvalue function for azimuthal order 1:
/// u*J0(u)/J1(u) + w*K0(w)/K1(w) with w = sqrt(v^2 - u^2). A guided LP11
/// solution is a root with u in (2.405, 3.8317).
double lp11_dispersion(double u, double v);

/// Bisection solve of the dispersion equation. Deterministic; `norm` is left
/// at 1 (the renderer owns grid normalization).
/// Throws ModeNotGuided if v <= 2.405, NoRootFound if the bracket has no
/// sign change.
Lp11Basis solve_lp11(const FiberSpec& spec);

/// Shared LP11 radial amplitude: J1(u*rho)/J1(u) inside the core,
/// K1(w*rho)/K1(w) outside, continuous at rho = 1, scaled by basis.norm.
double radial_profile(const Lp11Basis& basis, double r_over_a);

/// Jones components at one point; all four eigenmode fields are real.
struct FieldSample {
  double ex = 0.0;
  double ey = 0.0;
};

FieldSample mode_field(const Lp11Basis& basis, Mode mode, double r_over_a, double theta);

/// The four complex coefficients C1..C4 under the gauge y1 = 0, x1 >= 0.
struct ModeCoefficients {
  std::array<cplx, 4> c{};

  void validate() const;  // gauge + not all zero
  ModeCoefficients conjugated() const;
  bool all_zero() const;
};

/// Complex Jones field sampled on a grid; row-major (y, x).
struct FieldMap {
  int h = 0, w = 0;
  std::vector<cplx> ex, ey;

  std::size_t index(int y, int x) const { return static_cast<std::size_t>(y) * w + x; }
};

/// Pointwise linear combination of the four eigenmodes on `grid`.
/// Throws AllZeroCoefficients.
FieldMap superpose(const Lp11Basis& basis, const FiberSpec& spec, const ModeCoefficients& coeffs,
                   const RenderGrid& grid);

/// Amplitude scale giving each eigenmode unit grid power on `grid`:
/// sum over pixels of (|ex|^2 + |ey|^2) * pitch^2 == 1.
double unit_power_norm(const Lp11Basis& basis, const FiberSpec& spec, const RenderGrid& grid);

}  // namespace mdlp
