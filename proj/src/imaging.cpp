#include "mdlp/imaging.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>

namespace mdlp {

Renderer::Renderer(const FiberSpec& fiber, int refine) : fiber_(fiber) {
  require(refine >= 1, Errc::invalid_argument, "refine must be >= 1");
  grid_ = refine == 1 ? RenderGrid::standard(fiber.core_radius_um)
                      : RenderGrid::refined(fiber.core_radius_um, refine);
  basis_ = solve_lp11(fiber);
  basis_.norm = unit_power_norm(basis_, fiber_, grid_);

  const std::size_t npix = static_cast<std::size_t>(grid_.n) * grid_.n;
  for (int m = 0; m < 4; ++m) {
    ex_[m].resize(npix);
    ey_[m].resize(npix);
  }
  const double a = fiber_.core_radius_um;
  for (int iy = 0; iy < grid_.n; ++iy) {
    const double y = grid_.coord_um(iy);
    for (int ix = 0; ix < grid_.n; ++ix) {
      const double x = grid_.coord_um(ix);
      const double r = std::hypot(x, y) / a;
      const double theta = std::atan2(y, x);
      const std::size_t p = static_cast<std::size_t>(iy) * grid_.n + ix;
      for (int m = 0; m < 4; ++m) {
        const FieldSample e = mode_field(basis_, kModes[m], r, theta);
        ex_[m][p] = e.ex;
        ey_[m][p] = e.ey;
      }
    }
  }
}

FieldMap Renderer::superpose(const ModeCoefficients& coeffs) const {
  require(!coeffs.all_zero(), Errc::all_zero_coefficients, "all four coefficients are zero");
  FieldMap f;
  f.h = f.w = grid_.n;
  const std::size_t npix = ex_[0].size();
  f.ex.assign(npix, cplx{});
  f.ey.assign(npix, cplx{});
  for (std::size_t p = 0; p < npix; ++p) {
    cplx ex{}, ey{};
    for (int m = 0; m < 4; ++m) {
      ex += coeffs.c[m] * ex_[m][p];
      ey += coeffs.c[m] * ey_[m][p];
    }
    f.ex[p] = ex;
    f.ey[p] = ey;
  }
  return f;
}

StackD Renderer::render_full(const ModeCoefficients& coeffs, const ChannelSet& set) const {
  set.validate();
  return project_stack(set, superpose(coeffs));
}

template <typename T>
Stack<T> crop_half(const Stack<T>& full) {
  require(full.w % 2 == 1, Errc::wrong_width, "full stack width must be odd");
  const int half_w = (full.w + 1) / 2;
  const int x0 = full.w / 2;  // center column (x = 0)
  Stack<T> out(full.h, half_w, full.c);
  for (int y = 0; y < full.h; ++y) {
    const T* src = &full.v[(static_cast<std::size_t>(y) * full.w + x0) * full.c];
    T* dst = &out.v[static_cast<std::size_t>(y) * half_w * full.c];
    std::copy(src, src + static_cast<std::size_t>(half_w) * full.c, dst);
  }
  return out;
}

template <typename T>
void normalize_stack(Stack<T>& stack) {
  T max = 0;
  for (const T& x : stack.v) {
    if (x > max) max = x;
  }
  require(max > 0, Errc::all_zero_stack, "stack has no positive pixel");
  for (T& x : stack.v) x /= max;
}

StackD render_half_normalized(const Renderer& renderer, const ModeCoefficients& coeffs,
                              const ChannelSet& set) {
  StackD stack = crop_half(renderer.render_full(coeffs, set));
  normalize_stack(stack);
  return stack;
}

void export_pgm(const std::string& path, const double* image, int h, int w) {
  require(h > 0 && w > 0, Errc::invalid_argument, "empty image");
  const std::size_t npix = static_cast<std::size_t>(h) * w;
  double max = 0;
  for (std::size_t p = 0; p < npix; ++p) {
    if (image[p] > max) max = image[p];
  }
  require(max > 0, Errc::all_zero_image, "image has no positive pixel");

  std::ofstream out(path, std::ios::binary);
  require(out.good(), Errc::io_error, "cannot open " + path);
  out << "P5\n" << w << " " << h << "\n65535\n";
  std::vector<std::uint8_t> row(static_cast<std::size_t>(w) * 2);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double v = image[static_cast<std::size_t>(y) * w + x];
      long q = std::lround(v / max * 65535.0);
      if (q < 0) q = 0;
      if (q > 65535) q = 65535;
      row[2 * x] = static_cast<std::uint8_t>(q >> 8);  // big-endian per PGM
      row[2 * x + 1] = static_cast<std::uint8_t>(q & 0xff);
    }
    out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
  }
  out.flush();
  require(out.good(), Errc::io_error, "write failed: " + path);
}

template Stack<float> crop_half<float>(const Stack<float>&);
template Stack<double> crop_half<double>(const Stack<double>&);
template void normalize_stack<float>(Stack<float>&);
template void normalize_stack<double>(Stack<double>&);

}  // namespace mdlp
