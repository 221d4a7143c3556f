#pragma once

#include <string>

#include "mdlp/fiber_modes.hpp"
#include "mdlp/grid.hpp"
#include "mdlp/polarimetry.hpp"
#include "mdlp/stack.hpp"

namespace mdlp {

/// Solves the LP11 basis for a fiber, fixes its unit-power grid
/// normalization, precomputes the four eigenmode Jones fields on the render
/// grid, and rasterizes channel stacks. Immutable after construction and
/// safe to share across threads.
class Renderer {
 public:
  explicit Renderer(const FiberSpec& fiber, int refine = 1);

  const FiberSpec& fiber() const { return fiber_; }
  const Lp11Basis& basis() const { return basis_; }
  const RenderGrid& grid() const { return grid_; }

  /// Superposition of the eigenmodes on the full grid (cached fields).
  FieldMap superpose(const ModeCoefficients& coeffs) const;

  /// Full n x n x C stack of analyzer intensities.
  StackD render_full(const ModeCoefficients& coeffs, const ChannelSet& set) const;

  /// Eigenmode Jones components at pixel p (row-major), mode index 0..3.
  FieldSample mode_at(int mode, std::size_t p) const {
    return {ex_[mode][p], ey_[mode][p]};
  }

 private:
  FiberSpec fiber_;
  Lp11Basis basis_;
  RenderGrid grid_;
  std::array<std::vector<double>, 4> ex_, ey_;
};

/// Keep the x >= 0 columns (center column included): width n -> (n+1)/2.
/// Throws WrongWidth if the input width is even.
template <typename T>
Stack<T> crop_half(const Stack<T>& full);

/// Divide every channel by the single global max pixel of the stack.
/// Throws AllZeroStack.
template <typename T>
void normalize_stack(Stack<T>& stack);

/// Render -> crop -> normalize for a coefficient set: the canonical
/// (n x (n+1)/2 x C) network-input stack, in double precision.
StackD render_half_normalized(const Renderer& renderer, const ModeCoefficients& coeffs,
                              const ChannelSet& set);

/// Binary P5 PGM, 16-bit big-endian samples, max pixel scaled to 65535.
/// Throws AllZeroImage on an all-zero image and IoError on write failure.
void export_pgm(const std::string& path, const double* image, int h, int w);

extern template Stack<float> crop_half<float>(const Stack<float>&);
extern template Stack<double> crop_half<double>(const Stack<double>&);
extern template void normalize_stack<float>(Stack<float>&);
extern template void normalize_stack<double>(Stack<double>&);

}  // namespace mdlp
