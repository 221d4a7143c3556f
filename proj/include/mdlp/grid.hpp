#pragma once

namespace mdlp {

// Square render grid: n samples per axis at constant pitch, centred on the
// fiber axis. The standard grid divides the core diameter into 100 pixels
// (pitch a/50) and adds a 10-pixel margin per side, giving 121 samples over
// x, y in [-1.2a, +1.2a] with the centre sample exactly at 0.
struct RenderGrid {
  int n = 121;
  double pitch_um = 0.25;

  double coord_um(int i) const { return (i - (n - 1) / 2) * pitch_um; }
  double extent_um() const { return ((n - 1) / 2) * pitch_um; }
  double cell_area_um2() const { return pitch_um * pitch_um; }

  static RenderGrid standard(double core_radius_um) {
    return RenderGrid{121, core_radius_um / 50.0};
  }

  // Same span, `factor` times finer sampling (used by convergence checks).
  static RenderGrid refined(double core_radius_um, int factor) {
    return RenderGrid{120 * factor + 1, core_radius_um / (50.0 * factor)};
  }
};

}  // namespace mdlp
