#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "mdlp/dataset.hpp"
#include "mdlp/imaging.hpp"

namespace mdlp {

/// Multi-start damped least squares over the 7 free label reals.
struct LsqConfig {
  int starts = 32;
  int max_iterations = 200;
  double residual_tol = 1e-12;
  double step_tol = 1e-12;
  double lambda_init = 1e-3;   // Levenberg-Marquardt damping
  double lambda_scale = 10.0;
  std::uint64_t seed = 0;      // start points

  void validate() const;
};

struct DecompositionResult {
  LabelVector label;     // gauge-fixed, max-normalized
  double residual = 0;   // sum of squared pixel differences at `label`
  bool converged = false;
  // Distinct solutions tied with the best residual (gauge-fixed, label
  // distance > 1e-6 from the best and from each other). For LP-only channel
  // sets the conjugate solution shows up here.
  std::vector<std::pair<LabelVector, double>> alternates;
};

/// Sum of squared pixel differences between the canonical render of `label`
/// (render_full -> crop -> normalize) and an observed normalized stack.
/// Throws ShapeMismatch.
double residual(const Renderer& renderer, const LabelVector& label, const StackD& observed,
                const ChannelSet& set);

/// Analytic d(normalized pixels)/d(7 labels) at `label`, row-major
/// (h*(n+1)/2*C) x 7, with the normalizing max pixel frozen. Optionally also
/// returns the rendered normalized stack.
void jacobian(const Renderer& renderer, const LabelVector& label, const ChannelSet& set,
              std::vector<double>& J, StackD* rendered = nullptr);

/// Recover gauge-fixed coefficients from an observed normalized half stack.
/// Deterministic for a fixed config; reports converged=false when no start
/// met the tolerances (best effort result still returned).
DecompositionResult decompose(const Renderer& renderer, const StackD& observed,
                              const ChannelSet& set, const LsqConfig& cfg);

}  // namespace mdlp
