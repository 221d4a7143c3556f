#pragma once

#include <array>
#include <functional>
#include <vector>

#include "mdlp/dataset.hpp"
#include "mdlp/imaging.hpp"

namespace mdlp {

/// Table-style evaluation record. Correlations are over the seven canonical
/// channels re-rendered from the actual and predicted labels; corr_mean is
/// the unweighted mean of the seven per-channel means.
struct MetricsReport {
  double label_mae = 0;
  double label_rms = 0;
  double rho_mae = 0;
  double rho_rms = 0;
  double phase_mae_over_2pi = 0;
  double corr_full = 0;
  double corr_mean = 0;
  std::array<double, 7> corr_channel{};
  long long n_samples = 0;
  long long n_ambiguous = 0;  // baseline predictor only
};

struct SampleMetrics {
  long long sample_id = 0;
  double label_mae = 0;
  double label_rms = 0;
  double rho_rms = 0;
  double phase_mae_over_2pi = 0;
  double corr_full = 0;
  double corr_mean = 0;
  bool ambiguous = false;
};

/// Mean |dz| and sqrt(mean dz^2) over the 7 entries. Throws LengthMismatch.
std::pair<double, double> label_errors(const std::vector<double>& z_actual,
                                       const std::vector<double>& z_predicted);

struct RhoPhiErrors {
  double rho_mae = 0;
  double rho_rms = 0;
  double phase_mae_over_2pi = 0;
  int phase_terms = 0;  // modes 2..4 with |C| >= 1e-3 on both sides
};

/// Weight errors over modes 1..4 and phase errors over modes 2..4; the phase
/// of a mode with |C| < 1e-3 on either side is skipped. Phases come from
/// arg(C_a/C_p) wrapped to (-pi, pi], reported divided by 2*pi.
RhoPhiErrors rho_phi_errors(const ModeCoefficients& actual, const ModeCoefficients& predicted);

/// Normalized inner product of two nonnegative images: sum(a*b) /
/// sqrt(sum(a^2)*sum(b^2)). Throws AllZeroImage, DimensionMismatch.
double field_correlation(const std::vector<double>& a, const std::vector<double>& b);

/// Per-sample losses -> indices of the rank ceil(N/4), ceil(N/2), ceil(3N/4)
/// smallest entries (ties broken by ascending index). Throws TooFewSamples.
std::array<long long, 3> quartile_examples(const std::vector<double>& losses);

/// Prediction hook: label vector for sample i, plus an ambiguity flag for
/// predictors that can report near-tie solutions.
using Predictor =
    std::function<std::array<double, 7>(long long i, const float* stack, bool* ambiguous)>;

struct EvalResult {
  MetricsReport summary;
  std::vector<SampleMetrics> per_sample;
  std::array<long long, 3> quartiles{};  // by per-sample label MAE
};

/// Run a predictor over a dataset: per-sample label/weight/phase errors and
/// the seven canonical-channel correlations of full-grid re-renders.
EvalResult evaluate(const Renderer& renderer, const Dataset& data, const Predictor& predict);

}  // namespace mdlp
