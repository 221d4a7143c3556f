#include "mdlp/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mdlp/parallel.hpp"

namespace mdlp {

std::pair<double, double> label_errors(const std::vector<double>& z_actual,
                                       const std::vector<double>& z_predicted) {
  require(z_actual.size() == 7 && z_predicted.size() == 7, Errc::length_mismatch,
          "label vectors must have 7 entries");
  double abs_sum = 0, sq_sum = 0;
  for (int k = 0; k < 7; ++k) {
    const double d = z_actual[k] - z_predicted[k];
    abs_sum += std::abs(d);
    sq_sum += d * d;
  }
  return {abs_sum / 7.0, std::sqrt(sq_sum / 7.0)};
}

RhoPhiErrors rho_phi_errors(const ModeCoefficients& actual, const ModeCoefficients& predicted) {
  RhoPhiErrors e;
  double abs_sum = 0, sq_sum = 0;
  for (int n = 0; n < 4; ++n) {
    const double d = std::abs(actual.c[n]) - std::abs(predicted.c[n]);
    abs_sum += std::abs(d);
    sq_sum += d * d;
  }
  e.rho_mae = abs_sum / 4.0;
  e.rho_rms = std::sqrt(sq_sum / 4.0);

  double phase_sum = 0;
  for (int n = 1; n < 4; ++n) {  // modes 2..4; mode 1 is gauge-zero on both sides
    if (std::abs(actual.c[n]) < 1e-3 || std::abs(predicted.c[n]) < 1e-3) continue;
    const double dphi = std::arg(actual.c[n] * std::conj(predicted.c[n]));
    phase_sum += std::abs(dphi);
    e.phase_terms += 1;
  }
  e.phase_mae_over_2pi = e.phase_terms > 0 ? phase_sum / e.phase_terms / (2.0 * M_PI) : 0.0;
  return e;
}

double field_correlation(const std::vector<double>& a, const std::vector<double>& b) {
  require(a.size() == b.size() && !a.empty(), Errc::dimension_mismatch, "image size mismatch");
  double ab = 0, aa = 0, bb = 0;
  for (std::size_t p = 0; p < a.size(); ++p) {
    ab += a[p] * b[p];
    aa += a[p] * a[p];
    bb += b[p] * b[p];
  }
  require(aa > 0 && bb > 0, Errc::all_zero_image, "correlation of an all-zero image");
  return ab / std::sqrt(aa * bb);
}

std::array<long long, 3> quartile_examples(const std::vector<double>& losses) {
  const long long n = static_cast<long long>(losses.size());
  require(n >= 4, Errc::too_few_samples, "need at least 4 samples for quartiles");
  std::vector<long long> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](long long a, long long b) {
    return losses[a] != losses[b] ? losses[a] < losses[b] : a < b;
  });
  auto rank = [&](long long num, long long den) { return (num + den - 1) / den; };
  return {idx[rank(n, 4) - 1], idx[rank(n, 2) - 1], idx[rank(3 * n, 4) - 1]};
}

EvalResult evaluate(const Renderer& renderer, const Dataset& data, const Predictor& predict) {
  const long long n = data.count();
  require(n > 0, Errc::invalid_argument, "empty dataset");
  const ChannelSet canonical = ChannelSet::n7();

  EvalResult result;
  result.per_sample.resize(n);
  std::vector<std::array<double, 7>> corr(n);
  std::vector<RhoPhiErrors> rhophi(n);
  std::vector<double> mae(n), msq(n);

  parallel_for(0, n, [&](long long i) {
    LabelVector za;
    for (int k = 0; k < 7; ++k) za.z[k] = data.label(i)[k];
    bool ambiguous = false;
    const std::array<double, 7> zp = predict(i, data.stack(i), &ambiguous);

    double abs_sum = 0, sq_sum = 0;
    for (int k = 0; k < 7; ++k) {
      const double d = za.z[k] - zp[k];
      abs_sum += std::abs(d);
      sq_sum += d * d;
    }
    mae[i] = abs_sum / 7.0;
    msq[i] = sq_sum / 7.0;

    LabelVector zpl;
    for (int k = 0; k < 7; ++k) zpl.z[k] = zp[k];
    const ModeCoefficients ca = decode_labels(za);
    const ModeCoefficients cp = decode_labels(zpl);
    rhophi[i] = rho_phi_errors(ca, cp);

    // Correlations of the full-grid canonical-channel re-renders; the
    // normalization cancels in the correlation, so raw intensities are used.
    const StackD ia = renderer.render_full(ca, canonical);
    std::array<double, 7> corr_i{};
    if (cp.all_zero()) {
      corr_i.fill(0.0);  // a degenerate prediction correlates with nothing
    } else {
      const StackD ip = renderer.render_full(cp, canonical);
      const std::size_t pixels = static_cast<std::size_t>(ia.h) * ia.w;
      std::vector<double> a(pixels), b(pixels);
      for (int ch = 0; ch < 7; ++ch) {
        for (std::size_t p = 0; p < pixels; ++p) {
          a[p] = ia.v[p * 7 + ch];
          b[p] = ip.v[p * 7 + ch];
        }
        corr_i[ch] = field_correlation(a, b);
      }
    }
    corr[i] = corr_i;

    SampleMetrics& s = result.per_sample[i];
    s.sample_id = i;
    s.label_mae = mae[i];
    s.label_rms = std::sqrt(msq[i]);
    s.rho_rms = rhophi[i].rho_rms;
    s.phase_mae_over_2pi = rhophi[i].phase_mae_over_2pi;
    s.corr_full = corr_i[0];
    double cm = 0;
    for (double c : corr_i) cm += c;
    s.corr_mean = cm / 7.0;
    s.ambiguous = ambiguous;
  });

  // Aggregation in fixed index order.
  MetricsReport& m = result.summary;
  m.n_samples = n;
  double mae_acc = 0, msq_acc = 0, rho_abs = 0, rho_sq = 0, phase_acc = 0;
  long long phase_samples = 0;
  std::array<double, 7> corr_acc{};
  for (long long i = 0; i < n; ++i) {
    mae_acc += mae[i];
    msq_acc += msq[i];
    rho_abs += rhophi[i].rho_mae;
    rho_sq += rhophi[i].rho_rms * rhophi[i].rho_rms;
    if (rhophi[i].phase_terms > 0) {
      phase_acc += rhophi[i].phase_mae_over_2pi;
      phase_samples += 1;
    }
    for (int ch = 0; ch < 7; ++ch) corr_acc[ch] += corr[i][ch];
    m.n_ambiguous += result.per_sample[i].ambiguous ? 1 : 0;
  }
  m.label_mae = mae_acc / n;
  m.label_rms = std::sqrt(msq_acc / n);
  m.rho_mae = rho_abs / n;
  m.rho_rms = std::sqrt(rho_sq / n);
  m.phase_mae_over_2pi = phase_samples > 0 ? phase_acc / phase_samples : 0.0;
  for (int ch = 0; ch < 7; ++ch) m.corr_channel[ch] = corr_acc[ch] / n;
  m.corr_full = m.corr_channel[0];
  double cm = 0;
  for (double c : m.corr_channel) cm += c;
  m.corr_mean = cm / 7.0;

  if (n >= 4) result.quartiles = quartile_examples(mae);
  return result;
}

}  // namespace mdlp
