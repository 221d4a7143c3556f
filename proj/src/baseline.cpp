#include "mdlp/baseline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mdlp/parallel.hpp"
#include "mdlp/rng.hpp"

namespace mdlp {

void LsqConfig::validate() const {
  require(starts >= 1, Errc::invalid_argument, "starts must be >= 1");
  require(max_iterations >= 1, Errc::invalid_argument, "max_iterations must be >= 1");
  require(residual_tol > 0 && step_tol > 0, Errc::invalid_argument, "tolerances must be > 0");
  require(lambda_init > 0 && lambda_scale > 1, Errc::invalid_argument, "bad damping parameters");
}

namespace {

// Linear-forms view of the render pipeline on the cropped grid. Every
// analyzer intensity is a sum of |A_f(z)|^2 with A_f linear in the complex
// coefficients, so intensities and their label gradients come from the same
// per-pixel response vectors.
class StackForms {
 public:
  StackForms(const Renderer& renderer, const ChannelSet& set) {
    set.validate();
    const int n = renderer.grid().n;
    const int half_w = (n + 1) / 2;
    const int x0 = n / 2;
    h_ = n;
    w_ = half_w;
    c_ = set.count();

    // one linear form per analyzer; Full decomposes into two (ex and ey)
    for (int k = 0; k < c_; ++k) {
      const Channel ch = set.channels[k];
      const int nf = ch == Channel::Full ? 2 : 1;
      for (int f = 0; f < nf; ++f) {
        form_channel_.push_back(k);
        gre_.emplace_back(static_cast<std::size_t>(h_) * w_ * 4);
        gim_.emplace_back(static_cast<std::size_t>(h_) * w_ * 4);
      }
      int form = static_cast<int>(form_channel_.size()) - nf;
      for (int y = 0; y < h_; ++y) {
        for (int x = 0; x < w_; ++x) {
          const std::size_t p_full = static_cast<std::size_t>(y) * n + (x0 + x);
          const std::size_t p = static_cast<std::size_t>(y) * w_ + x;
          for (int m = 0; m < 4; ++m) {
            const FieldSample e = renderer.mode_at(m, p_full);
            double re[2] = {0, 0}, im[2] = {0, 0};
            switch (ch) {
              case Channel::Full:  // |ex|^2 + |ey|^2
                re[0] = e.ex;
                re[1] = e.ey;
                break;
              case Channel::LP0:
                re[0] = e.ex;
                break;
              case Channel::LP45:
                re[0] = M_SQRT1_2 * (e.ex + e.ey);
                break;
              case Channel::LP90:
                re[0] = e.ey;
                break;
              case Channel::LP135:
                re[0] = M_SQRT1_2 * (e.ey - e.ex);
                break;
              case Channel::RHCP:  // (ex - i ey)/sqrt(2)
                re[0] = M_SQRT1_2 * e.ex;
                im[0] = -M_SQRT1_2 * e.ey;
                break;
              case Channel::LHCP:
                re[0] = M_SQRT1_2 * e.ex;
                im[0] = M_SQRT1_2 * e.ey;
                break;
            }
            const int nf2 = ch == Channel::Full ? 2 : 1;
            for (int f = 0; f < nf2; ++f) {
              gre_[form + f][p * 4 + m] = re[f];
              gim_[form + f][p * 4 + m] = im[f];
            }
          }
        }
      }
    }
  }

  int height() const { return h_; }
  int width() const { return w_; }
  int channel_count() const { return c_; }
  std::size_t npix() const { return static_cast<std::size_t>(h_) * w_ * c_; }

  // Unnormalized intensities; optionally d(I)/d(z) as npix x 7 row-major.
  void intensities(const double z[7], std::vector<double>& I, std::vector<double>* JI) const {
    const std::size_t npx = npix();
    I.assign(npx, 0.0);
    if (JI) JI->assign(npx * 7, 0.0);
    const double cre[4] = {z[0], z[1], z[3], z[5]};
    const double cim[4] = {0.0, z[2], z[4], z[6]};
    const std::size_t pixels = static_cast<std::size_t>(h_) * w_;
    for (std::size_t form = 0; form < gre_.size(); ++form) {
      const int k = form_channel_[form];
      const double* gre = gre_[form].data();
      const double* gim = gim_[form].data();
      for (std::size_t p = 0; p < pixels; ++p) {
        const double* gr = gre + p * 4;
        const double* gi = gim + p * 4;
        double are = 0, aim = 0;
        for (int m = 0; m < 4; ++m) {
          are += cre[m] * gr[m] - cim[m] * gi[m];
          aim += cre[m] * gi[m] + cim[m] * gr[m];
        }
        const std::size_t out = p * c_ + k;
        I[out] += are * are + aim * aim;
        if (JI) {
          double* row = JI->data() + out * 7;
          // dA/dz for the real components is g_m, for the imaginary
          // components i*g_m; dI = 2*Re(conj(A) * dA).
          row[0] += 2.0 * (are * gr[0] + aim * gi[0]);
          row[1] += 2.0 * (are * gr[1] + aim * gi[1]);
          row[2] += 2.0 * (aim * gr[1] - are * gi[1]);
          row[3] += 2.0 * (are * gr[2] + aim * gi[2]);
          row[4] += 2.0 * (aim * gr[2] - are * gi[2]);
          row[5] += 2.0 * (are * gr[3] + aim * gi[3]);
          row[6] += 2.0 * (aim * gr[3] - are * gi[3]);
        }
      }
    }
  }

  // Normalized stack and its Jacobian with the max pixel frozen.
  void normalized(const double z[7], std::vector<double>& I, std::vector<double>* J) const {
    intensities(z, I, J);
    std::size_t argmax = 0;
    for (std::size_t p = 1; p < I.size(); ++p) {
      if (I[p] > I[argmax]) argmax = p;
    }
    const double M = I[argmax];
    require(M > 0, Errc::all_zero_stack, "rendered stack has no positive pixel");
    if (J) {
      double dM[7];
      for (int j = 0; j < 7; ++j) dM[j] = (*J)[argmax * 7 + j] / M;
      for (std::size_t p = 0; p < I.size(); ++p) {
        const double inorm = I[p] / M;
        double* row = J->data() + p * 7;
        for (int j = 0; j < 7; ++j) row[j] = row[j] / M - inorm * dM[j];
      }
    }
    for (double& x : I) x /= M;
  }

 private:
  int h_ = 0, w_ = 0, c_ = 0;
  std::vector<int> form_channel_;
  std::vector<std::vector<double>> gre_, gim_;
};

// Cholesky solve of the damped 7x7 normal equations; returns false when the
// damped matrix is not positive definite.
bool solve_normal7(const double A[49], const double g[7], double lambda, double step[7]) {
  double L[49];
  for (int i = 0; i < 49; ++i) L[i] = A[i];
  for (int i = 0; i < 7; ++i) L[i * 7 + i] += lambda * std::max(A[i * 7 + i], 1e-12);
  // in-place Cholesky, lower triangle
  for (int i = 0; i < 7; ++i) {
    for (int j = 0; j <= i; ++j) {
      double s = L[i * 7 + j];
      for (int k = 0; k < j; ++k) s -= L[i * 7 + k] * L[j * 7 + k];
      if (i == j) {
        if (s <= 0) return false;
        L[i * 7 + i] = std::sqrt(s);
      } else {
        L[i * 7 + j] = s / L[j * 7 + j];
      }
    }
  }
  double y[7];
  for (int i = 0; i < 7; ++i) {
    double s = -g[i];
    for (int k = 0; k < i; ++k) s -= L[i * 7 + k] * y[k];
    y[i] = s / L[i * 7 + i];
  }
  for (int i = 6; i >= 0; --i) {
    double s = y[i];
    for (int k = i + 1; k < 7; ++k) s -= L[k * 7 + i] * step[k];
    step[i] = s / L[i * 7 + i];
  }
  return true;
}

struct LmOutcome {
  double z[7];
  double f = std::numeric_limits<double>::infinity();  // pixel SSE
  bool converged = false;
};

// Scale-fixing penalty: the normalized render is invariant under z -> a*z,
// so one extra residual 0.1*(|z|^2 - 1) pins the ray without biasing the
// pixel fit at convergence.
constexpr double kScaleWeight = 0.1;

double objective(const StackForms& forms, const StackD& observed, const double z[7],
                 std::vector<double>& I, double* pixel_sse) {
  forms.normalized(z, I, nullptr);
  double sse = 0;
  for (std::size_t p = 0; p < I.size(); ++p) {
    const double r = I[p] - observed.v[p];
    sse += r * r;
  }
  if (pixel_sse) *pixel_sse = sse;
  double zsq = -1.0;
  for (int j = 0; j < 7; ++j) zsq += z[j] * z[j];
  const double rs = kScaleWeight * zsq;
  return sse + rs * rs;
}

LmOutcome lm_refine(const StackForms& forms, const StackD& observed, const double start[7],
                    const LsqConfig& cfg) {
  LmOutcome out;
  double z[7];
  for (int j = 0; j < 7; ++j) z[j] = start[j];

  std::vector<double> I, J, It;
  double pixel_sse = 0;
  double f = objective(forms, observed, z, I, &pixel_sse);
  double lambda = cfg.lambda_init;

  for (int iter = 0; iter < cfg.max_iterations; ++iter) {
    if (pixel_sse <= cfg.residual_tol) {
      out.converged = true;
      break;
    }
    forms.normalized(z, I, &J);
    // normal equations including the scale penalty row
    double A[49] = {0}, g[7] = {0};
    for (std::size_t p = 0; p < I.size(); ++p) {
      const double r = I[p] - observed.v[p];
      const double* row = J.data() + p * 7;
      for (int a = 0; a < 7; ++a) {
        g[a] += row[a] * r;
        for (int b = a; b < 7; ++b) A[a * 7 + b] += row[a] * row[b];
      }
    }
    {
      double zsq = -1.0;
      for (int j = 0; j < 7; ++j) zsq += z[j] * z[j];
      const double rs = kScaleWeight * zsq;
      for (int a = 0; a < 7; ++a) {
        const double da = kScaleWeight * 2.0 * z[a];
        g[a] += da * rs;
        for (int b = a; b < 7; ++b) A[a * 7 + b] += da * kScaleWeight * 2.0 * z[b];
      }
    }
    for (int a = 0; a < 7; ++a) {
      for (int b = 0; b < a; ++b) A[a * 7 + b] = A[b * 7 + a];
    }

    bool accepted = false;
    for (int tries = 0; tries < 40; ++tries) {
      double step[7];
      if (!solve_normal7(A, g, lambda, step)) {
        lambda *= cfg.lambda_scale;
        continue;
      }
      double zt[7];
      double step_norm = 0, z_norm = 0;
      for (int j = 0; j < 7; ++j) {
        zt[j] = z[j] + step[j];
        step_norm += step[j] * step[j];
        z_norm += z[j] * z[j];
      }
      double trial_pixel_sse = 0;
      const double ft = objective(forms, observed, zt, It, &trial_pixel_sse);
      if (ft < f) {
        for (int j = 0; j < 7; ++j) z[j] = zt[j];
        f = ft;
        pixel_sse = trial_pixel_sse;
        lambda = std::max(lambda / cfg.lambda_scale, 1e-12);
        accepted = true;
        if (step_norm <= cfg.step_tol * cfg.step_tol * (z_norm + cfg.step_tol)) {
          out.converged = true;
        }
        break;
      }
      lambda *= cfg.lambda_scale;
      if (lambda > 1e14) break;
    }
    if (!accepted || out.converged) {
      if (!accepted && pixel_sse <= cfg.residual_tol) out.converged = true;
      break;
    }
  }
  for (int j = 0; j < 7; ++j) out.z[j] = z[j];
  out.f = pixel_sse;
  return out;
}

// Gauge fixing: intensities are invariant under a global sign, so x1 < 0
// flips the whole vector; then max-normalize.
bool gauge_fix(double z[7]) {
  if (z[0] < 0) {
    for (int j = 0; j < 7; ++j) z[j] = -z[j];
  }
  double m = 0;
  for (int j = 0; j < 7; ++j) m = std::max(m, std::abs(z[j]));
  if (m == 0) return false;
  for (int j = 0; j < 7; ++j) z[j] /= m;
  return true;
}

double label_distance(const LabelVector& a, const LabelVector& b) {
  double s = 0;
  for (int j = 0; j < 7; ++j) {
    const double d = a.z[j] - b.z[j];
    s += d * d;
  }
  return std::sqrt(s);
}

}  // namespace

double residual(const Renderer& renderer, const LabelVector& label, const StackD& observed,
                const ChannelSet& set) {
  const StackD model = render_half_normalized(renderer, decode_labels(label), set);
  require(model.h == observed.h && model.w == observed.w && model.c == observed.c,
          Errc::shape_mismatch, "observed stack shape does not match the render grid");
  double sse = 0;
  for (std::size_t p = 0; p < model.size(); ++p) {
    const double r = model.v[p] - observed.v[p];
    sse += r * r;
  }
  return sse;
}

void jacobian(const Renderer& renderer, const LabelVector& label, const ChannelSet& set,
              std::vector<double>& J, StackD* rendered) {
  StackForms forms(renderer, set);
  std::vector<double> I;
  forms.normalized(label.z.data(), I, &J);
  if (rendered) {
    rendered->h = forms.height();
    rendered->w = forms.width();
    rendered->c = forms.channel_count();
    rendered->v = std::move(I);
  }
}

DecompositionResult decompose(const Renderer& renderer, const StackD& observed,
                              const ChannelSet& set, const LsqConfig& cfg) {
  cfg.validate();
  const StackForms forms(renderer, set);
  require(observed.h == forms.height() && observed.w == forms.width() &&
              observed.c == forms.channel_count(),
          Errc::shape_mismatch, "observed stack shape does not match the channel set");

  // Start points drawn sequentially so the set does not depend on scheduling.
  Rng rng(cfg.seed);
  std::vector<std::array<double, 7>> starts(cfg.starts);
  for (auto& s : starts) {
    const LabelVector z = encode_labels(sample_coefficients(rng));
    std::copy(z.z.begin(), z.z.end(), s.begin());
  }

  std::vector<LmOutcome> outcomes(cfg.starts);
  parallel_for(0, cfg.starts, [&](long long i) {
    outcomes[i] = lm_refine(forms, observed, starts[i].data(), cfg);
  });

  // Winner by (residual, start index).
  int best_idx = 0;
  for (int i = 1; i < cfg.starts; ++i) {
    if (outcomes[i].f < outcomes[best_idx].f) best_idx = i;
  }

  // Conjugate probe: refine from the mirrored best solution so the LP-only
  // ambiguity is always surfaced when present.
  {
    double zc[7];
    for (int j = 0; j < 7; ++j) zc[j] = outcomes[best_idx].z[j];
    zc[2] = -zc[2];
    zc[4] = -zc[4];
    zc[6] = -zc[6];
    outcomes.push_back(lm_refine(forms, observed, zc, cfg));
  }

  // Gauge-fix every outcome and order candidates by (residual, index).
  struct Candidate {
    LabelVector label;
    double f;
    int idx;
  };
  std::vector<Candidate> candidates;
  for (int i = 0; i < static_cast<int>(outcomes.size()); ++i) {
    double z[7];
    for (int j = 0; j < 7; ++j) z[j] = outcomes[i].z[j];
    if (!std::isfinite(outcomes[i].f) || !gauge_fix(z)) continue;
    Candidate c;
    for (int j = 0; j < 7; ++j) c.label.z[j] = z[j];
    // Report the spec-path residual of the gauge-fixed label.
    c.f = residual(renderer, c.label, observed, set);
    c.idx = i;
    candidates.push_back(c);
  }
  require(!candidates.empty(), Errc::no_convergence, "no start produced a usable solution");
  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    return a.f != b.f ? a.f < b.f : a.idx < b.idx;
  });

  DecompositionResult result;
  result.label = candidates[0].label;
  result.residual = candidates[0].f;
  result.converged = outcomes[candidates[0].idx].converged;

  // Near-tie alternates, deduplicated by gauge-fixed label distance.
  const double tie = std::max(10.0 * result.residual, 1e-24);
  for (std::size_t i = 1; i < candidates.size(); ++i) {
    if (candidates[i].f > tie) break;
    bool distinct = label_distance(candidates[i].label, result.label) > 1e-6;
    for (const auto& alt : result.alternates) {
      distinct = distinct && label_distance(candidates[i].label, alt.first) > 1e-6;
    }
    if (distinct) result.alternates.emplace_back(candidates[i].label, candidates[i].f);
  }
  return result;
}

}  // namespace mdlp
