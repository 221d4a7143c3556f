#include "mdlp11.h"

#include <algorithm>
#include <cstring>
#include <string>

#include "mdlp/baseline.hpp"
#include "mdlp/dataset.hpp"
#include "mdlp/imaging.hpp"
#include "mdlp/metrics.hpp"
#include "mdlp/nn.hpp"

struct mdlp_basis {
  mdlp::Renderer renderer;
};
struct mdlp_dataset {
  mdlp::Dataset ds;
};
struct mdlp_model {
  mdlp::nn::Model model;
};
struct mdlp_report {
  mdlp::EvalResult result;
};

namespace {

thread_local std::string g_last_error;

mdlp_status to_status(mdlp::Errc c) {
  const int v = static_cast<int>(c);
  if (v >= 0 && v <= 21) return static_cast<mdlp_status>(v);
  return MDLP_ERR_UNKNOWN;
}

template <typename Fn>
mdlp_status wrap(Fn&& fn) {
  try {
    fn();
    return MDLP_OK;
  } catch (const mdlp::Error& e) {
    g_last_error = e.what();
    return to_status(e.code());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return MDLP_ERR_UNKNOWN;
  } catch (...) {
    g_last_error = "unknown error";
    return MDLP_ERR_UNKNOWN;
  }
}

mdlp_status arg_error(const char* what) {
  g_last_error = what;
  return MDLP_ERR_INVALID_ARGUMENT;
}

mdlp::ChannelSet to_channel_set(const int* channels, int nch) {
  mdlp::require(channels != nullptr && nch > 0, mdlp::Errc::empty_channel_set,
                "no channels given");
  mdlp::ChannelSet set;
  for (int k = 0; k < nch; ++k) {
    mdlp::require(channels[k] >= 0 && channels[k] <= 6, mdlp::Errc::invalid_argument,
                  "channel id out of range");
    set.channels.push_back(static_cast<mdlp::Channel>(channels[k]));
  }
  set.validate();
  return set;
}

}  // namespace

extern "C" {

int mdlp_api_version(void) { return MDLP11_API_VERSION; }

const char* mdlp_status_name(mdlp_status status) {
  if (status == MDLP_ERR_UNKNOWN) return "Unknown";
  return mdlp::errc_name(static_cast<mdlp::Errc>(status));
}

const char* mdlp_last_error(void) { return g_last_error.c_str(); }

const char* mdlp_channel_name(int channel) {
  if (channel < 0 || channel > 6) return nullptr;
  return mdlp::channel_name(static_cast<mdlp::Channel>(channel));
}

mdlp_status mdlp_channel_preset(const char* preset, int ids[7], int* count) {
  if (!preset || !ids || !count) return arg_error("null argument");
  return wrap([&] {
    const mdlp::ChannelSet set = mdlp::ChannelSet::preset(preset);
    *count = set.count();
    for (int k = 0; k < set.count(); ++k) ids[k] = static_cast<int>(set.channels[k]);
  });
}

mdlp_status mdlp_basis_create(double core_radius_um, double numerical_aperture,
                              double wavelength_um, mdlp_basis** out) {
  if (!out) return arg_error("null output");
  *out = nullptr;
  return wrap([&] {
    mdlp::FiberSpec fiber{core_radius_um, numerical_aperture, wavelength_um};
    *out = new mdlp_basis{mdlp::Renderer(fiber)};
  });
}

void mdlp_basis_free(mdlp_basis* basis) { delete basis; }

mdlp_status mdlp_basis_params(const mdlp_basis* basis, double* u, double* w, double* v) {
  if (!basis) return arg_error("null basis");
  if (u) *u = basis->renderer.basis().u;
  if (w) *w = basis->renderer.basis().w;
  if (v) *v = basis->renderer.basis().v;
  return MDLP_OK;
}

mdlp_status mdlp_render(const mdlp_basis* basis, const double z[7], const int* channels, int nch,
                        int full, int normalize, double* out) {
  if (!basis || !z || !out) return arg_error("null argument");
  return wrap([&] {
    const mdlp::ChannelSet set = to_channel_set(channels, nch);
    mdlp::LabelVector label;
    for (int k = 0; k < 7; ++k) label.z[k] = z[k];
    mdlp::StackD stack = basis->renderer.render_full(mdlp::decode_labels(label), set);
    if (!full) stack = mdlp::crop_half(stack);
    if (normalize) mdlp::normalize_stack(stack);
    std::memcpy(out, stack.v.data(), stack.size() * sizeof(double));
  });
}

mdlp_status mdlp_export_pgm(const char* path, const double* image, int height, int width) {
  if (!path || !image) return arg_error("null argument");
  return wrap([&] { mdlp::export_pgm(path, image, height, width); });
}

mdlp_status mdlp_labels_encode(const double c_re[4], const double c_im[4], double z[7]) {
  if (!c_re || !c_im || !z) return arg_error("null argument");
  return wrap([&] {
    mdlp::ModeCoefficients c;
    for (int n = 0; n < 4; ++n) c.c[n] = {c_re[n], c_im[n]};
    const mdlp::LabelVector label = mdlp::encode_labels(c);
    for (int k = 0; k < 7; ++k) z[k] = label.z[k];
  });
}

mdlp_status mdlp_labels_decode(const double z[7], double c_re[4], double c_im[4]) {
  if (!z || !c_re || !c_im) return arg_error("null argument");
  mdlp::LabelVector label;
  for (int k = 0; k < 7; ++k) label.z[k] = z[k];
  const mdlp::ModeCoefficients c = mdlp::decode_labels(label);
  for (int n = 0; n < 4; ++n) {
    c_re[n] = c.c[n].real();
    c_im[n] = c.c[n].imag();
  }
  return MDLP_OK;
}

mdlp_status mdlp_dataset_generate(const mdlp_basis* basis, long long n, uint64_t seed,
                                  const int* channels, int nch, mdlp_dataset** out) {
  if (!basis || !out) return arg_error("null argument");
  *out = nullptr;
  return wrap([&] {
    const mdlp::ChannelSet set = to_channel_set(channels, nch);
    *out = new mdlp_dataset{mdlp::generate_dataset(basis->renderer, n, seed, set)};
  });
}

mdlp_status mdlp_dataset_save(const mdlp_dataset* dataset, const char* path) {
  if (!dataset || !path) return arg_error("null argument");
  return wrap([&] { mdlp::save_dataset(dataset->ds, path); });
}

mdlp_status mdlp_dataset_load(const char* path, mdlp_dataset** out) {
  if (!path || !out) return arg_error("null argument");
  *out = nullptr;
  return wrap([&] { *out = new mdlp_dataset{mdlp::load_dataset(path)}; });
}

void mdlp_dataset_free(mdlp_dataset* dataset) { delete dataset; }

mdlp_status mdlp_dataset_info(const mdlp_dataset* dataset, long long* n, int* height, int* width,
                              int* nch) {
  if (!dataset) return arg_error("null dataset");
  if (n) *n = dataset->ds.header.n;
  if (height) *height = dataset->ds.header.height;
  if (width) *width = dataset->ds.header.width;
  if (nch) *nch = dataset->ds.header.channels.count();
  return MDLP_OK;
}

mdlp_status mdlp_dataset_channels(const mdlp_dataset* dataset, int ids[7], int* count) {
  if (!dataset || !ids || !count) return arg_error("null argument");
  const auto& channels = dataset->ds.header.channels.channels;
  *count = static_cast<int>(channels.size());
  for (int k = 0; k < *count; ++k) ids[k] = static_cast<int>(channels[k]);
  return MDLP_OK;
}

mdlp_status mdlp_dataset_fiber(const mdlp_dataset* dataset, double* core_radius_um,
                               double* numerical_aperture, double* wavelength_um) {
  if (!dataset) return arg_error("null dataset");
  const auto& fiber = dataset->ds.header.fiber;
  if (core_radius_um) *core_radius_um = fiber.core_radius_um;
  if (numerical_aperture) *numerical_aperture = fiber.numerical_aperture;
  if (wavelength_um) *wavelength_um = fiber.wavelength_um;
  return MDLP_OK;
}

mdlp_status mdlp_dataset_label(const mdlp_dataset* dataset, long long i, double z[7]) {
  if (!dataset || !z) return arg_error("null argument");
  if (i < 0 || i >= dataset->ds.header.n) return arg_error("sample index out of range");
  for (int k = 0; k < 7; ++k) z[k] = dataset->ds.label(i)[k];
  return MDLP_OK;
}

const float* mdlp_dataset_stack(const mdlp_dataset* dataset, long long i) {
  if (!dataset || i < 0 || i >= dataset->ds.header.n) return nullptr;
  return dataset->ds.stack(i);
}

mdlp_status mdlp_model_create(int height, int width, int channels, uint64_t init_seed,
                              mdlp_model** out) {
  if (!out) return arg_error("null output");
  *out = nullptr;
  return wrap([&] {
    mdlp::nn::CnnConfig cfg;
    cfg.in_h = height;
    cfg.in_w = width;
    cfg.in_c = channels;
    *out = new mdlp_model{mdlp::nn::build_model(cfg, init_seed)};
  });
}

mdlp_status mdlp_model_save(const mdlp_model* model, const char* path) {
  if (!model || !path) return arg_error("null argument");
  return wrap([&] { mdlp::nn::save_model(model->model, path); });
}

mdlp_status mdlp_model_load(const char* path, mdlp_model** out) {
  if (!path || !out) return arg_error("null argument");
  *out = nullptr;
  return wrap([&] { *out = new mdlp_model{mdlp::nn::load_model(path)}; });
}

void mdlp_model_free(mdlp_model* model) { delete model; }

mdlp_status mdlp_model_input_shape(const mdlp_model* model, int* height, int* width,
                                   int* channels) {
  if (!model) return arg_error("null model");
  if (height) *height = model->model.cfg.in_h;
  if (width) *width = model->model.cfg.in_w;
  if (channels) *channels = model->model.cfg.in_c;
  return MDLP_OK;
}

mdlp_status mdlp_model_predict(const mdlp_model* model, const float* stack, size_t stack_len,
                               double z[7]) {
  if (!model || !stack || !z) return arg_error("null argument");
  return wrap([&] {
    thread_local mdlp::nn::Workspace<float> ws;
    const auto out =
        mdlp::nn::forward<float>(model->model, stack, stack_len, false, nullptr, ws);
    for (int k = 0; k < 7; ++k) z[k] = out[k];
  });
}

mdlp_status mdlp_model_train(mdlp_model* model, const mdlp_dataset* train_set,
                             const mdlp_dataset* val_set, int epochs, int batch, double lr,
                             uint64_t seed, mdlp_epoch_callback callback, void* user) {
  if (!model || !train_set || !val_set) return arg_error("null argument");
  return wrap([&] {
    mdlp::nn::TrainConfig cfg;
    cfg.epochs = epochs;
    cfg.batch = batch;
    cfg.lr = lr;
    cfg.seed = seed;
    mdlp::nn::EpochCallback on_epoch;
    if (callback) {
      on_epoch = [callback, user](int epoch, double train_rms, double val_rms) {
        callback(epoch, train_rms, val_rms, user);
      };
    }
    mdlp::nn::train(model->model, train_set->ds, val_set->ds, cfg, on_epoch);
  });
}

void mdlp_lsq_options_default(mdlp_lsq_options* options) {
  if (!options) return;
  const mdlp::LsqConfig cfg;
  options->starts = cfg.starts;
  options->max_iterations = cfg.max_iterations;
  options->residual_tol = cfg.residual_tol;
  options->step_tol = cfg.step_tol;
  options->seed = cfg.seed;
}

namespace {

mdlp::LsqConfig to_lsq_config(const mdlp_lsq_options* options) {
  mdlp::LsqConfig cfg;
  if (options) {
    cfg.starts = options->starts;
    cfg.max_iterations = options->max_iterations;
    cfg.residual_tol = options->residual_tol;
    cfg.step_tol = options->step_tol;
    cfg.seed = options->seed;
  }
  return cfg;
}

void fill_decomposition(const mdlp::DecompositionResult& r, mdlp_decomposition* out) {
  for (int k = 0; k < 7; ++k) out->best.z[k] = r.label.z[k];
  out->best.residual = r.residual;
  out->converged = r.converged ? 1 : 0;
  out->n_alternates = 0;
  for (const auto& [label, res] : r.alternates) {
    if (out->n_alternates >= MDLP_MAX_ALTERNATES) break;
    mdlp_solution& s = out->alternates[out->n_alternates++];
    for (int k = 0; k < 7; ++k) s.z[k] = label.z[k];
    s.residual = res;
  }
}

}  // namespace

mdlp_status mdlp_decompose(const mdlp_basis* basis, const double* observed, const int* channels,
                           int nch, const mdlp_lsq_options* options, mdlp_decomposition* out) {
  if (!basis || !observed || !out) return arg_error("null argument");
  return wrap([&] {
    const mdlp::ChannelSet set = to_channel_set(channels, nch);
    const int n = basis->renderer.grid().n;
    mdlp::StackD stack(n, (n + 1) / 2, set.count());
    std::memcpy(stack.v.data(), observed, stack.size() * sizeof(double));
    const auto result = mdlp::decompose(basis->renderer, stack, set, to_lsq_config(options));
    fill_decomposition(result, out);
  });
}

mdlp_status mdlp_eval_model(const mdlp_model* model, const mdlp_dataset* dataset,
                            mdlp_report** out) {
  if (!model || !dataset || !out) return arg_error("null argument");
  *out = nullptr;
  return wrap([&] {
    const mdlp::Dataset& ds = dataset->ds;
    mdlp::require(ds.header.height == model->model.cfg.in_h &&
                      ds.header.width == model->model.cfg.in_w &&
                      ds.header.channels.count() == model->model.cfg.in_c,
                  mdlp::Errc::shape_mismatch, "dataset does not match the model input");
    const mdlp::Renderer renderer(ds.header.fiber);
    const std::size_t stack_len = ds.stack_len();
    auto predict = [&](long long, const float* stack, bool*) {
      thread_local mdlp::nn::Workspace<float> ws;
      const auto pred =
          mdlp::nn::forward<float>(model->model, stack, stack_len, false, nullptr, ws);
      std::array<double, 7> z{};
      for (int k = 0; k < 7; ++k) z[k] = pred[k];
      return z;
    };
    *out = new mdlp_report{mdlp::evaluate(renderer, ds, predict)};
  });
}

mdlp_status mdlp_eval_baseline(const mdlp_dataset* dataset, const int* channels, int nch,
                               const mdlp_lsq_options* options, mdlp_report** out) {
  if (!dataset || !out) return arg_error("null argument");
  *out = nullptr;
  return wrap([&] {
    const mdlp::Dataset& ds = dataset->ds;
    const mdlp::ChannelSet set = to_channel_set(channels, nch);
    // Map the requested channels onto the dataset's channel columns.
    std::vector<int> cols;
    for (mdlp::Channel ch : set.channels) {
      const auto& have = ds.header.channels.channels;
      const auto it = std::find(have.begin(), have.end(), ch);
      mdlp::require(it != have.end(), mdlp::Errc::invalid_argument,
                    std::string("dataset lacks channel ") + mdlp::channel_name(ch));
      cols.push_back(static_cast<int>(it - have.begin()));
    }
    const mdlp::Renderer renderer(ds.header.fiber);
    const mdlp::LsqConfig cfg = to_lsq_config(options);
    const int c_all = ds.header.channels.count();
    const std::size_t pixels = static_cast<std::size_t>(ds.header.height) * ds.header.width;

    auto predict = [&, cols](long long i, const float* stack, bool* ambiguous) {
      mdlp::StackD sub(ds.header.height, ds.header.width, set.count());
      for (std::size_t p = 0; p < pixels; ++p) {
        for (std::size_t k = 0; k < cols.size(); ++k) {
          sub.v[p * cols.size() + k] = stack[p * c_all + cols[k]];
        }
      }
      // Sub-stacks are re-normalized so that the solver's own
      // render->crop->normalize convention applies to the subset.
      mdlp::normalize_stack(sub);
      const auto result = mdlp::decompose(renderer, sub, set, cfg);
      if (ambiguous) *ambiguous = !result.alternates.empty();
      std::array<double, 7> z{};
      for (int k = 0; k < 7; ++k) z[k] = result.label.z[k];
      return z;
    };
    *out = new mdlp_report{mdlp::evaluate(renderer, ds, predict)};
  });
}

mdlp_status mdlp_report_metrics(const mdlp_report* report, mdlp_metrics* out) {
  if (!report || !out) return arg_error("null argument");
  const mdlp::MetricsReport& m = report->result.summary;
  out->label_mae = m.label_mae;
  out->label_rms = m.label_rms;
  out->rho_mae = m.rho_mae;
  out->rho_rms = m.rho_rms;
  out->phase_mae_over_2pi = m.phase_mae_over_2pi;
  out->corr_full = m.corr_full;
  out->corr_mean = m.corr_mean;
  for (int k = 0; k < 7; ++k) out->corr_channel[k] = m.corr_channel[k];
  out->n_samples = m.n_samples;
  out->n_ambiguous = m.n_ambiguous;
  return MDLP_OK;
}

mdlp_status mdlp_report_sample(const mdlp_report* report, long long i, mdlp_sample_metrics* out) {
  if (!report || !out) return arg_error("null argument");
  const auto& samples = report->result.per_sample;
  if (i < 0 || i >= static_cast<long long>(samples.size())) {
    return arg_error("sample index out of range");
  }
  const mdlp::SampleMetrics& s = samples[i];
  out->sample_id = s.sample_id;
  out->label_mae = s.label_mae;
  out->label_rms = s.label_rms;
  out->rho_rms = s.rho_rms;
  out->phase_mae_over_2pi = s.phase_mae_over_2pi;
  out->corr_full = s.corr_full;
  out->corr_mean = s.corr_mean;
  out->ambiguous = s.ambiguous ? 1 : 0;
  return MDLP_OK;
}

mdlp_status mdlp_report_quartiles(const mdlp_report* report, long long ids[3]) {
  if (!report || !ids) return arg_error("null argument");
  if (report->result.per_sample.size() < 4) {
    g_last_error = "need at least 4 samples for quartiles";
    return MDLP_ERR_TOO_FEW_SAMPLES;
  }
  for (int k = 0; k < 3; ++k) ids[k] = report->result.quartiles[k];
  return MDLP_OK;
}

void mdlp_report_free(mdlp_report* report) { delete report; }

}  // extern "C"
