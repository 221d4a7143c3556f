#include "mdlp/nn.hpp"

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "mdlp/nn_kernels.hpp"
#include "mdlp/parallel.hpp"

namespace mdlp::nn {

// ---------------------------------------------------------------- config --

void CnnConfig::validate() const {
  require(in_h >= 1 && in_w >= 1 && in_c >= 1, Errc::bad_shape, "bad input shape");
  require(!conv_channels.empty(), Errc::bad_shape, "need at least one conv block");
  for (int c : conv_channels) require(c >= 1, Errc::bad_shape, "conv width must be >= 1");
  for (int d : dense_widths) require(d >= 1, Errc::bad_shape, "dense width must be >= 1");
  require(out_dim >= 1, Errc::bad_shape, "output width must be >= 1");
  require(dropout >= 0.0 && dropout < 1.0, Errc::invalid_argument, "dropout must be in [0,1)");
  require(l2 >= 0.0, Errc::invalid_argument, "l2 must be >= 0");
}

std::string CnnConfig::canonical() const {
  char buf[64];
  std::string s = "cnn/v1 h=" + std::to_string(in_h) + " w=" + std::to_string(in_w) +
                  " c=" + std::to_string(in_c) + " conv=";
  for (std::size_t i = 0; i < conv_channels.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(conv_channels[i]);
  }
  s += " dense=";
  for (std::size_t i = 0; i < dense_widths.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(dense_widths[i]);
  }
  s += " out=" + std::to_string(out_dim) + " k=3 pool=2";
  std::snprintf(buf, sizeof buf, " drop=%.17g l2=%.17g", dropout, l2);
  s += buf;
  return s;
}

std::uint64_t CnnConfig::fingerprint() const {
  // FNV-1a 64
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : canonical()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

Plan Plan::make(const CnnConfig& cfg) {
  cfg.validate();
  Plan plan;
  int h = cfg.in_h, w = cfg.in_w, c = cfg.in_c;
  const int nblocks = static_cast<int>(cfg.conv_channels.size());
  for (int k = 0; k < nblocks; ++k) {
    Plan::Conv conv;
    conv.h = h;
    conv.w = w;
    conv.ic = c;
    conv.oc = cfg.conv_channels[k];
    conv.pooled = k + 1 < nblocks;  // pool after every block but the last
    conv.out_h = conv.pooled ? h / 2 : h;
    conv.out_w = conv.pooled ? w / 2 : w;
    require(conv.out_h >= 1 && conv.out_w >= 1, Errc::bad_shape, "spatial dims vanish after pool");
    h = conv.out_h;
    w = conv.out_w;
    c = conv.oc;
    plan.convs.push_back(conv);
  }
  plan.flat = h * w * c;
  plan.dense = cfg.dense_widths;
  plan.out_dim = cfg.out_dim;
  return plan;
}

template <typename T>
std::size_t ModelT<T>::param_count() const {
  std::size_t n = 0;
  for (const auto& wl : weights) n += wl.size();
  for (const auto& bl : biases) n += bl.size();
  return n;
}

template <typename T>
ModelT<T> build_model_t(const CnnConfig& cfg, std::uint64_t init_seed) {
  ModelT<T> m;
  m.cfg = cfg;
  m.plan = Plan::make(cfg);
  Rng rng(init_seed);

  auto he_uniform = [&](std::size_t count, int fan_in) {
    std::vector<T> v(count);
    const double limit = std::sqrt(6.0 / fan_in);
    for (auto& x : v) x = static_cast<T>(limit * rng.uniform_pm1());
    return v;
  };

  for (std::size_t k = 0; k < m.plan.convs.size(); ++k) {
    const auto& conv = m.plan.convs[k];
    m.weights.push_back(he_uniform(static_cast<std::size_t>(9) * conv.ic * conv.oc, 9 * conv.ic));
    m.biases.emplace_back(conv.oc, T{0});
    m.layer_names.push_back("conv" + std::to_string(k));
  }
  int in = m.plan.flat;
  for (std::size_t k = 0; k < m.plan.dense.size(); ++k) {
    const int out = m.plan.dense[k];
    m.weights.push_back(he_uniform(static_cast<std::size_t>(in) * out, in));
    m.biases.emplace_back(out, T{0});
    m.layer_names.push_back("dense" + std::to_string(k));
    in = out;
  }
  m.weights.push_back(he_uniform(static_cast<std::size_t>(in) * cfg.out_dim, in));
  m.biases.emplace_back(cfg.out_dim, T{0});
  m.layer_names.push_back("head");
  return m;
}

Model build_model(const CnnConfig& cfg, std::uint64_t init_seed) {
  return build_model_t<float>(cfg, init_seed);
}

// --------------------------------------------------------------- kernels --

namespace {

using namespace kernels;

template <typename T>
void relu_inplace(std::vector<T>& v) {
  for (T& x : v) x = x > T{0} ? x : T{0};
}

// 2x2 stride-2 max pool with floor semantics; ties keep the first element
// of the row-major window scan (deterministic subgradient).
template <typename T>
struct TransposedParams {
  std::vector<std::vector<T>> wt;

  void build(const ModelT<T>& m) {
    const int nconv = static_cast<int>(m.plan.convs.size());
    wt.resize(m.weights.size());
    for (int k = 0; k < nconv; ++k) {
      const auto& conv = m.plan.convs[k];
      const auto& w = m.weights[k];
      auto& t = wt[k];
      t.resize(w.size());
      for (int tap = 0; tap < 9; ++tap) {
        for (int i = 0; i < conv.ic; ++i) {
          for (int o = 0; o < conv.oc; ++o) {
            t[(static_cast<std::size_t>(tap) * conv.oc + o) * conv.ic + i] =
                w[(static_cast<std::size_t>(tap) * conv.ic + i) * conv.oc + o];
          }
        }
      }
    }
    int in = m.plan.flat;
    for (std::size_t k = nconv; k < m.weights.size(); ++k) {
      const int out = static_cast<int>(m.biases[k].size());
      const auto& w = m.weights[k];
      auto& t = wt[k];
      t.resize(w.size());
      for (int i = 0; i < in; ++i) {
        for (int o = 0; o < out; ++o) {
          t[static_cast<std::size_t>(o) * in + i] = w[static_cast<std::size_t>(i) * out + o];
        }
      }
      in = out;
    }
  }
};

template <typename T>
void dropout_forward(const std::vector<T>& in, double p, Rng& rng, std::vector<std::uint8_t>& mask,
                     std::vector<T>& out) {
  mask.resize(in.size());
  out.resize(in.size());
  const T inv = static_cast<T>(1.0 / (1.0 - p));
  for (std::size_t i = 0; i < in.size(); ++i) {
    const bool keep = rng.uniform01() >= p;
    mask[i] = keep;
    out[i] = keep ? in[i] * inv : T{0};
  }
}

}  // namespace

// --------------------------------------------------------------- forward --

template <typename T>
std::array<T, 7> forward(const ModelT<T>& model, const T* stack, std::size_t stack_len, bool train,
                         Rng* rng, Workspace<T>& ws) {
  const auto& plan = model.plan;
  const std::size_t want =
      static_cast<std::size_t>(model.cfg.in_h) * model.cfg.in_w * model.cfg.in_c;
  require(stack_len == want, Errc::shape_mismatch,
          "input length " + std::to_string(stack_len) + ", model expects " + std::to_string(want));
  require(!train || rng != nullptr, Errc::invalid_argument, "train mode needs an rng");
  require(model.cfg.out_dim == 7, Errc::bad_shape, "forward expects a 7-label head");

  const int nconv = static_cast<int>(plan.convs.size());
  ws.conv_out.resize(nconv);
  ws.pool_out.resize(nconv);
  ws.pool_arg.resize(nconv);

  const T* cur = stack;
  for (int k = 0; k < nconv; ++k) {
    const auto& conv = plan.convs[k];
    ws.conv_out[k].resize(static_cast<std::size_t>(conv.h) * conv.w * conv.oc);
    conv3x3_forward(cur, conv.h, conv.w, conv.ic, model.weights[k].data(),
                    model.biases[k].data(), conv.oc, ws.conv_out[k].data());
    relu_inplace(ws.conv_out[k]);
    if (conv.pooled) {
      ws.pool_out[k].resize(static_cast<std::size_t>(conv.out_h) * conv.out_w * conv.oc);
      ws.pool_arg[k].resize(ws.pool_out[k].size());
      maxpool2_forward(ws.conv_out[k].data(), conv.h, conv.w, conv.oc, ws.pool_out[k].data(),
                       ws.pool_arg[k].data());
      cur = ws.pool_out[k].data();
    } else {
      cur = ws.conv_out[k].data();
    }
  }

  // Flatten is a view of the last block's output (row-major h, w, c).
  const double p = model.cfg.dropout;
  const bool use_dropout = train && p > 0.0;
  const std::size_t flat = static_cast<std::size_t>(plan.flat);
  if (use_dropout) {
    // std::vector shim: wrap `cur` without copying would complicate masks;
    // one copy of the flat vector per sample is cheap next to the convs.
    std::vector<T> flat_in(cur, cur + flat);
    dropout_forward(flat_in, p, *rng, ws.flat_mask, ws.flat_drop);
  } else {
    ws.flat_drop.assign(cur, cur + flat);
  }

  const int ndense = static_cast<int>(plan.dense.size());
  ws.dense_out.resize(ndense);
  ws.dense_mask.resize(ndense);
  ws.dense_drop.resize(ndense);
  const T* din = ws.flat_drop.data();
  int in_width = plan.flat;
  for (int k = 0; k < ndense; ++k) {
    const int layer = nconv + k;
    const int out_width = plan.dense[k];
    ws.dense_out[k].resize(out_width);
    dense_forward(din, in_width, model.weights[layer].data(), model.biases[layer].data(),
                  out_width, ws.dense_out[k].data());
    relu_inplace(ws.dense_out[k]);
    if (use_dropout) {
      dropout_forward(ws.dense_out[k], p, *rng, ws.dense_mask[k], ws.dense_drop[k]);
    } else {
      ws.dense_drop[k] = ws.dense_out[k];
    }
    din = ws.dense_drop[k].data();
    in_width = out_width;
  }

  const int head_layer = nconv + ndense;
  ws.head.resize(plan.out_dim);
  dense_forward(din, in_width, model.weights[head_layer].data(), model.biases[head_layer].data(),
                plan.out_dim, ws.head.data());
  std::array<T, 7> out{};
  for (int o = 0; o < plan.out_dim; ++o) {
    ws.head[o] = std::tanh(ws.head[o]);
    out[o] = ws.head[o];
  }
  return out;
}

// -------------------------------------------------------------- backward --

template <typename T>
void Gradients<T>::match(const ModelT<T>& m) {
  weights.resize(m.weights.size());
  biases.resize(m.biases.size());
  for (std::size_t k = 0; k < m.weights.size(); ++k) {
    weights[k].assign(m.weights[k].size(), T{0});
    biases[k].assign(m.biases[k].size(), T{0});
  }
}

template <typename T>
void Gradients<T>::clear() {
  for (auto& w : weights) std::fill(w.begin(), w.end(), T{0});
  for (auto& b : biases) std::fill(b.begin(), b.end(), T{0});
}

template <typename T>
void Gradients<T>::add(const Gradients& other) {
  for (std::size_t k = 0; k < weights.size(); ++k) {
    for (std::size_t i = 0; i < weights[k].size(); ++i) weights[k][i] += other.weights[k][i];
    for (std::size_t i = 0; i < biases[k].size(); ++i) biases[k][i] += other.biases[k][i];
  }
}

namespace {

template <typename T>
void backward_impl(const ModelT<T>& model, const T* stack, const std::array<T, 7>& target,
                   Workspace<T>& ws, Gradients<T>& grad, const TransposedParams<T>& tp) {
  const auto& plan = model.plan;
  const int nconv = static_cast<int>(plan.convs.size());
  const int ndense = static_cast<int>(plan.dense.size());
  const int head_layer = nconv + ndense;
  const double p = model.cfg.dropout;
  const bool used_dropout = !ws.flat_mask.empty();
  const T inv = static_cast<T>(used_dropout ? 1.0 / (1.0 - p) : 1.0);

  // d(MSE)/d(head) through the tanh: 2*(y-t)/7 * (1-y^2)
  std::vector<T> dcur(plan.out_dim);
  for (int o = 0; o < plan.out_dim; ++o) {
    const T y = ws.head[o];
    dcur[o] = static_cast<T>(2.0 / plan.out_dim) * (y - target[o]) * (T{1} - y * y);
  }

  // Head dense layer.
  {
    const T* x = ndense > 0 ? ws.dense_drop[ndense - 1].data() : ws.flat_drop.data();
    const int in_width = ndense > 0 ? plan.dense[ndense - 1] : plan.flat;
    dense_backward_weights(x, dcur.data(), in_width, plan.out_dim,
                           grad.weights[head_layer].data(), grad.biases[head_layer].data());
    std::vector<T> dx(in_width);
    dense_backward_data(dcur.data(), plan.out_dim, tp.wt[head_layer].data(), in_width, dx.data());
    dcur = std::move(dx);
  }

  // Hidden dense layers in reverse: dropout -> ReLU -> dense.
  for (int k = ndense - 1; k >= 0; --k) {
    const int layer = nconv + k;
    const int out_width = plan.dense[k];
    for (int o = 0; o < out_width; ++o) {
      T g = dcur[o];
      if (used_dropout) g = ws.dense_mask[k][o] ? g * inv : T{0};
      dcur[o] = ws.dense_out[k][o] > T{0} ? g : T{0};
    }
    const T* x = k > 0 ? ws.dense_drop[k - 1].data() : ws.flat_drop.data();
    const int in_width = k > 0 ? plan.dense[k - 1] : plan.flat;
    dense_backward_weights(x, dcur.data(), in_width, out_width, grad.weights[layer].data(),
                           grad.biases[layer].data());
    std::vector<T> dx(in_width);
    dense_backward_data(dcur.data(), out_width, tp.wt[layer].data(), in_width, dx.data());
    dcur = std::move(dx);
  }

  // Dropout site on the flatten.
  if (used_dropout) {
    for (std::size_t i = 0; i < dcur.size(); ++i) {
      dcur[i] = ws.flat_mask[i] ? dcur[i] * inv : T{0};
    }
  }

  // Conv blocks in reverse, ping-ponging through preallocated scratch so no
  // sample-rate allocations happen here. `dprev` holds the gradient w.r.t.
  // the block output (after pooling when pooled).
  std::vector<T>& dprev_buf = ws.scratch_a;
  std::vector<T>& dconv_buf = ws.scratch_b;
  std::vector<T>& dx_buf = ws.scratch_c;
  dprev_buf.assign(dcur.begin(), dcur.end());
  for (int k = nconv - 1; k >= 0; --k) {
    const auto& conv = plan.convs[k];
    const std::size_t conv_len = static_cast<std::size_t>(conv.h) * conv.w * conv.oc;
    dconv_buf.resize(conv_len);
    if (conv.pooled) {
      maxpool2_backward(dprev_buf.data(), conv.h, conv.w, conv.oc, ws.pool_arg[k].data(),
                        dconv_buf.data());
    } else {
      std::copy(dprev_buf.begin(), dprev_buf.begin() + conv_len, dconv_buf.begin());
    }
    const auto& act = ws.conv_out[k];
    for (std::size_t i = 0; i < conv_len; ++i) {
      if (!(act[i] > T{0})) dconv_buf[i] = T{0};
    }
    // bias gradient: sum over pixels
    {
      T* db = grad.biases[k].data();
      const std::size_t pixels = static_cast<std::size_t>(conv.h) * conv.w;
      const T* dp = dconv_buf.data();
      for (std::size_t pix = 0; pix < pixels; ++pix, dp += conv.oc) {
        for (int o = 0; o < conv.oc; ++o) db[o] += dp[o];
      }
    }
    const T* input = k == 0 ? stack
                            : (plan.convs[k - 1].pooled ? ws.pool_out[k - 1].data()
                                                        : ws.conv_out[k - 1].data());
    conv3x3_backward_weights(input, dconv_buf.data(), conv.h, conv.w, conv.ic, conv.oc,
                             grad.weights[k].data());
    if (k > 0) {
      dx_buf.assign(static_cast<std::size_t>(conv.h) * conv.w * conv.ic, T{0});
      conv3x3_backward_data(dconv_buf.data(), conv.h, conv.w, conv.oc, tp.wt[k].data(), conv.ic,
                            dx_buf.data());
      dprev_buf.swap(dx_buf);
    }
  }
}

}  // namespace

template <typename T>
void backward(const ModelT<T>& model, const T* stack, const std::array<T, 7>& target,
              Workspace<T>& ws, Gradients<T>& grad) {
  TransposedParams<T> tp;
  tp.build(model);
  backward_impl(model, stack, target, ws, grad, tp);
}

// ------------------------------------------------------------------ adam --

template <typename T>
void AdamState<T>::match(const ModelT<T>& model) {
  m.resize(model.weights.size());
  v.resize(model.weights.size());
  for (std::size_t k = 0; k < model.weights.size(); ++k) {
    m[k].assign(model.weights[k].size() + model.biases[k].size(), T{0});
    v[k].assign(m[k].size(), T{0});
  }
  t = 0;
}

void TrainConfig::validate() const {
  require(batch >= 1, Errc::invalid_argument, "batch must be >= 1");
  require(epochs >= 1, Errc::invalid_argument, "epochs must be >= 1");
  require(std::isfinite(lr) && lr >= 0.0, Errc::invalid_argument, "bad learning rate");
}

template <typename T>
void adam_step(ModelT<T>& model, const Gradients<T>& grad, AdamState<T>& state,
               const TrainConfig& cfg) {
  // A non-finite gradient anywhere aborts the step before any update.
  for (int k = 0; k < model.layer_count(); ++k) {
    for (const T g : grad.weights[k]) {
      if (!std::isfinite(static_cast<double>(g))) {
        fail(Errc::non_finite_gradient, "layer " + model.layer_names[k]);
      }
    }
    for (const T g : grad.biases[k]) {
      if (!std::isfinite(static_cast<double>(g))) {
        fail(Errc::non_finite_gradient, "layer " + model.layer_names[k]);
      }
    }
  }
  state.t += 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
  const T b1 = static_cast<T>(cfg.beta1), b2 = static_cast<T>(cfg.beta2);
  const T lr = static_cast<T>(cfg.lr), eps = static_cast<T>(cfg.eps);
  const T c1 = static_cast<T>(1.0 / bc1), c2 = static_cast<T>(1.0 / bc2);
  for (int k = 0; k < model.layer_count(); ++k) {
    auto update = [&](std::vector<T>& param, const std::vector<T>& g, std::size_t state_off) {
      T* mm = state.m[k].data() + state_off;
      T* vv = state.v[k].data() + state_off;
      for (std::size_t i = 0; i < param.size(); ++i) {
        mm[i] = b1 * mm[i] + (T{1} - b1) * g[i];
        vv[i] = b2 * vv[i] + (T{1} - b2) * g[i] * g[i];
        const T mhat = mm[i] * c1;
        const T vhat = vv[i] * c2;
        param[i] -= lr * mhat / (std::sqrt(vhat) + eps);
      }
    };
    update(model.weights[k], grad.weights[k], 0);
    update(model.biases[k], grad.biases[k], model.weights[k].size());
  }
}

// ----------------------------------------------------------------- train --

namespace {

// Fixed accumulation chunk: batches are split into chunks of 16 samples;
// chunk gradients are reduced in chunk order, so results do not depend on
// the worker count.
constexpr int kChunk = 16;

// Stream tags for the derived per-purpose RNGs.
constexpr std::uint64_t kShuffleTag = 0x73687566;  // "shuf"
constexpr std::uint64_t kDropoutTag = 0x64726f70;  // "drop"; +slot within the batch

void check_compatible(const Model& model, const Dataset& ds, const char* what) {
  require(ds.header.height == model.cfg.in_h && ds.header.width == model.cfg.in_w &&
              ds.header.channels.count() == model.cfg.in_c,
          Errc::shape_mismatch, std::string(what) + " dataset does not match the model input");
}

template <typename T>
void add_l2_gradient(const ModelT<T>& model, Gradients<T>& grad) {
  const T two_l2 = static_cast<T>(2.0 * model.cfg.l2);
  if (two_l2 == T{0}) return;
  for (int k = 0; k < model.layer_count(); ++k) {
    const auto& w = model.weights[k];
    auto& g = grad.weights[k];
    for (std::size_t i = 0; i < w.size(); ++i) g[i] += two_l2 * w[i];
  }
}

}  // namespace

double evaluate_rms(const Model& model, const Dataset& data) {
  check_compatible(model, data, "eval");
  const long long n = data.count();
  std::vector<double> mse(n);
  const int workers = worker_count();
  const long long block = (n + workers - 1) / workers;
  parallel_for(0, workers, [&](long long t) {
    Workspace<float> ws;
    const long long lo = t * block, hi = std::min(n, lo + block);
    for (long long i = lo; i < hi; ++i) {
      const auto pred = forward<float>(model, data.stack(i), data.stack_len(), false, nullptr, ws);
      std::array<float, 7> lab{};
      std::copy(data.label(i), data.label(i) + 7, lab.begin());
      mse[i] = loss_mse(lab.data(), pred.data());
    }
  });
  double acc = 0;
  for (double x : mse) acc += x;
  return std::sqrt(acc / static_cast<double>(n));
}

TrainHistory train(Model& model, const Dataset& train_set, const Dataset& val_set,
                   const TrainConfig& cfg, const EpochCallback& on_epoch) {
  cfg.validate();
  check_compatible(model, train_set, "train");
  check_compatible(model, val_set, "validation");

  const long long n = train_set.count();
  const int steps_per_epoch = static_cast<int>((n + cfg.batch - 1) / cfg.batch);

  AdamState<float> adam;
  adam.match(model);
  TransposedParams<float> tp;

  const int max_chunks = (cfg.batch + kChunk - 1) / kChunk;
  std::vector<Gradients<float>> chunk_grads(max_chunks);
  std::vector<Workspace<float>> chunk_ws(max_chunks);
  std::vector<std::array<double, kChunk>> chunk_mse(max_chunks);
  for (auto& g : chunk_grads) g.match(model);
  Gradients<float> grad;
  grad.match(model);

  std::vector<long long> order(n);
  for (long long i = 0; i < n; ++i) order[i] = i;

  TrainHistory history;
  std::vector<float> best_w, best_b;  // flattened best-validation checkpoint
  double best_val = std::numeric_limits<double>::infinity();

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng shuffle_rng = derive_rng(cfg.seed, static_cast<std::uint64_t>(epoch), kShuffleTag);
    for (long long i = n - 1; i > 0; --i) {
      const long long j = static_cast<long long>(shuffle_rng.below(static_cast<std::uint64_t>(i + 1)));
      std::swap(order[i], order[j]);
    }

    double epoch_sse = 0.0;
    for (int step = 0; step < steps_per_epoch; ++step) {
      const long long lo = static_cast<long long>(step) * cfg.batch;
      const long long hi = std::min(n, lo + cfg.batch);
      const int bs = static_cast<int>(hi - lo);
      const int nchunks = (bs + kChunk - 1) / kChunk;
      const std::uint64_t global_step =
          static_cast<std::uint64_t>(epoch) * steps_per_epoch + step;

      tp.build(model);
      parallel_for(0, nchunks, [&](long long ci) {
        auto& cg = chunk_grads[ci];
        cg.clear();
        auto& ws = chunk_ws[ci];
        for (int s = static_cast<int>(ci) * kChunk;
             s < std::min(bs, static_cast<int>(ci + 1) * kChunk); ++s) {
          const long long sample = order[lo + s];
          Rng drop_rng = derive_rng(cfg.seed, global_step, kDropoutTag + s);
          const float* x = train_set.stack(sample);
          const auto pred =
              forward<float>(model, x, train_set.stack_len(), true, &drop_rng, ws);
          std::array<float, 7> lab{};
          std::copy(train_set.label(sample), train_set.label(sample) + 7, lab.begin());
          chunk_mse[ci][s - ci * kChunk] = loss_mse(lab.data(), pred.data());
          backward_impl(model, x, lab, ws, cg, tp);
        }
      });

      grad.clear();
      for (int ci = 0; ci < nchunks; ++ci) {
        grad.add(chunk_grads[ci]);
        for (int s = ci * kChunk; s < std::min(bs, (ci + 1) * kChunk); ++s) {
          epoch_sse += chunk_mse[ci][s - ci * kChunk];
        }
      }
      const float scale = 1.0f / static_cast<float>(bs);
      for (auto& w : grad.weights) {
        for (auto& g : w) g *= scale;
      }
      for (auto& b : grad.biases) {
        for (auto& g : b) g *= scale;
      }
      add_l2_gradient(model, grad);
      adam_step(model, grad, adam, cfg);
    }

    history.train_rms.push_back(std::sqrt(epoch_sse / static_cast<double>(n)));
    const double val_rms = evaluate_rms(model, val_set);
    history.val_rms.push_back(val_rms);
    if (on_epoch) on_epoch(epoch, history.train_rms.back(), val_rms);
    if (val_rms < best_val) {
      best_val = val_rms;
      history.best_epoch = epoch;
      best_w.clear();
      best_b.clear();
      for (const auto& w : model.weights) best_w.insert(best_w.end(), w.begin(), w.end());
      for (const auto& b : model.biases) best_b.insert(best_b.end(), b.begin(), b.end());
    }
  }

  // Leave the model at the best-validation checkpoint.
  std::size_t wo = 0, bo = 0;
  for (auto& w : model.weights) {
    std::copy(best_w.begin() + wo, best_w.begin() + wo + w.size(), w.begin());
    wo += w.size();
  }
  for (auto& b : model.biases) {
    std::copy(best_b.begin() + bo, best_b.begin() + bo + b.size(), b.begin());
    bo += b.size();
  }
  return history;
}

// ----------------------------------------------------------- save / load --

void save_model(const Model& model, const std::string& path) {
  nlohmann::json j = {
      {"magic", "MDLP11-MODEL"},
      {"version", 1},
      {"fingerprint", model.cfg.fingerprint()},
      {"config",
       {{"height", model.cfg.in_h},
        {"width", model.cfg.in_w},
        {"channels", model.cfg.in_c},
        {"conv", model.cfg.conv_channels},
        {"dense", model.cfg.dense_widths},
        {"out", model.cfg.out_dim},
        {"dropout", model.cfg.dropout},
        {"l2", model.cfg.l2}}},
      {"params", model.param_count()},
  };
  std::ofstream out(path, std::ios::binary);
  require(out.good(), Errc::io_error, "cannot open " + path);
  out << j.dump() << "\n";
  for (int k = 0; k < model.layer_count(); ++k) {
    out.write(reinterpret_cast<const char*>(model.weights[k].data()),
              static_cast<std::streamsize>(model.weights[k].size() * sizeof(float)));
    out.write(reinterpret_cast<const char*>(model.biases[k].data()),
              static_cast<std::streamsize>(model.biases[k].size() * sizeof(float)));
  }
  out.flush();
  require(out.good(), Errc::io_error, "write failed: " + path);
}

Model load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), Errc::io_error, "cannot open " + path);
  std::string line;
  std::getline(in, line);
  require(in.good() && !line.empty(), Errc::bad_magic, "missing header line");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception&) {
    fail(Errc::bad_magic, "header is not valid JSON");
  }
  CnnConfig cfg;
  std::uint64_t stored_fp = 0;
  std::size_t params = 0;
  try {
    require(j.at("magic").get<std::string>() == "MDLP11-MODEL", Errc::bad_magic, "wrong magic");
    require(j.at("version").get<int>() == 1, Errc::version_mismatch, "unsupported version");
    stored_fp = j.at("fingerprint").get<std::uint64_t>();
    const auto& c = j.at("config");
    cfg.in_h = c.at("height").get<int>();
    cfg.in_w = c.at("width").get<int>();
    cfg.in_c = c.at("channels").get<int>();
    cfg.conv_channels = c.at("conv").get<std::vector<int>>();
    cfg.dense_widths = c.at("dense").get<std::vector<int>>();
    cfg.out_dim = c.at("out").get<int>();
    cfg.dropout = c.at("dropout").get<double>();
    cfg.l2 = c.at("l2").get<double>();
    params = j.at("params").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::invariant_violation, std::string("header: ") + e.what());
  }
  require(cfg.fingerprint() == stored_fp, Errc::fingerprint_mismatch,
          "stored fingerprint does not match the stored config");

  Model model = build_model(cfg, 0);
  require(model.param_count() == params, Errc::invariant_violation,
          "header parameter count does not match the config");
  for (int k = 0; k < model.layer_count(); ++k) {
    in.read(reinterpret_cast<char*>(model.weights[k].data()),
            static_cast<std::streamsize>(model.weights[k].size() * sizeof(float)));
    require(static_cast<std::size_t>(in.gcount()) == model.weights[k].size() * sizeof(float),
            Errc::truncated_file, "parameter blob truncated");
    in.read(reinterpret_cast<char*>(model.biases[k].data()),
            static_cast<std::streamsize>(model.biases[k].size() * sizeof(float)));
    require(static_cast<std::size_t>(in.gcount()) == model.biases[k].size() * sizeof(float),
            Errc::truncated_file, "parameter blob truncated");
  }
  in.peek();
  require(in.eof(), Errc::invariant_violation, "trailing bytes after parameter blob");
  return model;
}

// explicit instantiations
template struct ModelT<float>;
template struct ModelT<double>;
template struct Gradients<float>;
template struct Gradients<double>;
template struct AdamState<float>;
template struct AdamState<double>;
template ModelT<float> build_model_t<float>(const CnnConfig&, std::uint64_t);
template ModelT<double> build_model_t<double>(const CnnConfig&, std::uint64_t);
template std::array<float, 7> forward<float>(const ModelT<float>&, const float*, std::size_t, bool,
                                             Rng*, Workspace<float>&);
template std::array<double, 7> forward<double>(const ModelT<double>&, const double*, std::size_t,
                                               bool, Rng*, Workspace<double>&);
template void backward<float>(const ModelT<float>&, const float*, const std::array<float, 7>&,
                              Workspace<float>&, Gradients<float>&);
template void backward<double>(const ModelT<double>&, const double*, const std::array<double, 7>&,
                               Workspace<double>&, Gradients<double>&);
template void adam_step<float>(ModelT<float>&, const Gradients<float>&, AdamState<float>&,
                               const TrainConfig&);
template void adam_step<double>(ModelT<double>&, const Gradients<double>&, AdamState<double>&,
                                const TrainConfig&);

}  // namespace mdlp::nn
