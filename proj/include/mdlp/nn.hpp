#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "mdlp/dataset.hpp"
#include "mdlp/errors.hpp"
#include "mdlp/rng.hpp"

namespace mdlp::nn {

// Architecture: one conv+ReLU block per entry of conv_channels (3x3 kernels,
// stride 1, zero padding preserving spatial size), a 2x2/stride-2 max pool
// after every block except the last, flatten, one dense+ReLU per entry of
// dense_widths, dropout after the flatten and after each dense ReLU, and a
// dense+tanh head. The defaults are the trained configuration: four conv
// blocks, three pools, two hidden dense layers, three dropout sites, seven
// tanh outputs.
struct CnnConfig {
  int in_h = 121;
  int in_w = 61;
  int in_c = 4;
  std::vector<int> conv_channels = {16, 32, 64, 64};
  std::vector<int> dense_widths = {256, 64};
  int out_dim = 7;
  double dropout = 0.05;
  double l2 = 1e-8;

  void validate() const;          // throws BadShape / InvalidArgument
  std::string canonical() const;  // stable textual form, fingerprint input
  std::uint64_t fingerprint() const;
};

// Resolved per-layer dimensions.
struct Plan {
  struct Conv {
    int h, w, ic, oc;  // input spatial dims and channel counts
    bool pooled;       // 2x2/2 max pool after this block
    int out_h, out_w;  // dims seen by the next layer (after pool if any)
  };
  std::vector<Conv> convs;
  int flat = 0;
  std::vector<int> dense;  // hidden widths
  int out_dim = 0;

  static Plan make(const CnnConfig& cfg);
};

template <typename T>
struct ModelT {
  CnnConfig cfg;
  Plan plan;
  // Parameter tensors in canonical order: conv k weights [3][3][ic][oc] and
  // bias [oc] for each block, then dense weights [in][out] and bias [out]
  // for each hidden layer and the head.
  std::vector<std::vector<T>> weights;
  std::vector<std::vector<T>> biases;
  std::vector<std::string> layer_names;

  int layer_count() const { return static_cast<int>(weights.size()); }
  std::size_t param_count() const;
};

using Model = ModelT<float>;

/// He-uniform kernel init (limit sqrt(6/fan_in)), zero biases; deterministic
/// in (config, seed).
template <typename T>
ModelT<T> build_model_t(const CnnConfig& cfg, std::uint64_t init_seed);
Model build_model(const CnnConfig& cfg, std::uint64_t init_seed);

// Per-sample scratch: activations kept for the backward pass.
template <typename T>
struct Workspace {
  std::vector<std::vector<T>> conv_out;        // post-ReLU, pre-pool
  std::vector<std::vector<T>> pool_out;        // post-pool (pooled blocks only)
  std::vector<std::vector<std::uint8_t>> pool_arg;
  std::vector<std::uint8_t> flat_mask;         // dropout masks (train mode)
  std::vector<T> flat_drop;
  std::vector<std::vector<T>> dense_out;       // post-ReLU
  std::vector<std::vector<std::uint8_t>> dense_mask;
  std::vector<std::vector<T>> dense_drop;
  std::vector<T> head;                         // tanh output
  std::vector<T> scratch_a, scratch_b, scratch_c;  // backward buffers (reused)
};

/// Forward pass. In train mode dropout masks are drawn from `rng`
/// (inverted scaling); in infer mode dropout is disabled and the pass is
/// deterministic. Output entries lie in (-1, 1). Throws ShapeMismatch.
template <typename T>
std::array<T, 7> forward(const ModelT<T>& model, const T* stack, std::size_t stack_len, bool train,
                         Rng* rng, Workspace<T>& ws);

/// MSE over the 7 labels: mean of squared differences. Throws LengthMismatch
/// (via span length check at the call sites that take vectors).
template <typename T>
T loss_mse(const T* z_actual, const T* z_pred, int len = 7) {
  T acc = 0;
  for (int k = 0; k < len; ++k) {
    const T d = z_actual[k] - z_pred[k];
    acc += d * d;
  }
  return acc / static_cast<T>(len);
}

template <typename T>
struct Gradients {
  std::vector<std::vector<T>> weights;
  std::vector<std::vector<T>> biases;

  void match(const ModelT<T>& m);  // allocate/zero to the model's shapes
  void clear();
  void add(const Gradients& other);
};

/// Accumulate d(MSE)/d(params) for one sample into `grad` (+=). `ws` must
/// hold the activations from a train-mode forward of the same sample.
/// The data term only; the L2 penalty is added once per step by the trainer.
template <typename T>
void backward(const ModelT<T>& model, const T* stack, const std::array<T, 7>& target,
              Workspace<T>& ws, Gradients<T>& grad);

template <typename T>
struct AdamState {
  std::vector<std::vector<T>> m, v;
  long long t = 0;

  void match(const ModelT<T>& model);
};

struct TrainConfig {
  double lr = 1e-3;
  int batch = 128;
  int epochs = 300;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t seed = 0;  // shuffle + dropout streams

  void validate() const;
};

/// One Adam update from already-averaged gradients (bias-corrected).
/// Throws NonFiniteGradient naming the offending layer.
template <typename T>
void adam_step(ModelT<T>& model, const Gradients<T>& grad, AdamState<T>& state,
               const TrainConfig& cfg);

struct TrainHistory {
  std::vector<double> train_rms;  // per epoch, sqrt(mean per-sample MSE)
  std::vector<double> val_rms;
  int best_epoch = -1;            // epoch with the lowest validation RMS
};

using EpochCallback = std::function<void(int epoch, double train_rms, double val_rms)>;

/// Mini-batch Adam training; per-epoch seeded shuffle; the model is left at
/// the best-validation checkpoint. Deterministic for fixed seeds regardless
/// of the worker count. Throws ShapeMismatch if either dataset does not
/// match the model input.
TrainHistory train(Model& model, const Dataset& train_set, const Dataset& val_set,
                   const TrainConfig& cfg, const EpochCallback& on_epoch = {});

/// Validation-style RMS of a model over a dataset (infer mode, parallel).
double evaluate_rms(const Model& model, const Dataset& data);

/// Checkpoint: one JSON header line (magic, version, fingerprint, config,
/// param count), then all parameters as raw little-endian float32 in
/// canonical order. Load recomputes the config fingerprint and compares.
void save_model(const Model& model, const std::string& path);
Model load_model(const std::string& path);

extern template ModelT<float> build_model_t<float>(const CnnConfig&, std::uint64_t);
extern template ModelT<double> build_model_t<double>(const CnnConfig&, std::uint64_t);
extern template std::array<float, 7> forward<float>(const ModelT<float>&, const float*, std::size_t,
                                                    bool, Rng*, Workspace<float>&);
extern template std::array<double, 7> forward<double>(const ModelT<double>&, const double*,
                                                      std::size_t, bool, Rng*, Workspace<double>&);
extern template void backward<float>(const ModelT<float>&, const float*,
                                     const std::array<float, 7>&, Workspace<float>&,
                                     Gradients<float>&);
extern template void backward<double>(const ModelT<double>&, const double*,
                                      const std::array<double, 7>&, Workspace<double>&,
                                      Gradients<double>&);
extern template void adam_step<float>(ModelT<float>&, const Gradients<float>&, AdamState<float>&,
                                      const TrainConfig&);
extern template void adam_step<double>(ModelT<double>&, const Gradients<double>&,
                                       AdamState<double>&, const TrainConfig&);

}  // namespace mdlp::nn
