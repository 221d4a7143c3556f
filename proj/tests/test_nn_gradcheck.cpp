#include <cmath>

#include <doctest.h>

#include "mdlp/nn.hpp"

using namespace mdlp;
using namespace mdlp::nn;

// Central finite-difference check of every parameter gradient on a small
// 64-bit network: loss = MSE(target, forward(x)) + l2 * sum(w^2). Train-mode
// evaluations reuse the same dropout mask by reseeding the stream, so the
// perturbed losses are differentiable samples of one fixed function.

namespace {

struct CheckSetup {
  CnnConfig cfg;
  ModelT<double> model;
  std::vector<double> input;
  std::array<double, 7> target;
  bool train_mode = false;
  std::uint64_t mask_seed = 0;

  double loss() const {
    Workspace<double> ws;
    Rng rng(mask_seed);
    const auto pred = forward<double>(model, input.data(), input.size(), train_mode,
                                      train_mode ? &rng : nullptr, ws);
    double acc = loss_mse(target.data(), pred.data());
    if (cfg.l2 > 0) {
      for (const auto& layer : model.weights) {
        for (double w : layer) acc += cfg.l2 * w * w;
      }
    }
    return acc;
  }

  Gradients<double> analytic() const {
    Workspace<double> ws;
    Rng rng(mask_seed);
    forward<double>(model, input.data(), input.size(), train_mode,
                    train_mode ? &rng : nullptr, ws);
    Gradients<double> grad;
    grad.match(model);
    backward<double>(model, input.data(), target, ws, grad);
    if (cfg.l2 > 0) {
      for (std::size_t k = 0; k < model.weights.size(); ++k) {
        for (std::size_t i = 0; i < model.weights[k].size(); ++i) {
          grad.weights[k][i] += 2.0 * cfg.l2 * model.weights[k][i];
        }
      }
    }
    return grad;
  }
};

CheckSetup make_setup(bool train_mode, double dropout, double l2) {
  CheckSetup s;
  s.cfg.in_h = 8;
  s.cfg.in_w = 8;
  s.cfg.in_c = 2;
  s.cfg.conv_channels = {2, 2};
  s.cfg.dense_widths = {4};
  s.cfg.dropout = dropout;
  s.cfg.l2 = l2;
  s.model = build_model_t<double>(s.cfg, 1234);
  s.train_mode = train_mode;
  s.mask_seed = 777;

  Rng rng(42);
  s.input.resize(8 * 8 * 2);
  for (auto& v : s.input) v = rng.uniform_pm1();
  for (auto& t : s.target) t = 0.8 * rng.uniform_pm1();

  // Nudge parameters off the zero-bias init so ReLU and pool subgradients
  // sit away from their kinks.
  Rng prng(5);
  for (auto& layer : s.model.biases) {
    for (auto& b : layer) b = 0.05 * prng.uniform_pm1();
  }
  return s;
}

double max_relative_error(CheckSetup& s) {
  const Gradients<double> grad = s.analytic();
  double worst = 0;
  for (std::size_t k = 0; k < s.model.weights.size(); ++k) {
    auto check_block = [&](std::vector<double>& params, const std::vector<double>& analytic) {
      for (std::size_t i = 0; i < params.size(); ++i) {
        const double keep = params[i];
        const double h = 1e-5 * std::max(1.0, std::abs(keep));
        params[i] = keep + h;
        const double up = s.loss();
        params[i] = keep - h;
        const double down = s.loss();
        params[i] = keep;
        const double fd = (up - down) / (2 * h);
        const double denom = std::max({1e-8, std::abs(fd), std::abs(analytic[i])});
        worst = std::max(worst, std::abs(fd - analytic[i]) / denom);
      }
    };
    check_block(s.model.weights[k], grad.weights[k]);
    check_block(s.model.biases[k], grad.biases[k]);
  }
  return worst;
}

}  // namespace

TEST_CASE("gradient check without dropout") {
  CheckSetup s = make_setup(false, 0.0, 0.0);
  CHECK(max_relative_error(s) < 1e-4);
}

TEST_CASE("gradient check with the L2 penalty") {
  CheckSetup s = make_setup(false, 0.0, 1e-3);
  CHECK(max_relative_error(s) < 1e-4);
}

TEST_CASE("gradient check with a fixed dropout mask") {
  CheckSetup s = make_setup(true, 0.05, 1e-3);
  CHECK(max_relative_error(s) < 1e-4);
}

TEST_CASE("gradient check on a deeper pooled stack") {
  CheckSetup s = make_setup(false, 0.0, 0.0);
  s.cfg.in_h = 9;  // odd spatial dims exercise the floor-pool path
  s.cfg.in_w = 7;
  s.cfg.in_c = 1;
  s.cfg.conv_channels = {3, 2, 2};
  s.cfg.dense_widths = {5, 3};
  s.model = build_model_t<double>(s.cfg, 77);
  Rng rng(6);
  s.input.resize(9 * 7);
  for (auto& v : s.input) v = rng.uniform_pm1();
  Rng prng(9);
  for (auto& layer : s.model.biases) {
    for (auto& b : layer) b = 0.05 * prng.uniform_pm1();
  }
  CHECK(max_relative_error(s) < 1e-4);
}
