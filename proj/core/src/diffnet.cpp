/*
 * Copyright 2026 The plugselect Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "plugselect/diffnet.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "plugselect/error.hpp"

namespace plugselect::diffnet {
namespace {

double activate(Activation a, double z) {
  switch (a) {
    case Activation::kTanh:
      return std::tanh(z);
    case Activation::kRelu:
      return z > 0.0 ? z : 0.0;
    case Activation::kIdentity:
      return z;
  }
  return z;
}

// Derivative expressed through the activation output.
double activate_grad(Activation a, double out) {
  switch (a) {
    case Activation::kTanh:
      return 1.0 - out * out;
    case Activation::kRelu:
      return out > 0.0 ? 1.0 : 0.0;
    case Activation::kIdentity:
      return 1.0;
  }
  return 1.0;
}

void softmax_inplace(std::vector<double>& v) {
  const double mx = *std::max_element(v.begin(), v.end());
  double sum = 0.0;
  for (double& x : v) {
    x = std::exp(x - mx);
    sum += x;
  }
  for (double& x : v) x /= sum;
}

}  // namespace

// --- shared helpers --------------------------------------------------------

void DifferentiableModel::check_input(const Matrix& x) const {
  if (x.rows() != input_channels() || x.cols() != input_samples()) {
    throw ValidationError("input is " + std::to_string(x.rows()) + "x" +
                          std::to_string(x.cols()) + ", model expects " +
                          std::to_string(input_channels()) + "x" +
                          std::to_string(input_samples()));
  }
  if (!x.all_finite()) throw ValidationError("input contains non-finite values");
}

std::size_t argmax(std::span<const double> values) {
  if (values.empty()) throw ValidationError("argmax of empty vector");
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

std::size_t predict(const DifferentiableModel& model, const Matrix& x) {
  return argmax(model.forward(x));
}

Matrix finite_diff_input_gradient(const DifferentiableModel& model,
                                  const Matrix& x, std::size_t target,
                                  double step) {
  if (!(step > 0.0)) throw ValidationError("finite-difference step must be > 0");
  model.check_input(x);
  if (target >= model.n_classes()) throw ValidationError("target out of range");
  Matrix grad(x.rows(), x.cols());
  Matrix probe = x;
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (std::size_t c = 0; c < x.cols(); ++c) {
      const double orig = probe(r, c);
      probe(r, c) = orig + step;
      const double up = model.forward(probe)[target];
      probe(r, c) = orig - step;
      const double down = model.forward(probe)[target];
      probe(r, c) = orig;
      grad(r, c) = (up - down) / (2.0 * step);
    }
  }
  return grad;
}

// --- linear model ------------------------------------------------------------

LinearModel::LinearModel(std::vector<Matrix> weights, std::vector<double> bias)
    : weights_(std::move(weights)), bias_(std::move(bias)) {
  if (weights_.empty()) throw ValidationError("linear model needs >= 1 output");
  if (bias_.size() != weights_.size()) {
    throw ValidationError("linear model bias count mismatch");
  }
  for (const auto& w : weights_) {
    if (!w.same_shape(weights_.front()) || w.empty()) {
      throw ValidationError("linear model weights must share a non-empty shape");
    }
  }
}

LinearModel LinearModel::random(std::size_t channels, std::size_t samples,
                                std::size_t classes, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::vector<Matrix> weights;
  for (std::size_t k = 0; k < classes; ++k) {
    Matrix w(channels, samples);
    for (double& v : w.values()) v = dist(rng);
    weights.push_back(std::move(w));
  }
  return LinearModel(std::move(weights), std::vector<double>(classes, 0.0));
}

std::vector<double> LinearModel::forward(const Matrix& x) const {
  check_input(x);
  std::vector<double> out(bias_);
  for (std::size_t k = 0; k < weights_.size(); ++k) {
    const auto w = weights_[k].values();
    const auto v = x.values();
    out[k] += std::inner_product(w.begin(), w.end(), v.begin(), 0.0);
  }
  return out;
}

Matrix LinearModel::input_gradient(const Matrix& x, std::size_t target) const {
  check_input(x);
  if (target >= weights_.size()) throw ValidationError("target out of range");
  return weights_[target];
}

// --- configuration -----------------------------------------------------------

std::string to_string(Activation a) {
  switch (a) {
    case Activation::kTanh:
      return "tanh";
    case Activation::kRelu:
      return "relu";
    case Activation::kIdentity:
      return "identity";
  }
  return "tanh";
}

Activation activation_from_string(const std::string& name) {
  if (name == "tanh") return Activation::kTanh;
  if (name == "relu") return Activation::kRelu;
  if (name == "identity") return Activation::kIdentity;
  throw ValidationError("unknown activation '" + name + "'");
}

std::string to_string(Optimizer o) {
  return o == Optimizer::kAdam ? "adam" : "sgd_momentum";
}

Optimizer optimizer_from_string(const std::string& name) {
  if (name == "adam") return Optimizer::kAdam;
  if (name == "sgd_momentum" || name == "sgd") return Optimizer::kSgdMomentum;
  throw ValidationError("unknown optimizer '" + name + "'");
}

void ModelConfig::validate() const {
  if (input_channels < 1) throw ValidationError("input_channels must be >= 1");
  if (input_samples < 1) throw ValidationError("input_samples must be >= 1");
  if (temporal_kernels < 1 || spatial_kernels < 1) {
    throw ValidationError("kernel counts must be >= 1");
  }
  if (temporal_width < 1 || temporal_width > input_samples) {
    throw ValidationError("temporal kernel width " + std::to_string(temporal_width) +
                          " must lie in [1, " + std::to_string(input_samples) + "]");
  }
  if (pool_width > conv_length()) {
    throw ValidationError("pool width must not exceed the post-conv length " +
                          std::to_string(conv_length()));
  }
  if (n_classes < 2) throw ValidationError("n_classes must be >= 2");
}

std::size_t ModelConfig::parameter_count() const {
  const std::size_t head_in = hidden_units > 0 ? hidden_units : feature_count();
  std::size_t n = temporal_kernels * temporal_width + temporal_kernels +
                  spatial_kernels * temporal_kernels * input_channels + spatial_kernels;
  if (hidden_units > 0) n += hidden_units * feature_count() + hidden_units;
  return n + n_classes * head_in + n_classes;
}

std::size_t ModelConfig::forward_macs() const {
  const std::size_t head_in = hidden_units > 0 ? hidden_units : feature_count();
  return temporal_kernels * input_channels * conv_length() * temporal_width +
         spatial_kernels * temporal_kernels * input_channels * conv_length() +
         hidden_units * feature_count() + n_classes * head_in;
}

ParameterLayout::ParameterLayout(const ModelConfig& c) {
  std::size_t at = 0;
  temporal_w = at;
  at += c.temporal_kernels * c.temporal_width;
  temporal_b = at;
  at += c.temporal_kernels;
  spatial_w = at;
  at += c.spatial_kernels * c.temporal_kernels * c.input_channels;
  spatial_b = at;
  at += c.spatial_kernels;
  hidden_w = at;
  at += c.hidden_units * c.feature_count();
  hidden_b = at;
  at += c.hidden_units;
  output_w = at;
  at += c.n_classes * (c.hidden_units > 0 ? c.hidden_units : c.feature_count());
  output_b = at;
  at += c.n_classes;
  total = at;
}

// --- conv decoder ------------------------------------------------------------

struct ConvDecoder::Activations {
  std::vector<double> temporal;  // (K_t * C) x L
  std::vector<double> spatial;   // K_s x L
  std::vector<double> pooled;    // K_s x P
  std::vector<double> hidden;    // H
  std::vector<double> logits;
};

ConvDecoder::ConvDecoder(const ModelConfig& config)
    : config_(config), layout_((config.validate(), config)), params_(layout_.total) {
  std::mt19937_64 rng(config_.seed);
  auto fill = [&](std::size_t begin, std::size_t count, std::size_t fan_in) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (std::size_t i = 0; i < count; ++i) params_[begin + i] = dist(rng);
  };
  const auto& c = config_;
  const std::size_t spatial_fan_in = c.temporal_kernels * c.input_channels;
  fill(layout_.temporal_w, c.temporal_kernels * c.temporal_width, c.temporal_width);
  fill(layout_.temporal_b, c.temporal_kernels, c.temporal_width);
  fill(layout_.spatial_w, c.spatial_kernels * spatial_fan_in, spatial_fan_in);
  fill(layout_.spatial_b, c.spatial_kernels, spatial_fan_in);
  if (c.hidden_units > 0) {
    fill(layout_.hidden_w, c.hidden_units * c.feature_count(), c.feature_count());
    fill(layout_.hidden_b, c.hidden_units, c.feature_count());
  }
  const std::size_t head_in = c.hidden_units > 0 ? c.hidden_units : c.feature_count();
  fill(layout_.output_w, c.n_classes * head_in, head_in);
  fill(layout_.output_b, c.n_classes, head_in);
}

ConvDecoder::ConvDecoder(const ModelConfig& config, std::vector<double> parameters)
    : config_(config), layout_((config.validate(), config)), params_(std::move(parameters)) {
  if (params_.size() != layout_.total) {
    throw ValidationError("parameter count " + std::to_string(params_.size()) +
                          " does not match config (" + std::to_string(layout_.total) + ")");
  }
}

ConvDecoder build_model(const ModelConfig& config) { return ConvDecoder(config); }

void ConvDecoder::run_forward(const Matrix& x, Activations& acts) const {
  const auto& c = config_;
  const std::size_t C = c.input_channels;
  const std::size_t L = c.conv_length();
  const std::size_t P = c.pooled_length();
  const std::size_t rows = c.temporal_kernels * C;
  const double* p = params_.data();

  acts.temporal.assign(rows * L, 0.0);
  for (std::size_t k = 0; k < c.temporal_kernels; ++k) {
    const double* w = p + layout_.temporal_w + k * c.temporal_width;
    const double bias = p[layout_.temporal_b + k];
    for (std::size_t ch = 0; ch < C; ++ch) {
      double* out = acts.temporal.data() + (k * C + ch) * L;
      const double* in = x.row(ch).data();
      for (std::size_t l = 0; l < L; ++l) out[l] = bias;
      for (std::size_t j = 0; j < c.temporal_width; ++j) {
        const double wj = w[j];
        for (std::size_t l = 0; l < L; ++l) out[l] += wj * in[l + j];
      }
      for (std::size_t l = 0; l < L; ++l) out[l] = activate(c.activation, out[l]);
    }
  }

  acts.spatial.assign(c.spatial_kernels * L, 0.0);
  for (std::size_t s = 0; s < c.spatial_kernels; ++s) {
    double* out = acts.spatial.data() + s * L;
    const double* w = p + layout_.spatial_w + s * rows;
    for (std::size_t l = 0; l < L; ++l) out[l] = p[layout_.spatial_b + s];
    for (std::size_t r = 0; r < rows; ++r) {
      const double wr = w[r];
      const double* in = acts.temporal.data() + r * L;
      for (std::size_t l = 0; l < L; ++l) out[l] += wr * in[l];
    }
    for (std::size_t l = 0; l < L; ++l) out[l] = activate(c.activation, out[l]);
  }

  const std::size_t pw = c.effective_pool_width();
  const double inv_pool = 1.0 / static_cast<double>(pw);
  acts.pooled.assign(c.spatial_kernels * P, 0.0);
  for (std::size_t s = 0; s < c.spatial_kernels; ++s) {
    for (std::size_t q = 0; q < P; ++q) {
      double sum = 0.0;
      for (std::size_t j = 0; j < pw; ++j) {
        sum += acts.spatial[s * L + q * pw + j];
      }
      acts.pooled[s * P + q] = sum * inv_pool;
    }
  }

  const std::size_t F = c.feature_count();
  const std::vector<double>* head_in = &acts.pooled;
  if (c.hidden_units > 0) {
    acts.hidden.assign(c.hidden_units, 0.0);
    for (std::size_t u = 0; u < c.hidden_units; ++u) {
      const double* w = p + layout_.hidden_w + u * F;
      double z = p[layout_.hidden_b + u];
      for (std::size_t f = 0; f < F; ++f) z += w[f] * acts.pooled[f];
      acts.hidden[u] = activate(c.activation, z);
    }
    head_in = &acts.hidden;
  }
  const std::size_t D = head_in->size();
  acts.logits.assign(c.n_classes, 0.0);
  for (std::size_t k = 0; k < c.n_classes; ++k) {
    const double* w = p + layout_.output_w + k * D;
    double z = p[layout_.output_b + k];
    for (std::size_t i = 0; i < D; ++i) z += w[i] * (*head_in)[i];
    acts.logits[k] = z;
  }
}

void ConvDecoder::run_backward(const Matrix& x, const Activations& acts,
                               std::span<const double> dlogits,
                               std::span<double> g, Matrix* input_grad) const {
  const auto& c = config_;
  const bool want_params = !g.empty();
  const std::size_t C = c.input_channels;
  const std::size_t L = c.conv_length();
  const std::size_t P = c.pooled_length();
  const std::size_t F = c.feature_count();
  const std::size_t rows = c.temporal_kernels * C;
  const double* p = params_.data();

  // Output layer.
  const std::vector<double>& head_in = c.hidden_units > 0 ? acts.hidden : acts.pooled;
  const std::size_t D = head_in.size();
  std::vector<double> d_head(D, 0.0);
  for (std::size_t k = 0; k < c.n_classes; ++k) {
    const double dk = dlogits[k];
    if (dk == 0.0) continue;
    const double* w = p + layout_.output_w + k * D;
    for (std::size_t i = 0; i < D; ++i) d_head[i] += w[i] * dk;
    if (want_params) {
      double* gw = g.data() + layout_.output_w + k * D;
      for (std::size_t i = 0; i < D; ++i) gw[i] += dk * head_in[i];
      g[layout_.output_b + k] += dk;
    }
  }

  // Hidden layer.
  std::vector<double> d_pooled;
  if (c.hidden_units > 0) {
    d_pooled.assign(F, 0.0);
    for (std::size_t u = 0; u < c.hidden_units; ++u) {
      const double dz = d_head[u] * activate_grad(c.activation, acts.hidden[u]);
      if (dz == 0.0) continue;
      const double* w = p + layout_.hidden_w + u * F;
      for (std::size_t f = 0; f < F; ++f) d_pooled[f] += w[f] * dz;
      if (want_params) {
        double* gw = g.data() + layout_.hidden_w + u * F;
        for (std::size_t f = 0; f < F; ++f) gw[f] += dz * acts.pooled[f];
        g[layout_.hidden_b + u] += dz;
      }
    }
  } else {
    d_pooled = std::move(d_head);
  }

  // Pool + spatial activation.
  const std::size_t pw = c.effective_pool_width();
  const double inv_pool = 1.0 / static_cast<double>(pw);
  std::vector<double> dz2(c.spatial_kernels * L, 0.0);
  for (std::size_t s = 0; s < c.spatial_kernels; ++s) {
    for (std::size_t q = 0; q < P; ++q) {
      const double d = d_pooled[s * P + q] * inv_pool;
      for (std::size_t j = 0; j < pw; ++j) {
        const std::size_t l = q * pw + j;
        dz2[s * L + l] = d * activate_grad(c.activation, acts.spatial[s * L + l]);
      }
    }
  }

  // Spatial conv.
  std::vector<double> dz1(rows * L, 0.0);
  for (std::size_t s = 0; s < c.spatial_kernels; ++s) {
    const double* d = dz2.data() + s * L;
    const double* w = p + layout_.spatial_w + s * rows;
    for (std::size_t r = 0; r < rows; ++r) {
      const double wr = w[r];
      double* out = dz1.data() + r * L;
      for (std::size_t l = 0; l < L; ++l) out[l] += wr * d[l];
    }
    if (want_params) {
      double* gw = g.data() + layout_.spatial_w + s * rows;
      double gb = 0.0;
      for (std::size_t l = 0; l < L; ++l) gb += d[l];
      g[layout_.spatial_b + s] += gb;
      for (std::size_t r = 0; r < rows; ++r) {
        const double* a = acts.temporal.data() + r * L;
        double sum = 0.0;
        for (std::size_t l = 0; l < L; ++l) sum += d[l] * a[l];
        gw[r] += sum;
      }
    }
  }
  for (std::size_t i = 0; i < dz1.size(); ++i) {
    dz1[i] *= activate_grad(c.activation, acts.temporal[i]);
  }

  // Temporal conv.
  for (std::size_t k = 0; k < c.temporal_kernels; ++k) {
    const double* w = p + layout_.temporal_w + k * c.temporal_width;
    for (std::size_t ch = 0; ch < C; ++ch) {
      const double* d = dz1.data() + (k * C + ch) * L;
      if (input_grad != nullptr) {
        double* dx = input_grad->row(ch).data();
        for (std::size_t j = 0; j < c.temporal_width; ++j) {
          const double wj = w[j];
          for (std::size_t l = 0; l < L; ++l) dx[l + j] += wj * d[l];
        }
      }
      if (want_params) {
        const double* in = x.row(ch).data();
        double* gw = g.data() + layout_.temporal_w + k * c.temporal_width;
        double gb = 0.0;
        for (std::size_t l = 0; l < L; ++l) gb += d[l];
        g[layout_.temporal_b + k] += gb;
        for (std::size_t j = 0; j < c.temporal_width; ++j) {
          double sum = 0.0;
          for (std::size_t l = 0; l < L; ++l) sum += d[l] * in[l + j];
          gw[j] += sum;
        }
      }
    }
  }
}

std::vector<double> ConvDecoder::forward(const Matrix& x) const {
  check_input(x);
  Activations acts;
  run_forward(x, acts);
  return std::move(acts.logits);
}

Matrix ConvDecoder::input_gradient(const Matrix& x, std::size_t target) const {
  check_input(x);
  if (target >= config_.n_classes) throw ValidationError("target out of range");
  Activations acts;
  run_forward(x, acts);
  std::vector<double> dlogits(config_.n_classes, 0.0);
  dlogits[target] = 1.0;
  Matrix grad(x.rows(), x.cols());
  run_backward(x, acts, dlogits, {}, &grad);
  return grad;
}

double ConvDecoder::accumulate_loss_gradient(const Matrix& x, std::size_t label,
                                             std::span<double> grad) const {
  check_input(x);
  if (label >= config_.n_classes) throw ValidationError("label out of range");
  if (grad.size() != params_.size()) throw ValidationError("gradient buffer size mismatch");
  Activations acts;
  run_forward(x, acts);
  std::vector<double> probs = acts.logits;
  softmax_inplace(probs);
  const double loss = -std::log(std::max(probs[label], 1e-300));
  probs[label] -= 1.0;
  run_backward(x, acts, probs, grad, nullptr);
  return loss;
}

// --- training ----------------------------------------------------------------

void TrainSpec::validate() const {
  if (epochs < 1) throw ValidationError("epochs must be >= 1");
  if (batch_size < 1) throw ValidationError("batch_size must be >= 1");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw ValidationError("learning_rate must be finite and non-negative");
  }
}

TrainResult train(const ConvDecoder& initial,
                  std::span<const eegdata::Window> windows,
                  const TrainSpec& spec) {
  spec.validate();
  if (windows.empty()) throw ValidationError("training needs at least one window");
  for (const auto& w : windows) {
    initial.check_input(w.data);
    if (w.label < 0 || static_cast<std::size_t>(w.label) >= initial.n_classes()) {
      throw ValidationError("training label " + std::to_string(w.label) + " out of range");
    }
  }

  ConvDecoder model = initial;
  auto params = model.mutable_parameters();
  const std::size_t n_params = params.size();
  std::vector<double> grad(n_params), m1(n_params, 0.0), m2(n_params, 0.0);
  std::vector<std::size_t> order(windows.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(spec.seed);

  TrainResult result{model, {}, {}};
  std::vector<double> window_loss(windows.size());
  long long step = 0;
  for (int epoch = 1; epoch <= spec.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t begin = 0; begin < order.size(); begin += spec.batch_size) {
      const std::size_t end = std::min(order.size(), begin + spec.batch_size);
      std::fill(grad.begin(), grad.end(), 0.0);
      for (std::size_t i = begin; i < end; ++i) {
        const auto& w = windows[order[i]];
        window_loss[order[i]] = model.accumulate_loss_gradient(
            w.data, static_cast<std::size_t>(w.label), grad);
      }
      const double scale = 1.0 / static_cast<double>(end - begin);
      ++step;
      if (spec.optimizer == Optimizer::kAdam) {
        const double c1 = 1.0 - std::pow(spec.beta1, static_cast<double>(step));
        const double c2 = 1.0 - std::pow(spec.beta2, static_cast<double>(step));
        for (std::size_t j = 0; j < n_params; ++j) {
          const double gj = grad[j] * scale;
          m1[j] = spec.beta1 * m1[j] + (1.0 - spec.beta1) * gj;
          m2[j] = spec.beta2 * m2[j] + (1.0 - spec.beta2) * gj * gj;
          params[j] -= spec.learning_rate * (m1[j] / c1) / (std::sqrt(m2[j] / c2) + 1e-8);
        }
      } else {
        for (std::size_t j = 0; j < n_params; ++j) {
          m1[j] = spec.momentum * m1[j] + grad[j] * scale;
          params[j] -= spec.learning_rate * m1[j];
        }
      }
    }
    // Summed in window order so the value does not depend on the shuffle.
    double epoch_loss = 0.0;
    for (double l : window_loss) epoch_loss += l;
    epoch_loss /= static_cast<double>(windows.size());
    const bool params_finite =
        std::all_of(params.begin(), params.end(), [](double v) { return std::isfinite(v); });
    if (!std::isfinite(epoch_loss) || !params_finite) {
      throw NumericalError("training diverged: non-finite " +
                           std::string(params_finite ? "loss" : "parameters") +
                           " in epoch " + std::to_string(epoch));
    }
    result.loss_history.push_back(epoch_loss);
  }
  result.model = std::move(model);
  result.meta = {spec.epochs, result.loss_history.back(), spec.seed};
  return result;
}

double accuracy(const DifferentiableModel& model,
                std::span<const eegdata::Window> windows) {
  if (windows.empty()) throw ValidationError("accuracy of an empty window set");
  std::size_t correct = 0;
  for (const auto& w : windows) {
    if (predict(model, w.data) == static_cast<std::size_t>(w.label)) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(windows.size());
}

}  // namespace plugselect::diffnet
