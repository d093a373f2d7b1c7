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

#ifndef PLUGSELECT_DIFFNET_HPP_
#define PLUGSELECT_DIFFNET_HPP_

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "plugselect/eegdata.hpp"
#include "plugselect/matrix.hpp"

namespace plugselect::diffnet {

// Anything that maps a C x T input to class logits and can report the exact
// gradient of one logit with respect to the input. Implementations must be
// safe for concurrent const use.
class DifferentiableModel {
 public:
  virtual ~DifferentiableModel() = default;

  virtual std::size_t input_channels() const = 0;
  virtual std::size_t input_samples() const = 0;
  virtual std::size_t n_classes() const = 0;

  virtual std::vector<double> forward(const Matrix& x) const = 0;
  virtual Matrix input_gradient(const Matrix& x, std::size_t target) const = 0;

  // Throws ValidationError unless x is input_channels() x input_samples().
  void check_input(const Matrix& x) const;
};

// Argmax with ties going to the lowest index.
std::size_t argmax(std::span<const double> values);

std::size_t predict(const DifferentiableModel& model, const Matrix& x);

Matrix finite_diff_input_gradient(const DifferentiableModel& model,
                                  const Matrix& x, std::size_t target,
                                  double step);

// h(x) = sum_{c,t} W[k](c,t) x(c,t) + bias[k]. Used as an analytic reference.
class LinearModel final : public DifferentiableModel {
 public:
  LinearModel(std::vector<Matrix> weights, std::vector<double> bias);

  // Random weights in [-1, 1), zero bias.
  static LinearModel random(std::size_t channels, std::size_t samples,
                            std::size_t classes, std::uint64_t seed);

  std::size_t input_channels() const override { return weights_.front().rows(); }
  std::size_t input_samples() const override { return weights_.front().cols(); }
  std::size_t n_classes() const override { return weights_.size(); }

  std::vector<double> forward(const Matrix& x) const override;
  Matrix input_gradient(const Matrix& x, std::size_t target) const override;

  const Matrix& weights(std::size_t k) const { return weights_.at(k); }

 private:
  std::vector<Matrix> weights_;
  std::vector<double> bias_;
};

enum class Activation { kTanh, kRelu, kIdentity };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& name);

// Scaled-down temporal/spatial convolutional decoder:
//   temporal conv (1 x width, shared over channels) -> act
//   -> spatial conv (full channel height) -> act
//   -> average pool (trailing remainder dropped)
//   -> [dense hidden -> act] -> dense logits
struct ModelConfig {
  std::size_t input_channels = 16;
  std::size_t input_samples = 64;
  std::size_t temporal_kernels = 8;
  std::size_t temporal_width = 9;
  std::size_t spatial_kernels = 8;
  std::size_t pool_width = 4;  // 0 pools over the whole conv output
  std::size_t hidden_units = 32;  // 0 removes the hidden layer
  std::size_t n_classes = 2;
  Activation activation = Activation::kTanh;
  std::uint64_t seed = 1;

  void validate() const;

  std::size_t conv_length() const { return input_samples - temporal_width + 1; }
  std::size_t effective_pool_width() const {
    return pool_width == 0 ? conv_length() : pool_width;
  }
  std::size_t pooled_length() const { return conv_length() / effective_pool_width(); }
  std::size_t feature_count() const { return spatial_kernels * pooled_length(); }
  // Closed-form number of trainable parameters.
  std::size_t parameter_count() const;
  // Multiply-accumulates of one forward pass.
  std::size_t forward_macs() const;

  bool operator==(const ModelConfig&) const = default;
};

// Offsets of each parameter block inside the flat parameter vector. The
// order is: temporal kernels, temporal biases, spatial kernels, spatial
// biases, hidden weights, hidden biases, output weights, output biases.
struct ParameterLayout {
  std::size_t temporal_w, temporal_b, spatial_w, spatial_b;
  std::size_t hidden_w, hidden_b, output_w, output_b;
  std::size_t total;

  explicit ParameterLayout(const ModelConfig& config);
};

class ConvDecoder final : public DifferentiableModel {
 public:
  // Initializes weights and biases uniformly in +-1/sqrt(fan_in).
  explicit ConvDecoder(const ModelConfig& config);
  ConvDecoder(const ModelConfig& config, std::vector<double> parameters);

  std::size_t input_channels() const override { return config_.input_channels; }
  std::size_t input_samples() const override { return config_.input_samples; }
  std::size_t n_classes() const override { return config_.n_classes; }

  std::vector<double> forward(const Matrix& x) const override;
  Matrix input_gradient(const Matrix& x, std::size_t target) const override;

  // Adds d(cross-entropy of `label`)/d(parameters) into `grad` (same layout
  // as parameters()) and returns the loss.
  double accumulate_loss_gradient(const Matrix& x, std::size_t label,
                                  std::span<double> grad) const;

  const ModelConfig& config() const noexcept { return config_; }
  std::span<const double> parameters() const noexcept { return params_; }
  std::span<double> mutable_parameters() noexcept { return params_; }

 private:
  struct Activations;
  void run_forward(const Matrix& x, Activations& acts) const;
  void run_backward(const Matrix& x, const Activations& acts,
                    std::span<const double> dlogits, std::span<double> param_grad,
                    Matrix* input_grad) const;

  ModelConfig config_;
  ParameterLayout layout_;
  std::vector<double> params_;
};

ConvDecoder build_model(const ModelConfig& config);

enum class Optimizer { kSgdMomentum, kAdam };

std::string to_string(Optimizer o);
Optimizer optimizer_from_string(const std::string& name);

struct TrainSpec {
  int epochs = 30;
  std::size_t batch_size = 16;
  double learning_rate = 1e-3;
  Optimizer optimizer = Optimizer::kAdam;
  double momentum = 0.9;
  double beta1 = 0.9;
  double beta2 = 0.999;
  std::uint64_t seed = 1;

  void validate() const;
};

struct TrainingMeta {
  int epochs = 0;
  double final_loss = 0.0;
  std::uint64_t seed = 0;
};

struct TrainResult {
  ConvDecoder model;
  std::vector<double> loss_history;  // mean cross-entropy per epoch
  TrainingMeta meta;
};

// Mini-batch softmax cross-entropy minimization. Samples are visited in a
// seeded shuffle and gradients are summed sequentially, so results are
// bit-reproducible.
TrainResult train(const ConvDecoder& initial,
                  std::span<const eegdata::Window> windows,
                  const TrainSpec& spec);

double accuracy(const DifferentiableModel& model,
                std::span<const eegdata::Window> windows);

// Checkpoint = `<stem>.json` sidecar + `<stem>.bin` weights.
struct Checkpoint {
  ConvDecoder model;
  TrainingMeta meta;
};

void save_checkpoint(const ConvDecoder& model, const TrainingMeta& meta,
                     const std::filesystem::path& stem);
Checkpoint load_checkpoint(const std::filesystem::path& stem);

std::vector<std::uint8_t> encode_weights(std::span<const double> parameters);
std::vector<double> decode_weights(std::span<const std::uint8_t> bytes);

}  // namespace plugselect::diffnet

#endif  // PLUGSELECT_DIFFNET_HPP_
