/*
 * Copyright 2026 The TCLNet Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef TCLNET_LAYERS_HPP_
#define TCLNET_LAYERS_HPP_

#include <cstddef>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "tclnet/tensor.hpp"

namespace tclnet {

enum class Mode { kTrain, kEval };

template <typename T>
struct NamedTensor {
  std::string name;
  Tensor<T> tensor;
};

/// One row of an architecture listing, e.g. {"ResBlock", 256, "3×3"}.
struct LayerRow {
  std::string kind;
  std::size_t channels = 0;
  std::string kernel;  // "k×k" or "-"

  std::string str() const;
  bool operator==(const LayerRow&) const = default;
};

// ---------------------------------------------------------------------------
// Functional primitives. All are taped when an input requires gradients.

/// Cross-correlation with zero padding. x: (B,Cin,H,W), weight: (Cout,Cin,k,k),
/// bias: (Cout) or undefined. Output extent is floor((H + 2p - k)/s) + 1.
template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias,
                 std::size_t stride, std::size_t padding);

template <typename T>
struct BatchNormState {
  Tensor<T> running_mean;  // (C)
  Tensor<T> running_var;   // (C), unbiased batch variance is folded in
  double momentum = 0.1;
  double eps = 1e-5;
};

/// Per-channel batch normalization of (B,C,H,W). Train mode normalizes with
/// batch statistics and updates `state`; eval mode uses running statistics.
template <typename T>
Tensor<T> batch_norm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                     BatchNormState<T>& state, Mode mode);

/// max(v, 0); the subgradient at 0 is 0.
template <typename T> Tensor<T> relu(const Tensor<T>& x);
/// 2×2 window, stride 2; gradient goes to the first maximum of each window.
template <typename T> Tensor<T> maxpool2x2(const Tensor<T>& x);
/// Nearest-neighbour 2× upsampling: every pixel becomes a 2×2 block.
template <typename T> Tensor<T> upsample_nearest2x(const Tensor<T>& x);

// ---------------------------------------------------------------------------
// Layers

template <typename T>
class Layer {
 public:
  virtual ~Layer() = default;
  virtual Tensor<T> forward(const Tensor<T>& x, Mode mode) = 0;
  virtual LayerRow row() const = 0;
  /// Trainable tensors, in a stable order.
  virtual void named_parameters(const std::string& prefix, std::vector<NamedTensor<T>>& out) const {
    (void)prefix;
    (void)out;
  }
  /// Non-trainable state (batch-norm running statistics).
  virtual void named_buffers(const std::string& prefix, std::vector<NamedTensor<T>>& out) const {
    (void)prefix;
    (void)out;
  }
};

/// Padding that keeps H/s extents: 3 for 7×7, 1 for 3×3, 0 for 1×1.
std::size_t same_padding(std::size_t kernel);

template <typename T>
class Conv2d final : public Layer<T> {
 public:
  /// Weights ~ N(0, weight_std²); He-normal (√(2/fan_in)) when unset.
  Conv2d(std::size_t in_channels, std::size_t out_channels, std::size_t kernel, std::size_t stride,
         std::mt19937_64& rng, std::optional<double> weight_std = std::nullopt);

  Tensor<T> forward(const Tensor<T>& x, Mode mode) override;
  LayerRow row() const override;
  void named_parameters(const std::string& prefix, std::vector<NamedTensor<T>>& out) const override;

  std::size_t in_channels() const { return in_; }
  std::size_t out_channels() const { return out_; }
  std::size_t kernel() const { return kernel_; }
  std::size_t stride() const { return stride_; }
  std::size_t padding() const { return padding_; }
  Tensor<T>& weight() { return weight_; }
  Tensor<T>& bias() { return bias_; }
  const Tensor<T>& weight() const { return weight_; }
  const Tensor<T>& bias() const { return bias_; }

 private:
  std::size_t in_, out_, kernel_, stride_, padding_;
  Tensor<T> weight_;
  Tensor<T> bias_;
};

template <typename T>
class BatchNorm2d final : public Layer<T> {
 public:
  explicit BatchNorm2d(std::size_t channels, double momentum = 0.1, double eps = 1e-5);

  Tensor<T> forward(const Tensor<T>& x, Mode mode) override;
  LayerRow row() const override { return {"BatchNorm", channels_, "-"}; }
  void named_parameters(const std::string& prefix, std::vector<NamedTensor<T>>& out) const override;
  void named_buffers(const std::string& prefix, std::vector<NamedTensor<T>>& out) const override;

  Tensor<T>& gamma() { return gamma_; }
  Tensor<T>& beta() { return beta_; }
  BatchNormState<T>& state() { return state_; }

 private:
  std::size_t channels_;
  Tensor<T> gamma_;
  Tensor<T> beta_;
  BatchNormState<T> state_;
};

/// conv → batch norm → ReLU.
template <typename T>
class ConvBlock final : public Layer<T> {
 public:
  ConvBlock(std::size_t in_channels, std::size_t out_channels, std::size_t kernel,
            std::mt19937_64& rng);

  Tensor<T> forward(const Tensor<T>& x, Mode mode) override;
  LayerRow row() const override;
  void named_parameters(const std::string& prefix, std::vector<NamedTensor<T>>& out) const override;
  void named_buffers(const std::string& prefix, std::vector<NamedTensor<T>>& out) const override;

  Conv2d<T>& conv() { return conv_; }
  BatchNorm2d<T>& bn() { return bn_; }

 private:
  Conv2d<T> conv_;
  BatchNorm2d<T> bn_;
};

/// Bottleneck residual unit:
///   out = skip(x) + expand(block2(block1(compress(x))))
/// compress/expand are plain 1×1 convolutions, block1/block2 are 3×3
/// ConvBlocks at width out/bottleneck_ratio, and skip is the identity when
/// in == out, otherwise a 1×1 projection.
template <typename T>
class ResBlock final : public Layer<T> {
 public:
  ResBlock(std::size_t in_channels, std::size_t out_channels, std::size_t bottleneck_ratio,
           std::mt19937_64& rng);

  Tensor<T> forward(const Tensor<T>& x, Mode mode) override;
  LayerRow row() const override { return {"ResBlock", out_, "3×3"}; }
  void named_parameters(const std::string& prefix, std::vector<NamedTensor<T>>& out) const override;
  void named_buffers(const std::string& prefix, std::vector<NamedTensor<T>>& out) const override;

  std::size_t in_channels() const { return in_; }
  std::size_t out_channels() const { return out_; }
  Conv2d<T>& compress() { return compress_; }
  ConvBlock<T>& block1() { return block1_; }
  ConvBlock<T>& block2() { return block2_; }
  Conv2d<T>& expand() { return expand_; }
  /// Null when the skip path is the identity.
  Conv2d<T>* projection() { return projection_.get(); }

 private:
  std::size_t in_, out_;
  Conv2d<T> compress_;
  ConvBlock<T> block1_;
  ConvBlock<T> block2_;
  Conv2d<T> expand_;
  std::unique_ptr<Conv2d<T>> projection_;
};

template <typename T>
class MaxPool2x2 final : public Layer<T> {
 public:
  explicit MaxPool2x2(std::size_t channels) : channels_(channels) {}
  Tensor<T> forward(const Tensor<T>& x, Mode) override { return maxpool2x2(x); }
  LayerRow row() const override { return {"Maxpooling", channels_, "-"}; }

 private:
  std::size_t channels_;
};

template <typename T>
class Upsample2x final : public Layer<T> {
 public:
  explicit Upsample2x(std::size_t channels) : channels_(channels) {}
  Tensor<T> forward(const Tensor<T>& x, Mode) override { return upsample_nearest2x(x); }
  LayerRow row() const override { return {"Upsample", channels_, "-"}; }

 private:
  std::size_t channels_;
};

}  // namespace tclnet

#endif  // TCLNET_LAYERS_HPP_
