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

#ifndef TCLNET_MODEL_HPP_
#define TCLNET_MODEL_HPP_

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "tclnet/layers.hpp"

namespace tclnet {

/// Declarative description of the encoder–decoder heatmap network.
///
/// The trunk is: a fixed preprocessing stack that brings the input to a
/// quarter of its size, `scales` rounds of (max-pool, ResBlock), one
/// bottleneck ResBlock, `scales` rounds of (upsample, ResBlock), and a
/// ConvBlock 1×1 + Conv 1×1 head producing one linear heatmap channel.
struct ModelConfig {
  std::size_t input_size = 512;
  std::size_t scales = 3;
  /// One width per pooled stage plus one for the bottleneck (scales + 1).
  std::vector<std::size_t> encoder_filters{256, 256, 256, 256};
  /// One width per upsampling stage, coarse to fine (scales).
  std::vector<std::size_t> decoder_filters{128, 64, 64};
  bool use_encoder_decoder_skips = false;
  bool deep_supervision = false;
  std::size_t bottleneck_ratio = 2;
  /// Divides every hidden width (not the single output channel).
  std::size_t width_divisor = 1;

  /// Defaults for a given number of scales with the standard filter lists.
  static ModelConfig with_scales(std::size_t scales);

  std::size_t output_size() const { return input_size / 4; }
  /// Throws ConfigError naming the offending field.
  void validate() const;

  /// Canonical `model.key=value` lines; stable across runs.
  std::string to_text() const;
  /// Reads `model.*` keys from key=value text; other keys are ignored.
  static ModelConfig from_text(const std::string& text);

  bool operator==(const ModelConfig&) const = default;
};

template <typename T>
class TclNet {
 public:
  static TclNet build(const ModelConfig& config, std::uint64_t seed);

  TclNet(TclNet&&) noexcept = default;
  TclNet& operator=(TclNet&&) noexcept = default;

  /// (B,1,S,S) → (B,1,S/4,S/4) heatmap logits.
  Tensor<T> forward(const Tensor<T>& x, Mode mode);
  /// All heatmaps: with deep supervision the auxiliary maps coarse to fine
  /// come first; the last element is always the main output.
  std::vector<Tensor<T>> forward_all(const Tensor<T>& x, Mode mode);

  /// Trunk layers in execution order, one row per layer.
  std::vector<LayerRow> layer_rows() const;
  std::vector<NamedTensor<T>> named_parameters() const;
  std::vector<NamedTensor<T>> named_buffers() const;
  std::size_t parameter_count() const;
  const ModelConfig& config() const { return config_; }

  /// Mutable access for tests and probes.
  Conv2d<T>& head_conv() { return *head_conv_; }
  ResBlock<T>& bottleneck() { return *bottleneck_; }

 private:
  TclNet() = default;

  ModelConfig config_;
  std::vector<std::unique_ptr<Layer<T>>> preprocess_;
  std::vector<std::unique_ptr<MaxPool2x2<T>>> pools_;
  std::vector<std::unique_ptr<ResBlock<T>>> encoder_;
  std::unique_ptr<ResBlock<T>> bottleneck_;
  std::vector<std::unique_ptr<Upsample2x<T>>> ups_;
  std::vector<std::unique_ptr<ResBlock<T>>> decoder_;
  std::vector<std::unique_ptr<ResBlock<T>>> skips_;
  std::vector<std::unique_ptr<Conv2d<T>>> aux_heads_;
  std::unique_ptr<ConvBlock<T>> head_block_;
  std::unique_ptr<Conv2d<T>> head_conv_;
};

// ---------------------------------------------------------------------------
// Weights archive
//
// Little-endian layout:
//   "TCLNETW\0" | u32 version | u32 value bytes (4 or 8) | u64 header length |
//   header text | u64 entry count | entries | u64 payload bytes | payload |
//   u64 FNV-1a checksum of every preceding byte
// entry = u32 name length | name | u32 rank | u64 extents[rank] | u64 byte offset

inline constexpr std::uint32_t kWeightsVersion = 1;

struct ArchiveTensor {
  std::string name;
  Shape shape;
  std::vector<double> values;
};

struct Archive {
  std::string header;
  std::uint32_t value_bytes = 4;
  std::vector<ArchiveTensor> tensors;

  const ArchiveTensor* find(const std::string& name) const;
};

template <typename T>
void write_archive(const std::filesystem::path& path, const std::string& header,
                   const std::vector<NamedTensor<T>>& tensors);
Archive read_archive(const std::filesystem::path& path);

/// Copies archive entries into `targets` by name; missing entries or shape
/// mismatches raise CorruptWeightsError.
template <typename T>
void restore_tensors(const Archive& archive, const std::vector<NamedTensor<T>>& targets);

template <typename T>
void save_weights(const TclNet<T>& net, const std::filesystem::path& path);
template <typename T>
TclNet<T> load_weights(const std::filesystem::path& path);
/// As above, but raises ConfigError when the stored config differs.
template <typename T>
TclNet<T> load_weights(const std::filesystem::path& path, const ModelConfig& expected);

}  // namespace tclnet

#endif  // TCLNET_MODEL_HPP_
