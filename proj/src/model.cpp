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

#include "tclnet/model.hpp"

#include <random>
#include <sstream>

#include "tclnet/keyvalue.hpp"

namespace tclnet {

namespace {

// Preprocessing widths, in order: Conv-S2, ConvBlock, ResBlock, ResBlock,
// Conv, ResBlock, ResBlock.
constexpr std::size_t kPreWidths[] = {16, 32, 32, 32, 64, 64, 128};
constexpr std::size_t kHeadWidth = 64;
// Heatmap heads start near zero so the first steps fit shape, not scale.
constexpr double kHeadInitStd = 1e-3;

std::size_t scaled(std::size_t width, std::size_t divisor) { return width / divisor; }

}  // namespace

ModelConfig ModelConfig::with_scales(std::size_t scales) {
  ModelConfig c;
  c.scales = scales;
  c.encoder_filters.assign(scales + 1, 256);
  c.decoder_filters.clear();
  for (std::size_t i = 0; i < scales; ++i) {
    c.decoder_filters.push_back(i + 1 == scales ? 64 : std::max<std::size_t>(64, 128 >> i));
  }
  return c;
}

void ModelConfig::validate() const {
  if (scales < 1 || scales > 5) {
    throw ConfigError("scales: must be in [1,5], got " + std::to_string(scales));
  }
  if (encoder_filters.size() != scales + 1) {
    throw ConfigError("encoder_filters: expected " + std::to_string(scales + 1) +
                      " entries (one per scale plus bottleneck), got " +
                      std::to_string(encoder_filters.size()));
  }
  if (decoder_filters.size() != scales) {
    throw ConfigError("decoder_filters: expected " + std::to_string(scales) + " entries, got " +
                      std::to_string(decoder_filters.size()));
  }
  const std::size_t granularity = std::size_t{4} << scales;
  if (input_size == 0 || input_size % granularity != 0) {
    throw ConfigError("input_size: must be a positive multiple of " + std::to_string(granularity) +
                      " for " + std::to_string(scales) + " scales, got " +
                      std::to_string(input_size));
  }
  if (bottleneck_ratio == 0) throw ConfigError("bottleneck_ratio: must be positive");
  if (width_divisor == 0) throw ConfigError("width_divisor: must be positive");
  auto check_width = [&](const char* field, std::size_t w, bool residual) {
    const std::size_t s = scaled(w, width_divisor);
    if (s == 0 || (residual && s / bottleneck_ratio == 0)) {
      throw ConfigError(std::string(field) + ": width " + std::to_string(w) +
                        " is too small for width_divisor " + std::to_string(width_divisor) +
                        " and bottleneck_ratio " + std::to_string(bottleneck_ratio));
    }
  };
  for (std::size_t w : kPreWidths) check_width("width_divisor", w, true);
  for (std::size_t w : encoder_filters) check_width("encoder_filters", w, true);
  for (std::size_t w : decoder_filters) check_width("decoder_filters", w, true);
}

std::string ModelConfig::to_text() const {
  std::ostringstream out;
  out << "model.input_size=" << input_size << '\n'
      << "model.scales=" << scales << '\n'
      << "model.encoder_filters=" << join_sizes(encoder_filters) << '\n'
      << "model.decoder_filters=" << join_sizes(decoder_filters) << '\n'
      << "model.use_encoder_decoder_skips=" << (use_encoder_decoder_skips ? "true" : "false") << '\n'
      << "model.deep_supervision=" << (deep_supervision ? "true" : "false") << '\n'
      << "model.bottleneck_ratio=" << bottleneck_ratio << '\n'
      << "model.width_divisor=" << width_divisor << '\n';
  return out.str();
}

ModelConfig ModelConfig::from_text(const std::string& text) {
  ModelConfig c;
  for (const auto& [key, value] : parse_key_values(text)) {
    if (key.rfind("model.", 0) != 0) continue;
    const std::string field = key.substr(6);
    if (field == "input_size") c.input_size = parse_size(key, value);
    else if (field == "scales") c.scales = parse_size(key, value);
    else if (field == "encoder_filters") c.encoder_filters = parse_size_list(key, value);
    else if (field == "decoder_filters") c.decoder_filters = parse_size_list(key, value);
    else if (field == "use_encoder_decoder_skips") c.use_encoder_decoder_skips = parse_bool(key, value);
    else if (field == "deep_supervision") c.deep_supervision = parse_bool(key, value);
    else if (field == "bottleneck_ratio") c.bottleneck_ratio = parse_size(key, value);
    else if (field == "width_divisor") c.width_divisor = parse_size(key, value);
    else throw ConfigError("unknown model key '" + key + "'");
  }
  return c;
}

// ---------------------------------------------------------------------------

template <typename T>
TclNet<T> TclNet<T>::build(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  TclNet net;
  net.config_ = config;
  std::mt19937_64 rng(seed);
  const std::size_t d = config.width_divisor;
  const std::size_t r = config.bottleneck_ratio;
  auto w = [d](std::size_t width) { return scaled(width, d); };

  // Quarter-resolution preprocessing.
  auto& pre = net.preprocess_;
  pre.push_back(std::make_unique<Conv2d<T>>(1, w(16), 7, 2, rng));
  pre.push_back(std::make_unique<ConvBlock<T>>(w(16), w(32), 1, rng));
  pre.push_back(std::make_unique<ResBlock<T>>(w(32), w(32), r, rng));
  pre.push_back(std::make_unique<MaxPool2x2<T>>(w(32)));
  pre.push_back(std::make_unique<ResBlock<T>>(w(32), w(32), r, rng));
  pre.push_back(std::make_unique<Conv2d<T>>(w(32), w(64), 1, 1, rng));
  pre.push_back(std::make_unique<ResBlock<T>>(w(64), w(64), r, rng));
  pre.push_back(std::make_unique<ResBlock<T>>(w(64), w(128), r, rng));

  // Encoder: the skip features are the inputs to each pooling step.
  std::vector<std::size_t> skip_channels;
  std::size_t channels = w(128);
  for (std::size_t i = 0; i < config.scales; ++i) {
    skip_channels.push_back(channels);
    net.pools_.push_back(std::make_unique<MaxPool2x2<T>>(channels));
    net.encoder_.push_back(std::make_unique<ResBlock<T>>(channels, w(config.encoder_filters[i]), r, rng));
    channels = w(config.encoder_filters[i]);
  }
  net.bottleneck_ = std::make_unique<ResBlock<T>>(channels, w(config.encoder_filters.back()), r, rng);
  channels = w(config.encoder_filters.back());

  for (std::size_t i = 0; i < config.scales; ++i) {
    net.ups_.push_back(std::make_unique<Upsample2x<T>>(channels));
    if (config.use_encoder_decoder_skips) {
      const std::size_t from = skip_channels[config.scales - 1 - i];
      net.skips_.push_back(std::make_unique<ResBlock<T>>(from, channels, r, rng));
    }
    net.decoder_.push_back(std::make_unique<ResBlock<T>>(channels, w(config.decoder_filters[i]), r, rng));
    channels = w(config.decoder_filters[i]);
    if (config.deep_supervision && i + 1 < config.scales) {
      net.aux_heads_.push_back(std::make_unique<Conv2d<T>>(channels, 1, 1, 1, rng, kHeadInitStd));
    }
  }

  net.head_block_ = std::make_unique<ConvBlock<T>>(channels, w(kHeadWidth), 1, rng);
  net.head_conv_ = std::make_unique<Conv2d<T>>(w(kHeadWidth), 1, 1, 1, rng, kHeadInitStd);
  return net;
}

template <typename T>
std::vector<Tensor<T>> TclNet<T>::forward_all(const Tensor<T>& x, Mode mode) {
  const std::size_t s = config_.input_size;
  if (x.dim() != 4 || x.extent(1) != 1 || x.extent(2) != s || x.extent(3) != s) {
    throw DimensionError("TclNet expects (B,1," + std::to_string(s) + "," + std::to_string(s) +
                         ") input, got " + to_string(x.shape()));
  }
  Tensor<T> h = x;
  for (auto& layer : preprocess_) h = layer->forward(h, mode);

  std::vector<Tensor<T>> features;
  for (std::size_t i = 0; i < config_.scales; ++i) {
    if (!skips_.empty()) features.push_back(h);
    h = encoder_[i]->forward(pools_[i]->forward(h, mode), mode);
  }
  h = bottleneck_->forward(h, mode);

  std::vector<Tensor<T>> outputs;
  for (std::size_t i = 0; i < config_.scales; ++i) {
    h = ups_[i]->forward(h, mode);
    if (!skips_.empty()) h = add(h, skips_[i]->forward(features[config_.scales - 1 - i], mode));
    h = decoder_[i]->forward(h, mode);
    if (i < aux_heads_.size()) outputs.push_back(aux_heads_[i]->forward(h, mode));
  }
  outputs.push_back(head_conv_->forward(head_block_->forward(h, mode), mode));
  return outputs;
}

template <typename T>
Tensor<T> TclNet<T>::forward(const Tensor<T>& x, Mode mode) {
  return forward_all(x, mode).back();
}

template <typename T>
std::vector<LayerRow> TclNet<T>::layer_rows() const {
  std::vector<LayerRow> rows;
  for (const auto& layer : preprocess_) rows.push_back(layer->row());
  for (std::size_t i = 0; i < config_.scales; ++i) {
    rows.push_back(pools_[i]->row());
    rows.push_back(encoder_[i]->row());
  }
  rows.push_back(bottleneck_->row());
  for (std::size_t i = 0; i < config_.scales; ++i) {
    rows.push_back(ups_[i]->row());
    rows.push_back(decoder_[i]->row());
  }
  rows.push_back(head_block_->row());
  rows.push_back(head_conv_->row());
  return rows;
}

namespace {
template <typename T, typename Fn>
void visit_layers(Fn&& fn, const std::vector<std::unique_ptr<Layer<T>>>& pre,
                  const std::vector<std::unique_ptr<ResBlock<T>>>& enc, const ResBlock<T>& bottleneck,
                  const std::vector<std::unique_ptr<ResBlock<T>>>& dec,
                  const std::vector<std::unique_ptr<ResBlock<T>>>& skips,
                  const std::vector<std::unique_ptr<Conv2d<T>>>& aux, const ConvBlock<T>& head_block,
                  const Conv2d<T>& head_conv) {
  for (std::size_t i = 0; i < pre.size(); ++i) fn("preprocess." + std::to_string(i) + ".", *pre[i]);
  for (std::size_t i = 0; i < enc.size(); ++i) fn("encoder." + std::to_string(i) + ".", *enc[i]);
  fn(std::string("bottleneck."), bottleneck);
  for (std::size_t i = 0; i < dec.size(); ++i) fn("decoder." + std::to_string(i) + ".", *dec[i]);
  for (std::size_t i = 0; i < skips.size(); ++i) fn("skip." + std::to_string(i) + ".", *skips[i]);
  for (std::size_t i = 0; i < aux.size(); ++i) fn("aux." + std::to_string(i) + ".", *aux[i]);
  fn(std::string("head.0."), head_block);
  fn(std::string("head.1."), head_conv);
}
}  // namespace

template <typename T>
std::vector<NamedTensor<T>> TclNet<T>::named_parameters() const {
  std::vector<NamedTensor<T>> out;
  visit_layers<T>(
      [&](const std::string& prefix, const Layer<T>& l) { l.named_parameters(prefix, out); },
      preprocess_, encoder_, *bottleneck_, decoder_, skips_, aux_heads_, *head_block_, *head_conv_);
  return out;
}

template <typename T>
std::vector<NamedTensor<T>> TclNet<T>::named_buffers() const {
  std::vector<NamedTensor<T>> out;
  visit_layers<T>(
      [&](const std::string& prefix, const Layer<T>& l) { l.named_buffers(prefix, out); },
      preprocess_, encoder_, *bottleneck_, decoder_, skips_, aux_heads_, *head_block_, *head_conv_);
  return out;
}

template <typename T>
std::size_t TclNet<T>::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : named_parameters()) n += p.tensor.numel();
  return n;
}

template class TclNet<float>;
template class TclNet<double>;

}  // namespace tclnet
