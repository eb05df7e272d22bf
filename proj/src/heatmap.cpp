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

#include "tclnet/heatmap.hpp"

#include <cmath>
#include <string>

namespace tclnet {

std::size_t HeatmapParams::input_size() const {
  return static_cast<std::size_t>(std::llround(static_cast<double>(map_size) / alpha));
}

void HeatmapParams::validate() const {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw DomainError("heatmap sigma must be positive, got " + std::to_string(sigma));
  }
  if (!(alpha > 0.0) || map_size == 0) throw DomainError("heatmap alpha and map size must be positive");
  const double input = static_cast<double>(map_size) / alpha;
  if (std::abs(input - std::round(input)) > 1e-9) {
    throw DomainError("alpha·input_size must equal map_size (alpha=" + std::to_string(alpha) +
                      ", map=" + std::to_string(map_size) + ")");
  }
}

HeatmapParams HeatmapParams::downscaled(std::size_t factor) const {
  HeatmapParams p = *this;
  p.alpha /= static_cast<double>(factor);
  p.sigma /= static_cast<double>(factor);
  p.map_size /= factor;
  return p;
}

namespace {

template <typename T>
void fill_gaussian(const CenterLabel& label, const HeatmapParams& params, T* out) {
  const double input = static_cast<double>(params.input_size());
  if (!(label.u >= 0.0 && label.u < input && label.v >= 0.0 && label.v < input)) {
    throw DomainError("label (" + std::to_string(label.u) + ", " + std::to_string(label.v) +
                      ") outside the " + std::to_string(params.input_size()) + " px image");
  }
  const std::size_t n = params.map_size;
  const double cx = params.alpha * label.u;
  const double cy = params.alpha * label.v;
  const double denom = 2.0 * params.sigma * params.sigma;
  // The Gaussian is separable; tabulate each axis once.
  std::vector<double> gx(n), gy(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = static_cast<double>(i) - cx;
    const double dy = static_cast<double>(i) - cy;
    gx[i] = dx * dx;
    gy[i] = dy * dy;
  }
  for (std::size_t y = 0; y < n; ++y) {
    for (std::size_t x = 0; x < n; ++x) {
      out[y * n + x] = static_cast<T>(std::exp(-(gx[x] + gy[y]) / denom));
    }
  }
}

template <typename T>
CenterLabel decode_impl(std::span<const T> map, std::size_t height, std::size_t width, double alpha) {
  if (map.empty() || map.size() != height * width) {
    throw DimensionError("heatmap of " + std::to_string(map.size()) + " values is not " +
                         std::to_string(height) + "x" + std::to_string(width));
  }
  std::size_t best = map.size();
  for (std::size_t i = 0; i < map.size(); ++i) {
    if (std::isnan(map[i])) continue;
    if (best == map.size() || map[i] > map[best]) best = i;
  }
  if (best == map.size()) throw NumericError("cannot decode an all-NaN heatmap");
  const double x = static_cast<double>(best % width);
  const double y = static_cast<double>(best / width);
  return {x / alpha, y / alpha};
}

}  // namespace

template <typename T>
Tensor<T> encode_heatmap(const CenterLabel& label, const HeatmapParams& params) {
  params.validate();
  const std::size_t n = params.map_size;
  std::vector<T> data(n * n);
  fill_gaussian(label, params, data.data());
  return Tensor<T>::from_data({1, n, n}, std::move(data));
}

template <typename T>
Tensor<T> encode_batch(std::span<const CenterLabel> labels, const HeatmapParams& params) {
  params.validate();
  if (labels.empty()) throw DomainError("cannot encode an empty label batch");
  const std::size_t n = params.map_size;
  std::vector<T> data(labels.size() * n * n);
  for (std::size_t b = 0; b < labels.size(); ++b) fill_gaussian(labels[b], params, data.data() + b * n * n);
  return Tensor<T>::from_data({labels.size(), 1, n, n}, std::move(data));
}

CenterLabel decode_heatmap(std::span<const float> map, std::size_t height, std::size_t width,
                           double alpha) {
  return decode_impl(map, height, width, alpha);
}

CenterLabel decode_heatmap(std::span<const double> map, std::size_t height, std::size_t width,
                           double alpha) {
  return decode_impl(map, height, width, alpha);
}

template <typename T>
CenterLabel decode_heatmap(const Tensor<T>& map, const HeatmapParams& params) {
  const Shape& s = map.shape();
  if (s.size() < 2 || numel(s) != s[s.size() - 1] * s[s.size() - 2]) {
    throw DimensionError("decode expects a single heatmap, got " + to_string(s));
  }
  return decode_impl(map.data(), s[s.size() - 2], s[s.size() - 1], params.alpha);
}

std::map<double, Tensor<float>> sigma_sweep_targets(std::span<const CenterLabel> labels,
                                                    const std::vector<double>& sigmas,
                                                    const HeatmapParams& base) {
  std::map<double, Tensor<float>> out;
  for (double sigma : sigmas) {
    if (!(sigma > 0.0)) throw DomainError("sigma must be positive, got " + std::to_string(sigma));
    HeatmapParams p = base;
    p.sigma = sigma;
    out.emplace(sigma, encode_batch<float>(labels, p));
  }
  return out;
}

template Tensor<float> encode_heatmap<float>(const CenterLabel&, const HeatmapParams&);
template Tensor<double> encode_heatmap<double>(const CenterLabel&, const HeatmapParams&);
template Tensor<float> encode_batch<float>(std::span<const CenterLabel>, const HeatmapParams&);
template Tensor<double> encode_batch<double>(std::span<const CenterLabel>, const HeatmapParams&);
template CenterLabel decode_heatmap<float>(const Tensor<float>&, const HeatmapParams&);
template CenterLabel decode_heatmap<double>(const Tensor<double>&, const HeatmapParams&);

}  // namespace tclnet
