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

#ifndef TCLNET_HEATMAP_HPP_
#define TCLNET_HEATMAP_HPP_

#include <cstddef>
#include <map>
#include <span>
#include <vector>

#include "tclnet/tensor.hpp"

namespace tclnet {

/// Image coordinates: u (x) is the column, v (y) the row, origin top-left,
/// pixel centres on integers.
struct CenterLabel {
  double u = 0.0;
  double v = 0.0;
};

struct HeatmapParams {
  double alpha = 0.25;      // heatmap size / input size
  double sigma = 15.0;      // Gaussian std-dev in heatmap pixels
  std::size_t map_size = 128;

  std::size_t input_size() const;
  /// alpha·input_size == map_size and sigma > 0, else DomainError.
  void validate() const;
  /// Same alpha/sigma relation at a coarser map (used by deep supervision).
  HeatmapParams downscaled(std::size_t factor) const;
};

/// Gaussian target H(x,y) = exp(-((x - αu)² + (y - αv)²) / (2σ²)) sampled at
/// integer grid points; shape (1, map, map).
template <typename T = float>
Tensor<T> encode_heatmap(const CenterLabel& label, const HeatmapParams& params);

/// Stacks one encoded target per label into (B, 1, map, map).
template <typename T = float>
Tensor<T> encode_batch(std::span<const CenterLabel> labels, const HeatmapParams& params);

/// Position of the first maximum (row-major) scaled back to input pixels.
/// Accepts (map,map), (1,map,map) or (1,1,map,map). NaN cells are skipped;
/// an all-NaN map raises NumericError.
CenterLabel decode_heatmap(std::span<const float> map, std::size_t height, std::size_t width,
                           double alpha);
CenterLabel decode_heatmap(std::span<const double> map, std::size_t height, std::size_t width,
                           double alpha);
template <typename T>
CenterLabel decode_heatmap(const Tensor<T>& map, const HeatmapParams& params);

/// One target batch per σ, for σ-sweep experiments.
std::map<double, Tensor<float>> sigma_sweep_targets(std::span<const CenterLabel> labels,
                                                    const std::vector<double>& sigmas,
                                                    const HeatmapParams& base = {});

inline const std::vector<double> kDefaultSigmaSweep{5, 10, 15, 20, 25, 30};

}  // namespace tclnet

#endif  // TCLNET_HEATMAP_HPP_
