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

#include <algorithm>
#include <cmath>

#include "tclnet/training.hpp"

namespace tclnet {

namespace {

constexpr int kCropAttempts = 10;

bool label_fits(double u, double v, std::size_t ox, std::size_t oy, std::size_t crop) {
  const double hi = static_cast<double>(crop - 1);
  const double cu = u - static_cast<double>(ox);
  const double cv = v - static_cast<double>(oy);
  return cu >= 0.0 && cu <= hi && cv >= 0.0 && cv <= hi;
}

}  // namespace

AugmentedSample apply_augment(const Sample& sample, const TrainConfig& config, const AugmentChoice& choice) {
  const Image& src = sample.image;
  if (src.width != kImageSize || src.height != kImageSize) {
    throw DimensionError("augment expects a " + std::to_string(kImageSize) + " px square image, got " +
                         std::to_string(src.width) + "x" + std::to_string(src.height));
  }
  const std::size_t crop = config.crop_to;
  const std::size_t max_off = config.resize_to - crop;
  if (choice.offset_x > max_off || choice.offset_y > max_off) {
    throw AugmentationError("crop offset (" + std::to_string(choice.offset_x) + ", " +
                            std::to_string(choice.offset_y) + ") exceeds " + std::to_string(max_off));
  }
  const Image resized = config.resize_to == src.width ? src : resize_bilinear(src, config.resize_to, config.resize_to);
  const double scale = static_cast<double>(config.resize_to) / static_cast<double>(src.width);

  AugmentedSample out;
  out.choice = choice;
  out.image = Image(crop, crop);
  for (std::size_t y = 0; y < crop; ++y) {
    const std::size_t sy = choice.offset_y + (choice.flip_vertical ? crop - 1 - y : y);
    for (std::size_t x = 0; x < crop; ++x) {
      const std::size_t sx = choice.offset_x + (choice.flip_horizontal ? crop - 1 - x : x);
      out.image.at(x, y) = resized.at(sx, sy);
    }
  }
  double u = sample.label.u * scale - static_cast<double>(choice.offset_x);
  double v = sample.label.v * scale - static_cast<double>(choice.offset_y);
  if (choice.flip_horizontal) u = static_cast<double>(crop - 1) - u;
  if (choice.flip_vertical) v = static_cast<double>(crop - 1) - v;
  out.label = {u, v};
  return out;
}

AugmentedSample augment(const Sample& sample, const TrainConfig& config, std::mt19937_64& rng) {
  const std::size_t crop = config.crop_to;
  const std::size_t max_off = config.resize_to - crop;
  const double scale = static_cast<double>(config.resize_to) / static_cast<double>(sample.image.width);
  const double u = sample.label.u * scale;
  const double v = sample.label.v * scale;

  std::uniform_int_distribution<std::size_t> offset(0, max_off);
  AugmentChoice choice;
  bool placed = false;
  for (int attempt = 0; attempt < kCropAttempts && !placed; ++attempt) {
    choice.offset_x = offset(rng);
    choice.offset_y = offset(rng);
    placed = label_fits(u, v, choice.offset_x, choice.offset_y, crop);
  }
  if (!placed) {
    auto centred = [&](double c) {
      const double o = std::round(c - static_cast<double>(crop) / 2.0);
      return static_cast<std::size_t>(std::clamp(o, 0.0, static_cast<double>(max_off)));
    };
    choice.offset_x = centred(u);
    choice.offset_y = centred(v);
    if (!label_fits(u, v, choice.offset_x, choice.offset_y, crop)) {
      throw AugmentationError("label (" + std::to_string(sample.label.u) + ", " +
                              std::to_string(sample.label.v) + ") of '" + sample.id +
                              "' cannot be kept inside the crop");
    }
  }
  std::bernoulli_distribution flip(config.flip_prob);
  choice.flip_horizontal = flip(rng);
  choice.flip_vertical = flip(rng);
  return apply_augment(sample, config, choice);
}

}  // namespace tclnet
