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

#ifndef TCLNET_IMAGE_HPP_
#define TCLNET_IMAGE_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace tclnet {

/// Single-channel image, values nominally in [0,1], row-major.
struct Image {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<float> pixels;

  Image() = default;
  Image(std::size_t w, std::size_t h, float fill = 0.0f) : width(w), height(h), pixels(w * h, fill) {}

  float& at(std::size_t x, std::size_t y) { return pixels[y * width + x]; }
  float at(std::size_t x, std::size_t y) const { return pixels[y * width + x]; }
};

/// Interleaved 8-bit RGB image for overlays.
struct RgbImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> pixels;

  RgbImage(std::size_t w, std::size_t h) : width(w), height(h), pixels(w * h * 3, 0) {}
  void set(std::size_t x, std::size_t y, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    std::uint8_t* p = &pixels[(y * width + x) * 3];
    p[0] = r;
    p[1] = g;
    p[2] = b;
  }
};

/// Reads 8-bit (or 16-bit) grayscale PNG or binary PGM (P5), chosen by the
/// file signature; colour PNGs are converted to gray. Values scaled to [0,1].
Image read_image(const std::filesystem::path& path);

/// Writes an 8-bit grayscale PNG or PGM depending on the extension
/// (".pgm" → PGM, anything else → PNG). Values are clamped to [0,1].
void write_image(const Image& image, const std::filesystem::path& path);
void write_png_rgb(const RgbImage& image, const std::filesystem::path& path);

/// Bilinear resampling where output pixel x samples the input at
/// x·(in/out), clamped to the last pixel.
Image resize_bilinear(const Image& image, std::size_t width, std::size_t height);

}  // namespace tclnet

#endif  // TCLNET_IMAGE_HPP_
