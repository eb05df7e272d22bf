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

#include "tclnet/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "tclnet/errors.hpp"

namespace tclnet {

namespace {

std::uint8_t to_byte(float v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f));
}

Image read_png(const std::filesystem::path& path) {
  png_image img;
  std::memset(&img, 0, sizeof(img));
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&img, path.c_str())) {
    throw IoError("cannot read PNG '" + path.string() + "': " + img.message);
  }
  img.format = PNG_FORMAT_GRAY;
  std::vector<std::uint8_t> buf(PNG_IMAGE_SIZE(img));
  if (!png_image_finish_read(&img, nullptr, buf.data(), 0, nullptr)) {
    png_image_free(&img);
    throw IoError("cannot decode PNG '" + path.string() + "': " + img.message);
  }
  Image out(img.width, img.height);
  for (std::size_t i = 0; i < buf.size(); ++i) out.pixels[i] = static_cast<float>(buf[i]) / 255.0f;
  return out;
}

// Skips whitespace and '#' comments between PGM header tokens.
std::size_t read_pgm_token(std::istream& in, const std::filesystem::path& path) {
  int c;
  while ((c = in.peek()) != EOF) {
    if (c == '#') {
      std::string line;
      std::getline(in, line);
    } else if (std::isspace(c)) {
      in.get();
    } else {
      break;
    }
  }
  std::size_t v = 0;
  if (!(in >> v)) throw IoError("malformed PGM header in '" + path.string() + "'");
  return v;
}

Image read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  char magic[2];
  in.read(magic, 2);
  if (magic[0] != 'P' || magic[1] != '5') throw IoError("'" + path.string() + "' is not a binary PGM");
  const std::size_t w = read_pgm_token(in, path);
  const std::size_t h = read_pgm_token(in, path);
  const std::size_t maxval = read_pgm_token(in, path);
  in.get();  // single whitespace before raster
  if (w == 0 || h == 0 || maxval == 0 || maxval > 65535) {
    throw IoError("unsupported PGM geometry in '" + path.string() + "'");
  }
  Image out(w, h);
  const std::size_t bytes = maxval < 256 ? 1 : 2;
  std::vector<unsigned char> raster(w * h * bytes);
  in.read(reinterpret_cast<char*>(raster.data()), static_cast<std::streamsize>(raster.size()));
  if (!in) throw IoError("truncated PGM raster in '" + path.string() + "'");
  for (std::size_t i = 0; i < w * h; ++i) {
    const std::size_t v = bytes == 1 ? raster[i] : (std::size_t{raster[2 * i]} << 8) | raster[2 * i + 1];
    out.pixels[i] = static_cast<float>(v) / static_cast<float>(maxval);
  }
  return out;
}

}  // namespace

Image read_image(const std::filesystem::path& path) {
  std::ifstream probe(path, std::ios::binary);
  if (!probe) throw IoError("cannot open image '" + path.string() + "'");
  unsigned char sig[8] = {};
  probe.read(reinterpret_cast<char*>(sig), 8);
  if (probe.gcount() >= 2 && sig[0] == 'P' && sig[1] == '5') return read_pgm(path);
  if (probe.gcount() == 8 && png_sig_cmp(sig, 0, 8) == 0) return read_png(path);
  throw IoError("'" + path.string() + "' is neither PNG nor binary PGM");
}

void write_image(const Image& image, const std::filesystem::path& path) {
  std::vector<std::uint8_t> bytes(image.pixels.size());
  std::transform(image.pixels.begin(), image.pixels.end(), bytes.begin(), to_byte);
  if (path.extension() == ".pgm") {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out << "P5\n" << image.width << ' ' << image.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("failed writing '" + path.string() + "'");
    return;
  }
  png_image img;
  std::memset(&img, 0, sizeof(img));
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(image.width);
  img.height = static_cast<png_uint_32>(image.height);
  img.format = PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(&img, path.c_str(), 0, bytes.data(), 0, nullptr)) {
    throw IoError("cannot write PNG '" + path.string() + "': " + img.message);
  }
}

void write_png_rgb(const RgbImage& image, const std::filesystem::path& path) {
  png_image img;
  std::memset(&img, 0, sizeof(img));
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(image.width);
  img.height = static_cast<png_uint_32>(image.height);
  img.format = PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&img, path.c_str(), 0, image.pixels.data(), 0, nullptr)) {
    throw IoError("cannot write PNG '" + path.string() + "': " + img.message);
  }
}

Image resize_bilinear(const Image& image, std::size_t width, std::size_t height) {
  Image out(width, height);
  const double sx = static_cast<double>(image.width) / static_cast<double>(width);
  const double sy = static_cast<double>(image.height) / static_cast<double>(height);
  const double max_x = static_cast<double>(image.width - 1);
  const double max_y = static_cast<double>(image.height - 1);
  for (std::size_t y = 0; y < height; ++y) {
    const double fy = std::min(static_cast<double>(y) * sy, max_y);
    const std::size_t y0 = static_cast<std::size_t>(fy);
    const std::size_t y1 = std::min(y0 + 1, image.height - 1);
    const float wy = static_cast<float>(fy - static_cast<double>(y0));
    for (std::size_t x = 0; x < width; ++x) {
      const double fx = std::min(static_cast<double>(x) * sx, max_x);
      const std::size_t x0 = static_cast<std::size_t>(fx);
      const std::size_t x1 = std::min(x0 + 1, image.width - 1);
      const float wx = static_cast<float>(fx - static_cast<double>(x0));
      const float top = image.at(x0, y0) * (1 - wx) + image.at(x1, y0) * wx;
      const float bottom = image.at(x0, y1) * (1 - wx) + image.at(x1, y1) * wx;
      out.at(x, y) = top * (1 - wy) + bottom * wy;
    }
  }
  return out;
}

}  // namespace tclnet
