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

#include "tclnet/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include "tclnet/errors.hpp"
#include "tclnet/keyvalue.hpp"
#include "tclnet/seed.hpp"

namespace tclnet {

const char* split_name(Split s) { return s == Split::kTrain ? "train" : "test"; }

Split parse_split(const std::string& name) {
  if (name == "train") return Split::kTrain;
  if (name == "test") return Split::kTest;
  throw ConfigError("split must be 'train' or 'test', got '" + name + "'");
}

DatasetIndex DatasetIndex::filter(Split split) const {
  DatasetIndex out{root, {}};
  std::copy_if(entries.begin(), entries.end(), std::back_inserter(out.entries),
               [split](const IndexEntry& e) { return e.split == split; });
  return out;
}

std::size_t DatasetIndex::count_eyed() const {
  return static_cast<std::size_t>(
      std::count_if(entries.begin(), entries.end(), [](const IndexEntry& e) { return e.eyed; }));
}

// ---------------------------------------------------------------------------
// Index I/O

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

DatasetIndex load_index(const std::filesystem::path& root) {
  const auto path = root / kIndexFile;
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open dataset index '" + path.string() + "'");
  DatasetIndex index{root, {}};
  std::string line;
  std::size_t row = 0;
  std::set<std::string> ids;
  auto fail = [&](const std::string& what) {
    throw LoadError(path.string() + " row " + std::to_string(row) + ": " + what);
  };
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (row == 1) {
      if (line != kIndexHeader) fail("expected header '" + std::string(kIndexHeader) + "'");
      continue;
    }
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 6) fail("expected 6 fields, got " + std::to_string(f.size()));
    IndexEntry e;
    e.id = f[0];
    e.filename = f[1];
    if (e.id.empty() || e.filename.empty()) fail("empty id or filename");
    try {
      e.u = parse_double("u", f[2]);
      e.v = parse_double("v", f[3]);
      if (f[4] == "1" || f[4] == "true") e.eyed = true;
      else if (f[4] == "0" || f[4] == "false") e.eyed = false;
      else fail("eyed must be 0 or 1, got '" + f[4] + "'");
      e.split = parse_split(f[5]);
    } catch (const ConfigError& err) {
      fail(err.what());
    }
    const double limit = static_cast<double>(kImageSize);
    if (!(e.u >= 0.0 && e.u < limit && e.v >= 0.0 && e.v < limit)) {
      fail("label (" + f[2] + ", " + f[3] + ") outside the " + std::to_string(kImageSize) + " px frame");
    }
    if (!ids.insert(e.id).second) fail("duplicate id '" + e.id + "'");
    if (!std::filesystem::exists(root / e.filename)) fail("missing image '" + e.filename + "'");
    index.entries.push_back(std::move(e));
  }
  if (row == 0) throw LoadError(path.string() + ": empty index");
  return index;
}

void write_index(const DatasetIndex& index) {
  const auto path = index.root / kIndexFile;
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << kIndexHeader << '\n';
  for (const auto& e : index.entries) {
    out << e.id << ',' << e.filename << ',' << format_double(e.u) << ',' << format_double(e.v) << ','
        << (e.eyed ? 1 : 0) << ',' << split_name(e.split) << '\n';
  }
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

Sample read_sample(const DatasetIndex& index, std::size_t i) {
  if (i >= index.entries.size()) {
    throw LoadError("sample " + std::to_string(i) + " out of range (" + std::to_string(index.size()) +
                    " entries)");
  }
  const IndexEntry& e = index.entries[i];
  Sample s;
  s.id = e.id;
  s.label = {e.u, e.v};
  s.eyed = e.eyed;
  try {
    s.image = read_image(index.root / e.filename);
  } catch (const IoError& err) {
    throw LoadError("sample '" + e.id + "': " + err.what());
  }
  if (s.image.width != kImageSize || s.image.height != kImageSize) {
    throw LoadError("sample '" + e.id + "' is " + std::to_string(s.image.width) + "x" +
                    std::to_string(s.image.height) + ", expected " + std::to_string(kImageSize) + "x" +
                    std::to_string(kImageSize));
  }
  return s;
}

std::vector<Sample> load_samples(const DatasetIndex& index) {
  std::vector<Sample> out;
  out.reserve(index.size());
  for (std::size_t i = 0; i < index.size(); ++i) out.push_back(read_sample(index, i));
  return out;
}

// ---------------------------------------------------------------------------
// Synthetic generator

void SynthParams::validate() const {
  auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (n_samples == 0) throw ConfigError("n_samples: must be positive");
  if (!in_unit(eyed_fraction)) throw ConfigError("eyed_fraction: must be in [0,1]");
  if (!in_unit(test_fraction)) throw ConfigError("test_fraction: must be in [0,1]");
  if (arms_min == 0 || arms_min > arms_max) throw ConfigError("arms_min/arms_max: need 1 <= min <= max");
  if (!(band_width_min > 0.0) || band_width_min > band_width_max) {
    throw ConfigError("band_width_min/max: need 0 < min <= max");
  }
  if (band_contrast_min < 0.0 || band_contrast_min > band_contrast_max) {
    throw ConfigError("band_contrast_min/max: need 0 <= min <= max");
  }
  if (!(eye_radius_min > 0.0) || eye_radius_min > eye_radius_max) {
    throw ConfigError("eye_radius_min/max: need 0 < min <= max");
  }
  if (noise_amplitude < 0.0) throw ConfigError("noise_amplitude: must be non-negative");
  if (label_noise_px < 0.0) throw ConfigError("label_noise_px: must be non-negative");
  if (non_eyed_noise_ratio < 0.0) throw ConfigError("non_eyed_noise_ratio: must be non-negative");
  if (2 * margin >= kImageSize) throw ConfigError("margin: must be below half the image size");
  if (image_format != "png" && image_format != "pgm") throw ConfigError("image_format: png or pgm");
}

std::string SynthParams::to_text() const {
  std::ostringstream o;
  o << "synth.n_samples=" << n_samples << "\n"
    << "synth.test_fraction=" << format_double(test_fraction) << "\n"
    << "synth.eyed_fraction=" << format_double(eyed_fraction) << "\n"
    << "synth.arms_min=" << arms_min << "\n"
    << "synth.arms_max=" << arms_max << "\n"
    << "synth.band_width_min=" << format_double(band_width_min) << "\n"
    << "synth.band_width_max=" << format_double(band_width_max) << "\n"
    << "synth.band_contrast_min=" << format_double(band_contrast_min) << "\n"
    << "synth.band_contrast_max=" << format_double(band_contrast_max) << "\n"
    << "synth.eye_radius_min=" << format_double(eye_radius_min) << "\n"
    << "synth.eye_radius_max=" << format_double(eye_radius_max) << "\n"
    << "synth.noise_amplitude=" << format_double(noise_amplitude) << "\n"
    << "synth.label_noise_px=" << format_double(label_noise_px) << "\n"
    << "synth.non_eyed_noise_ratio=" << format_double(non_eyed_noise_ratio) << "\n"
    << "synth.noise_non_eyed_only=" << (noise_non_eyed_only ? "true" : "false") << "\n"
    << "synth.margin=" << margin << "\n"
    << "synth.image_format=" << image_format << "\n"
    << "synth.seed=" << seed << "\n";
  return o.str();
}

SynthParams SynthParams::from_text(const std::string& text) {
  SynthParams p;
  for (const auto& [key, value] : parse_key_values(text)) {
    if (key.rfind("synth.", 0) != 0) continue;
    const std::string f = key.substr(6);
    if (f == "n_samples") p.n_samples = parse_size(key, value);
    else if (f == "test_fraction") p.test_fraction = parse_double(key, value);
    else if (f == "eyed_fraction") p.eyed_fraction = parse_double(key, value);
    else if (f == "arms_min") p.arms_min = parse_size(key, value);
    else if (f == "arms_max") p.arms_max = parse_size(key, value);
    else if (f == "band_width_min") p.band_width_min = parse_double(key, value);
    else if (f == "band_width_max") p.band_width_max = parse_double(key, value);
    else if (f == "band_contrast_min") p.band_contrast_min = parse_double(key, value);
    else if (f == "band_contrast_max") p.band_contrast_max = parse_double(key, value);
    else if (f == "eye_radius_min") p.eye_radius_min = parse_double(key, value);
    else if (f == "eye_radius_max") p.eye_radius_max = parse_double(key, value);
    else if (f == "noise_amplitude") p.noise_amplitude = parse_double(key, value);
    else if (f == "label_noise_px") p.label_noise_px = parse_double(key, value);
    else if (f == "non_eyed_noise_ratio") p.non_eyed_noise_ratio = parse_double(key, value);
    else if (f == "noise_non_eyed_only") p.noise_non_eyed_only = parse_bool(key, value);
    else if (f == "margin") p.margin = parse_size(key, value);
    else if (f == "image_format") p.image_format = value;
    else if (f == "seed") p.seed = parse_size(key, value);
    else throw ConfigError("unknown synth key '" + key + "'");
  }
  return p;
}

namespace {

double smoothstep(double e0, double e1, double x) {
  const double t = std::clamp((x - e0) / (e1 - e0), 0.0, 1.0);
  return t * t * (3.0 - 2.0 * t);
}

// Lattice value noise in [0,1] with smoothstep interpolation.
std::vector<float> value_noise(std::size_t n, std::size_t cell, std::mt19937_64& rng) {
  const std::size_t lattice = n / cell + 2;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> grid(lattice * lattice);
  for (double& g : grid) g = u(rng);
  std::vector<float> out(n * n);
  for (std::size_t y = 0; y < n; ++y) {
    const double fy = static_cast<double>(y) / static_cast<double>(cell);
    const std::size_t gy = static_cast<std::size_t>(fy);
    const double ty = smoothstep(0.0, 1.0, fy - static_cast<double>(gy));
    for (std::size_t x = 0; x < n; ++x) {
      const double fx = static_cast<double>(x) / static_cast<double>(cell);
      const std::size_t gx = static_cast<std::size_t>(fx);
      const double tx = smoothstep(0.0, 1.0, fx - static_cast<double>(gx));
      const double a = grid[gy * lattice + gx], b = grid[gy * lattice + gx + 1];
      const double c = grid[(gy + 1) * lattice + gx], d = grid[(gy + 1) * lattice + gx + 1];
      out[y * n + x] = static_cast<float>((a + (b - a) * tx) * (1 - ty) + (c + (d - c) * tx) * ty);
    }
  }
  return out;
}

// Three passes of a separable box filter (≈ Gaussian with std ≈ radius).
Image box_blur(const Image& src, std::size_t radius) {
  Image a = src;
  Image b(src.width, src.height);
  const std::size_t n = src.width;
  const double norm = 1.0 / static_cast<double>(2 * radius + 1);
  for (int pass = 0; pass < 3; ++pass) {
    for (int axis = 0; axis < 2; ++axis) {
      for (std::size_t line = 0; line < n; ++line) {
        for (std::size_t i = 0; i < n; ++i) {
          double acc = 0.0;
          for (long k = -static_cast<long>(radius); k <= static_cast<long>(radius); ++k) {
            const long j = std::clamp(static_cast<long>(i) + k, 0L, static_cast<long>(n) - 1);
            acc += axis == 0 ? a.at(static_cast<std::size_t>(j), line) : a.at(line, static_cast<std::size_t>(j));
          }
          (axis == 0 ? b.at(i, line) : b.at(line, i)) = static_cast<float>(acc * norm);
        }
      }
      std::swap(a, b);
    }
  }
  return a;
}

}  // namespace

Image render_cyclone(const CenterLabel& center, bool eyed, const SynthParams& p,
                     std::uint64_t sample_seed) {
  std::mt19937_64 rng(sample_seed);
  auto uniform = [&rng](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
  const std::size_t n = kImageSize;
  constexpr double kTwoPi = 2.0 * std::numbers::pi;

  const std::size_t arms = std::uniform_int_distribution<std::size_t>(p.arms_min, p.arms_max)(rng);
  const double pitch = uniform(0.18, 0.32);  // tan of the spiral pitch angle
  const double spiral_a = uniform(8.0, 20.0);
  const double phase0 = uniform(0.0, kTwoPi);
  const double spin = uniform(0.0, 1.0) < 0.5 ? 1.0 : -1.0;
  const double band_width = uniform(p.band_width_min, p.band_width_max);
  const double contrast = uniform(p.band_contrast_min, p.band_contrast_max);
  const double outer = uniform(140.0, 220.0);
  const double cdo_radius = uniform(28.0, 48.0);
  const double cdo_level = uniform(0.35, 0.5);
  const double background = uniform(0.12, 0.22);
  const double eye_radius = eyed ? uniform(p.eye_radius_min, p.eye_radius_max) : 0.0;
  const double eye_depth = uniform(0.6, 0.85);
  const double across = pitch / std::sqrt(1.0 + pitch * pitch);

  const auto coarse = value_noise(n, 48, rng);
  const auto fine = value_noise(n, 12, rng);
  std::normal_distribution<double> grain(0.0, 0.015);

  Image img(n, n);
  for (std::size_t y = 0; y < n; ++y) {
    for (std::size_t x = 0; x < n; ++x) {
      const double dx = static_cast<double>(x) - center.u;
      const double dy = static_cast<double>(y) - center.v;
      const double r = std::hypot(dx, dy);
      const double phi = std::atan2(dy, dx);
      const double texture = 0.6 * coarse[y * n + x] + 0.4 * fine[y * n + x];
      double value = background + p.noise_amplitude * (2.0 * texture - 1.0);

      // Logarithmic spiral arms r = a·exp(b·θ).
      const double wind = spin * std::log(std::max(r, spiral_a) / spiral_a) / pitch;
      double bands = 0.0;
      for (std::size_t k = 0; k < arms; ++k) {
        double d = std::remainder(phi - phase0 - kTwoPi * static_cast<double>(k) / static_cast<double>(arms) - wind,
                                  kTwoPi);
        const double dist = std::abs(d) * r * across;
        bands += contrast * std::exp(-dist * dist / (2.0 * band_width * band_width));
      }
      const double envelope = std::exp(-(r / outer) * (r / outer));
      value += bands * envelope * (0.7 + 0.6 * texture);
      value += cdo_level * std::exp(-r * r / (2.0 * cdo_radius * cdo_radius));
      if (eyed) value *= 1.0 - eye_depth * (1.0 - smoothstep(eye_radius - 2.0, eye_radius + 2.0, r));
      img.at(x, y) = static_cast<float>(value + grain(rng));
    }
  }

  if (!eyed) {
    // Ragged, poorly defined centre: blend towards a blurred copy near it.
    const Image blurred = box_blur(img, 6);
    for (std::size_t y = 0; y < n; ++y) {
      for (std::size_t x = 0; x < n; ++x) {
        const double r2 = std::pow(static_cast<double>(x) - center.u, 2) + std::pow(static_cast<double>(y) - center.v, 2);
        const float w = static_cast<float>(std::exp(-r2 / (2.0 * 60.0 * 60.0)));
        img.at(x, y) = w * blurred.at(x, y) + (1.0f - w) * img.at(x, y);
      }
    }
  }
  for (float& v : img.pixels) v = std::clamp(v, 0.0f, 1.0f);
  return img;
}

DatasetIndex generate(const SynthParams& params, const std::filesystem::path& out_root) {
  params.validate();
  std::error_code ec;
  std::filesystem::create_directories(out_root / "images", ec);
  if (ec) throw IoError("cannot create '" + (out_root / "images").string() + "': " + ec.message());

  const std::size_t n = params.n_samples;
  const auto n_eyed = static_cast<std::size_t>(std::llround(static_cast<double>(n) * params.eyed_fraction));
  const auto n_test = static_cast<std::size_t>(std::llround(static_cast<double>(n) * params.test_fraction));
  std::mt19937_64 rng(derive_seed(params.seed, {0}));
  std::vector<bool> eyed(n, false);
  std::fill(eyed.begin(), eyed.begin() + static_cast<long>(n_eyed), true);
  std::shuffle(eyed.begin(), eyed.end(), rng);

  const double lo = static_cast<double>(params.margin);
  const double hi = static_cast<double>(kImageSize - params.margin);
  DatasetIndex index{out_root, {}};
  char id[32];
  for (std::size_t i = 0; i < n; ++i) {
    std::mt19937_64 srng(derive_seed(params.seed, {1, i}));
    std::uniform_real_distribution<double> pos(lo, hi);
    const CenterLabel truth{pos(srng), pos(srng)};
    IndexEntry e;
    std::snprintf(id, sizeof(id), "syn_%05zu", i);
    e.id = id;
    e.filename = std::string("images/") + id + "." + params.image_format;
    e.eyed = eyed[i];
    e.split = i + n_test >= n ? Split::kTest : Split::kTrain;

    CenterLabel label = truth;
    double jitter = e.eyed ? (params.noise_non_eyed_only ? 0.0 : params.label_noise_px)
                           : params.label_noise_px * params.non_eyed_noise_ratio;
    if (e.split == Split::kTest) jitter = 0.0;
    if (jitter > 0.0) {
      std::normal_distribution<double> noise(0.0, jitter);
      const double top = std::nextafter(static_cast<double>(kImageSize), 0.0);
      label.u = std::clamp(truth.u + noise(srng), 0.0, top);
      label.v = std::clamp(truth.v + noise(srng), 0.0, top);
    }
    e.u = label.u;
    e.v = label.v;

    const Image img = render_cyclone(truth, e.eyed, params, derive_seed(params.seed, {2, i}));
    write_image(img, out_root / e.filename);
    index.entries.push_back(std::move(e));
  }
  write_index(index);
  return index;
}

}  // namespace tclnet
