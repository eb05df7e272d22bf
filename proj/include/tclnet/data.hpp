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

#ifndef TCLNET_DATA_HPP_
#define TCLNET_DATA_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "tclnet/heatmap.hpp"
#include "tclnet/image.hpp"

namespace tclnet {

inline constexpr std::size_t kImageSize = 512;

enum class Split { kTrain, kTest };
const char* split_name(Split s);
Split parse_split(const std::string& name);

struct Sample {
  std::string id;
  Image image;  // kImageSize × kImageSize, values in [0,1]
  CenterLabel label;
  bool eyed = true;
};

struct IndexEntry {
  std::string id;
  std::string filename;  // relative to the index root
  double u = 0.0;
  double v = 0.0;
  bool eyed = true;
  Split split = Split::kTrain;
};

/// `index.csv` under `root`: header `id,filename,u,v,eyed,split`, one row per
/// sample, eyed as 0/1, split as train/test.
struct DatasetIndex {
  std::filesystem::path root;
  std::vector<IndexEntry> entries;

  std::size_t size() const { return entries.size(); }
  /// Entries of one split, same root.
  DatasetIndex filter(Split split) const;
  std::size_t count_eyed() const;
};

inline constexpr const char* kIndexFile = "index.csv";
inline constexpr const char* kIndexHeader = "id,filename,u,v,eyed,split";

/// Parses and validates `root/index.csv`: bounds, unique ids, existing files.
/// Errors name the offending row (1-based, header is row 1).
DatasetIndex load_index(const std::filesystem::path& root);
void write_index(const DatasetIndex& index);

/// Decodes one image and checks its extents.
Sample read_sample(const DatasetIndex& index, std::size_t i);

/// Synthetic cyclone generator settings. Rendering is a stand-in for
/// infrared imagery: bright cold cloud on a darker background.
struct SynthParams {
  std::size_t n_samples = 100;
  double test_fraction = 0.2;
  double eyed_fraction = 0.65;
  std::size_t arms_min = 2;
  std::size_t arms_max = 4;
  double band_width_min = 6.0;  // px, Gaussian half-width across an arm
  double band_width_max = 14.0;
  double band_contrast_min = 0.25;
  double band_contrast_max = 0.45;
  double eye_radius_min = 6.0;  // px
  double eye_radius_max = 14.0;
  double noise_amplitude = 0.08;
  /// Std-dev of label jitter on eyed training samples; non-eyed training
  /// samples get non_eyed_noise_ratio times this. Test labels stay exact.
  double label_noise_px = 0.0;
  double non_eyed_noise_ratio = 3.9;
  /// Leave eyed labels clean and jitter only the non-eyed ones.
  bool noise_non_eyed_only = false;
  std::size_t margin = 64;
  std::string image_format = "png";  // png or pgm
  std::uint64_t seed = 0;

  void validate() const;
  std::string to_text() const;  // canonical `synth.key=value` lines
  /// Reads `synth.*` keys; other prefixes are ignored.
  static SynthParams from_text(const std::string& text);
};

/// Renders one cyclone image around `center`. Exposed for tests.
Image render_cyclone(const CenterLabel& center, bool eyed, const SynthParams& params,
                     std::uint64_t sample_seed);

/// Writes images and index under `out_root` and returns the index.
DatasetIndex generate(const SynthParams& params, const std::filesystem::path& out_root);

/// Samples held in memory, for training loops.
std::vector<Sample> load_samples(const DatasetIndex& index);

}  // namespace tclnet

#endif  // TCLNET_DATA_HPP_
