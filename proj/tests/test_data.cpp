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

#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "doctest.h"
#include "support/temp_dir.hpp"
#include "tclnet/errors.hpp"
#include "tclnet/data.hpp"
#include "tclnet/seed.hpp"

using namespace tclnet;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void spit(const std::filesystem::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << s;
}

SynthParams small(std::size_t n, std::uint64_t seed) {
  SynthParams p;
  p.n_samples = n;
  p.seed = seed;
  return p;
}

// Pearson correlation between the image and its rotation by `angle` about
// (cx, cy), over a disk of radius `radius` (nearest-neighbour sampling).
double rotational_correlation(const Image& img, double cx, double cy, double angle, double radius) {
  const double c = std::cos(angle), s = std::sin(angle);
  double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
  std::size_t n = 0;
  const int r = static_cast<int>(radius);
  for (int dy = -r; dy <= r; dy += 2) {
    for (int dx = -r; dx <= r; dx += 2) {
      if (dx * dx + dy * dy > r * r) continue;
      const double rx = cx + c * dx - s * dy, ry = cy + s * dx + c * dy;
      const long ax = std::lround(cx + dx), ay = std::lround(cy + dy);
      const long bx = std::lround(rx), by = std::lround(ry);
      const long lim = static_cast<long>(img.width) - 1;
      if (ax < 0 || ay < 0 || bx < 0 || by < 0 || ax > lim || ay > lim || bx > lim || by > lim) continue;
      const double a = img.at(ax, ay), b = img.at(bx, by);
      sa += a;
      sb += b;
      saa += a * a;
      sbb += b * b;
      sab += a * b;
      ++n;
    }
  }
  const double m = static_cast<double>(n);
  const double cov = sab / m - (sa / m) * (sb / m);
  const double va = saa / m - (sa / m) * (sa / m), vb = sbb / m - (sb / m) * (sb / m);
  return cov / std::sqrt(va * vb + 1e-18);
}

}  // namespace

TEST_CASE("generate writes the requested counts and splits") {
  testutil::TempDir dir;
  const auto index = generate(small(20, 7), dir.path());
  CHECK(index.size() == 20);
  CHECK(index.count_eyed() == 13);
  CHECK(index.filter(Split::kTest).size() == 4);
  for (const auto& e : index.filter(Split::kTest).entries) CHECK(e.split == Split::kTest);
  CHECK(std::filesystem::exists(dir.path() / kIndexFile));
}

TEST_CASE("eyed count is exact for the default fraction") {
  testutil::TempDir dir;
  SynthParams p = small(100, 3);
  p.image_format = "pgm";
  const auto index = generate(p, dir.path());
  CHECK(index.count_eyed() == 65);
}

TEST_CASE("generation is byte-identical for a fixed seed") {
  testutil::TempDir a, b;
  generate(small(6, 11), a.path());
  generate(small(6, 11), b.path());
  CHECK(slurp(a.path() / kIndexFile) == slurp(b.path() / kIndexFile));
  for (const auto& entry : load_index(a.path()).entries) {
    CHECK(slurp(a.path() / entry.filename) == slurp(b.path() / entry.filename));
  }
  testutil::TempDir c;
  generate(small(6, 12), c.path());
  CHECK(slurp(a.path() / kIndexFile) != slurp(c.path() / kIndexFile));
}

TEST_CASE("round trip generate then load preserves every label") {
  testutil::TempDir dir;
  SynthParams p = small(12, 5);
  p.label_noise_px = 3.0;
  const auto written = generate(p, dir.path());
  const auto loaded = load_index(dir.path());
  REQUIRE(loaded.size() == written.size());
  for (std::size_t i = 0; i < loaded.size(); ++i) {
    CHECK(loaded.entries[i].id == written.entries[i].id);
    CHECK(loaded.entries[i].u == written.entries[i].u);
    CHECK(loaded.entries[i].v == written.entries[i].v);
    CHECK(loaded.entries[i].eyed == written.entries[i].eyed);
  }
  const Sample s = read_sample(loaded, 0);
  CHECK(s.image.width == kImageSize);
  CHECK(s.label.u == loaded.entries[0].u);
  for (float v : s.image.pixels) {
    CHECK(v >= 0.0f);
    CHECK(v <= 1.0f);
    if (v < 0.0f || v > 1.0f) break;
  }
}

TEST_CASE("index schema is stable") {
  testutil::TempDir dir;
  generate(small(3, 1), dir.path());
  const std::string actual = slurp(dir.path() / kIndexFile);
  const std::string golden = slurp(std::filesystem::path(TCLNET_TEST_DATA_DIR) / "golden" / "index_n3_seed1.csv");
  CHECK(actual == golden);
}

TEST_CASE("load errors name the row") {
  testutil::TempDir dir;
  generate(small(4, 2), dir.path());
  const auto path = dir.path() / kIndexFile;
  const std::string original = slurp(path);

  std::istringstream lines(original);
  std::string header, row1, row2;
  std::getline(lines, header);
  std::getline(lines, row1);
  std::getline(lines, row2);
  // Replace u of the second data row (file row 3) with an out-of-frame value.
  std::string bad = row2;
  const auto c1 = bad.find(','), c2 = bad.find(',', c1 + 1), c3 = bad.find(',', c2 + 1);
  bad.replace(c2 + 1, c3 - c2 - 1, "600");
  std::string text = original;
  text.replace(text.find(row2), row2.size(), bad);
  spit(path, text);
  CHECK_THROWS_WITH_AS(load_index(dir.path()), doctest::Contains("row 3"), LoadError);

  spit(path, original + "extra,images/missing.png,10,10,1,train\n");
  CHECK_THROWS_WITH_AS(load_index(dir.path()), doctest::Contains("row 6"), LoadError);

  spit(path, original + row1 + "\n");
  CHECK_THROWS_AS(load_index(dir.path()), LoadError);

  spit(path, "id,file\n");
  CHECK_THROWS_AS(load_index(dir.path()), LoadError);
  CHECK_THROWS_AS(load_index(dir.path() / "nowhere"), LoadError);
}

TEST_CASE("degenerate generator settings are config errors") {
  SynthParams p;
  p.eyed_fraction = 1.5;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = SynthParams{};
  p.eye_radius_min = 0.0;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = SynthParams{};
  p.image_format = "tiff";
  CHECK_THROWS_AS(p.validate(), ConfigError);
}

TEST_CASE("generator settings text round trip") {
  SynthParams p;
  p.n_samples = 250;
  p.eyed_fraction = 0.5;
  p.label_noise_px = 2.0;
  p.noise_non_eyed_only = true;
  p.image_format = "pgm";
  p.seed = 12345678901234ULL;
  const SynthParams back = SynthParams::from_text(p.to_text() + "model.widths=1\n");
  CHECK(back.to_text() == p.to_text());
  CHECK(back.seed == p.seed);
  CHECK(back.noise_non_eyed_only);
  CHECK_THROWS_AS(SynthParams::from_text("synth.bogus=1\n"), ConfigError);
}

TEST_CASE("the eye is darker than its surrounding annulus") {
  SynthParams p;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const CenterLabel c{256.0, 240.0};
    const Image img = render_cyclone(c, true, p, derive_seed(99, {seed}));
    double inside = 0, ring = 0;
    std::size_t ni = 0, nr = 0;
    for (std::size_t y = 200; y < 280; ++y) {
      for (std::size_t x = 216; x < 296; ++x) {
        const double r = std::hypot(x - c.u, y - c.v);
        if (r < p.eye_radius_min - 2.0) {
          inside += img.at(x, y);
          ++ni;
        } else if (r > p.eye_radius_max + 4.0 && r < p.eye_radius_max + 14.0) {
          ring += img.at(x, y);
          ++nr;
        }
      }
    }
    CHECK(inside / ni < ring / nr);
  }
}

TEST_CASE("the label is the rotational fixed point of the cloud field") {
  // For each sample compare rotational self-similarity about the label with
  // that about 16 points 32 and 48 px away.
  SynthParams p;
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> pos(96.0, 416.0);
  constexpr std::size_t kSamples = 60;
  constexpr double kAngle = 15.0 * std::numbers::pi / 180.0;
  std::size_t wins = 0;
  double label_mean = 0.0, best_other_mean = 0.0;
  for (std::size_t i = 0; i < kSamples; ++i) {
    const CenterLabel c{pos(rng), pos(rng)};
    const bool eyed = i % 3 != 0;
    const Image img = render_cyclone(c, eyed, p, derive_seed(7, {i}));
    const double at_label = rotational_correlation(img, c.u, c.v, kAngle, 64.0);
    double best_other = -1.0;
    for (double d : {32.0, 48.0}) {
      for (int k = 0; k < 8; ++k) {
        const double a = k * std::numbers::pi / 4.0;
        best_other = std::max(best_other,
                              rotational_correlation(img, c.u + d * std::cos(a), c.v + d * std::sin(a), kAngle, 64.0));
      }
    }
    wins += at_label > best_other;
    label_mean += at_label / kSamples;
    best_other_mean += best_other / kSamples;
  }
  MESSAGE("label corr " << label_mean << ", best offset corr " << best_other_mean << ", wins " << wins);
  // Statistical: a saturated central dense overcast can flatten the contrast
  // inside the disk for an occasional sample.
  CHECK(wins >= kSamples * 95 / 100);
  CHECK(label_mean - best_other_mean > 0.03);
}
