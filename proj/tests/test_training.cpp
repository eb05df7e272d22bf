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
#include <limits>
#include <random>

#include "doctest.h"
#include "support/oracles.hpp"
#include "support/temp_dir.hpp"
#include "tclnet/errors.hpp"
#include "tclnet/training.hpp"

using namespace tclnet;

namespace {

Sample dot_sample(double u, double v) {
  Sample s;
  s.id = "dot";
  s.image = Image(kImageSize, kImageSize, 0.0f);
  for (std::size_t y = 0; y < kImageSize; ++y) {
    for (std::size_t x = 0; x < kImageSize; ++x) {
      const double r2 = (x - u) * (x - u) + (y - v) * (y - v);
      s.image.at(x, y) = static_cast<float>(std::exp(-r2 / (2.0 * 2.0 * 2.0)));
    }
  }
  s.label = {u, v};
  return s;
}

CenterLabel intensity_centroid(const Image& img) {
  double sx = 0, sy = 0, sw = 0;
  for (std::size_t y = 0; y < img.height; ++y) {
    for (std::size_t x = 0; x < img.width; ++x) {
      const double w = img.at(x, y) > 0.05f ? img.at(x, y) : 0.0;
      sx += w * x;
      sy += w * y;
      sw += w;
    }
  }
  return {sx / sw, sy / sw};
}

std::vector<Sample> tiny_dataset(std::size_t n, std::uint64_t seed) {
  std::vector<Sample> out;
  SynthParams p;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> pos(100.0, 400.0);
  for (std::size_t i = 0; i < n; ++i) {
    Sample s;
    s.id = "s" + std::to_string(i);
    s.label = {pos(rng), pos(rng)};
    s.eyed = i % 2 == 0;
    s.image = render_cyclone(s.label, s.eyed, p, seed * 100 + i);
    out.push_back(std::move(s));
  }
  return out;
}

ModelConfig tiny_model() {
  ModelConfig c;
  c.width_divisor = 8;
  return c;
}

TrainConfig quick_config(std::size_t epochs) {
  TrainConfig c;
  c.epochs = epochs;
  c.batch_size = 2;
  c.seed = 3;
  return c;
}

}  // namespace

TEST_CASE("first Adam step on a scalar quadratic matches the closed form") {
  auto theta = Tensor<double>::scalar(1.0, true);
  AdamOptions opts;
  Adam<double> adam({{"theta", theta}}, opts);
  backward(scale(square(theta), 0.5));  // f = θ²/2, gradient θ
  adam.step();
  CHECK(std::abs(theta.item() - oracle::adam_first_step(1.0, 1.0, opts.lr, opts.eps)) < 1e-12);
  CHECK(adam.steps() == 1);
}

TEST_CASE("Adam refuses non-finite gradients before touching parameters") {
  auto theta = Tensor<double>::from_data({2}, {1.0, 2.0}, true);
  Adam<double> adam({{"theta", theta}}, AdamOptions{});
  theta.mutable_grad()[1] = std::numeric_limits<double>::infinity();
  CHECK_THROWS_WITH_AS(adam.step(), doctest::Contains("theta"), NumericError);
  CHECK(theta.data()[0] == 1.0);
  CHECK(adam.steps() == 0);
}

TEST_CASE("learning rate drops after epoch 30 and the loss switches after epoch 50") {
  TrainConfig c;
  CHECK(lr_for_epoch(c, 1) == 1e-3);
  CHECK(lr_for_epoch(c, 30) == 1e-3);
  CHECK(lr_for_epoch(c, 31) == 1e-4);
  CHECK(lr_for_epoch(c, 65) == 1e-4);
  CHECK(active_loss(c, 60) == LossKind::kMse);
  c.loss = LossKind::kTclPlus;
  CHECK(active_loss(c, 50) == LossKind::kMse);
  CHECK(active_loss(c, 51) == LossKind::kTclPlus);
}

TEST_CASE("train config text round trip and validation") {
  TrainConfig c;
  c.loss = LossKind::kTclPlus;
  c.sigma = 30.0;
  c.seed = 77;
  const TrainConfig back = TrainConfig::from_text(c.to_text());
  CHECK(back.to_text() == c.to_text());
  c.tcl_switch_epoch = 65;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = TrainConfig{};
  c.crop_to = 600;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  CHECK_THROWS_AS(parse_loss("l1"), ConfigError);
  CHECK_THROWS_AS(TrainConfig::from_text("train.bogus=1\n"), ConfigError);
}

TEST_CASE("augmentation keeps the label on the rendered dot") {
  const TrainConfig cfg;
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> pos(20.0, 490.0);
  for (int i = 0; i < 12; ++i) {
    const Sample s = dot_sample(pos(rng), pos(rng));
    const AugmentedSample a = augment(s, cfg, rng);
    const CenterLabel found = intensity_centroid(a.image);
    CHECK(std::hypot(found.u - a.label.u, found.v - a.label.v) <= 1.5);
    CHECK(a.label.u >= 0.0);
    CHECK(a.label.u <= 511.0);
  }
}

TEST_CASE("explicit flips mirror the label") {
  const TrainConfig cfg;
  const Sample s = dot_sample(100.0, 300.0);
  AugmentChoice choice{31, 31, true, true};
  const AugmentedSample a = apply_augment(s, cfg, choice);
  const double scale = 574.0 / 512.0;
  CHECK(a.label.u == doctest::Approx(511.0 - (100.0 * scale - 31.0)));
  CHECK(a.label.v == doctest::Approx(511.0 - (300.0 * scale - 31.0)));
  choice.offset_x = 63;
  CHECK_THROWS_AS(apply_augment(s, cfg, choice), AugmentationError);
}

TEST_CASE("augmentation is deterministic for a given generator state") {
  const TrainConfig cfg;
  const Sample s = dot_sample(256.0, 256.0);
  std::mt19937_64 a(9), b(9);
  const auto x = augment(s, cfg, a), y = augment(s, cfg, b);
  CHECK(x.choice.offset_x == y.choice.offset_x);
  CHECK(x.image.pixels == y.image.pixels);
}

TEST_CASE("training logs, checkpoints and resumes bit-identically") {
  testutil::TempDir dir;
  const auto data = tiny_dataset(4, 1);
  TrainOptions full_opts;
  full_opts.out_dir = dir.path() / "full";
  const TrainResult full = train(data, tiny_model(), quick_config(2), full_opts);
  REQUIRE(full.log.size() == 2);
  CHECK(full.steps == 4);
  CHECK(std::filesystem::exists(dir.path() / "full" / "final.weights"));
  CHECK(std::filesystem::exists(dir.path() / "full" / "best.ckpt"));

  std::ifstream log(dir.path() / "full" / "epoch_log.csv");
  std::string header;
  std::getline(log, header);
  CHECK(header == EpochLog::csv_header());

  TrainOptions first;
  first.out_dir = dir.path() / "first";
  train(data, tiny_model(), quick_config(1), first);
  const Checkpoint ck = load_checkpoint(dir.path() / "first" / "last.ckpt");
  CHECK(ck.epoch == 1);
  CHECK(ck.adam_steps == 2);

  TrainOptions resumed_opts;
  resumed_opts.resume_from = dir.path() / "first" / "last.ckpt";
  const TrainResult resumed = train(data, tiny_model(), quick_config(2), resumed_opts);
  REQUIRE(resumed.log.size() == 1);
  CHECK(resumed.log[0].epoch == 2);
  const auto pa = full.net.named_parameters(), pb = resumed.net.named_parameters();
  for (std::size_t i = 0; i < pa.size(); ++i) {
    CHECK_MESSAGE(std::equal(pa[i].tensor.data().begin(), pa[i].tensor.data().end(), pb[i].tensor.data().begin()),
                  pa[i].name);
  }

  ModelConfig other = tiny_model();
  other.width_divisor = 4;
  CHECK_THROWS_AS(train(data, other, quick_config(2), resumed_opts), ConfigError);
}

TEST_CASE("max_steps stops mid-epoch") {
  const auto data = tiny_dataset(6, 2);
  TrainOptions opts;
  opts.max_steps = 2;
  const TrainResult r = train(data, tiny_model(), quick_config(3), opts);
  CHECK(r.steps == 2);
  REQUIRE(r.log.size() == 1);
  CHECK(r.log[0].steps == 2);
}

TEST_CASE("loss switch is visible in branch counters") {
  const auto data = tiny_dataset(2, 3);
  TrainConfig cfg = quick_config(3);
  cfg.loss = LossKind::kTclPlus;
  cfg.tcl_switch_epoch = 2;
  cfg.augment = false;
  const TrainResult r = train(data, tiny_model(), cfg, {});
  REQUIRE(r.log.size() == 3);
  CHECK(r.log[1].loss_name == "mse");
  CHECK(r.log[1].exp_branch == 0);
  CHECK(r.log[2].loss_name == "tcl+");
  CHECK(r.log[2].mse_branch + r.log[2].exp_branch == 2);
}

TEST_CASE("non-finite inputs surface as divergence") {
  auto data = tiny_dataset(2, 4);
  data[1].image.at(10, 10) = std::numeric_limits<float>::quiet_NaN();
  TrainConfig cfg = quick_config(1);
  cfg.augment = false;
  CHECK_THROWS_AS(train(data, tiny_model(), cfg, {}), DivergenceError);
}

TEST_CASE("evaluation with the target oracle stays within the quantization bound") {
  const auto data = tiny_dataset(6, 5);
  const HeatmapParams p;
  const Predictor oracle_predict = [&](const Tensor<float>&, std::span<const Sample* const> samples) {
    std::vector<CenterLabel> labels;
    for (const Sample* s : samples) labels.push_back(s->label);
    return encode_batch<float>(labels, p);
  };
  const MleReport r = evaluate(oracle_predict, data, p, 4);
  CHECK(r.mle_all <= 2.83);
  CHECK(r.n_all == 6);
  CHECK(r.n_eyed == 3);
}

TEST_CASE("repeat summaries use population std and four decimals") {
  const double v[] = {4.0, 6.0};
  const MeanStd ms = mean_std(v);
  CHECK(ms.mean == 5.0);
  CHECK(ms.std == 1.0);
  CHECK(ms.str() == "5.0000±1.0000");
  CHECK(format_mean_std(4.51374, 0.08456) == "4.5137±0.0846");

  MleReport a, b;
  a.mle_all = 3.0;
  b.mle_all = 3.0;
  a.mle_eyed = 2.0;
  const MleReport reports[] = {a, b};
  const RepeatSummary s = summarize_runs(reports);
  CHECK(s.all.std == 0.0);
  CHECK_FALSE(s.eyed.has_value());
  CHECK_THROWS_AS(summarize_runs(std::span<const MleReport>(reports, 1)), DomainError);
  CHECK_THROWS_AS(repeat_runs({1, 1}, [](std::uint64_t) { return MleReport{}; }), DomainError);
}
