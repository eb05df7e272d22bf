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

#ifndef TCLNET_TRAINING_HPP_
#define TCLNET_TRAINING_HPP_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "tclnet/data.hpp"
#include "tclnet/model.hpp"
#include "tclnet/objective.hpp"

namespace tclnet {

// ---------------------------------------------------------------------------
// Adam

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Bias-corrected Adam over a fixed list of named parameters.
template <typename T>
class Adam {
 public:
  Adam(std::vector<NamedTensor<T>> params, AdamOptions options);

  /// m ← β₁m + (1−β₁)g;  v ← β₂v + (1−β₂)g²;  θ ← θ − lr·m̂/(√v̂ + eps).
  /// Parameters without a gradient are skipped. A non-finite gradient raises
  /// NumericError naming the parameter, before anything is modified.
  void step();
  void zero_grad();

  void set_lr(double lr) { options_.lr = lr; }
  double lr() const { return options_.lr; }
  std::uint64_t steps() const { return t_; }
  const AdamOptions& options() const { return options_; }

  /// Moment buffers as "adam.m.<param>" / "adam.v.<param>".
  std::vector<NamedTensor<T>> state_tensors() const;
  void set_steps(std::uint64_t t) { t_ = t; }

 private:
  std::vector<NamedTensor<T>> params_;
  std::vector<Tensor<T>> m_;
  std::vector<Tensor<T>> v_;
  AdamOptions options_;
  std::uint64_t t_ = 0;
};

// ---------------------------------------------------------------------------
// Configuration

enum class LossKind { kMse, kTclPlus };
const char* loss_name(LossKind kind);  // "mse" / "tcl+"
LossKind parse_loss(const std::string& name);

struct TrainConfig {
  std::size_t epochs = 65;
  std::size_t batch_size = 4;
  double base_lr = 1e-3;
  std::size_t lr_drop_epoch = 30;  // epochs 1..lr_drop_epoch use base_lr
  double dropped_lr = 1e-4;
  LossKind loss = LossKind::kMse;
  std::size_t tcl_switch_epoch = 50;  // with tcl+, epochs 1..switch use MSE
  std::size_t resize_to = 574;
  std::size_t crop_to = 512;
  double flip_prob = 0.5;
  bool augment = true;
  double sigma = 15.0;
  double alpha = 0.25;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 0;

  void validate() const;
  HeatmapParams heatmap() const;
  std::string to_text() const;  // canonical `train.key=value` lines
  static TrainConfig from_text(const std::string& text);
};

/// Learning rate for a 1-based epoch (hard step after lr_drop_epoch).
double lr_for_epoch(const TrainConfig& config, std::size_t epoch);
/// Loss in effect for a 1-based epoch.
LossKind active_loss(const TrainConfig& config, std::size_t epoch);

// ---------------------------------------------------------------------------
// Augmentation

struct AugmentChoice {
  std::size_t offset_x = 0;
  std::size_t offset_y = 0;
  bool flip_horizontal = false;
  bool flip_vertical = false;
};

struct AugmentedSample {
  Image image;  // crop_to × crop_to
  CenterLabel label;
  AugmentChoice choice;
};

/// Resize to resize_to (bilinear), crop at the given offsets, then flip.
/// Labels follow u' = u·resize/size − offset, mirrored as crop−1−u'.
AugmentedSample apply_augment(const Sample& sample, const TrainConfig& config, const AugmentChoice& choice);

/// Draws a random crop (resampled up to 10 times when the label would leave
/// the frame, then centred on the label) and independent flips.
AugmentedSample augment(const Sample& sample, const TrainConfig& config, std::mt19937_64& rng);

// ---------------------------------------------------------------------------
// Training

struct EpochLog {
  std::size_t epoch = 0;
  double lr = 0.0;
  std::string loss_name;
  double mean_loss = 0.0;
  double seconds = 0.0;
  std::size_t steps = 0;
  std::size_t mse_branch = 0;
  std::size_t exp_branch = 0;
  std::optional<double> val_mle;

  static std::string csv_header();
  std::string csv_row() const;
};

struct TrainOptions {
  /// When set, receives epoch_log.csv, last.ckpt, best.ckpt and final.weights.
  std::optional<std::filesystem::path> out_dir;
  /// Evaluated after every epoch; selects best.ckpt by MLE.
  const std::vector<Sample>* validation = nullptr;
  /// Continue from a checkpoint written by an earlier run.
  std::optional<std::filesystem::path> resume_from;
  /// Stop after this many optimizer steps in total (including resumed ones).
  std::optional<std::size_t> max_steps;
  std::function<void(const EpochLog&)> on_epoch;
};

struct TrainResult {
  TclNet<float> net;
  std::vector<EpochLog> log;
  std::size_t steps = 0;
};

/// Builds the network from `model_config` (seeded by train_config.seed) and
/// runs the epoch loop: seeded shuffle, augmentation, target encoding,
/// forward, loss per schedule, backward, Adam step. A non-finite loss or
/// gradient raises DivergenceError; the last good checkpoint is kept.
TrainResult train(const std::vector<Sample>& dataset, const ModelConfig& model_config,
                  const TrainConfig& train_config, const TrainOptions& options = {});

struct Checkpoint {
  TclNet<float> net;
  TrainConfig train_config;
  std::size_t epoch = 0;
  std::uint64_t adam_steps = 0;
  Archive archive;  // raw entries, for restoring optimizer moments
};

void save_checkpoint(const std::filesystem::path& path, const TclNet<float>& net, const Adam<float>& adam,
                     const TrainConfig& config, std::size_t epoch);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Input tensor (B,1,S,S) from images of equal size.
Tensor<float> images_to_tensor(const std::vector<const Image*>& images);

// ---------------------------------------------------------------------------
// Evaluation

/// Maps a batch of images (B,1,S,S) to heatmaps (B,1,S/4,S/4).
using Predictor = std::function<Tensor<float>(const Tensor<float>&, std::span<const Sample* const>)>;

/// Eval-mode inference without augmentation; MLE over all/eyed/non-eyed.
MleReport evaluate(TclNet<float>& net, const std::vector<Sample>& dataset, const HeatmapParams& params,
                   std::size_t batch_size = 4);
MleReport evaluate(const Predictor& predict, const std::vector<Sample>& dataset,
                   const HeatmapParams& params, std::size_t batch_size = 4);
/// Predicted centres for each sample, input-pixel scale.
std::vector<CenterLabel> predict_centers(TclNet<float>& net, const std::vector<const Image*>& images,
                                         const HeatmapParams& params, std::size_t batch_size = 4);

// ---------------------------------------------------------------------------
// Repeats

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // population
  std::string str() const;  // "4.5137±0.0846"
};

struct RepeatSummary {
  std::size_t runs = 0;
  MeanStd all;
  std::optional<MeanStd> eyed;
  std::optional<MeanStd> non_eyed;
};

MeanStd mean_std(std::span<const double> values);
std::string format_mean_std(double mean, double std);
/// Aggregates k ≥ 2 reports column by column.
RepeatSummary summarize_runs(std::span<const MleReport> reports);
/// Runs `run` once per seed (k = seeds.size() ≥ 2, seeds distinct).
RepeatSummary repeat_runs(const std::vector<std::uint64_t>& seeds,
                          const std::function<MleReport(std::uint64_t)>& run);

}  // namespace tclnet

#endif  // TCLNET_TRAINING_HPP_
