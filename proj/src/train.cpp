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
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "tclnet/keyvalue.hpp"
#include "tclnet/seed.hpp"
#include "tclnet/training.hpp"

namespace tclnet {

const char* loss_name(LossKind kind) { return kind == LossKind::kMse ? "mse" : "tcl+"; }

LossKind parse_loss(const std::string& name) {
  if (name == "mse") return LossKind::kMse;
  if (name == "tcl+" || name == "tcl_plus") return LossKind::kTclPlus;
  throw ConfigError("loss must be 'mse' or 'tcl+', got '" + name + "'");
}

void TrainConfig::validate() const {
  if (epochs == 0) throw ConfigError("epochs: must be positive");
  if (batch_size == 0) throw ConfigError("batch_size: must be positive");
  if (!(base_lr > 0.0) || !(dropped_lr > 0.0)) throw ConfigError("base_lr/dropped_lr: must be positive");
  if (loss == LossKind::kTclPlus && tcl_switch_epoch >= epochs) {
    throw ConfigError("tcl_switch_epoch: must be below epochs (" + std::to_string(tcl_switch_epoch) +
                      " >= " + std::to_string(epochs) + ")");
  }
  if (crop_to != kImageSize) {
    throw ConfigError("crop_to: must equal the network input size " + std::to_string(kImageSize));
  }
  if (crop_to > resize_to) throw ConfigError("crop_to: must not exceed resize_to");
  if (flip_prob < 0.0 || flip_prob > 1.0) throw ConfigError("flip_prob: must be in [0,1]");
  if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0) {
    throw ConfigError("beta1/beta2: must be in [0,1)");
  }
  heatmap().validate();
}

HeatmapParams TrainConfig::heatmap() const {
  HeatmapParams p;
  p.alpha = alpha;
  p.sigma = sigma;
  p.map_size = static_cast<std::size_t>(std::llround(alpha * static_cast<double>(crop_to)));
  return p;
}

std::string TrainConfig::to_text() const {
  std::ostringstream out;
  out << "train.epochs=" << epochs << '\n'
      << "train.batch_size=" << batch_size << '\n'
      << "train.base_lr=" << format_double(base_lr) << '\n'
      << "train.lr_drop_epoch=" << lr_drop_epoch << '\n'
      << "train.dropped_lr=" << format_double(dropped_lr) << '\n'
      << "train.loss=" << loss_name(loss) << '\n'
      << "train.tcl_switch_epoch=" << tcl_switch_epoch << '\n'
      << "train.resize_to=" << resize_to << '\n'
      << "train.crop_to=" << crop_to << '\n'
      << "train.flip_prob=" << format_double(flip_prob) << '\n'
      << "train.augment=" << (augment ? "true" : "false") << '\n'
      << "train.sigma=" << format_double(sigma) << '\n'
      << "train.alpha=" << format_double(alpha) << '\n'
      << "train.beta1=" << format_double(beta1) << '\n'
      << "train.beta2=" << format_double(beta2) << '\n'
      << "train.adam_eps=" << format_double(adam_eps) << '\n'
      << "train.seed=" << seed << '\n';
  return out.str();
}

TrainConfig TrainConfig::from_text(const std::string& text) {
  TrainConfig c;
  for (const auto& [key, value] : parse_key_values(text)) {
    if (key.rfind("train.", 0) != 0) continue;
    const std::string f = key.substr(6);
    if (f == "epochs") c.epochs = parse_size(key, value);
    else if (f == "batch_size") c.batch_size = parse_size(key, value);
    else if (f == "base_lr") c.base_lr = parse_double(key, value);
    else if (f == "lr_drop_epoch") c.lr_drop_epoch = parse_size(key, value);
    else if (f == "dropped_lr") c.dropped_lr = parse_double(key, value);
    else if (f == "loss") c.loss = parse_loss(value);
    else if (f == "tcl_switch_epoch") c.tcl_switch_epoch = parse_size(key, value);
    else if (f == "resize_to") c.resize_to = parse_size(key, value);
    else if (f == "crop_to") c.crop_to = parse_size(key, value);
    else if (f == "flip_prob") c.flip_prob = parse_double(key, value);
    else if (f == "augment") c.augment = parse_bool(key, value);
    else if (f == "sigma") c.sigma = parse_double(key, value);
    else if (f == "alpha") c.alpha = parse_double(key, value);
    else if (f == "beta1") c.beta1 = parse_double(key, value);
    else if (f == "beta2") c.beta2 = parse_double(key, value);
    else if (f == "adam_eps") c.adam_eps = parse_double(key, value);
    else if (f == "seed") c.seed = parse_size(key, value);
    else throw ConfigError("unknown train key '" + key + "'");
  }
  return c;
}

double lr_for_epoch(const TrainConfig& config, std::size_t epoch) {
  return epoch <= config.lr_drop_epoch ? config.base_lr : config.dropped_lr;
}

LossKind active_loss(const TrainConfig& config, std::size_t epoch) {
  if (config.loss == LossKind::kTclPlus && epoch > config.tcl_switch_epoch) return LossKind::kTclPlus;
  return LossKind::kMse;
}

std::string EpochLog::csv_header() {
  return "epoch,lr,loss_name,mean_loss,seconds,mse_branch,exp_branch,val_mle";
}

std::string EpochLog::csv_row() const {
  std::ostringstream out;
  out << epoch << ',' << format_double(lr) << ',' << loss_name << ',' << format_double(mean_loss) << ','
      << format_double(seconds) << ',' << mse_branch << ',' << exp_branch << ','
      << (val_mle ? format_double(*val_mle) : std::string());
  return out.str();
}

Tensor<float> images_to_tensor(const std::vector<const Image*>& images) {
  if (images.empty()) throw DimensionError("empty image batch");
  const std::size_t w = images.front()->width, h = images.front()->height;
  std::vector<float> data;
  data.reserve(images.size() * w * h);
  for (const Image* img : images) {
    if (img->width != w || img->height != h) throw DimensionError("images in a batch differ in size");
    data.insert(data.end(), img->pixels.begin(), img->pixels.end());
  }
  return Tensor<float>::from_data({images.size(), 1, h, w}, std::move(data));
}

// ---------------------------------------------------------------------------
// Checkpoints

void save_checkpoint(const std::filesystem::path& path, const TclNet<float>& net, const Adam<float>& adam,
                     const TrainConfig& config, std::size_t epoch) {
  auto tensors = net.named_parameters();
  for (auto& b : net.named_buffers()) tensors.push_back(std::move(b));
  for (auto& s : adam.state_tensors()) tensors.push_back(std::move(s));
  const std::string header = net.config().to_text() + config.to_text() +
                             "checkpoint.epoch=" + std::to_string(epoch) + "\n" +
                             "checkpoint.adam_steps=" + std::to_string(adam.steps()) + "\n";
  write_archive(path, header, tensors);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  Archive a = read_archive(path);
  const auto kv = parse_key_values(a.header);
  auto get = [&](const char* key) {
    const auto it = kv.find(key);
    if (it == kv.end()) throw CorruptWeightsError(path.string() + " lacks '" + key + "'");
    return parse_size(key, it->second);
  };
  auto net = TclNet<float>::build(ModelConfig::from_text(a.header), 0);
  restore_tensors(a, net.named_parameters());
  restore_tensors(a, net.named_buffers());
  Checkpoint c{std::move(net), TrainConfig::from_text(a.header), get("checkpoint.epoch"),
               get("checkpoint.adam_steps"), std::move(a)};
  return c;
}

// ---------------------------------------------------------------------------
// Loop

namespace {

struct Batch {
  Tensor<float> input;
  std::vector<CenterLabel> labels;
};

Batch prepare_batch(const std::vector<Sample>& dataset, std::span<const std::size_t> indices,
                    const TrainConfig& config, std::size_t epoch) {
  std::vector<AugmentedSample> augmented;
  std::vector<const Image*> images;
  Batch batch;
  augmented.reserve(indices.size());
  for (std::size_t idx : indices) {
    const Sample& s = dataset[idx];
    if (config.augment) {
      std::mt19937_64 rng(derive_seed(config.seed, {0xA06, epoch, idx}));
      augmented.push_back(augment(s, config, rng));
      images.push_back(&augmented.back().image);
      batch.labels.push_back(augmented.back().label);
    } else {
      images.push_back(&s.image);
      batch.labels.push_back(s.label);
    }
  }
  batch.input = images_to_tensor(images);
  return batch;
}

void append_log(const std::filesystem::path& path, const EpochLog& entry) {
  const bool fresh = !std::filesystem::exists(path);
  std::ofstream out(path, std::ios::app);
  if (!out) throw IoError("cannot append to '" + path.string() + "'");
  if (fresh) out << EpochLog::csv_header() << '\n';
  out << entry.csv_row() << '\n';
}

}  // namespace

TrainResult train(const std::vector<Sample>& dataset, const ModelConfig& model_config,
                  const TrainConfig& config, const TrainOptions& options) {
  config.validate();
  model_config.validate();
  if (dataset.empty()) throw ConfigError("training set is empty");
  if (model_config.input_size != config.crop_to) {
    throw ConfigError("model input_size " + std::to_string(model_config.input_size) +
                      " differs from crop_to " + std::to_string(config.crop_to));
  }

  std::size_t start_epoch = 1;
  std::optional<Checkpoint> resumed;
  if (options.resume_from) {
    resumed.emplace(load_checkpoint(*options.resume_from));
    if (!(resumed->net.config() == model_config)) {
      throw ConfigError("checkpoint '" + options.resume_from->string() + "' has a different model config");
    }
    start_epoch = resumed->epoch + 1;
  }
  TrainResult result{resumed ? std::move(resumed->net) : TclNet<float>::build(model_config, config.seed), {}, 0};
  TclNet<float>& net = result.net;

  AdamOptions adam_opts{config.base_lr, config.beta1, config.beta2, config.adam_eps};
  Adam<float> adam(net.named_parameters(), adam_opts);
  if (resumed) {
    restore_tensors(resumed->archive, adam.state_tensors());
    adam.set_steps(resumed->adam_steps);
  }
  result.steps = static_cast<std::size_t>(adam.steps());

  const HeatmapParams heat = config.heatmap();
  std::optional<std::filesystem::path> last_ckpt, best_ckpt;
  if (options.out_dir) {
    std::filesystem::create_directories(*options.out_dir);
    last_ckpt = *options.out_dir / "last.ckpt";
    best_ckpt = *options.out_dir / "best.ckpt";
  }
  double best_score = std::numeric_limits<double>::infinity();

  for (std::size_t epoch = start_epoch; epoch <= config.epochs; ++epoch) {
    if (options.max_steps && result.steps >= *options.max_steps) break;
    const auto started = std::chrono::steady_clock::now();
    EpochLog entry;
    entry.epoch = epoch;
    entry.lr = lr_for_epoch(config, epoch);
    const LossKind kind = active_loss(config, epoch);
    entry.loss_name = loss_name(kind);
    adam.set_lr(entry.lr);

    std::vector<std::size_t> order(dataset.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 shuffle_rng(derive_seed(config.seed, {0x5F1, epoch}));
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    double loss_sum = 0.0;
    std::size_t seen = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      if (options.max_steps && result.steps >= *options.max_steps) break;
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      const std::span<const std::size_t> idx(order.data() + start, end - start);
      try {
        Batch batch = prepare_batch(dataset, idx, config, epoch);
        adam.zero_grad();
        const auto outputs = net.forward_all(batch.input, Mode::kTrain);
        Tensor<float> total;
        for (std::size_t o = 0; o < outputs.size(); ++o) {
          const std::size_t factor = heat.map_size / outputs[o].extent(3);
          const HeatmapParams p = factor == 1 ? heat : heat.downscaled(factor);
          const Tensor<float> target = encode_batch<float>(batch.labels, p);
          LossValue<float> lv = kind == LossKind::kMse ? mse_loss(outputs[o], target)
                                                       : tcl_plus_loss(outputs[o], target);
          total = total.defined() ? add(total, lv.batch) : lv.batch;
          if (o + 1 == outputs.size()) {
            entry.mse_branch += lv.mse_branch;
            entry.exp_branch += lv.exp_branch;
            for (float v : lv.per_sample.data()) loss_sum += v;
          }
        }
        backward(total);
        adam.step();
      } catch (const NumericError& e) {
        throw DivergenceError("training diverged in epoch " + std::to_string(epoch) + ": " + e.what() +
                              (last_ckpt && std::filesystem::exists(*last_ckpt)
                                   ? "; last good checkpoint kept at " + last_ckpt->string()
                                   : std::string()));
      }
      seen += idx.size();
      ++result.steps;
      ++entry.steps;
    }
    entry.mean_loss = seen ? loss_sum / static_cast<double>(seen) : 0.0;
    if (options.validation && !options.validation->empty()) {
      entry.val_mle = evaluate(net, *options.validation, heat).mle_all;
    }
    entry.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

    if (options.out_dir) {
      save_checkpoint(*last_ckpt, net, adam, config, epoch);
      const double score = entry.val_mle ? *entry.val_mle : entry.mean_loss;
      if (score < best_score) {
        best_score = score;
        save_checkpoint(*best_ckpt, net, adam, config, epoch);
      }
      append_log(*options.out_dir / "epoch_log.csv", entry);
    }
    if (options.on_epoch) options.on_epoch(entry);
    result.log.push_back(std::move(entry));
  }
  if (options.out_dir) save_weights(net, *options.out_dir / "final.weights");
  return result;
}

}  // namespace tclnet
