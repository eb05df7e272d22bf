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

// tclnet: generate synthetic data, train, evaluate, infer and sweep sigma.
//
// Exit codes: 0 success, 1 runtime/I/O, 2 usage/config, 3 divergence.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "tclnet/data.hpp"
#include "tclnet/errors.hpp"
#include "tclnet/keyvalue.hpp"
#include "tclnet/training.hpp"

#ifndef TCLNET_VERSION
#define TCLNET_VERSION "unknown"
#endif

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace tclnet;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;
constexpr int kExitDivergence = 3;

constexpr const char* kGeneratorFile = "generator.txt";
constexpr const char* kManifestFile = "manifest.json";
constexpr const char* kConfigFile = "config.txt";

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  return {std::istreambuf_iterator<char>(in), {}};
}

void spit(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out || !(out << text)) throw IoError("cannot write " + path.string());
}

json kv_to_json(const std::string& text) {
  json j = json::object();
  for (const auto& [k, v] : parse_key_values(text)) j[k] = v;
  return j;
}

// Either a weights file or a training checkpoint.
TclNet<float> load_model(const fs::path& path) {
  if (!fs::exists(path)) throw IoError("no such weights file: " + path.string());
  const Archive a = read_archive(path);
  if (a.header.find("checkpoint.epoch=") != std::string::npos) return std::move(load_checkpoint(path).net);
  return load_weights<float>(path);
}

HeatmapParams decode_params(const ModelConfig& m) {
  HeatmapParams p;
  p.map_size = m.output_size();
  p.alpha = static_cast<double>(m.output_size()) / static_cast<double>(m.input_size);
  return p;
}

std::vector<Sample> load_split(const fs::path& root, const std::string& split) {
  DatasetIndex index = load_index(root);
  if (split != "all") index = index.filter(parse_split(split));
  if (index.size() == 0) throw LoadError(root.string() + ": split '" + split + "' is empty");
  return load_samples(index);
}

// ---------------------------------------------------------------------------
// Shared model/train flags. Each is optional so that a --config file can
// supply it; flags given on the command line win.

struct ModelFlags {
  std::optional<std::size_t> scales;
  std::optional<bool> skips;
  std::optional<bool> deep_supervision;
  std::optional<std::size_t> width_divisor;
  std::optional<std::size_t> bottleneck_ratio;

  void attach(CLI::App& app) {
    app.add_option("--scales", scales, "Downsampling scales (1-5)");
    app.add_flag("--skips,!--no-skips", skips, "Encoder-decoder skip connections");
    app.add_flag("--deep-supervision,!--no-deep-supervision", deep_supervision, "Loss on coarse heatmaps too");
    app.add_option("--width-divisor", width_divisor, "Divide every hidden width");
    app.add_option("--bottleneck-ratio", bottleneck_ratio, "ResBlock compression ratio");
  }

  ModelConfig apply(ModelConfig c) const {
    if (scales) {
      ModelConfig d = ModelConfig::with_scales(*scales);
      d.input_size = c.input_size;
      d.use_encoder_decoder_skips = c.use_encoder_decoder_skips;
      d.deep_supervision = c.deep_supervision;
      d.bottleneck_ratio = c.bottleneck_ratio;
      d.width_divisor = c.width_divisor;
      c = d;
    }
    if (skips) c.use_encoder_decoder_skips = *skips;
    if (deep_supervision) c.deep_supervision = *deep_supervision;
    if (width_divisor) c.width_divisor = *width_divisor;
    if (bottleneck_ratio) c.bottleneck_ratio = *bottleneck_ratio;
    return c;
  }
};

struct TrainFlags {
  std::optional<std::string> loss;
  std::optional<double> sigma;
  std::optional<std::size_t> epochs;
  std::optional<std::size_t> batch_size;
  std::optional<double> lr;
  std::optional<std::size_t> lr_drop_epoch;
  std::optional<double> dropped_lr;
  std::optional<std::size_t> tcl_switch_epoch;
  std::optional<bool> augment;
  std::optional<std::uint64_t> seed;

  void attach(CLI::App& app) {
    app.add_option("--loss", loss, "mse or tcl+")->check(CLI::IsMember({"mse", "tcl+"}));
    app.add_option("--sigma", sigma, "Target std-dev in heatmap pixels");
    app.add_option("--epochs", epochs, "Training epochs");
    app.add_option("--batch-size", batch_size, "Mini-batch size");
    app.add_option("--lr", lr, "Base learning rate");
    app.add_option("--lr-drop-epoch", lr_drop_epoch, "Last epoch at the base learning rate");
    app.add_option("--dropped-lr", dropped_lr, "Learning rate after the drop");
    app.add_option("--tcl-switch-epoch", tcl_switch_epoch, "Last MSE epoch when --loss tcl+");
    app.add_flag("--augment,!--no-augment", augment, "Random crop and flips");
    app.add_option("--seed", seed, "Seed for init, shuffling and augmentation");
  }

  TrainConfig apply(TrainConfig c) const {
    if (loss) c.loss = parse_loss(*loss);
    if (sigma) c.sigma = *sigma;
    if (epochs) c.epochs = *epochs;
    if (batch_size) c.batch_size = *batch_size;
    if (lr) c.base_lr = *lr;
    if (lr_drop_epoch) c.lr_drop_epoch = *lr_drop_epoch;
    if (dropped_lr) c.dropped_lr = *dropped_lr;
    if (tcl_switch_epoch) c.tcl_switch_epoch = *tcl_switch_epoch;
    if (augment) c.augment = *augment;
    if (seed) c.seed = *seed;
    return c;
  }
};

std::string config_text(const std::optional<std::string>& config_path) {
  return config_path ? slurp(*config_path) : std::string();
}

// ---------------------------------------------------------------------------
// generate

struct GenerateArgs {
  std::optional<std::string> config;
  std::string out;
  std::optional<std::size_t> n;
  std::optional<double> test_fraction;
  std::optional<double> eyed_fraction;
  std::optional<double> label_noise_px;
  std::optional<double> non_eyed_noise_ratio;
  std::optional<bool> noise_non_eyed_only;
  std::optional<double> noise_amplitude;
  std::optional<std::string> format;
  std::optional<std::uint64_t> seed;
};

int cmd_generate(const GenerateArgs& a) {
  SynthParams p = SynthParams::from_text(config_text(a.config));
  if (a.n) p.n_samples = *a.n;
  if (a.test_fraction) p.test_fraction = *a.test_fraction;
  if (a.eyed_fraction) p.eyed_fraction = *a.eyed_fraction;
  if (a.label_noise_px) p.label_noise_px = *a.label_noise_px;
  if (a.non_eyed_noise_ratio) p.non_eyed_noise_ratio = *a.non_eyed_noise_ratio;
  if (a.noise_non_eyed_only) p.noise_non_eyed_only = *a.noise_non_eyed_only;
  if (a.noise_amplitude) p.noise_amplitude = *a.noise_amplitude;
  if (a.format) p.image_format = *a.format;
  if (a.seed) p.seed = *a.seed;
  p.validate();
  const DatasetIndex index = generate(p, a.out);
  spit(fs::path(a.out) / kGeneratorFile, p.to_text());
  std::cout << (fs::path(a.out) / kIndexFile).string() << "\n";
  std::cerr << "generated " << index.size() << " samples (" << index.count_eyed() << " eyed, "
            << index.filter(Split::kTest).size() << " test)\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// train

struct TrainArgs {
  std::optional<std::string> config;
  std::string data;
  std::string out;
  std::optional<std::string> resume;
  std::optional<std::size_t> max_steps;
  bool validate = false;
  ModelFlags model;
  TrainFlags train;
};

struct RunOutcome {
  fs::path dir;
  TrainResult result;
};

RunOutcome run_training(const TrainArgs& a, const std::string& argv_line) {
  const std::string cfg = config_text(a.config);
  const ModelConfig mc = a.model.apply(ModelConfig::from_text(cfg));
  const TrainConfig tc = a.train.apply(TrainConfig::from_text(cfg));
  mc.validate();
  tc.validate();

  const std::vector<Sample> train_set = load_split(a.data, "train");
  std::vector<Sample> val_set;
  if (a.validate) val_set = load_split(a.data, "test");

  const fs::path out(a.out);
  fs::create_directories(out);
  const std::string snapshot = mc.to_text() + tc.to_text();
  spit(out / kConfigFile, snapshot);

  json manifest;
  manifest["run_id"] = out.filename().string() + "-seed" + std::to_string(tc.seed);
  manifest["version"] = TCLNET_VERSION;
  manifest["command"] = argv_line;
  manifest["data"] = fs::absolute(a.data).string();
  manifest["model"] = kv_to_json(mc.to_text());
  manifest["train"] = kv_to_json(tc.to_text());
  const fs::path gen = fs::path(a.data) / kGeneratorFile;
  manifest["synth"] = fs::exists(gen) ? kv_to_json(slurp(gen)) : json(nullptr);
  manifest["resume_from"] = a.resume ? json(*a.resume) : json(nullptr);
  manifest["started"] = utc_now();
  manifest["finished"] = nullptr;
  manifest["outputs"] = {{"config", kConfigFile},         {"epoch_log", "epoch_log.csv"},
                         {"last_checkpoint", "last.ckpt"}, {"best_checkpoint", "best.ckpt"},
                         {"final_weights", "final.weights"}};
  spit(out / kManifestFile, manifest.dump(2) + "\n");

  TrainOptions opts;
  opts.out_dir = out;
  if (a.validate) opts.validation = &val_set;
  if (a.resume) opts.resume_from = fs::path(*a.resume);
  opts.max_steps = a.max_steps;
  opts.on_epoch = [](const EpochLog& e) { std::cout << e.csv_row() << std::endl; };
  std::cout << EpochLog::csv_header() << "\n";
  TrainResult result = train(train_set, mc, tc, opts);

  manifest["finished"] = utc_now();
  manifest["steps"] = result.steps;
  spit(out / kManifestFile, manifest.dump(2) + "\n");
  return {out, std::move(result)};
}

int cmd_train(const TrainArgs& a, const std::string& argv_line) {
  run_training(a, argv_line);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// eval

struct EvalArgs {
  std::string data;
  std::optional<std::string> weights;
  std::string split = "test";
  std::optional<std::string> out;
  std::size_t batch_size = 4;
  std::optional<std::size_t> repeats;
  std::vector<std::uint64_t> seeds;
  bool oracle_targets = false;
  double sigma = 15.0;
};

// Expands "{seed}" in a weights path.
std::string with_seed(std::string path, std::uint64_t seed) {
  const std::string key = "{seed}";
  for (auto pos = path.find(key); pos != std::string::npos; pos = path.find(key)) {
    path.replace(pos, key.size(), std::to_string(seed));
  }
  return path;
}

MleReport eval_once(const EvalArgs& a, const std::vector<Sample>& samples, const std::string& weights) {
  if (a.oracle_targets) {
    // Test hook: the encoded targets stand in for predictions.
    HeatmapParams p;
    p.sigma = a.sigma;
    const Predictor oracle = [p](const Tensor<float>&, std::span<const Sample* const> batch) {
      std::vector<CenterLabel> labels;
      for (const Sample* s : batch) labels.push_back(s->label);
      return encode_batch<float>(labels, p);
    };
    return evaluate(oracle, samples, p, a.batch_size);
  }
  TclNet<float> net = load_model(weights);
  return evaluate(net, samples, decode_params(net.config()), a.batch_size);
}

int cmd_eval(const EvalArgs& a) {
  if (!a.oracle_targets && !a.weights) throw CLI::RequiredError("--weights (or --oracle-targets)");
  const std::vector<Sample> samples = load_split(a.data, a.split);
  std::ostringstream csv;
  csv << MleReport::csv_header() << "\n";

  if (!a.repeats) {
    const std::string w = a.weights.value_or("");
    const MleReport r = eval_once(a, samples, w);
    csv << r.csv_row(a.oracle_targets ? "oracle" : fs::path(w).parent_path().filename().string()) << "\n";
  } else {
    if (a.seeds.size() != *a.repeats) {
      throw ConfigError("--repeats " + std::to_string(*a.repeats) + " needs as many --seeds, got " +
                        std::to_string(a.seeds.size()));
    }
    std::vector<MleReport> reports;
    const RepeatSummary s = repeat_runs(a.seeds, [&](std::uint64_t seed) {
      const MleReport r = eval_once(a, samples, with_seed(a.weights.value_or(""), seed));
      csv << r.csv_row("seed" + std::to_string(seed)) << "\n";
      return r;
    });
    auto cell = [](const std::optional<MeanStd>& m) { return m ? m->str() : std::string(); };
    csv << "mean±std," << samples.size() << "," << s.all.str() << "," << cell(s.eyed) << ","
        << cell(s.non_eyed) << "\n";
  }
  std::cout << csv.str();
  if (a.out) spit(*a.out, csv.str());
  return kExitOk;
}

// ---------------------------------------------------------------------------
// infer

struct InferArgs {
  std::string weights;
  std::string input;
  std::optional<std::string> overlay;
  std::size_t batch_size = 4;
};

struct InferItem {
  std::string id;
  Image image;
  std::optional<CenterLabel> label;
};

void disk(RgbImage& img, double cx, double cy, double r, std::uint8_t R, std::uint8_t G, std::uint8_t B) {
  const long x0 = std::lround(cx - r), x1 = std::lround(cx + r);
  const long y0 = std::lround(cy - r), y1 = std::lround(cy + r);
  for (long y = std::max(0L, y0); y <= y1 && y < static_cast<long>(img.height); ++y) {
    for (long x = std::max(0L, x0); x <= x1 && x < static_cast<long>(img.width / 2); ++x) {
      if ((x - cx) * (x - cx) + (y - cy) * (y - cy) <= r * r) img.set(x, y, R, G, B);
    }
  }
}

// Image on the left with predicted (red) and labelled (blue) centres; the
// predicted heatmap on the right, nearest-upsampled, min-max scaled, "hot".
void write_overlay(const fs::path& path, const Image& image, std::span<const float> heat, std::size_t map,
                   const CenterLabel& pred, const std::optional<CenterLabel>& label) {
  const std::size_t s = image.width;
  RgbImage out(2 * s, s);
  for (std::size_t y = 0; y < s; ++y) {
    for (std::size_t x = 0; x < s; ++x) {
      const auto g = static_cast<std::uint8_t>(std::lround(std::clamp(image.at(x, y), 0.0f, 1.0f) * 255.0f));
      out.set(x, y, g, g, g);
    }
  }
  const auto [lo, hi] = std::minmax_element(heat.begin(), heat.end());
  const float span = std::max(*hi - *lo, 1e-12f);
  for (std::size_t y = 0; y < s; ++y) {
    for (std::size_t x = 0; x < s; ++x) {
      const float v = (heat[(y * map / s) * map + x * map / s] - *lo) / span;
      auto ch = [](float t) { return static_cast<std::uint8_t>(std::lround(std::clamp(t, 0.0f, 1.0f) * 255.0f)); };
      out.set(s + x, y, ch(3 * v), ch(3 * v - 1), ch(3 * v - 2));
    }
  }
  if (label) disk(out, label->u, label->v, 5.0, 0, 0, 255);
  disk(out, pred.u, pred.v, 4.0, 255, 0, 0);
  write_png_rgb(out, path);
}

int cmd_infer(const InferArgs& a) {
  TclNet<float> net = load_model(a.weights);
  const HeatmapParams params = decode_params(net.config());
  const std::size_t size = net.config().input_size;

  std::vector<InferItem> items;
  const fs::path in(a.input);
  if (fs::is_directory(in)) {
    const DatasetIndex index = load_index(in);
    for (std::size_t i = 0; i < index.size(); ++i) {
      Sample s = read_sample(index, i);
      items.push_back({s.id, std::move(s.image), s.label});
    }
  } else {
    if (!fs::exists(in)) throw IoError("no such image: " + in.string());
    items.push_back({in.stem().string(), read_image(in), std::nullopt});
  }
  if (a.overlay) fs::create_directories(*a.overlay);

  std::cout << "id,x,y\n";
  NoGradGuard guard;
  for (std::size_t start = 0; start < items.size(); start += a.batch_size) {
    const std::size_t end = std::min(items.size(), start + a.batch_size);
    std::vector<Image> resized;
    std::vector<const Image*> ptrs;
    for (std::size_t i = start; i < end; ++i) {
      const Image& img = items[i].image;
      resized.push_back(img.width == size && img.height == size ? img : resize_bilinear(img, size, size));
    }
    for (const Image& img : resized) ptrs.push_back(&img);
    const Tensor<float> maps = net.forward(images_to_tensor(ptrs), Mode::kEval);
    const std::size_t m = params.map_size;
    for (std::size_t i = start; i < end; ++i) {
      const std::span<const float> heat = maps.data().subspan((i - start) * m * m, m * m);
      CenterLabel c = decode_heatmap(heat, m, m, params.alpha);
      const Image& img = items[i].image;
      // Back to the original frame when the input was resampled.
      const CenterLabel original{c.u * static_cast<double>(img.width) / static_cast<double>(size),
                                 c.v * static_cast<double>(img.height) / static_cast<double>(size)};
      std::cout << items[i].id << "," << format_double(original.u) << "," << format_double(original.v) << "\n";
      if (a.overlay) {
        std::optional<CenterLabel> label;
        if (items[i].label) {
          label = CenterLabel{items[i].label->u * static_cast<double>(size) / static_cast<double>(img.width),
                              items[i].label->v * static_cast<double>(size) / static_cast<double>(img.height)};
        }
        write_overlay(fs::path(*a.overlay) / (items[i].id + ".png"), resized[i - start], heat, m, c, label);
      }
    }
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// sweep

struct SweepArgs {
  TrainArgs base;
  std::vector<double> sigmas{5.0, 15.0, 30.0};
  std::string split = "test";
};

int cmd_sweep(const SweepArgs& a, const std::string& argv_line) {
  const std::vector<Sample> eval_set = load_split(a.base.data, a.split);
  std::ostringstream csv;
  csv << "sigma,n_all,MLE-A,MLE-E,MLE-N\n";
  for (double sigma : a.sigmas) {
    TrainArgs run = a.base;
    run.train.sigma = sigma;
    run.out = (fs::path(a.base.out) / ("sigma-" + format_double(sigma))).string();
    RunOutcome o = run_training(run, argv_line);
    const MleReport r = evaluate(o.result.net, eval_set, decode_params(o.result.net.config()));
    csv << r.csv_row(format_double(sigma)) << "\n";
    std::cerr << "sigma " << format_double(sigma) << ": MLE-A " << format_double(r.mle_all) << "\n";
  }
  fs::create_directories(a.base.out);
  spit(fs::path(a.base.out) / "sigma_sweep.csv", csv.str());
  std::cout << csv.str();
  return kExitOk;
}

std::string join_argv(int argc, char** argv) {
  std::string s;
  for (int i = 0; i < argc; ++i) s += (i ? " " : "") + std::string(argv[i]);
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  tclnet::tune_allocator();
  CLI::App app{"TCLNet typhoon-centre heatmap regression"};
  app.set_version_flag("--version", TCLNET_VERSION);
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "Write a synthetic cyclone dataset");
  g->add_option("--config", gen.config, "key=value file (synth.*)")->check(CLI::ExistingFile);
  g->add_option("--out", gen.out, "Output directory")->required();
  g->add_option("--n", gen.n, "Number of samples");
  g->add_option("--test-fraction", gen.test_fraction, "Fraction held out as test");
  g->add_option("--eyed-fraction", gen.eyed_fraction, "Fraction of eyed cyclones");
  g->add_option("--label-noise-px", gen.label_noise_px, "Label jitter std-dev on training samples");
  g->add_option("--non-eyed-noise-ratio", gen.non_eyed_noise_ratio, "Non-eyed jitter multiplier");
  g->add_flag("--noise-non-eyed-only,!--noise-all", gen.noise_non_eyed_only, "Jitter only non-eyed labels");
  g->add_option("--noise-amplitude", gen.noise_amplitude, "Cloud texture amplitude");
  g->add_option("--format", gen.format, "png or pgm")->check(CLI::IsMember({"png", "pgm"}));
  g->add_option("--seed", gen.seed, "Generator seed");

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "Train a model");
  t->add_option("--config", tr.config, "key=value file (model.*, train.*)")->check(CLI::ExistingFile);
  t->add_option("--data", tr.data, "Dataset directory")->required();
  t->add_option("--out", tr.out, "Run directory")->required();
  t->add_option("--resume", tr.resume, "Checkpoint to continue from");
  t->add_option("--max-steps", tr.max_steps, "Stop after this many optimizer steps");
  t->add_flag("--validate", tr.validate, "Evaluate the test split after every epoch");
  tr.model.attach(*t);
  tr.train.attach(*t);

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "Mean location error of a model on a split");
  e->add_option("--data", ev.data, "Dataset directory")->required();
  e->add_option("--weights", ev.weights, "Weights or checkpoint; '{seed}' expands with --seeds");
  e->add_option("--split", ev.split, "train, test or all")->check(CLI::IsMember({"train", "test", "all"}));
  e->add_option("--out", ev.out, "Also write the report CSV here");
  e->add_option("--batch-size", ev.batch_size, "Inference batch size")->check(CLI::PositiveNumber);
  e->add_option("--repeats", ev.repeats, "Number of repeated runs to aggregate");
  e->add_option("--seeds", ev.seeds, "Seeds of the repeated runs")->delimiter(',');
  e->add_flag("--oracle-targets", ev.oracle_targets, "Use encoded labels as predictions (test hook)");
  e->add_option("--sigma", ev.sigma, "Target sigma for --oracle-targets");

  InferArgs in;
  auto* f = app.add_subcommand("infer", "Predict centres for an image or a dataset directory");
  f->add_option("--weights", in.weights, "Weights or checkpoint")->required();
  f->add_option("--input", in.input, "Image file or dataset directory")->required();
  f->add_option("--overlay", in.overlay, "Directory for overlay PNGs");
  f->add_option("--batch-size", in.batch_size, "Inference batch size")->check(CLI::PositiveNumber);

  SweepArgs sw;
  auto* s = app.add_subcommand("sweep", "Train once per sigma and compare test MLE");
  s->add_option("--config", sw.base.config, "key=value file (model.*, train.*)")->check(CLI::ExistingFile);
  s->add_option("--data", sw.base.data, "Dataset directory")->required();
  s->add_option("--out", sw.base.out, "Root directory; one run per sigma")->required();
  s->add_option("--sigmas", sw.sigmas, "Sigma values")->delimiter(',');
  s->add_option("--split", sw.split, "Evaluation split")->check(CLI::IsMember({"train", "test", "all"}));
  sw.base.model.attach(*s);
  sw.base.train.attach(*s);
  // The sweep sets sigma itself.
  s->remove_option(s->get_option("--sigma"));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  const std::string line = join_argv(argc, argv);
  try {
    if (*g) return cmd_generate(gen);
    if (*t) return cmd_train(tr, line);
    if (*e) return cmd_eval(ev);
    if (*f) return cmd_infer(in);
    if (*s) return cmd_sweep(sw, line);
  } catch (const CLI::Error& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitUsage;
  } catch (const ConfigError& err) {
    std::cerr << "config error: " << err.what() << "\n";
    return kExitUsage;
  } catch (const DomainError& err) {
    std::cerr << "config error: " << err.what() << "\n";
    return kExitUsage;
  } catch (const DivergenceError& err) {
    std::cerr << "diverged: " << err.what() << "\n";
    return kExitDivergence;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}
