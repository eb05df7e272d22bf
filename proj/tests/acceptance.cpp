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

// Acceptance run: one PASS/FAIL line per criterion, tolerances and time
// budgets pinned below. Criterion 10 takes over an hour on one core and only
// runs with --slow; without it the line reads SKIP.

#include <sys/wait.h>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <limits>
#include <random>
#include <regex>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "support/oracles.hpp"
#include "support/reference_layers.hpp"
#include "support/temp_dir.hpp"
#include "tclnet/data.hpp"
#include "tclnet/errors.hpp"
#include "tclnet/keyvalue.hpp"
#include "tclnet/training.hpp"

namespace fs = std::filesystem;
using namespace tclnet;

namespace {

// Tolerances.
constexpr double kParamLow = 0.5, kParamHigh = 2.0;
constexpr double kReferenceParams = reference_layers::kReferenceParamsMillions * 1e6;
constexpr double kGradTol = 1e-5;
// Central-difference steps, and the zero-gradient floors: taped value at
// roundoff, difference quotient at loss roundoff / step.
constexpr std::array<double, 2> kFdSteps = {1e-5, 1e-6};
constexpr double kZeroGrad = 1e-9;
constexpr double kFdNoise = 1e-6;
constexpr double kConvTol = 1e-10;
constexpr std::size_t kConvCases = 50;
constexpr std::size_t kCodecLabels = 1000;
constexpr double kCodecBound = 2.83;
constexpr double kCrossover = 3.92e-4, kCrossoverTol = 1e-5;
constexpr double kAdamTol = 1e-12;
constexpr double kOverfitMle = 4.0;
constexpr std::size_t kOverfitSteps = 300;
constexpr double kDeskMle = 15.0;
constexpr double kTclMargin = 0.5;

// Time budgets in seconds.
constexpr double kBudget[13] = {0, 1, 1, 120, 60, 10, 1, 1, 300, 1800, 3 * 3600, 3600, 1};

struct Verdict {
  bool pass = false;
  std::string detail;
};

struct Context {
  fs::path work;
  std::string cli;
  fs::path report;
};

std::string fmt(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

std::vector<double> normals(std::size_t n, std::mt19937_64& rng, double sd = 1.0) {
  std::normal_distribution<double> d(0.0, sd);
  std::vector<double> v(n);
  for (double& x : v) x = d(rng);
  return v;
}

Tensor<double> random_tensor(Shape shape, std::mt19937_64& rng) {
  auto v = normals(numel(shape), rng);
  return Tensor<double>::from_data(std::move(shape), std::move(v));
}

// Scalar whose gradient touches every output element.
Tensor<double> project(const Tensor<double>& y, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return sum(mul(y, random_tensor(y.shape(), rng)));
}

// ---------------------------------------------------------------------------
// 1. Architecture fidelity

Verdict architecture(const Context&) {
  auto net = TclNet<float>::build(ModelConfig{}, 1);
  const auto rows = net.layer_rows();
  std::size_t mismatches = rows.size() == reference_layers::kRows.size() ? 0 : 1;
  for (std::size_t i = 0; i < std::min(rows.size(), reference_layers::kRows.size()); ++i) {
    mismatches += rows[i].str() != reference_layers::kRows[i];
  }
  NoGradGuard guard;
  const auto y = net.forward(Tensor<float>::zeros({4, 1, 512, 512}), Mode::kEval);
  const bool shape_ok = y.shape() == Shape{4, 1, 128, 128};
  return {mismatches == 0 && shape_ok, std::to_string(rows.size()) + "/" + std::to_string(reference_layers::kRows.size()) +
                                           " rows match, output " + to_string(y.shape())};
}

// ---------------------------------------------------------------------------
// 2. Parameter count

Verdict parameter_count(const Context&) {
  const auto net = TclNet<float>::build(ModelConfig{}, 1);
  const double n = static_cast<double>(net.parameter_count());
  return {n >= kParamLow * kReferenceParams && n <= kParamHigh * kReferenceParams,
          std::to_string(net.parameter_count()) + " parameters (" + fmt(n / kReferenceParams, 3) +
              "x reference) at bottleneck ratio " + std::to_string(ModelConfig{}.bottleneck_ratio)};
}

// ---------------------------------------------------------------------------
// 3. Autodiff

// Worst relative error of taped vs central-difference gradients for a leaf
// perturbed in place, sampling at most `max_elements` entries. Each entry
// takes the better of two step sizes: the larger one can straddle a ReLU
// kink somewhere in the net, the smaller one loses digits to roundoff; a
// wrong taped gradient disagrees with both. Entries whose true gradient is
// zero (a bias feeding train-mode batch norm, a dead unit) must be zero on
// the tape and within the difference quotient's noise floor.
double leaf_error(const std::function<Tensor<double>()>& loss, Tensor<double> leaf, std::size_t max_elements) {
  leaf.zero_grad();
  backward(loss());
  const std::vector<double> analytic(leaf.grad().begin(), leaf.grad().end());
  NoGradGuard guard;
  auto values = leaf.mutable_data();
  const std::size_t stride = std::max<std::size_t>(1, (values.size() + max_elements - 1) / max_elements);
  double worst = 0.0;
  for (std::size_t i = 0; i < values.size(); i += stride) {
    const double v0 = values[i], a = analytic[i];
    double best = std::numeric_limits<double>::infinity();
    for (const double eps : kFdSteps) {
      values[i] = v0 + eps;
      const double fp = loss().item();
      values[i] = v0 - eps;
      const double fm = loss().item();
      values[i] = v0;
      const double n = (fp - fm) / (2.0 * eps);
      const double e = std::abs(a) < kZeroGrad && std::abs(n) < kFdNoise
                           ? 0.0
                           : std::abs(a - n) / std::max({std::abs(a), std::abs(n), 1e-12});
      best = std::min(best, e);
    }
    worst = std::max(worst, best);
  }
  return worst;
}

// Input and every parameter of a layer-like forward function.
double module_error(const std::function<Tensor<double>(const Tensor<double>&)>& forward,
                    const std::vector<NamedTensor<double>>& params, const Tensor<double>& x, std::uint64_t seed,
                    std::size_t max_elements) {
  auto input = Tensor<double>::from_data(x.shape(), std::vector<double>(x.data().begin(), x.data().end()), true);
  double worst = leaf_error([&] { return project(forward(input), seed); }, input, max_elements);
  for (const auto& p : params) {
    worst = std::max(worst, leaf_error([&] { return project(forward(input), seed); }, p.tensor, max_elements));
  }
  return worst;
}

Verdict autodiff(const Context&) {
  std::mt19937_64 rng(31);
  std::vector<std::pair<std::string, double>> errors;
  auto check_layer = [&](const std::string& name, Layer<double>& layer, Shape in) {
    const auto x = random_tensor(std::move(in), rng);
    std::vector<NamedTensor<double>> ps;
    layer.named_parameters("", ps);
    errors.emplace_back(name, module_error([&](const Tensor<double>& t) { return layer.forward(t, Mode::kTrain); },
                                           ps, x, errors.size() + 1, 64));
  };
  Conv2d<double> c7(2, 3, 7, 2, rng), c3(3, 4, 3, 1, rng), c1(4, 2, 1, 1, rng);
  BatchNorm2d<double> bn(3);
  ConvBlock<double> cb(2, 3, 3, rng);
  ResBlock<double> rb_same(4, 4, 2, rng), rb_proj(3, 6, 2, rng);
  MaxPool2x2<double> pool(2);
  Upsample2x<double> up(2);
  check_layer("Conv 7x7/2", c7, {2, 2, 9, 9});
  check_layer("Conv 3x3", c3, {2, 3, 6, 6});
  check_layer("Conv 1x1", c1, {2, 4, 5, 5});
  check_layer("BatchNorm", bn, {3, 3, 3, 3});
  check_layer("ConvBlock", cb, {2, 2, 5, 5});
  check_layer("ResBlock", rb_same, {2, 4, 4, 4});
  check_layer("ResBlock/proj", rb_proj, {2, 3, 4, 4});
  check_layer("Maxpooling", pool, {2, 2, 4, 4});
  check_layer("Upsample", up, {2, 2, 3, 3});
  {
    const auto x = random_tensor({2, 2, 4, 4}, rng);
    errors.emplace_back("ReLU", grad_check([](const Tensor<double>& t) { return project(relu(t), 99); }, x));
  }
  {
    ModelConfig mc;
    mc.input_size = 32;
    mc.width_divisor = 8;
    auto net = TclNet<double>::build(mc, 5);
    // The near-zero head init shrinks every upstream gradient below the
    // difference quotient's roundoff; check at a He-scaled head instead.
    for (auto& p : net.named_parameters()) {
      if (p.name != "head.1.weight") continue;
      const double scale = std::sqrt(2.0 / static_cast<double>(p.tensor.shape()[1])) / 1e-3;
      for (double& v : p.tensor.mutable_data()) v *= scale;
    }
    std::vector<double> xv(2 * 32 * 32);
    std::mt19937_64 xr(6);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (double& v : xv) v = u(xr);
    const auto x = Tensor<double>::from_data({2, 1, 32, 32}, xv);
    errors.emplace_back("model 32x32 /8",
                        module_error([&](const Tensor<double>& t) { return net.forward(t, Mode::kTrain); },
                                     net.named_parameters(), x, 123, 32));
  }
  double worst = 0.0;
  std::string detail;
  for (const auto& [name, e] : errors) {
    worst = std::max(worst, e);
    detail += (detail.empty() ? "" : ", ") + name + " " + fmt(e, 2);
  }
  return {worst < kGradTol, "worst " + fmt(worst, 3) + " (" + detail + ")"};
}

// ---------------------------------------------------------------------------
// 4. Convolution oracle

Verdict conv_oracle(const Context&) {
  // Shapes of the default network's convolutions, scaled down in width so
  // the direct loop stays fast; kernel and stride are kept.
  auto net = TclNet<float>::build(ModelConfig{}, 1);
  struct Shape4 { std::size_t cin, cout, k, s; };
  std::vector<Shape4> shapes;
  for (const auto& p : net.named_parameters()) {
    if (!p.name.ends_with("weight") || p.tensor.dim() != 4) continue;
    const auto& s = p.tensor.shape();
    shapes.push_back({s[1], s[0], s[2], s[2] == 7 ? 2u : 1u});
  }
  std::mt19937_64 rng(44);
  std::uniform_int_distribution<std::size_t> pick(0, shapes.size() - 1), hw(5, 17), batch(1, 2), div(1, 4);
  double worst = 0.0;
  std::set<std::string> kinds;
  for (std::size_t c = 0; c < kConvCases; ++c) {
    const Shape4 s = shapes[pick(rng)];
    const std::size_t d = 1u << div(rng);  // 2..16
    const std::size_t cin = std::max<std::size_t>(1, s.cin / d), cout = std::max<std::size_t>(1, s.cout / d);
    const std::size_t b = batch(rng), h = hw(rng), w = hw(rng), p = same_padding(s.k);
    auto xv = normals(b * cin * h * w, rng), wv = normals(cout * cin * s.k * s.k, rng), bv = normals(cout, rng);
    const auto y = conv2d(Tensor<double>::from_data({b, cin, h, w}, xv),
                          Tensor<double>::from_data({cout, cin, s.k, s.k}, wv),
                          Tensor<double>::from_data({cout}, bv), s.s, p);
    std::size_t oh = 0, ow = 0;
    const auto ref = oracle::conv2d(xv, wv, bv, b, cin, h, w, cout, s.k, s.s, p, &oh, &ow);
    if (y.shape() != Shape{b, cout, oh, ow}) return {false, "shape mismatch in case " + std::to_string(c)};
    for (std::size_t i = 0; i < ref.size(); ++i) worst = std::max(worst, std::abs(y.data()[i] - ref[i]));
    kinds.insert(std::to_string(s.k) + "x" + std::to_string(s.k) + "/" + std::to_string(s.s));
  }
  std::string k;
  for (const auto& s : kinds) k += (k.empty() ? "" : " ") + s;
  return {worst <= kConvTol, std::to_string(kConvCases) + " cases (" + k + "), max |diff| " + fmt(worst, 3)};
}

// ---------------------------------------------------------------------------
// 5. Heatmap codec

Verdict heatmap_codec(const Context&) {
  HeatmapParams p;  // alpha 0.25, sigma 15, map 128
  // The last grid point decodes to 508, so the sub-pixel bound covers labels
  // up to 510 in each axis.
  std::mt19937_64 rng(55);
  std::uniform_real_distribution<double> u(0.0, 510.0);
  const double peak_floor = std::exp(-1.0 / (4.0 * p.sigma * p.sigma));
  double worst_err = 0.0, lowest_peak = 1.0, lowest_value = 1.0, highest_value = 0.0;
  for (std::size_t i = 0; i < kCodecLabels; ++i) {
    const CenterLabel label{u(rng), u(rng)};
    const auto h = encode_heatmap<float>(label, p);
    const auto back = decode_heatmap(h, p);
    worst_err = std::max(worst_err, std::hypot(back.u - label.u, back.v - label.v));
    const auto [lo, hi] = std::minmax_element(h.data().begin(), h.data().end());
    lowest_peak = std::min(lowest_peak, static_cast<double>(*hi));
    lowest_value = std::min(lowest_value, static_cast<double>(*lo));
    highest_value = std::max(highest_value, static_cast<double>(*hi));
  }
  // Float rounding may put a peak one ulp under the real-valued floor.
  const bool pass = worst_err <= kCodecBound && lowest_peak >= peak_floor * (1.0 - 1e-6) && highest_value <= 1.0 &&
                    lowest_value > 0.0;
  return {pass, "max error " + fmt(worst_err) + " px, min peak " + fmt(lowest_peak, 8) + " (floor " +
                    fmt(peak_floor, 8) + "), values in [" + fmt(lowest_value, 3) + ", " + fmt(highest_value, 3) +
                    "]"};
}

// ---------------------------------------------------------------------------
// 6. TCL+ law

Verdict tcl_law(const Context&) {
  bool ok = true;
  auto uniform = [](double m) {
    return std::pair{Tensor<double>::full({1, 1, 4, 4}, std::sqrt(m)), Tensor<double>::zeros({1, 1, 4, 4})};
  };
  for (double m : {1e-5, 1e-4, 3e-4}) {
    auto [p, t] = uniform(m);
    const auto l = tcl_plus_loss(p, t);
    ok &= std::abs(l.per_sample.data()[0] - mse_loss(p, t).per_sample.data()[0]) <= 1e-15 && l.mse_branch == 1;
  }
  for (double m : {6e-4, 1e-3, 1e-2}) {
    auto [p, t] = uniform(m);
    const auto l = tcl_plus_loss(p, t);
    ok &= std::abs(l.per_sample.data()[0] - std::exp(-2e4 * m)) <= 1e-12 * std::exp(-2e4 * m) + 1e-300 &&
          l.exp_branch == 1;
  }
  const double m = tcl_crossover(), bisect = oracle::tcl_fixed_point();
  ok &= std::abs(m - kCrossover) <= kCrossoverTol && std::abs(bisect - kCrossover) <= kCrossoverTol &&
        std::abs(m - bisect) <= 1e-12;
  return {ok, "crossover " + fmt(m, 6) + " (bisection " + fmt(bisect, 6) + "), branch values exact"};
}

// ---------------------------------------------------------------------------
// 7. Adam and the learning-rate log

Verdict adam_schedule(const Context&) {
  auto theta = Tensor<double>::scalar(1.0, true);
  AdamOptions opts;
  Adam<double> adam({{"theta", theta}}, opts);
  backward(scale(square(theta), 0.5));
  adam.step();
  const double err = std::abs(theta.item() - oracle::adam_first_step(1.0, 1.0, opts.lr, opts.eps));

  // The default schedule as the trainer logs it, epoch by epoch.
  const TrainConfig defaults;
  bool schedule_ok = true;
  for (std::size_t e = 1; e <= defaults.epochs; ++e) {
    schedule_ok &= lr_for_epoch(defaults, e) == (e <= 30 ? 1e-3 : 1e-4);
  }
  // A real log: with the drop pulled forward to epoch 1 the second epoch
  // must record the reduced rate.
  SynthParams sp;
  sp.n_samples = 2;
  std::vector<Sample> data;
  for (std::size_t i = 0; i < 2; ++i) {
    Sample s;
    s.id = std::to_string(i);
    s.label = {200.0 + 50.0 * i, 260.0};
    s.image = render_cyclone(s.label, true, sp, i);
    data.push_back(std::move(s));
  }
  ModelConfig mc;
  mc.width_divisor = 8;
  TrainConfig tc;
  tc.epochs = 2;
  tc.batch_size = 2;
  tc.lr_drop_epoch = 1;
  tc.augment = false;
  const auto r = train(data, mc, tc);
  const bool log_ok = r.log.size() == 2 && r.log[0].lr == 1e-3 && r.log[1].lr == 1e-4;
  return {err <= kAdamTol && schedule_ok && log_ok,
          "first step error " + fmt(err, 3) + "; lr 0.001 for epochs 1-30, 0.0001 for 31-65; logged " +
              fmt(r.log[0].lr) + " -> " + fmt(r.log[1].lr)};
}

// ---------------------------------------------------------------------------
// 8. Overfit smoke test

Verdict overfit(const Context& ctx) {
  SynthParams sp;
  sp.n_samples = 8;
  sp.test_fraction = 0.0;
  sp.seed = 3;
  const auto data = load_samples(generate(sp, ctx.work / "overfit"));
  ModelConfig mc;
  mc.width_divisor = 8;
  TrainConfig tc;
  tc.augment = false;
  tc.batch_size = 8;  // one step per epoch
  tc.epochs = kOverfitSteps;
  tc.base_lr = 2e-3;
  tc.lr_drop_epoch = 200;
  tc.dropped_lr = 2e-4;
  tc.seed = 1;
  TrainOptions opts;
  opts.max_steps = kOverfitSteps;
  auto r = train(data, mc, tc, opts);
  const MleReport rep = evaluate(r.net, data, tc.heatmap());
  return {r.steps <= kOverfitSteps && rep.mle_all < kOverfitMle,
          "train MLE " + fmt(rep.mle_all) + " px after " + std::to_string(r.steps) + " steps (width /8, 8 samples)"};
}

// ---------------------------------------------------------------------------
// 9. Desk-scale learning

Verdict desk_scale(const Context& ctx) {
  SynthParams sp;
  sp.n_samples = 250;
  sp.test_fraction = 0.2;
  sp.seed = 9;
  const DatasetIndex index = generate(sp, ctx.work / "desk");
  const auto train_set = load_samples(index.filter(Split::kTrain));
  const auto test_set = load_samples(index.filter(Split::kTest));
  ModelConfig mc;
  mc.width_divisor = 4;
  TrainConfig tc;
  tc.epochs = 20;
  tc.seed = 1;
  auto r = train(train_set, mc, tc);
  const MleReport rep = evaluate(r.net, test_set, tc.heatmap());

  const double baseline = oracle::constant_center_baseline(512.0, 200000, 17);
  double centre = 0.0;
  for (const auto& s : test_set) centre += std::hypot(s.label.u - 256.0, s.label.v - 256.0) / test_set.size();
  return {train_set.size() == 200 && test_set.size() == 50 && rep.mle_all < kDeskMle,
          "test MLE-A " + fmt(rep.mle_all) + " px (E " + fmt(rep.mle_eyed.value_or(NAN)) + ", N " +
              fmt(rep.mle_non_eyed.value_or(NAN)) + ") vs constant-centre " + fmt(baseline) +
              " px uniform / " + fmt(centre) + " px on this test set"};
}

// ---------------------------------------------------------------------------
// 10. TCL+ directional effect

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

Verdict tcl_effect(const Context& ctx) {
  SynthParams sp;
  sp.n_samples = 250;
  sp.test_fraction = 0.2;
  sp.eyed_fraction = 0.65;
  sp.label_noise_px = 2.0;  // non-eyed training labels jitter by 2·3.9 px
  sp.noise_non_eyed_only = true;
  sp.seed = 10;
  const DatasetIndex index = generate(sp, ctx.work / "tcl" / "data");
  const auto train_set = load_samples(index.filter(Split::kTrain));
  const auto test_set = load_samples(index.filter(Split::kTest));
  std::size_t noisy = 0;
  for (const auto& e : index.filter(Split::kTrain).entries) noisy += !e.eyed;

  ModelConfig mc;
  mc.width_divisor = 8;
  std::vector<double> mse_runs, tcl_runs;
  bool switched = true;
  std::ostringstream table;
  table << "| seed | MSE test MLE-A (px) | TCL+ test MLE-A (px) | TCL+ exp-branch sample-steps |\n|---|---|---|---|\n";
  auto px = [](double v) {
    std::ostringstream o;
    o << std::fixed << std::setprecision(2) << v;
    return o.str();
  };
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const fs::path dir = ctx.work / "tcl" / ("seed" + std::to_string(seed));
    TrainConfig base;
    base.seed = seed;
    // Epochs 1..50 are MSE under both losses: train them once, then fork.
    TrainConfig prefix = base;
    prefix.epochs = base.tcl_switch_epoch;
    TrainOptions popts;
    popts.out_dir = dir / "prefix";
    const auto pre = train(train_set, mc, prefix, popts);
    for (const auto& e : pre.log) switched &= e.loss_name == "mse";

    MleReport reports[2];
    std::size_t exp_total = 0;
    for (int k = 0; k < 2; ++k) {
      TrainConfig tc = base;
      tc.loss = k == 0 ? LossKind::kMse : LossKind::kTclPlus;
      TrainOptions o;
      o.resume_from = dir / "prefix" / "last.ckpt";
      o.out_dir = dir / (k == 0 ? "mse" : "tcl");
      auto r = train(train_set, mc, tc, o);
      switched &= !r.log.empty() && r.log.front().epoch == base.tcl_switch_epoch + 1 && r.log.back().epoch == tc.epochs;
      for (const auto& e : r.log) {
        switched &= e.loss_name == loss_name(tc.loss);
        if (k == 1) exp_total += e.exp_branch;
      }
      reports[k] = evaluate(r.net, test_set, tc.heatmap());
    }
    mse_runs.push_back(reports[0].mle_all);
    tcl_runs.push_back(reports[1].mle_all);
    table << "| " << seed << " | " << px(reports[0].mle_all) << " | " << px(reports[1].mle_all) << " | " << exp_total
          << " |\n";
    std::cerr << "  seed " << seed << ": mse " << reports[0].mle_all << ", tcl+ " << reports[1].mle_all << "\n";
  }
  const double med_mse = median(mse_runs), med_tcl = median(tcl_runs);
  const auto ms = mean_std(mse_runs), ts = mean_std(tcl_runs);
  table << "| median | " << px(med_mse) << " | " << px(med_tcl) << " | |\n"
        << "| mean±std | " << ms.str() << " | " << ts.str() << " | |\n";
  if (!ctx.report.empty()) {
    std::ofstream out(ctx.report);
    out << "Training set: " << train_set.size() << " samples, " << noisy << " with jittered labels\n\n" << table.str();
  }
  std::cerr << table.str();
  return {switched && med_tcl <= med_mse + kTclMargin,
          "median test MLE-A: TCL+ " + fmt(med_tcl) + " vs MSE " + fmt(med_mse) + " px (" + std::to_string(noisy) +
              "/" + std::to_string(train_set.size()) + " noisy labels), switch logged: " + (switched ? "yes" : "no")};
}

// ---------------------------------------------------------------------------
// 11. Sigma sweep harness

Verdict sigma_sweep(const Context& ctx) {
  const fs::path root = ctx.work / "sweep";
  auto run = [&](const std::string& args) {
    const std::string cmd = "\"" + ctx.cli + "\" " + args + " >\"" + (root / "log.txt").string() + "\" 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  };
  fs::create_directories(root);
  const int g = run("generate --out \"" + (root / "data").string() + "\" --n 60 --seed 11");
  const int s = run("sweep --data \"" + (root / "data").string() + "\" --out \"" + (root / "runs").string() +
                    "\" --sigmas 5,15,30 --width-divisor 8 --epochs 2 --seed 1");
  if (g != 0 || s != 0) return {false, "exit codes generate " + std::to_string(g) + ", sweep " + std::to_string(s)};

  std::ifstream csv(root / "runs" / "sigma_sweep.csv");
  std::vector<std::string> rows;
  for (std::string l; std::getline(csv, l);) rows.push_back(l);
  bool ok = rows.size() == 4 && rows[0] == "sigma,n_all,MLE-A,MLE-E,MLE-N";
  const char* sigmas[] = {"5", "15", "30"};
  for (int i = 0; i < 3 && ok; ++i) {
    const fs::path dir = root / "runs" / ("sigma-" + std::string(sigmas[i]));
    ok &= rows[i + 1].rfind(std::string(sigmas[i]) + ",", 0) == 0;
    ok &= fs::exists(dir / "final.weights") && fs::exists(dir / "best.ckpt") && fs::exists(dir / "manifest.json");
    std::ifstream log(dir / "epoch_log.csv");
    std::size_t lines = 0;
    for (std::string l; std::getline(log, l);) ++lines;
    ok &= lines == 3;
  }
  std::string summary;
  for (std::size_t i = 1; i < rows.size(); ++i) summary += (i > 1 ? "; " : "") + rows[i];
  return {ok, "3 complete runs, sigma_sweep.csv rows: " + summary};
}

// ---------------------------------------------------------------------------
// 12. Reporting format

Verdict reporting(const Context&) {
  const std::regex pattern(R"(^\d+\.\d{4}±\d+\.\d{4}$)");
  // Five repeats of the target oracle on differently seeded data sets.
  const RepeatSummary s = repeat_runs({1, 2, 3, 4, 5}, [](std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 510.0);
    std::vector<CenterLabel> labels, preds;
    std::vector<char> eyed;
    const HeatmapParams p;
    for (int i = 0; i < 40; ++i) {
      labels.push_back({u(rng), u(rng)});
      preds.push_back(decode_heatmap(encode_heatmap<float>(labels.back(), p), p));
      eyed.push_back(i % 3 != 0);
    }
    const std::unique_ptr<bool[]> flags(new bool[eyed.size()]);
    std::copy(eyed.begin(), eyed.end(), flags.get());
    return mle(preds, labels, std::span<const bool>(flags.get(), eyed.size()));
  });
  const std::string reference = format_mean_std(4.5137, 0.0846);
  const bool ok = s.runs == 5 && std::regex_match(s.all.str(), pattern) && s.eyed && s.non_eyed &&
                  std::regex_match(s.eyed->str(), pattern) && reference == "4.5137±0.0846";
  return {ok, "MLE-A " + s.all.str() + ", MLE-E " + (s.eyed ? s.eyed->str() : "-") + ", MLE-N " +
                  (s.non_eyed ? s.non_eyed->str() : "-") + "; 4.5137, 0.0846 -> " + reference};
}

}  // namespace

int main(int argc, char** argv) {
  tclnet::tune_allocator();
  CLI::App app{"TCLNet acceptance criteria"};
  bool slow = false;
  std::vector<int> only;
  std::string work, report;
  std::string cli = TCLNET_CLI;
  app.add_flag("--slow", slow, "Also run criterion 10 (over an hour on one core)");
  app.add_option("--only", only, "Run only these criteria")->delimiter(',')->check(CLI::Range(1, 12));
  app.add_option("--work", work, "Keep artifacts here instead of a temporary directory");
  app.add_option("--report", report, "Write the criterion 10 table (markdown) here");
  app.add_option("--cli", cli, "tclnet binary for criterion 11");
  CLI11_PARSE(app, argc, argv);

  std::optional<testutil::TempDir> tmp;
  Context ctx;
  if (work.empty()) {
    tmp.emplace();
    ctx.work = tmp->path();
  } else {
    ctx.work = work;
    fs::create_directories(ctx.work);
  }
  ctx.cli = cli;
  ctx.report = report.empty() ? ctx.work / "tcl_effect.md" : fs::path(report);

  struct Criterion {
    int id;
    const char* title;
    std::function<Verdict(const Context&)> run;
  };
  const std::vector<Criterion> criteria{
      {1, "architecture fidelity", architecture},   {2, "parameter count", parameter_count},
      {3, "autodiff", autodiff},                    {4, "convolution oracle", conv_oracle},
      {5, "heatmap codec", heatmap_codec},          {6, "TCL+ law", tcl_law},
      {7, "Adam and lr schedule", adam_schedule},   {8, "overfit smoke test", overfit},
      {9, "desk-scale learning", desk_scale},       {10, "TCL+ directional effect", tcl_effect},
      {11, "sigma sweep harness", sigma_sweep},     {12, "reporting format", reporting},
  };

  int failures = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    if (c.id == 10 && !slow) {
      std::cout << "SKIP criterion 10 " << c.title << ": slow, run with --slow" << std::endl;
      continue;
    }
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.run(ctx);
    } catch (const std::exception& e) {
      v = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_budget = secs <= kBudget[c.id];
    const bool pass = v.pass && in_budget;
    failures += !pass;
    std::cout << (pass ? "PASS" : "FAIL") << " criterion " << c.id << " " << c.title << ": " << v.detail << " ["
              << fmt(secs, 3) << " s, budget " << fmt(kBudget[c.id], 5) << " s" << (in_budget ? "" : ", OVER BUDGET")
              << "]" << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
