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
#include <cmath>
#include <cstdio>
#include <memory>
#include <set>

#include "tclnet/training.hpp"

namespace tclnet {

namespace {

std::vector<CenterLabel> decode_batch(const Tensor<float>& maps, const HeatmapParams& params) {
  if (maps.dim() != 4 || maps.extent(1) != 1) {
    throw DimensionError("expected heatmaps (B,1,H,W), got " + to_string(maps.shape()));
  }
  const std::size_t h = maps.extent(2), w = maps.extent(3), plane = h * w;
  std::vector<CenterLabel> out;
  for (std::size_t b = 0; b < maps.extent(0); ++b) {
    out.push_back(decode_heatmap(maps.data().subspan(b * plane, plane), h, w, params.alpha));
  }
  return out;
}

}  // namespace

MleReport evaluate(const Predictor& predict, const std::vector<Sample>& dataset, const HeatmapParams& params,
                   std::size_t batch_size) {
  if (dataset.empty()) throw DomainError("evaluation set is empty");
  if (batch_size == 0) throw ConfigError("batch_size: must be positive");
  std::vector<CenterLabel> preds, labels;
  std::vector<char> eyed_flags;
  for (std::size_t start = 0; start < dataset.size(); start += batch_size) {
    const std::size_t end = std::min(dataset.size(), start + batch_size);
    std::vector<const Image*> images;
    std::vector<const Sample*> samples;
    for (std::size_t i = start; i < end; ++i) {
      images.push_back(&dataset[i].image);
      samples.push_back(&dataset[i]);
      labels.push_back(dataset[i].label);
      eyed_flags.push_back(dataset[i].eyed);
    }
    const Tensor<float> maps = predict(images_to_tensor(images), samples);
    for (const CenterLabel& c : decode_batch(maps, params)) preds.push_back(c);
  }
  // std::vector<bool> has no contiguous storage to span over.
  const auto eyed = std::make_unique<bool[]>(eyed_flags.size());
  std::copy(eyed_flags.begin(), eyed_flags.end(), eyed.get());
  return mle(preds, labels, std::span<const bool>(eyed.get(), eyed_flags.size()));
}

MleReport evaluate(TclNet<float>& net, const std::vector<Sample>& dataset, const HeatmapParams& params,
                   std::size_t batch_size) {
  NoGradGuard guard;
  const Predictor predict = [&net](const Tensor<float>& x, std::span<const Sample* const>) {
    return net.forward(x, Mode::kEval);
  };
  return evaluate(predict, dataset, params, batch_size);
}

std::vector<CenterLabel> predict_centers(TclNet<float>& net, const std::vector<const Image*>& images,
                                         const HeatmapParams& params, std::size_t batch_size) {
  if (batch_size == 0) throw ConfigError("batch_size: must be positive");
  NoGradGuard guard;
  std::vector<CenterLabel> out;
  for (std::size_t start = 0; start < images.size(); start += batch_size) {
    const std::size_t end = std::min(images.size(), start + batch_size);
    const std::vector<const Image*> chunk(images.begin() + static_cast<std::ptrdiff_t>(start),
                                          images.begin() + static_cast<std::ptrdiff_t>(end));
    for (const CenterLabel& c : decode_batch(net.forward(images_to_tensor(chunk), Mode::kEval), params)) {
      out.push_back(c);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Repeats

std::string format_mean_std(double mean, double std) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f\xC2\xB1%.4f", mean, std);
  return buf;
}

std::string MeanStd::str() const { return format_mean_std(mean, std); }

MeanStd mean_std(std::span<const double> values) {
  if (values.empty()) throw DomainError("mean/std of an empty set");
  double sum = 0.0;
  for (double v : values) sum += v;
  const double mean = sum / static_cast<double>(values.size());
  double sq = 0.0;
  for (double v : values) sq += (v - mean) * (v - mean);
  return {mean, std::sqrt(sq / static_cast<double>(values.size()))};
}

RepeatSummary summarize_runs(std::span<const MleReport> reports) {
  if (reports.size() < 2) {
    throw DomainError("repeat summary needs at least 2 runs, got " + std::to_string(reports.size()));
  }
  std::vector<double> all, eyed, non_eyed;
  for (const MleReport& r : reports) {
    all.push_back(r.mle_all);
    if (r.mle_eyed) eyed.push_back(*r.mle_eyed);
    if (r.mle_non_eyed) non_eyed.push_back(*r.mle_non_eyed);
  }
  RepeatSummary s;
  s.runs = reports.size();
  s.all = mean_std(all);
  if (eyed.size() == reports.size()) s.eyed = mean_std(eyed);
  if (non_eyed.size() == reports.size()) s.non_eyed = mean_std(non_eyed);
  return s;
}

RepeatSummary repeat_runs(const std::vector<std::uint64_t>& seeds,
                          const std::function<MleReport(std::uint64_t)>& run) {
  if (seeds.size() < 2) throw DomainError("repeats need at least 2 seeds");
  if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size()) {
    throw DomainError("repeat seeds must be distinct");
  }
  std::vector<MleReport> reports;
  for (std::uint64_t seed : seeds) reports.push_back(run(seed));
  return summarize_runs(reports);
}

}  // namespace tclnet
