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

#include "tclnet/objective.hpp"

#include <cmath>
#include <numeric>

#include "tclnet/keyvalue.hpp"

namespace tclnet {

namespace {

template <typename T>
Tensor<T> per_sample_mse(const Tensor<T>& pred, const Tensor<T>& target) {
  if (pred.shape() != target.shape()) {
    throw DimensionError("loss shape mismatch: prediction " + to_string(pred.shape()) + " vs target " +
                         to_string(target.shape()));
  }
  if (pred.dim() < 2) throw DimensionError("loss expects a batch of maps, got " + to_string(pred.shape()));
  std::vector<std::size_t> axes(pred.dim() - 1);
  std::iota(axes.begin(), axes.end(), std::size_t{1});
  return mean(square(sub(pred, target)), axes);
}

}  // namespace

template <typename T>
LossValue<T> mse_loss(const Tensor<T>& pred, const Tensor<T>& target) {
  LossValue<T> out;
  out.per_sample = per_sample_mse(pred, target);
  out.batch = mean(out.per_sample);
  out.mse_branch = out.per_sample.numel();
  return out;
}

template <typename T>
LossValue<T> tcl_plus_loss(const Tensor<T>& pred, const Tensor<T>& target) {
  const Tensor<T> m = per_sample_mse(pred, target);
  const Tensor<T> suppressed = exp(scale(m, static_cast<T>(-kTclSteepness)));
  LossValue<T> out;
  out.per_sample = minimum(m, suppressed);
  out.batch = mean(out.per_sample);
  const auto mv = m.data();
  const auto sv = suppressed.data();
  for (std::size_t i = 0; i < mv.size(); ++i) {
    if (mv[i] <= sv[i]) ++out.mse_branch;
    else ++out.exp_branch;
  }
  return out;
}

double tcl_plus_value(double mse) { return std::min(mse, std::exp(-kTclSteepness * mse)); }

double tcl_crossover() {
  // g(m) = m - exp(-k m) is strictly increasing with g(0) < 0 < g(1e-3).
  double lo = 0.0, hi = 1e-3;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid - std::exp(-kTclSteepness * mid) < 0.0) lo = mid;
    else hi = mid;
  }
  return 0.5 * (lo + hi);
}

std::string MleReport::csv_header() { return "run_id,n_all,MLE-A,MLE-E,MLE-N"; }

std::string MleReport::csv_row(const std::string& run_id) const {
  auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
  return run_id + "," + std::to_string(n_all) + "," + format_double(mle_all) + "," + opt(mle_eyed) +
         "," + opt(mle_non_eyed);
}

MleReport mle(std::span<const CenterLabel> preds, std::span<const CenterLabel> labels,
              std::span<const bool> eyed) {
  if (preds.size() != labels.size() || preds.size() != eyed.size()) {
    throw DimensionError("mle: " + std::to_string(preds.size()) + " predictions, " +
                         std::to_string(labels.size()) + " labels, " + std::to_string(eyed.size()) +
                         " flags");
  }
  MleReport r;
  double all = 0.0, e = 0.0, ne = 0.0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const double d = std::hypot(preds[i].u - labels[i].u, preds[i].v - labels[i].v);
    all += d;
    if (eyed[i]) {
      e += d;
      ++r.n_eyed;
    } else {
      ne += d;
      ++r.n_non_eyed;
    }
  }
  r.n_all = preds.size();
  if (r.n_all == 0) throw DomainError("mle over an empty sample set");
  r.mle_all = all / static_cast<double>(r.n_all);
  if (r.n_eyed) r.mle_eyed = e / static_cast<double>(r.n_eyed);
  if (r.n_non_eyed) r.mle_non_eyed = ne / static_cast<double>(r.n_non_eyed);
  return r;
}

template LossValue<float> mse_loss<float>(const Tensor<float>&, const Tensor<float>&);
template LossValue<double> mse_loss<double>(const Tensor<double>&, const Tensor<double>&);
template LossValue<float> tcl_plus_loss<float>(const Tensor<float>&, const Tensor<float>&);
template LossValue<double> tcl_plus_loss<double>(const Tensor<double>&, const Tensor<double>&);

}  // namespace tclnet
