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

#ifndef TCLNET_OBJECTIVE_HPP_
#define TCLNET_OBJECTIVE_HPP_

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tclnet/heatmap.hpp"
#include "tclnet/tensor.hpp"

namespace tclnet {

/// Steepness of the suppression branch: exp(-kTclSteepness · mse).
inline constexpr double kTclSteepness = 2e4;

template <typename T>
struct LossValue {
  Tensor<T> per_sample;  // (B)
  Tensor<T> batch;       // scalar, mean of per_sample; differentiable
  /// Samples whose loss took the MSE branch / the exponential branch.
  /// For plain MSE every sample counts as an MSE-branch sample.
  std::size_t mse_branch = 0;
  std::size_t exp_branch = 0;
};

/// Per-sample mean over all pixels of (pred - target)², batch-averaged.
template <typename T>
LossValue<T> mse_loss(const Tensor<T>& pred, const Tensor<T>& target);

/// Per-sample min(m, exp(-2·10⁴·m)) where m is the sample's MSE, batch-averaged.
/// Gradients follow the active branch; ties take the MSE branch.
template <typename T>
LossValue<T> tcl_plus_loss(const Tensor<T>& pred, const Tensor<T>& target);

/// Scalar form of the TCL+ law for one per-sample MSE value.
double tcl_plus_value(double mse);

/// Fixed point m* of m = exp(-2·10⁴·m), where the two branches meet.
double tcl_crossover();

struct MleReport {
  double mle_all = 0.0;
  std::optional<double> mle_eyed;
  std::optional<double> mle_non_eyed;
  std::size_t n_all = 0;
  std::size_t n_eyed = 0;
  std::size_t n_non_eyed = 0;

  /// CSV header / row: run_id,n_all,mle_all,mle_eyed,mle_non_eyed. Absent
  /// splits are written as empty fields.
  static std::string csv_header();
  std::string csv_row(const std::string& run_id) const;
};

/// Mean Euclidean distance between predicted and labelled centres (input
/// pixels) over all samples and over the eyed / non-eyed subsets.
MleReport mle(std::span<const CenterLabel> preds, std::span<const CenterLabel> labels,
              std::span<const bool> eyed);

}  // namespace tclnet

#endif  // TCLNET_OBJECTIVE_HPP_
