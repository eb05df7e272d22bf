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

#ifndef TCLNET_TENSOR_HPP_
#define TCLNET_TENSOR_HPP_

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tclnet/errors.hpp"

namespace tclnet {

/// Extents in row-major order; 4-D data is (batch, channel, height, width).
/// An empty shape denotes a scalar.
using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape);
std::string to_string(const Shape& shape);

enum class Precision { kSingle, kDouble };

namespace detail {

template <typename T>
struct Node {
  Shape shape;
  std::vector<T> data;
  std::vector<T> grad;  // empty until first accumulation
  bool requires_grad = false;
  bool leaf = true;
  const char* op = "leaf";
  std::vector<std::shared_ptr<Node>> parents;
  // Reads this->grad and accumulates into parents' grads.
  std::function<void(Node&)> backward;

  // Returns the grad buffer, allocating zeros on first use.
  std::vector<T>& grad_buffer() {
    if (grad.size() != data.size()) grad.assign(data.size(), T(0));
    return grad;
  }
};

}  // namespace detail

/// Global switch for tape recording; thread-local.
/// Keeps large freed buffers in the heap instead of returning them to the
/// OS on every release, so each new activation does not page-fault in fresh
/// zeroed memory. Process-wide; call once from main. No-op off glibc.
void tune_allocator();

class GradMode {
 public:
  static bool enabled();
  static void set_enabled(bool on);
};

/// Disables tape recording for the enclosing scope.
class NoGradGuard {
 public:
  NoGradGuard() : previous_(GradMode::enabled()) { GradMode::set_enabled(false); }
  ~NoGradGuard() { GradMode::set_enabled(previous_); }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

/// Dense float tensor with optional participation in the gradient tape.
///
/// Copies share storage (handle semantics). Tensors produced by ops are
/// treated as immutable; only leaves (parameters, inputs) may be written
/// through mutable_data().
template <typename T>
class Tensor {
 public:
  using value_type = T;
  using NodePtr = std::shared_ptr<detail::Node<T>>;

  Tensor() = default;
  explicit Tensor(NodePtr node) : node_(std::move(node)) {}

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, T value, bool requires_grad = false);
  static Tensor from_data(Shape shape, std::vector<T> data, bool requires_grad = false);
  static Tensor scalar(T value, bool requires_grad = false);

  bool defined() const { return static_cast<bool>(node_); }
  const Shape& shape() const { return node().shape; }
  std::size_t dim() const { return node().shape.size(); }
  std::size_t numel() const { return node().data.size(); }
  std::size_t extent(std::size_t axis) const;

  std::span<const T> data() const { return node().data; }
  std::span<T> mutable_data();
  T item() const;
  T at(std::size_t b, std::size_t c, std::size_t h, std::size_t w) const;

  bool requires_grad() const { return node().requires_grad; }
  void set_requires_grad(bool on);
  bool has_grad() const { return node().grad.size() == node().data.size(); }
  std::span<const T> grad() const;
  std::span<T> mutable_grad();
  void zero_grad();

  /// Copy of the values, detached from the tape.
  Tensor detach() const;
  /// Same values under a different (equal-numel) shape; taped.
  Tensor reshape(Shape shape) const;

  const NodePtr& node_ptr() const { return node_; }

 private:
  const detail::Node<T>& node() const;
  detail::Node<T>& node();

  NodePtr node_;
};

/// Builds the output of a differentiable op. Records `backward` on the tape
/// when grad mode is on and any parent requires gradients; checks that every
/// output value is finite.
template <typename T>
Tensor<T> make_result(Shape shape, std::vector<T> data,
                      std::vector<typename Tensor<T>::NodePtr> parents,
                      std::function<void(detail::Node<T>&)> backward, const char* op);

/// Throws NumericError naming `what` when any value is NaN or infinite.
template <typename T>
void check_finite(std::span<const T> values, const char* what);

// Elementwise ops. The second operand must have the same shape as the first
// or hold a single element (broadcast scalar).
template <typename T> Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> scale(const Tensor<T>& a, T factor);
template <typename T> Tensor<T> exp(const Tensor<T>& a);
/// Elementwise minimum; the gradient goes to `a` on ties.
template <typename T> Tensor<T> minimum(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> square(const Tensor<T>& a);

template <typename T> Tensor<T> operator+(const Tensor<T>& a, const Tensor<T>& b) { return add(a, b); }
template <typename T> Tensor<T> operator-(const Tensor<T>& a, const Tensor<T>& b) { return sub(a, b); }
template <typename T> Tensor<T> operator*(const Tensor<T>& a, const Tensor<T>& b) { return mul(a, b); }

// Reductions. With no axes the result is a scalar; otherwise the listed axes
// are removed from the shape.
template <typename T> Tensor<T> sum(const Tensor<T>& a, std::optional<std::vector<std::size_t>> axes = {});
template <typename T> Tensor<T> mean(const Tensor<T>& a, std::optional<std::vector<std::size_t>> axes = {});

template <typename T>
struct MaxResult {
  Tensor<T> value;                  // scalar, gradient routed to `flat_index`
  std::size_t flat_index = 0;       // first maximum in row-major order
  std::vector<std::size_t> index;   // multi-index of flat_index
};
template <typename T> MaxResult<T> max_with_argmax(const Tensor<T>& a);

/// Reverse sweep from a scalar loss. Leaf gradients accumulate across calls.
template <typename T> void backward(const Tensor<T>& loss);

/// Max relative error between taped gradients and central differences,
/// |analytic - numeric| / max(|analytic|, |numeric|, 1e-12).
/// When `max_elements` is set, a deterministic strided subset is checked.
double grad_check(const std::function<Tensor<double>(const Tensor<double>&)>& f,
                  const Tensor<double>& x, double eps = 1e-5,
                  std::optional<std::size_t> max_elements = {});

}  // namespace tclnet

#endif  // TCLNET_TENSOR_HPP_
