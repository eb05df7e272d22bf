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

#include "tclnet/tensor.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cmath>
#include <numeric>
#include <sstream>
#include <unordered_set>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

namespace tclnet {

std::size_t numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string to_string(const Shape& shape) {
  std::ostringstream out;
  out << '(';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out << ',';
    out << shape[i];
  }
  out << ')';
  return out.str();
}

namespace {
thread_local bool g_grad_enabled = true;
}  // namespace

void tune_allocator() {
#if defined(__GLIBC__)
  mallopt(M_MMAP_THRESHOLD, 1 << 30);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);
#endif
}

bool GradMode::enabled() { return g_grad_enabled; }
void GradMode::set_enabled(bool on) { g_grad_enabled = on; }

// ---------------------------------------------------------------------------
// Tensor

template <typename T>
Tensor<T> Tensor<T>::zeros(Shape shape, bool requires_grad) {
  return full(std::move(shape), T(0), requires_grad);
}

template <typename T>
Tensor<T> Tensor<T>::full(Shape shape, T value, bool requires_grad) {
  const std::size_t n = tclnet::numel(shape);
  return from_data(std::move(shape), std::vector<T>(n, value), requires_grad);
}

template <typename T>
Tensor<T> Tensor<T>::from_data(Shape shape, std::vector<T> data, bool requires_grad) {
  for (std::size_t e : shape) {
    if (e == 0) throw DimensionError("tensor extents must be positive, got " + to_string(shape));
  }
  if (tclnet::numel(shape) != data.size()) {
    throw DimensionError("shape " + to_string(shape) + " does not match " +
                         std::to_string(data.size()) + " values");
  }
  auto node = std::make_shared<detail::Node<T>>();
  node->shape = std::move(shape);
  node->data = std::move(data);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

template <typename T>
Tensor<T> Tensor<T>::scalar(T value, bool requires_grad) {
  return from_data({}, {value}, requires_grad);
}

template <typename T>
const detail::Node<T>& Tensor<T>::node() const {
  if (!node_) throw ContractError("use of an undefined tensor");
  return *node_;
}

template <typename T>
detail::Node<T>& Tensor<T>::node() {
  if (!node_) throw ContractError("use of an undefined tensor");
  return *node_;
}

template <typename T>
std::size_t Tensor<T>::extent(std::size_t axis) const {
  if (axis >= dim()) {
    throw DimensionError("axis " + std::to_string(axis) + " out of range for " + to_string(shape()));
  }
  return shape()[axis];
}

template <typename T>
std::span<T> Tensor<T>::mutable_data() {
  if (!node().leaf) throw ContractError("only leaf tensors may be written in place");
  return node().data;
}

template <typename T>
T Tensor<T>::item() const {
  if (numel() != 1) throw ContractError("item() on tensor of shape " + to_string(shape()));
  return node().data[0];
}

template <typename T>
T Tensor<T>::at(std::size_t b, std::size_t c, std::size_t h, std::size_t w) const {
  const Shape& s = shape();
  if (s.size() != 4) throw DimensionError("at(b,c,h,w) needs a 4-D tensor, got " + to_string(s));
  return node().data[((b * s[1] + c) * s[2] + h) * s[3] + w];
}

template <typename T>
void Tensor<T>::set_requires_grad(bool on) {
  if (!node().leaf) throw ContractError("requires_grad can only be set on leaves");
  node().requires_grad = on;
}

template <typename T>
std::span<const T> Tensor<T>::grad() const {
  if (!has_grad()) throw ContractError("tensor has no gradient");
  return node().grad;
}

template <typename T>
std::span<T> Tensor<T>::mutable_grad() {
  return node().grad_buffer();
}

template <typename T>
void Tensor<T>::zero_grad() {
  auto& g = node().grad;
  std::fill(g.begin(), g.end(), T(0));
}

template <typename T>
Tensor<T> Tensor<T>::detach() const {
  return from_data(shape(), node().data, false);
}

template <typename T>
Tensor<T> Tensor<T>::reshape(Shape new_shape) const {
  if (tclnet::numel(new_shape) != numel()) {
    throw DimensionError("cannot reshape " + to_string(shape()) + " to " + to_string(new_shape));
  }
  return make_result<T>(
      std::move(new_shape), node().data, {node_},
      [](detail::Node<T>& out) {
        auto& g = out.parents[0]->grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += out.grad[i];
      },
      "reshape");
}

// ---------------------------------------------------------------------------
// Op plumbing

template <typename T>
void check_finite(std::span<const T> values, const char* what) {
  // Branch-free exponent scan first (vectorizes); locate the culprit only on failure.
  using Bits = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
  constexpr Bits kExp = sizeof(T) == 4 ? Bits(0x7f800000u) : Bits(0x7ff0000000000000ull);
  bool bad = false;
  for (const T v : values) bad |= (std::bit_cast<Bits>(v) & kExp) == kExp;
  if (!bad) return;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      throw NumericError(std::string("non-finite value in ") + what + " at element " +
                         std::to_string(i));
    }
  }
}

template <typename T>
Tensor<T> make_result(Shape shape, std::vector<T> data,
                      std::vector<typename Tensor<T>::NodePtr> parents,
                      std::function<void(detail::Node<T>&)> backward, const char* op) {
  check_finite<T>(data, op);
  auto node = std::make_shared<detail::Node<T>>();
  node->shape = std::move(shape);
  node->data = std::move(data);
  node->op = op;
  node->leaf = false;
  const bool record =
      GradMode::enabled() &&
      std::any_of(parents.begin(), parents.end(), [](const auto& p) { return p->requires_grad; });
  if (record) {
    node->requires_grad = true;
    node->parents = std::move(parents);
    node->backward = std::move(backward);
  }
  return Tensor<T>(std::move(node));
}

namespace {

template <typename T>
bool is_broadcast_scalar(const Tensor<T>& a, const Tensor<T>& b) {
  return b.numel() == 1 && a.shape() != b.shape();
}

template <typename T>
void check_binary(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
  if (a.shape() != b.shape() && b.numel() != 1) {
    throw DimensionError(std::string(op) + ": shape mismatch " + to_string(a.shape()) + " vs " +
                         to_string(b.shape()));
  }
}

// Shared driver for binary ops with partial derivatives da(x, y), db(x, y).
template <typename T, typename F, typename DA, typename DB>
Tensor<T> binary_op(const Tensor<T>& a, const Tensor<T>& b, const char* op, F f, DA da, DB db) {
  check_binary(a, b, op);
  const bool bcast = b.numel() == 1;
  const auto av = a.data();
  const auto bv = b.data();
  std::vector<T> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = f(av[i], bv[bcast ? 0 : i]);
  return make_result<T>(
      a.shape(), std::move(out), {a.node_ptr(), b.node_ptr()},
      [bcast, da, db](detail::Node<T>& node) {
        auto& pa = *node.parents[0];
        auto& pb = *node.parents[1];
        const auto& g = node.grad;
        if (pa.requires_grad) {
          auto& ga = pa.grad_buffer();
          for (std::size_t i = 0; i < g.size(); ++i) {
            ga[i] += g[i] * da(pa.data[i], pb.data[bcast ? 0 : i]);
          }
        }
        if (pb.requires_grad) {
          auto& gb = pb.grad_buffer();
          for (std::size_t i = 0; i < g.size(); ++i) {
            gb[bcast ? 0 : i] += g[i] * db(pa.data[i], pb.data[bcast ? 0 : i]);
          }
        }
      },
      op);
}

std::vector<std::size_t> normalized_axes(const Shape& shape,
                                         const std::optional<std::vector<std::size_t>>& axes) {
  std::vector<std::size_t> out;
  if (!axes) {
    out.resize(shape.size());
    std::iota(out.begin(), out.end(), std::size_t{0});
    return out;
  }
  out = *axes;
  std::sort(out.begin(), out.end());
  if (std::adjacent_find(out.begin(), out.end()) != out.end()) {
    throw DimensionError("duplicate reduction axis for shape " + to_string(shape));
  }
  for (std::size_t ax : out) {
    if (ax >= shape.size()) {
      throw DimensionError("reduction axis " + std::to_string(ax) + " invalid for shape " +
                           to_string(shape));
    }
  }
  return out;
}

// Maps every input flat index to its output flat index for a reduction.
std::vector<std::size_t> reduction_map(const Shape& shape, const std::vector<std::size_t>& axes,
                                       Shape& out_shape) {
  std::vector<bool> reduced(shape.size(), false);
  for (std::size_t ax : axes) reduced[ax] = true;
  out_shape.clear();
  for (std::size_t d = 0; d < shape.size(); ++d) {
    if (!reduced[d]) out_shape.push_back(shape[d]);
  }
  const std::size_t n = numel(shape);
  std::vector<std::size_t> map(n);
  std::vector<std::size_t> idx(shape.size(), 0);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t o = 0;
    for (std::size_t d = 0; d < shape.size(); ++d) {
      if (!reduced[d]) o = o * shape[d] + idx[d];
    }
    map[i] = o;
    for (std::size_t d = shape.size(); d-- > 0;) {
      if (++idx[d] < shape[d]) break;
      idx[d] = 0;
    }
  }
  return map;
}

template <typename T>
Tensor<T> reduce_sum(const Tensor<T>& a, const std::optional<std::vector<std::size_t>>& axes,
                     bool average, const char* op) {
  if (a.numel() == 0) throw DomainError(std::string(op) + " of an empty tensor");
  const auto ax = normalized_axes(a.shape(), axes);
  Shape out_shape;
  std::size_t count = 1;
  for (std::size_t d : ax) count *= a.shape()[d];

  const auto av = a.data();
  std::vector<T> out;
  std::shared_ptr<std::vector<std::size_t>> map;
  if (ax.size() == a.dim()) {
    // Full reductions accumulate in double.
    double acc = 0.0;
    for (T v : av) acc += static_cast<double>(v);
    if (average) acc /= static_cast<double>(count);
    out = {static_cast<T>(acc)};
  } else {
    map = std::make_shared<std::vector<std::size_t>>(reduction_map(a.shape(), ax, out_shape));
    out.assign(numel(out_shape), T(0));
    for (std::size_t i = 0; i < av.size(); ++i) out[(*map)[i]] += av[i];
    if (average) {
      for (T& v : out) v /= static_cast<T>(count);
    }
  }
  const T factor = average ? T(1) / static_cast<T>(count) : T(1);
  return make_result<T>(
      std::move(out_shape), std::move(out), {a.node_ptr()},
      [map, factor](detail::Node<T>& node) {
        auto& g = node.parents[0]->grad_buffer();
        if (!map) {
          const T gv = node.grad[0] * factor;
          for (T& v : g) v += gv;
        } else {
          for (std::size_t i = 0; i < g.size(); ++i) g[i] += node.grad[(*map)[i]] * factor;
        }
      },
      op);
}

}  // namespace

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  return binary_op(
      a, b, "add", [](T x, T y) { return x + y; }, [](T, T) { return T(1); },
      [](T, T) { return T(1); });
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  return binary_op(
      a, b, "sub", [](T x, T y) { return x - y; }, [](T, T) { return T(1); },
      [](T, T) { return T(-1); });
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  return binary_op(
      a, b, "mul", [](T x, T y) { return x * y; }, [](T, T y) { return y; },
      [](T x, T) { return x; });
}

template <typename T>
Tensor<T> minimum(const Tensor<T>& a, const Tensor<T>& b) {
  return binary_op(
      a, b, "minimum", [](T x, T y) { return x <= y ? x : y; },
      [](T x, T y) { return x <= y ? T(1) : T(0); }, [](T x, T y) { return x <= y ? T(0) : T(1); });
}

template <typename T>
Tensor<T> scale(const Tensor<T>& a, T factor) {
  const auto av = a.data();
  std::vector<T> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] * factor;
  return make_result<T>(
      a.shape(), std::move(out), {a.node_ptr()},
      [factor](detail::Node<T>& node) {
        auto& g = node.parents[0]->grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += node.grad[i] * factor;
      },
      "scale");
}

template <typename T>
Tensor<T> exp(const Tensor<T>& a) {
  const auto av = a.data();
  std::vector<T> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = std::exp(av[i]);
  return make_result<T>(
      a.shape(), std::move(out), {a.node_ptr()},
      [](detail::Node<T>& node) {
        auto& g = node.parents[0]->grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += node.grad[i] * node.data[i];
      },
      "exp");
}

template <typename T>
Tensor<T> square(const Tensor<T>& a) {
  const auto av = a.data();
  std::vector<T> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] * av[i];
  return make_result<T>(
      a.shape(), std::move(out), {a.node_ptr()},
      [](detail::Node<T>& node) {
        auto& p = *node.parents[0];
        auto& g = p.grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += node.grad[i] * T(2) * p.data[i];
      },
      "square");
}

template <typename T>
Tensor<T> sum(const Tensor<T>& a, std::optional<std::vector<std::size_t>> axes) {
  return reduce_sum(a, axes, false, "sum");
}

template <typename T>
Tensor<T> mean(const Tensor<T>& a, std::optional<std::vector<std::size_t>> axes) {
  return reduce_sum(a, axes, true, "mean");
}

template <typename T>
MaxResult<T> max_with_argmax(const Tensor<T>& a) {
  const auto av = a.data();
  if (av.empty()) throw DomainError("max of an empty tensor");
  std::size_t best = 0;
  for (std::size_t i = 1; i < av.size(); ++i) {
    if (av[i] > av[best]) best = i;
  }
  MaxResult<T> r;
  r.flat_index = best;
  r.index.assign(a.dim(), 0);
  std::size_t rem = best;
  for (std::size_t d = a.dim(); d-- > 0;) {
    r.index[d] = rem % a.shape()[d];
    rem /= a.shape()[d];
  }
  r.value = make_result<T>(
      {}, {av[best]}, {a.node_ptr()},
      [best](detail::Node<T>& node) { node.parents[0]->grad_buffer()[best] += node.grad[0]; },
      "max");
  return r;
}

template <typename T>
void backward(const Tensor<T>& loss) {
  if (!loss.defined() || loss.numel() != 1) {
    throw ContractError("backward needs a scalar loss, got shape " +
                        (loss.defined() ? to_string(loss.shape()) : std::string("undefined")));
  }
  using NodePtr = typename Tensor<T>::NodePtr;
  const NodePtr& root = loss.node_ptr();
  if (!root->requires_grad) {
    throw ContractError("loss was not produced by taped ops on tensors requiring gradients");
  }

  // Iterative post-order DFS gives a topological order (parents first).
  std::vector<detail::Node<T>*> order;
  std::unordered_set<detail::Node<T>*> seen;
  std::vector<std::pair<detail::Node<T>*, std::size_t>> stack{{root.get(), 0}};
  seen.insert(root.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      detail::Node<T>* p = node->parents[next++].get();
      if (p->requires_grad && seen.insert(p).second) stack.push_back({p, 0});
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  for (auto* node : order) {
    if (!node->leaf) node->grad.assign(node->data.size(), T(0));
  }
  root->grad_buffer()[0] += T(1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    detail::Node<T>* node = *it;
    if (node->leaf || !node->backward) continue;
    node->backward(*node);
    // Interior gradients are not needed once propagated.
    std::vector<T>().swap(node->grad);
  }
}

double grad_check(const std::function<Tensor<double>(const Tensor<double>&)>& f,
                  const Tensor<double>& x, double eps, std::optional<std::size_t> max_elements) {
  auto probe = Tensor<double>::from_data(x.shape(), std::vector<double>(x.data().begin(), x.data().end()),
                                         true);
  {
    const bool prev = GradMode::enabled();
    GradMode::set_enabled(true);
    auto y = f(probe);
    backward(y);
    GradMode::set_enabled(prev);
  }
  const std::vector<double> analytic(probe.grad().begin(), probe.grad().end());

  const std::size_t n = x.numel();
  std::size_t stride = 1;
  if (max_elements && *max_elements > 0 && n > *max_elements) {
    stride = (n + *max_elements - 1) / *max_elements;
  }

  NoGradGuard no_grad;
  std::vector<double> base(x.data().begin(), x.data().end());
  double worst = 0.0;
  for (std::size_t i = 0; i < n; i += stride) {
    std::vector<double> plus = base;
    std::vector<double> minus = base;
    plus[i] += eps;
    minus[i] -= eps;
    const double fp = f(Tensor<double>::from_data(x.shape(), std::move(plus))).item();
    const double fm = f(Tensor<double>::from_data(x.shape(), std::move(minus))).item();
    const double numeric = (fp - fm) / (2.0 * eps);
    const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), 1e-12});
    worst = std::max(worst, std::abs(analytic[i] - numeric) / denom);
  }
  return worst;
}

#define TCLNET_INSTANTIATE(T)                                                                      \
  template class Tensor<T>;                                                                        \
  template Tensor<T> make_result<T>(Shape, std::vector<T>, std::vector<Tensor<T>::NodePtr>,       \
                                    std::function<void(detail::Node<T>&)>, const char*);          \
  template void check_finite<T>(std::span<const T>, const char*);                                 \
  template Tensor<T> add<T>(const Tensor<T>&, const Tensor<T>&);                                   \
  template Tensor<T> sub<T>(const Tensor<T>&, const Tensor<T>&);                                   \
  template Tensor<T> mul<T>(const Tensor<T>&, const Tensor<T>&);                                   \
  template Tensor<T> minimum<T>(const Tensor<T>&, const Tensor<T>&);                               \
  template Tensor<T> scale<T>(const Tensor<T>&, T);                                                \
  template Tensor<T> exp<T>(const Tensor<T>&);                                                     \
  template Tensor<T> square<T>(const Tensor<T>&);                                                  \
  template Tensor<T> sum<T>(const Tensor<T>&, std::optional<std::vector<std::size_t>>);            \
  template Tensor<T> mean<T>(const Tensor<T>&, std::optional<std::vector<std::size_t>>);           \
  template MaxResult<T> max_with_argmax<T>(const Tensor<T>&);                                      \
  template void backward<T>(const Tensor<T>&);

TCLNET_INSTANTIATE(float)
TCLNET_INSTANTIATE(double)

#undef TCLNET_INSTANTIATE

}  // namespace tclnet
