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

#include "tclnet/layers.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <cstring>

namespace tclnet {

std::string LayerRow::str() const {
  return kind + " " + std::to_string(channels) + " " + kernel;
}

std::size_t same_padding(std::size_t kernel) {
  if (kernel % 2 == 0) throw ConfigError("kernel size must be odd, got " + std::to_string(kernel));
  return kernel / 2;
}

namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapMat = Eigen::Map<RowMat<T>>;
template <typename T>
using ConstMapMat = Eigen::Map<const RowMat<T>>;

struct ConvGeometry {
  std::size_t batch, in_c, in_h, in_w;
  std::size_t out_c, k, stride, pad;
  std::size_t out_h, out_w;

  std::size_t patch() const { return in_c * k * k; }
  std::size_t pixels() const { return out_h * out_w; }
  bool pointwise() const { return k == 1 && stride == 1 && pad == 0; }
};

// Valid output range [lo, hi) along one axis for kernel offset `off`.
inline void valid_range(std::size_t out_n, std::size_t in_n, std::size_t stride, std::size_t pad,
                        std::size_t off, std::size_t& lo, std::size_t& hi) {
  // i = o*stride + off - pad must lie in [0, in_n).
  const long shift = static_cast<long>(off) - static_cast<long>(pad);
  long l = 0;
  if (shift < 0) l = (-shift + static_cast<long>(stride) - 1) / static_cast<long>(stride);
  long h = (static_cast<long>(in_n) - 1 - shift) / static_cast<long>(stride) + 1;
  if (static_cast<long>(in_n) - 1 - shift < 0) h = 0;
  lo = static_cast<std::size_t>(std::clamp(l, 0L, static_cast<long>(out_n)));
  hi = static_cast<std::size_t>(std::clamp(h, static_cast<long>(lo), static_cast<long>(out_n)));
}

// Unfolds one image (in_c, in_h, in_w) into a (patch × pixels) row-major buffer.
template <typename T>
void im2col(const T* image, const ConvGeometry& g, T* cols) {
  const std::size_t pixels = g.pixels();
  for (std::size_t c = 0; c < g.in_c; ++c) {
    const T* plane = image + c * g.in_h * g.in_w;
    for (std::size_t ki = 0; ki < g.k; ++ki) {
      std::size_t oh_lo, oh_hi;
      valid_range(g.out_h, g.in_h, g.stride, g.pad, ki, oh_lo, oh_hi);
      for (std::size_t kj = 0; kj < g.k; ++kj) {
        std::size_t ow_lo, ow_hi;
        valid_range(g.out_w, g.in_w, g.stride, g.pad, kj, ow_lo, ow_hi);
        T* row = cols + ((c * g.k + ki) * g.k + kj) * pixels;
        std::fill(row, row + oh_lo * g.out_w, T(0));
        for (std::size_t oh = oh_lo; oh < oh_hi; ++oh) {
          T* dst = row + oh * g.out_w;
          const T* src = plane + (oh * g.stride + ki - g.pad) * g.in_w;
          std::fill(dst, dst + ow_lo, T(0));
          if (g.stride == 1) {
            std::memcpy(dst + ow_lo, src + ow_lo + kj - g.pad, (ow_hi - ow_lo) * sizeof(T));
          } else {
            for (std::size_t ow = ow_lo; ow < ow_hi; ++ow) dst[ow] = src[ow * g.stride + kj - g.pad];
          }
          std::fill(dst + ow_hi, dst + g.out_w, T(0));
        }
        std::fill(row + oh_hi * g.out_w, row + pixels, T(0));
      }
    }
  }
}

// Adjoint of im2col: accumulates a (patch × pixels) buffer into an image.
template <typename T>
void col2im(const T* cols, const ConvGeometry& g, T* image) {
  const std::size_t pixels = g.pixels();
  for (std::size_t c = 0; c < g.in_c; ++c) {
    T* plane = image + c * g.in_h * g.in_w;
    for (std::size_t ki = 0; ki < g.k; ++ki) {
      std::size_t oh_lo, oh_hi;
      valid_range(g.out_h, g.in_h, g.stride, g.pad, ki, oh_lo, oh_hi);
      for (std::size_t kj = 0; kj < g.k; ++kj) {
        std::size_t ow_lo, ow_hi;
        valid_range(g.out_w, g.in_w, g.stride, g.pad, kj, ow_lo, ow_hi);
        const T* row = cols + ((c * g.k + ki) * g.k + kj) * pixels;
        for (std::size_t oh = oh_lo; oh < oh_hi; ++oh) {
          const T* src = row + oh * g.out_w;
          T* dst = plane + (oh * g.stride + ki - g.pad) * g.in_w;
          for (std::size_t ow = ow_lo; ow < ow_hi; ++ow) dst[ow * g.stride + kj - g.pad] += src[ow];
        }
      }
    }
  }
}

template <typename T>
void require_4d(const Tensor<T>& x, const char* op) {
  if (x.dim() != 4) {
    throw DimensionError(std::string(op) + " expects (B,C,H,W), got " + to_string(x.shape()));
  }
}

}  // namespace

template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias,
                 std::size_t stride, std::size_t padding) {
  require_4d(x, "conv2d");
  if (weight.dim() != 4 || weight.extent(2) != weight.extent(3)) {
    throw DimensionError("conv2d weight must be (Cout,Cin,k,k), got " + to_string(weight.shape()));
  }
  if (x.extent(1) != weight.extent(1)) {
    throw DimensionError("conv2d channel mismatch: input " + to_string(x.shape()) + " vs weight " +
                         to_string(weight.shape()));
  }
  if (stride == 0) throw ConfigError("conv2d stride must be positive");
  ConvGeometry g{x.extent(0), x.extent(1), x.extent(2), x.extent(3), weight.extent(0),
                 weight.extent(2), stride, padding, 0, 0};
  if (g.in_h + 2 * g.pad < g.k || g.in_w + 2 * g.pad < g.k) {
    throw DimensionError("conv2d input " + to_string(x.shape()) + " smaller than kernel " +
                         std::to_string(g.k));
  }
  g.out_h = (g.in_h + 2 * g.pad - g.k) / g.stride + 1;
  g.out_w = (g.in_w + 2 * g.pad - g.k) / g.stride + 1;
  const bool has_bias = bias.defined();
  if (has_bias && (bias.dim() != 1 || bias.extent(0) != g.out_c)) {
    throw DimensionError("conv2d bias must be (" + std::to_string(g.out_c) + "), got " +
                         to_string(bias.shape()));
  }

  const std::size_t patch = g.patch();
  const std::size_t pixels = g.pixels();
  const std::size_t in_size = g.in_c * g.in_h * g.in_w;
  const std::size_t out_size = g.out_c * pixels;
  std::vector<T> out(g.batch * out_size);
  std::vector<T> cols(g.pointwise() ? 0 : patch * pixels);
  ConstMapMat<T> w(weight.data().data(), g.out_c, patch);
  for (std::size_t b = 0; b < g.batch; ++b) {
    const T* img = x.data().data() + b * in_size;
    const T* colp = img;
    if (!g.pointwise()) {
      im2col(img, g, cols.data());
      colp = cols.data();
    }
    MapMat<T> y(out.data() + b * out_size, g.out_c, pixels);
    y.noalias() = w * ConstMapMat<T>(colp, patch, pixels);
    if (has_bias) {
      const auto bv = bias.data();
      for (std::size_t o = 0; o < g.out_c; ++o) y.row(o).array() += bv[o];
    }
  }

  std::vector<typename Tensor<T>::NodePtr> parents{x.node_ptr(), weight.node_ptr()};
  if (has_bias) parents.push_back(bias.node_ptr());
  return make_result<T>(
      {g.batch, g.out_c, g.out_h, g.out_w}, std::move(out), std::move(parents),
      [g, has_bias](detail::Node<T>& node) {
        auto& px = *node.parents[0];
        auto& pw = *node.parents[1];
        const std::size_t patch = g.patch();
        const std::size_t pixels = g.pixels();
        const std::size_t in_size = g.in_c * g.in_h * g.in_w;
        const std::size_t out_size = g.out_c * pixels;
        ConstMapMat<T> w(pw.data.data(), g.out_c, patch);
        std::vector<T> cols(g.pointwise() ? 0 : patch * pixels);
        std::vector<T> dcols(g.pointwise() ? 0 : patch * pixels);
        T* dw_ptr = pw.requires_grad ? pw.grad_buffer().data() : nullptr;
        T* dx_ptr = px.requires_grad ? px.grad_buffer().data() : nullptr;
        T* db_ptr = (has_bias && node.parents[2]->requires_grad)
                        ? node.parents[2]->grad_buffer().data()
                        : nullptr;
        for (std::size_t b = 0; b < g.batch; ++b) {
          ConstMapMat<T> dy(node.grad.data() + b * out_size, g.out_c, pixels);
          const T* img = px.data.data() + b * in_size;
          if (dw_ptr) {
            const T* colp = img;
            if (!g.pointwise()) {
              im2col(img, g, cols.data());
              colp = cols.data();
            }
            MapMat<T> dw(dw_ptr, g.out_c, patch);
            dw.noalias() += dy * ConstMapMat<T>(colp, patch, pixels).transpose();
          }
          if (db_ptr) {
            // Plain loop: Eigen's vectorized sum peels by alignment, which
            // would make results depend on where the buffer was allocated.
            for (std::size_t o = 0; o < g.out_c; ++o) {
              const T* row = node.grad.data() + b * out_size + o * pixels;
              T acc = T(0);
              for (std::size_t k = 0; k < pixels; ++k) acc += row[k];
              db_ptr[o] += acc;
            }
          }
          if (dx_ptr) {
            if (g.pointwise()) {
              MapMat<T> dx(dx_ptr + b * in_size, patch, pixels);
              dx.noalias() += w.transpose() * dy;
            } else {
              MapMat<T> dc(dcols.data(), patch, pixels);
              dc.noalias() = w.transpose() * dy;
              col2im(dcols.data(), g, dx_ptr + b * in_size);
            }
          }
        }
      },
      "conv2d");
}

template <typename T>
Tensor<T> batch_norm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                     BatchNormState<T>& state, Mode mode) {
  require_4d(x, "batch_norm");
  const std::size_t B = x.extent(0), C = x.extent(1), HW = x.extent(2) * x.extent(3);
  if (gamma.numel() != C || beta.numel() != C || state.running_mean.numel() != C ||
      state.running_var.numel() != C) {
    throw DimensionError("batch_norm channel mismatch: input " + to_string(x.shape()) +
                         " vs gamma " + to_string(gamma.shape()));
  }
  const std::size_t count = B * HW;
  const auto xv = x.data();
  const auto gv = gamma.data();
  const auto bv = beta.data();

  std::vector<T> mean(C), inv_std(C);
  if (mode == Mode::kTrain) {
    if (count < 2) {
      throw DomainError("batch_norm in train mode needs at least 2 values per channel, got " +
                        to_string(x.shape()));
    }
    auto rm = state.running_mean.mutable_data();
    auto rv = state.running_var.mutable_data();
    for (std::size_t c = 0; c < C; ++c) {
      double s = 0.0;
      for (std::size_t b = 0; b < B; ++b) {
        const T* p = xv.data() + (b * C + c) * HW;
        for (std::size_t i = 0; i < HW; ++i) s += p[i];
      }
      const double mu = s / static_cast<double>(count);
      double ss = 0.0;
      for (std::size_t b = 0; b < B; ++b) {
        const T* p = xv.data() + (b * C + c) * HW;
        for (std::size_t i = 0; i < HW; ++i) {
          const double d = p[i] - mu;
          ss += d * d;
        }
      }
      const double var = ss / static_cast<double>(count);
      mean[c] = static_cast<T>(mu);
      inv_std[c] = static_cast<T>(1.0 / std::sqrt(var + state.eps));
      const double unbiased = ss / static_cast<double>(count - 1);
      rm[c] = static_cast<T>((1.0 - state.momentum) * rm[c] + state.momentum * mu);
      rv[c] = static_cast<T>((1.0 - state.momentum) * rv[c] + state.momentum * unbiased);
    }
  } else {
    const auto rm = state.running_mean.data();
    const auto rv = state.running_var.data();
    for (std::size_t c = 0; c < C; ++c) {
      mean[c] = rm[c];
      inv_std[c] = static_cast<T>(1.0 / std::sqrt(static_cast<double>(rv[c]) + state.eps));
    }
  }

  std::vector<T> out(xv.size());
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t c = 0; c < C; ++c) {
      const std::size_t off = (b * C + c) * HW;
      const T a = gv[c] * inv_std[c];
      const T shift = bv[c] - a * mean[c];
      for (std::size_t i = 0; i < HW; ++i) out[off + i] = a * xv[off + i] + shift;
    }
  }

  const bool train = mode == Mode::kTrain;
  return make_result<T>(
      x.shape(), std::move(out), {x.node_ptr(), gamma.node_ptr(), beta.node_ptr()},
      [B, C, HW, count, train, mean = std::move(mean), inv_std = std::move(inv_std)](
          detail::Node<T>& node) {
        auto& px = *node.parents[0];
        auto& pg = *node.parents[1];
        auto& pb = *node.parents[2];
        const auto& dy = node.grad;
        for (std::size_t c = 0; c < C; ++c) {
          // Σ dy and Σ dy·x̂ over the channel.
          double sum_dy = 0.0, sum_dy_xhat = 0.0;
          for (std::size_t b = 0; b < B; ++b) {
            const std::size_t off = (b * C + c) * HW;
            for (std::size_t i = 0; i < HW; ++i) {
              const double xhat = (px.data[off + i] - mean[c]) * inv_std[c];
              sum_dy += dy[off + i];
              sum_dy_xhat += dy[off + i] * xhat;
            }
          }
          if (pg.requires_grad) pg.grad_buffer()[c] += static_cast<T>(sum_dy_xhat);
          if (pb.requires_grad) pb.grad_buffer()[c] += static_cast<T>(sum_dy);
          if (!px.requires_grad) continue;
          auto& dx = px.grad_buffer();
          const double g = pg.data[c];
          const double is = inv_std[c];
          if (train) {
            const double n = static_cast<double>(count);
            const double mdy = sum_dy / n;
            const double mdyx = sum_dy_xhat / n;
            for (std::size_t b = 0; b < B; ++b) {
              const std::size_t off = (b * C + c) * HW;
              for (std::size_t i = 0; i < HW; ++i) {
                const double xhat = (px.data[off + i] - mean[c]) * is;
                dx[off + i] += static_cast<T>(g * is * (dy[off + i] - mdy - xhat * mdyx));
              }
            }
          } else {
            for (std::size_t b = 0; b < B; ++b) {
              const std::size_t off = (b * C + c) * HW;
              for (std::size_t i = 0; i < HW; ++i) dx[off + i] += static_cast<T>(g * is * dy[off + i]);
            }
          }
        }
      },
      "batch_norm");
}

template <typename T>
Tensor<T> relu(const Tensor<T>& x) {
  const auto xv = x.data();
  std::vector<T> out(xv.size());
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = xv[i] > T(0) ? xv[i] : T(0);
  return make_result<T>(
      x.shape(), std::move(out), {x.node_ptr()},
      [](detail::Node<T>& node) {
        auto& p = *node.parents[0];
        auto& g = p.grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i) {
          if (p.data[i] > T(0)) g[i] += node.grad[i];
        }
      },
      "relu");
}

template <typename T>
Tensor<T> maxpool2x2(const Tensor<T>& x) {
  require_4d(x, "maxpool2x2");
  const std::size_t B = x.extent(0), C = x.extent(1), H = x.extent(2), W = x.extent(3);
  if (H % 2 != 0 || W % 2 != 0) {
    throw DimensionError("maxpool2x2 needs even spatial extents, got " + to_string(x.shape()));
  }
  const std::size_t oh = H / 2, ow = W / 2;
  const auto xv = x.data();
  std::vector<T> out(B * C * oh * ow);
  auto argmax = std::make_shared<std::vector<std::uint32_t>>(out.size());
  for (std::size_t plane = 0; plane < B * C; ++plane) {
    const T* src = xv.data() + plane * H * W;
    for (std::size_t i = 0; i < oh; ++i) {
      for (std::size_t j = 0; j < ow; ++j) {
        const std::size_t cand[4] = {(2 * i) * W + 2 * j, (2 * i) * W + 2 * j + 1,
                                     (2 * i + 1) * W + 2 * j, (2 * i + 1) * W + 2 * j + 1};
        std::size_t best = cand[0];
        for (int q = 1; q < 4; ++q) {
          if (src[cand[q]] > src[best]) best = cand[q];
        }
        const std::size_t o = (plane * oh + i) * ow + j;
        out[o] = src[best];
        (*argmax)[o] = static_cast<std::uint32_t>(best);
      }
    }
  }
  return make_result<T>(
      {B, C, oh, ow}, std::move(out), {x.node_ptr()},
      [argmax, H, W, oh, ow](detail::Node<T>& node) {
        auto& g = node.parents[0]->grad_buffer();
        const std::size_t planes = node.grad.size() / (oh * ow);
        for (std::size_t plane = 0; plane < planes; ++plane) {
          for (std::size_t k = 0; k < oh * ow; ++k) {
            const std::size_t o = plane * oh * ow + k;
            g[plane * H * W + (*argmax)[o]] += node.grad[o];
          }
        }
      },
      "maxpool2x2");
}

template <typename T>
Tensor<T> upsample_nearest2x(const Tensor<T>& x) {
  require_4d(x, "upsample_nearest2x");
  const std::size_t B = x.extent(0), C = x.extent(1), H = x.extent(2), W = x.extent(3);
  const std::size_t OH = 2 * H, OW = 2 * W;
  const auto xv = x.data();
  std::vector<T> out(B * C * OH * OW);
  for (std::size_t plane = 0; plane < B * C; ++plane) {
    const T* src = xv.data() + plane * H * W;
    T* dst = out.data() + plane * OH * OW;
    for (std::size_t i = 0; i < OH; ++i) {
      const T* srow = src + (i / 2) * W;
      T* drow = dst + i * OW;
      for (std::size_t j = 0; j < OW; ++j) drow[j] = srow[j / 2];
    }
  }
  return make_result<T>(
      {B, C, OH, OW}, std::move(out), {x.node_ptr()},
      [H, W, OH, OW](detail::Node<T>& node) {
        auto& g = node.parents[0]->grad_buffer();
        const std::size_t planes = g.size() / (H * W);
        for (std::size_t plane = 0; plane < planes; ++plane) {
          const T* src = node.grad.data() + plane * OH * OW;
          T* dst = g.data() + plane * H * W;
          for (std::size_t i = 0; i < OH; ++i) {
            for (std::size_t j = 0; j < OW; ++j) dst[(i / 2) * W + j / 2] += src[i * OW + j];
          }
        }
      },
      "upsample_nearest2x");
}

// ---------------------------------------------------------------------------
// Layer classes

template <typename T>
Conv2d<T>::Conv2d(std::size_t in_channels, std::size_t out_channels, std::size_t kernel,
                  std::size_t stride, std::mt19937_64& rng, std::optional<double> weight_std)
    : in_(in_channels),
      out_(out_channels),
      kernel_(kernel),
      stride_(stride),
      padding_(same_padding(kernel)) {
  if (in_ == 0 || out_ == 0) throw ConfigError("conv channel counts must be positive");
  if (stride_ != 1 && stride_ != 2) throw ConfigError("conv stride must be 1 or 2");
  const std::size_t fan_in = in_ * kernel_ * kernel_;
  std::normal_distribution<double> normal(0.0,
                                          weight_std.value_or(std::sqrt(2.0 / static_cast<double>(fan_in))));
  std::vector<T> w(out_ * fan_in);
  for (T& v : w) v = static_cast<T>(normal(rng));
  weight_ = Tensor<T>::from_data({out_, in_, kernel_, kernel_}, std::move(w), true);
  bias_ = Tensor<T>::zeros({out_}, true);
}

template <typename T>
Tensor<T> Conv2d<T>::forward(const Tensor<T>& x, Mode) {
  return conv2d(x, weight_, bias_, stride_, padding_);
}

template <typename T>
LayerRow Conv2d<T>::row() const {
  const std::string k = std::to_string(kernel_) + "×" + std::to_string(kernel_);
  return {stride_ == 2 ? "Conv-S2" : "Conv", out_, k};
}

template <typename T>
void Conv2d<T>::named_parameters(const std::string& prefix, std::vector<NamedTensor<T>>& out) const {
  out.push_back({prefix + "weight", weight_});
  out.push_back({prefix + "bias", bias_});
}

template <typename T>
BatchNorm2d<T>::BatchNorm2d(std::size_t channels, double momentum, double eps)
    : channels_(channels),
      gamma_(Tensor<T>::full({channels}, T(1), true)),
      beta_(Tensor<T>::zeros({channels}, true)) {
  state_.running_mean = Tensor<T>::zeros({channels});
  state_.running_var = Tensor<T>::full({channels}, T(1));
  state_.momentum = momentum;
  state_.eps = eps;
}

template <typename T>
Tensor<T> BatchNorm2d<T>::forward(const Tensor<T>& x, Mode mode) {
  return batch_norm(x, gamma_, beta_, state_, mode);
}

template <typename T>
void BatchNorm2d<T>::named_parameters(const std::string& prefix,
                                      std::vector<NamedTensor<T>>& out) const {
  out.push_back({prefix + "gamma", gamma_});
  out.push_back({prefix + "beta", beta_});
}

template <typename T>
void BatchNorm2d<T>::named_buffers(const std::string& prefix, std::vector<NamedTensor<T>>& out) const {
  out.push_back({prefix + "running_mean", state_.running_mean});
  out.push_back({prefix + "running_var", state_.running_var});
}

template <typename T>
ConvBlock<T>::ConvBlock(std::size_t in_channels, std::size_t out_channels, std::size_t kernel,
                        std::mt19937_64& rng)
    : conv_(in_channels, out_channels, kernel, 1, rng), bn_(out_channels) {}

template <typename T>
Tensor<T> ConvBlock<T>::forward(const Tensor<T>& x, Mode mode) {
  return relu(bn_.forward(conv_.forward(x, mode), mode));
}

template <typename T>
LayerRow ConvBlock<T>::row() const {
  LayerRow r = conv_.row();
  r.kind = "ConvBlock";
  return r;
}

template <typename T>
void ConvBlock<T>::named_parameters(const std::string& prefix, std::vector<NamedTensor<T>>& out) const {
  conv_.named_parameters(prefix + "conv.", out);
  bn_.named_parameters(prefix + "bn.", out);
}

template <typename T>
void ConvBlock<T>::named_buffers(const std::string& prefix, std::vector<NamedTensor<T>>& out) const {
  bn_.named_buffers(prefix + "bn.", out);
}

namespace {
std::size_t bottleneck_width(std::size_t out, std::size_t ratio) {
  if (ratio == 0 || out / ratio == 0) {
    throw ConfigError("ResBlock width " + std::to_string(out) + " too small for bottleneck ratio " +
                      std::to_string(ratio));
  }
  return out / ratio;
}
}  // namespace

template <typename T>
ResBlock<T>::ResBlock(std::size_t in_channels, std::size_t out_channels,
                      std::size_t bottleneck_ratio, std::mt19937_64& rng)
    : in_(in_channels),
      out_(out_channels),
      compress_(in_channels, bottleneck_width(out_channels, bottleneck_ratio), 1, 1, rng),
      block1_(compress_.out_channels(), compress_.out_channels(), 3, rng),
      block2_(compress_.out_channels(), compress_.out_channels(), 3, rng),
      expand_(compress_.out_channels(), out_channels, 1, 1, rng) {
  if (in_ != out_) projection_ = std::make_unique<Conv2d<T>>(in_, out_, 1, 1, rng);
}

template <typename T>
Tensor<T> ResBlock<T>::forward(const Tensor<T>& x, Mode mode) {
  if (x.dim() != 4 || x.extent(1) != in_) {
    throw DimensionError("ResBlock expects " + std::to_string(in_) + " input channels, got " +
                         to_string(x.shape()));
  }
  Tensor<T> r = compress_.forward(x, mode);
  r = block1_.forward(r, mode);
  r = block2_.forward(r, mode);
  r = expand_.forward(r, mode);
  const Tensor<T> skip = projection_ ? projection_->forward(x, mode) : x;
  return add(skip, r);
}

template <typename T>
void ResBlock<T>::named_parameters(const std::string& prefix, std::vector<NamedTensor<T>>& out) const {
  compress_.named_parameters(prefix + "compress.", out);
  block1_.named_parameters(prefix + "block1.", out);
  block2_.named_parameters(prefix + "block2.", out);
  expand_.named_parameters(prefix + "expand.", out);
  if (projection_) projection_->named_parameters(prefix + "skip.", out);
}

template <typename T>
void ResBlock<T>::named_buffers(const std::string& prefix, std::vector<NamedTensor<T>>& out) const {
  block1_.named_buffers(prefix + "block1.", out);
  block2_.named_buffers(prefix + "block2.", out);
}

#define TCLNET_INSTANTIATE(T)                                                                   \
  template Tensor<T> conv2d<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,            \
                               std::size_t, std::size_t);                                       \
  template Tensor<T> batch_norm<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,        \
                                   BatchNormState<T>&, Mode);                                   \
  template Tensor<T> relu<T>(const Tensor<T>&);                                                 \
  template Tensor<T> maxpool2x2<T>(const Tensor<T>&);                                           \
  template Tensor<T> upsample_nearest2x<T>(const Tensor<T>&);                                   \
  template class Conv2d<T>;                                                                     \
  template class BatchNorm2d<T>;                                                                \
  template class ConvBlock<T>;                                                                  \
  template class ResBlock<T>;

TCLNET_INSTANTIATE(float)
TCLNET_INSTANTIATE(double)

#undef TCLNET_INSTANTIATE

}  // namespace tclnet
