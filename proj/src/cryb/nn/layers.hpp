// Copyright 2026 The cryb Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Dense>

#include "cryb/nn/tape.hpp"

namespace cryb::nn {

enum class Mode { Train, Eval };

/// Per-channel running statistics of a batch-norm layer.
template <typename T>
struct RunningStats {
  Tensor<T> mean;
  Tensor<T> var;

  RunningStats() = default;
  explicit RunningStats(int channels) : mean({channels}, T(0)), var({channels}, T(1)) {}
};

inline constexpr double kBatchNormEps = 1e-5;
inline constexpr double kBatchNormMomentum = 0.1;

namespace detail {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapMat = Eigen::Map<RowMat<T>>;
template <typename T>
using ConstMapMat = Eigen::Map<const RowMat<T>>;

inline void expect(bool ok, const std::string& what) { require(ok, Errc::ShapeMismatch, what); }

// cols[(c*9 + ky*3 + kx), (n*H*W + y*W + x)] = in[n, c, y+ky-1, x+kx-1], zero outside.
template <typename T>
void im2col3x3(const T* in, int n_batch, int channels, int h, int w, T* cols) {
  const std::size_t hw = static_cast<std::size_t>(h) * w;
  const std::size_t row_len = static_cast<std::size_t>(n_batch) * hw;
  for (int c = 0; c < channels; ++c)
    for (int ky = 0; ky < 3; ++ky)
      for (int kx = 0; kx < 3; ++kx) {
        T* row = cols + static_cast<std::size_t>(c * 9 + ky * 3 + kx) * row_len;
        for (int n = 0; n < n_batch; ++n) {
          const T* plane = in + (static_cast<std::size_t>(n) * channels + c) * hw;
          T* dst = row + static_cast<std::size_t>(n) * hw;
          for (int y = 0; y < h; ++y) {
            const int sy = y + ky - 1;
            T* drow = dst + static_cast<std::size_t>(y) * w;
            if (sy < 0 || sy >= h) {
              std::fill(drow, drow + w, T(0));
              continue;
            }
            const T* srow = plane + static_cast<std::size_t>(sy) * w;
            for (int x = 0; x < w; ++x) {
              const int sx = x + kx - 1;
              drow[x] = (sx < 0 || sx >= w) ? T(0) : srow[sx];
            }
          }
        }
      }
}

template <typename T>
void col2im3x3(const T* cols, int n_batch, int channels, int h, int w, T* out) {
  const std::size_t hw = static_cast<std::size_t>(h) * w;
  const std::size_t row_len = static_cast<std::size_t>(n_batch) * hw;
  for (int c = 0; c < channels; ++c)
    for (int ky = 0; ky < 3; ++ky)
      for (int kx = 0; kx < 3; ++kx) {
        const T* row = cols + static_cast<std::size_t>(c * 9 + ky * 3 + kx) * row_len;
        for (int n = 0; n < n_batch; ++n) {
          T* plane = out + (static_cast<std::size_t>(n) * channels + c) * hw;
          const T* src = row + static_cast<std::size_t>(n) * hw;
          for (int y = 0; y < h; ++y) {
            const int sy = y + ky - 1;
            if (sy < 0 || sy >= h) continue;
            T* orow = plane + static_cast<std::size_t>(sy) * w;
            const T* srow = src + static_cast<std::size_t>(y) * w;
            for (int x = 0; x < w; ++x) {
              const int sx = x + kx - 1;
              if (sx >= 0 && sx < w) orow[sx] += srow[x];
            }
          }
        }
      }
}

}  // namespace detail

/// 3x3 cross-correlation, stride 1, zero padding 1, plus bias.
/// x [N, C_in, H, W], weight [C_out, C_in, 3, 3], bias [C_out] -> [N, C_out, H, W].
/// Lowered per sample to im2col + GEMM so the column buffer stays in cache.
template <typename T>
Var conv2d(Tape<T>& tape, Var x, Var weight, Var bias) {
  const Tensor<T>& xv = tape.value(x);
  const Tensor<T>& wv = tape.value(weight);
  const Tensor<T>& bv = tape.value(bias);
  detail::expect(xv.rank() == 4, "conv2d input must be [N,C,H,W], got " + shape_string(xv.shape()));
  detail::expect(wv.rank() == 4 && wv.dim(2) == 3 && wv.dim(3) == 3 && wv.dim(1) == xv.dim(1),
                 "conv2d weight " + shape_string(wv.shape()) + " incompatible with input " + shape_string(xv.shape()));
  detail::expect(bv.rank() == 1 && bv.dim(0) == wv.dim(0), "conv2d bias must be [C_out]");
  const int n = xv.dim(0), c_in = xv.dim(1), h = xv.dim(2), w = xv.dim(3), c_out = wv.dim(0);
  const Eigen::Index hw = static_cast<Eigen::Index>(h) * w;
  const Eigen::Index k = static_cast<Eigen::Index>(c_in) * 9;
  const std::size_t in_stride = static_cast<std::size_t>(c_in) * hw;
  const std::size_t out_stride = static_cast<std::size_t>(c_out) * hw;

  Tensor<T> out({n, c_out, h, w});
  {
    detail::RowMat<T> cols(k, hw);
    detail::ConstMapMat<T> wm(wv.raw(), c_out, k);
    const Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, 1>> bias_vec(bv.raw(), c_out);
    for (int b = 0; b < n; ++b) {
      detail::im2col3x3(xv.raw() + b * in_stride, 1, c_in, h, w, cols.data());
      detail::MapMat<T> ym(out.raw() + b * out_stride, c_out, hw);
      ym.noalias() = wm * cols;
      ym.colwise() += bias_vec;
    }
  }

  const bool need = tape.needs_grad(x) || tape.needs_grad(weight) || tape.needs_grad(bias);
  return tape.push(std::move(out), need, [=](Tape<T>& t, Var self) {
    const Tensor<T>& gy = t.grad(self);
    const Tensor<T>& xin = t.value(x);
    detail::ConstMapMat<T> wm(t.value(weight).raw(), c_out, k);
    const bool need_w = t.needs_grad(weight), need_b = t.needs_grad(bias), need_x = t.needs_grad(x);
    detail::RowMat<T> cols(k, hw);
    detail::RowMat<T> gcols(need_x ? k : 0, need_x ? hw : 0);
    for (int b = 0; b < n; ++b) {
      detail::ConstMapMat<T> gym(gy.raw() + b * out_stride, c_out, hw);
      if (need_b) {
        Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, 1>> gb(t.grad(bias).raw(), c_out);
        gb += gym.rowwise().sum();
      }
      if (need_w) {
        detail::im2col3x3(xin.raw() + b * in_stride, 1, c_in, h, w, cols.data());
        detail::MapMat<T> gw(t.grad(weight).raw(), c_out, k);
        gw.noalias() += gym * cols.transpose();
      }
      if (need_x) {
        gcols.noalias() = wm.transpose() * gym;
        detail::col2im3x3(gcols.data(), 1, c_in, h, w, t.grad(x).raw() + b * in_stride);
      }
    }
  });
}

namespace detail {

template <typename T>
using ArrayMap = Eigen::Map<Eigen::Array<T, Eigen::Dynamic, 1>>;
template <typename T>
using ConstArrayMap = Eigen::Map<const Eigen::Array<T, Eigen::Dynamic, 1>>;

template <typename T>
Var batchnorm_impl(Tape<T>& tape, Var x, Var gamma, Var beta, const RunningStats<T>& stats, RunningStats<T>* update,
                   Mode mode) {
  const Tensor<T>& xv = tape.value(x);
  expect(xv.rank() >= 2, "batchnorm input needs a channel dimension");
  const int n = xv.dim(0), c = xv.dim(1);
  const Eigen::Index spatial = static_cast<Eigen::Index>(xv.numel() / (static_cast<std::size_t>(n) * c));
  const double count = static_cast<double>(n) * static_cast<double>(spatial);
  const auto channels = static_cast<std::size_t>(c);
  expect(tape.value(gamma).numel() == channels && tape.value(beta).numel() == channels &&
             stats.mean.numel() == channels && stats.var.numel() == channels,
         "batchnorm parameters do not match " + std::to_string(c) + " channels");
  const Tensor<T>& g = tape.value(gamma);
  const Tensor<T>& bt = tape.value(beta);
  // Contiguous run of `spatial` values for sample b, channel ch.
  auto seg = [&xv, c, spatial](int b, int ch) {
    return ConstArrayMap<T>(xv.raw() + (static_cast<Eigen::Index>(b) * c + ch) * spatial, spatial);
  };

  std::vector<T> inv_std(channels);
  std::vector<T> mean(channels);
  for (int ch = 0; ch < c; ++ch) {
    double mu, var;
    if (mode == Mode::Train) {
      double s = 0.0;
      for (int b = 0; b < n; ++b) s += static_cast<double>(seg(b, ch).sum());
      mu = s / count;
      double ss = 0.0;
      for (int b = 0; b < n; ++b) ss += static_cast<double>((seg(b, ch) - static_cast<T>(mu)).square().sum());
      var = ss / count;
      if (update != nullptr) {
        const double unbiased = count > 1 ? ss / (count - 1.0) : var;
        auto& rm = update->mean[static_cast<std::size_t>(ch)];
        auto& rv = update->var[static_cast<std::size_t>(ch)];
        rm = static_cast<T>((1.0 - kBatchNormMomentum) * rm + kBatchNormMomentum * mu);
        rv = static_cast<T>((1.0 - kBatchNormMomentum) * rv + kBatchNormMomentum * unbiased);
      }
    } else {
      mu = stats.mean[static_cast<std::size_t>(ch)];
      var = stats.var[static_cast<std::size_t>(ch)];
    }
    mean[static_cast<std::size_t>(ch)] = static_cast<T>(mu);
    inv_std[static_cast<std::size_t>(ch)] = static_cast<T>(1.0 / std::sqrt(var + kBatchNormEps));
  }

  Tensor<T> out(xv.shape());
  for (int b = 0; b < n; ++b)
    for (int ch = 0; ch < c; ++ch) {
      const auto k = static_cast<std::size_t>(ch);
      const T scale = g[k] * inv_std[k];
      const T shift = bt[k] - mean[k] * scale;
      ArrayMap<T>(out.raw() + (static_cast<Eigen::Index>(b) * c + ch) * spatial, spatial) = seg(b, ch) * scale + shift;
    }

  const bool need = tape.needs_grad(x) || tape.needs_grad(gamma) || tape.needs_grad(beta);
  if (!need || !tape.recording()) return tape.push(std::move(out), false, {});
  return tape.push(std::move(out), true,
                   [=, mean = std::move(mean), inv_std = std::move(inv_std)](Tape<T>& t, Var self) {
    const Tensor<T>& gy = t.grad(self);
    const Tensor<T>& xin = t.value(x);
    const Tensor<T>& gv = t.value(gamma);
    auto offset = [c, spatial](int b, int ch) { return (static_cast<Eigen::Index>(b) * c + ch) * spatial; };
    for (int ch = 0; ch < c; ++ch) {
      const auto k = static_cast<std::size_t>(ch);
      const T mu = mean[k], is = inv_std[k];
      // sum(dy) and sum(dy * xhat), with xhat = (x - mu) * is.
      double sum_dy = 0.0, sum_dy_xhat = 0.0;
      for (int b = 0; b < n; ++b) {
        const ConstArrayMap<T> dy(gy.raw() + offset(b, ch), spatial);
        const ConstArrayMap<T> xs(xin.raw() + offset(b, ch), spatial);
        sum_dy += static_cast<double>(dy.sum());
        sum_dy_xhat += static_cast<double>((dy * (xs - mu)).sum()) * static_cast<double>(is);
      }
      if (t.needs_grad(gamma)) t.grad(gamma)[k] += static_cast<T>(sum_dy_xhat);
      if (t.needs_grad(beta)) t.grad(beta)[k] += static_cast<T>(sum_dy);
      if (!t.needs_grad(x)) continue;
      Tensor<T>& gx = t.grad(x);
      const double gg = gv[k];
      for (int b = 0; b < n; ++b) {
        const ConstArrayMap<T> dy(gy.raw() + offset(b, ch), spatial);
        const ConstArrayMap<T> xs(xin.raw() + offset(b, ch), spatial);
        ArrayMap<T> dx(gx.raw() + offset(b, ch), spatial);
        if (mode == Mode::Train) {
          // dx = gamma * is / m * (m * dy - sum_dy - xhat * sum_dy_xhat)
          const T a = static_cast<T>(gg * is);
          const T b0 = static_cast<T>(gg * is * sum_dy / count);
          const T b1 = static_cast<T>(gg * is * sum_dy_xhat / count * is);
          dx += a * dy - b0 - (xs - mu) * b1;
        } else {
          dx += static_cast<T>(gg * is) * dy;
        }
      }
    }
  });
}

}  // namespace detail

/// Batch normalization over every dim except 1 (channels). Train mode
/// normalizes by batch statistics and folds them into `stats` (momentum 0.1,
/// unbiased variance); eval mode normalizes by `stats`. Epsilon 1e-5.
template <typename T>
Var batchnorm(Tape<T>& tape, Var x, Var gamma, Var beta, RunningStats<T>& stats, Mode mode) {
  return detail::batchnorm_impl(tape, x, gamma, beta, stats, mode == Mode::Train ? &stats : nullptr, mode);
}

template <typename T>
Var batchnorm_eval(Tape<T>& tape, Var x, Var gamma, Var beta, const RunningStats<T>& stats) {
  return detail::batchnorm_impl(tape, x, gamma, beta, stats, static_cast<RunningStats<T>*>(nullptr), Mode::Eval);
}

template <typename T>
Var relu(Tape<T>& tape, Var x) {
  const Tensor<T>& xv = tape.value(x);
  Tensor<T> out(xv.shape());
  for (std::size_t i = 0; i < xv.numel(); ++i) out[i] = xv[i] > T(0) ? xv[i] : T(0);
  return tape.push(std::move(out), tape.needs_grad(x), [=](Tape<T>& t, Var self) {
    const Tensor<T>& gy = t.grad(self);
    const Tensor<T>& xin = t.value(x);
    Tensor<T>& gx = t.grad(x);
    for (std::size_t i = 0; i < gy.numel(); ++i) gx[i] += xin[i] > T(0) ? gy[i] : T(0);
  });
}

template <typename T>
Var add(Tape<T>& tape, Var a, Var b) {
  const Tensor<T>& av = tape.value(a);
  const Tensor<T>& bv = tape.value(b);
  detail::expect(av.same_shape(bv), "add of " + shape_string(av.shape()) + " and " + shape_string(bv.shape()));
  Tensor<T> out(av.shape());
  for (std::size_t i = 0; i < av.numel(); ++i) out[i] = av[i] + bv[i];
  return tape.push(std::move(out), tape.needs_grad(a) || tape.needs_grad(b), [=](Tape<T>& t, Var self) {
    const Tensor<T>& gy = t.grad(self);
    for (Var v : {a, b}) {
      if (!t.needs_grad(v)) continue;
      Tensor<T>& g = t.grad(v);
      for (std::size_t i = 0; i < gy.numel(); ++i) g[i] += gy[i];
    }
  });
}

/// Non-overlapping average pooling with a kh x kw window; trailing rows and
/// columns that do not fill a window are dropped.
template <typename T>
Var avg_pool(Tape<T>& tape, Var x, int kh, int kw) {
  const Tensor<T>& xv = tape.value(x);
  detail::expect(xv.rank() == 4, "avg_pool input must be [N,C,H,W]");
  require(kh > 0 && kw > 0, Errc::BadShape, "pool window must be positive");
  const int n = xv.dim(0), c = xv.dim(1), h = xv.dim(2), w = xv.dim(3);
  const int oh = h / kh, ow = w / kw;
  detail::expect(oh > 0 && ow > 0, "avg_pool window larger than input " + shape_string(xv.shape()));
  Tensor<T> out({n, c, oh, ow});
  const T scale = T(1) / static_cast<T>(kh * kw);
  for (int p = 0; p < n * c; ++p) {
    const T* src = xv.raw() + static_cast<std::size_t>(p) * h * w;
    T* dst = out.raw() + static_cast<std::size_t>(p) * oh * ow;
    for (int y = 0; y < oh; ++y)
      for (int xo = 0; xo < ow; ++xo) {
        T acc = T(0);
        for (int dy = 0; dy < kh; ++dy)
          for (int dx = 0; dx < kw; ++dx) acc += src[(y * kh + dy) * w + xo * kw + dx];
        dst[y * ow + xo] = acc * scale;
      }
  }
  return tape.push(std::move(out), tape.needs_grad(x), [=](Tape<T>& t, Var self) {
    const Tensor<T>& gy = t.grad(self);
    Tensor<T>& gx = t.grad(x);
    for (int p = 0; p < n * c; ++p) {
      const T* src = gy.raw() + static_cast<std::size_t>(p) * oh * ow;
      T* dst = gx.raw() + static_cast<std::size_t>(p) * h * w;
      for (int y = 0; y < oh; ++y)
        for (int dy = 0; dy < kh; ++dy) {
          T* drow = dst + static_cast<std::size_t>(y * kh + dy) * w;
          const T* srow = src + static_cast<std::size_t>(y) * ow;
          for (int xo = 0; xo < ow; ++xo) {
            const T g = srow[xo] * scale;
            for (int dx = 0; dx < kw; ++dx) drow[xo * kw + dx] += g;
          }
        }
    }
  });
}

/// [N, C, H, W] -> [N, C], mean over the spatial dims.
template <typename T>
Var global_avg_pool(Tape<T>& tape, Var x) {
  const Tensor<T>& xv = tape.value(x);
  detail::expect(xv.rank() == 4, "global_avg_pool input must be [N,C,H,W]");
  const int n = xv.dim(0), c = xv.dim(1);
  const std::size_t hw = static_cast<std::size_t>(xv.dim(2)) * xv.dim(3);
  Tensor<T> out({n, c});
  for (std::size_t p = 0; p < static_cast<std::size_t>(n) * c; ++p) {
    double acc = 0.0;
    for (std::size_t i = 0; i < hw; ++i) acc += xv[p * hw + i];
    out[p] = static_cast<T>(acc / static_cast<double>(hw));
  }
  return tape.push(std::move(out), tape.needs_grad(x), [=](Tape<T>& t, Var self) {
    const Tensor<T>& gy = t.grad(self);
    Tensor<T>& gx = t.grad(x);
    const T scale = T(1) / static_cast<T>(hw);
    for (std::size_t p = 0; p < static_cast<std::size_t>(n) * c; ++p)
      for (std::size_t i = 0; i < hw; ++i) gx[p * hw + i] += gy[p] * scale;
  });
}

/// x [N, D], weight [K, D], bias [K] -> x * weight^T + bias, [N, K].
template <typename T>
Var linear(Tape<T>& tape, Var x, Var weight, Var bias) {
  const Tensor<T>& xv = tape.value(x);
  const Tensor<T>& wv = tape.value(weight);
  const Tensor<T>& bv = tape.value(bias);
  detail::expect(xv.rank() == 2 && wv.rank() == 2 && wv.dim(1) == xv.dim(1) && bv.rank() == 1 &&
                     bv.dim(0) == wv.dim(0),
                 "linear: input " + shape_string(xv.shape()) + ", weight " + shape_string(wv.shape()) + ", bias " +
                     shape_string(bv.shape()));
  const int n = xv.dim(0), d = xv.dim(1), k = wv.dim(0);
  Tensor<T> out({n, k});
  detail::MapMat<T> om(out.raw(), n, k);
  om.noalias() = detail::ConstMapMat<T>(xv.raw(), n, d) * detail::ConstMapMat<T>(wv.raw(), k, d).transpose();
  for (int r = 0; r < n; ++r)
    for (int j = 0; j < k; ++j) om(r, j) += bv[static_cast<std::size_t>(j)];
  const bool need = tape.needs_grad(x) || tape.needs_grad(weight) || tape.needs_grad(bias);
  return tape.push(std::move(out), need, [=](Tape<T>& t, Var self) {
    detail::ConstMapMat<T> gy(t.grad(self).raw(), n, k);
    if (t.needs_grad(bias)) {
      Tensor<T>& gb = t.grad(bias);
      for (int j = 0; j < k; ++j) gb[static_cast<std::size_t>(j)] += gy.col(j).sum();
    }
    if (t.needs_grad(weight)) {
      detail::MapMat<T> gw(t.grad(weight).raw(), k, d);
      gw.noalias() += gy.transpose() * detail::ConstMapMat<T>(t.value(x).raw(), n, d);
    }
    if (t.needs_grad(x)) {
      detail::MapMat<T> gx(t.grad(x).raw(), n, d);
      gx.noalias() += gy * detail::ConstMapMat<T>(t.value(weight).raw(), k, d);
    }
  });
}

/// Weston-Watkins multi-class hinge, averaged over the batch:
/// mean_n sum_{j != y_n} max(0, 1 + s_nj - s_ny). logits [N, K] -> scalar.
template <typename T>
Var hinge_loss(Tape<T>& tape, Var logits, std::span<const int> labels) {
  const Tensor<T>& s = tape.value(logits);
  detail::expect(s.rank() == 2, "hinge_loss expects [N,K] logits");
  const int n = s.dim(0), k = s.dim(1);
  require(k >= 2, Errc::BadShape, "hinge_loss needs at least two classes");
  detail::expect(static_cast<int>(labels.size()) == n, "hinge_loss label count does not match batch");
  for (int y : labels)
    require(y >= 0 && y < k, Errc::BadClassIndex, "label " + std::to_string(y) + " outside 0.." + std::to_string(k - 1));

  double total = 0.0;
  for (int r = 0; r < n; ++r) {
    const T* row = s.raw() + static_cast<std::size_t>(r) * k;
    const int y = labels[static_cast<std::size_t>(r)];
    for (int j = 0; j < k; ++j)
      if (j != y) total += std::max(0.0, 1.0 + static_cast<double>(row[j]) - row[y]);
  }
  Tensor<T> out({1}, static_cast<T>(total / n));
  std::vector<int> ys(labels.begin(), labels.end());
  return tape.push(std::move(out), tape.needs_grad(logits), [=, ys = std::move(ys)](Tape<T>& t, Var self) {
    const T g = t.grad(self)[0] / static_cast<T>(n);
    const Tensor<T>& sv = t.value(logits);
    Tensor<T>& gs = t.grad(logits);
    for (int r = 0; r < n; ++r) {
      const T* row = sv.raw() + static_cast<std::size_t>(r) * k;
      T* grow = gs.raw() + static_cast<std::size_t>(r) * k;
      const int y = ys[static_cast<std::size_t>(r)];
      for (int j = 0; j < k; ++j)
        if (j != y && T(1) + row[j] - row[y] > T(0)) {
          grow[j] += g;
          grow[y] -= g;
        }
    }
  });
}

/// Sum of all entries, as a scalar.
template <typename T>
Var sum(Tape<T>& tape, Var x) {
  const Tensor<T>& xv = tape.value(x);
  double acc = 0.0;
  for (std::size_t i = 0; i < xv.numel(); ++i) acc += xv[i];
  return tape.push(Tensor<T>({1}, static_cast<T>(acc)), tape.needs_grad(x), [=](Tape<T>& t, Var self) {
    const T g = t.grad(self)[0];
    Tensor<T>& gx = t.grad(x);
    for (std::size_t i = 0; i < gx.numel(); ++i) gx[i] += g;
  });
}

}  // namespace cryb::nn
