#pragma once

#include "kiqt/rng.hpp"
#include "kiqt/types.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace kiqt {

/// Multi-channel feature map: row c holds channel c flattened row-major,
/// so data is (C, H*W).
template <typename Scalar>
struct FeatureMapT {
  PlaneT<Scalar> data;
  Index h = 0, w = 0;

  FeatureMapT() = default;
  FeatureMapT(Index channels, Index h_, Index w_) : data(PlaneT<Scalar>::Zero(channels, h_ * w_)), h(h_), w(w_) {}

  Index channels() const { return data.rows(); }
};

using FeatureMap = FeatureMapT<float>;

/// Flat view of one parameter tensor and its gradient buffer.
template <typename Scalar>
struct ParamRef {
  std::string name;
  Scalar* value = nullptr;
  Scalar* grad = nullptr;
  Index rows = 0, cols = 0;

  Index size() const { return rows * cols; }
};

template <typename Scalar>
using RowVectorT = Eigen::Matrix<Scalar, 1, Eigen::Dynamic, Eigen::RowMajor>;

using ArgmaxGrid = Eigen::Matrix<std::int32_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

namespace detail {

/// im2col for odd square kernels with same-size zero padding. Fills
/// cols(in_ch*k*k, rows_span*W) for output rows [row0, row0+rows_span).
template <typename Scalar>
void im2col(const FeatureMapT<Scalar>& x, int ksize, Index row0, Index rows_span, PlaneT<Scalar>& cols) {
  const Index w = x.w, h = x.h, half = ksize / 2;
  const Index n = rows_span * w;
  cols.setZero(x.channels() * ksize * ksize, n);
  for (Index c = 0; c < x.channels(); ++c) {
    const Scalar* src_plane = x.data.data() + c * h * w;
    for (int di = 0; di < ksize; ++di)
      for (int dj = 0; dj < ksize; ++dj) {
        Scalar* dst_row = cols.data() + (c * ksize * ksize + di * ksize + dj) * n;
        const Index j0 = std::max<Index>(0, half - dj);
        const Index j1 = std::min<Index>(w, w + half - dj);
        if (j1 <= j0) continue;
        for (Index i = 0; i < rows_span; ++i) {
          const Index si = row0 + i + di - half;
          if (si < 0 || si >= h) continue;
          const Scalar* src = src_plane + si * w + j0 + dj - half;
          std::copy(src, src + (j1 - j0), dst_row + i * w + j0);
        }
      }
  }
}

/// Transpose of im2col: scatter-adds column gradients back to the input.
template <typename Scalar>
void col2im_add(const PlaneT<Scalar>& cols, int ksize, FeatureMapT<Scalar>& grad_x) {
  const Index w = grad_x.w, h = grad_x.h, half = ksize / 2;
  const Index n = h * w;
  for (Index c = 0; c < grad_x.channels(); ++c) {
    Scalar* dst_plane = grad_x.data.data() + c * n;
    for (int di = 0; di < ksize; ++di)
      for (int dj = 0; dj < ksize; ++dj) {
        const Scalar* src_row = cols.data() + (c * ksize * ksize + di * ksize + dj) * n;
        const Index j0 = std::max<Index>(0, half - dj);
        const Index j1 = std::min<Index>(w, w + half - dj);
        if (j1 <= j0) continue;
        for (Index i = 0; i < h; ++i) {
          const Index si = i + di - half;
          if (si < 0 || si >= h) continue;
          Scalar* dst = dst_plane + si * w + j0 + dj - half;
          const Scalar* src = src_row + i * w + j0;
          for (Index t = 0; t < j1 - j0; ++t) dst[t] += src[t];
        }
      }
  }
}

}  // namespace detail

/// Square convolution with same-size zero padding, optional fused ReLU.
template <typename Scalar>
struct Conv2d {
  PlaneT<Scalar> weight;  // (out_ch, in_ch * k * k)
  RowVectorT<Scalar> bias;
  PlaneT<Scalar> weight_grad;
  RowVectorT<Scalar> bias_grad;
  int in_ch = 0, out_ch = 0, ksize = 3;
  bool relu = true;
  std::string name;

  struct Cache {
    PlaneT<Scalar> cols;  // saved im2col for the weight gradient
  };

  void init(int in, int out, int k, bool relu_, std::string name_, Rng& rng) {
    in_ch = in;
    out_ch = out;
    ksize = k;
    relu = relu_;
    name = std::move(name_);
    const double stddev = std::sqrt(2.0 / static_cast<double>(in_ch * ksize * ksize));
    weight.resize(out_ch, in_ch * ksize * ksize);
    for (Index i = 0; i < weight.size(); ++i) weight.data()[i] = static_cast<Scalar>(rng.normal(0.0, stddev));
    bias = RowVectorT<Scalar>::Zero(out_ch);
    weight_grad = PlaneT<Scalar>::Zero(out_ch, weight.cols());
    bias_grad = RowVectorT<Scalar>::Zero(out_ch);
  }

  /// cache == nullptr runs in streaming (inference) mode with a bounded
  /// scratch buffer; otherwise the full im2col is kept for backward.
  FeatureMapT<Scalar> forward(const FeatureMapT<Scalar>& x, Cache* cache) const {
    if (x.channels() != in_ch) throw ShapeError(name + ": expected " + std::to_string(in_ch) + " channels");
    FeatureMapT<Scalar> y(out_ch, x.h, x.w);
    if (ksize == 1) {
      y.data.noalias() = weight * x.data;
    } else if (cache) {
      detail::im2col(x, ksize, 0, x.h, cache->cols);
      y.data.noalias() = weight * cache->cols;
    } else {
      const Index budget = Index(1) << 23;  // scratch floats per chunk
      const Index rows_per_chunk = std::max<Index>(1, budget / std::max<Index>(1, Index(in_ch) * ksize * ksize * x.w));
      PlaneT<Scalar> scratch;
      for (Index r0 = 0; r0 < x.h; r0 += rows_per_chunk) {
        const Index span = std::min(rows_per_chunk, x.h - r0);
        detail::im2col(x, ksize, r0, span, scratch);
        y.data.middleCols(r0 * x.w, span * x.w).noalias() = weight * scratch;
      }
    }
    y.data.colwise() += bias.transpose();
    if (relu) y.data = y.data.cwiseMax(Scalar(0));
    return y;
  }

  /// Accumulates weight/bias gradients and returns the input gradient.
  /// `y` is this layer's stored forward output (ReLU mask source).
  FeatureMapT<Scalar> backward(const FeatureMapT<Scalar>& x, const FeatureMapT<Scalar>& y,
                               const Cache& cache, const FeatureMapT<Scalar>& grad_y) {
    PlaneT<Scalar> g = grad_y.data;
    if (relu) g = (y.data.array() > Scalar(0)).select(g, PlaneT<Scalar>::Zero(g.rows(), g.cols()));
    bias_grad += g.rowwise().sum().transpose();
    FeatureMapT<Scalar> grad_x(in_ch, x.h, x.w);
    if (ksize == 1) {
      weight_grad.noalias() += g * x.data.transpose();
      grad_x.data.noalias() = weight.transpose() * g;
    } else {
      weight_grad.noalias() += g * cache.cols.transpose();
      const PlaneT<Scalar> grad_cols = weight.transpose() * g;
      detail::col2im_add(grad_cols, ksize, grad_x);
    }
    return grad_x;
  }

  void collect(std::vector<ParamRef<Scalar>>& out) {
    out.push_back({name + ".weight", weight.data(), weight_grad.data(), weight.rows(), weight.cols()});
    out.push_back({name + ".bias", bias.data(), bias_grad.data(), 1, bias.cols()});
  }
};

/// 2x2 max pooling, stride 2; argmax indices are kept for backward.
template <typename Scalar>
struct MaxPool2 {
  FeatureMapT<Scalar> forward(const FeatureMapT<Scalar>& x, ArgmaxGrid* argmax) const {
    if (x.h % 2 != 0 || x.w % 2 != 0) throw ShapeError("maxpool: dimensions must be even");
    const Index oh = x.h / 2, ow = x.w / 2;
    FeatureMapT<Scalar> y(x.channels(), oh, ow);
    if (argmax) argmax->resize(x.channels(), oh * ow);
    for (Index c = 0; c < x.channels(); ++c) {
      const Scalar* plane = x.data.data() + c * x.h * x.w;
      for (Index i = 0; i < oh; ++i)
        for (Index j = 0; j < ow; ++j) {
          const Index base = (2 * i) * x.w + 2 * j;
          Index best = base;
          if (plane[base + 1] > plane[best]) best = base + 1;
          if (plane[base + x.w] > plane[best]) best = base + x.w;
          if (plane[base + x.w + 1] > plane[best]) best = base + x.w + 1;
          y.data(c, i * ow + j) = plane[best];
          if (argmax) (*argmax)(c, i * ow + j) = static_cast<std::int32_t>(best);
        }
    }
    return y;
  }

  FeatureMapT<Scalar> backward(const FeatureMapT<Scalar>& grad_y, const ArgmaxGrid& argmax, Index in_h,
                               Index in_w) const {
    FeatureMapT<Scalar> grad_x(grad_y.channels(), in_h, in_w);
    for (Index c = 0; c < grad_y.channels(); ++c) {
      Scalar* plane = grad_x.data.data() + c * in_h * in_w;
      for (Index p = 0; p < grad_y.data.cols(); ++p) plane[argmax(c, p)] += grad_y.data(c, p);
    }
    return grad_x;
  }
};

/// 2x2 transposed convolution, stride 2 (each input pixel expands into a
/// disjoint 2x2 output block), optional fused ReLU.
template <typename Scalar>
struct TransposedConv2 {
  PlaneT<Scalar> weight;  // (out_ch, in_ch * 4), block p = dy*2 + dx
  RowVectorT<Scalar> bias;
  PlaneT<Scalar> weight_grad;
  RowVectorT<Scalar> bias_grad;
  int in_ch = 0, out_ch = 0;
  bool relu = true;
  std::string name;

  void init(int in, int out, bool relu_, std::string name_, Rng& rng) {
    in_ch = in;
    out_ch = out;
    relu = relu_;
    name = std::move(name_);
    const double stddev = std::sqrt(2.0 / static_cast<double>(in_ch));  // one tap per output position
    weight.resize(out_ch, in_ch * 4);
    for (Index i = 0; i < weight.size(); ++i) weight.data()[i] = static_cast<Scalar>(rng.normal(0.0, stddev));
    bias = RowVectorT<Scalar>::Zero(out_ch);
    weight_grad = PlaneT<Scalar>::Zero(out_ch, weight.cols());
    bias_grad = RowVectorT<Scalar>::Zero(out_ch);
  }

  FeatureMapT<Scalar> forward(const FeatureMapT<Scalar>& x) const {
    if (x.channels() != in_ch) throw ShapeError(name + ": expected " + std::to_string(in_ch) + " channels");
    const Index oh = 2 * x.h, ow = 2 * x.w;
    FeatureMapT<Scalar> y(out_ch, oh, ow);
    PlaneT<Scalar> part(out_ch, x.h * x.w);
    for (int p = 0; p < 4; ++p) {
      const int dy = p / 2, dx = p % 2;
      part.noalias() = weight.middleCols(Index(p) * in_ch, in_ch) * x.data;
      for (Index c = 0; c < out_ch; ++c) {
        Scalar* dst_plane = y.data.data() + c * oh * ow;
        const Scalar* src_row = part.data() + c * x.h * x.w;
        for (Index i = 0; i < x.h; ++i) {
          Scalar* dst = dst_plane + (2 * i + dy) * ow + dx;
          const Scalar* src = src_row + i * x.w;
          for (Index j = 0; j < x.w; ++j) dst[2 * j] = src[j];
        }
      }
    }
    y.data.colwise() += bias.transpose();
    if (relu) y.data = y.data.cwiseMax(Scalar(0));
    return y;
  }

  FeatureMapT<Scalar> backward(const FeatureMapT<Scalar>& x, const FeatureMapT<Scalar>& y,
                               const FeatureMapT<Scalar>& grad_y) {
    PlaneT<Scalar> g = grad_y.data;
    if (relu) g = (y.data.array() > Scalar(0)).select(g, PlaneT<Scalar>::Zero(g.rows(), g.cols()));
    bias_grad += g.rowwise().sum().transpose();

    const Index oh = 2 * x.h, ow = 2 * x.w;
    FeatureMapT<Scalar> grad_x(in_ch, x.h, x.w);
    PlaneT<Scalar> gpart(out_ch, x.h * x.w);
    for (int p = 0; p < 4; ++p) {
      const int dy = p / 2, dx = p % 2;
      for (Index c = 0; c < out_ch; ++c) {
        const Scalar* src_plane = g.data() + c * oh * ow;
        Scalar* dst_row = gpart.data() + c * x.h * x.w;
        for (Index i = 0; i < x.h; ++i) {
          const Scalar* src = src_plane + (2 * i + dy) * ow + dx;
          Scalar* dst = dst_row + i * x.w;
          for (Index j = 0; j < x.w; ++j) dst[j] = src[2 * j];
        }
      }
      weight_grad.middleCols(Index(p) * in_ch, in_ch).noalias() += gpart * x.data.transpose();
      grad_x.data.noalias() += weight.middleCols(Index(p) * in_ch, in_ch).transpose() * gpart;
    }
    return grad_x;
  }

  void collect(std::vector<ParamRef<Scalar>>& out) {
    out.push_back({name + ".weight", weight.data(), weight_grad.data(), weight.rows(), weight.cols()});
    out.push_back({name + ".bias", bias.data(), bias_grad.data(), 1, bias.cols()});
  }
};

/// Wrap a (C, H*W) plane as a feature map with the given spatial dims.
template <typename Scalar>
FeatureMapT<Scalar> as_feature_map(PlaneT<Scalar> data, Index h, Index w) {
  if (data.cols() != h * w) throw ShapeError("as_feature_map: plane width must equal H*W");
  FeatureMapT<Scalar> f;
  f.data = std::move(data);
  f.h = h;
  f.w = w;
  return f;
}

/// Stack b's channels below a's.
template <typename Scalar>
FeatureMapT<Scalar> concat_channels(const FeatureMapT<Scalar>& a, const FeatureMapT<Scalar>& b) {
  if (a.h != b.h || a.w != b.w) throw ShapeError("concat: spatial dimensions differ");
  FeatureMapT<Scalar> out(a.channels() + b.channels(), a.h, a.w);
  out.data.topRows(a.channels()) = a.data;
  out.data.bottomRows(b.channels()) = b.data;
  return out;
}

}  // namespace kiqt
