#pragma once

#include "kiqt/types.hpp"

namespace kiqt {

/// Complex-valued convolution weights as paired real grids (square, odd k).
template <typename Scalar>
struct ComplexKernelT {
  PlaneT<Scalar> w_real;
  PlaneT<Scalar> w_imag;
};

using ComplexKernel = ComplexKernelT<float>;

namespace detail {

/// Same-size 2-D cross-correlation with zero padding of (k-1)/2.
template <typename Scalar>
PlaneT<Scalar> xcorr_same(const PlaneT<Scalar>& x, const PlaneT<Scalar>& k) {
  const Index h = x.rows(), w = x.cols(), ks = k.rows(), half = ks / 2;
  PlaneT<Scalar> out = PlaneT<Scalar>::Zero(h, w);
  for (Index i = 0; i < h; ++i)
    for (Index j = 0; j < w; ++j) {
      Scalar acc = 0;
      for (Index di = 0; di < ks; ++di) {
        const Index si = i + di - half;
        if (si < 0 || si >= h) continue;
        for (Index dj = 0; dj < ks; ++dj) {
          const Index sj = j + dj - half;
          if (sj < 0 || sj >= w) continue;
          acc += k(di, dj) * x(si, sj);
        }
      }
      out(i, j) = acc;
    }
  return out;
}

}  // namespace detail

/// Coupled convolution of a dual-channel slice with a complex kernel:
///   real out = Wr * yr - Wi * yi,  imag out = Wr * yi + Wi * yr
/// (* is 2-D cross-correlation, matching the network's convolution
/// convention). Equivalent to convolving in native complex arithmetic.
template <typename Scalar>
void complex_conv_planes(const PlaneT<Scalar>& y_real, const PlaneT<Scalar>& y_imag,
                         const ComplexKernelT<Scalar>& kernel, PlaneT<Scalar>& out_real,
                         PlaneT<Scalar>& out_imag) {
  const Index ks = kernel.w_real.rows();
  if (ks != kernel.w_real.cols() || ks != kernel.w_imag.rows() || ks != kernel.w_imag.cols())
    throw ShapeError("complex_conv: kernel must be square");
  if (ks % 2 == 0) throw ShapeError("complex_conv: kernel size must be odd");
  if (y_real.rows() != y_imag.rows() || y_real.cols() != y_imag.cols())
    throw ShapeError("complex_conv: channel dimensions differ");
  if (ks > y_real.rows() || ks > y_real.cols()) throw ShapeError("complex_conv: kernel larger than slice");

  out_real = detail::xcorr_same(y_real, kernel.w_real) - detail::xcorr_same(y_imag, kernel.w_imag);
  out_imag = detail::xcorr_same(y_imag, kernel.w_real) + detail::xcorr_same(y_real, kernel.w_imag);
}

inline ComplexSlice complex_conv(const ComplexSlice& y, const ComplexKernel& kernel) {
  ComplexSlice out;
  complex_conv_planes<float>(y.real, y.imag, kernel, out.real, out.imag);
  out.domain = y.domain;
  out.scale = y.scale;
  return out;
}

}  // namespace kiqt
