#pragma once

#include "kiqt/types.hpp"

#include <unsupported/Eigen/FFT>

#include <complex>

namespace kiqt {

namespace detail {

template <typename Scalar>
using ComplexPlaneT = Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Cyclic shift moving bin (H/2, W/2) to the origin and back. Dimensions
/// are even throughout the pipeline, so the shift is its own inverse.
template <typename Scalar>
ComplexPlaneT<Scalar> fftshift(const ComplexPlaneT<Scalar>& in) {
  const Index h = in.rows(), w = in.cols();
  ComplexPlaneT<Scalar> out(h, w);
  for (Index i = 0; i < h; ++i) {
    const Index si = (i + h / 2) % h;
    for (Index j = 0; j < w; ++j) out(i, j) = in(si, (j + w / 2) % w);
  }
  return out;
}

/// Unscaled forward DFT along both axes.
template <typename Scalar>
void dft2_inplace(ComplexPlaneT<Scalar>& m) {
  Eigen::FFT<Scalar> fft;
  const Index h = m.rows(), w = m.cols();
  std::vector<std::complex<Scalar>> tmp_in(static_cast<std::size_t>(std::max(h, w)));
  std::vector<std::complex<Scalar>> tmp_out(tmp_in.size());
  for (Index i = 0; i < h; ++i) {
    fft.fwd(tmp_out.data(), m.data() + i * w, w);
    std::copy(tmp_out.begin(), tmp_out.begin() + w, m.data() + i * w);
  }
  for (Index j = 0; j < w; ++j) {
    for (Index i = 0; i < h; ++i) tmp_in[static_cast<std::size_t>(i)] = m(i, j);
    fft.fwd(tmp_out.data(), tmp_in.data(), h);
    for (Index i = 0; i < h; ++i) m(i, j) = tmp_out[static_cast<std::size_t>(i)];
  }
}

}  // namespace detail

/// Centered orthonormal 2-D DFT of paired planes. DC lands at (H/2, W/2)
/// and energy is preserved exactly (Parseval), so normalization is
/// domain-independent. `inverse` applies the exact adjoint.
template <typename Scalar>
void fourier2c(const PlaneT<Scalar>& re_in, const PlaneT<Scalar>& im_in, PlaneT<Scalar>& re_out,
               PlaneT<Scalar>& im_out, bool inverse) {
  const Index h = re_in.rows(), w = re_in.cols();
  if (h != im_in.rows() || w != im_in.cols()) throw ShapeError("fourier2c: real/imag dimensions differ");
  if (h % 2 != 0 || w % 2 != 0) throw ShapeError("fourier2c: dimensions must be even");

  detail::ComplexPlaneT<Scalar> c(h, w);
  for (Index i = 0; i < h; ++i)
    for (Index j = 0; j < w; ++j)
      c(i, j) = std::complex<Scalar>(re_in(i, j), inverse ? -im_in(i, j) : im_in(i, j));

  c = detail::fftshift(c);
  detail::dft2_inplace(c);
  c = detail::fftshift(c);

  const Scalar norm = Scalar(1) / std::sqrt(static_cast<Scalar>(h) * static_cast<Scalar>(w));
  re_out.resize(h, w);
  im_out.resize(h, w);
  for (Index i = 0; i < h; ++i)
    for (Index j = 0; j < w; ++j) {
      re_out(i, j) = c(i, j).real() * norm;
      im_out(i, j) = (inverse ? -c(i, j).imag() : c(i, j).imag()) * norm;
    }
}

/// Image -> centered k-space.
inline ComplexSlice fft2c(const ComplexSlice& slice) {
  validate(slice);
  if (slice.domain != Domain::Image) throw ShapeError("fft2c: expected IMAGE domain input");
  ComplexSlice out;
  fourier2c<float>(slice.real, slice.imag, out.real, out.imag, false);
  out.domain = Domain::KSpace;
  out.scale = slice.scale;
  return out;
}

/// Centered k-space -> image; exact inverse of fft2c up to rounding.
inline ComplexSlice ifft2c(const ComplexSlice& slice) {
  validate(slice);
  if (slice.domain != Domain::KSpace) throw ShapeError("ifft2c: expected KSPACE domain input");
  ComplexSlice out;
  fourier2c<float>(slice.real, slice.imag, out.real, out.imag, true);
  out.domain = Domain::Image;
  out.scale = slice.scale;
  return out;
}

}  // namespace kiqt
