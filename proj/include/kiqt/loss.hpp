#pragma once

#include "kiqt/layers.hpp"

namespace kiqt {

/// Combined reconstruction loss: mean absolute error plus mean squared
/// error at equal unit weights, averaged over all channels and pixels.
template <typename Scalar>
Scalar combined_loss(const PlaneT<Scalar>& pred, const PlaneT<Scalar>& target) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols())
    throw ShapeError("combined_loss: shape mismatch");
  const auto r = (pred - target).array();
  const Scalar n = static_cast<Scalar>(pred.size());
  return r.abs().sum() / n + r.square().sum() / n;
}

/// d(loss)/d(pred): sign(r)/N + 2r/N with sign(0) = 0, so the gradient
/// vanishes exactly at zero residual.
template <typename Scalar>
PlaneT<Scalar> combined_loss_grad(const PlaneT<Scalar>& pred, const PlaneT<Scalar>& target) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols())
    throw ShapeError("combined_loss_grad: shape mismatch");
  const Scalar n = static_cast<Scalar>(pred.size());
  PlaneT<Scalar> grad(pred.rows(), pred.cols());
  for (Index i = 0; i < pred.size(); ++i) {
    const Scalar r = pred.data()[i] - target.data()[i];
    const Scalar sign = r > Scalar(0) ? Scalar(1) : (r < Scalar(0) ? Scalar(-1) : Scalar(0));
    grad.data()[i] = (sign + Scalar(2) * r) / n;
  }
  return grad;
}

template <typename Scalar>
Scalar combined_loss(const FeatureMapT<Scalar>& pred, const FeatureMapT<Scalar>& target) {
  return combined_loss<Scalar>(pred.data, target.data);
}

}  // namespace kiqt
