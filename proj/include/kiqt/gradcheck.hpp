#pragma once

#include "kiqt/hash.hpp"
#include "kiqt/loss.hpp"
#include "kiqt/unet.hpp"

namespace kiqt {

template <typename Scalar>
struct GradCheckResult {
  Scalar max_rel_error = 0;
  int params_checked = 0;
  int windows_rejected = 0;
};

namespace detail {

/// Identifies the linear piece the network sits on: ReLU on/off pattern of
/// every activation map, pooling argmax routes, and MAE residual signs.
/// The loss is piecewise quadratic along any single weight, so central
/// differences are exact iff both endpoints share this signature.
template <typename Scalar>
std::uint64_t piece_signature(const typename UNet<Scalar>::Workspace& ws, const FeatureMapT<Scalar>& target) {
  std::uint64_t h = kFnvOffset;
  auto mix_signs = [&h](const PlaneT<Scalar>& m) {
    for (Index i = 0; i < m.size(); ++i) {
      h ^= static_cast<std::uint64_t>(m.data()[i] > Scalar(0));
      h *= kFnvPrime;
    }
  };
  for (const auto* m : {&ws.a1, &ws.a2, &ws.b1, &ws.b2, &ws.c1, &ws.c2, &ws.d1, &ws.d2, &ws.u3, &ws.e1,
                        &ws.e2, &ws.u2, &ws.f1, &ws.f2, &ws.u1, &ws.g1, &ws.g2})
    mix_signs(m->data);
  for (const auto* a : {&ws.pool1, &ws.pool2, &ws.pool3})
    for (Index i = 0; i < a->size(); ++i) {
      h ^= static_cast<std::uint64_t>(a->data()[i]) + 0x9e37u;
      h *= kFnvPrime;
    }
  mix_signs(PlaneT<Scalar>(ws.out.data - target.data));
  return h;
}

}  // namespace detail

/// Compares analytic parameter gradients of the combined loss against
/// central finite differences (step 1e-3) on randomly chosen parameters.
/// A parameter whose finite-difference window crosses a ReLU/pool switch
/// or an MAE sign flip is resampled: the loss is only piecewise smooth,
/// and a difference quotient across a kink does not estimate either
/// side's gradient. Relative error uses max(|analytic|, |numeric|, 1e-6)
/// as the denominator.
template <typename Scalar>
GradCheckResult<Scalar> loss_gradient_check(UNet<Scalar>& net, const FeatureMapT<Scalar>& input,
                                            const FeatureMapT<Scalar>& target, int n_samples,
                                            std::uint64_t seed, Scalar step = Scalar(1e-3)) {
  typename UNet<Scalar>::Workspace ws;
  net.zero_grads();
  net.forward(input, ws);
  net.backward(as_feature_map(combined_loss_grad<Scalar>(ws.out.data, target.data), ws.out.h, ws.out.w), ws);
  const std::uint64_t base_piece = detail::piece_signature<Scalar>(ws, target);

  auto params = net.params();
  Index total = 0;
  for (const auto& p : params) total += p.size();

  Rng rng(derive_seed(seed, 0x6C));
  GradCheckResult<Scalar> result;
  const int max_attempts = 20 * n_samples;
  for (int attempt = 0; attempt < max_attempts && result.params_checked < n_samples; ++attempt) {
    Index flat = static_cast<Index>(rng.uniform_index(static_cast<std::uint64_t>(total)));
    std::size_t which = 0;
    while (flat >= params[which].size()) flat -= params[which++].size();
    auto& p = params[which];

    const Scalar saved = p.value[flat];
    p.value[flat] = saved + step;
    net.forward(input, ws);
    const Scalar loss_hi = combined_loss<Scalar>(ws.out.data, target.data);
    const std::uint64_t piece_hi = detail::piece_signature<Scalar>(ws, target);
    p.value[flat] = saved - step;
    net.forward(input, ws);
    const Scalar loss_lo = combined_loss<Scalar>(ws.out.data, target.data);
    const std::uint64_t piece_lo = detail::piece_signature<Scalar>(ws, target);
    p.value[flat] = saved;

    if (piece_hi != base_piece || piece_lo != base_piece) {
      ++result.windows_rejected;
      continue;
    }
    const Scalar numeric = (loss_hi - loss_lo) / (Scalar(2) * step);
    const Scalar analytic = p.grad[flat];
    const Scalar denom = std::max({std::abs(analytic), std::abs(numeric), Scalar(1e-6)});
    result.max_rel_error = std::max(result.max_rel_error, std::abs(analytic - numeric) / denom);
    ++result.params_checked;
  }
  if (result.params_checked < n_samples)
    throw std::runtime_error("loss_gradient_check: could not find enough kink-free windows");
  return result;
}

}  // namespace kiqt
