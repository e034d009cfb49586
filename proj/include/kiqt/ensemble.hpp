#pragma once

#include "kiqt/fourier.hpp"
#include "kiqt/unet.hpp"

#include <span>
#include <vector>

namespace kiqt {

/// Ensemble mean reconstruction plus the pixel-wise population standard
/// deviation across member predictions. Statistics are always computed on
/// image magnitudes, whichever domain the members infer in.
struct EnsembleResult {
  MagnitudeSlice mean_image;
  Plane std_map;
  int member_count = 0;
  IqtDomain domain_of_inference = IqtDomain::KSpace;
};

/// Two k-space channels in, two out, then inverse transform and
/// magnitude, renormalized to [0, 1] by the slice maximum.
MagnitudeSlice reconstruct_one(const UNet<float>& model, const ComplexSlice& input);

/// Spatial variant: magnitude image in, magnitude image out (clamped
/// nonnegative, renormalized to [0, 1]).
MagnitudeSlice reconstruct_one(const UNet<float>& model, const MagnitudeSlice& input);

/// Pixel-wise mean/std reduction over per-member reconstructions.
EnsembleResult ensemble_stats(std::span<const MagnitudeSlice> members, IqtDomain domain);

EnsembleResult ensemble_predict(std::span<const UNet<float>> models, const ComplexSlice& input);
EnsembleResult ensemble_predict(std::span<const UNet<float>> models, const MagnitudeSlice& input);

/// Conversions between slices and network feature maps.
FeatureMap to_feature_map(const ComplexSlice& s);
FeatureMap to_feature_map(const MagnitudeSlice& s);
ComplexSlice kspace_from_feature_map(const FeatureMap& f, double scale);

}  // namespace kiqt
