#pragma once

#include "kiqt/types.hpp"

#include <cstdint>

namespace kiqt {

/// Binary k-space sampling mask. achieved_fraction = ones / (H*W); the
/// center sample (H/2, W/2) is always kept.
struct SamplingMask {
  Plane data;  // 0/1 values
  MaskPattern pattern = MaskPattern::Full;
  double target_fraction = 1.0;
  double achieved_fraction = 1.0;
  std::uint64_t seed = 0;

  Index rows() const { return data.rows(); }
  Index cols() const { return data.cols(); }
};

SamplingMask make_full_mask(Index h, Index w);

/// Equally spaced spokes through the grid center with a seeded global
/// angular offset, rasterized as pixel lines. Spokes are added until the
/// covered fraction reaches target_fraction - 0.02.
SamplingMask make_pseudo_radial_mask(Index h, Index w, double target_fraction, std::uint64_t seed);

/// Contiguous fully sampled central band of ceil(center_fraction*H)
/// phase-encode rows plus seeded random rows (without replacement) up to
/// round(target_fraction*H) rows; selected rows are fully sampled along
/// the readout axis.
SamplingMask make_cartesian_mask(Index h, Index w, double target_fraction, double center_fraction,
                                 std::uint64_t seed);

/// Elementwise product of both k-space channels with the binary mask.
ComplexSlice apply_mask(const ComplexSlice& kspace, const SamplingMask& mask);

double mask_fraction(const Plane& mask);

}  // namespace kiqt
