#pragma once

#include "kiqt/types.hpp"

#include <filesystem>
#include <vector>

namespace kiqt {

/// Minimal single-file NIfTI-1 (.nii, uncompressed) volume: voxel data
/// converted to float with scl_slope/scl_inter applied, dimensions only.
struct Volume {
  Index nx = 0, ny = 0, nz = 0;
  std::vector<float> voxels;  // x fastest, then y, then z

  float at(Index x, Index y, Index z) const {
    return voxels[static_cast<std::size_t>((z * ny + y) * nx + x)];
  }
};

Volume read_nifti_volume(const std::filesystem::path& path);

/// Center-crop or zero-pad a plane to the target shape, preserving the
/// center.
Plane crop_or_pad(const Plane& in, Index target_h, Index target_w);

/// Extracts axial slices z in [window_lo, window_hi), center-crops or
/// zero-pads each to 256x256 and normalizes to [0, 1] by its own maximum
/// (zero-max slices keep scale 1 and stay all-zero).
std::vector<MagnitudeSlice> ingest_volume(const std::filesystem::path& path, Index window_lo, Index window_hi);

inline constexpr Index kCanonicalSliceSize = 256;

}  // namespace kiqt
