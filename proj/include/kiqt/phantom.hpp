#pragma once

#include "kiqt/types.hpp"

#include <cstdint>

namespace kiqt {

/// Seeded brain-like ellipse phantom on [0, 1]: an outer head with a
/// cortex-like rim, ventricle-like dark blobs, a handful of random
/// lesion-like ellipses, and a mild smooth bias field so intensities are
/// continuous rather than piecewise constant. Deterministic per
/// (h, w, seed).
MagnitudeSlice make_phantom(Index h, Index w, std::uint64_t seed);

}  // namespace kiqt
