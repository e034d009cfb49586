#include "kiqt/masks.hpp"

#include "kiqt/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace kiqt {
namespace {

constexpr double kFractionSlack = 0.02;

void check_dims(Index h, Index w) {
  if (h <= 0 || w <= 0) throw ShapeError("mask: dimensions must be positive");
}

void check_target(double target) {
  if (!(target > 0.0 && target <= 1.0)) throw ConfigError("mask: target_fraction must be in (0, 1]");
}

/// Rasterize the full line through the center at angle `theta`, stepping
/// along the dominant axis so every crossed row/column gets one pixel.
void draw_spoke(Plane& grid, double theta) {
  const Index h = grid.rows(), w = grid.cols();
  const double cy = static_cast<double>(h / 2);
  const double cx = static_cast<double>(w / 2);
  const double dx = std::cos(theta);
  const double dy = std::sin(theta);
  if (std::abs(dx) >= std::abs(dy)) {
    const double slope = dy / dx;
    for (Index x = 0; x < w; ++x) {
      const auto y = static_cast<Index>(std::lround(cy + (static_cast<double>(x) - cx) * slope));
      if (y >= 0 && y < h) grid(y, x) = 1.0f;
    }
  } else {
    const double slope = dx / dy;
    for (Index y = 0; y < h; ++y) {
      const auto x = static_cast<Index>(std::lround(cx + (static_cast<double>(y) - cy) * slope));
      if (x >= 0 && x < w) grid(y, x) = 1.0f;
    }
  }
}

Plane rasterize_spokes(Index h, Index w, int n_spokes, double offset) {
  Plane grid = Plane::Zero(h, w);
  for (int k = 0; k < n_spokes; ++k)
    draw_spoke(grid, offset + 3.14159265358979323846 * static_cast<double>(k) / static_cast<double>(n_spokes));
  grid(h / 2, w / 2) = 1.0f;
  return grid;
}

}  // namespace

double mask_fraction(const Plane& mask) {
  return static_cast<double>(mask.sum()) / static_cast<double>(mask.size());
}

SamplingMask make_full_mask(Index h, Index w) {
  check_dims(h, w);
  SamplingMask m;
  m.data = Plane::Ones(h, w);
  m.pattern = MaskPattern::Full;
  m.target_fraction = m.achieved_fraction = 1.0;
  return m;
}

SamplingMask make_pseudo_radial_mask(Index h, Index w, double target_fraction, std::uint64_t seed) {
  check_dims(h, w);
  check_target(target_fraction);

  SamplingMask m;
  m.pattern = MaskPattern::PseudoRadial;
  m.target_fraction = target_fraction;
  m.seed = seed;
  if (target_fraction >= 1.0) {
    m.data = Plane::Ones(h, w);
    m.achieved_fraction = 1.0;
    return m;
  }

  Rng rng(derive_seed(seed, 0x5370));
  const double offset = rng.uniform(0.0, 3.14159265358979323846);
  const int max_spokes = static_cast<int>(4 * (h + w));
  for (int n = 1; n <= max_spokes; ++n) {
    Plane grid = rasterize_spokes(h, w, n, offset);
    const double frac = mask_fraction(grid);
    if (frac >= target_fraction - kFractionSlack) {
      m.data = std::move(grid);
      m.achieved_fraction = frac;
      return m;
    }
  }
  throw std::logic_error("pseudo-radial mask: target fraction unreachable");
}

SamplingMask make_cartesian_mask(Index h, Index w, double target_fraction, double center_fraction,
                                 std::uint64_t seed) {
  check_dims(h, w);
  check_target(target_fraction);
  if (center_fraction < 0.0 || center_fraction > target_fraction)
    throw ConfigError("cartesian mask: center_fraction must be in [0, target_fraction]");

  SamplingMask m;
  m.pattern = MaskPattern::Cartesian;
  m.target_fraction = target_fraction;
  m.seed = seed;

  const auto n_rows = static_cast<Index>(std::llround(target_fraction * static_cast<double>(h)));
  std::vector<char> selected(static_cast<std::size_t>(h), 0);
  if (target_fraction >= 1.0 || n_rows >= h) {
    std::fill(selected.begin(), selected.end(), 1);
  } else {
    Index n_center = static_cast<Index>(std::ceil(center_fraction * static_cast<double>(h)));
    n_center = std::min(n_center, n_rows);
    if (n_center > 0) {
      const Index start = h / 2 - n_center / 2;
      for (Index r = start; r < start + n_center; ++r) selected[static_cast<std::size_t>(r)] = 1;
    } else {
      selected[static_cast<std::size_t>(h / 2)] = 1;  // center sample is always kept
    }
    Index picked = static_cast<Index>(std::count(selected.begin(), selected.end(), 1));

    std::vector<Index> remaining;
    remaining.reserve(static_cast<std::size_t>(h - picked));
    for (Index r = 0; r < h; ++r)
      if (!selected[static_cast<std::size_t>(r)]) remaining.push_back(r);
    Rng rng(derive_seed(seed, 0xCA27));
    rng.shuffle(remaining.begin(), remaining.end());
    for (std::size_t i = 0; picked < n_rows && i < remaining.size(); ++i, ++picked)
      selected[static_cast<std::size_t>(remaining[i])] = 1;
  }

  m.data = Plane::Zero(h, w);
  for (Index r = 0; r < h; ++r)
    if (selected[static_cast<std::size_t>(r)]) m.data.row(r).setOnes();
  m.achieved_fraction = mask_fraction(m.data);
  return m;
}

ComplexSlice apply_mask(const ComplexSlice& kspace, const SamplingMask& mask) {
  validate(kspace);
  if (kspace.domain != Domain::KSpace) throw ShapeError("apply_mask: expected KSPACE domain input");
  if (kspace.rows() != mask.rows() || kspace.cols() != mask.cols())
    throw ShapeError("apply_mask: mask/slice dimension mismatch");
  ComplexSlice out = kspace;
  out.real.array() *= mask.data.array();
  out.imag.array() *= mask.data.array();
  return out;
}

}  // namespace kiqt
