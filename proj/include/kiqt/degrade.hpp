#pragma once

#include "kiqt/masks.hpp"
#include "kiqt/types.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <utility>

namespace kiqt {

using Vector6d = Eigen::Matrix<double, 6, 1>;
using Matrix6d = Eigen::Matrix<double, 6, 6>;

/// Tissue label grid: -1 background, then classes ordered by ascending
/// mean intensity (0 = CSF-like, 1 = GM-like, 2 = WM-like in T1w).
using LabelGrid = Eigen::Matrix<std::int8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline constexpr std::int8_t kBackground = -1;
inline constexpr std::int8_t kLabelCsf = 0;
inline constexpr std::int8_t kLabelGm = 1;
inline constexpr std::int8_t kLabelWm = 2;

/// Per-tissue degradation parameters, ordered (WM, GM, CSF) in each vector.
struct TissueParams {
  Eigen::Vector3d contrast_scale;  // multiplicative, > 0
  Eigen::Vector3d snr_target_db;   // image-domain SNR anchors

  double contrast_for_label(std::int8_t label) const { return contrast_scale(2 - label); }
  double snr_for_label(std::int8_t label) const { return snr_target_db(2 - label); }
};

/// Gaussian prior over the 6-vector (contrast WM, GM, CSF, SNR WM, GM,
/// CSF). InD draws are gated by the Mahalanobis bound and the WM > GM SNR
/// ordering; the OOD prior is the shifted ultra-low-field regime with no
/// gate.
struct ParamPrior {
  Vector6d mean;
  Matrix6d covariance;
  std::optional<double> mahalanobis_bound;  // applied in the InD regime
  Regime regime = Regime::InD;

  static ParamPrior ind_default();
  static ParamPrior ood_default();
  static ParamPrior for_regime(Regime r) { return r == Regime::InD ? ind_default() : ood_default(); }

  /// Override mean/covariance diagonal from a key-value file (keys
  /// prior_mean, prior_stddev as comma-separated 6-vectors).
  static ParamPrior from_file(const std::filesystem::path& path);
};

/// Covariance-weighted distance sqrt((x-mu)^T Sigma^-1 (x-mu)).
/// Throws ConfigError if the covariance is not positive-definite.
double mahalanobis(const Vector6d& x, const ParamPrior& prior);

/// Threshold segmentation into 3 classes at the 33rd/66th percentiles of
/// nonzero intensities; zero pixels are background.
LabelGrid segment_tissues(const MagnitudeSlice& hf);

/// Seeded draw from the prior, rejection-gated per regime. Throws
/// ConfigError after 10,000 rejected draws.
TissueParams sample_params(const ParamPrior& prior, std::uint64_t seed);

/// Stochastic low-field simulation: per-class contrast scaling,
/// renormalization, complex white Gaussian k-space noise anchored to the
/// WM SNR target, magnitude of the inverse transform renormalized to
/// [0, 1]. Deterministic per (slice, params, seed).
MagnitudeSlice simulate_lowfield(const MagnitudeSlice& hf, const TissueParams& params, std::uint64_t seed);

/// One training pair: undersampled low-field k-space input and fully
/// sampled high-field k-space target.
std::pair<ComplexSlice, ComplexSlice> make_pair(const MagnitudeSlice& hf, const ParamPrior& prior,
                                                const SamplingMask& mask, std::uint64_t seed);

}  // namespace kiqt
