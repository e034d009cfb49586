#include "kiqt/degrade.hpp"

#include "kiqt/fourier.hpp"
#include "kiqt/io.hpp"
#include "kiqt/rng.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

namespace kiqt {

ParamPrior ParamPrior::ind_default() {
  ParamPrior p;
  p.mean << 0.9, 0.8, 0.7, 22.0, 18.0, 14.0;
  Vector6d sd;
  sd << 0.05, 0.05, 0.05, 2.0, 2.0, 2.0;
  p.covariance = sd.array().square().matrix().asDiagonal();
  p.mahalanobis_bound = 1.0;
  p.regime = Regime::InD;
  return p;
}

ParamPrior ParamPrior::ood_default() {
  ParamPrior p = ind_default();
  p.mean(3) -= 8.0;  // ultra-low-field SNR shift
  p.mean(4) -= 8.0;
  p.mean(5) -= 8.0;
  p.covariance *= 2.0;
  p.mahalanobis_bound.reset();
  p.regime = Regime::Ood;
  return p;
}

ParamPrior ParamPrior::from_file(const std::filesystem::path& path) {
  const auto kv = read_key_values(path);
  ParamPrior p = ind_default();
  if (const auto it = kv.find("regime"); it != kv.end())
    p = it->second == "ood" ? ood_default() : ind_default();
  auto parse6 = [&](const std::string& text) {
    Vector6d v;
    std::stringstream ss(text);
    std::string item;
    for (int i = 0; i < 6; ++i) {
      if (!std::getline(ss, item, ',')) throw ConfigError("prior vector needs 6 comma-separated values");
      v(i) = std::stod(item);
    }
    return v;
  };
  if (const auto it = kv.find("prior_mean"); it != kv.end()) p.mean = parse6(it->second);
  if (const auto it = kv.find("prior_stddev"); it != kv.end())
    p.covariance = parse6(it->second).array().square().matrix().asDiagonal();
  if (const auto it = kv.find("mahalanobis_bound"); it != kv.end()) p.mahalanobis_bound = std::stod(it->second);
  return p;
}

double mahalanobis(const Vector6d& x, const ParamPrior& prior) {
  const Eigen::LLT<Matrix6d> llt(prior.covariance);
  if (llt.info() != Eigen::Success) throw ConfigError("mahalanobis: covariance is not positive-definite");
  const Vector6d d = x - prior.mean;
  return std::sqrt(d.dot(llt.solve(d)));
}

LabelGrid segment_tissues(const MagnitudeSlice& hf) {
  const Index h = hf.rows(), w = hf.cols();
  LabelGrid labels = LabelGrid::Constant(h, w, kBackground);

  std::vector<float> nonzero;
  nonzero.reserve(static_cast<std::size_t>(hf.data.size()));
  for (Index i = 0; i < hf.data.size(); ++i) {
    const float v = hf.data.data()[i];
    if (v > 0.0f) nonzero.push_back(v);
  }
  if (nonzero.empty()) return labels;  // all-zero slice: all background

  std::sort(nonzero.begin(), nonzero.end());
  const auto at = [&](double q) {
    const auto idx = static_cast<std::size_t>(q * static_cast<double>(nonzero.size() - 1));
    return nonzero[idx];
  };
  const float t1 = at(0.33);
  const float t2 = at(0.66);

  for (Index i = 0; i < h; ++i)
    for (Index j = 0; j < w; ++j) {
      const float v = hf.data(i, j);
      if (v <= 0.0f) continue;
      labels(i, j) = v <= t1 ? kLabelCsf : (v <= t2 ? kLabelGm : kLabelWm);
    }
  return labels;
}

TissueParams sample_params(const ParamPrior& prior, std::uint64_t seed) {
  const Eigen::LLT<Matrix6d> llt(prior.covariance);
  if (llt.info() != Eigen::Success) throw ConfigError("sample_params: covariance is not positive-definite");
  const Matrix6d chol = llt.matrixL();

  Rng rng(derive_seed(seed, 0x9A4B));
  for (int attempt = 0; attempt < 10000; ++attempt) {
    Vector6d z;
    for (int i = 0; i < 6; ++i) z(i) = rng.normal();
    const Vector6d x = prior.mean + chol * z;

    if (x.head<3>().minCoeff() <= 0.0) continue;  // contrast scales must stay positive
    if (prior.regime == Regime::InD) {
      if (prior.mahalanobis_bound && mahalanobis(x, prior) >= *prior.mahalanobis_bound) continue;
      if (!(x(3) > x(4))) continue;  // WM SNR must exceed GM SNR
    }
    TissueParams params;
    params.contrast_scale = x.head<3>();
    params.snr_target_db = x.tail<3>();
    return params;
  }
  throw ConfigError("sample_params: rejection sampling failed after 10000 draws");
}

namespace {

float renormalize(Plane& img) {
  const float peak = img.maxCoeff();
  if (peak > 0.0f) img /= peak;
  return peak > 0.0f ? peak : 1.0f;
}

}  // namespace

MagnitudeSlice simulate_lowfield(const MagnitudeSlice& hf, const TissueParams& params, std::uint64_t seed) {
  validate(hf);
  if (params.contrast_scale.minCoeff() <= 0.0) throw ConfigError("simulate_lowfield: contrast scales must be > 0");

  const LabelGrid labels = segment_tissues(hf);

  Plane img = hf.data;
  for (Index i = 0; i < img.size(); ++i) {
    const std::int8_t lab = labels.data()[i];
    if (lab != kBackground) img.data()[i] *= static_cast<float>(params.contrast_for_label(lab));
  }
  renormalize(img);

  // One global complex-noise level anchored to the WM SNR constraint:
  // sigma = mean WM signal / 10^(snr_wm/20), per real/imag component. The
  // orthonormal transform maps white k-space noise to white image noise of
  // the same level.
  double wm_sum = 0.0;
  std::size_t wm_count = 0;
  for (Index i = 0; i < img.size(); ++i)
    if (labels.data()[i] == kLabelWm) {
      wm_sum += img.data()[i];
      ++wm_count;
    }
  const double snr_wm = params.snr_target_db(0);
  double sigma = 0.0;
  if (wm_count > 0 && std::isfinite(snr_wm))
    sigma = (wm_sum / static_cast<double>(wm_count)) / std::pow(10.0, snr_wm / 20.0);

  MagnitudeSlice lf;
  if (sigma > 0.0) {
    MagnitudeSlice contrasted;
    contrasted.data = std::move(img);
    contrasted.scale = 1.0;
    ComplexSlice k = fft2c(to_complex(contrasted));
    Rng rng(derive_seed(seed, 0x401E));
    for (Index i = 0; i < k.real.size(); ++i) {
      k.real.data()[i] += static_cast<float>(rng.normal(0.0, sigma));
      k.imag.data()[i] += static_cast<float>(rng.normal(0.0, sigma));
    }
    lf.data = magnitude_of(ifft2c(k));
  } else {
    lf.data = std::move(img);
  }
  lf.scale = renormalize(lf.data);
  return lf;
}

std::pair<ComplexSlice, ComplexSlice> make_pair(const MagnitudeSlice& hf, const ParamPrior& prior,
                                                const SamplingMask& mask, std::uint64_t seed) {
  const TissueParams params = sample_params(prior, derive_seed(seed, 0x11));
  const MagnitudeSlice lf = simulate_lowfield(hf, params, derive_seed(seed, 0x22));
  ComplexSlice input = apply_mask(fft2c(to_complex(lf)), mask);
  ComplexSlice target = fft2c(to_complex(hf));
  return {std::move(input), std::move(target)};
}

}  // namespace kiqt
