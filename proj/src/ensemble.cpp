#include "kiqt/ensemble.hpp"

namespace kiqt {

FeatureMap to_feature_map(const ComplexSlice& s) {
  FeatureMap f(2, s.rows(), s.cols());
  f.data.row(0) = Eigen::Map<const Eigen::RowVectorXf>(s.real.data(), s.real.size());
  f.data.row(1) = Eigen::Map<const Eigen::RowVectorXf>(s.imag.data(), s.imag.size());
  return f;
}

FeatureMap to_feature_map(const MagnitudeSlice& s) {
  FeatureMap f(1, s.rows(), s.cols());
  f.data.row(0) = Eigen::Map<const Eigen::RowVectorXf>(s.data.data(), s.data.size());
  return f;
}

ComplexSlice kspace_from_feature_map(const FeatureMap& f, double scale) {
  if (f.channels() != 2) throw ShapeError("kspace_from_feature_map: expected 2 channels");
  ComplexSlice s;
  s.real = Eigen::Map<const Plane>(f.data.row(0).data(), f.h, f.w);
  s.imag = Eigen::Map<const Plane>(f.data.row(1).data(), f.h, f.w);
  s.domain = Domain::KSpace;
  s.scale = scale;
  return s;
}

namespace {

MagnitudeSlice normalized_magnitude(Plane mag) {
  const float peak = mag.maxCoeff();
  MagnitudeSlice out;
  if (peak > 0.0f) mag /= peak;
  out.data = std::move(mag);
  out.scale = peak > 0.0f ? static_cast<double>(peak) : 1.0;
  return out;
}

}  // namespace

MagnitudeSlice reconstruct_one(const UNet<float>& model, const ComplexSlice& input) {
  validate(input);
  if (input.domain != Domain::KSpace) throw ShapeError("reconstruct_one: expected KSPACE input");
  if (model.config().in_channels != 2)
    throw ShapeError("reconstruct_one: model expects " + std::to_string(model.config().in_channels) +
                     " channels, got k-space input");
  const FeatureMap out = model.infer(to_feature_map(input));
  const ComplexSlice k = kspace_from_feature_map(out, input.scale);
  return normalized_magnitude(magnitude_of(ifft2c(k)));
}

MagnitudeSlice reconstruct_one(const UNet<float>& model, const MagnitudeSlice& input) {
  validate(input);
  if (model.config().in_channels != 1)
    throw ShapeError("reconstruct_one: model expects " + std::to_string(model.config().in_channels) +
                     " channels, got magnitude input");
  const FeatureMap out = model.infer(to_feature_map(input));
  Plane mag = Eigen::Map<const Plane>(out.data.row(0).data(), out.h, out.w);
  return normalized_magnitude(mag.cwiseMax(0.0f));
}

EnsembleResult ensemble_stats(std::span<const MagnitudeSlice> members, IqtDomain domain) {
  if (members.empty()) throw ConfigError("ensemble_stats: empty member list");
  const Index h = members[0].rows(), w = members[0].cols();
  PlaneT<double> sum = PlaneT<double>::Zero(h, w);
  PlaneT<double> sumsq = PlaneT<double>::Zero(h, w);
  for (const auto& m : members) {
    if (m.rows() != h || m.cols() != w) throw ShapeError("ensemble_stats: member shape mismatch");
    const PlaneT<double> d = m.data.cast<double>();
    sum += d;
    sumsq += d.cwiseProduct(d);
  }
  const double n = static_cast<double>(members.size());
  const PlaneT<double> mean = sum / n;
  const PlaneT<double> var = (sumsq / n - mean.cwiseProduct(mean)).cwiseMax(0.0);

  EnsembleResult result;
  result.mean_image.data = mean.cast<float>();
  result.mean_image.scale = 1.0;
  result.std_map = var.cwiseSqrt().cast<float>();
  result.member_count = static_cast<int>(members.size());
  result.domain_of_inference = domain;
  return result;
}

namespace {

template <typename InputT>
EnsembleResult predict_impl(std::span<const UNet<float>> models, const InputT& input, IqtDomain domain) {
  if (models.empty()) throw ConfigError("ensemble_predict: empty model list");
  const int in_ch = models[0].config().in_channels;
  for (const auto& m : models)
    if (m.config().in_channels != in_ch)
      throw ConfigError("ensemble_predict: members infer in mixed domains");
  std::vector<MagnitudeSlice> outputs;
  outputs.reserve(models.size());
  for (const auto& m : models) outputs.push_back(reconstruct_one(m, input));
  return ensemble_stats(outputs, domain);
}

}  // namespace

EnsembleResult ensemble_predict(std::span<const UNet<float>> models, const ComplexSlice& input) {
  return predict_impl(models, input, IqtDomain::KSpace);
}

EnsembleResult ensemble_predict(std::span<const UNet<float>> models, const MagnitudeSlice& input) {
  return predict_impl(models, input, IqtDomain::Spatial);
}

}  // namespace kiqt
