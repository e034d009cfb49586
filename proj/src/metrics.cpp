#include "kiqt/metrics.hpp"

#include "kiqt/config.hpp"

#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

namespace kiqt {
namespace {

using Planed = PlaneT<double>;

void check_same_shape(const MagnitudeSlice& a, const MagnitudeSlice& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw ShapeError(std::string(op) + ": shape mismatch " + std::to_string(a.rows()) + "x" +
                     std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
}

/// Separable valid-mode filtering with an 11-tap Gaussian (sigma 1.5).
Planed gaussian_filter_valid(const Planed& x) {
  constexpr int kTaps = 11;
  constexpr double kSigma = 1.5;
  static const auto kernel = [] {
    std::array<double, kTaps> k{};
    double sum = 0.0;
    for (int i = 0; i < kTaps; ++i) {
      const double d = i - (kTaps - 1) / 2.0;
      k[static_cast<std::size_t>(i)] = std::exp(-d * d / (2.0 * kSigma * kSigma));
      sum += k[static_cast<std::size_t>(i)];
    }
    for (auto& v : k) v /= sum;
    return k;
  }();

  const Index h = x.rows(), w = x.cols();
  Planed rows(h, w - kTaps + 1);
  for (Index i = 0; i < h; ++i)
    for (Index j = 0; j + kTaps <= w; ++j) {
      double acc = 0.0;
      for (int t = 0; t < kTaps; ++t) acc += kernel[static_cast<std::size_t>(t)] * x(i, j + t);
      rows(i, j) = acc;
    }
  Planed out(h - kTaps + 1, rows.cols());
  for (Index j = 0; j < rows.cols(); ++j)
    for (Index i = 0; i + kTaps <= h; ++i) {
      double acc = 0.0;
      for (int t = 0; t < kTaps; ++t) acc += kernel[static_cast<std::size_t>(t)] * rows(i + t, j);
      out(i, j) = acc;
    }
  return out;
}

}  // namespace

double psnr(const MagnitudeSlice& ref, const MagnitudeSlice& test, double data_range) {
  check_same_shape(ref, test, "psnr");
  if (!(data_range > 0.0)) throw ConfigError("psnr: data_range must be positive");
  const double mse =
      (ref.data.cast<double>() - test.data.cast<double>()).array().square().sum() / static_cast<double>(ref.data.size());
  if (mse < 1e-12) return 100.0;
  return 10.0 * std::log10(data_range * data_range / mse);
}

double ssim(const MagnitudeSlice& ref, const MagnitudeSlice& test, double data_range) {
  check_same_shape(ref, test, "ssim");
  if (ref.rows() < 11 || ref.cols() < 11) throw ShapeError("ssim: image smaller than the 11x11 window");

  const double c1 = (0.01 * data_range) * (0.01 * data_range);
  const double c2 = (0.03 * data_range) * (0.03 * data_range);

  const Planed x = ref.data.cast<double>();
  const Planed y = test.data.cast<double>();
  const Planed mu_x = gaussian_filter_valid(x);
  const Planed mu_y = gaussian_filter_valid(y);
  const Planed xx = gaussian_filter_valid(Planed(x.cwiseProduct(x)));
  const Planed yy = gaussian_filter_valid(Planed(y.cwiseProduct(y)));
  const Planed xy = gaussian_filter_valid(Planed(x.cwiseProduct(y)));

  double total = 0.0;
  for (Index i = 0; i < mu_x.rows(); ++i)
    for (Index j = 0; j < mu_x.cols(); ++j) {
      const double mx = mu_x(i, j), my = mu_y(i, j);
      const double var_x = xx(i, j) - mx * mx;
      const double var_y = yy(i, j) - my * my;
      const double cov = xy(i, j) - mx * my;
      total += ((2.0 * mx * my + c1) * (2.0 * cov + c2)) /
               ((mx * mx + my * my + c1) * (var_x + var_y + c2));
    }
  return total / static_cast<double>(mu_x.size());
}

Plane error_map(const MagnitudeSlice& ref, const MagnitudeSlice& test) {
  check_same_shape(ref, test, "error_map");
  return (ref.data - test.data).cwiseAbs();
}

std::pair<double, double> aggregate(std::span<const double> values) {
  if (values.empty()) throw ConfigError("aggregate: empty input");
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double ss = 0.0;
  for (const double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / n)};
}

std::string to_csv_row(const MetricsRecord& r) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%s,%.2f,%s,%.4f,%.4f,%.4f,%.4f,%d", r.pattern.c_str(), r.fraction,
                r.method.c_str(), r.psnr_mean, r.psnr_std, r.ssim_mean, r.ssim_std, r.n_slices);
  return buf;
}

void write_metrics_csv(std::span<const MetricsRecord> rows, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << kMetricsCsvHeader << "\n";
  for (const auto& r : rows) out << to_csv_row(r) << "\n";
  if (!out) throw IoError("write failed: " + path.string());
}

std::vector<MetricsRecord> read_metrics_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open: " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw FormatError("empty metrics CSV: " + path.string());

  // Validate the header column by column so errors name the culprit.
  {
    std::stringstream have(line), want(kMetricsCsvHeader);
    std::string hcol, wcol;
    while (std::getline(want, wcol, ',')) {
      if (!std::getline(have, hcol, ',') || hcol != wcol)
        throw FormatError("metrics CSV schema error: expected column '" + wcol + "', got '" + hcol + "' in " +
                          path.string());
    }
    if (std::getline(have, hcol, ','))
      throw FormatError("metrics CSV schema error: unexpected extra column '" + hcol + "' in " + path.string());
  }

  std::vector<MetricsRecord> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    MetricsRecord r;
    auto next = [&](const char* col) {
      if (!std::getline(ss, field, ','))
        throw FormatError("metrics CSV schema error: missing value for column '" + std::string(col) + "'");
      return field;
    };
    r.pattern = next("pattern");
    r.fraction = std::stod(next("fraction"));
    r.method = next("method");
    r.psnr_mean = std::stod(next("psnr_mean"));
    r.psnr_std = std::stod(next("psnr_std"));
    r.ssim_mean = std::stod(next("ssim_mean"));
    r.ssim_std = std::stod(next("ssim_std"));
    r.n_slices = std::stoi(next("n_slices"));
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace kiqt
