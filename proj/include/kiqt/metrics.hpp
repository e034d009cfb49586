#pragma once

#include "kiqt/types.hpp"

#include <cmath>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace kiqt {

/// 10*log10(range^2 / MSE) in dB; identical inputs (MSE < 1e-12) return
/// the 100 dB cap so reports stay finite.
double psnr(const MagnitudeSlice& ref, const MagnitudeSlice& test, double data_range = 1.0);

/// Mean local SSIM, 11x11 Gaussian window sigma = 1.5, K1 = 0.01,
/// K2 = 0.03, window fully inside the image (valid positions only).
double ssim(const MagnitudeSlice& ref, const MagnitudeSlice& test, double data_range = 1.0);

/// Pixel-wise |ref - test|.
Plane error_map(const MagnitudeSlice& ref, const MagnitudeSlice& test);

/// Sample mean and population standard deviation (divide by N).
std::pair<double, double> aggregate(std::span<const double> values);

/// One row of the evaluation table.
struct MetricsRecord {
  std::string pattern;  // pseudo_radial | cartesian
  double fraction = 1.0;
  std::string method;  // LF | sIQT | kIQT
  double psnr_mean = 0.0, psnr_std = 0.0;
  double ssim_mean = 0.0, ssim_std = 0.0;
  int n_slices = 0;
};

inline constexpr const char* kMetricsCsvHeader =
    "pattern,fraction,method,psnr_mean,psnr_std,ssim_mean,ssim_std,n_slices";

std::string to_csv_row(const MetricsRecord& r);
void write_metrics_csv(std::span<const MetricsRecord> rows, const std::filesystem::path& path);

/// Parses a metrics CSV; throws FormatError naming the first mismatching
/// column if the header deviates from the schema.
std::vector<MetricsRecord> read_metrics_csv(const std::filesystem::path& path);

}  // namespace kiqt
