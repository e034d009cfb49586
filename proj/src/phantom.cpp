#include "kiqt/phantom.hpp"

#include "kiqt/fourier.hpp"
#include "kiqt/rng.hpp"

#include <cmath>
#include <vector>

namespace kiqt {
namespace {

struct Ellipse {
  double cx, cy;      // center in [-1, 1] coordinates
  double ax, ay;      // semi-axes
  double angle;       // rotation, radians
  double intensity;   // value painted inside
};

void paint(Plane& img, const Ellipse& e) {
  const Index h = img.rows(), w = img.cols();
  const double ca = std::cos(e.angle), sa = std::sin(e.angle);
  for (Index i = 0; i < h; ++i) {
    const double y = 2.0 * (static_cast<double>(i) + 0.5) / static_cast<double>(h) - 1.0;
    for (Index j = 0; j < w; ++j) {
      const double x = 2.0 * (static_cast<double>(j) + 0.5) / static_cast<double>(w) - 1.0;
      const double u = ca * (x - e.cx) + sa * (y - e.cy);
      const double v = -sa * (x - e.cx) + ca * (y - e.cy);
      if ((u * u) / (e.ax * e.ax) + (v * v) / (e.ay * e.ay) <= 1.0)
        img(i, j) = static_cast<float>(e.intensity);
    }
  }
}

/// Band-limited random field with unit standard deviation; gives the
/// tissue interior fine structure that undersampling actually destroys.
Plane texture_field(Index h, Index w, Rng& rng) {
  Plane white(h, w);
  for (Index i = 0; i < white.size(); ++i) white.data()[i] = static_cast<float>(rng.normal());
  Plane zero = Plane::Zero(h, w);
  Plane kr, ki;
  fourier2c<float>(white, zero, kr, ki, false);

  const double rc = 0.18, sr = 0.10;  // ring pass-band in cycles/pixel
  for (Index i = 0; i < h; ++i)
    for (Index j = 0; j < w; ++j) {
      const double fy = (static_cast<double>(i) - static_cast<double>(h / 2)) / static_cast<double>(h);
      const double fx = (static_cast<double>(j) - static_cast<double>(w / 2)) / static_cast<double>(w);
      const double r = std::sqrt(fx * fx + fy * fy);
      const auto gain = static_cast<float>(std::exp(-(r - rc) * (r - rc) / (2.0 * sr * sr)));
      kr(i, j) *= gain;
      ki(i, j) *= gain;
    }
  Plane tr, ti;
  fourier2c<float>(kr, ki, tr, ti, true);
  const float sd = std::sqrt(tr.array().square().sum() / static_cast<float>(tr.size()));
  if (sd > 0.0f) tr /= sd;
  return tr;
}

}  // namespace

MagnitudeSlice make_phantom(Index h, Index w, std::uint64_t seed) {
  if (h <= 0 || w <= 0) throw ShapeError("make_phantom: dimensions must be positive");
  Rng rng(derive_seed(seed, 0xF0A7));
  Plane img = Plane::Zero(h, w);

  // Head outline: GM-intensity shell with a WM-intensity interior.
  const double head_ax = rng.uniform(0.78, 0.88);
  const double head_ay = rng.uniform(0.84, 0.92);
  const double tilt = rng.uniform(-0.12, 0.12);
  const double csf = rng.uniform(0.24, 0.30);
  const double gm = rng.uniform(0.50, 0.58);
  const double wm = rng.uniform(0.78, 0.86);
  paint(img, {0.0, 0.0, head_ax, head_ay, tilt, gm});
  paint(img, {0.0, rng.uniform(-0.03, 0.03), head_ax * 0.80, head_ay * 0.80, tilt, wm});

  // Ventricle-like CSF pair near the center.
  const double vx = rng.uniform(0.10, 0.16);
  const double vay = rng.uniform(0.18, 0.28);
  const double vax = rng.uniform(0.06, 0.10);
  paint(img, {-vx, rng.uniform(-0.08, 0.02), vax, vay, rng.uniform(-0.3, 0.0), csf});
  paint(img, {vx, rng.uniform(-0.08, 0.02), vax, vay, rng.uniform(0.0, 0.3), csf});

  // Random internal structures at tissue-plausible intensities.
  const int extras = 3 + static_cast<int>(rng.uniform_index(4));
  for (int k = 0; k < extras; ++k) {
    const double band = rng.uniform();
    const double base = band < 0.34 ? csf : (band < 0.67 ? gm : wm);
    Ellipse e;
    e.cx = rng.uniform(-0.45, 0.45);
    e.cy = rng.uniform(-0.5, 0.5);
    e.ax = rng.uniform(0.05, 0.16);
    e.ay = rng.uniform(0.05, 0.16);
    e.angle = rng.uniform(0.0, 3.141592653589793);
    e.intensity = base + rng.uniform(-0.04, 0.04);
    // keep structures inside the head interior
    if (e.cx * e.cx / (head_ax * head_ax * 0.49) + e.cy * e.cy / (head_ay * head_ay * 0.49) > 1.0) continue;
    paint(img, e);
  }

  // Smooth multiplicative bias field so tissue intensities are continuous.
  const double gx = rng.uniform(-1.0, 1.0), gy = rng.uniform(-1.0, 1.0);
  const double amp = rng.uniform(0.06, 0.12);
  for (Index i = 0; i < h; ++i) {
    const double y = 2.0 * (static_cast<double>(i) + 0.5) / static_cast<double>(h) - 1.0;
    for (Index j = 0; j < w; ++j) {
      const double x = 2.0 * (static_cast<double>(j) + 0.5) / static_cast<double>(w) - 1.0;
      img(i, j) *= static_cast<float>(1.0 + amp * (gx * x + gy * y));
    }
  }

  // Fine anatomical texture inside the head only.
  const Plane texture = texture_field(h, w, rng);
  const double tex_amp = rng.uniform(0.10, 0.16);
  for (Index i = 0; i < img.size(); ++i)
    if (img.data()[i] > 0.0f)
      img.data()[i] *= static_cast<float>(1.0 + tex_amp * texture.data()[i]);

  const float peak = img.maxCoeff();
  MagnitudeSlice out;
  out.data = peak > 0.0f ? Plane((img / peak).cwiseMax(0.0f)) : img;
  out.scale = 1.0;
  return out;
}

}  // namespace kiqt
