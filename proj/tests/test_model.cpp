#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "kiqt/gradcheck.hpp"
#include "kiqt/loss.hpp"
#include "kiqt/rng.hpp"
#include "kiqt/unet.hpp"

#include <cstring>

using namespace kiqt;

namespace {

template <typename Scalar>
FeatureMapT<Scalar> random_map(Index channels, Index h, Index w, Rng& rng, double amp = 1.0) {
  FeatureMapT<Scalar> f(channels, h, w);
  for (Index i = 0; i < f.data.size(); ++i) f.data.data()[i] = static_cast<Scalar>(rng.uniform(-amp, amp));
  return f;
}

/// Closed-form parameter count from the layer list: conv contributes
/// (in*k*k + 1)*out, the 2x2 transposed convolution (in*4 + 1)*out.
std::size_t expected_param_count(int io_ch, std::array<int, 3> enc, int bott) {
  auto conv = [](int in, int out, int k) { return static_cast<std::size_t>((in * k * k + 1) * out); };
  auto up = [](int in, int out) { return static_cast<std::size_t>((in * 4 + 1) * out); };
  const auto [c1, c2, c3] = enc;
  std::size_t n = 0;
  n += conv(io_ch, c1, 3) + conv(c1, c1, 3);
  n += conv(c1, c2, 3) + conv(c2, c2, 3);
  n += conv(c2, c3, 3) + conv(c3, c3, 3);
  n += conv(c3, bott, 3) + conv(bott, bott, 3);
  n += up(bott, c3) + conv(2 * c3, c3, 3) + conv(c3, c3, 3);
  n += up(c3, c2) + conv(2 * c2, c2, 3) + conv(c2, c2, 3);
  n += up(c2, c1) + conv(2 * c1, c1, 3) + conv(c1, c1, 3);
  n += conv(c1, io_ch, 1);
  return n;
}

}  // namespace

TEST_CASE("layer list matches the published three-block layout") {
  auto net = UNet<float>::build(UNetConfig::full_scale(2), 1);
  const auto layers = net.layer_summary();

  struct Want {
    const char* kind;
    int in, out, k;
    bool relu;
  };
  const std::vector<Want> want = {
      {"conv", 2, 64, 3, true},    {"conv", 64, 64, 3, true},   {"pool", 0, 0, 2, false},
      {"conv", 64, 128, 3, true},  {"conv", 128, 128, 3, true}, {"pool", 0, 0, 2, false},
      {"conv", 128, 256, 3, true}, {"conv", 256, 256, 3, true}, {"pool", 0, 0, 2, false},
      {"conv", 256, 512, 3, true}, {"conv", 512, 512, 3, true}, {"upconv", 512, 256, 2, true},
      {"conv", 512, 256, 3, true}, {"conv", 256, 256, 3, true}, {"upconv", 256, 128, 2, true},
      {"conv", 256, 128, 3, true}, {"conv", 128, 128, 3, true}, {"upconv", 128, 64, 2, true},
      {"conv", 128, 64, 3, true},  {"conv", 64, 64, 3, true},   {"conv", 64, 2, 1, false},
  };
  REQUIRE(layers.size() == want.size());
  for (std::size_t i = 0; i < want.size(); ++i) {
    CHECK(layers[i].kind == want[i].kind);
    if (layers[i].kind != "pool") {
      CHECK(layers[i].in_ch == want[i].in);
      CHECK(layers[i].out_ch == want[i].out);
      CHECK(layers[i].kernel == want[i].k);
      CHECK(layers[i].relu == want[i].relu);
    }
  }
  // First layer maps 2 -> 64 channels with a 3x3 kernel: weight (64, 18).
  const auto params = net.params();
  CHECK(params[0].name == "enc1a.weight");
  CHECK(params[0].rows == 64);
  CHECK(params[0].cols == 18);
}

TEST_CASE("parameter count matches the hand-computed closed form") {
  auto k_net = UNet<float>::build(UNetConfig::full_scale(2), 1);
  CHECK(k_net.parameter_count() == expected_param_count(2, {64, 128, 256}, 512));
  CHECK(k_net.parameter_count() == 7696834u);  // hand-computed once from the layer list

  auto s_net = UNet<float>::build(UNetConfig::full_scale(1), 1);
  CHECK(s_net.parameter_count() == expected_param_count(1, {64, 128, 256}, 512));
  CHECK(s_net.parameter_count() == 7696193u);

  auto desk = UNet<float>::build(UNetConfig::desk_scale(2), 1);
  CHECK(desk.parameter_count() == expected_param_count(2, {8, 16, 32}, 64));
}

TEST_CASE("same seed gives bit-identical initial weights; different seed differs") {
  auto a = UNet<float>::build(UNetConfig::desk_scale(2), 99);
  auto b = UNet<float>::build(UNetConfig::desk_scale(2), 99);
  auto c = UNet<float>::build(UNetConfig::desk_scale(2), 100);
  const auto pa = a.params(), pb = b.params(), pc = c.params();
  bool all_equal = true, any_diff = false;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    if (std::memcmp(pa[i].value, pb[i].value, sizeof(float) * static_cast<std::size_t>(pa[i].size())) != 0)
      all_equal = false;
    if (std::memcmp(pa[i].value, pc[i].value, sizeof(float) * static_cast<std::size_t>(pa[i].size())) != 0)
      any_diff = true;
  }
  CHECK(all_equal);
  CHECK(any_diff);
}

TEST_CASE("forward preserves shape at the full 256x256 size and the minimal size") {
  Rng rng(3);
  {
    auto net = UNet<float>::build(UNetConfig::full_scale(2), 2);
    const auto out = net.infer(random_map<float>(2, 256, 256, rng));
    CHECK(out.channels() == 2);
    CHECK(out.h == 256);
    CHECK(out.w == 256);
  }
  {
    auto net = UNet<float>::build(UNetConfig::full_scale(1), 2);
    const auto out = net.infer(random_map<float>(1, 256, 256, rng));
    CHECK(out.channels() == 1);
    CHECK(out.h == 256);
    CHECK(out.w == 256);
  }
  {
    auto net = UNet<float>::build(UNetConfig::desk_scale(2), 2);
    const auto out = net.infer(random_map<float>(2, 16, 16, rng));
    CHECK(out.channels() == 2);
    CHECK(out.h == 16);
    CHECK(out.w == 16);
  }
}

TEST_CASE("all-zero input with zero biases stays finite") {
  auto net = UNet<float>::build(UNetConfig::desk_scale(2), 7);
  FeatureMap zero(2, 32, 32);
  const auto out = net.infer(zero);
  CHECK(out.data.allFinite());
}

TEST_CASE("invalid channel counts are rejected") {
  UNetConfig bad = UNetConfig::desk_scale(2);
  bad.in_channels = 3;
  bad.out_channels = 3;
  CHECK_THROWS_AS(UNet<float>::build(bad, 1), ConfigError);

  UNetConfig mismatched = UNetConfig::desk_scale(2);
  mismatched.out_channels = 1;
  CHECK_THROWS_AS(UNet<float>::build(mismatched, 1), ConfigError);

  auto net = UNet<float>::build(UNetConfig::desk_scale(2), 1);
  Rng rng(5);
  CHECK_THROWS_AS(net.infer(random_map<float>(1, 16, 16, rng)), ShapeError);
  CHECK_THROWS_AS(net.infer(random_map<float>(2, 12, 12, rng)), ShapeError);
}

TEST_CASE("kIQT and sIQT share the topology, differing only in io channels") {
  auto k_net = UNet<float>::build(UNetConfig::full_scale(2), 1);
  auto s_net = UNet<float>::build(UNetConfig::full_scale(1), 1);
  const auto kl = k_net.layer_summary();
  const auto sl = s_net.layer_summary();
  REQUIRE(kl.size() == sl.size());
  for (std::size_t i = 0; i < kl.size(); ++i) {
    CHECK(kl[i].kind == sl[i].kind);
    CHECK(kl[i].kernel == sl[i].kernel);
    CHECK(kl[i].relu == sl[i].relu);
    const bool first = i == 0;
    const bool last = i + 1 == kl.size();
    if (!first && !last) {
      CHECK(kl[i].in_ch == sl[i].in_ch);
      CHECK(kl[i].out_ch == sl[i].out_ch);
    }
  }
  CHECK(kl.front().in_ch == 2);
  CHECK(sl.front().in_ch == 1);
  CHECK(kl.back().out_ch == 2);
  CHECK(sl.back().out_ch == 1);
}

TEST_CASE("translation covariance: shifting compact input by 8 shifts the output by 8") {
  Rng rng(11);
  auto net = UNet<float>::build(UNetConfig::desk_scale(2), 13);
  const Index h = 128, w = 128, shift = 8;

  // Compact random blob well away from every border (zero biases keep the
  // zero background exactly zero through the whole network).
  FeatureMap x(2, h, w);
  for (Index c = 0; c < 2; ++c)
    for (Index i = 40; i < 88; ++i)
      for (Index j = 40; j < 88; ++j) x.data(c, i * w + j) = static_cast<float>(rng.uniform(-1.0, 1.0));

  FeatureMap x_shifted(2, h, w);
  for (Index c = 0; c < 2; ++c)
    for (Index i = 0; i < h - shift; ++i)
      for (Index j = 0; j < w - shift; ++j)
        x_shifted.data(c, (i + shift) * w + (j + shift)) = x.data(c, i * w + j);

  const FeatureMap y = net.infer(x);
  const FeatureMap y_shifted = net.infer(x_shifted);

  float max_diff = 0.0f;
  for (Index c = 0; c < 2; ++c)
    for (Index i = 24; i < h - 24; ++i)
      for (Index j = 24; j < w - 24; ++j) {
        const float want = y.data(c, (i - shift) * w + (j - shift));
        const float got = y_shifted.data(c, i * w + j);
        max_diff = std::max(max_diff, std::abs(want - got));
      }
  CHECK(max_diff < 1e-3f);
}

TEST_CASE("combined_loss: closed forms and the two-pass oracle") {
  Rng rng(23);
  PlaneT<float> pred(4, 64), target(4, 64);
  for (Index i = 0; i < pred.size(); ++i) {
    pred.data()[i] = static_cast<float>(rng.uniform(-2.0, 2.0));
    target.data()[i] = static_cast<float>(rng.uniform(-2.0, 2.0));
  }

  CHECK(combined_loss<float>(pred, pred) == 0.0f);

  const PlaneT<float> off = target.array() + 0.5f;
  CHECK(combined_loss<float>(off, target) == doctest::Approx(0.75).epsilon(1e-6));

  // Independent two-pass oracle: MAE then MSE in separate full passes.
  double mae = 0.0;
  for (Index i = 0; i < pred.size(); ++i) mae += std::abs(double(pred.data()[i]) - double(target.data()[i]));
  mae /= static_cast<double>(pred.size());
  double mse = 0.0;
  for (Index i = 0; i < pred.size(); ++i) {
    const double d = double(pred.data()[i]) - double(target.data()[i]);
    mse += d * d;
  }
  mse /= static_cast<double>(pred.size());
  CHECK(combined_loss<float>(pred, target) == doctest::Approx(mae + mse).epsilon(1e-7));

  PlaneT<float> wrong(3, 64);
  CHECK_THROWS_AS(combined_loss<float>(pred, wrong), ShapeError);
}

TEST_CASE("doubling the residual doubles exactly the MSE gradient component") {
  Rng rng(29);
  PlaneT<double> target(2, 32), pred(2, 32);
  for (Index i = 0; i < pred.size(); ++i) {
    target.data()[i] = rng.uniform(-1.0, 1.0);
    pred.data()[i] = target.data()[i] + rng.uniform(0.1, 0.9) * (rng.uniform() < 0.5 ? -1.0 : 1.0);
  }
  PlaneT<double> doubled = target + 2.0 * (pred - target);
  const PlaneT<double> g1 = combined_loss_grad<double>(pred, target);
  const PlaneT<double> g2 = combined_loss_grad<double>(doubled, target);
  // Same signs, so g2 - g1 isolates the MSE part: 2r/N.
  const PlaneT<double> mse_part = 2.0 * (pred - target) / static_cast<double>(pred.size());
  CHECK((g2 - g1 - mse_part).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("gradient check: reduced double-precision network vs central differences") {
  Rng rng(31);
  auto net = UNet<double>::build(UNetConfig::gradcheck_scale(2), 17);
  const FeatureMapT<double> input = random_map<double>(2, 16, 16, rng);

  // Keep residuals bounded away from zero so the MAE kink never flips
  // inside the finite-difference interval.
  typename UNet<double>::Workspace ws;
  net.forward(input, ws);
  FeatureMapT<double> target = ws.out;
  for (Index i = 0; i < target.data.size(); ++i)
    target.data.data()[i] += (rng.uniform() < 0.5 ? -1.0 : 1.0) * rng.uniform(0.5, 0.6);

  const auto result = loss_gradient_check<double>(net, input, target, 120, 7);
  CHECK(result.params_checked >= 100);
  CHECK(result.max_rel_error < 1e-2);
}

TEST_CASE("gradient vanishes at a zero-residual point") {
  Rng rng(37);
  auto net = UNet<double>::build(UNetConfig::gradcheck_scale(2), 19);
  const FeatureMapT<double> input = random_map<double>(2, 16, 16, rng);
  typename UNet<double>::Workspace ws;
  net.forward(input, ws);
  const FeatureMapT<double> target = ws.out;

  net.zero_grads();
  net.backward(as_feature_map(combined_loss_grad<double>(ws.out.data, target.data), ws.out.h, ws.out.w), ws);
  double norm2 = 0.0;
  for (const auto& p : net.params())
    for (Index i = 0; i < p.size(); ++i) norm2 += p.grad[i] * p.grad[i];
  CHECK(std::sqrt(norm2) < 1e-6);
}
