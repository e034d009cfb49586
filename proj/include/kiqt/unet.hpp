#pragma once

#include "kiqt/layers.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace kiqt {

/// Three-block U-Net configuration. The dual-channel k-space variant uses
/// 2 input/output channels, the spatial variant 1; both share the same
/// topology otherwise.
struct UNetConfig {
  int in_channels = 2;
  int out_channels = 2;
  std::array<int, 3> encoder_channels{64, 128, 256};
  int bottleneck_channels = 512;
  int kernel = 3;
  int pool = 2;

  static UNetConfig full_scale(int channels) {
    UNetConfig c;
    c.in_channels = c.out_channels = channels;
    return c;
  }
  static UNetConfig desk_scale(int channels) {
    UNetConfig c;
    c.in_channels = c.out_channels = channels;
    c.encoder_channels = {8, 16, 32};
    c.bottleneck_channels = 64;
    return c;
  }
  static UNetConfig gradcheck_scale(int channels) {
    UNetConfig c;
    c.in_channels = c.out_channels = channels;
    c.encoder_channels = {4, 8, 16};
    c.bottleneck_channels = 32;
    return c;
  }
};

inline void validate(const UNetConfig& cfg) {
  if (cfg.in_channels != 1 && cfg.in_channels != 2)
    throw ConfigError("UNetConfig: in_channels must be 1 or 2, got " + std::to_string(cfg.in_channels));
  if (cfg.out_channels != cfg.in_channels) throw ConfigError("UNetConfig: out_channels must equal in_channels");
  if (cfg.kernel != 3) throw ConfigError("UNetConfig: kernel must be 3");
  if (cfg.pool != 2) throw ConfigError("UNetConfig: pool must be 2");
  for (const int c : cfg.encoder_channels)
    if (c < 1) throw ConfigError("UNetConfig: encoder channels must be positive");
  if (cfg.bottleneck_channels < 1) throw ConfigError("UNetConfig: bottleneck channels must be positive");
}

/// One row of the structural summary used by topology assertions.
struct LayerInfo {
  std::string name;
  std::string kind;  // conv | pool | upconv
  int in_ch = 0, out_ch = 0, kernel = 0;
  bool relu = false;
};

/// Dual-channel U-Net: three two-conv encoder blocks with 2x2 max
/// pooling, a two-conv bottleneck, and a mirrored decoder with 2x2
/// transposed-convolution upsampling and skip concatenation ([upsampled;
/// skip] along channels). ReLU follows every convolution except the final
/// 1x1 projection, which stays linear because k-space values are signed.
template <typename Scalar>
class UNet {
public:
  /// All intermediates needed by backward. Reused across steps to avoid
  /// churn; one workspace per concurrent caller.
  struct Workspace {
    FeatureMapT<Scalar> x, a1, a2, p1, b1, b2, p2, c1, c2, p3, d1, d2;
    FeatureMapT<Scalar> u3, cat3, e1, e2, u2, cat2, f1, f2, u1, cat1, g1, g2, out;
    typename Conv2d<Scalar>::Cache enc1a, enc1b, enc2a, enc2b, enc3a, enc3b, bott_a, bott_b;
    typename Conv2d<Scalar>::Cache dec3a, dec3b, dec2a, dec2b, dec1a, dec1b, head;
    ArgmaxGrid pool1, pool2, pool3;
  };

  static UNet build(const UNetConfig& cfg, std::uint64_t seed) {
    validate(cfg);
    UNet net;
    net.cfg_ = cfg;
    net.init_seed_ = seed;
    Rng rng(derive_seed(seed, 0x0E7));
    const auto [c1, c2, c3] = cfg.encoder_channels;
    const int cb = cfg.bottleneck_channels;
    const int k = cfg.kernel;

    net.enc1a_.init(cfg.in_channels, c1, k, true, "enc1a", rng);
    net.enc1b_.init(c1, c1, k, true, "enc1b", rng);
    net.enc2a_.init(c1, c2, k, true, "enc2a", rng);
    net.enc2b_.init(c2, c2, k, true, "enc2b", rng);
    net.enc3a_.init(c2, c3, k, true, "enc3a", rng);
    net.enc3b_.init(c3, c3, k, true, "enc3b", rng);
    net.bott_a_.init(c3, cb, k, true, "bott_a", rng);
    net.bott_b_.init(cb, cb, k, true, "bott_b", rng);
    net.up3_.init(cb, c3, true, "up3", rng);
    net.dec3a_.init(2 * c3, c3, k, true, "dec3a", rng);
    net.dec3b_.init(c3, c3, k, true, "dec3b", rng);
    net.up2_.init(c3, c2, true, "up2", rng);
    net.dec2a_.init(2 * c2, c2, k, true, "dec2a", rng);
    net.dec2b_.init(c2, c2, k, true, "dec2b", rng);
    net.up1_.init(c2, c1, true, "up1", rng);
    net.dec1a_.init(2 * c1, c1, k, true, "dec1a", rng);
    net.dec1b_.init(c1, c1, k, true, "dec1b", rng);
    net.head_.init(c1, cfg.out_channels, 1, false, "head", rng);
    return net;
  }

  const UNetConfig& config() const { return cfg_; }
  std::uint64_t weight_init_seed() const { return init_seed_; }

  /// Training-mode forward: caches every intermediate in `ws`.
  const FeatureMapT<Scalar>& forward(const FeatureMapT<Scalar>& input, Workspace& ws) const {
    check_input(input);
    ws.x = input;
    ws.a1 = enc1a_.forward(ws.x, &ws.enc1a);
    ws.a2 = enc1b_.forward(ws.a1, &ws.enc1b);
    ws.p1 = pool_.forward(ws.a2, &ws.pool1);
    ws.b1 = enc2a_.forward(ws.p1, &ws.enc2a);
    ws.b2 = enc2b_.forward(ws.b1, &ws.enc2b);
    ws.p2 = pool_.forward(ws.b2, &ws.pool2);
    ws.c1 = enc3a_.forward(ws.p2, &ws.enc3a);
    ws.c2 = enc3b_.forward(ws.c1, &ws.enc3b);
    ws.p3 = pool_.forward(ws.c2, &ws.pool3);
    ws.d1 = bott_a_.forward(ws.p3, &ws.bott_a);
    ws.d2 = bott_b_.forward(ws.d1, &ws.bott_b);
    ws.u3 = up3_.forward(ws.d2);
    ws.cat3 = concat_channels(ws.u3, ws.c2);
    ws.e1 = dec3a_.forward(ws.cat3, &ws.dec3a);
    ws.e2 = dec3b_.forward(ws.e1, &ws.dec3b);
    ws.u2 = up2_.forward(ws.e2);
    ws.cat2 = concat_channels(ws.u2, ws.b2);
    ws.f1 = dec2a_.forward(ws.cat2, &ws.dec2a);
    ws.f2 = dec2b_.forward(ws.f1, &ws.dec2b);
    ws.u1 = up1_.forward(ws.f2);
    ws.cat1 = concat_channels(ws.u1, ws.a2);
    ws.g1 = dec1a_.forward(ws.cat1, &ws.dec1a);
    ws.g2 = dec1b_.forward(ws.g1, &ws.dec1b);
    ws.out = head_.forward(ws.g2, &ws.head);
    return ws.out;
  }

  /// Inference forward: no caches, bounded scratch memory.
  FeatureMapT<Scalar> infer(const FeatureMapT<Scalar>& input) const {
    check_input(input);
    FeatureMapT<Scalar> a1 = enc1a_.forward(input, nullptr);
    FeatureMapT<Scalar> a2 = enc1b_.forward(a1, nullptr);
    FeatureMapT<Scalar> p1 = pool_.forward(a2, nullptr);
    FeatureMapT<Scalar> b1 = enc2a_.forward(p1, nullptr);
    FeatureMapT<Scalar> b2 = enc2b_.forward(b1, nullptr);
    FeatureMapT<Scalar> p2 = pool_.forward(b2, nullptr);
    FeatureMapT<Scalar> c1 = enc3a_.forward(p2, nullptr);
    FeatureMapT<Scalar> c2 = enc3b_.forward(c1, nullptr);
    FeatureMapT<Scalar> p3 = pool_.forward(c2, nullptr);
    FeatureMapT<Scalar> d1 = bott_a_.forward(p3, nullptr);
    FeatureMapT<Scalar> d2 = bott_b_.forward(d1, nullptr);
    FeatureMapT<Scalar> u3 = up3_.forward(d2);
    FeatureMapT<Scalar> e1 = dec3a_.forward(concat_channels(u3, c2), nullptr);
    FeatureMapT<Scalar> e2 = dec3b_.forward(e1, nullptr);
    FeatureMapT<Scalar> u2 = up2_.forward(e2);
    FeatureMapT<Scalar> f1 = dec2a_.forward(concat_channels(u2, b2), nullptr);
    FeatureMapT<Scalar> f2 = dec2b_.forward(f1, nullptr);
    FeatureMapT<Scalar> u1 = up1_.forward(f2);
    FeatureMapT<Scalar> g1 = dec1a_.forward(concat_channels(u1, a2), nullptr);
    FeatureMapT<Scalar> g2 = dec1b_.forward(g1, nullptr);
    return head_.forward(g2, nullptr);
  }

  /// Backward pass for the forward cached in `ws`; accumulates parameter
  /// gradients and returns the gradient wrt the input.
  FeatureMapT<Scalar> backward(const FeatureMapT<Scalar>& grad_out, Workspace& ws) {
    FeatureMapT<Scalar> gg2 = head_.backward(ws.g2, ws.out, ws.head, grad_out);
    FeatureMapT<Scalar> gg1 = dec1b_.backward(ws.g1, ws.g2, ws.dec1b, gg2);
    FeatureMapT<Scalar> gcat1 = dec1a_.backward(ws.cat1, ws.g1, ws.dec1a, gg1);
    auto [gu1, gskip1] = split_channels(gcat1, ws.u1.channels());
    FeatureMapT<Scalar> gf2 = up1_.backward(ws.f2, ws.u1, gu1);
    FeatureMapT<Scalar> gf1 = dec2b_.backward(ws.f1, ws.f2, ws.dec2b, gf2);
    FeatureMapT<Scalar> gcat2 = dec2a_.backward(ws.cat2, ws.f1, ws.dec2a, gf1);
    auto [gu2, gskip2] = split_channels(gcat2, ws.u2.channels());
    FeatureMapT<Scalar> ge2 = up2_.backward(ws.e2, ws.u2, gu2);
    FeatureMapT<Scalar> ge1 = dec3b_.backward(ws.e1, ws.e2, ws.dec3b, ge2);
    FeatureMapT<Scalar> gcat3 = dec3a_.backward(ws.cat3, ws.e1, ws.dec3a, ge1);
    auto [gu3, gskip3] = split_channels(gcat3, ws.u3.channels());
    FeatureMapT<Scalar> gd2 = up3_.backward(ws.d2, ws.u3, gu3);
    FeatureMapT<Scalar> gd1 = bott_b_.backward(ws.d1, ws.d2, ws.bott_b, gd2);
    FeatureMapT<Scalar> gp3 = bott_a_.backward(ws.p3, ws.d1, ws.bott_a, gd1);
    FeatureMapT<Scalar> gc2 = pool_.backward(gp3, ws.pool3, ws.c2.h, ws.c2.w);
    gc2.data += gskip3.data;
    FeatureMapT<Scalar> gc1 = enc3b_.backward(ws.c1, ws.c2, ws.enc3b, gc2);
    FeatureMapT<Scalar> gp2 = enc3a_.backward(ws.p2, ws.c1, ws.enc3a, gc1);
    FeatureMapT<Scalar> gb2 = pool_.backward(gp2, ws.pool2, ws.b2.h, ws.b2.w);
    gb2.data += gskip2.data;
    FeatureMapT<Scalar> gb1 = enc2b_.backward(ws.b1, ws.b2, ws.enc2b, gb2);
    FeatureMapT<Scalar> gp1 = enc2a_.backward(ws.p1, ws.b1, ws.enc2a, gb1);
    FeatureMapT<Scalar> ga2 = pool_.backward(gp1, ws.pool1, ws.a2.h, ws.a2.w);
    ga2.data += gskip1.data;
    FeatureMapT<Scalar> ga1 = enc1b_.backward(ws.a1, ws.a2, ws.enc1b, ga2);
    return enc1a_.backward(ws.x, ws.a1, ws.enc1a, ga1);
  }

  void zero_grads() {
    for (auto& p : params()) std::fill(p.grad, p.grad + p.size(), Scalar(0));
  }

  std::vector<ParamRef<Scalar>> params() {
    std::vector<ParamRef<Scalar>> out;
    enc1a_.collect(out);
    enc1b_.collect(out);
    enc2a_.collect(out);
    enc2b_.collect(out);
    enc3a_.collect(out);
    enc3b_.collect(out);
    bott_a_.collect(out);
    bott_b_.collect(out);
    up3_.collect(out);
    dec3a_.collect(out);
    dec3b_.collect(out);
    up2_.collect(out);
    dec2a_.collect(out);
    dec2b_.collect(out);
    up1_.collect(out);
    dec1a_.collect(out);
    dec1b_.collect(out);
    head_.collect(out);
    return out;
  }

  std::size_t parameter_count() {
    std::size_t n = 0;
    for (const auto& p : params()) n += static_cast<std::size_t>(p.size());
    return n;
  }

  std::vector<LayerInfo> layer_summary() const {
    std::vector<LayerInfo> out;
    auto conv = [&](const Conv2d<Scalar>& l) {
      out.push_back({l.name, "conv", l.in_ch, l.out_ch, l.ksize, l.relu});
    };
    auto up = [&](const TransposedConv2<Scalar>& l) {
      out.push_back({l.name, "upconv", l.in_ch, l.out_ch, 2, l.relu});
    };
    auto pool = [&](const char* name) { out.push_back({name, "pool", 0, 0, 2, false}); };
    conv(enc1a_);
    conv(enc1b_);
    pool("pool1");
    conv(enc2a_);
    conv(enc2b_);
    pool("pool2");
    conv(enc3a_);
    conv(enc3b_);
    pool("pool3");
    conv(bott_a_);
    conv(bott_b_);
    up(up3_);
    conv(dec3a_);
    conv(dec3b_);
    up(up2_);
    conv(dec2a_);
    conv(dec2b_);
    up(up1_);
    conv(dec1a_);
    conv(dec1b_);
    conv(head_);
    return out;
  }

private:
  static std::pair<FeatureMapT<Scalar>, FeatureMapT<Scalar>> split_channels(const FeatureMapT<Scalar>& g,
                                                                            Index top_channels) {
    FeatureMapT<Scalar> top(top_channels, g.h, g.w);
    FeatureMapT<Scalar> bottom(g.channels() - top_channels, g.h, g.w);
    top.data = g.data.topRows(top_channels);
    bottom.data = g.data.bottomRows(g.channels() - top_channels);
    return {std::move(top), std::move(bottom)};
  }

  void check_input(const FeatureMapT<Scalar>& input) const {
    if (input.channels() != cfg_.in_channels)
      throw ShapeError("UNet: expected " + std::to_string(cfg_.in_channels) + " input channels, got " +
                       std::to_string(input.channels()));
    if (input.h % 8 != 0 || input.w % 8 != 0 || input.h < 8 || input.w < 8)
      throw ShapeError("UNet: H and W must be positive multiples of 8");
  }

  UNetConfig cfg_;
  std::uint64_t init_seed_ = 0;
  Conv2d<Scalar> enc1a_, enc1b_, enc2a_, enc2b_, enc3a_, enc3b_, bott_a_, bott_b_;
  Conv2d<Scalar> dec3a_, dec3b_, dec2a_, dec2b_, dec1a_, dec1b_, head_;
  TransposedConv2<Scalar> up3_, up2_, up1_;
  MaxPool2<Scalar> pool_;
};

}  // namespace kiqt
