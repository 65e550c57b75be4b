#include <doctest.h>

#include <cmath>
#include <fstream>

#include "sra/dsnet.hpp"
#include "sra/resample.hpp"
#include "test_helpers.hpp"

using namespace sra;

namespace {

// ---- straight-line reimplementation used as the network oracle --------
// Materialized concatenation, plain 6-loop convolution, hard-coded
// [1 3 3 1]/8 reduction for the residual base.

TensorD naive_concat(const std::vector<TensorD>& parts) {
  int channels = 0;
  for (const auto& p : parts) channels += p.channels;
  TensorD out(channels, parts[0].height, parts[0].width);
  int c0 = 0;
  for (const auto& p : parts) {
    for (int c = 0; c < p.channels; ++c)
      for (int y = 0; y < p.height; ++y)
        for (int x = 0; x < p.width; ++x) out.at(c0 + c, y, x) = p.at(c, y, x);
    c0 += p.channels;
  }
  return out;
}

TensorD naive_conv(const TensorD& x, const ConvLayerT<double>& p) {
  const int s = p.stride;
  const int oh = (x.height + s - 1) / s;
  const int ow = (x.width + s - 1) / s;
  const int py = (p.kernel_h - 1) / 2;
  const int px = (p.kernel_w - 1) / 2;
  TensorD out(p.out_channels, oh, ow);
  for (int oc = 0; oc < p.out_channels; ++oc)
    for (int oy = 0; oy < oh; ++oy)
      for (int ox = 0; ox < ow; ++ox) {
        double acc = p.bias[static_cast<std::size_t>(oc)];
        for (int ic = 0; ic < p.in_channels; ++ic)
          for (int ky = 0; ky < p.kernel_h; ++ky)
            for (int kx = 0; kx < p.kernel_w; ++kx) {
              const int iy = oy * s - py + ky;
              const int ix = ox * s - px + kx;
              if (iy < 0 || iy >= x.height || ix < 0 || ix >= x.width) continue;
              acc += p.w(oc, ic, ky, kx) * x.at(ic, iy, ix);
            }
        out.at(oc, oy, ox) = acc;
      }
  return out;
}

TensorD naive_lrelu(const TensorD& x, double slope) {
  TensorD out = x;
  for (auto& v : out.data)
    if (v < 0.0) v *= slope;
  return out;
}

TensorD naive_rdb(const TensorD& x, const WeightsT<double>& w, const std::string& prefix,
                  const DSNetConfig& cfg) {
  std::vector<TensorD> feats{x};
  for (int k = 1; k <= cfg.rdb_layers; ++k) {
    const TensorD pre =
        naive_conv(naive_concat(feats), w.layer(prefix + ".conv" + std::to_string(k)));
    feats.push_back(naive_lrelu(pre, cfg.lrelu_slope));
  }
  TensorD fused = naive_conv(naive_concat(feats), w.layer(prefix + ".fuse"));
  for (std::size_t i = 0; i < fused.data.size(); ++i) fused.data[i] += x.data[i];
  return fused;
}

TensorD naive_bilinear_half(const TensorD& x) {
  // separable [1 3 3 1]/8 with edge clamp, sampling 2i+0.5
  auto clampi = [](int v, int n) { return std::clamp(v, 0, n - 1); };
  TensorD tmp(x.channels, x.height, x.width / 2);
  for (int c = 0; c < x.channels; ++c)
    for (int y = 0; y < x.height; ++y)
      for (int o = 0; o < tmp.width; ++o)
        tmp.at(c, y, o) = (1.0 * x.at(c, y, clampi(2 * o - 1, x.width)) +
                           3.0 * x.at(c, y, clampi(2 * o, x.width)) +
                           3.0 * x.at(c, y, clampi(2 * o + 1, x.width)) +
                           1.0 * x.at(c, y, clampi(2 * o + 2, x.width))) /
                          8.0;
  TensorD out(x.channels, x.height / 2, tmp.width);
  for (int c = 0; c < x.channels; ++c)
    for (int o = 0; o < out.height; ++o)
      for (int xx = 0; xx < out.width; ++xx)
        out.at(c, o, xx) = (1.0 * tmp.at(c, clampi(2 * o - 1, x.height), xx) +
                            3.0 * tmp.at(c, clampi(2 * o, x.height), xx) +
                            3.0 * tmp.at(c, clampi(2 * o + 1, x.height), xx) +
                            1.0 * tmp.at(c, clampi(2 * o + 2, x.height), xx)) /
                           8.0;
  return out;
}

TensorD naive_dsnet(const TensorD& x, const WeightsT<double>& w, const DSNetConfig& cfg) {
  const double s = cfg.lrelu_slope;
  const TensorD d0 = naive_lrelu(naive_conv(x, w.layer("down")), s);
  const TensorD f0 = naive_lrelu(naive_conv(d0, w.layer("feat")), s);
  std::vector<TensorD> g;
  for (int i = 1; i <= cfg.num_rdb; ++i) {
    TensorD in_i;
    if (i == 1) {
      in_i = f0;
    } else {
      std::vector<TensorD> parts{d0};
      for (const auto& gi : g) parts.push_back(gi);
      in_i =
          naive_lrelu(naive_conv(naive_concat(parts), w.layer("cascade" + std::to_string(i))), s);
    }
    g.push_back(naive_rdb(in_i, w, "rdb" + std::to_string(i), cfg));
  }
  std::vector<TensorD> parts{d0};
  for (const auto& gi : g) parts.push_back(gi);
  const TensorD rl1 = naive_lrelu(naive_conv(naive_concat(parts), w.layer("rl1")), s);
  TensorD skip = rl1;
  for (std::size_t i = 0; i < skip.data.size(); ++i) skip.data[i] += f0.data[i];
  const TensorD rl2 = naive_lrelu(naive_conv(skip, w.layer("rl2")), s);
  TensorD y = naive_conv(rl2, w.layer("final"));
  const TensorD base = naive_bilinear_half(x);
  for (std::size_t i = 0; i < y.data.size(); ++i) y.data[i] += base.data[i];
  return y;
}

// Random parameters including nonzero biases.
ModelWeights dense_random_weights(const DSNetConfig& cfg, std::uint64_t seed) {
  ModelWeights w = random_weights(cfg, seed);
  std::mt19937_64 rng(seed ^ 0xb1a5);
  for (auto& l : w.layers)
    for (auto& b : l.bias) b = static_cast<float>(0.2 * (test::unit_draw(rng) - 0.5));
  return w;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a[i] - b[i]));
  return m;
}

const DSNetConfig kTiny{2, 8, 2, 8, 0.2};

}  // namespace

TEST_CASE("plain convolution against hand-computed sums") {
  ConvParams p;
  p.name = "t";
  p.out_channels = p.in_channels = 1;
  p.kernel_h = p.kernel_w = 3;
  p.stride = 1;
  p.weights.assign(9, 1.0f);
  p.bias.assign(1, 0.0f);
  Tensor3 x(1, 3, 3, 1.0f);
  const Tensor3 y = conv2d(x, p);
  CHECK(y.at(0, 1, 1) == 9.0f);
  CHECK(y.at(0, 0, 1) == 6.0f);
  CHECK(y.at(0, 1, 0) == 6.0f);
  CHECK(y.at(0, 0, 0) == 4.0f);
  CHECK(y.at(0, 2, 2) == 4.0f);
}

TEST_CASE("1x1 identity kernel is the identity") {
  ConvParams p;
  p.name = "id";
  p.out_channels = p.in_channels = 1;
  p.kernel_h = p.kernel_w = 1;
  p.stride = 1;
  p.weights.assign(1, 1.0f);
  p.bias.assign(1, 0.0f);
  const Tensor3 x = test::random_tensor(1, 5, 7, 2);
  CHECK(conv2d(x, p).data == x.data);
}

TEST_CASE("stride-2 convolution halves 96x96") {
  ConvParams p;
  p.name = "s2";
  p.out_channels = 4;
  p.in_channels = 3;
  p.kernel_h = p.kernel_w = 3;
  p.stride = 2;
  p.weights.assign(p.weight_count(), 0.01f);
  p.bias.assign(4, 0.0f);
  const Tensor3 x = test::random_tensor(3, 96, 96, 3);
  const Tensor3 y = conv2d(x, p);
  CHECK(y.channels == 4);
  CHECK(y.height == 48);
  CHECK(y.width == 48);
}

TEST_CASE("channel mismatch raises a shape error") {
  ConvParams p;
  p.name = "bad";
  p.out_channels = 1;
  p.in_channels = 2;
  p.kernel_h = p.kernel_w = 1;
  p.stride = 1;
  p.weights.assign(2, 1.0f);
  p.bias.assign(1, 0.0f);
  const Tensor3 x = test::random_tensor(1, 4, 4, 4);
  CHECK_THROWS_AS(conv2d(x, p), ShapeError);
}

TEST_CASE("leaky relu definition and the relu limit") {
  Tensor3 x(1, 1, 3);
  x.at(0, 0, 0) = 1.0f;
  x.at(0, 0, 1) = -1.0f;
  x.at(0, 0, 2) = 0.0f;
  const Tensor3 y = leaky_relu(x, 0.2);
  CHECK(y.at(0, 0, 0) == 1.0f);
  CHECK(y.at(0, 0, 1) == doctest::Approx(-0.2f));
  CHECK(y.at(0, 0, 2) == 0.0f);
  const Tensor3 r = leaky_relu(x, 0.0);
  CHECK(r.at(0, 0, 1) == 0.0f);
}

TEST_CASE("zero-weight residual dense block is the identity") {
  const DSNetConfig cfg = kTiny;
  const ModelWeights w = zero_weights(cfg);
  const Tensor3 x = test::random_tensor(cfg.base_channels, 12, 12, 5, -1.0, 1.0);
  std::span<const ConvParams> stages(&w.layer("rdb1.conv1"), 2);
  const Tensor3 y = rdb_forward<float>(x, stages, w.layer("rdb1.fuse"), cfg.lrelu_slope);
  CHECK(y.data == x.data);
  CHECK(y.channels == cfg.base_channels);
}

TEST_CASE("residual dense block matches the naive oracle") {
  const DSNetConfig cfg{1, 8, 3, 4, 0.2};
  const ModelWeightsD w = dense_random_weights(cfg, 77).cast<double>();
  const TensorD x = test::random_tensor_d(8, 10, 10, 6, -1.0, 1.0);
  std::span<const ConvLayerT<double>> stages(&w.layer("rdb1.conv1"), 3);
  const TensorD y = rdb_forward<double>(x, stages, w.layer("rdb1.fuse"), cfg.lrelu_slope);
  const TensorD oracle = naive_rdb(x, w, "rdb1", cfg);
  CHECK(max_abs_diff(y.data, oracle.data) < 1e-12);
}

TEST_CASE("zero-weight network reduces to the bilinear base") {
  const ModelWeights w = zero_weights(kTiny);
  for (std::uint64_t seed : {1u, 2u, 3u, 4u}) {
    const Tensor3 x = test::random_tensor(3, 96, 96, seed);
    const Tensor3 y = dsnet_forward(x, w, kTiny);
    const Tensor3 base = downsample2x(x, FilterKind::Bilinear);
    REQUIRE(y.data.size() == base.data.size());
    for (std::size_t i = 0; i < y.data.size(); ++i)
      CHECK(std::fabs(static_cast<double>(y.data[i]) - base.data[i]) < 1e-6);
  }
}

TEST_CASE("tiny network matches the straight-line oracle") {
  const ModelWeights wf = dense_random_weights(kTiny, 123);
  const ModelWeightsD wd = wf.cast<double>();
  const TensorD xd = test::random_tensor_d(3, 32, 32, 9);
  const TensorD yd = dsnet_forward<double>(xd, wd, kTiny);
  const TensorD oracle = naive_dsnet(xd, wd, kTiny);
  CHECK(max_abs_diff(yd.data, oracle.data) < 1e-12);

  // float path agrees with the double oracle to float precision
  const Tensor3 yf = dsnet_forward<float>(xd.cast<float>(), wf, kTiny);
  double m = 0.0;
  for (std::size_t i = 0; i < yf.data.size(); ++i)
    m = std::max(m, std::fabs(static_cast<double>(yf.data[i]) - oracle.data[i]));
  CHECK(m < 1e-5);
}

TEST_CASE("output shape contract over random configurations") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 4; ++trial) {
    DSNetConfig cfg;
    cfg.num_rdb = 1 + static_cast<int>(rng() % 3);
    cfg.base_channels = 4 + static_cast<int>(rng() % 5);
    cfg.rdb_layers = 1 + static_cast<int>(rng() % 3);
    cfg.rdb_growth = 2 + static_cast<int>(rng() % 6);
    const int h = 2 * (6 + static_cast<int>(rng() % 12));
    const int w = 2 * (6 + static_cast<int>(rng() % 12));
    const Tensor3 x = test::random_tensor(3, h, w, rng());
    const Tensor3 y = dsnet_forward(x, random_weights(cfg, rng()), cfg);
    CHECK(y.channels == 3);
    CHECK(y.height == h / 2);
    CHECK(y.width == w / 2);
  }
}

TEST_CASE("forward passes are bit-identical across runs") {
  const ModelWeights w = dense_random_weights(kTiny, 55);
  const Tensor3 x = test::random_tensor(3, 96, 96, 4);
  const Tensor3 a = dsnet_forward(x, w, kTiny);
  const Tensor3 b = dsnet_forward(x, w, kTiny);
  CHECK(a.data == b.data);
}

TEST_CASE("tiled frame reduction is independent of the thread count") {
  const ModelWeights w = dense_random_weights(kTiny, 56);
  const Frame f = test::random_frame(184, 96, 10, ChromaFormat::YCbCr420, 77);
  const Frame a = dsnet_downsample_frame(f, w, kTiny, 1);
  const Frame b = dsnet_downsample_frame(f, w, kTiny, 2);
  const Frame c = dsnet_downsample_frame(f, w, kTiny, 3);
  CHECK(a == b);
  CHECK(a == c);
  CHECK(a.width == 92);
  CHECK(a.height == 48);
}

TEST_CASE("weight files round trip bit-exactly") {
  test::TempDir tmp("weights");
  const ModelWeights w = dense_random_weights(kTiny, 31);
  const auto path = tmp / "w.dsnw";
  save_weights(w, path);
  const ModelWeights back = load_weights(path, kTiny);
  REQUIRE(back.layers.size() == w.layers.size());
  for (std::size_t i = 0; i < w.layers.size(); ++i) {
    CHECK(back.layers[i].name == w.layers[i].name);
    CHECK(back.layers[i].weights == w.layers[i].weights);
    CHECK(back.layers[i].bias == w.layers[i].bias);
    CHECK(back.layers[i].stride == w.layers[i].stride);
  }
}

TEST_CASE("corrupt weight files produce named errors") {
  test::TempDir tmp("badweights");
  const auto path = tmp / "w.dsnw";
  save_weights(dense_random_weights(kTiny, 1), path);

  SUBCASE("truncated file") {
    const auto truncated = tmp / "trunc.dsnw";
    std::filesystem::copy_file(path, truncated);
    std::filesystem::resize_file(truncated, std::filesystem::file_size(truncated) / 2);
    CHECK_THROWS_AS(load_weights(truncated, kTiny), FormatError);
  }
  SUBCASE("bad magic") {
    const auto bad = tmp / "bad.dsnw";
    std::filesystem::copy_file(path, bad);
    std::fstream f(bad, std::ios::in | std::ios::out | std::ios::binary);
    f.write("XXXX", 4);
    f.close();
    CHECK_THROWS_AS(load_weights(bad, kTiny), FormatError);
  }
  SUBCASE("schema mismatch names the layer") {
    DSNetConfig bigger = kTiny;
    bigger.num_rdb = 3;
    try {
      (void)load_weights(path, bigger);
      FAIL("expected a format error");
    } catch (const FormatError& e) {
      CHECK(std::string(e.what()).find("cascade3") != std::string::npos);
    }
  }
  SUBCASE("wrong shape names the layer") {
    DSNetConfig fatter = kTiny;
    fatter.base_channels = 16;
    try {
      (void)load_weights(path, fatter);
      FAIL("expected a format error");
    } catch (const FormatError& e) {
      CHECK(std::string(e.what()).find("down") != std::string::npos);
    }
  }
  SUBCASE("unexpected extra entry is rejected") {
    auto entries = load_raw_entries(path);
    RawTensorEntry extra;
    extra.name = "mystery";
    extra.dims = {1};
    extra.values = {1.0f};
    entries.push_back(extra);
    const auto extra_path = tmp / "extra.dsnw";
    save_raw_entries(extra_path, entries);
    try {
      (void)load_weights(extra_path, kTiny);
      FAIL("expected a format error");
    } catch (const FormatError& e) {
      CHECK(std::string(e.what()).find("mystery") != std::string::npos);
    }
  }
}

TEST_CASE("parameter counting") {
  // hand enumeration for the minimal configuration:
  //   down 3->1 3x3 (28), feat 10, rdb1.conv1 10, rdb1.fuse 3,
  //   rl1 3, rl2 10, final 30
  CHECK(param_count({1, 1, 1, 1, 0.2}) == 94);

  // independent closed form
  auto closed_form = [](const DSNetConfig& c) {
    auto conv = [](std::int64_t o, std::int64_t i, std::int64_t k) { return o * i * k * k + o; };
    std::int64_t n = conv(c.base_channels, 3, 3) + conv(c.base_channels, c.base_channels, 3);
    for (int i = 2; i <= c.num_rdb; ++i)
      n += conv(c.base_channels, static_cast<std::int64_t>(c.base_channels) * i, 1);
    for (int i = 1; i <= c.num_rdb; ++i) {
      for (int k = 1; k <= c.rdb_layers; ++k)
        n += conv(c.rdb_growth, c.base_channels + static_cast<std::int64_t>(k - 1) * c.rdb_growth,
                  3);
      n += conv(c.base_channels,
                c.base_channels + static_cast<std::int64_t>(c.rdb_layers) * c.rdb_growth, 1);
    }
    n += conv(c.base_channels, static_cast<std::int64_t>(c.base_channels) * (c.num_rdb + 1), 1);
    n += conv(c.base_channels, c.base_channels, 3);
    n += conv(3, c.base_channels, 3);
    return static_cast<std::uint64_t>(n);
  };
  for (const DSNetConfig& cfg : {DSNetConfig{}, kTiny, DSNetConfig{3, 16, 2, 4, 0.2}})
    CHECK(param_count(cfg) == closed_form(cfg));

  // doubling base channels increases the count
  DSNetConfig doubled = kTiny;
  doubled.base_channels *= 2;
  CHECK(param_count(doubled) > param_count(kTiny));

  // equals the element count of materialized weights
  CHECK(param_count(kTiny) == zero_weights(kTiny).element_count());
  CHECK(param_count(DSNetConfig{}) == zero_weights(DSNetConfig{}).element_count());
}
