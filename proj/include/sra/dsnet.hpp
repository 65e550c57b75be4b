#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "sra/frame.hpp"
#include "sra/tensor.hpp"

namespace sra {

// Network shape knobs. Defaults give the full 14-block model; tests use
// much smaller instances of the same topology.
struct DSNetConfig {
  int num_rdb = 14;
  int base_channels = 64;
  int rdb_layers = 5;
  int rdb_growth = 32;
  double lrelu_slope = 0.2;

  void validate() const;
  bool operator==(const DSNetConfig&) const = default;
};

template <typename T>
struct ConvLayerT {
  std::string name;
  int out_channels = 0;
  int in_channels = 0;
  int kernel_h = 0;
  int kernel_w = 0;
  int stride = 1;
  std::vector<T> weights;  // (out, in, kh, kw)
  std::vector<T> bias;     // out

  std::size_t weight_count() const {
    return static_cast<std::size_t>(out_channels) * in_channels * kernel_h * kernel_w;
  }
  const T& w(int oc, int ic, int ky, int kx) const {
    return weights[((static_cast<std::size_t>(oc) * in_channels + ic) * kernel_h + ky) * kernel_w + kx];
  }
  T& w(int oc, int ic, int ky, int kx) {
    return weights[((static_cast<std::size_t>(oc) * in_channels + ic) * kernel_h + ky) * kernel_w + kx];
  }
};

using ConvParams = ConvLayerT<float>;

// Named, shaped parameter store matching a DSNetConfig-derived schema.
template <typename T>
struct WeightsT {
  std::vector<ConvLayerT<T>> layers;

  const ConvLayerT<T>& layer(const std::string& name) const;
  ConvLayerT<T>& layer(const std::string& name);
  std::size_t element_count() const;

  template <typename U>
  WeightsT<U> cast() const {
    WeightsT<U> out;
    out.layers.reserve(layers.size());
    for (const auto& l : layers) {
      ConvLayerT<U> c;
      c.name = l.name;
      c.out_channels = l.out_channels;
      c.in_channels = l.in_channels;
      c.kernel_h = l.kernel_h;
      c.kernel_w = l.kernel_w;
      c.stride = l.stride;
      c.weights.assign(l.weights.begin(), l.weights.end());
      c.bias.assign(l.bias.begin(), l.bias.end());
      out.layers.push_back(std::move(c));
    }
    return out;
  }
};

using ModelWeights = WeightsT<float>;
using ModelWeightsD = WeightsT<double>;

struct LayerSpec {
  std::string name;
  int out_channels, in_channels, kernel_h, kernel_w, stride;
};

// Layer order: down, feat, then per block i (cascade fusion for i>=2,
// the dense stage convs, the local fusion), then rl1, rl2, final.
std::vector<LayerSpec> dsnet_schema(const DSNetConfig& cfg);

std::uint64_t param_count(const DSNetConfig& cfg);

ModelWeights zero_weights(const DSNetConfig& cfg);
// He-style normal init for conv weights, zero biases, deterministic
// Box-Muller draws from mt19937_64.
ModelWeights random_weights(const DSNetConfig& cfg, std::uint64_t seed);

// Zero-padded "same" convolution, pad (k-1)/2 per side, spatial output
// ceil(in/stride); accumulation in doubles, bias added per channel.
template <typename T>
TensorT<T> conv2d(const TensorT<T>& x, const ConvLayerT<T>& p);
// Same, with the input given as a channel-wise concatenation of parts.
template <typename T>
TensorT<T> conv2d_concat(std::span<const TensorT<T>* const> parts, const ConvLayerT<T>& p);

template <typename T>
TensorT<T> leaky_relu(const TensorT<T>& x, double slope);

// Dense 3x3 conv+LReLU stages on concat(x, previous stage outputs), 1x1
// local fusion back to x's channel count, plus local skip.
template <typename T>
TensorT<T> rdb_forward(const TensorT<T>& x, std::span<const ConvLayerT<T>> stage_convs,
                       const ConvLayerT<T>& fuse, double slope);

// Every intermediate needed to backpropagate one forward pass.
template <typename T>
struct DsnetTape {
  TensorT<T> input;
  TensorT<T> d0_pre, d0;
  TensorT<T> f0_pre, f0;
  struct Rdb {
    TensorT<T> in;                    // block input (after cascade fusion)
    std::vector<TensorT<T>> s_pre;    // stage conv outputs, pre-activation
    std::vector<TensorT<T>> s;        // stage outputs, post-activation
    TensorT<T> fuse_out;              // 1x1 fusion output (linear)
  };
  std::vector<TensorT<T>> cascade_pre;  // per block i>=2, pre-activation
  std::vector<Rdb> rdbs;
  TensorT<T> rl1_pre, rl1;
  TensorT<T> skip;
  TensorT<T> rl2_pre, rl2;
  TensorT<T> residual;
  TensorT<T> base;  // bilinear 2x downsample of the input
};

// Full forward pass: 96x96 4:4:4 block in, 48x48 residual + bilinear base
// out. Any even input size >= 2 works; 96 is the pipeline contract.
template <typename T>
TensorT<T> dsnet_forward(const TensorT<T>& x, const WeightsT<T>& w, const DSNetConfig& cfg,
                         DsnetTape<T>* tape = nullptr);

// Tiled full-frame CNN down-sampling: 4:2:0 in, 4:2:0 half-size out.
Frame dsnet_downsample_frame(const Frame& f, const ModelWeights& w, const DSNetConfig& cfg,
                             int threads = 0);

// Weight file: magic "DSNW", u32 version, u32 entry count, then per entry
// u16 name length + name, u8 rank, rank u32 dims, f32 little-endian data.
// Conv weights are rank-4 (out,in,kh,kw); biases are rank-1 entries named
// "<layer>.bias".
void save_weights(const ModelWeights& w, const std::filesystem::path& path);
ModelWeights load_weights(const std::filesystem::path& path, const DSNetConfig& cfg = {});

// One named tensor in the container; the optimizer sidecar reuses this.
struct RawTensorEntry {
  std::string name;
  std::vector<std::uint32_t> dims;
  std::vector<float> values;
};
void save_raw_entries(const std::filesystem::path& path, std::span<const RawTensorEntry> entries);
std::vector<RawTensorEntry> load_raw_entries(const std::filesystem::path& path);

}  // namespace sra
