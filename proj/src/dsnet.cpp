#include "sra/dsnet.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <thread>

#include "sra/resample.hpp"
#include "sra/tiling.hpp"

namespace sra {

void DSNetConfig::validate() const {
  if (num_rdb < 1 || base_channels < 1 || rdb_layers < 1 || rdb_growth < 1)
    throw ConfigError("DSNet config counts must be >= 1");
  if (!(lrelu_slope > 0.0 && lrelu_slope < 1.0)) throw ConfigError("lrelu_slope must be in (0,1)");
}

template <typename T>
const ConvLayerT<T>& WeightsT<T>::layer(const std::string& name) const {
  for (const auto& l : layers)
    if (l.name == name) return l;
  throw ShapeError("missing layer: " + name);
}

template <typename T>
ConvLayerT<T>& WeightsT<T>::layer(const std::string& name) {
  for (auto& l : layers)
    if (l.name == name) return l;
  throw ShapeError("missing layer: " + name);
}

template <typename T>
std::size_t WeightsT<T>::element_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.weight_count() + l.bias.size();
  return n;
}

template struct WeightsT<float>;
template struct WeightsT<double>;

std::vector<LayerSpec> dsnet_schema(const DSNetConfig& cfg) {
  cfg.validate();
  const int b = cfg.base_channels;
  const int g = cfg.rdb_growth;
  std::vector<LayerSpec> s;
  s.push_back({"down", b, 3, 3, 3, 2});
  s.push_back({"feat", b, b, 3, 3, 1});
  for (int i = 1; i <= cfg.num_rdb; ++i) {
    const std::string rdb = "rdb" + std::to_string(i);
    if (i >= 2) {
      // Fuses the shallow down-sampling output and all previous block
      // outputs into this block's input.
      s.push_back({"cascade" + std::to_string(i), b, b * i, 1, 1, 1});
    }
    for (int k = 1; k <= cfg.rdb_layers; ++k)
      s.push_back({rdb + ".conv" + std::to_string(k), g, b + (k - 1) * g, 3, 3, 1});
    s.push_back({rdb + ".fuse", b, b + cfg.rdb_layers * g, 1, 1, 1});
  }
  s.push_back({"rl1", b, b * (cfg.num_rdb + 1), 1, 1, 1});
  s.push_back({"rl2", b, b, 3, 3, 1});
  s.push_back({"final", 3, b, 3, 3, 1});
  return s;
}

std::uint64_t param_count(const DSNetConfig& cfg) {
  std::uint64_t n = 0;
  for (const LayerSpec& l : dsnet_schema(cfg)) {
    n += static_cast<std::uint64_t>(l.out_channels) * l.in_channels * l.kernel_h * l.kernel_w;
    n += static_cast<std::uint64_t>(l.out_channels);
  }
  return n;
}

namespace {

ModelWeights weights_from_schema(const DSNetConfig& cfg) {
  ModelWeights w;
  for (const LayerSpec& l : dsnet_schema(cfg)) {
    ConvParams p;
    p.name = l.name;
    p.out_channels = l.out_channels;
    p.in_channels = l.in_channels;
    p.kernel_h = l.kernel_h;
    p.kernel_w = l.kernel_w;
    p.stride = l.stride;
    p.weights.assign(p.weight_count(), 0.0f);
    p.bias.assign(static_cast<std::size_t>(l.out_channels), 0.0f);
    w.layers.push_back(std::move(p));
  }
  return w;
}

// Deterministic standard normal: Box-Muller on 53-bit uniform draws.
class GaussianSource {
 public:
  explicit GaussianSource(std::uint64_t seed) : rng_(seed) {}
  double next() {
    if (have_) {
      have_ = false;
      return spare_;
    }
    const double u1 = unit();
    const double u2 = unit();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(a);
    have_ = true;
    return r * std::cos(a);
  }

 private:
  double unit() {
    // (0,1]: never zero, so log() stays finite.
    return (static_cast<double>(rng_() >> 11) + 1.0) * 0x1.0p-53;
  }
  std::mt19937_64 rng_;
  bool have_ = false;
  double spare_ = 0.0;
};

}  // namespace

ModelWeights zero_weights(const DSNetConfig& cfg) { return weights_from_schema(cfg); }

ModelWeights random_weights(const DSNetConfig& cfg, std::uint64_t seed) {
  ModelWeights w = weights_from_schema(cfg);
  GaussianSource gauss(seed);
  for (auto& l : w.layers) {
    const double fan_in = static_cast<double>(l.in_channels) * l.kernel_h * l.kernel_w;
    const double std_dev = std::sqrt(2.0 / fan_in);
    for (auto& v : l.weights) v = static_cast<float>(gauss.next() * std_dev);
    // biases stay zero
  }
  return w;
}

namespace {

template <typename T>
int concat_channels(std::span<const TensorT<T>* const> parts) {
  int c = 0;
  for (const TensorT<T>* p : parts) c += p->channels;
  return c;
}

}  // namespace

template <typename T>
TensorT<T> conv2d_concat(std::span<const TensorT<T>* const> parts, const ConvLayerT<T>& p) {
  if (parts.empty()) throw ShapeError("conv2d needs at least one input part");
  const int in_h = parts[0]->height;
  const int in_w = parts[0]->width;
  for (const TensorT<T>* t : parts)
    if (t->height != in_h || t->width != in_w)
      throw ShapeError("conv2d input parts disagree in spatial size");
  if (concat_channels(parts) != p.in_channels)
    throw ShapeError("conv2d channel mismatch for layer " + p.name + ": got " +
                     std::to_string(concat_channels(parts)) + ", expected " +
                     std::to_string(p.in_channels));
  const int s = p.stride;
  const int out_h = (in_h + s - 1) / s;
  const int out_w = (in_w + s - 1) / s;
  const int pad_y = (p.kernel_h - 1) / 2;
  const int pad_x = (p.kernel_w - 1) / 2;

  TensorT<T> out(p.out_channels, out_h, out_w);
  std::vector<double> acc(static_cast<std::size_t>(out_w));
  for (int oc = 0; oc < p.out_channels; ++oc) {
    for (int oy = 0; oy < out_h; ++oy) {
      std::fill(acc.begin(), acc.end(), 0.0);
      int ic0 = 0;
      for (const TensorT<T>* part : parts) {
        for (int pc = 0; pc < part->channels; ++pc) {
          const int ic = ic0 + pc;
          for (int ky = 0; ky < p.kernel_h; ++ky) {
            const int iy = oy * s - pad_y + ky;
            if (iy < 0 || iy >= in_h) continue;
            const T* in_row = part->channel(pc) + static_cast<std::size_t>(iy) * in_w;
            for (int kx = 0; kx < p.kernel_w; ++kx) {
              const double wv = static_cast<double>(p.w(oc, ic, ky, kx));
              if (wv == 0.0) continue;
              const int off = kx - pad_x;
              // valid output range so that 0 <= ox*s + off < in_w
              int ox_lo = 0;
              while (ox_lo < out_w && ox_lo * s + off < 0) ++ox_lo;
              int ox_hi = out_w - 1;
              while (ox_hi >= 0 && ox_hi * s + off >= in_w) --ox_hi;
              const T* src = in_row + off;
              for (int ox = ox_lo; ox <= ox_hi; ++ox) acc[ox] += wv * src[ox * s];
            }
          }
        }
        ic0 += part->channels;
      }
      const double b = static_cast<double>(p.bias[static_cast<std::size_t>(oc)]);
      T* dst = out.channel(oc) + static_cast<std::size_t>(oy) * out_w;
      for (int ox = 0; ox < out_w; ++ox) dst[ox] = static_cast<T>(acc[ox] + b);
    }
  }
  return out;
}

template <typename T>
TensorT<T> conv2d(const TensorT<T>& x, const ConvLayerT<T>& p) {
  const TensorT<T>* parts[1] = {&x};
  return conv2d_concat<T>(parts, p);
}

template <typename T>
TensorT<T> leaky_relu(const TensorT<T>& x, double slope) {
  TensorT<T> out(x.channels, x.height, x.width);
  const T a = static_cast<T>(slope);
  for (std::size_t i = 0; i < x.data.size(); ++i) {
    const T v = x.data[i];
    out.data[i] = v >= T{} ? v : a * v;
  }
  return out;
}

namespace {

template <typename T>
TensorT<T> rdb_run(const TensorT<T>& x, std::span<const ConvLayerT<T>> stage_convs,
                   const ConvLayerT<T>& fuse, double slope,
                   typename DsnetTape<T>::Rdb* tape) {
  std::vector<TensorT<T>> stage_out;
  stage_out.reserve(stage_convs.size());
  std::vector<const TensorT<T>*> parts;
  parts.push_back(&x);
  for (const auto& conv : stage_convs) {
    TensorT<T> pre = conv2d_concat<T>(parts, conv);
    TensorT<T> post = leaky_relu(pre, slope);
    if (tape) tape->s_pre.push_back(pre);
    stage_out.push_back(std::move(post));
    parts.push_back(&stage_out.back());
  }
  TensorT<T> fused = conv2d_concat<T>(parts, fuse);  // linear local fusion
  TensorT<T> out(x.channels, x.height, x.width);
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] = fused.data[i] + x.data[i];
  if (tape) {
    tape->s = stage_out;
    tape->fuse_out = std::move(fused);
  }
  return out;
}

}  // namespace

template <typename T>
TensorT<T> rdb_forward(const TensorT<T>& x, std::span<const ConvLayerT<T>> stage_convs,
                       const ConvLayerT<T>& fuse, double slope) {
  if (stage_convs.empty()) throw ShapeError("RDB needs at least one stage conv");
  if (x.channels != stage_convs[0].in_channels)
    throw ShapeError("RDB input channels do not match first stage conv");
  return rdb_run<T>(x, stage_convs, fuse, slope, nullptr);
}

template <typename T>
TensorT<T> dsnet_forward(const TensorT<T>& x, const WeightsT<T>& w, const DSNetConfig& cfg,
                         DsnetTape<T>* tape) {
  cfg.validate();
  if (x.channels != 3) throw ShapeError("DSNet input must have 3 channels");
  if (x.height % 2 != 0 || x.width % 2 != 0)
    throw ShapeError("DSNet input needs even spatial dimensions");
  {
    // Schema completeness: exact layer set with exact shapes, no extras.
    const auto schema = dsnet_schema(cfg);
    if (w.layers.size() != schema.size())
      throw ShapeError("weight set has " + std::to_string(w.layers.size()) + " layers, schema needs " +
                       std::to_string(schema.size()));
    for (std::size_t i = 0; i < schema.size(); ++i) {
      const auto& l = w.layers[i];
      const auto& s = schema[i];
      if (l.name != s.name || l.out_channels != s.out_channels || l.in_channels != s.in_channels ||
          l.kernel_h != s.kernel_h || l.kernel_w != s.kernel_w || l.stride != s.stride)
        throw ShapeError("layer " + l.name + " does not match schema entry " + s.name);
      if (l.weights.size() != l.weight_count() ||
          l.bias.size() != static_cast<std::size_t>(l.out_channels))
        throw ShapeError("layer " + l.name + " has wrong parameter sizes");
    }
  }
  const double slope = cfg.lrelu_slope;

  TensorT<T> d0_pre = conv2d(x, w.layers[0]);  // "down", stride 2
  TensorT<T> d0 = leaky_relu(d0_pre, slope);
  TensorT<T> f0_pre = conv2d(d0, w.layers[1]);  // "feat"
  TensorT<T> f0 = leaky_relu(f0_pre, slope);

  if (tape) {
    tape->input = x;
    tape->d0_pre = d0_pre;
    tape->d0 = d0;
    tape->f0_pre = f0_pre;
    tape->f0 = f0;
    tape->cascade_pre.clear();
    tape->rdbs.clear();
    tape->rdbs.resize(static_cast<std::size_t>(cfg.num_rdb));
  }

  std::vector<TensorT<T>> g;  // RDB outputs
  g.reserve(static_cast<std::size_t>(cfg.num_rdb));
  for (int i = 1; i <= cfg.num_rdb; ++i) {
    TensorT<T> in_i;
    if (i == 1) {
      in_i = f0;
    } else {
      std::vector<const TensorT<T>*> parts;
      parts.push_back(&d0);
      for (const auto& gi : g) parts.push_back(&gi);
      TensorT<T> pre = conv2d_concat<T>(parts, w.layer("cascade" + std::to_string(i)));
      in_i = leaky_relu(pre, slope);
      if (tape) tape->cascade_pre.push_back(std::move(pre));
    }
    const std::string rdb = "rdb" + std::to_string(i);
    // Stage convs sit contiguously in schema order, so a span works.
    const ConvLayerT<T>* first_stage = &w.layer(rdb + ".conv1");
    std::span<const ConvLayerT<T>> stages(first_stage, static_cast<std::size_t>(cfg.rdb_layers));
    const ConvLayerT<T>& fuse = w.layer(rdb + ".fuse");
    typename DsnetTape<T>::Rdb* rt = tape ? &tape->rdbs[static_cast<std::size_t>(i - 1)] : nullptr;
    if (rt) rt->in = in_i;
    g.push_back(rdb_run<T>(rt ? rt->in : in_i, stages, fuse, slope, rt));
  }

  std::vector<const TensorT<T>*> rl1_parts;
  rl1_parts.push_back(tape ? &tape->d0 : &d0);
  for (const auto& gi : g) rl1_parts.push_back(&gi);
  TensorT<T> rl1_pre = conv2d_concat<T>(rl1_parts, w.layer("rl1"));
  TensorT<T> rl1 = leaky_relu(rl1_pre, slope);

  TensorT<T> skip(rl1.channels, rl1.height, rl1.width);
  const TensorT<T>& f0_ref = tape ? tape->f0 : f0;
  for (std::size_t n = 0; n < skip.data.size(); ++n) skip.data[n] = rl1.data[n] + f0_ref.data[n];

  TensorT<T> rl2_pre = conv2d(skip, w.layer("rl2"));
  TensorT<T> rl2 = leaky_relu(rl2_pre, slope);
  TensorT<T> residual = conv2d(rl2, w.layer("final"));  // linear, signed residual

  TensorT<T> base = downsample2x(tape ? tape->input : x, FilterKind::Bilinear);
  TensorT<T> y(residual.channels, residual.height, residual.width);
  for (std::size_t n = 0; n < y.data.size(); ++n) y.data[n] = residual.data[n] + base.data[n];

  if (tape) {
    tape->rl1_pre = std::move(rl1_pre);
    tape->rl1 = std::move(rl1);
    tape->skip = std::move(skip);
    tape->rl2_pre = std::move(rl2_pre);
    tape->rl2 = std::move(rl2);
    tape->residual = std::move(residual);
    tape->base = std::move(base);
  }
  return y;
}

Frame dsnet_downsample_frame(const Frame& f, const ModelWeights& w, const DSNetConfig& cfg,
                             int threads) {
  f.validate();
  const bool was_420 = f.format == ChromaFormat::YCbCr420;
  if (was_420 && (f.width % 4 != 0 || f.height % 4 != 0))
    throw DimensionError("CNN down-sampling of 4:2:0 needs dimensions divisible by 4");
  if (!was_420 && (f.width % 2 != 0 || f.height % 2 != 0))
    throw DimensionError("CNN down-sampling needs even dimensions");
  const Frame full = was_420 ? convert_420_to_444(f) : f;
  Tensor3 t = frame_to_tensor(full);
  auto [tiles, grid] = extract_tiles(t, 96, 8);

  std::vector<Tensor3> outputs(tiles.size());
  int n_threads = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
  n_threads = std::max(1, std::min<int>(n_threads, static_cast<int>(tiles.size())));
  if (n_threads == 1) {
    for (std::size_t i = 0; i < tiles.size(); ++i) outputs[i] = dsnet_forward(tiles[i], w, cfg);
  } else {
    std::vector<std::thread> pool;
    for (int tid = 0; tid < n_threads; ++tid) {
      pool.emplace_back([&, tid]() {
        for (std::size_t i = static_cast<std::size_t>(tid); i < tiles.size();
             i += static_cast<std::size_t>(n_threads))
          outputs[i] = dsnet_forward(tiles[i], w, cfg);
      });
    }
    for (auto& th : pool) th.join();
  }

  Tensor3 low = aggregate_tiles(outputs, grid.halved());
  Frame out444 = tensor_to_frame(low, f.bit_depth);
  return was_420 ? convert_444_to_420(out444) : out444;
}

// ---- weight file I/O -------------------------------------------------

namespace {

constexpr char kMagic[4] = {'D', 'S', 'N', 'W'};
constexpr std::uint32_t kVersion = 1;

void put_u16(std::string& buf, std::uint16_t v) {
  buf.push_back(static_cast<char>(v & 0xff));
  buf.push_back(static_cast<char>((v >> 8) & 0xff));
}
void put_u32(std::string& buf, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void put_f32(std::string& buf, float f) {
  std::uint32_t v;
  std::memcpy(&v, &f, 4);
  put_u32(buf, v);
}

struct Reader {
  std::vector<char> bytes;
  std::size_t pos = 0;
  std::string where;

  void need(std::size_t n) const {
    if (pos + n > bytes.size()) throw FormatError("truncated weight file near " + where);
  }
  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(bytes[pos++]);
  }
  std::uint16_t u16() {
    need(2);
    std::uint16_t v = static_cast<std::uint8_t>(bytes[pos]) |
                      (static_cast<std::uint16_t>(static_cast<std::uint8_t>(bytes[pos + 1])) << 8);
    pos += 2;
    return v;
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<std::uint32_t>(static_cast<std::uint8_t>(bytes[pos + i])) << (8 * i);
    pos += 4;
    return v;
  }
  float f32() {
    std::uint32_t v = u32();
    float f;
    std::memcpy(&f, &v, 4);
    return f;
  }
};

}  // namespace

void save_raw_entries(const std::filesystem::path& path, std::span<const RawTensorEntry> entries) {
  std::string buf;
  buf.append(kMagic, 4);
  put_u32(buf, kVersion);
  put_u32(buf, static_cast<std::uint32_t>(entries.size()));
  for (const RawTensorEntry& e : entries) {
    put_u16(buf, static_cast<std::uint16_t>(e.name.size()));
    buf.append(e.name);
    buf.push_back(static_cast<char>(e.dims.size()));
    for (std::uint32_t d : e.dims) put_u32(buf, d);
    for (float v : e.values) put_f32(buf, v);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot open file for writing: " + path.string());
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw Error("write failed: " + path.string());
}

std::vector<RawTensorEntry> load_raw_entries(const std::filesystem::path& path) {
  Reader r;
  {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open file: " + path.string());
    r.bytes.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  }
  r.where = "header";
  r.need(4);
  if (std::memcmp(r.bytes.data(), kMagic, 4) != 0)
    throw FormatError("bad magic in weight file: " + path.string());
  r.pos = 4;
  const std::uint32_t version = r.u32();
  if (version != kVersion)
    throw FormatError("unsupported weight file version " + std::to_string(version));
  const std::uint32_t entry_count = r.u32();

  std::vector<RawTensorEntry> entries;
  for (std::uint32_t e = 0; e < entry_count; ++e) {
    const std::uint16_t name_len = r.u16();
    r.need(name_len);
    RawTensorEntry raw;
    raw.name.assign(r.bytes.data() + r.pos, name_len);
    r.pos += name_len;
    r.where = raw.name;
    const std::uint8_t rank = r.u8();
    std::uint64_t total = 1;
    for (int d = 0; d < rank; ++d) {
      raw.dims.push_back(r.u32());
      total *= raw.dims.back();
    }
    if (total > (1u << 28)) throw FormatError("entry " + raw.name + " is implausibly large");
    raw.values.resize(static_cast<std::size_t>(total));
    for (auto& v : raw.values) v = r.f32();
    entries.push_back(std::move(raw));
  }
  return entries;
}

void save_weights(const ModelWeights& w, const std::filesystem::path& path) {
  std::vector<RawTensorEntry> entries;
  entries.reserve(w.layers.size() * 2);
  for (const auto& l : w.layers) {
    RawTensorEntry we;
    we.name = l.name;
    we.dims = {static_cast<std::uint32_t>(l.out_channels), static_cast<std::uint32_t>(l.in_channels),
               static_cast<std::uint32_t>(l.kernel_h), static_cast<std::uint32_t>(l.kernel_w)};
    we.values = l.weights;
    entries.push_back(std::move(we));
    RawTensorEntry be;
    be.name = l.name + ".bias";
    be.dims = {static_cast<std::uint32_t>(l.out_channels)};
    be.values = l.bias;
    entries.push_back(std::move(be));
  }
  save_raw_entries(path, entries);
}

ModelWeights load_weights(const std::filesystem::path& path, const DSNetConfig& cfg) {
  std::vector<RawTensorEntry> entries = load_raw_entries(path);

  auto find = [&entries](const std::string& name) -> RawTensorEntry* {
    for (auto& e : entries)
      if (e.name == name) return &e;
    return nullptr;
  };

  ModelWeights w;
  std::size_t consumed = 0;
  for (const LayerSpec& spec : dsnet_schema(cfg)) {
    RawTensorEntry* we = find(spec.name);
    RawTensorEntry* be = find(spec.name + ".bias");
    if (!we || !be) throw FormatError("weight file misses layer " + spec.name);
    const std::vector<std::uint32_t> expect = {
        static_cast<std::uint32_t>(spec.out_channels), static_cast<std::uint32_t>(spec.in_channels),
        static_cast<std::uint32_t>(spec.kernel_h), static_cast<std::uint32_t>(spec.kernel_w)};
    if (we->dims != expect)
      throw FormatError("layer " + spec.name + " has mismatched weight shape");
    if (be->dims != std::vector<std::uint32_t>{static_cast<std::uint32_t>(spec.out_channels)})
      throw FormatError("layer " + spec.name + " has mismatched bias shape");
    ConvParams p;
    p.name = spec.name;
    p.out_channels = spec.out_channels;
    p.in_channels = spec.in_channels;
    p.kernel_h = spec.kernel_h;
    p.kernel_w = spec.kernel_w;
    p.stride = spec.stride;
    p.weights = we->values;
    p.bias = be->values;
    w.layers.push_back(std::move(p));
    consumed += 2;
  }
  if (consumed != entries.size()) {
    for (const auto& e : entries) {
      bool known = false;
      for (const auto& l : w.layers)
        if (e.name == l.name || e.name == l.name + ".bias") known = true;
      if (!known) throw FormatError("unexpected entry in weight file: " + e.name);
    }
  }
  return w;
}

template TensorT<float> conv2d<float>(const TensorT<float>&, const ConvLayerT<float>&);
template TensorT<double> conv2d<double>(const TensorT<double>&, const ConvLayerT<double>&);
template TensorT<float> conv2d_concat<float>(std::span<const TensorT<float>* const>,
                                             const ConvLayerT<float>&);
template TensorT<double> conv2d_concat<double>(std::span<const TensorT<double>* const>,
                                               const ConvLayerT<double>&);
template TensorT<float> leaky_relu<float>(const TensorT<float>&, double);
template TensorT<double> leaky_relu<double>(const TensorT<double>&, double);
template TensorT<float> rdb_forward<float>(const TensorT<float>&, std::span<const ConvLayerT<float>>,
                                           const ConvLayerT<float>&, double);
template TensorT<double> rdb_forward<double>(const TensorT<double>&,
                                             std::span<const ConvLayerT<double>>,
                                             const ConvLayerT<double>&, double);
template TensorT<float> dsnet_forward<float>(const TensorT<float>&, const WeightsT<float>&,
                                             const DSNetConfig&, DsnetTape<float>*);
template TensorT<double> dsnet_forward<double>(const TensorT<double>&, const WeightsT<double>&,
                                               const DSNetConfig&, DsnetTape<double>*);

}  // namespace sra
