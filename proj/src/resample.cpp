#include "sra/resample.hpp"

#include <cmath>
#include <numbers>

namespace sra {

std::string to_string(FilterKind k) {
  switch (k) {
    case FilterKind::Lanczos3: return "lanczos3";
    case FilterKind::Bicubic: return "bicubic";
    default: return "bilinear";
  }
}

FilterKind filter_kind_from_string(const std::string& s) {
  if (s == "lanczos3" || s == "lanczos") return FilterKind::Lanczos3;
  if (s == "bicubic") return FilterKind::Bicubic;
  if (s == "bilinear") return FilterKind::Bilinear;
  throw InputError("unknown filter kind: " + s);
}

double kernel_radius(FilterKind kind) {
  switch (kind) {
    case FilterKind::Lanczos3: return 3.0;
    case FilterKind::Bicubic: return 2.0;
    default: return 1.0;
  }
}

namespace {

double sinc(double x) {
  if (x == 0.0) return 1.0;
  const double px = std::numbers::pi * x;
  return std::sin(px) / px;
}

double keys_cubic(double x) {
  constexpr double a = -0.5;
  x = std::fabs(x);
  if (x < 1.0) return ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0;
  if (x < 2.0) return a * (((x - 5.0) * x + 8.0) * x - 4.0);
  return 0.0;
}

}  // namespace

double kernel_weight(FilterKind kind, double x) {
  switch (kind) {
    case FilterKind::Lanczos3:
      return std::fabs(x) < 3.0 ? sinc(x) * sinc(x / 3.0) : 0.0;
    case FilterKind::Bicubic:
      return keys_cubic(x);
    default:
      return std::max(0.0, 1.0 - std::fabs(x));
  }
}

TapTable build_taps(int in_size, ResampleDirection dir, FilterKind kind) {
  const bool down = dir == ResampleDirection::Down;
  if (down && in_size % 2 != 0) throw DimensionError("downsample2x requires even dimensions");
  if (in_size <= 0) throw DimensionError("plane dimensions must be positive");

  TapTable t;
  t.in_size = in_size;
  t.out_size = down ? in_size / 2 : in_size * 2;
  // Kernel stretch: 2 when reducing, 1 when enlarging.
  const double scale = down ? 2.0 : 1.0;
  const double radius = kernel_radius(kind) * scale;

  // Tap count is constant across outputs because the source phase is a
  // fixed half-integer (down) or quarter-integer (up) offset.
  {
    const double c0 = down ? 0.5 : -0.25;
    t.taps = static_cast<int>(std::floor(c0 + radius)) - static_cast<int>(std::ceil(c0 - radius)) + 1;
  }
  t.index.resize(static_cast<std::size_t>(t.out_size) * t.taps);
  t.weight.resize(static_cast<std::size_t>(t.out_size) * t.taps);

  for (int o = 0; o < t.out_size; ++o) {
    const double center = down ? 2.0 * o + 0.5 : (o - 0.5) / 2.0;
    const int lo = static_cast<int>(std::ceil(center - radius));
    double sum = 0.0;
    for (int k = 0; k < t.taps; ++k) {
      const int j = lo + k;
      const double w = kernel_weight(kind, (j - center) / scale);
      t.index[static_cast<std::size_t>(o) * t.taps + k] = std::clamp(j, 0, in_size - 1);
      t.weight[static_cast<std::size_t>(o) * t.taps + k] = w;
      sum += w;
    }
    for (int k = 0; k < t.taps; ++k) t.weight[static_cast<std::size_t>(o) * t.taps + k] /= sum;
  }
  return t;
}

namespace {

// Horizontal pass over a double plane.
PlaneD apply_taps_h(const PlaneD& in, const TapTable& t) {
  PlaneD out(in.height, t.out_size);
  for (int y = 0; y < in.height; ++y) {
    const double* src = in.row(y);
    double* dst = out.row(y);
    for (int o = 0; o < t.out_size; ++o) {
      const std::size_t base = static_cast<std::size_t>(o) * t.taps;
      double acc = 0.0;
      for (int k = 0; k < t.taps; ++k) acc += t.weight[base + k] * src[t.index[base + k]];
      dst[o] = acc;
    }
  }
  return out;
}

// Vertical pass.
PlaneD apply_taps_v(const PlaneD& in, const TapTable& t) {
  PlaneD out(t.out_size, in.width);
  for (int o = 0; o < t.out_size; ++o) {
    const std::size_t base = static_cast<std::size_t>(o) * t.taps;
    double* dst = out.row(o);
    for (int x = 0; x < in.width; ++x) dst[x] = 0.0;
    for (int k = 0; k < t.taps; ++k) {
      const double w = t.weight[base + k];
      const double* src = in.row(t.index[base + k]);
      for (int x = 0; x < in.width; ++x) dst[x] += w * src[x];
    }
  }
  return out;
}

// Adjoint of the horizontal pass: scatter into the source width.
PlaneD adjoint_taps_h(const PlaneD& g, const TapTable& t) {
  PlaneD out(g.height, t.in_size);
  for (int y = 0; y < g.height; ++y) {
    const double* src = g.row(y);
    double* dst = out.row(y);
    for (int o = 0; o < t.out_size; ++o) {
      const std::size_t base = static_cast<std::size_t>(o) * t.taps;
      for (int k = 0; k < t.taps; ++k) dst[t.index[base + k]] += t.weight[base + k] * src[o];
    }
  }
  return out;
}

PlaneD adjoint_taps_v(const PlaneD& g, const TapTable& t) {
  PlaneD out(t.in_size, g.width);
  for (int o = 0; o < t.out_size; ++o) {
    const std::size_t base = static_cast<std::size_t>(o) * t.taps;
    const double* src = g.row(o);
    for (int k = 0; k < t.taps; ++k) {
      const double w = t.weight[base + k];
      double* dst = out.row(t.index[base + k]);
      for (int x = 0; x < g.width; ++x) dst[x] += w * src[x];
    }
  }
  return out;
}

template <typename T>
PlaneT<T> resample_plane(const PlaneT<T>& plane, ResampleDirection dir, FilterKind kind) {
  const TapTable tx = build_taps(plane.width, dir, kind);
  const TapTable ty = build_taps(plane.height, dir, kind);
  PlaneD tmp = apply_taps_h(plane.template cast<double>(), tx);
  PlaneD res = apply_taps_v(tmp, ty);
  return res.cast<T>();
}

PlaneD resample_adjoint(const PlaneD& grad, int in_h, int in_w, ResampleDirection dir,
                        FilterKind kind) {
  const TapTable tx = build_taps(in_w, dir, kind);
  const TapTable ty = build_taps(in_h, dir, kind);
  if (grad.height != ty.out_size || grad.width != tx.out_size)
    throw ShapeError("adjoint gradient shape does not match forward output");
  PlaneD tmp = adjoint_taps_v(grad, ty);
  return adjoint_taps_h(tmp, tx);
}

}  // namespace

template <typename T>
PlaneT<T> downsample2x(const PlaneT<T>& plane, FilterKind kind) {
  return resample_plane(plane, ResampleDirection::Down, kind);
}

template <typename T>
PlaneT<T> upsample2x(const PlaneT<T>& plane, FilterKind kind) {
  return resample_plane(plane, ResampleDirection::Up, kind);
}

template <typename T>
TensorT<T> resample_tensor(const TensorT<T>& t, ResampleDirection dir, FilterKind kind) {
  TensorT<T> out;
  for (int c = 0; c < t.channels; ++c) {
    PlaneT<T> p = resample_plane(t.plane(c), dir, kind);
    if (c == 0) out = TensorT<T>(t.channels, p.height, p.width);
    out.set_plane(c, p);
  }
  return out;
}

template <typename T>
TensorT<T> downsample2x(const TensorT<T>& t, FilterKind kind) {
  return resample_tensor(t, ResampleDirection::Down, kind);
}

template <typename T>
TensorT<T> upsample2x(const TensorT<T>& t, FilterKind kind) {
  return resample_tensor(t, ResampleDirection::Up, kind);
}

PlaneD downsample2x_adjoint(const PlaneD& grad, int in_h, int in_w, FilterKind kind) {
  return resample_adjoint(grad, in_h, in_w, ResampleDirection::Down, kind);
}

PlaneD upsample2x_adjoint(const PlaneD& grad, int in_h, int in_w, FilterKind kind) {
  return resample_adjoint(grad, in_h, in_w, ResampleDirection::Up, kind);
}

TensorD downsample2x_adjoint(const TensorD& grad, int in_h, int in_w, FilterKind kind) {
  TensorD out(grad.channels, in_h, in_w);
  for (int c = 0; c < grad.channels; ++c)
    out.set_plane(c, downsample2x_adjoint(grad.plane(c), in_h, in_w, kind));
  return out;
}

TensorD upsample2x_adjoint(const TensorD& grad, int in_h, int in_w, FilterKind kind) {
  TensorD out(grad.channels, in_h, in_w);
  for (int c = 0; c < grad.channels; ++c)
    out.set_plane(c, upsample2x_adjoint(grad.plane(c), in_h, in_w, kind));
  return out;
}

Frame resample_frame(const Frame& f, ResampleDirection dir, FilterKind kind) {
  f.validate();
  const bool down = dir == ResampleDirection::Down;
  const int ow = down ? f.width / 2 : f.width * 2;
  const int oh = down ? f.height / 2 : f.height * 2;
  if (down && (f.width % 2 != 0 || f.height % 2 != 0))
    throw DimensionError("downsampling requires even frame dimensions");
  Frame out = Frame::allocate(ow, oh, f.bit_depth, f.format);
  auto run = [&](const PlaneU16& src, PlaneU16& dst) {
    PlaneD filtered = resample_plane(src.cast<double>(), dir, kind);
    if (filtered.height != dst.height || filtered.width != dst.width)
      throw InternalError("resampled plane geometry mismatch");
    for (std::size_t i = 0; i < dst.size(); ++i)
      dst.data[i] = quantize_sample(filtered.data[i], f.max_value());
  };
  run(f.y, out.y);
  run(f.cb, out.cb);
  run(f.cr, out.cr);
  return out;
}

template PlaneT<float> downsample2x<float>(const PlaneT<float>&, FilterKind);
template PlaneT<double> downsample2x<double>(const PlaneT<double>&, FilterKind);
template PlaneT<float> upsample2x<float>(const PlaneT<float>&, FilterKind);
template PlaneT<double> upsample2x<double>(const PlaneT<double>&, FilterKind);
template TensorT<float> downsample2x<float>(const TensorT<float>&, FilterKind);
template TensorT<double> downsample2x<double>(const TensorT<double>&, FilterKind);
template TensorT<float> upsample2x<float>(const TensorT<float>&, FilterKind);
template TensorT<double> upsample2x<double>(const TensorT<double>&, FilterKind);

}  // namespace sra
