#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "sra/errors.hpp"

namespace sra {

// Row-major 2-D sample array.
template <typename T>
struct PlaneT {
  int height = 0;
  int width = 0;
  std::vector<T> data;

  PlaneT() = default;
  PlaneT(int h, int w, T fill = T{}) : height(h), width(w) {
    if (h <= 0 || w <= 0) throw DimensionError("plane dimensions must be positive");
    data.assign(static_cast<std::size_t>(h) * w, fill);
  }

  T& at(int y, int x) { return data[static_cast<std::size_t>(y) * width + x]; }
  const T& at(int y, int x) const { return data[static_cast<std::size_t>(y) * width + x]; }
  T* row(int y) { return data.data() + static_cast<std::size_t>(y) * width; }
  const T* row(int y) const { return data.data() + static_cast<std::size_t>(y) * width; }
  std::size_t size() const { return data.size(); }

  bool same_shape(const PlaneT& o) const { return height == o.height && width == o.width; }

  template <typename U>
  PlaneT<U> cast() const {
    PlaneT<U> out(height, width);
    for (std::size_t i = 0; i < data.size(); ++i) out.data[i] = static_cast<U>(data[i]);
    return out;
  }
};

using PlaneF = PlaneT<float>;
using PlaneD = PlaneT<double>;
using PlaneU16 = PlaneT<std::uint16_t>;

// Channel-major 3-D array: all of channel 0, then channel 1, ...
template <typename T>
struct TensorT {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<T> data;

  TensorT() = default;
  TensorT(int c, int h, int w, T fill = T{}) : channels(c), height(h), width(w) {
    if (c <= 0 || h <= 0 || w <= 0) throw ShapeError("tensor dimensions must be positive");
    data.assign(static_cast<std::size_t>(c) * h * w, fill);
  }

  std::size_t plane_size() const { return static_cast<std::size_t>(height) * width; }
  std::size_t size() const { return data.size(); }

  T& at(int c, int y, int x) {
    return data[(static_cast<std::size_t>(c) * height + y) * width + x];
  }
  const T& at(int c, int y, int x) const {
    return data[(static_cast<std::size_t>(c) * height + y) * width + x];
  }
  T* channel(int c) { return data.data() + static_cast<std::size_t>(c) * plane_size(); }
  const T* channel(int c) const { return data.data() + static_cast<std::size_t>(c) * plane_size(); }

  bool same_shape(const TensorT& o) const {
    return channels == o.channels && height == o.height && width == o.width;
  }

  PlaneT<T> plane(int c) const {
    PlaneT<T> p(height, width);
    const T* src = channel(c);
    std::copy(src, src + plane_size(), p.data.begin());
    return p;
  }
  void set_plane(int c, const PlaneT<T>& p) {
    if (p.height != height || p.width != width) throw ShapeError("plane shape mismatch");
    std::copy(p.data.begin(), p.data.end(), channel(c));
  }

  template <typename U>
  TensorT<U> cast() const {
    TensorT<U> out(channels, height, width);
    for (std::size_t i = 0; i < data.size(); ++i) out.data[i] = static_cast<U>(data[i]);
    return out;
  }
};

using Tensor3 = TensorT<float>;
using TensorD = TensorT<double>;

// Counter-clockwise rotation by k*90 degrees; requires square spatial dims
// for k odd unless callers accept the transposed shape (they do).
template <typename T>
TensorT<T> rot90(const TensorT<T>& t, int k) {
  k = ((k % 4) + 4) % 4;
  if (k == 0) return t;
  int oh = (k % 2 == 0) ? t.height : t.width;
  int ow = (k % 2 == 0) ? t.width : t.height;
  TensorT<T> out(t.channels, oh, ow);
  for (int c = 0; c < t.channels; ++c) {
    for (int y = 0; y < t.height; ++y) {
      for (int x = 0; x < t.width; ++x) {
        int ny = 0, nx = 0;
        switch (k) {
          case 1: ny = t.width - 1 - x; nx = y; break;
          case 2: ny = t.height - 1 - y; nx = t.width - 1 - x; break;
          default: ny = x; nx = t.height - 1 - y; break;
        }
        out.at(c, ny, nx) = t.at(c, y, x);
      }
    }
  }
  return out;
}

template <typename T>
bool all_finite(const TensorT<T>& t) {
  for (T v : t.data)
    if (!std::isfinite(static_cast<double>(v))) return false;
  return true;
}

}  // namespace sra
