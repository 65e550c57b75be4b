#pragma once

#include <string>
#include <vector>

#include "sra/frame.hpp"
#include "sra/tensor.hpp"

namespace sra {

enum class FilterKind { Lanczos3, Bicubic, Bilinear };
enum class ResampleDirection { Down, Up };

std::string to_string(FilterKind k);
FilterKind filter_kind_from_string(const std::string& s);

// Support radius in destination-relative source pixels at scale 1:
// 3 (Lanczos3), 2 (Bicubic), 1 (Bilinear).
double kernel_radius(FilterKind kind);

// Lanczos3: sinc(x)*sinc(x/3) for |x|<3; Bicubic: Keys kernel a=-0.5;
// Bilinear: max(0, 1-|x|).
double kernel_weight(FilterKind kind, double x);

// Per-output-sample filter taps along one axis, indices clamped to the
// edge and weights renormalized to sum exactly 1. Down maps output i to
// source 2i+0.5 with the kernel stretched by 2; up maps output j to
// source (j-0.5)/2 with the kernel at scale 1.
struct TapTable {
  int in_size = 0;
  int out_size = 0;
  int taps = 0;                // taps per output sample
  std::vector<int> index;      // out_size * taps, clamped source indices
  std::vector<double> weight;  // out_size * taps, sums to 1 per output
};

TapTable build_taps(int in_size, ResampleDirection dir, FilterKind kind);

// Separable 2x resampling; all arithmetic in doubles, outputs cast to T.
template <typename T>
PlaneT<T> downsample2x(const PlaneT<T>& plane, FilterKind kind);
template <typename T>
PlaneT<T> upsample2x(const PlaneT<T>& plane, FilterKind kind);

template <typename T>
TensorT<T> downsample2x(const TensorT<T>& t, FilterKind kind);
template <typename T>
TensorT<T> upsample2x(const TensorT<T>& t, FilterKind kind);

// Adjoints of the (linear) resampling maps, for backpropagation.
// grad has the output geometry of the forward op; the result has the
// forward op's input geometry (in_h x in_w).
PlaneD downsample2x_adjoint(const PlaneD& grad, int in_h, int in_w, FilterKind kind);
PlaneD upsample2x_adjoint(const PlaneD& grad, int in_h, int in_w, FilterKind kind);
TensorD downsample2x_adjoint(const TensorD& grad, int in_h, int in_w, FilterKind kind);
TensorD upsample2x_adjoint(const TensorD& grad, int in_h, int in_w, FilterKind kind);

// Per-plane float filtering followed by the shared quantization rule.
Frame resample_frame(const Frame& f, ResampleDirection dir, FilterKind kind);

}  // namespace sra
