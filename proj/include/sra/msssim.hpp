#pragma once

#include <vector>

#include "sra/tensor.hpp"

namespace sra {

// Normalized 11-tap Gaussian (sigma 1.5), the 2-D window is its outer
// product.
const std::vector<double>& ssim_window_1d();

// Standard 5-scale exponents, truncated and renormalized for fewer scales.
std::vector<double> ms_ssim_exponents(int scales);

// Everything needed to differentiate one evaluation with respect to the
// test image.
struct MsSsimTape {
  struct Scale {
    PlaneD x, y;                       // pyramid images
    PlaneD mux, muy, sxx, syy, sxy;    // valid-window raw moments
    double cs_mean = 0.0;
    double l_mean = 0.0;  // coarsest scale only
  };
  std::vector<Scale> scales;
  std::vector<double> exponents;
  double value = 0.0;
  bool degenerate = false;  // a per-scale mean was <= 0; value pinned to 0
};

// Multi-scale SSIM for planes in nominal range [0,1]. Per-scale SSIM uses
// an 11x11 Gaussian window over fully interior positions; scales are
// linked by 2x2 mean pooling. Contrast-structure terms enter at every
// scale, the luminance term only at the coarsest.
double ms_ssim(const PlaneD& ref, const PlaneD& test, int scales, MsSsimTape* tape = nullptr);
double ms_ssim(const PlaneF& ref, const PlaneF& test, int scales);

// d(upstream * value)/d(test); zero plane when the evaluation was
// degenerate.
PlaneD ms_ssim_backward(const MsSsimTape& tape, double upstream);

}  // namespace sra
