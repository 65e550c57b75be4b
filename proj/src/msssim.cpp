#include "sra/msssim.hpp"

#include <cmath>

namespace sra {

namespace {

constexpr int kWin = 11;
constexpr double kSigma = 1.5;
constexpr double kC1 = 0.01 * 0.01;  // (0.01 * L)^2, L = 1
constexpr double kC2 = 0.03 * 0.03;

const double kBeta[5] = {0.0448, 0.2856, 0.3001, 0.2363, 0.1333};

}  // namespace

const std::vector<double>& ssim_window_1d() {
  static const std::vector<double> g = [] {
    std::vector<double> w(kWin);
    double sum = 0.0;
    for (int i = 0; i < kWin; ++i) {
      const double d = i - (kWin - 1) / 2.0;
      w[i] = std::exp(-d * d / (2.0 * kSigma * kSigma));
      sum += w[i];
    }
    for (double& v : w) v /= sum;
    return w;
  }();
  return g;
}

std::vector<double> ms_ssim_exponents(int scales) {
  if (scales < 1 || scales > 5) throw InputError("ms_ssim supports 1 to 5 scales");
  std::vector<double> b(kBeta, kBeta + scales);
  double sum = 0.0;
  for (double v : b) sum += v;
  for (double& v : b) v /= sum;
  return b;
}

namespace {

// Separable valid-window Gaussian filter: output (h-10) x (w-10).
PlaneD gauss_valid(const PlaneD& in) {
  const auto& g = ssim_window_1d();
  PlaneD tmp(in.height, in.width - kWin + 1);
  for (int y = 0; y < in.height; ++y) {
    const double* src = in.row(y);
    double* dst = tmp.row(y);
    for (int o = 0; o < tmp.width; ++o) {
      double acc = 0.0;
      for (int k = 0; k < kWin; ++k) acc += g[k] * src[o + k];
      dst[o] = acc;
    }
  }
  PlaneD out(in.height - kWin + 1, tmp.width);
  for (int o = 0; o < out.height; ++o) {
    double* dst = out.row(o);
    for (int x = 0; x < out.width; ++x) dst[x] = 0.0;
    for (int k = 0; k < kWin; ++k) {
      const double* src = tmp.row(o + k);
      for (int x = 0; x < out.width; ++x) dst[x] += g[k] * src[x];
    }
  }
  return out;
}

// Adjoint of gauss_valid: scatter a (h-10) x (w-10) map back to h x w.
PlaneD gauss_valid_adjoint(const PlaneD& grad, int in_h, int in_w) {
  const auto& g = ssim_window_1d();
  PlaneD tmp(in_h, grad.width, 0.0);
  for (int o = 0; o < grad.height; ++o) {
    const double* src = grad.row(o);
    for (int k = 0; k < kWin; ++k) {
      double* dst = tmp.row(o + k);
      for (int x = 0; x < grad.width; ++x) dst[x] += g[k] * src[x];
    }
  }
  PlaneD out(in_h, in_w, 0.0);
  for (int y = 0; y < in_h; ++y) {
    const double* src = tmp.row(y);
    double* dst = out.row(y);
    for (int o = 0; o < grad.width; ++o)
      for (int k = 0; k < kWin; ++k) dst[o + k] += g[k] * src[o];
  }
  return out;
}

PlaneD mean_pool2(const PlaneD& in) {
  PlaneD out(in.height / 2, in.width / 2);
  for (int y = 0; y < out.height; ++y)
    for (int x = 0; x < out.width; ++x)
      out.at(y, x) = 0.25 * (in.at(2 * y, 2 * x) + in.at(2 * y, 2 * x + 1) +
                             in.at(2 * y + 1, 2 * x) + in.at(2 * y + 1, 2 * x + 1));
  return out;
}

PlaneD mean_pool2_adjoint(const PlaneD& grad, int in_h, int in_w) {
  PlaneD out(in_h, in_w, 0.0);
  for (int y = 0; y < grad.height; ++y)
    for (int x = 0; x < grad.width; ++x) {
      const double v = 0.25 * grad.at(y, x);
      out.at(2 * y, 2 * x) += v;
      out.at(2 * y, 2 * x + 1) += v;
      out.at(2 * y + 1, 2 * x) += v;
      out.at(2 * y + 1, 2 * x + 1) += v;
    }
  return out;
}

PlaneD hadamard(const PlaneD& a, const PlaneD& b) {
  PlaneD out(a.height, a.width);
  for (std::size_t i = 0; i < a.size(); ++i) out.data[i] = a.data[i] * b.data[i];
  return out;
}

}  // namespace

double ms_ssim(const PlaneD& ref, const PlaneD& test, int scales, MsSsimTape* tape) {
  if (!ref.same_shape(test)) throw ShapeError("ms_ssim inputs must share geometry");
  {
    int h = ref.height, w = ref.width;
    for (int j = 0; j < scales; ++j) {
      if (h < kWin || w < kWin)
        throw DimensionError("plane too small for " + std::to_string(scales) + " ms_ssim scales");
      h /= 2;
      w /= 2;
    }
  }
  const std::vector<double> beta = ms_ssim_exponents(scales);

  if (tape) {
    tape->scales.clear();
    tape->exponents = beta;
    tape->degenerate = false;
  }

  PlaneD x = ref;
  PlaneD y = test;
  double log_q = 0.0;
  bool degenerate = false;
  for (int j = 0; j < scales; ++j) {
    if (j > 0) {
      x = mean_pool2(x);
      y = mean_pool2(y);
    }
    PlaneD mux = gauss_valid(x);
    PlaneD muy = gauss_valid(y);
    PlaneD sxx = gauss_valid(hadamard(x, x));
    PlaneD syy = gauss_valid(hadamard(y, y));
    PlaneD sxy = gauss_valid(hadamard(x, y));

    double cs_sum = 0.0, l_sum = 0.0;
    const bool last = j == scales - 1;
    for (std::size_t i = 0; i < mux.size(); ++i) {
      const double mx = mux.data[i], my = muy.data[i];
      const double vx = sxx.data[i] - mx * mx;
      const double vy = syy.data[i] - my * my;
      const double cxy = sxy.data[i] - mx * my;
      cs_sum += (2.0 * cxy + kC2) / (vx + vy + kC2);
      if (last) l_sum += (2.0 * mx * my + kC1) / (mx * mx + my * my + kC1);
    }
    const double n = static_cast<double>(mux.size());
    const double cs_mean = cs_sum / n;
    const double l_mean = last ? l_sum / n : 0.0;

    if (tape) {
      MsSsimTape::Scale s;
      s.x = x;
      s.y = y;
      s.mux = std::move(mux);
      s.muy = std::move(muy);
      s.sxx = std::move(sxx);
      s.syy = std::move(syy);
      s.sxy = std::move(sxy);
      s.cs_mean = cs_mean;
      s.l_mean = l_mean;
      tape->scales.push_back(std::move(s));
    }

    if (cs_mean <= 0.0 || (last && l_mean <= 0.0)) {
      degenerate = true;
      break;
    }
    log_q += beta[static_cast<std::size_t>(j)] * std::log(cs_mean);
    if (last) log_q += beta[static_cast<std::size_t>(j)] * std::log(l_mean);
  }

  const double value = degenerate ? 0.0 : std::exp(log_q);
  if (tape) {
    tape->value = value;
    tape->degenerate = degenerate;
  }
  return value;
}

double ms_ssim(const PlaneF& ref, const PlaneF& test, int scales) {
  return ms_ssim(ref.cast<double>(), test.cast<double>(), scales);
}

PlaneD ms_ssim_backward(const MsSsimTape& tape, double upstream) {
  if (tape.scales.empty()) throw InputError("ms_ssim_backward needs a recorded forward pass");
  const PlaneD& y0 = tape.scales.front().y;
  if (tape.degenerate) return PlaneD(y0.height, y0.width, 0.0);

  const int scales = static_cast<int>(tape.scales.size());
  PlaneD carry;  // gradient w.r.t. the pyramid image of the scale below
  for (int j = scales - 1; j >= 0; --j) {
    const auto& s = tape.scales[static_cast<std::size_t>(j)];
    const bool last = j == scales - 1;
    const double beta = tape.exponents[static_cast<std::size_t>(j)];
    const double n = static_cast<double>(s.mux.size());
    // dQ/dCS_j = Q * beta / CS_j, spread uniformly over the map mean.
    const double gcs = upstream * tape.value * beta / s.cs_mean / n;
    const double gl = last ? upstream * tape.value * beta / s.l_mean / n : 0.0;

    PlaneD gmuy(s.mux.height, s.mux.width);
    PlaneD gsyy(s.mux.height, s.mux.width);
    PlaneD gsxy(s.mux.height, s.mux.width);
    for (std::size_t i = 0; i < s.mux.size(); ++i) {
      const double mx = s.mux.data[i], my = s.muy.data[i];
      const double vx = s.sxx.data[i] - mx * mx;
      const double vy = s.syy.data[i] - my * my;
      const double cxy = s.sxy.data[i] - mx * my;
      const double a2 = 2.0 * cxy + kC2;
      const double b2 = vx + vy + kC2;
      // cs = a2/b2 with a2 = 2(Sxy - mux*muy) + C2, b2 = Sxx+Syy-mux^2-muy^2+C2
      const double d_a2 = gcs / b2;
      const double d_b2 = -gcs * a2 / (b2 * b2);
      gsxy.data[i] = 2.0 * d_a2;
      gsyy.data[i] = d_b2;
      double gm = -2.0 * mx * d_a2 - 2.0 * my * d_b2;
      if (last) {
        const double a1 = 2.0 * mx * my + kC1;
        const double b1 = mx * mx + my * my + kC1;
        gm += gl * (2.0 * mx * b1 - 2.0 * my * a1) / (b1 * b1);
      }
      gmuy.data[i] = gm;
    }

    PlaneD gy = gauss_valid_adjoint(gmuy, s.y.height, s.y.width);
    {
      PlaneD t = gauss_valid_adjoint(gsyy, s.y.height, s.y.width);
      for (std::size_t i = 0; i < gy.size(); ++i) gy.data[i] += 2.0 * s.y.data[i] * t.data[i];
    }
    {
      PlaneD t = gauss_valid_adjoint(gsxy, s.y.height, s.y.width);
      for (std::size_t i = 0; i < gy.size(); ++i) gy.data[i] += s.x.data[i] * t.data[i];
    }
    if (!carry.data.empty())
      for (std::size_t i = 0; i < gy.size(); ++i) gy.data[i] += carry.data[i];

    if (j > 0) {
      const auto& below = tape.scales[static_cast<std::size_t>(j - 1)];
      carry = mean_pool2_adjoint(gy, below.y.height, below.y.width);
    } else {
      carry = std::move(gy);
    }
  }
  return carry;
}

}  // namespace sra
