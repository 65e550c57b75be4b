#pragma once

#include <cmath>
#include <filesystem>
#include <limits>
#include <vector>

#include "sra/frame.hpp"

namespace sra {

// Sentinel for zero-MSE comparisons; excluded from curve fitting.
inline constexpr double kLosslessPsnr = std::numeric_limits<double>::infinity();
inline bool is_lossless_psnr(double v) { return std::isinf(v); }

// Luminance-only PSNR in dB against MAX = 2^bit_depth - 1.
double psnr_luma(const Frame& ref, const Frame& test);

struct RDPoint {
  double bitrate = 0.0;  // kbps (or bits for single images)
  double psnr = 0.0;     // dB
};

// One point per QP, bitrate strictly decreasing with increasing QP.
struct RDCurve {
  std::vector<RDPoint> points;
  void validate() const;  // 4 points, monotone bitrate, finite psnr
};

RDCurve read_rd_curve(const std::filesystem::path& path);

// Classic Bjontegaard delta rate: cubic fit of log10(rate) against PSNR
// per curve, mean difference integrated over the overlapping PSNR range,
// reported in percent.
double bd_rate(const RDCurve& anchor, const RDCurve& test);

// Wall-clock seconds per pipeline stage for one QP run.
struct StageTimes {
  double downsample = 0.0;
  double inference = 0.0;
  double encode = 0.0;
  double decode = 0.0;
  double upsample = 0.0;

  double encoder_side() const { return downsample + inference + encode; }
  double decoder_side() const { return decode + upsample; }
};

struct TimingReport {
  double enc_ratio = 0.0;  // mean over QPs of test encoder-side / anchor encode
  double dec_ratio = 0.0;
  std::vector<double> enc_ratio_per_qp;
  std::vector<double> dec_ratio_per_qp;
};

// Ratios of the test run's stage times against an anchor run (same QP
// count). The anchor is a plain codec run, so only its encode/decode
// stages count.
TimingReport timing_report(const std::vector<StageTimes>& anchor,
                           const std::vector<StageTimes>& test);

}  // namespace sra
