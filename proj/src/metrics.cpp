#include "sra/metrics.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <sstream>

namespace sra {

double psnr_luma(const Frame& ref, const Frame& test) {
  if (ref.width != test.width || ref.height != test.height || ref.bit_depth != test.bit_depth)
    throw DimensionError("psnr_luma requires identical geometry and bit depth");
  double se = 0.0;
  for (std::size_t i = 0; i < ref.y.size(); ++i) {
    const double d = static_cast<double>(ref.y.data[i]) - static_cast<double>(test.y.data[i]);
    se += d * d;
  }
  if (se == 0.0) return kLosslessPsnr;
  const double mse = se / static_cast<double>(ref.y.size());
  const double maxv = static_cast<double>(ref.max_value());
  return 10.0 * std::log10(maxv * maxv / mse);
}

void RDCurve::validate() const {
  if (points.size() != 4) throw InputError("RD curve needs exactly 4 points");
  for (const RDPoint& p : points) {
    if (!(p.bitrate > 0.0)) throw InputError("RD bitrate must be positive");
    if (!std::isfinite(p.psnr)) throw InputError("RD psnr must be finite");
  }
  for (std::size_t i = 1; i < points.size(); ++i)
    if (!(points[i].bitrate < points[i - 1].bitrate))
      throw InputError("RD bitrates must strictly decrease with increasing QP");
}

RDCurve read_rd_curve(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open RD curve file: " + path.string());
  RDCurve c;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    RDPoint p;
    if (!(ss >> p.bitrate >> p.psnr))
      throw FormatError("bad RD curve line in " + path.string() + ": " + line);
    c.points.push_back(p);
  }
  c.validate();
  return c;
}

namespace {

// Interpolating cubic through 4 (psnr, log10 rate) pairs, abscissa
// centered at `center` for conditioning.
std::array<double, 4> fit_log_rate_poly(const RDCurve& curve, double center) {
  std::array<std::array<double, 5>, 4> m{};  // augmented Vandermonde
  for (int r = 0; r < 4; ++r) {
    const double p = curve.points[static_cast<std::size_t>(r)].psnr - center;
    double v = 1.0;
    for (int c = 0; c < 4; ++c) {
      m[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] = v;
      v *= p;
    }
    m[static_cast<std::size_t>(r)][4] =
        std::log10(curve.points[static_cast<std::size_t>(r)].bitrate);
  }
  // Gaussian elimination with partial pivoting.
  for (int col = 0; col < 4; ++col) {
    int pivot = col;
    for (int r = col + 1; r < 4; ++r)
      if (std::fabs(m[static_cast<std::size_t>(r)][static_cast<std::size_t>(col)]) >
          std::fabs(m[static_cast<std::size_t>(pivot)][static_cast<std::size_t>(col)]))
        pivot = r;
    std::swap(m[static_cast<std::size_t>(col)], m[static_cast<std::size_t>(pivot)]);
    const double d = m[static_cast<std::size_t>(col)][static_cast<std::size_t>(col)];
    if (d == 0.0) throw InputError("degenerate RD curve: repeated PSNR values");
    for (int r = 0; r < 4; ++r) {
      if (r == col) continue;
      const double f = m[static_cast<std::size_t>(r)][static_cast<std::size_t>(col)] / d;
      for (int c = col; c <= 4; ++c)
        m[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] -=
            f * m[static_cast<std::size_t>(col)][static_cast<std::size_t>(c)];
    }
  }
  std::array<double, 4> coeff{};
  for (int i = 0; i < 4; ++i)
    coeff[static_cast<std::size_t>(i)] =
        m[static_cast<std::size_t>(i)][4] / m[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)];
  return coeff;
}

double poly_integral(const std::array<double, 4>& c, double a, double b) {
  auto anti = [&](double x) {
    return ((c[3] / 4.0 * x + c[2] / 3.0) * x + c[1] / 2.0) * x * x + c[0] * x;
  };
  return anti(b) - anti(a);
}

std::pair<double, double> psnr_range(const RDCurve& c) {
  double lo = c.points.front().psnr, hi = lo;
  for (const RDPoint& p : c.points) {
    lo = std::min(lo, p.psnr);
    hi = std::max(hi, p.psnr);
  }
  return {lo, hi};
}

void require_monotone_psnr(const RDCurve& c) {
  for (std::size_t i = 1; i < c.points.size(); ++i)
    if (!(c.points[i].psnr < c.points[i - 1].psnr))
      throw InputError("RD psnr must strictly decrease with increasing QP");
}

}  // namespace

double bd_rate(const RDCurve& anchor, const RDCurve& test) {
  anchor.validate();
  test.validate();
  require_monotone_psnr(anchor);
  require_monotone_psnr(test);
  const auto [alo, ahi] = psnr_range(anchor);
  const auto [tlo, thi] = psnr_range(test);
  const double lo = std::max(alo, tlo);
  const double hi = std::min(ahi, thi);
  if (!(hi > lo)) throw RangeError("RD curves have no overlapping PSNR range");
  // A shared center keeps the result exactly invariant under common PSNR
  // shifts and exactly antisymmetric under operand swap.
  const double center = 0.5 * (lo + hi);
  const auto pa = fit_log_rate_poly(anchor, center);
  const auto pt = fit_log_rate_poly(test, center);
  const double mean_diff =
      (poly_integral(pt, lo - center, hi - center) - poly_integral(pa, lo - center, hi - center)) /
      (hi - lo);
  return (std::pow(10.0, mean_diff) - 1.0) * 100.0;
}

TimingReport timing_report(const std::vector<StageTimes>& anchor,
                           const std::vector<StageTimes>& test) {
  if (anchor.empty() || anchor.size() != test.size())
    throw InputError("timing report needs matching, nonempty anchor and test runs");
  TimingReport r;
  for (std::size_t i = 0; i < anchor.size(); ++i) {
    if (!(anchor[i].encode > 0.0) || !(anchor[i].decode > 0.0))
      throw InputError("anchor run is missing encode/decode timings");
    r.enc_ratio_per_qp.push_back(test[i].encoder_side() / anchor[i].encode);
    r.dec_ratio_per_qp.push_back(test[i].decoder_side() / anchor[i].decode);
  }
  for (double v : r.enc_ratio_per_qp) r.enc_ratio += v;
  for (double v : r.dec_ratio_per_qp) r.dec_ratio += v;
  r.enc_ratio /= static_cast<double>(anchor.size());
  r.dec_ratio /= static_cast<double>(anchor.size());
  return r;
}

}  // namespace sra
