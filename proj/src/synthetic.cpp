#include "sra/synthetic.hpp"

#include <cmath>
#include <random>

namespace sra {

namespace {

constexpr double kTau = 6.28318530717958647692;

struct Wave {
  double fx, fy, phase, amp;
};

}  // namespace

Tensor3 synthetic_texture_tensor(int height, int width, std::uint64_t seed, double max_frequency) {
  std::mt19937_64 rng(seed);
  auto unit = [&rng]() { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };

  const int n_waves = 6;
  std::vector<Wave> waves(n_waves);
  double amp_sum = 0.0;
  for (int k = 0; k < n_waves; ++k) {
    waves[static_cast<std::size_t>(k)] = {max_frequency * (0.15 + 0.85 * unit()),
                                          max_frequency * (0.15 + 0.85 * unit()), kTau * unit(),
                                          1.0 / (1.0 + k)};
    amp_sum += waves[static_cast<std::size_t>(k)].amp;
  }
  // Per-channel phase offsets keep Y/Cb/Cr correlated but distinct.
  const double chan_phase[3] = {0.0, kTau * unit(), kTau * unit()};
  const double ramp = 0.15 * unit();

  Tensor3 t(3, height, width);
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        double v = 0.0;
        for (const Wave& w : waves)
          v += w.amp * std::sin(kTau * (w.fx * x + w.fy * y) + w.phase + chan_phase[c]);
        v = 0.5 + 0.35 * v / amp_sum + ramp * (static_cast<double>(x + y) / (width + height) - 0.5);
        t.at(c, y, x) = static_cast<float>(std::clamp(v, 0.0, 1.0));
      }
    }
  }
  return t;
}

Frame synthetic_texture_frame(int width, int height, int bit_depth, ChromaFormat format,
                              std::uint64_t seed, double max_frequency) {
  Tensor3 t = synthetic_texture_tensor(height, width, seed, max_frequency);
  Frame f444 = tensor_to_frame(t, bit_depth);
  return format == ChromaFormat::YCbCr420 ? convert_444_to_420(f444) : f444;
}

std::vector<Frame> synthetic_video(int width, int height, int bit_depth, ChromaFormat format,
                                   int frame_count, std::uint64_t seed, double max_frequency) {
  std::vector<Frame> frames;
  frames.reserve(static_cast<std::size_t>(frame_count));
  for (int i = 0; i < frame_count; ++i)
    frames.push_back(synthetic_texture_frame(width, height, bit_depth, format,
                                             seed + static_cast<std::uint64_t>(i) * 7919u,
                                             max_frequency));
  return frames;
}

}  // namespace sra
