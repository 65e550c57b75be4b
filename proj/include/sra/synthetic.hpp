#pragma once

#include <cstdint>
#include <vector>

#include "sra/frame.hpp"

namespace sra {

// Seeded multi-sinusoid textures for tests and demos. max_frequency is in
// cycles per pixel; small values give smooth, natural-looking gradients,
// values near 0.25 give busy texture.
Tensor3 synthetic_texture_tensor(int height, int width, std::uint64_t seed,
                                 double max_frequency = 0.25);

Frame synthetic_texture_frame(int width, int height, int bit_depth, ChromaFormat format,
                              std::uint64_t seed, double max_frequency = 0.25);

std::vector<Frame> synthetic_video(int width, int height, int bit_depth, ChromaFormat format,
                                   int frame_count, std::uint64_t seed,
                                   double max_frequency = 0.25);

}  // namespace sra
