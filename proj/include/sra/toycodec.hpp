#pragma once

#include <filesystem>

#include "sra/frame.hpp"

namespace sra {

// Minimal deterministic lossy codec for exercising the pipeline without
// an external encoder: uniform sample quantization with a QP-driven step
// (doubling every 6 QP) followed by zlib deflate. Rate and distortion
// both respond monotonically to QP on natural content, which is all the
// RD machinery needs.
void toycodec_encode(const std::filesystem::path& input_yuv, int width, int height, int bit_depth,
                     ChromaFormat format, int frame_count, int qp,
                     const std::filesystem::path& bitstream);

// The bitstream is self-describing; geometry comes from its header.
void toycodec_decode(const std::filesystem::path& bitstream,
                     const std::filesystem::path& output_yuv);

double toycodec_step(int qp);

}  // namespace sra
