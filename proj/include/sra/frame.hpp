#pragma once

#include <cstdint>
#include <string>

#include "sra/tensor.hpp"

namespace sra {

enum class ChromaFormat { YCbCr420, YCbCr444 };

std::string to_string(ChromaFormat f);
ChromaFormat chroma_format_from_string(const std::string& s);

// Planar YCbCr picture. Samples are unsigned, bit_depth 8 or 10; for 4:2:0
// the chroma planes are half size in both dimensions and width/height must
// be even.
struct Frame {
  int width = 0;
  int height = 0;
  int bit_depth = 10;
  ChromaFormat format = ChromaFormat::YCbCr420;
  PlaneU16 y, cb, cr;

  static Frame allocate(int width, int height, int bit_depth, ChromaFormat format);
  int max_value() const { return (1 << bit_depth) - 1; }
  int chroma_width() const { return format == ChromaFormat::YCbCr420 ? width / 2 : width; }
  int chroma_height() const { return format == ChromaFormat::YCbCr420 ? height / 2 : height; }

  // Checks geometry, plane shapes and sample range; throws on violation.
  void validate() const;
};

bool operator==(const Frame& a, const Frame& b);

// Shared rounding rule: clamp to [0, max_value], round half-up.
std::uint16_t quantize_sample(double v, int max_value);

// Nearest-neighbor chroma replication into the 2x2 co-located positions.
Frame convert_420_to_444(const Frame& f);

// 2x2 chroma mean, rounded half-up.
Frame convert_444_to_420(const Frame& f);

// Sample / (2^bit_depth - 1) into a 3-channel float tensor (Y, Cb, Cr).
Tensor3 frame_to_tensor(const Frame& f);

// Inverse of frame_to_tensor: clamp to [0,1], scale, round half-up.
Frame tensor_to_frame(const Tensor3& t, int bit_depth);

}  // namespace sra
