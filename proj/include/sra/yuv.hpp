#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "sra/frame.hpp"

namespace sra {

// Bytes of one frame on disk: planar Y,Cb,Cr; 8-bit samples take one byte,
// 10-bit samples take two bytes little-endian with the low 10 bits used.
std::size_t yuv_frame_bytes(int width, int height, int bit_depth, ChromaFormat format);

// Reads frame_count frames; the file may hold more, never less.
std::vector<Frame> read_yuv(const std::filesystem::path& path, int width, int height,
                            int bit_depth, ChromaFormat format, int frame_count);

void write_yuv(const std::filesystem::path& path, const std::vector<Frame>& frames);

}  // namespace sra
