#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "sra/frame.hpp"
#include "sra/tensor.hpp"

namespace sra {

// Placement record for overlapping tiles. Origins advance by
// tile_size - overlap; the last origin per axis is clamped so the far
// tile edge coincides with the frame edge.
struct TileGrid {
  int frame_width = 0;
  int frame_height = 0;
  int tile_size = 0;
  int overlap = 0;
  std::vector<std::pair<int, int>> origins;  // (x, y), row-major

  int stride() const { return tile_size - overlap; }

  // Same layout with every coordinate halved; origins must all be even.
  TileGrid halved() const;
};

std::vector<int> tile_axis_origins(int frame_size, int tile_size, int overlap);

TileGrid make_tile_grid(int frame_width, int frame_height, int tile_size, int overlap);

// Cuts a 4:4:4 tensor into tile_size^2 blocks on the grid.
std::pair<std::vector<Tensor3>, TileGrid> extract_tiles(const Tensor3& frame, int tile_size = 96,
                                                        int overlap = 8);

// Mean-blends tiles back onto the grid; every covered pixel is the
// arithmetic mean of all tile values over it, accumulated in doubles, so
// the result is independent of tile order.
Tensor3 aggregate_tiles(const std::vector<Tensor3>& tiles, const TileGrid& grid);

// Seeded random crop + k*90-degree rotation training blocks, returned as
// 4:4:4 tensors in [0,1].
std::vector<Tensor3> extract_training_blocks(const std::vector<Frame>& frames, int block_size,
                                             int count, std::uint64_t seed);

}  // namespace sra
