#include "sra/tiling.hpp"

#include <random>

namespace sra {

std::vector<int> tile_axis_origins(int frame_size, int tile_size, int overlap) {
  if (tile_size <= overlap) throw InputError("tile_size must exceed overlap");
  if (frame_size < tile_size) throw DimensionError("frame smaller than tile size");
  const int stride = tile_size - overlap;
  std::vector<int> origins;
  int pos = 0;
  for (;;) {
    origins.push_back(pos);
    if (pos + tile_size >= frame_size) break;
    pos = std::min(pos + stride, frame_size - tile_size);
  }
  return origins;
}

TileGrid make_tile_grid(int frame_width, int frame_height, int tile_size, int overlap) {
  TileGrid g;
  g.frame_width = frame_width;
  g.frame_height = frame_height;
  g.tile_size = tile_size;
  g.overlap = overlap;
  const std::vector<int> xs = tile_axis_origins(frame_width, tile_size, overlap);
  const std::vector<int> ys = tile_axis_origins(frame_height, tile_size, overlap);
  for (int y : ys)
    for (int x : xs) g.origins.emplace_back(x, y);
  return g;
}

TileGrid TileGrid::halved() const {
  TileGrid g;
  g.frame_width = frame_width / 2;
  g.frame_height = frame_height / 2;
  g.tile_size = tile_size / 2;
  g.overlap = overlap / 2;
  g.origins.reserve(origins.size());
  for (auto [x, y] : origins) {
    if (x % 2 != 0 || y % 2 != 0) throw InternalError("tile origin not divisible by 2");
    g.origins.emplace_back(x / 2, y / 2);
  }
  return g;
}

std::pair<std::vector<Tensor3>, TileGrid> extract_tiles(const Tensor3& frame, int tile_size,
                                                        int overlap) {
  if (frame.height < tile_size || frame.width < tile_size)
    throw DimensionError("frame smaller than tile size");
  TileGrid grid = make_tile_grid(frame.width, frame.height, tile_size, overlap);
  std::vector<Tensor3> tiles;
  tiles.reserve(grid.origins.size());
  for (auto [ox, oy] : grid.origins) {
    Tensor3 tile(frame.channels, tile_size, tile_size);
    for (int c = 0; c < frame.channels; ++c)
      for (int y = 0; y < tile_size; ++y)
        for (int x = 0; x < tile_size; ++x) tile.at(c, y, x) = frame.at(c, oy + y, ox + x);
    tiles.push_back(std::move(tile));
  }
  return {std::move(tiles), std::move(grid)};
}

Tensor3 aggregate_tiles(const std::vector<Tensor3>& tiles, const TileGrid& grid) {
  if (tiles.size() != grid.origins.size())
    throw InputError("tile count does not match grid origin count");
  if (tiles.empty()) throw InputError("no tiles to aggregate");
  const int channels = tiles.front().channels;
  TensorD sum(channels, grid.frame_height, grid.frame_width, 0.0);
  PlaneT<std::uint32_t> cover(grid.frame_height, grid.frame_width, 0);
  for (std::size_t i = 0; i < tiles.size(); ++i) {
    const Tensor3& tile = tiles[i];
    if (tile.channels != channels || tile.height != grid.tile_size || tile.width != grid.tile_size)
      throw ShapeError("tile shape does not match grid tile size");
    const auto [ox, oy] = grid.origins[i];
    for (int c = 0; c < channels; ++c)
      for (int y = 0; y < grid.tile_size; ++y)
        for (int x = 0; x < grid.tile_size; ++x)
          sum.at(c, oy + y, ox + x) += static_cast<double>(tile.at(c, y, x));
    for (int y = 0; y < grid.tile_size; ++y)
      for (int x = 0; x < grid.tile_size; ++x) cover.at(oy + y, ox + x) += 1;
  }
  Tensor3 out(channels, grid.frame_height, grid.frame_width);
  for (int y = 0; y < grid.frame_height; ++y)
    for (int x = 0; x < grid.frame_width; ++x)
      if (cover.at(y, x) == 0) throw InternalError("tile grid leaves uncovered pixels");
  for (int c = 0; c < channels; ++c)
    for (int y = 0; y < grid.frame_height; ++y)
      for (int x = 0; x < grid.frame_width; ++x)
        out.at(c, y, x) = static_cast<float>(sum.at(c, y, x) / cover.at(y, x));
  return out;
}

std::vector<Tensor3> extract_training_blocks(const std::vector<Frame>& frames, int block_size,
                                             int count, std::uint64_t seed) {
  if (frames.empty()) throw InputError("no source frames for training blocks");
  std::vector<Tensor3> sources;
  sources.reserve(frames.size());
  for (const Frame& f : frames) {
    if (f.width < block_size || f.height < block_size)
      throw DimensionError("source frame smaller than block size");
    sources.push_back(frame_to_tensor(f.format == ChromaFormat::YCbCr420 ? convert_420_to_444(f) : f));
  }
  // mt19937_64 with explicit modulo draws keeps block selection identical
  // across standard library implementations.
  std::mt19937_64 rng(seed);
  auto draw = [&rng](int n) { return static_cast<int>(rng() % static_cast<std::uint64_t>(n)); };
  std::vector<Tensor3> blocks;
  blocks.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    const Tensor3& src = sources[static_cast<std::size_t>(draw(static_cast<int>(sources.size())))];
    const int x0 = draw(src.width - block_size + 1);
    const int y0 = draw(src.height - block_size + 1);
    const int k = draw(4);
    Tensor3 block(3, block_size, block_size);
    for (int c = 0; c < 3; ++c)
      for (int y = 0; y < block_size; ++y)
        for (int x = 0; x < block_size; ++x) block.at(c, y, x) = src.at(c, y0 + y, x0 + x);
    blocks.push_back(rot90(block, k));
  }
  return blocks;
}

}  // namespace sra
