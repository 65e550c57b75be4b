#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "sra/resample.hpp"
#include "sra/tiling.hpp"
#include "test_helpers.hpp"

using namespace sra;

namespace {

// Independent origin enumeration used as the grid arithmetic oracle.
std::vector<int> origins_oracle(int frame, int tile, int overlap) {
  std::vector<int> out;
  const int stride = tile - overlap;
  for (int pos = 0;; pos += stride) {
    if (pos + tile >= frame) {
      out.push_back(frame - tile);
      break;
    }
    out.push_back(pos);
  }
  return out;
}

// Rasterizes tile rectangles to count per-pixel coverage.
PlaneT<int> coverage_oracle(const TileGrid& g) {
  PlaneT<int> cover(g.frame_height, g.frame_width, 0);
  for (auto [ox, oy] : g.origins)
    for (int y = 0; y < g.tile_size; ++y)
      for (int x = 0; x < g.tile_size; ++x) cover.at(oy + y, ox + x) += 1;
  return cover;
}

}  // namespace

TEST_CASE("tile origins: exact fit, two tiles, clamped last tile") {
  CHECK(tile_axis_origins(96, 96, 8) == std::vector<int>{0});
  CHECK(tile_axis_origins(184, 96, 8) == std::vector<int>{0, 88});
  CHECK(tile_axis_origins(200, 96, 8) == std::vector<int>{0, 88, 104});
  for (int frame : {96, 104, 184, 200, 250, 384})
    CHECK(tile_axis_origins(frame, 96, 8) == origins_oracle(frame, 96, 8));
  CHECK_THROWS_AS(tile_axis_origins(95, 96, 8), DimensionError);
  CHECK_THROWS_AS(tile_axis_origins(100, 8, 8), InputError);
}

TEST_CASE("a 200x200 frame yields a 3x3 grid of full tiles") {
  const Tensor3 frame = test::random_tensor(3, 200, 200, 17);
  auto [tiles, grid] = extract_tiles(frame, 96, 8);
  CHECK(tiles.size() == 9);
  for (const Tensor3& t : tiles) {
    CHECK(t.height == 96);
    CHECK(t.width == 96);
  }
  // tiles hold exact crops
  for (std::size_t i = 0; i < tiles.size(); ++i) {
    const auto [ox, oy] = grid.origins[i];
    for (int c = 0; c < 3; ++c)
      for (int y = 0; y < 96; y += 13)
        for (int x = 0; x < 96; x += 13) CHECK(tiles[i].at(c, y, x) == frame.at(c, oy + y, ox + x));
  }
}

TEST_CASE("every pixel is covered and the blend divisor matches rasterized counts") {
  for (auto [w, h] : {std::pair{96, 96}, std::pair{184, 96}, std::pair{200, 136}}) {
    const TileGrid grid = make_tile_grid(w, h, 96, 8);
    const PlaneT<int> cover = coverage_oracle(grid);
    for (int v : cover.data) CHECK(v >= 1);
    // feed tiles of constant 1 weighted by their index; the aggregate then
    // equals (sum of covering indices) / count, which the oracle recomputes
    std::vector<Tensor3> tiles;
    for (std::size_t i = 0; i < grid.origins.size(); ++i)
      tiles.emplace_back(1, 96, 96, static_cast<float>(i + 1));
    const Tensor3 agg = aggregate_tiles(tiles, grid);
    PlaneD expect(grid.frame_height, grid.frame_width, 0.0);
    for (std::size_t i = 0; i < grid.origins.size(); ++i) {
      const auto [ox, oy] = grid.origins[i];
      for (int y = 0; y < 96; ++y)
        for (int x = 0; x < 96; ++x) expect.at(oy + y, ox + x) += static_cast<double>(i + 1);
    }
    for (int y = 0; y < grid.frame_height; ++y)
      for (int x = 0; x < grid.frame_width; ++x)
        CHECK(agg.at(0, y, x) ==
              doctest::Approx(expect.at(y, x) / cover.at(y, x)).epsilon(1e-12));
  }
}

TEST_CASE("aggregating constant tiles returns the constant") {
  const TileGrid grid = make_tile_grid(184, 96, 96, 8).halved();
  std::vector<Tensor3> tiles(grid.origins.size(), Tensor3(3, 48, 48, 0.625f));
  const Tensor3 out = aggregate_tiles(tiles, grid);
  for (float v : out.data) CHECK(v == 0.625f);
}

TEST_CASE("tiles cropped from a frame aggregate back to that frame exactly") {
  const Tensor3 low = test::random_tensor(3, 92, 48, 23);
  auto [tiles, grid] = extract_tiles(low, 48, 4);
  const Tensor3 back = aggregate_tiles(tiles, grid);
  CHECK(back.data == low.data);
}

TEST_CASE("two tiles overlapping four columns blend to the mean") {
  TileGrid grid;
  grid.frame_width = 92;
  grid.frame_height = 48;
  grid.tile_size = 48;
  grid.overlap = 4;
  grid.origins = {{0, 0}, {44, 0}};
  std::vector<Tensor3> tiles{Tensor3(1, 48, 48, 0.0f), Tensor3(1, 48, 48, 1.0f)};
  const Tensor3 out = aggregate_tiles(tiles, grid);
  for (int y = 0; y < 48; ++y) {
    CHECK(out.at(0, y, 0) == 0.0f);
    CHECK(out.at(0, y, 44) == 0.5f);
    CHECK(out.at(0, y, 47) == 0.5f);
    CHECK(out.at(0, y, 48) == 1.0f);
    CHECK(out.at(0, y, 91) == 1.0f);
  }
}

TEST_CASE("aggregation is independent of tile order") {
  const Tensor3 frame = test::random_tensor(3, 200, 136, 31);
  auto [tiles, grid] = extract_tiles(frame, 96, 8);
  const Tensor3 a = aggregate_tiles(tiles, grid);

  std::vector<std::size_t> perm(tiles.size());
  std::iota(perm.begin(), perm.end(), 0u);
  std::mt19937_64 rng(5);
  for (std::size_t i = perm.size() - 1; i > 0; --i) std::swap(perm[i], perm[rng() % (i + 1)]);
  std::vector<Tensor3> shuffled;
  TileGrid shuffled_grid = grid;
  for (std::size_t i = 0; i < perm.size(); ++i) {
    shuffled.push_back(tiles[perm[i]]);
    shuffled_grid.origins[i] = grid.origins[perm[i]];
  }
  const Tensor3 b = aggregate_tiles(shuffled, shuffled_grid);
  CHECK(a.data == b.data);  // bit identical
}

TEST_CASE("per-tile crops of a reduced frame aggregate to the reduced frame") {
  // When the per-tile operator is 'crop of the globally reduced frame',
  // tiling followed by aggregation is exact: overlapping values agree.
  const Tensor3 frame = test::random_tensor(3, 184, 96, 41);
  auto [tiles, grid] = extract_tiles(frame, 96, 8);
  const Tensor3 global_low = downsample2x(frame, FilterKind::Lanczos3);
  const TileGrid low_grid = grid.halved();
  std::vector<Tensor3> low_tiles;
  for (auto [ox, oy] : low_grid.origins) {
    Tensor3 t(3, 48, 48);
    for (int c = 0; c < 3; ++c)
      for (int y = 0; y < 48; ++y)
        for (int x = 0; x < 48; ++x) t.at(c, y, x) = global_low.at(c, oy + y, ox + x);
    low_tiles.push_back(std::move(t));
  }
  const Tensor3 agg = aggregate_tiles(low_tiles, low_grid);
  CHECK(agg.data == global_low.data);
}

TEST_CASE("training block extraction is seeded and rotation-augmented") {
  std::vector<Frame> frames;
  for (std::uint64_t i = 0; i < 3; ++i)
    frames.push_back(test::random_frame(128, 112, 10, ChromaFormat::YCbCr420, 100 + i));

  const auto a = extract_training_blocks(frames, 96, 12, 7);
  const auto b = extract_training_blocks(frames, 96, 12, 7);
  REQUIRE(a.size() == 12);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].data == b[i].data);

  const auto c = extract_training_blocks(frames, 96, 12, 8);
  bool any_diff = false;
  for (std::size_t i = 0; i < c.size(); ++i) any_diff = any_diff || c[i].data != a[i].data;
  CHECK(any_diff);

  CHECK_THROWS_AS(extract_training_blocks({}, 96, 4, 1), InputError);
  std::vector<Frame> small{test::random_frame(64, 64, 10, ChromaFormat::YCbCr420, 1)};
  CHECK_THROWS_AS(extract_training_blocks(small, 96, 4, 1), DimensionError);
}

TEST_CASE("quarter rotations compose as the rotation group") {
  const Tensor3 t = test::random_tensor(3, 8, 8, 3);
  CHECK(rot90(rot90(t, 2), 2).data == t.data);
  CHECK(rot90(rot90(rot90(rot90(t, 1), 1), 1), 1).data == t.data);
  CHECK(rot90(t, 3).data == rot90(rot90(rot90(t, 1), 1), 1).data);
  // constant blocks are rotation invariant
  const Tensor3 c(2, 6, 6, 0.5f);
  for (int k = 0; k < 4; ++k) CHECK(rot90(c, k).data == c.data);
}

TEST_CASE("constant sources give constant blocks regardless of rotation") {
  Frame f = Frame::allocate(112, 112, 10, ChromaFormat::YCbCr420);
  for (PlaneU16* p : {&f.y, &f.cb, &f.cr})
    for (auto& v : p->data) v = 400;
  const auto blocks = extract_training_blocks({f}, 96, 6, 9);
  const float expect = 400.0f / 1023.0f;
  for (const Tensor3& b : blocks)
    for (float v : b.data) CHECK(v == doctest::Approx(expect).epsilon(1e-7));
}
