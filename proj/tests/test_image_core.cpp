#include <doctest.h>

#include <fstream>

#include "sra/yuv.hpp"
#include "test_helpers.hpp"

using namespace sra;

TEST_CASE("chroma replication fills the 2x2 co-located positions") {
  Frame f = Frame::allocate(4, 4, 10, ChromaFormat::YCbCr420);
  f.cb.at(0, 0) = 100;
  f.cb.at(0, 1) = 200;
  f.cb.at(1, 0) = 300;
  f.cb.at(1, 1) = 400;
  const Frame out = convert_420_to_444(f);
  CHECK(out.format == ChromaFormat::YCbCr444);
  CHECK(out.y.data == f.y.data);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x) {
      const int expected[2][2] = {{100, 200}, {300, 400}};
      CHECK(out.cb.at(y, x) == expected[y / 2][x / 2]);
    }
}

TEST_CASE("constant chroma survives 420 -> 444") {
  Frame f = Frame::allocate(8, 6, 10, ChromaFormat::YCbCr420);
  for (auto& v : f.cb.data) v = 512;
  for (auto& v : f.cr.data) v = 512;
  const Frame out = convert_420_to_444(f);
  for (auto v : out.cb.data) CHECK(v == 512);
  for (auto v : out.cr.data) CHECK(v == 512);
}

TEST_CASE("2x2 frame: the single chroma sample is replicated") {
  Frame f = Frame::allocate(2, 2, 10, ChromaFormat::YCbCr420);
  f.cb.at(0, 0) = 300;
  const Frame out = convert_420_to_444(f);
  for (auto v : out.cb.data) CHECK(v == 300);
}

TEST_CASE("444 -> 420 takes the 2x2 mean with round-half-up") {
  Frame f = Frame::allocate(2, 2, 10, ChromaFormat::YCbCr444);
  f.cb.at(0, 0) = 100;
  f.cb.at(0, 1) = 200;
  f.cb.at(1, 0) = 300;
  f.cb.at(1, 1) = 400;
  f.cr.at(0, 1) = 1;  // mean 0.25 rounds down
  const Frame out = convert_444_to_420(f);
  CHECK(out.cb.at(0, 0) == 250);
  CHECK(out.cr.at(0, 0) == 0);
}

TEST_CASE("420 -> 444 -> 420 is the identity") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const Frame f = test::random_frame(16, 12, 10, ChromaFormat::YCbCr420, seed);
    CHECK(convert_444_to_420(convert_420_to_444(f)) == f);
  }
}

TEST_CASE("constant frames are fixed points of both chroma conversions") {
  Frame f = Frame::allocate(8, 8, 10, ChromaFormat::YCbCr420);
  for (PlaneU16* p : {&f.y, &f.cb, &f.cr})
    for (auto& v : p->data) v = 777;
  const Frame up = convert_420_to_444(f);
  for (auto v : up.cb.data) CHECK(v == 777);
  CHECK(convert_444_to_420(up) == f);
}

TEST_CASE("format preconditions are enforced") {
  Frame f444 = Frame::allocate(4, 4, 10, ChromaFormat::YCbCr444);
  CHECK_THROWS_AS(convert_420_to_444(f444), FormatError);
  Frame f420 = Frame::allocate(4, 4, 10, ChromaFormat::YCbCr420);
  CHECK_THROWS_AS(convert_444_to_420(f420), FormatError);
}

TEST_CASE("frame_to_tensor maps range endpoints and midpoints") {
  Frame f = Frame::allocate(2, 2, 10, ChromaFormat::YCbCr444);
  f.y.at(0, 0) = 0;
  f.y.at(0, 1) = 1023;
  f.y.at(1, 0) = 512;
  const Tensor3 t = frame_to_tensor(f);
  CHECK(t.at(0, 0, 0) == doctest::Approx(0.0));
  CHECK(t.at(0, 0, 1) == doctest::Approx(1.0));
  CHECK(t.at(0, 1, 0) == doctest::Approx(512.0 / 1023.0).epsilon(1e-7));
}

TEST_CASE("frame -> tensor -> frame round trips on grid values") {
  for (int bit_depth : {8, 10}) {
    const Frame f = test::random_frame(10, 6, bit_depth, ChromaFormat::YCbCr444, 99);
    CHECK(tensor_to_frame(frame_to_tensor(f), bit_depth) == f);
  }
}

TEST_CASE("tensor_to_frame clamps any finite input into range") {
  Tensor3 t(3, 2, 2);
  t.at(0, 0, 0) = -2.5f;
  t.at(0, 0, 1) = 3.5f;
  t.at(1, 1, 1) = 0.5f;
  const Frame f = tensor_to_frame(t, 10);
  CHECK(f.y.at(0, 0) == 0);
  CHECK(f.y.at(0, 1) == 1023);
  CHECK(f.cb.at(1, 1) == 512);  // 511.5 rounds half-up
  Tensor3 bad(2, 2, 2);
  CHECK_THROWS_AS(tensor_to_frame(bad, 10), ShapeError);
}

TEST_CASE("yuv round trip is bit exact") {
  test::TempDir tmp("yuv");
  for (auto [bit_depth, format] :
       {std::pair{10, ChromaFormat::YCbCr420}, std::pair{8, ChromaFormat::YCbCr444}}) {
    const auto path = tmp / "clip.yuv";
    std::vector<Frame> frames;
    for (std::uint64_t i = 0; i < 3; ++i)
      frames.push_back(test::random_frame(12, 8, bit_depth, format, 10 + i));
    write_yuv(path, frames);
    const auto back = read_yuv(path, 12, 8, bit_depth, format, 3);
    REQUIRE(back.size() == frames.size());
    for (std::size_t i = 0; i < frames.size(); ++i) CHECK(back[i] == frames[i]);
  }
}

TEST_CASE("frame byte size arithmetic") {
  // 2x2 4:2:0 10-bit: 2x2x2 luma + 2 * (1x1x2) chroma = 12 bytes
  CHECK(yuv_frame_bytes(2, 2, 10, ChromaFormat::YCbCr420) == 12);
  CHECK(yuv_frame_bytes(2, 2, 8, ChromaFormat::YCbCr444) == 12);
  test::TempDir tmp("size");
  const auto path = tmp / "one.yuv";
  write_yuv(path, {test::random_frame(2, 2, 10, ChromaFormat::YCbCr420, 5)});
  CHECK(std::filesystem::file_size(path) == 12);
}

TEST_CASE("short or empty files give a truncation error") {
  test::TempDir tmp("trunc");
  const auto path = tmp / "empty.yuv";
  std::ofstream(path).close();
  CHECK_THROWS_AS(read_yuv(path, 2, 2, 10, ChromaFormat::YCbCr420, 1), TruncationError);
  std::ofstream(path, std::ios::binary) << "abc";
  CHECK_THROWS_AS(read_yuv(path, 2, 2, 10, ChromaFormat::YCbCr420, 1), TruncationError);
}

TEST_CASE("out-of-range 10-bit samples are rejected on read") {
  test::TempDir tmp("range");
  const auto path = tmp / "bad.yuv";
  {
    std::ofstream out(path, std::ios::binary);
    // one 2x2 4:2:0 frame, first sample 0x0500 = 1280 > 1023
    const unsigned char bytes[12] = {0x00, 0x05, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0};
    out.write(reinterpret_cast<const char*>(bytes), 12);
  }
  CHECK_THROWS_AS(read_yuv(path, 2, 2, 10, ChromaFormat::YCbCr420, 1), RangeError);
}

TEST_CASE("frame validation catches bad geometry") {
  CHECK_THROWS_AS(Frame::allocate(5, 4, 10, ChromaFormat::YCbCr420), DimensionError);
  CHECK_THROWS_AS(Frame::allocate(4, 4, 12, ChromaFormat::YCbCr420), InputError);
  Frame f = Frame::allocate(4, 4, 10, ChromaFormat::YCbCr420);
  f.y.at(0, 0) = 2000;
  CHECK_THROWS_AS(f.validate(), RangeError);
}
