#include "sra/toycodec.hpp"

#include <zlib.h>

#include <cmath>
#include <cstring>
#include <fstream>

#include "sra/yuv.hpp"

namespace sra {

namespace {

constexpr char kMagic[4] = {'T', 'Y', 'C', '1'};

void put_u32(std::string& buf, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint32_t get_u32(const std::vector<char>& b, std::size_t& pos) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i)
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(b[pos + i])) << (8 * i);
  pos += 4;
  return v;
}

}  // namespace

double toycodec_step(int qp) { return std::pow(2.0, (qp - 4.0) / 6.0); }

void toycodec_encode(const std::filesystem::path& input_yuv, int width, int height, int bit_depth,
                     ChromaFormat format, int frame_count, int qp,
                     const std::filesystem::path& bitstream) {
  const std::vector<Frame> frames = read_yuv(input_yuv, width, height, bit_depth, format,
                                             frame_count);
  const double step = toycodec_step(qp);

  std::vector<std::int16_t> q;
  for (const Frame& f : frames)
    for (const PlaneU16* p : {&f.y, &f.cb, &f.cr})
      for (std::uint16_t s : p->data)
        q.push_back(static_cast<std::int16_t>(std::llround(s / step)));

  const uLong src_bytes = static_cast<uLong>(q.size() * sizeof(std::int16_t));
  std::vector<unsigned char> packed(compressBound(src_bytes));
  uLongf packed_len = static_cast<uLongf>(packed.size());
  const int rc = compress2(packed.data(), &packed_len,
                           reinterpret_cast<const Bytef*>(q.data()), src_bytes,
                           Z_BEST_COMPRESSION);
  if (rc != Z_OK) throw InternalError("deflate failed in toy codec");

  std::string header;
  header.append(kMagic, 4);
  put_u32(header, static_cast<std::uint32_t>(width));
  put_u32(header, static_cast<std::uint32_t>(height));
  put_u32(header, static_cast<std::uint32_t>(bit_depth));
  put_u32(header, format == ChromaFormat::YCbCr420 ? 0u : 1u);
  put_u32(header, static_cast<std::uint32_t>(frame_count));
  put_u32(header, static_cast<std::uint32_t>(qp));
  put_u32(header, static_cast<std::uint32_t>(src_bytes));
  put_u32(header, static_cast<std::uint32_t>(packed_len));

  std::ofstream out(bitstream, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot open bitstream for writing: " + bitstream.string());
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  out.write(reinterpret_cast<const char*>(packed.data()), static_cast<std::streamsize>(packed_len));
  if (!out) throw Error("bitstream write failed: " + bitstream.string());
}

void toycodec_decode(const std::filesystem::path& bitstream,
                     const std::filesystem::path& output_yuv) {
  std::vector<char> bytes;
  {
    std::ifstream in(bitstream, std::ios::binary);
    if (!in) throw InputError("cannot open bitstream: " + bitstream.string());
    bytes.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  }
  if (bytes.size() < 36 || std::memcmp(bytes.data(), kMagic, 4) != 0)
    throw FormatError("not a toy codec bitstream: " + bitstream.string());
  std::size_t pos = 4;
  const int width = static_cast<int>(get_u32(bytes, pos));
  const int height = static_cast<int>(get_u32(bytes, pos));
  const int bit_depth = static_cast<int>(get_u32(bytes, pos));
  const ChromaFormat format = get_u32(bytes, pos) == 0 ? ChromaFormat::YCbCr420
                                                       : ChromaFormat::YCbCr444;
  const int frame_count = static_cast<int>(get_u32(bytes, pos));
  const int qp = static_cast<int>(get_u32(bytes, pos));
  const std::uint32_t src_bytes = get_u32(bytes, pos);
  const std::uint32_t packed_len = get_u32(bytes, pos);
  if (bytes.size() != pos + packed_len)
    throw TruncationError("toy codec bitstream has wrong payload size");

  std::vector<std::int16_t> q(src_bytes / sizeof(std::int16_t));
  uLongf dst_len = src_bytes;
  const int rc = uncompress(reinterpret_cast<Bytef*>(q.data()), &dst_len,
                            reinterpret_cast<const Bytef*>(bytes.data() + pos), packed_len);
  if (rc != Z_OK || dst_len != src_bytes) throw FormatError("inflate failed in toy codec");

  const double step = toycodec_step(qp);
  const int maxv = (1 << bit_depth) - 1;
  std::vector<Frame> frames;
  std::size_t qi = 0;
  for (int i = 0; i < frame_count; ++i) {
    Frame f = Frame::allocate(width, height, bit_depth, format);
    for (PlaneU16* p : {&f.y, &f.cb, &f.cr})
      for (auto& s : p->data) s = quantize_sample(q[qi++] * step, maxv);
    frames.push_back(std::move(f));
  }
  write_yuv(output_yuv, frames);
}

}  // namespace sra
