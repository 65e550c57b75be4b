#include "sra/yuv.hpp"

#include <fstream>

namespace sra {

namespace {

std::size_t plane_bytes(int h, int w, int bit_depth) {
  return static_cast<std::size_t>(h) * w * (bit_depth > 8 ? 2 : 1);
}

void read_plane(std::istream& in, PlaneU16& p, int bit_depth, int max_value) {
  if (bit_depth > 8) {
    std::vector<unsigned char> buf(p.size() * 2);
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    for (std::size_t i = 0; i < p.size(); ++i) {
      std::uint16_t v = static_cast<std::uint16_t>(buf[2 * i] | (buf[2 * i + 1] << 8));
      if (v > max_value) throw RangeError("sample exceeds bit depth range in YUV file");
      p.data[i] = v;
    }
  } else {
    std::vector<unsigned char> buf(p.size());
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    for (std::size_t i = 0; i < p.size(); ++i) p.data[i] = buf[i];
  }
}

void write_plane(std::ostream& out, const PlaneU16& p, int bit_depth) {
  if (bit_depth > 8) {
    std::vector<unsigned char> buf(p.size() * 2);
    for (std::size_t i = 0; i < p.size(); ++i) {
      buf[2 * i] = static_cast<unsigned char>(p.data[i] & 0xff);
      buf[2 * i + 1] = static_cast<unsigned char>((p.data[i] >> 8) & 0xff);
    }
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  } else {
    std::vector<unsigned char> buf(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) buf[i] = static_cast<unsigned char>(p.data[i] & 0xff);
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  }
}

}  // namespace

std::size_t yuv_frame_bytes(int width, int height, int bit_depth, ChromaFormat format) {
  int cw = format == ChromaFormat::YCbCr420 ? width / 2 : width;
  int ch = format == ChromaFormat::YCbCr420 ? height / 2 : height;
  return plane_bytes(height, width, bit_depth) + 2 * plane_bytes(ch, cw, bit_depth);
}

std::vector<Frame> read_yuv(const std::filesystem::path& path, int width, int height,
                            int bit_depth, ChromaFormat format, int frame_count) {
  if (frame_count <= 0) throw InputError("frame_count must be positive");
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open YUV file: " + path.string());
  in.seekg(0, std::ios::end);
  const std::size_t file_size = static_cast<std::size_t>(in.tellg());
  in.seekg(0, std::ios::beg);
  const std::size_t need = yuv_frame_bytes(width, height, bit_depth, format) *
                           static_cast<std::size_t>(frame_count);
  if (file_size < need)
    throw TruncationError("YUV file " + path.string() + " holds " + std::to_string(file_size) +
                          " bytes, geometry requires " + std::to_string(need));
  std::vector<Frame> frames;
  frames.reserve(static_cast<std::size_t>(frame_count));
  const int maxv = (1 << bit_depth) - 1;
  for (int i = 0; i < frame_count; ++i) {
    Frame f = Frame::allocate(width, height, bit_depth, format);
    read_plane(in, f.y, bit_depth, maxv);
    read_plane(in, f.cb, bit_depth, maxv);
    read_plane(in, f.cr, bit_depth, maxv);
    if (!in) throw TruncationError("unexpected end of YUV file: " + path.string());
    frames.push_back(std::move(f));
  }
  return frames;
}

void write_yuv(const std::filesystem::path& path, const std::vector<Frame>& frames) {
  if (frames.empty()) throw InputError("no frames to write");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot open YUV file for writing: " + path.string());
  for (const Frame& f : frames) {
    f.validate();
    write_plane(out, f.y, f.bit_depth);
    write_plane(out, f.cb, f.bit_depth);
    write_plane(out, f.cr, f.bit_depth);
  }
  if (!out) throw Error("write failed: " + path.string());
}

}  // namespace sra
