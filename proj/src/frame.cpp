#include "sra/frame.hpp"

#include <cmath>

namespace sra {

std::string to_string(ChromaFormat f) {
  return f == ChromaFormat::YCbCr420 ? "yuv420" : "yuv444";
}

ChromaFormat chroma_format_from_string(const std::string& s) {
  if (s == "yuv420" || s == "420" || s == "420p10" || s == "i420") return ChromaFormat::YCbCr420;
  if (s == "yuv444" || s == "444") return ChromaFormat::YCbCr444;
  throw InputError("unknown chroma format: " + s);
}

Frame Frame::allocate(int width, int height, int bit_depth, ChromaFormat format) {
  Frame f;
  f.width = width;
  f.height = height;
  f.bit_depth = bit_depth;
  f.format = format;
  if (width <= 0 || height <= 0) throw DimensionError("frame dimensions must be positive");
  if (bit_depth != 8 && bit_depth != 10) throw InputError("bit depth must be 8 or 10");
  if (format == ChromaFormat::YCbCr420 && (width % 2 != 0 || height % 2 != 0))
    throw DimensionError("4:2:0 requires even width and height");
  f.y = PlaneU16(height, width);
  f.cb = PlaneU16(f.chroma_height(), f.chroma_width());
  f.cr = PlaneU16(f.chroma_height(), f.chroma_width());
  return f;
}

void Frame::validate() const {
  if (width <= 0 || height <= 0) throw DimensionError("frame dimensions must be positive");
  if (bit_depth != 8 && bit_depth != 10) throw InputError("bit depth must be 8 or 10");
  if (format == ChromaFormat::YCbCr420 && (width % 2 != 0 || height % 2 != 0))
    throw DimensionError("4:2:0 requires even width and height");
  if (y.height != height || y.width != width) throw ShapeError("luma plane shape mismatch");
  if (cb.height != chroma_height() || cb.width != chroma_width() ||
      cr.height != chroma_height() || cr.width != chroma_width())
    throw ShapeError("chroma plane shape mismatch");
  const std::uint16_t maxv = static_cast<std::uint16_t>(max_value());
  for (const PlaneU16* p : {&y, &cb, &cr})
    for (std::uint16_t s : p->data)
      if (s > maxv) throw RangeError("sample exceeds bit depth range");
}

bool operator==(const Frame& a, const Frame& b) {
  return a.width == b.width && a.height == b.height && a.bit_depth == b.bit_depth &&
         a.format == b.format && a.y.data == b.y.data && a.cb.data == b.cb.data &&
         a.cr.data == b.cr.data;
}

std::uint16_t quantize_sample(double v, int max_value) {
  if (v < 0.0) v = 0.0;
  if (v > max_value) v = static_cast<double>(max_value);
  return static_cast<std::uint16_t>(std::floor(v + 0.5));
}

Frame convert_420_to_444(const Frame& f) {
  if (f.format != ChromaFormat::YCbCr420) throw FormatError("convert_420_to_444 expects a 4:2:0 frame");
  Frame out = Frame::allocate(f.width, f.height, f.bit_depth, ChromaFormat::YCbCr444);
  out.y = f.y;
  for (int y = 0; y < f.height; ++y) {
    for (int x = 0; x < f.width; ++x) {
      out.cb.at(y, x) = f.cb.at(y / 2, x / 2);
      out.cr.at(y, x) = f.cr.at(y / 2, x / 2);
    }
  }
  return out;
}

Frame convert_444_to_420(const Frame& f) {
  if (f.format != ChromaFormat::YCbCr444) throw FormatError("convert_444_to_420 expects a 4:4:4 frame");
  if (f.width % 2 != 0 || f.height % 2 != 0)
    throw DimensionError("convert_444_to_420 requires even dimensions");
  Frame out = Frame::allocate(f.width, f.height, f.bit_depth, ChromaFormat::YCbCr420);
  out.y = f.y;
  auto pool = [&](const PlaneU16& src, PlaneU16& dst) {
    for (int y = 0; y < out.chroma_height(); ++y) {
      for (int x = 0; x < out.chroma_width(); ++x) {
        double sum = src.at(2 * y, 2 * x) + src.at(2 * y, 2 * x + 1) +
                     src.at(2 * y + 1, 2 * x) + src.at(2 * y + 1, 2 * x + 1);
        dst.at(y, x) = quantize_sample(sum / 4.0, f.max_value());
      }
    }
  };
  pool(f.cb, out.cb);
  pool(f.cr, out.cr);
  return out;
}

Tensor3 frame_to_tensor(const Frame& f) {
  if (f.format != ChromaFormat::YCbCr444) throw FormatError("frame_to_tensor expects a 4:4:4 frame");
  Tensor3 t(3, f.height, f.width);
  const double scale = 1.0 / f.max_value();
  const PlaneU16* planes[3] = {&f.y, &f.cb, &f.cr};
  for (int c = 0; c < 3; ++c) {
    float* dst = t.channel(c);
    const std::uint16_t* src = planes[c]->data.data();
    for (std::size_t i = 0; i < t.plane_size(); ++i) dst[i] = static_cast<float>(src[i] * scale);
  }
  return t;
}

Frame tensor_to_frame(const Tensor3& t, int bit_depth) {
  if (t.channels != 3) throw ShapeError("tensor_to_frame expects 3 channels");
  Frame f = Frame::allocate(t.width, t.height, bit_depth, ChromaFormat::YCbCr444);
  const int maxv = f.max_value();
  PlaneU16* planes[3] = {&f.y, &f.cb, &f.cr};
  for (int c = 0; c < 3; ++c) {
    std::uint16_t* dst = planes[c]->data.data();
    const float* src = t.channel(c);
    for (std::size_t i = 0; i < t.plane_size(); ++i)
      dst[i] = quantize_sample(static_cast<double>(src[i]) * maxv, maxv);
  }
  return f;
}

}  // namespace sra
