#pragma once

#include <unistd.h>

#include <filesystem>
#include <random>
#include <string>

#include "sra/frame.hpp"
#include "sra/tensor.hpp"

namespace sra::test {

inline double unit_draw(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline Frame random_frame(int width, int height, int bit_depth, ChromaFormat format,
                          std::uint64_t seed) {
  Frame f = Frame::allocate(width, height, bit_depth, format);
  std::mt19937_64 rng(seed);
  const std::uint16_t maxv = static_cast<std::uint16_t>(f.max_value());
  for (PlaneU16* p : {&f.y, &f.cb, &f.cr})
    for (auto& s : p->data) s = static_cast<std::uint16_t>(rng() % (maxv + 1u));
  return f;
}

inline PlaneD random_plane(int height, int width, std::uint64_t seed, double lo = 0.0,
                           double hi = 1.0) {
  PlaneD p(height, width);
  std::mt19937_64 rng(seed);
  for (auto& v : p.data) v = lo + (hi - lo) * unit_draw(rng);
  return p;
}

inline TensorT<double> random_tensor_d(int c, int h, int w, std::uint64_t seed, double lo = 0.0,
                                       double hi = 1.0) {
  TensorT<double> t(c, h, w);
  std::mt19937_64 rng(seed);
  for (auto& v : t.data) v = lo + (hi - lo) * unit_draw(rng);
  return t;
}

inline Tensor3 random_tensor(int c, int h, int w, std::uint64_t seed, double lo = 0.0,
                             double hi = 1.0) {
  return random_tensor_d(c, h, w, seed, lo, hi).cast<float>();
}

// Unique scratch directory per test, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::uint64_t counter = 0;
    dir_ = std::filesystem::temp_directory_path() /
           ("sra_test_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(dir_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(dir_, ec);
  }
  const std::filesystem::path& path() const { return dir_; }
  std::filesystem::path operator/(const std::string& name) const { return dir_ / name; }

 private:
  std::filesystem::path dir_;
};

}  // namespace sra::test
