#include <doctest.h>

#include <cmath>

#include "sra/resample.hpp"
#include "test_helpers.hpp"

using namespace sra;

namespace {

constexpr FilterKind kKinds[3] = {FilterKind::Lanczos3, FilterKind::Bicubic, FilterKind::Bilinear};

// Direct (non-separable) 2-D resampling oracle built only on
// kernel_weight/kernel_radius: per output pixel, accumulate the full 2-D
// tap window with edge-replicated sampling and 2-D renormalization.
PlaneD direct_resample_oracle(const PlaneD& in, bool down, FilterKind kind) {
  const double scale = down ? 2.0 : 1.0;
  const double radius = kernel_radius(kind) * scale;
  const int out_h = down ? in.height / 2 : in.height * 2;
  const int out_w = down ? in.width / 2 : in.width * 2;
  PlaneD out(out_h, out_w);
  for (int oy = 0; oy < out_h; ++oy) {
    const double cy = down ? 2.0 * oy + 0.5 : (oy - 0.5) / 2.0;
    for (int ox = 0; ox < out_w; ++ox) {
      const double cx = down ? 2.0 * ox + 0.5 : (ox - 0.5) / 2.0;
      double acc = 0.0, wsum = 0.0;
      for (int j = static_cast<int>(std::ceil(cy - radius));
           j <= static_cast<int>(std::floor(cy + radius)); ++j) {
        for (int i = static_cast<int>(std::ceil(cx - radius));
             i <= static_cast<int>(std::floor(cx + radius)); ++i) {
          const double w =
              kernel_weight(kind, (j - cy) / scale) * kernel_weight(kind, (i - cx) / scale);
          const int sj = std::clamp(j, 0, in.height - 1);
          const int si = std::clamp(i, 0, in.width - 1);
          acc += w * in.at(sj, si);
          wsum += w;
        }
      }
      out.at(oy, ox) = acc / wsum;
    }
  }
  return out;
}

double max_abs_diff(const PlaneD& a, const PlaneD& b) {
  REQUIRE(a.same_shape(b));
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a.data[i] - b.data[i]));
  return m;
}

}  // namespace

TEST_CASE("kernel values at landmark points") {
  CHECK(kernel_weight(FilterKind::Lanczos3, 0.0) == doctest::Approx(1.0));
  CHECK(kernel_weight(FilterKind::Lanczos3, 1.0) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(kernel_weight(FilterKind::Lanczos3, 2.0) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(kernel_weight(FilterKind::Lanczos3, 3.0) == doctest::Approx(0.0));
  CHECK(kernel_weight(FilterKind::Lanczos3, 3.5) == 0.0);
  // sinc(1/2) * sinc(1/6) = (2/pi) * (3/pi) = 6/pi^2
  const double pi = 3.14159265358979323846;
  CHECK(kernel_weight(FilterKind::Lanczos3, 0.5) == doctest::Approx(6.0 / (pi * pi)).epsilon(1e-12));

  CHECK(kernel_weight(FilterKind::Bicubic, 0.0) == doctest::Approx(1.0));
  CHECK(kernel_weight(FilterKind::Bicubic, 1.0) == doctest::Approx(0.0));
  CHECK(kernel_weight(FilterKind::Bicubic, 0.5) == doctest::Approx(0.5625));
  CHECK(kernel_weight(FilterKind::Bicubic, 1.5) == doctest::Approx(-0.0625));
  CHECK(kernel_weight(FilterKind::Bicubic, 2.0) == doctest::Approx(0.0));

  CHECK(kernel_weight(FilterKind::Bilinear, 0.0) == doctest::Approx(1.0));
  CHECK(kernel_weight(FilterKind::Bilinear, 0.5) == doctest::Approx(0.5));
  CHECK(kernel_weight(FilterKind::Bilinear, 1.0) == doctest::Approx(0.0));
}

TEST_CASE("tap weights sum to one") {
  for (FilterKind kind : kKinds) {
    for (int size : {6, 16, 34}) {
      for (ResampleDirection dir : {ResampleDirection::Down, ResampleDirection::Up}) {
        const TapTable t = build_taps(size, dir, kind);
        for (int o = 0; o < t.out_size; ++o) {
          double sum = 0.0;
          for (int k = 0; k < t.taps; ++k)
            sum += t.weight[static_cast<std::size_t>(o) * t.taps + k];
          CHECK(std::fabs(sum - 1.0) < 1e-12);
        }
      }
    }
  }
}

TEST_CASE("constants are preserved by both directions") {
  std::mt19937_64 rng(42);
  for (FilterKind kind : kKinds) {
    const double c = 1023.0 * test::unit_draw(rng);
    PlaneD plane(12, 16, c);
    for (double v : downsample2x(plane, kind).data) CHECK(std::fabs(v - c) < 1e-6);
    for (double v : upsample2x(plane, kind).data) CHECK(std::fabs(v - c) < 1e-6);
  }
}

TEST_CASE("interior output of a reduced linear ramp stays affine") {
  // Reduction taps sit at symmetric half-phases, so the first moment
  // vanishes and every kernel maps f(x)=x to 2x+0.5 in the interior.
  PlaneD ramp(20, 32);
  for (int y = 0; y < ramp.height; ++y)
    for (int x = 0; x < ramp.width; ++x) ramp.at(y, x) = static_cast<double>(x);
  for (FilterKind kind : kKinds) {
    const PlaneD down = downsample2x(ramp, kind);
    for (int y = 4; y < down.height - 4; ++y)
      for (int x = 3; x <= 12; ++x) CHECK(std::fabs(down.at(y, x) - (2.0 * x + 0.5)) < 1e-4);
  }
}

TEST_CASE("interior output of an enlarged linear ramp") {
  PlaneD ramp(20, 32);
  for (int y = 0; y < ramp.height; ++y)
    for (int x = 0; x < ramp.width; ++x) ramp.at(y, x) = static_cast<double>(x);

  // Bicubic and Bilinear interpolate affine signals exactly.
  for (FilterKind kind : {FilterKind::Bicubic, FilterKind::Bilinear}) {
    const PlaneD up = upsample2x(ramp, kind);
    for (int y = 8; y < up.height - 8; ++y)
      for (int x = 7; x < up.width - 7; ++x)
        CHECK(std::fabs(up.at(y, x) - (x - 0.5) / 2.0) < 1e-4);
  }

  // Lanczos3 at quarter phases carries a first-moment ripple; derive its
  // magnitude from the kernel and check the output alternates around the
  // ideal ramp by exactly that amount.
  double m0 = 0.0, m1 = 0.0;
  for (int i = -2; i <= 3; ++i) {
    const double d = i - 0.25;
    const double w = kernel_weight(FilterKind::Lanczos3, d);
    m0 += w;
    m1 += w * d;
  }
  const double ripple = m1 / m0;  // ~ -0.0198
  CHECK(std::fabs(ripple) > 1e-3);
  const PlaneD up = upsample2x(ramp, FilterKind::Lanczos3);
  for (int y = 8; y < up.height - 8; ++y)
    for (int x = 7; x < up.width - 7; ++x) {
      const double ideal = (x - 0.5) / 2.0;
      const double expected = x % 2 == 1 ? ideal + ripple : ideal - ripple;
      CHECK(std::fabs(up.at(y, x) - expected) < 1e-9);
    }
}

TEST_CASE("bilinear reduction of a 2x2 checker row pair") {
  PlaneD p(2, 2);
  p.at(0, 0) = 0.0;
  p.at(0, 1) = 1023.0;
  p.at(1, 0) = 0.0;
  p.at(1, 1) = 1023.0;
  const PlaneD out = downsample2x(p, FilterKind::Bilinear);
  REQUIRE(out.height == 1);
  REQUIRE(out.width == 1);
  CHECK(out.at(0, 0) == doctest::Approx(511.5));
}

TEST_CASE("1x1 enlargement replicates the single source sample") {
  PlaneD p(1, 1, 7.25);
  for (FilterKind kind : kKinds) {
    const PlaneD out = upsample2x(p, kind);
    REQUIRE(out.height == 2);
    REQUIRE(out.width == 2);
    for (double v : out.data) CHECK(v == doctest::Approx(7.25));
  }
}

TEST_CASE("separable implementation matches the direct 2-D oracle") {
  for (FilterKind kind : kKinds) {
    for (std::uint64_t seed : {7u, 8u}) {
      const PlaneD plane = test::random_plane(16, 16, seed, 0.0, 1023.0);
      CHECK(max_abs_diff(downsample2x(plane, kind), direct_resample_oracle(plane, true, kind)) <
            1e-6);
      CHECK(max_abs_diff(upsample2x(plane, kind), direct_resample_oracle(plane, false, kind)) <
            1e-6);
    }
  }
}

TEST_CASE("odd dimensions cannot be reduced") {
  PlaneD p(5, 6, 1.0);
  CHECK_THROWS_AS(downsample2x(p, FilterKind::Lanczos3), DimensionError);
}

TEST_CASE("adjoints satisfy the inner product identity") {
  // <A x, y> == <x, A^T y> for random x, y
  std::mt19937_64 rng(11);
  for (FilterKind kind : kKinds) {
    const PlaneD x = test::random_plane(8, 10, rng());
    const PlaneD yd = test::random_plane(4, 5, rng());
    const PlaneD ax = downsample2x(x, kind);
    const PlaneD aty = downsample2x_adjoint(yd, 8, 10, kind);
    double lhs = 0.0, rhs = 0.0;
    for (std::size_t i = 0; i < ax.size(); ++i) lhs += ax.data[i] * yd.data[i];
    for (std::size_t i = 0; i < x.size(); ++i) rhs += x.data[i] * aty.data[i];
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));

    const PlaneD yu = test::random_plane(16, 20, rng());
    const PlaneD ux = upsample2x(x, kind);
    const PlaneD uty = upsample2x_adjoint(yu, 8, 10, kind);
    lhs = rhs = 0.0;
    for (std::size_t i = 0; i < ux.size(); ++i) lhs += ux.data[i] * yu.data[i];
    for (std::size_t i = 0; i < x.size(); ++i) rhs += x.data[i] * uty.data[i];
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
  }
}

TEST_CASE("frame resampling respects chroma geometry and quantization") {
  // constant frame stays constant through down and up
  Frame f = Frame::allocate(8, 8, 10, ChromaFormat::YCbCr420);
  for (PlaneU16* p : {&f.y, &f.cb, &f.cr})
    for (auto& v : p->data) v = 600;
  for (FilterKind kind : kKinds) {
    const Frame down = resample_frame(f, ResampleDirection::Down, kind);
    CHECK(down.width == 4);
    CHECK(down.height == 4);
    CHECK(down.cb.width == 2);
    for (PlaneU16 const* p : {&down.y, &down.cb, &down.cr})
      for (auto v : p->data) CHECK(v == 600);
    const Frame up = resample_frame(f, ResampleDirection::Up, kind);
    CHECK(up.width == 16);
    CHECK(up.cb.width == 8);
    for (auto v : up.y.data) CHECK(v == 600);
  }

  // 2x2 luma checkerboard: mean 511.5 quantizes half-up to 512
  Frame tiny = Frame::allocate(2, 2, 10, ChromaFormat::YCbCr444);
  tiny.y.at(0, 1) = 1023;
  tiny.y.at(1, 1) = 1023;
  const Frame reduced = resample_frame(tiny, ResampleDirection::Down, FilterKind::Bilinear);
  CHECK(reduced.y.at(0, 0) == 512);

  // odd chroma plane (4:2:0 at 6x6 gives 3x3 chroma) cannot be reduced
  Frame odd_chroma = Frame::allocate(6, 6, 10, ChromaFormat::YCbCr420);
  CHECK_THROWS_AS(resample_frame(odd_chroma, ResampleDirection::Down, FilterKind::Lanczos3),
                  DimensionError);
}
