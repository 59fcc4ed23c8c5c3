#include <cmath>

#include <gtest/gtest.h>

#include "test_support.hpp"

using namespace greenbiqa;
using testsupport::scratch;

namespace {

PlanarImage decode_solid(const std::filesystem::path& dir, int h, int w, double value) {
  const auto path = dir / "solid.png";
  encode_rgb(path, h, w, std::vector<double>(static_cast<std::size_t>(h) * w * 3, value));
  return decode(path);
}

void expect_all(const Plane& p, double v) {
  for (double x : p.values()) EXPECT_NEAR(x, v, 1e-9);
}

PlanarImage noise_image(int h, int w, std::uint64_t seed, std::optional<double> mos = {}) {
  Rng rng(seed);
  std::vector<double> rgb(static_cast<std::size_t>(h) * w * 3);
  for (double& v : rgb) v = static_cast<double>(rng.below(256));
  return image_from_rgb(h, w, rgb, "noise", mos);
}

}  // namespace

TEST(Decode, WhiteImageHasMaxLumaNeutralChroma) {
  const auto img = decode_solid(scratch("white"), 2, 2, 255);
  EXPECT_EQ(img.height(), 2);
  EXPECT_EQ(img.width(), 2);
  expect_all(img.planes.y, 255);
  expect_all(img.planes.u, 128);
  expect_all(img.planes.v, 128);
}

TEST(Decode, BlackImage) {
  const auto img = decode_solid(scratch("black"), 2, 2, 0);
  expect_all(img.planes.y, 0);
  expect_all(img.planes.u, 128);
  expect_all(img.planes.v, 128);
}

TEST(Decode, MidGrayPixel) {
  const auto img = decode_solid(scratch("gray"), 1, 1, 128);
  expect_all(img.planes.y, 128);
  expect_all(img.planes.u, 128);
  expect_all(img.planes.v, 128);
}

TEST(Decode, ChannelOrderIsRgb) {
  const auto dir = scratch("order");
  encode_rgb(dir / "red.png", 1, 1, {255, 0, 0});
  const auto raw = decode_rgb8(dir / "red.png");
  EXPECT_EQ(raw.data, (std::vector<std::uint8_t>{255, 0, 0}));
  const auto img = decode(dir / "red.png");
  EXPECT_NEAR(img.planes.y(0, 0), 0.299 * 255, 1e-9);
  EXPECT_NEAR(img.planes.v(0, 0), 0.5 * 255 + 128, 1e-9);
}

TEST(Decode, MissingFileIsDecodeError) {
  EXPECT_THROW(decode(scratch("missing") / "nope.png"), DecodeError);
}

TEST(Decode, GarbageFileIsDecodeError) {
  const auto p = scratch("garbage") / "bad.png";
  std::ofstream(p) << "not an image";
  EXPECT_THROW(decode(p), DecodeError);
}

TEST(Decode, SixteenBitIsUnsupported) {
  const auto p = scratch("deep") / "deep.png";
  cv::Mat m(4, 4, CV_16UC3, cv::Scalar(1000, 2000, 3000));
  ASSERT_TRUE(cv::imwrite(p.string(), m));
  EXPECT_THROW(decode(p), UnsupportedFormatError);
}

TEST(Color, NeutralGrayIsFixedPoint) {
  const YuvPlanes planes{Plane(4, 4, 128), Plane(4, 4, 128), Plane(4, 4, 128)};
  const auto rgb = yuv_to_rgb(planes);
  for (double v : rgb.data) EXPECT_NEAR(v, 128, 1e-9);
}

TEST(Color, WhiteMapsToWhite) {
  const YuvPlanes planes{Plane(2, 2, 255), Plane(2, 2, 128), Plane(2, 2, 128)};
  for (double v : yuv_to_rgb(planes).data) EXPECT_NEAR(v, 255, 1e-9);
}

TEST(Color, MatrixTimesInverseIsIdentity) {
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double s = 0;
      for (int k = 0; k < 3; ++k) s += color::kRgbToYuv[i][k] * color::kYuvToRgb[k][j];
      EXPECT_NEAR(s, i == j ? 1.0 : 0.0, 1e-12);
    }
}

TEST(Color, RoundTripOfRandomPixelsWithinTwoLevels) {
  Rng rng(11);
  double worst_exact = 0, worst_quantized = 0;
  for (int i = 0; i < 10000; ++i) {
    const double r = static_cast<double>(rng.below(256)), g = static_cast<double>(rng.below(256)),
                 b = static_cast<double>(rng.below(256));
    const auto yuv = color::rgb_to_yuv(r, g, b);
    const auto back = color::yuv_to_rgb(yuv[0], yuv[1], yuv[2]);
    // 8-bit storage of the YUV planes, then a clamped conversion back.
    const auto q = color::yuv_to_rgb(std::clamp(std::round(yuv[0]), 0.0, 255.0),
                                     std::clamp(std::round(yuv[1]), 0.0, 255.0),
                                     std::clamp(std::round(yuv[2]), 0.0, 255.0));
    const double in[3] = {r, g, b};
    for (int c = 0; c < 3; ++c) {
      worst_exact = std::max(worst_exact, std::abs(back[c] - in[c]));
      worst_quantized = std::max(worst_quantized, std::abs(std::clamp(q[c], 0.0, 255.0) - in[c]));
    }
  }
  EXPECT_LT(worst_exact, 1e-9);
  EXPECT_LE(worst_quantized, 2.0);
}

TEST(Color, CuboidIsClamped) {
  const YuvPlanes planes{Plane(2, 2, 255), Plane(2, 2, 0), Plane(2, 2, 255)};
  for (double v : yuv_to_rgb(planes).data) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 255.0);
  }
}

TEST(Crop, FiveCropsOfLandscapeImage) {
  const auto img = noise_image(384, 512, 1, 3.5);
  const auto subs = crop_random(img, 5, 256, 42);
  ASSERT_EQ(subs.size(), 5u);
  for (const auto& s : subs) {
    EXPECT_EQ(s.side, 256);
    EXPECT_EQ(s.planes.rows(), 256);
    EXPECT_EQ(s.planes.cols(), 256);
    EXPECT_GE(s.top, 0);
    EXPECT_GE(s.left, 0);
    EXPECT_LE(s.top + 256, 384);
    EXPECT_LE(s.left + 256, 512);
    EXPECT_EQ(s.planes.y, img.planes.y.crop(s.top, s.left, 256, 256));
  }
}

TEST(Crop, ExactSizeImageGivesOriginOffsets) {
  const auto img = noise_image(64, 64, 2);
  const auto subs = crop_random(img, 3, 64, 9);
  ASSERT_EQ(subs.size(), 3u);
  for (const auto& s : subs) {
    EXPECT_EQ(s.top, 0);
    EXPECT_EQ(s.left, 0);
    EXPECT_EQ(s.planes.y, img.planes.y);
  }
}

TEST(Crop, SameSeedSameSubImages) {
  const auto img = noise_image(100, 120, 3);
  const auto a = crop_random(img, 10, 32, 77), b = crop_random(img, 10, 32, 77);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].top, b[i].top);
    EXPECT_EQ(a[i].left, b[i].left);
    EXPECT_EQ(a[i].planes.y, b[i].planes.y);
    EXPECT_EQ(a[i].planes.u, b[i].planes.u);
    EXPECT_EQ(a[i].planes.v, b[i].planes.v);
  }
  const auto c = crop_random(img, 10, 32, 78);
  bool differs = false;
  for (std::size_t i = 0; i < a.size(); ++i) differs |= a[i].top != c[i].top || a[i].left != c[i].left;
  EXPECT_TRUE(differs);
}

TEST(Crop, SubImagesInheritParentMos) {
  const auto img = noise_image(40, 40, 4, 2.75);
  for (const auto& s : crop_random(img, 6, 16, 5)) {
    ASSERT_TRUE(s.inherited_mos.has_value());
    EXPECT_EQ(*s.inherited_mos, 2.75);
    EXPECT_EQ(s.parent_id, "noise");
  }
}

TEST(Crop, OffsetsCoverTheValidRange) {
  const auto offs = crop_offsets(10, 12, 5000, 8, 1);
  int max_top = 0, max_left = 0, min_top = 99, min_left = 99;
  for (const auto& o : offs) {
    max_top = std::max(max_top, o.top);
    max_left = std::max(max_left, o.left);
    min_top = std::min(min_top, o.top);
    min_left = std::min(min_left, o.left);
  }
  EXPECT_EQ(min_top, 0);
  EXPECT_EQ(max_top, 2);
  EXPECT_EQ(min_left, 0);
  EXPECT_EQ(max_left, 4);
}

TEST(Crop, OversizedSideIsGeometryError) {
  const auto img = noise_image(20, 30, 5);
  EXPECT_THROW(crop_random(img, 2, 21, 0), GeometryError);
  EXPECT_THROW(crop_random(img, 2, 31, 0), GeometryError);
  EXPECT_THROW(crop_random(img, 0, 8, 0), ConfigError);
}

TEST(Crop, EightBitCropMatchesPlanarCrop) {
  Rng rng(6);
  Rgb8Image raw{24, 30, std::vector<std::uint8_t>(24 * 30 * 3), "raw"};
  for (auto& b : raw.data) b = static_cast<std::uint8_t>(rng.below(256));
  const auto planar = to_planar(raw);
  const auto a = crop_at(raw, 16, 3, 7), b = crop_at(planar, 16, 3, 7);
  EXPECT_EQ(a.planes.y, b.planes.y);
  EXPECT_EQ(a.planes.u, b.planes.u);
  EXPECT_EQ(a.planes.v, b.planes.v);
  EXPECT_THROW(crop_at(raw, 16, 10, 0), GeometryError);
}
