#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "greenbiqa/error.hpp"
#include "greenbiqa/random.hpp"

namespace greenbiqa {

// Row-major 2D array of reals.
class Plane {
 public:
  Plane() = default;
  Plane(int rows, int cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows) * cols, fill) {
    if (rows < 0 || cols < 0) throw GeometryError("negative plane dimensions");
  }

  int rows() const noexcept { return rows_; }
  int cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(int r, int c) { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
  double operator()(int r, int c) const { return data_[static_cast<std::size_t>(r) * cols_ + c]; }

  std::vector<double>& values() noexcept { return data_; }
  const std::vector<double>& values() const noexcept { return data_; }

  Plane crop(int top, int left, int rows, int cols) const {
    if (top < 0 || left < 0 || rows < 0 || cols < 0 || top + rows > rows_ || left + cols > cols_)
      throw GeometryError("crop window outside plane bounds");
    Plane out(rows, cols);
    for (int r = 0; r < rows; ++r)
      std::copy_n(data_.begin() + static_cast<std::ptrdiff_t>(top + r) * cols_ + left, cols,
                  out.data_.begin() + static_cast<std::ptrdiff_t>(r) * cols);
    return out;
  }

  // Crops symmetrically to (rows, cols); extra pixels go to the bottom/right.
  Plane center_crop(int rows, int cols) const {
    return crop((rows_ - rows) / 2, (cols_ - cols) / 2, rows, cols);
  }

  friend bool operator==(const Plane&, const Plane&) = default;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> data_;
};

// BT.601 full-range (JPEG/JFIF) RGB <-> YUV. U and V carry a +128 offset.
namespace color {

using Matrix3 = std::array<std::array<double, 3>, 3>;

inline constexpr Matrix3 kRgbToYuv = {{
    {0.299, 0.587, 0.114},
    {-0.168735891647856, -0.331264108352144, 0.5},
    {0.5, -0.418687589158345, -0.081312410841655},
}};

constexpr Matrix3 inverse(const Matrix3& m) {
  const double a = m[0][0], b = m[0][1], c = m[0][2];
  const double d = m[1][0], e = m[1][1], f = m[1][2];
  const double g = m[2][0], h = m[2][1], i = m[2][2];
  const double det = a * (e * i - f * h) - b * (d * i - f * g) + c * (d * h - e * g);
  return {{
      {(e * i - f * h) / det, (c * h - b * i) / det, (b * f - c * e) / det},
      {(f * g - d * i) / det, (a * i - c * g) / det, (c * d - a * f) / det},
      {(d * h - e * g) / det, (b * g - a * h) / det, (a * e - b * d) / det},
  }};
}

inline constexpr Matrix3 kYuvToRgb = inverse(kRgbToYuv);

inline std::array<double, 3> rgb_to_yuv(double r, double g, double b) {
  const auto& m = kRgbToYuv;
  return {m[0][0] * r + m[0][1] * g + m[0][2] * b,
          m[1][0] * r + m[1][1] * g + m[1][2] * b + 128.0,
          m[2][0] * r + m[2][1] * g + m[2][2] * b + 128.0};
}

// Not clamped; callers clamp where the result must be a displayable color.
inline std::array<double, 3> yuv_to_rgb(double y, double u, double v) {
  const auto& m = kYuvToRgb;
  u -= 128.0;
  v -= 128.0;
  return {m[0][0] * y + m[0][1] * u + m[0][2] * v,
          m[1][0] * y + m[1][1] * u + m[1][2] * v,
          m[2][0] * y + m[2][1] * u + m[2][2] * v};
}

}  // namespace color

struct YuvPlanes {
  Plane y, u, v;

  int rows() const noexcept { return y.rows(); }
  int cols() const noexcept { return y.cols(); }
};

// Decoded image, 4:4:4, planes in [0, 255].
struct PlanarImage {
  YuvPlanes planes;
  std::string source_id;
  std::optional<double> mos;

  int height() const noexcept { return planes.rows(); }
  int width() const noexcept { return planes.cols(); }
};

struct SubImage {
  YuvPlanes planes;
  int side = 0;
  int top = 0;
  int left = 0;
  std::string parent_id;
  std::optional<double> inherited_mos;
};

// Interleaved side x side x 3 RGB cuboid, channel fastest.
struct RgbCuboid {
  int side = 0;
  std::vector<double> data;

  double operator()(int r, int c, int ch) const {
    return data[(static_cast<std::size_t>(r) * side + c) * 3 + ch];
  }
  double& operator()(int r, int c, int ch) {
    return data[(static_cast<std::size_t>(r) * side + c) * 3 + ch];
  }
};

// Builds an image from interleaved 8-bit-range RGB values.
inline PlanarImage image_from_rgb(int height, int width, const std::vector<double>& rgb,
                                  std::string source_id = {}, std::optional<double> mos = {}) {
  if (rgb.size() != static_cast<std::size_t>(height) * width * 3)
    throw GeometryError("rgb buffer size does not match dimensions");
  PlanarImage img;
  img.planes = {Plane(height, width), Plane(height, width), Plane(height, width)};
  for (int r = 0; r < height; ++r)
    for (int c = 0; c < width; ++c) {
      const std::size_t i = (static_cast<std::size_t>(r) * width + c) * 3;
      const auto yuv = color::rgb_to_yuv(rgb[i], rgb[i + 1], rgb[i + 2]);
      img.planes.y(r, c) = yuv[0];
      img.planes.u(r, c) = yuv[1];
      img.planes.v(r, c) = yuv[2];
    }
  img.source_id = std::move(source_id);
  img.mos = mos;
  return img;
}

inline RgbCuboid yuv_to_rgb(const YuvPlanes& planes) {
  if (planes.rows() != planes.cols()) throw GeometryError("rgb cuboid requires a square sub-image");
  RgbCuboid out{planes.rows(), std::vector<double>(planes.y.size() * 3)};
  for (int r = 0; r < out.side; ++r)
    for (int c = 0; c < out.side; ++c) {
      const auto rgb = color::yuv_to_rgb(planes.y(r, c), planes.u(r, c), planes.v(r, c));
      for (int ch = 0; ch < 3; ++ch) out(r, c, ch) = std::clamp(rgb[ch], 0.0, 255.0);
    }
  return out;
}

inline RgbCuboid yuv_to_rgb(const SubImage& sub) { return yuv_to_rgb(sub.planes); }

inline SubImage crop_at(const PlanarImage& img, int side, int top, int left) {
  SubImage sub;
  sub.planes = {img.planes.y.crop(top, left, side, side), img.planes.u.crop(top, left, side, side),
                img.planes.v.crop(top, left, side, side)};
  sub.side = side;
  sub.top = top;
  sub.left = left;
  sub.parent_id = img.source_id;
  sub.inherited_mos = img.mos;
  return sub;
}

struct CropOffset {
  int top = 0;
  int left = 0;
};

// `count` top-left offsets of side x side crops drawn uniformly over all valid
// positions of a height x width image.
inline std::vector<CropOffset> crop_offsets(int height, int width, int count, int side, std::uint64_t seed) {
  if (count <= 0) throw ConfigError("crop count must be positive");
  if (side <= 0 || side > height || side > width)
    throw GeometryError("crop side " + std::to_string(side) + " exceeds image " + std::to_string(height) + "x" +
                        std::to_string(width));
  Rng rng(seed);
  const auto span_r = static_cast<std::uint64_t>(height - side + 1);
  const auto span_c = static_cast<std::uint64_t>(width - side + 1);
  std::vector<CropOffset> out(static_cast<std::size_t>(count));
  for (auto& o : out) {
    o.top = static_cast<int>(rng.below(span_r));
    o.left = static_cast<int>(rng.below(span_c));
  }
  return out;
}

// Possibly overlapping random crops; see crop_offsets().
inline std::vector<SubImage> crop_random(const PlanarImage& img, int count, int side,
                                         std::uint64_t seed) {
  std::vector<SubImage> subs;
  for (const auto& o : crop_offsets(img.height(), img.width(), count, side, seed))
    subs.push_back(crop_at(img, side, o.top, o.left));
  return subs;
}

// Interleaved 8-bit RGB raster; the compact form images are kept in while
// sub-images are cut from them.
struct Rgb8Image {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> data;
  std::string source_id;
};

// Same values as crop_at(image_from_rgb(img), ...) without converting the
// whole image.
inline SubImage crop_at(const Rgb8Image& img, int side, int top, int left) {
  if (top < 0 || left < 0 || side <= 0 || top + side > img.height || left + side > img.width)
    throw GeometryError("crop window outside image bounds");
  SubImage sub;
  sub.planes = {Plane(side, side), Plane(side, side), Plane(side, side)};
  for (int r = 0; r < side; ++r)
    for (int c = 0; c < side; ++c) {
      const std::size_t i = (static_cast<std::size_t>(top + r) * img.width + left + c) * 3;
      const auto yuv = color::rgb_to_yuv(img.data[i], img.data[i + 1], img.data[i + 2]);
      sub.planes.y(r, c) = yuv[0];
      sub.planes.u(r, c) = yuv[1];
      sub.planes.v(r, c) = yuv[2];
    }
  sub.side = side;
  sub.top = top;
  sub.left = left;
  sub.parent_id = img.source_id;
  return sub;
}

}  // namespace greenbiqa
