#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "greenbiqa/error.hpp"
#include "greenbiqa/image.hpp"

namespace greenbiqa {

// Decodes an 8-bit PNG/JPEG/BMP file. Grayscale input is replicated to three
// channels and an alpha channel is dropped.
inline Rgb8Image decode_rgb8(const std::filesystem::path& path) {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec))
    throw DecodeError("cannot read image file: " + path.string());
  cv::Mat raw = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
  if (raw.empty()) throw DecodeError("cannot decode image file: " + path.string());
  if (raw.depth() != CV_8U)
    throw UnsupportedFormatError("only 8-bit images are supported: " + path.string());
  const int ch = raw.channels();
  if (ch != 1 && ch != 3 && ch != 4)
    throw UnsupportedFormatError("unsupported channel count " + std::to_string(ch));

  Rgb8Image img{raw.rows, raw.cols, std::vector<std::uint8_t>(static_cast<std::size_t>(raw.rows) * raw.cols * 3),
                path.filename().string()};
  for (int r = 0; r < raw.rows; ++r) {
    const auto* row = raw.ptr<unsigned char>(r);
    for (int c = 0; c < raw.cols; ++c) {
      std::uint8_t* o = img.data.data() + (static_cast<std::size_t>(r) * raw.cols + c) * 3;
      if (ch == 1) {
        o[0] = o[1] = o[2] = row[c];
      } else {
        // OpenCV stores BGR(A).
        const unsigned char* px = row + static_cast<std::ptrdiff_t>(c) * ch;
        o[0] = px[2];
        o[1] = px[1];
        o[2] = px[0];
      }
    }
  }
  return img;
}

inline PlanarImage to_planar(const Rgb8Image& img, std::optional<double> mos = {}) {
  return image_from_rgb(img.height, img.width, std::vector<double>(img.data.begin(), img.data.end()), img.source_id,
                        mos);
}

inline PlanarImage decode(const std::filesystem::path& path, std::optional<double> mos = {}) {
  return to_planar(decode_rgb8(path), mos);
}

// Writes interleaved RGB values (rounded and clamped to 8 bits). The format is
// chosen from the extension.
inline void encode_rgb(const std::filesystem::path& path, int height, int width,
                       const std::vector<double>& rgb) {
  if (rgb.size() != static_cast<std::size_t>(height) * width * 3)
    throw GeometryError("rgb buffer size does not match dimensions");
  cv::Mat out(height, width, CV_8UC3);
  for (int r = 0; r < height; ++r) {
    auto* row = out.ptr<unsigned char>(r);
    for (int c = 0; c < width; ++c)
      for (int k = 0; k < 3; ++k) {
        const double v = rgb[(static_cast<std::size_t>(r) * width + c) * 3 + (2 - k)];
        row[c * 3 + k] = cv::saturate_cast<unsigned char>(v);
      }
  }
  bool ok = false;
  try {
    ok = cv::imwrite(path.string(), out);
  } catch (const cv::Exception& e) {
    throw IoError("cannot write image " + path.string() + ": " + e.what());
  }
  if (!ok) throw IoError("cannot write image " + path.string());
}

}  // namespace greenbiqa
