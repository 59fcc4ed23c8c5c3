#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "greenbiqa/error.hpp"
#include "greenbiqa/image.hpp"
#include "greenbiqa/image_io.hpp"
#include "greenbiqa/random.hpp"
#include "greenbiqa/transforms.hpp"

namespace greenbiqa {

enum class Scenario : std::uint8_t { synthetic = 0, authentic = 1 };

inline const char* to_string(Scenario s) { return s == Scenario::synthetic ? "synthetic" : "authentic"; }

inline Scenario parse_scenario(const std::string& s) {
  if (s == "synthetic") return Scenario::synthetic;
  if (s == "authentic") return Scenario::authentic;
  throw ConfigError("unknown scenario '" + s + "' (expected synthetic or authentic)");
}

struct DatasetRecord {
  std::filesystem::path image_path;
  double mos = 0.0;
  std::optional<std::string> reference_id;
  std::optional<int> distortion_type;
  std::optional<int> distortion_level;
};

using Dataset = std::vector<DatasetRecord>;

namespace detail {

inline std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      cells.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  cells.push_back(trim(cur));
  return cells;
}

inline std::string format_real(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace detail

// CSV with header row; columns image,mos required, reference,dist_type,
// dist_level optional (empty cells for absent values). Image paths are
// resolved against `images_dir`. Authentic records drop reference and type.
inline Dataset load_manifest(const std::filesystem::path& csv_path, const std::filesystem::path& images_dir,
                             Scenario scenario) {
  std::ifstream in(csv_path);
  if (!in) throw ManifestError("cannot open manifest " + csv_path.string());
  std::string line;
  int line_no = 0;
  std::map<std::string, std::size_t> col;
  while (std::getline(in, line)) {
    ++line_no;
    if (!detail::trim(line).empty()) break;
  }
  if (detail::trim(line).empty()) throw ManifestError("manifest " + csv_path.string() + " is empty");
  if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line = line.substr(3);  // UTF-8 BOM
  const auto header = detail::split_csv_line(line);
  for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
  if (!col.count("image") || !col.count("mos"))
    throw ParseError(csv_path.string() + ":" + std::to_string(line_no) + ": header must contain image,mos");

  auto cell = [&](const std::vector<std::string>& cells, const char* name) -> std::string {
    const auto it = col.find(name);
    if (it == col.end() || it->second >= cells.size()) return {};
    return cells[it->second];
  };
  auto parse_int = [&](const std::string& s, const char* what) {
    try {
      std::size_t used = 0;
      const int v = std::stoi(s, &used);
      if (used != s.size()) throw std::invalid_argument("trailing characters");
      return v;
    } catch (const std::exception&) {
      throw ParseError(csv_path.string() + ":" + std::to_string(line_no) + ": bad " + what + " '" + s + "'");
    }
  };

  Dataset records;
  std::vector<std::string> missing;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto cells = detail::split_csv_line(line);
    DatasetRecord r;
    const auto image = cell(cells, "image");
    if (image.empty()) throw ParseError(csv_path.string() + ":" + std::to_string(line_no) + ": empty image cell");
    r.image_path = images_dir / image;
    const auto mos = cell(cells, "mos");
    try {
      std::size_t used = 0;
      r.mos = std::stod(mos, &used);
      if (used != mos.size() || !std::isfinite(r.mos)) throw std::invalid_argument("bad");
    } catch (const std::exception&) {
      throw ParseError(csv_path.string() + ":" + std::to_string(line_no) + ": bad mos '" + mos + "'");
    }
    if (scenario == Scenario::synthetic) {
      const auto ref = cell(cells, "reference"), type = cell(cells, "dist_type");
      if (ref.empty() || type.empty())
        throw ParseError(csv_path.string() + ":" + std::to_string(line_no) +
                         ": synthetic records need reference and dist_type");
      r.reference_id = ref;
      r.distortion_type = parse_int(type, "dist_type");
      if (const auto lvl = cell(cells, "dist_level"); !lvl.empty()) r.distortion_level = parse_int(lvl, "dist_level");
    }
    std::error_code ec;
    if (!std::filesystem::is_regular_file(r.image_path, ec)) missing.push_back(r.image_path.string());
    records.push_back(std::move(r));
  }
  if (records.empty()) throw ManifestError("manifest " + csv_path.string() + " has no records");
  if (!missing.empty()) {
    std::string msg = "manifest " + csv_path.string() + ": " + std::to_string(missing.size()) + " missing image file(s):";
    for (std::size_t i = 0; i < missing.size() && i < 10; ++i) msg += " " + missing[i];
    if (missing.size() > 10) msg += " ...";
    throw ManifestError(msg);
  }
  return records;
}

// Paths are written relative to `images_dir` when possible.
inline void write_manifest(const std::filesystem::path& csv_path, const Dataset& records,
                           const std::filesystem::path& images_dir) {
  std::ofstream out(csv_path);
  if (!out) throw IoError("cannot write manifest " + csv_path.string());
  out << "image,mos,reference,dist_type,dist_level\n";
  for (const auto& r : records) {
    auto rel = r.image_path.lexically_relative(images_dir);
    if (rel.empty() || *rel.begin() == "..") rel = r.image_path;
    out << rel.generic_string() << ',' << detail::format_real(r.mos) << ',' << r.reference_id.value_or("") << ','
        << (r.distortion_type ? std::to_string(*r.distortion_type) : "") << ','
        << (r.distortion_level ? std::to_string(*r.distortion_level) : "") << '\n';
  }
  if (!out) throw IoError("failed writing manifest " + csv_path.string());
}

enum class SplitPolicy : std::uint8_t { by_image = 0, by_reference = 1 };

struct SplitPlan {
  std::vector<std::size_t> train, val, test;  // record indices, ascending
  std::uint64_t seed = 0;
  SplitPolicy policy = SplitPolicy::by_image;
};

struct SplitRatios {
  double test = 0.2;
  double val = 0.1;  // fraction of the non-test part
};

// Units (images or references) are shuffled; test takes floor(n * test) units,
// validation floor(rest * val) of the remainder, train keeps the rest. A
// positive ratio always receives at least one unit.
inline SplitPlan split(const Dataset& records, SplitRatios ratios, SplitPolicy policy, std::uint64_t seed) {
  if (ratios.test < 0 || ratios.test >= 1 || ratios.val < 0 || ratios.val >= 1)
    throw ConfigError("split ratios must lie in [0, 1)");
  std::vector<std::string> units;
  std::vector<std::size_t> unit_of(records.size());
  if (policy == SplitPolicy::by_reference) {
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < records.size(); ++i) {
      if (!records[i].reference_id) throw SplitError("by_reference split: record without reference id");
      const auto [it, fresh] = index.emplace(*records[i].reference_id, units.size());
      if (fresh) units.push_back(*records[i].reference_id);
      unit_of[i] = it->second;
    }
  } else {
    for (std::size_t i = 0; i < records.size(); ++i) {
      units.push_back(std::to_string(i));
      unit_of[i] = i;
    }
  }
  const std::size_t n = units.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(order));

  auto portion = [](std::size_t total, double ratio) {
    if (ratio <= 0.0) return std::size_t{0};
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(static_cast<double>(total) * ratio + 1e-9)));
  };
  const std::size_t n_test = portion(n, ratios.test);
  const std::size_t n_val = n_test < n ? portion(n - n_test, ratios.val) : 0;
  if (n_test + n_val >= n || (ratios.val > 0 && n_val == 0))
    throw SplitError("split: " + std::to_string(n) + " unit(s) cannot populate train/val/test");

  std::vector<int> part(n, 0);  // 0 train, 1 val, 2 test
  for (std::size_t i = 0; i < n_test; ++i) part[order[i]] = 2;
  for (std::size_t i = n_test; i < n_test + n_val; ++i) part[order[i]] = 1;
  SplitPlan plan;
  plan.seed = seed;
  plan.policy = policy;
  for (std::size_t i = 0; i < records.size(); ++i) {
    switch (part[unit_of[i]]) {
      case 0: plan.train.push_back(i); break;
      case 1: plan.val.push_back(i); break;
      default: plan.test.push_back(i); break;
    }
  }
  return plan;
}

inline Dataset subset(const Dataset& records, const std::vector<std::size_t>& indices) {
  Dataset out;
  out.reserve(indices.size());
  for (auto i : indices) out.push_back(records.at(i));
  return out;
}

// Interleaved RGB raster with values in [0, 255].
struct RgbImage {
  int height = 0;
  int width = 0;
  std::vector<double> data;

  double& at(int r, int c, int ch) { return data[(static_cast<std::size_t>(r) * width + c) * 3 + ch]; }
  double at(int r, int c, int ch) const { return data[(static_cast<std::size_t>(r) * width + c) * 3 + ch]; }
};

namespace distort {

inline RgbImage gaussian_blur(const RgbImage& img, double sigma) {
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) sum += (k[static_cast<std::size_t>(i + radius)] = std::exp(-0.5 * i * i / (sigma * sigma)));
  for (double& v : k) v /= sum;
  RgbImage tmp = img, out = img;
  for (int r = 0; r < img.height; ++r)
    for (int c = 0; c < img.width; ++c)
      for (int ch = 0; ch < 3; ++ch) {
        double s = 0.0;
        for (int i = -radius; i <= radius; ++i)
          s += k[static_cast<std::size_t>(i + radius)] * img.at(r, std::clamp(c + i, 0, img.width - 1), ch);
        tmp.at(r, c, ch) = s;
      }
  for (int r = 0; r < img.height; ++r)
    for (int c = 0; c < img.width; ++c)
      for (int ch = 0; ch < 3; ++ch) {
        double s = 0.0;
        for (int i = -radius; i <= radius; ++i)
          s += k[static_cast<std::size_t>(i + radius)] * tmp.at(std::clamp(r + i, 0, img.height - 1), c, ch);
        out.at(r, c, ch) = s;
      }
  return out;
}

inline RgbImage gaussian_noise(const RgbImage& img, double sigma, std::uint64_t seed) {
  Rng rng(seed);
  RgbImage out = img;
  for (double& v : out.data) v = std::clamp(v + sigma * rng.normal(), 0.0, 255.0);
  return out;
}

// Scales deviations from the global mean intensity.
inline RgbImage contrast(const RgbImage& img, double factor) {
  double mean = 0.0;
  for (double v : img.data) mean += v;
  mean /= static_cast<double>(img.data.size());
  RgbImage out = img;
  for (double& v : out.data) v = std::clamp(mean + factor * (v - mean), 0.0, 255.0);
  return out;
}

// Baseline JPEG quantization of 8x8 DCT blocks in YCbCr with the standard
// tables scaled by the IJG quality formula (no entropy coding, no chroma
// subsampling). Partial edge blocks are left untouched.
inline RgbImage jpeg_quantize(const RgbImage& img, int quality) {
  static constexpr std::array<int, 64> kLuma = {
      16, 11, 10, 16, 24,  40,  51,  61,  12, 12, 14, 19, 26,  58,  60,  55,  14, 13, 16, 24, 40,  57,
      69, 56, 14, 17, 22, 29,  51,  87,  80, 62, 18, 22, 37, 56, 68,  109, 103, 77, 24, 35, 55, 64, 81,
      104, 113, 92, 49, 64, 78, 87, 103, 121, 120, 101, 72, 92, 95, 98, 112, 100, 103, 99};
  static constexpr std::array<int, 64> kChroma = {
      17, 18, 24, 47, 99, 99, 99, 99, 18, 21, 26, 66, 99, 99, 99, 99, 24, 26, 56, 99, 99, 99,
      99, 99, 47, 66, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99,
      99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99};
  quality = std::clamp(quality, 1, 100);
  const int scale = quality < 50 ? 5000 / quality : 200 - 2 * quality;
  auto table = [scale](const std::array<int, 64>& base) {
    std::array<double, 64> q{};
    for (int i = 0; i < 64; ++i) q[i] = std::clamp((base[i] * scale + 50) / 100, 1, 255);
    return q;
  };
  const auto ql = table(kLuma), qc = table(kChroma);

  const int h = img.height, w = img.width;
  std::array<std::vector<double>, 3> planes;
  for (auto& p : planes) p.resize(static_cast<std::size_t>(h) * w);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      const auto yuv = color::rgb_to_yuv(img.at(r, c, 0), img.at(r, c, 1), img.at(r, c, 2));
      for (int k = 0; k < 3; ++k) planes[k][static_cast<std::size_t>(r) * w + c] = yuv[k] - 128.0;
    }
  std::array<double, 64> block{};
  for (int k = 0; k < 3; ++k) {
    const auto& q = k == 0 ? ql : qc;
    for (int br = 0; br + 8 <= h; br += 8)
      for (int bc = 0; bc + 8 <= w; bc += 8) {
        double* origin = planes[k].data() + static_cast<std::size_t>(br) * w + bc;
        dct_8x8(origin, static_cast<std::size_t>(w), block);
        for (int i = 0; i < 64; ++i) block[i] = std::round(block[i] / q[i]) * q[i];
        idct_8x8(block, origin, static_cast<std::size_t>(w));
      }
  }
  RgbImage out = img;
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      const std::size_t i = static_cast<std::size_t>(r) * w + c;
      const auto rgb = color::yuv_to_rgb(planes[0][i] + 128.0, planes[1][i] + 128.0, planes[2][i] + 128.0);
      for (int ch = 0; ch < 3; ++ch) out.at(r, c, ch) = std::clamp(rgb[ch], 0.0, 255.0);
    }
  return out;
}

}  // namespace distort

// Procedural "pristine" image: smooth color gradient, hard-edged shapes, and
// oriented texture, rescaled to a common luminance spread.
inline RgbImage make_pristine_image(int side, std::uint64_t seed) {
  Rng rng(seed);
  RgbImage img{side, side, std::vector<double>(static_cast<std::size_t>(side) * side * 3)};
  std::array<std::array<double, 3>, 4> corner{};
  for (auto& c : corner)
    for (double& v : c) v = 40.0 + 175.0 * rng.uniform();
  for (int r = 0; r < side; ++r)
    for (int c = 0; c < side; ++c) {
      const double a = static_cast<double>(r) / (side - 1), b = static_cast<double>(c) / (side - 1);
      for (int ch = 0; ch < 3; ++ch)
        img.at(r, c, ch) = (1 - a) * (1 - b) * corner[0][ch] + (1 - a) * b * corner[1][ch] +
                           a * (1 - b) * corner[2][ch] + a * b * corner[3][ch];
    }
  const int shapes = 10 + static_cast<int>(rng.below(8));
  for (int s = 0; s < shapes; ++s) {
    const double cy = rng.uniform() * side, cx = rng.uniform() * side;
    const double ry = 8 + rng.uniform() * side / 4.0, rx = 8 + rng.uniform() * side / 4.0;
    const bool ellipse = rng.below(2) == 0;
    std::array<double, 3> color{};
    for (double& v : color) v = 255.0 * rng.uniform();
    for (int r = 0; r < side; ++r)
      for (int c = 0; c < side; ++c) {
        const double dy = (r - cy) / ry, dx = (c - cx) / rx;
        const bool inside = ellipse ? dy * dy + dx * dx <= 1.0 : std::abs(dy) <= 1.0 && std::abs(dx) <= 1.0;
        if (inside)
          for (int ch = 0; ch < 3; ++ch) img.at(r, c, ch) = color[ch];
      }
  }
  for (int t = 0; t < 4; ++t) {
    const double theta = rng.uniform() * std::numbers::pi;
    const double freq = 0.05 + 0.4 * rng.uniform();
    const double amp = 6.0 + 10.0 * rng.uniform();
    const double phase = rng.uniform() * 2 * std::numbers::pi;
    for (int r = 0; r < side; ++r)
      for (int c = 0; c < side; ++c) {
        const double v = amp * std::sin(freq * (c * std::cos(theta) + r * std::sin(theta)) + phase);
        for (int ch = 0; ch < 3; ++ch) img.at(r, c, ch) += v;
      }
  }
  double mean = 0.0;
  for (double v : img.data) mean += v;
  mean /= static_cast<double>(img.data.size());
  double var = 0.0;
  for (double v : img.data) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / static_cast<double>(img.data.size()));
  const double gain = sd > 0 ? 55.0 / sd : 1.0;
  for (double& v : img.data) v = std::clamp(128.0 + gain * (v - mean), 0.0, 255.0);
  return img;
}

inline RgbImage load_rgb(const std::filesystem::path& path) {
  const auto raw = decode_rgb8(path);
  return {raw.height, raw.width, std::vector<double>(raw.data.begin(), raw.data.end())};
}

inline constexpr std::array<double, 4> kMiniBlurSigma = {1, 2, 4, 8};
inline constexpr std::array<double, 4> kMiniNoiseSigma = {5, 15, 30, 50};
inline constexpr std::array<double, 4> kMiniContrast = {0.8, 0.6, 0.4, 0.2};
inline constexpr std::array<int, 4> kMiniJpegQuality = {80, 50, 25, 10};

// Distortion types of the mini-dataset.
enum MiniDistortion : int { kMiniBlur = 1, kMiniNoise = 2, kMiniContrastType = 3, kMiniJpeg = 4 };

inline RgbImage apply_mini_distortion(const RgbImage& img, int type, int level, std::uint64_t seed) {
  const auto i = static_cast<std::size_t>(level - 1);
  switch (type) {
    case kMiniBlur: return distort::gaussian_blur(img, kMiniBlurSigma.at(i));
    case kMiniNoise: return distort::gaussian_noise(img, kMiniNoiseSigma.at(i), seed);
    case kMiniContrastType: return distort::contrast(img, kMiniContrast.at(i));
    case kMiniJpeg: return distort::jpeg_quantize(img, kMiniJpegQuality.at(i));
    default: throw ConfigError("unknown mini-dataset distortion type " + std::to_string(type));
  }
}

// Writes 4 types x 4 levels of every seed image as PNG plus manifest.csv;
// pseudo-MOS = 5 - level. Returns the manifest path.
inline std::filesystem::path synth_minidataset(const std::vector<RgbImage>& seeds, const std::filesystem::path& out_dir,
                                               std::uint64_t seed) {
  if (seeds.size() < 8) throw ConfigError("mini-dataset needs at least 8 seed images");
  for (const auto& s : seeds)
    if (s.height < 256 || s.width < 256) throw GeometryError("mini-dataset seed images must be at least 256x256");
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec || !std::filesystem::is_directory(out_dir)) throw IoError("cannot create output directory " + out_dir.string());
  Dataset records;
  for (std::size_t s = 0; s < seeds.size(); ++s) {
    char ref[32];
    std::snprintf(ref, sizeof ref, "ref%02zu", s);
    for (int type = 1; type <= 4; ++type)
      for (int level = 1; level <= 4; ++level) {
        const auto img = apply_mini_distortion(seeds[s], type, level,
                                               mix_seed(seed, s * 16 + static_cast<std::size_t>((type - 1) * 4 + level)));
        char name[64];
        std::snprintf(name, sizeof name, "%s_t%d_l%d.png", ref, type, level);
        encode_rgb(out_dir / name, img.height, img.width, img.data);
        records.push_back({out_dir / name, 5.0 - level, std::string(ref), type, level});
      }
  }
  const auto manifest = out_dir / "manifest.csv";
  write_manifest(manifest, records, out_dir);
  return manifest;
}

inline std::vector<RgbImage> make_pristine_seeds(int count, int side, std::uint64_t seed) {
  std::vector<RgbImage> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) out.push_back(make_pristine_image(side, mix_seed(seed, static_cast<std::uint64_t>(i))));
  return out;
}

}  // namespace greenbiqa
