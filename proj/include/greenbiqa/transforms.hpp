#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "greenbiqa/error.hpp"
#include "greenbiqa/image.hpp"

namespace greenbiqa {

// Ordered stack of equally sized 2D maps.
struct ChannelMaps {
  std::vector<Plane> channels;

  std::size_t channel_count() const noexcept { return channels.size(); }
  int rows() const noexcept { return channels.empty() ? 0 : channels.front().rows(); }
  int cols() const noexcept { return channels.empty() ? 0 : channels.front().cols(); }
};

namespace detail {

struct DctTables {
  // basis[k][n] = a(k) cos((2n+1) k pi / 16)
  std::array<std::array<double, 8>, 8> basis{};
  // zigzag[i] = row * 8 + col of the i-th coefficient in zigzag scan order.
  std::array<int, 64> zigzag{};

  DctTables() {
    for (int k = 0; k < 8; ++k) {
      const double a = k == 0 ? std::sqrt(1.0 / 8.0) : std::sqrt(2.0 / 8.0);
      for (int n = 0; n < 8; ++n)
        basis[k][n] = a * std::cos((2 * n + 1) * k * std::numbers::pi / 16.0);
    }
    int i = 0;
    for (int s = 0; s < 15; ++s) {
      const int lo = std::max(0, s - 7), hi = std::min(s, 7);
      if (s % 2 == 1) {
        for (int r = lo; r <= hi; ++r) zigzag[i++] = r * 8 + (s - r);
      } else {
        for (int r = hi; r >= lo; --r) zigzag[i++] = r * 8 + (s - r);
      }
    }
  }
};

inline const DctTables& dct_tables() {
  static const DctTables tables;
  return tables;
}

inline void require_divisible(int rows, int cols, int k, const char* what) {
  if (k <= 0 || rows % k != 0 || cols % k != 0)
    throw GeometryError(std::string(what) + ": " + std::to_string(rows) + "x" +
                        std::to_string(cols) + " not divisible by " + std::to_string(k));
}

}  // namespace detail

// Orthonormal type-II DCT of one 8x8 block, `in` and `out` row-major.
inline void dct_8x8(const double* in, std::size_t in_stride, std::array<double, 64>& out) {
  const auto& b = detail::dct_tables().basis;
  std::array<double, 64> tmp{};
  for (int r = 0; r < 8; ++r)
    for (int v = 0; v < 8; ++v) {
      double s = 0.0;
      for (int n = 0; n < 8; ++n) s += b[v][n] * in[r * in_stride + n];
      tmp[r * 8 + v] = s;
    }
  for (int u = 0; u < 8; ++u)
    for (int v = 0; v < 8; ++v) {
      double s = 0.0;
      for (int n = 0; n < 8; ++n) s += b[u][n] * tmp[n * 8 + v];
      out[u * 8 + v] = s;
    }
}

// Inverse of dct_8x8: `coef` row-major (u, v), `out` row-major pixels.
inline void idct_8x8(const std::array<double, 64>& coef, double* out, std::size_t out_stride) {
  const auto& b = detail::dct_tables().basis;
  std::array<double, 64> tmp{};
  for (int n = 0; n < 8; ++n)
    for (int v = 0; v < 8; ++v) {
      double s = 0.0;
      for (int u = 0; u < 8; ++u) s += b[u][n] * coef[u * 8 + v];
      tmp[n * 8 + v] = s;
    }
  for (int r = 0; r < 8; ++r)
    for (int c = 0; c < 8; ++c) {
      double s = 0.0;
      for (int v = 0; v < 8; ++v) s += b[v][c] * tmp[r * 8 + v];
      out[r * out_stride + c] = s;
    }
}

// Splits the plane into 8x8 blocks and routes coefficient (u, v) of every block
// to the channel at its zigzag index: channel 0 is DC, 1..63 are AC1..AC63.
inline ChannelMaps block_dct_8x8(const Plane& plane) {
  detail::require_divisible(plane.rows(), plane.cols(), 8, "block_dct_8x8");
  const int br = plane.rows() / 8, bc = plane.cols() / 8;
  const auto& zz = detail::dct_tables().zigzag;
  ChannelMaps out;
  out.channels.assign(64, Plane(br, bc));
  std::array<double, 64> coef{};
  for (int i = 0; i < br; ++i)
    for (int j = 0; j < bc; ++j) {
      const double* origin =
          plane.values().data() + static_cast<std::size_t>(i) * 8 * plane.cols() + j * 8;
      dct_8x8(origin, static_cast<std::size_t>(plane.cols()), coef);
      for (int z = 0; z < 64; ++z) out.channels[z](i, j) = coef[zz[z]];
    }
  return out;
}

// out(i, j) = max |map| over the k x k window at (i*k, j*k).
inline Plane abs_max_pool(const Plane& map, int k) {
  detail::require_divisible(map.rows(), map.cols(), k, "abs_max_pool");
  Plane out(map.rows() / k, map.cols() / k);
  for (int i = 0; i < out.rows(); ++i)
    for (int j = 0; j < out.cols(); ++j) {
      double m = 0.0;
      for (int r = 0; r < k; ++r)
        for (int c = 0; c < k; ++c) m = std::max(m, std::abs(map(i * k + r, j * k + c)));
      out(i, j) = m;
    }
  return out;
}

// Center-crops to the largest multiple of k in each dimension.
inline Plane crop_to_multiple(const Plane& map, int k) {
  const int r = map.rows() / k * k, c = map.cols() / k * k;
  if (r == map.rows() && c == map.cols()) return map;
  return map.center_crop(r, c);
}

inline ChannelMaps crop_to_multiple(const ChannelMaps& maps, int k) {
  ChannelMaps out;
  out.channels.reserve(maps.channels.size());
  for (const auto& ch : maps.channels) out.channels.push_back(crop_to_multiple(ch, k));
  return out;
}

}  // namespace greenbiqa
