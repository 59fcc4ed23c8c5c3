#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "greenbiqa/error.hpp"
#include "greenbiqa/pipeline.hpp"

namespace greenbiqa {

// Model file layout: "GBQA", u32 format version, then sections of
// (4-byte tag, u64 payload length, payload) in a fixed order. Integers and
// IEEE-754 doubles are little-endian.
namespace io {

inline constexpr std::string_view kMagic = "GBQA";

class Writer {
 public:
  void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) { put(v); }
  void u64(std::uint64_t v) { put(v); }
  void i32(std::int32_t v) { put(static_cast<std::uint32_t>(v)); }
  void f64(double v) { put(std::bit_cast<std::uint64_t>(v)); }
  void bytes(std::string_view s) { buf_.append(s); }

  void vec(const Eigen::VectorXd& v) {
    u32(static_cast<std::uint32_t>(v.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) f64(v[i]);
  }
  void vec(const std::vector<double>& v) {
    u32(static_cast<std::uint32_t>(v.size()));
    for (double x : v) f64(x);
  }
  void ints(const std::vector<int>& v) {
    u32(static_cast<std::uint32_t>(v.size()));
    for (int x : v) i32(x);
  }
  void mat(const Eigen::MatrixXd& m) {
    u32(static_cast<std::uint32_t>(m.rows()));
    u32(static_cast<std::uint32_t>(m.cols()));
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) f64(m(r, c));
  }

  // Appends `body` as a tagged, length-prefixed section.
  void section(std::string_view tag, const Writer& body) {
    bytes(tag);
    u64(body.buf_.size());
    buf_.append(body.buf_);
  }

  const std::string& data() const noexcept { return buf_; }

 private:
  template <typename T>
  void put(T v) {
    for (std::size_t i = 0; i < sizeof(T); ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  std::string buf_;
};

class Reader {
 public:
  explicit Reader(std::string_view data) : data_(data) {}

  std::uint8_t u8() { return static_cast<std::uint8_t>(take(1)[0]); }
  std::uint32_t u32() { return get<std::uint32_t>(); }
  std::uint64_t u64() { return get<std::uint64_t>(); }
  std::int32_t i32() { return static_cast<std::int32_t>(get<std::uint32_t>()); }
  double f64() { return std::bit_cast<double>(get<std::uint64_t>()); }
  std::string_view take(std::size_t n) {
    if (n > remaining()) throw CorruptionError("model file truncated");
    const auto out = data_.substr(pos_, n);
    pos_ += n;
    return out;
  }

  Eigen::VectorXd vec() {
    const auto n = count(8);
    Eigen::VectorXd v(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) v[static_cast<Eigen::Index>(i)] = f64();
    return v;
  }
  std::vector<double> reals() {
    const auto n = count(8);
    std::vector<double> v(n);
    for (double& x : v) x = f64();
    return v;
  }
  std::vector<int> ints() {
    const auto n = count(4);
    std::vector<int> v(n);
    for (int& x : v) x = i32();
    return v;
  }
  Eigen::MatrixXd mat() {
    const std::uint64_t rows = u32(), cols = u32();
    if (rows * cols * 8 > remaining()) throw CorruptionError("model file truncated");
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = f64();
    return m;
  }

  // Element count prefix, checked against the bytes left.
  std::size_t count(std::size_t element_size) {
    const std::size_t n = u32();
    if (n * element_size > remaining()) throw CorruptionError("model file truncated");
    return n;
  }

  Reader section(std::string_view tag) {
    const auto got = take(4);
    if (got != tag) throw FormatError("model file: expected section '" + std::string(tag) + "', found '" +
                                      std::string(got) + "'");
    const auto len = u64();
    if (len > remaining()) throw CorruptionError("model file truncated in section " + std::string(tag));
    return Reader(take(static_cast<std::size_t>(len)));
  }
  bool peek(std::string_view tag) const { return remaining() >= 4 && data_.substr(pos_, 4) == tag; }

  std::size_t remaining() const noexcept { return data_.size() - pos_; }
  void expect_end(std::string_view what) const {
    if (remaining() != 0) throw FormatError("model file: trailing bytes in " + std::string(what));
  }

 private:
  template <typename T>
  T get() {
    const auto b = take(sizeof(T));
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(static_cast<unsigned char>(b[i])) << (8 * i);
    return v;
  }
  std::string_view data_;
  std::size_t pos_ = 0;
};

inline void put(Writer& w, const SaabKernel& k) {
  w.i32(k.shape.h);
  w.i32(k.shape.w);
  w.i32(k.shape.c);
  w.mat(k.basis);
  w.vec(k.energy);
}

inline SaabKernel get_saab(Reader& r) {
  SaabKernel k;
  k.shape.h = r.i32();
  k.shape.w = r.i32();
  k.shape.c = r.i32();
  k.basis = r.mat();
  k.energy = r.vec();
  const auto n = k.shape.volume();
  if (k.shape.h <= 0 || k.shape.w <= 0 || k.shape.c <= 0 || k.basis.rows() != n || k.basis.cols() != n)
    throw FormatError("model file: inconsistent Saab kernel");
  return k;
}

inline void put(Writer& w, const PcaBasis& b) {
  w.vec(b.mean);
  w.mat(b.components);
  w.vec(b.explained_variance);
  w.ints(b.slots);
  w.i32(b.n_slots);
}

inline PcaBasis get_pca(Reader& r) {
  PcaBasis b;
  b.mean = r.vec();
  b.components = r.mat();
  b.explained_variance = r.vec();
  b.slots = r.ints();
  b.n_slots = r.i32();
  if ((b.components.rows() > 0 && b.components.cols() != b.mean.size()) ||
      static_cast<Eigen::Index>(b.slots.size()) != b.components.rows() || b.n_slots < 0)
    throw FormatError("model file: inconsistent PCA basis");
  for (int s : b.slots)
    if (s < 0 || s >= b.n_slots) throw FormatError("model file: PCA slot out of range");
  return b;
}

inline void put(Writer& w, const SpatialModel& m) {
  const auto& c = m.config;
  for (int v : {c.side, c.pca_components, c.min_pca_entries, c.pool, c.min_train_planes, c.max_fit_patches,
                c.max_pca_samples})
    w.i32(v);
  put(w, m.hop1);
  w.u8(m.hop2 ? 1 : 0);
  if (m.hop2) put(w, *m.hop2);
  w.u32(static_cast<std::uint32_t>(m.agg_pca.size()));
  for (const auto& b : m.agg_pca) put(w, b);
}

inline SpatialModel get_spatial(Reader& r) {
  SpatialModel m;
  auto& c = m.config;
  for (int* v : {&c.side, &c.pca_components, &c.min_pca_entries, &c.pool, &c.min_train_planes, &c.max_fit_patches,
                 &c.max_pca_samples})
    *v = r.i32();
  m.hop1 = get_saab(r);
  if (r.u8()) m.hop2 = get_saab(r);
  const auto n = r.count(1);
  if (n != static_cast<std::size_t>(kSpatialAggChannels)) throw FormatError("model file: bad spatial channel count");
  for (std::size_t i = 0; i < n; ++i) m.agg_pca.push_back(get_pca(r));
  SpatialGeometry g;
  try {
    g = m.geometry();
  } catch (const GeometryError& e) {
    throw FormatError(std::string("model file: ") + e.what());
  }
  if (g.has_hop2 != m.hop2.has_value()) throw FormatError("model file: spatial hop structure mismatch");
  return m;
}

inline void put(Writer& w, const SpatioColorModel& m) {
  const auto& c = m.config;
  for (int v : {c.side, c.n_components, c.pool, c.min_train_cuboids, c.max_fit_patches, c.max_pca_samples}) w.i32(v);
  put(w, m.hop1);
  put(w, m.hop2);
  w.u32(static_cast<std::uint32_t>(m.channel_pca.size()));
  for (const auto& b : m.channel_pca) put(w, b);
}

inline SpatioColorModel get_spatiocolor(Reader& r) {
  SpatioColorModel m;
  auto& c = m.config;
  for (int* v : {&c.side, &c.n_components, &c.pool, &c.min_train_cuboids, &c.max_fit_patches, &c.max_pca_samples})
    *v = r.i32();
  m.hop1 = get_saab(r);
  m.hop2 = get_saab(r);
  const auto n = r.count(1);
  if (n != static_cast<std::size_t>(kSpatioColorFinalChannels))
    throw FormatError("model file: bad spatio-color channel count");
  for (std::size_t i = 0; i < n; ++i) m.channel_pca.push_back(get_pca(r));
  return m;
}

// Internal nodes store (feature, threshold, left, right), leaves (-1, value).
inline void put(Writer& w, const GbtModel& m) {
  w.i32(m.n_features);
  w.i32(m.n_classes);
  w.vec(m.base_score);
  w.f64(m.learning_rate);
  w.u32(static_cast<std::uint32_t>(m.trees.size()));
  for (const auto& t : m.trees) {
    w.u32(static_cast<std::uint32_t>(t.nodes.size()));
    for (const auto& n : t.nodes) {
      w.i32(n.feature);
      if (n.feature >= 0) {
        w.f64(n.threshold);
        w.i32(n.left);
        w.i32(n.right);
      } else {
        w.f64(n.value);
      }
    }
  }
}

inline GbtModel get_gbt(Reader& r) {
  GbtModel m;
  m.n_features = r.i32();
  m.n_classes = r.i32();
  m.base_score = r.reals();
  m.learning_rate = r.f64();
  if (m.n_features < 0 || m.n_classes < 1 || static_cast<int>(m.base_score.size()) != m.n_classes)
    throw FormatError("model file: inconsistent boosted model header");
  const auto n_trees = r.count(4);
  m.trees.resize(n_trees);
  for (auto& t : m.trees) {
    const auto n_nodes = r.count(12);
    if (n_nodes == 0) throw FormatError("model file: empty tree");
    t.nodes.resize(n_nodes);
    for (auto& n : t.nodes) {
      n.feature = r.i32();
      if (n.feature >= 0) {
        n.threshold = r.f64();
        n.left = r.i32();
        n.right = r.i32();
        if (n.feature >= m.n_features) throw FormatError("model file: tree feature out of range");
      } else {
        n.value = r.f64();
      }
    }
    // Children must point forward so prediction always terminates.
    for (std::size_t i = 0; i < n_nodes; ++i) {
      const auto& n = t.nodes[i];
      if (n.feature >= 0 && (n.left <= static_cast<int>(i) || n.right <= static_cast<int>(i) ||
                             n.left >= static_cast<int>(n_nodes) || n.right >= static_cast<int>(n_nodes)))
        throw FormatError("model file: malformed tree");
    }
  }
  return m;
}

inline void put(Writer& w, const DistortionRouter& rt) {
  w.u8(static_cast<std::uint8_t>(rt.kind));
  w.i32(rt.k);
  if (rt.kind == RouterKind::classifier) {
    w.u32(static_cast<std::uint32_t>(rt.merge_map.groups.size()));
    for (const auto& [raw, g] : rt.merge_map.groups) {
      w.i32(raw);
      w.i32(g);
    }
    put(w, *rt.classifier);
  } else {
    w.mat(rt.centroids);
    w.vec(rt.norm_mean);
    w.vec(rt.norm_std);
  }
}

inline DistortionRouter get_router(Reader& r) {
  DistortionRouter rt;
  const auto kind = r.u8();
  if (kind > 1) throw FormatError("model file: unknown router kind");
  rt.kind = static_cast<RouterKind>(kind);
  rt.k = r.i32();
  if (rt.k < 1) throw FormatError("model file: bad group count");
  if (rt.kind == RouterKind::classifier) {
    const auto n = r.count(8);
    for (std::size_t i = 0; i < n; ++i) {
      const int raw = r.i32();
      rt.merge_map.groups[raw] = r.i32();
    }
    rt.classifier = get_gbt(r);
    if (rt.classifier->n_classes != rt.k || rt.merge_map.group_count() != rt.k)
      throw FormatError("model file: router class count mismatch");
  } else {
    rt.centroids = r.mat();
    rt.norm_mean = r.reals();
    rt.norm_std = r.reals();
    if (rt.centroids.rows() != rt.k || rt.centroids.cols() != static_cast<Eigen::Index>(rt.norm_mean.size()) ||
        rt.norm_mean.size() != rt.norm_std.size())
      throw FormatError("model file: inconsistent clustering router");
  }
  return rt;
}

}  // namespace io

inline std::string serialize(const TrainedModel& m) {
  io::Writer out;
  out.bytes(io::kMagic);
  out.u32(m.format_version);

  io::Writer meta;
  meta.u8(static_cast<std::uint8_t>(m.scenario));
  meta.u64(m.seed);
  meta.f64(m.score_min);
  meta.f64(m.score_max);
  out.section("META", meta);

  io::Writer crop;
  crop.i32(m.crop.train_count);
  crop.i32(m.crop.test_count);
  crop.i32(m.crop.side);
  out.section("CROP", crop);

  io::Writer spatial;
  for (const auto* s : {&m.spatial.y, &m.spatial.u, &m.spatial.v}) io::put(spatial, *s);
  out.section("SPAT", spatial);

  if (m.spatiocolor) {
    io::Writer sc;
    io::put(sc, *m.spatiocolor);
    out.section("SCLR", sc);
  }

  io::Writer rft;
  rft.ints(m.spatial_selected);
  rft.ints(m.spatiocolor_selected);
  out.section("RFTI", rft);

  io::Writer router;
  io::put(router, m.router);
  out.section("ROUT", router);

  io::Writer reg;
  reg.ints(m.group_forest);
  reg.u32(static_cast<std::uint32_t>(m.forests.size()));
  for (const auto& f : m.forests) io::put(reg, f);
  out.section("REGR", reg);
  return out.data();
}

inline TrainedModel deserialize(std::string_view bytes) {
  const auto head = bytes.substr(0, std::min(bytes.size(), io::kMagic.size()));
  if (head != io::kMagic.substr(0, head.size())) throw FormatError("not a model file (bad magic)");
  io::Reader in(bytes);
  if (in.take(4) != io::kMagic) throw FormatError("not a model file (bad magic)");
  TrainedModel m;
  m.format_version = in.u32();
  if (m.format_version != TrainedModel::kFormatVersion)
    throw FormatError("unsupported model format version " + std::to_string(m.format_version) + " (expected " +
                      std::to_string(TrainedModel::kFormatVersion) + ")");

  auto meta = in.section("META");
  const auto scenario = meta.u8();
  if (scenario > 1) throw FormatError("model file: unknown scenario");
  m.scenario = static_cast<Scenario>(scenario);
  m.seed = meta.u64();
  m.score_min = meta.f64();
  m.score_max = meta.f64();
  meta.expect_end("META");

  auto crop = in.section("CROP");
  m.crop.train_count = crop.i32();
  m.crop.test_count = crop.i32();
  m.crop.side = crop.i32();
  crop.expect_end("CROP");
  if (m.crop.test_count < 1 || m.crop.side < 1) throw FormatError("model file: bad crop configuration");

  auto spatial = in.section("SPAT");
  m.spatial.y = io::get_spatial(spatial);
  m.spatial.u = io::get_spatial(spatial);
  m.spatial.v = io::get_spatial(spatial);
  spatial.expect_end("SPAT");

  if (in.peek("SCLR")) {
    auto sc = in.section("SCLR");
    m.spatiocolor = io::get_spatiocolor(sc);
    sc.expect_end("SCLR");
  }

  auto rft = in.section("RFTI");
  m.spatial_selected = rft.ints();
  m.spatiocolor_selected = rft.ints();
  rft.expect_end("RFTI");
  const auto spatial_len = m.spatial.y.layout().total + m.spatial.u.layout().total + m.spatial.v.layout().total;
  for (int i : m.spatial_selected)
    if (i < 0 || i >= spatial_len) throw FormatError("model file: spatial index out of range");
  const int sc_len = m.spatiocolor ? m.spatiocolor->output_length() : 0;
  for (int i : m.spatiocolor_selected)
    if (i < 0 || i >= sc_len) throw FormatError("model file: spatio-color index out of range");

  auto router = in.section("ROUT");
  m.router = io::get_router(router);
  router.expect_end("ROUT");

  auto reg = in.section("REGR");
  m.group_forest = reg.ints();
  const auto n = reg.count(4);
  for (std::size_t i = 0; i < n; ++i) m.forests.push_back(io::get_gbt(reg));
  reg.expect_end("REGR");
  in.expect_end("model file");
  m.check();
  return m;
}

inline void save(const TrainedModel& m, const std::filesystem::path& path) {
  const auto bytes = serialize(m);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write model " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing model " + path.string());
}

inline TrainedModel load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open model " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize(bytes);
}

}  // namespace greenbiqa
