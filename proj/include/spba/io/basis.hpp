// Copyright 2026 The spba Authors
// SPDX-License-Identifier: Apache-2.0
//
// Binary container shared by the shape basis and the template-grid cache:
//   "SPBA" | u32 version | u64 N | u64 S | little-endian f64 payload.
// Basis (version 1): mean[3N], mode_scales[S], modes[3N x S] column by column.
// Template grid (version 2): N = template count, S = pixels per image; the
// payload is a fixed preamble followed by one variable-length record per
// template.
#pragma once

#include "spba/error.hpp"
#include "spba/initpose.hpp"
#include "spba/io/files.hpp"
#include "spba/shapespace.hpp"

#include <cstdint>
#include <cstring>
#include <string>
#include <string_view>
#include <vector>

namespace spba::io {

inline constexpr std::uint32_t kBasisVersion = 1;
inline constexpr std::uint32_t kGridVersion = 2;

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xFF));
}
inline void put_u64(std::string& out, std::uint64_t v) {
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xFF));
}
inline void put_f64(std::string& out, double d) {
  std::uint64_t v;
  std::memcpy(&v, &d, 8);
  put_u64(out, v);
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  std::uint64_t u(int width) {
    need(static_cast<size_t>(width));
    std::uint64_t v = 0;
    for (int b = 0; b < width; ++b) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_++])) << (8 * b);
    }
    return v;
  }
  double f64() {
    const std::uint64_t v = u(8);
    double d;
    std::memcpy(&d, &v, 8);
    return d;
  }
  std::string_view raw(size_t n) {
    need(n);
    const auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(size_t n) const {
    if (bytes_.size() - pos_ < n) throw Error(ErrorCode::io_error, "truncated SPBA container");
  }
  std::string_view bytes_;
  size_t pos_ = 0;
};

inline std::string header(std::uint32_t version, std::uint64_t n, std::uint64_t s) {
  std::string out = "SPBA";
  put_u32(out, version);
  put_u64(out, n);
  put_u64(out, s);
  return out;
}

inline void read_header(Reader& r, std::uint32_t version, std::uint64_t& n, std::uint64_t& s) {
  if (r.raw(4) != "SPBA") throw Error(ErrorCode::io_error, "bad SPBA magic");
  const auto v = static_cast<std::uint32_t>(r.u(4));
  if (v != version) {
    throw Error(ErrorCode::io_error, "unexpected SPBA container version " + std::to_string(v));
  }
  n = r.u(8);
  s = r.u(8);
}

}  // namespace detail

inline std::string encode_basis(const ShapeBasis& basis) {
  basis.validate();
  const auto n = static_cast<std::uint64_t>(basis.num_points());
  const auto s = static_cast<std::uint64_t>(basis.num_modes());
  std::string out = detail::header(kBasisVersion, n, s);
  out.reserve(out.size() + 8 * (3 * n + s + 3 * n * s));
  for (Eigen::Index i = 0; i < basis.mean.size(); ++i) detail::put_f64(out, basis.mean[i]);
  for (Eigen::Index i = 0; i < basis.mode_scales.size(); ++i) detail::put_f64(out, basis.mode_scales[i]);
  for (Eigen::Index k = 0; k < basis.modes.cols(); ++k) {
    for (Eigen::Index i = 0; i < basis.modes.rows(); ++i) detail::put_f64(out, basis.modes(i, k));
  }
  return out;
}

inline ShapeBasis decode_basis(std::string_view bytes) {
  detail::Reader r(bytes);
  std::uint64_t n = 0, s = 0;
  detail::read_header(r, kBasisVersion, n, s);
  if (n == 0 || n > (1ull << 26) || s > 4096) throw Error(ErrorCode::io_error, "implausible basis size");
  if (bytes.size() != 24 + 8 * (3 * n + s + 3 * n * s)) {
    throw Error(ErrorCode::io_error, "basis payload size mismatch");
  }
  ShapeBasis b;
  b.mean.resize(static_cast<Eigen::Index>(3 * n));
  b.mode_scales.resize(static_cast<Eigen::Index>(s));
  b.modes.resize(static_cast<Eigen::Index>(3 * n), static_cast<Eigen::Index>(s));
  for (Eigen::Index i = 0; i < b.mean.size(); ++i) b.mean[i] = r.f64();
  for (Eigen::Index i = 0; i < b.mode_scales.size(); ++i) b.mode_scales[i] = r.f64();
  for (Eigen::Index k = 0; k < b.modes.cols(); ++k) {
    for (Eigen::Index i = 0; i < b.modes.rows(); ++i) b.modes(i, k) = r.f64();
  }
  b.validate();
  return b;
}

inline void write_basis(const fs::path& path, const ShapeBasis& basis) {
  write_file_atomic(path, encode_basis(basis));
}
inline ShapeBasis read_basis(const fs::path& path) { return decode_basis(read_file(path)); }

/// FNV-1a, 64 bit.
inline std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t basis_hash(const ShapeBasis& basis) { return fnv1a(encode_basis(basis)); }

// ---------------------------------------------------------------------------

namespace detail {

inline std::vector<double> grid_preamble(const TemplateGrid& g, std::uint64_t basis_key) {
  const TemplateGridConfig& c = g.config;
  const Intrinsics& k = g.intrinsics;
  return {static_cast<double>(basis_key >> 32), static_cast<double>(basis_key & 0xFFFFFFFFu),
          static_cast<double>(c.azimuth_samples), static_cast<double>(c.elevation_samples),
          c.elevation_min, c.elevation_max, static_cast<double>(c.distance_samples),
          c.distance_min, c.distance_max, static_cast<double>(c.upsample),
          k.fx, k.fy, k.cx, k.cy, static_cast<double>(k.width), static_cast<double>(k.height)};
}

}  // namespace detail

/// Cache key: basis hash plus every grid and intrinsics parameter.
inline std::uint64_t grid_key(const ShapeBasis& basis, const TemplateGridConfig& cfg,
                              const Intrinsics& k) {
  TemplateGrid g{cfg, k, {}};
  std::string bytes;
  for (double v : detail::grid_preamble(g, basis_hash(basis))) detail::put_f64(bytes, v);
  return fnv1a(bytes);
}

inline std::string encode_grid(const TemplateGrid& grid, std::uint64_t basis_key) {
  std::string out = detail::header(kGridVersion, grid.size(),
                                   static_cast<std::uint64_t>(grid.intrinsics.width) *
                                       grid.intrinsics.height);
  for (double v : detail::grid_preamble(grid, basis_key)) detail::put_f64(out, v);
  for (const SilhouetteTemplate& t : grid.templates) {
    for (int i = 0; i < 3; ++i) detail::put_f64(out, t.pose.omega[i]);
    for (int i = 0; i < 3; ++i) detail::put_f64(out, t.pose.t[i]);
    detail::put_f64(out, t.centroid.x());
    detail::put_f64(out, t.centroid.y());
    detail::put_f64(out, static_cast<double>(t.pixels.size()));
    for (std::int32_t p : t.pixels) detail::put_f64(out, p);
  }
  return out;
}

/// Throws io_error when the file was built for another basis or configuration.
inline TemplateGrid decode_grid(std::string_view bytes, std::uint64_t basis_key,
                                const TemplateGridConfig& cfg, const Intrinsics& k) {
  detail::Reader r(bytes);
  std::uint64_t n = 0, s = 0;
  detail::read_header(r, kGridVersion, n, s);
  TemplateGrid grid{cfg, k, {}};
  const std::vector<double> expect = detail::grid_preamble(grid, basis_key);
  for (double e : expect) {
    if (r.f64() != e) throw Error(ErrorCode::io_error, "template grid cache is stale");
  }
  if (s != static_cast<std::uint64_t>(k.width) * k.height) {
    throw Error(ErrorCode::io_error, "template grid cache resolution mismatch");
  }
  for (std::uint64_t i = 0; i < n; ++i) {
    SilhouetteTemplate t;
    Vec3 w, tr;
    for (int j = 0; j < 3; ++j) w[j] = r.f64();
    for (int j = 0; j < 3; ++j) tr[j] = r.f64();
    t.pose = Twist(w, tr);
    t.centroid.x() = r.f64();
    t.centroid.y() = r.f64();
    const auto count = static_cast<std::uint64_t>(r.f64());
    if (count > s) throw Error(ErrorCode::io_error, "template grid cache is corrupt");
    t.pixels.resize(count);
    for (auto& p : t.pixels) p = static_cast<std::int32_t>(r.f64());
    grid.templates.push_back(std::move(t));
  }
  if (!r.done()) throw Error(ErrorCode::io_error, "trailing bytes in template grid cache");
  return grid;
}

/// Loads `<dir>/grid_<key>.bin` when present and current, otherwise builds
/// the grid and stores it there.
inline TemplateGrid cached_template_grid(const fs::path& dir, const ShapeBasis& basis,
                                         const Intrinsics& k, const TemplateGridConfig& cfg = {}) {
  const std::uint64_t bkey = basis_hash(basis);
  char name[40];
  std::snprintf(name, sizeof(name), "grid_%016llx.bin",
                static_cast<unsigned long long>(grid_key(basis, cfg, k)));
  const fs::path path = dir / name;
  if (fs::is_regular_file(path)) {
    try {
      return decode_grid(read_file(path), bkey, cfg, k);
    } catch (const Error&) {
    }
  }
  TemplateGrid grid = build_template_grid(basis, k, cfg);
  write_file_atomic(path, encode_grid(grid, bkey));
  return grid;
}

}  // namespace spba::io
