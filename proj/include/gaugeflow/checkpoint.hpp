#pragma once

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "gaugeflow/errors.hpp"
#include "gaugeflow/fields.hpp"

namespace gaugeflow {

// Binary checkpoint, magic "GFLX1":
//   magic[5] | u8 group | i32 rep_charge | u8 d | u32 extents[d] | f64 spacing
//   | u8 has_section | links (N^2 complex doubles each, row-major, link order)
//   | sites (N complex doubles each) when has_section.
// All scalars little-endian; doubles are written raw, so round-trips are
// bit-exact.

struct CheckpointHeader {
  GroupKind kind;
  LatticeSpec lattice;
  bool has_section = false;
};

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_f64(std::string& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  for (int i = 0; i < 8; ++i)
    out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

struct ByteReader {
  const std::string& buf;
  size_t pos = 0;

  std::uint8_t u8() {
    if (pos + 1 > buf.size()) throw IoError("checkpoint: truncated file");
    return static_cast<std::uint8_t>(buf[pos++]);
  }
  std::uint32_t u32() {
    if (pos + 4 > buf.size()) throw IoError("checkpoint: truncated file");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<std::uint32_t>(static_cast<std::uint8_t>(buf[pos++])) << (8 * i);
    return v;
  }
  double f64() {
    if (pos + 8 > buf.size()) throw IoError("checkpoint: truncated file");
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i)
      bits |= static_cast<std::uint64_t>(static_cast<std::uint8_t>(buf[pos++])) << (8 * i);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }
};

// write with a temp file + rename so readers never observe partial output
inline void atomic_write(const std::string& path, const std::string& bytes) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open for writing: " + tmp);
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw IoError("write failed: " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("rename failed: " + path + ": " + ec.message());
}

inline std::string read_all(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open: " + path);
  std::string buf((std::istreambuf_iterator<char>(f)),
                  std::istreambuf_iterator<char>());
  return buf;
}

}  // namespace detail

template <class G>
inline void write_checkpoint(const std::string& path, const G& g, const Lattice& lat,
                             const Configuration<G>& cfg, bool has_section = true) {
  std::string out;
  out += "GFLX1";
  out.push_back(static_cast<char>(g.kind().variant));
  detail::put_u32(out, static_cast<std::uint32_t>(g.rep_charge));
  out.push_back(static_cast<char>(lat.dim()));
  for (int mu = 0; mu < lat.dim(); ++mu)
    detail::put_u32(out, static_cast<std::uint32_t>(lat.extent(mu)));
  detail::put_f64(out, lat.h());
  out.push_back(has_section ? 1 : 0);
  for (const auto& u : cfg.u.u)
    for (const auto& z : u.a) {
      detail::put_f64(out, z.real());
      detail::put_f64(out, z.imag());
    }
  if (has_section)
    for (const auto& p : cfg.phi.phi)
      for (const auto& z : p.v) {
        detail::put_f64(out, z.real());
        detail::put_f64(out, z.imag());
      }
  detail::atomic_write(path, out);
}

inline CheckpointHeader read_checkpoint_header(const std::string& path) {
  const std::string buf = detail::read_all(path);
  if (buf.size() < 6 || buf.compare(0, 5, "GFLX1") != 0)
    throw IoError("checkpoint: bad magic in " + path);
  detail::ByteReader r{buf, 5};
  CheckpointHeader h;
  const int variant = r.u8();
  if (variant != 0 && variant != 1) throw IoError("checkpoint: unknown group");
  h.kind.variant = static_cast<GroupKind::Variant>(variant);
  h.kind.rep_charge = static_cast<std::int32_t>(r.u32());
  h.lattice.d = r.u8();
  h.lattice.extents.resize(h.lattice.d);
  for (int mu = 0; mu < h.lattice.d; ++mu)
    h.lattice.extents[mu] = static_cast<int>(r.u32());
  h.lattice.spacing = r.f64();
  h.has_section = r.u8() != 0;
  h.lattice.validate();
  return h;
}

template <class G>
inline Configuration<G> read_checkpoint(const std::string& path, const G& g,
                                        const Lattice& lat) {
  const std::string buf = detail::read_all(path);
  if (buf.size() < 6 || buf.compare(0, 5, "GFLX1") != 0)
    throw IoError("checkpoint: bad magic in " + path);
  detail::ByteReader r{buf, 5};
  const int variant = r.u8();
  const int charge = static_cast<std::int32_t>(r.u32());
  if (variant != g.kind().variant || charge != g.rep_charge)
    throw IoError("checkpoint: group mismatch in " + path);
  const int d = r.u8();
  if (d != lat.dim()) throw IoError("checkpoint: dimension mismatch in " + path);
  for (int mu = 0; mu < d; ++mu)
    if (static_cast<int>(r.u32()) != lat.extent(mu))
      throw IoError("checkpoint: extent mismatch in " + path);
  const double h = r.f64();
  if (h != lat.h()) throw IoError("checkpoint: spacing mismatch in " + path);
  const bool has_section = r.u8() != 0;

  Configuration<G> cfg{Connection<G>::trivial(lat), Section<G>::zero(lat)};
  for (auto& u : cfg.u.u)
    for (auto& z : u.a) {
      const double re = r.f64();
      const double im = r.f64();
      z = cplx(re, im);
    }
  if (has_section)
    for (auto& p : cfg.phi.phi)
      for (auto& z : p.v) {
        const double re = r.f64();
        const double im = r.f64();
        z = cplx(re, im);
      }
  return cfg;
}

}  // namespace gaugeflow
