#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "pbp/lattice.hpp"

// Snapshot wire format (all integers little-endian):
//   "PBP1" | u8 d | d x u64 origin (two's complement) | d x u64 extents |
//   f64 p | f64 q | u64 seed | u64 payload length | packed states

namespace pbp {

inline constexpr std::array<char, 4> kSnapshotMagic{'P', 'B', 'P', '1'};

namespace detail {

inline void put_u64(std::ostream& os, std::uint64_t v) {
  std::array<char, 8> b;
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  os.write(b.data(), 8);
}

inline void put_f64(std::ostream& os, double v) { put_u64(os, std::bit_cast<std::uint64_t>(v)); }

inline void read_exact(std::istream& is, char* dst, std::size_t n, const char* what) {
  is.read(dst, static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(is.gcount()) != n)
    throw FormatError(std::string("snapshot truncated while reading ") + what);
}

inline std::uint64_t get_u64(std::istream& is, const char* what) {
  std::array<unsigned char, 8> b;
  read_exact(is, reinterpret_cast<char*>(b.data()), 8, what);
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

}  // namespace detail

inline void write_snapshot(const Configuration& cfg, std::ostream& os) {
  const BoxWindow& w = cfg.window();
  os.write(kSnapshotMagic.data(), 4);
  os.put(static_cast<char>(w.dim()));
  for (Coord o : w.origin()) detail::put_u64(os, static_cast<std::uint64_t>(o));
  for (Coord e : w.extent()) detail::put_u64(os, static_cast<std::uint64_t>(e));
  detail::put_f64(os, cfg.meta().p);
  detail::put_f64(os, cfg.meta().q);
  detail::put_u64(os, cfg.meta().seed);
  detail::put_u64(os, cfg.packed().size());
  os.write(reinterpret_cast<const char*>(cfg.packed().data()), static_cast<std::streamsize>(cfg.packed().size()));
  if (!os) throw FormatError("snapshot write failed");
}

inline Configuration read_snapshot(std::istream& is) {
  std::array<char, 4> magic{};
  detail::read_exact(is, magic.data(), 4, "magic");
  if (magic != kSnapshotMagic) {
    if (magic[0] == 'P' && magic[1] == 'B' && magic[2] == 'P')
      throw FormatError(std::string("snapshot version mismatch: got PBP") + magic[3] + ", expected PBP1");
    throw FormatError("snapshot has wrong magic bytes");
  }
  char d = 0;
  detail::read_exact(is, &d, 1, "dimension");
  if (d < 1 || d > kMaxDim) throw FormatError("snapshot dimension " + std::to_string(int(d)) + " out of range");
  std::vector<Coord> origin(static_cast<std::size_t>(d)), extent(static_cast<std::size_t>(d));
  for (auto& o : origin) o = static_cast<Coord>(detail::get_u64(is, "origin"));
  for (auto& e : extent) {
    const std::uint64_t v = detail::get_u64(is, "extents");
    if (v == 0 || v > (std::uint64_t{1} << 40)) throw FormatError("snapshot extent out of range");
    e = static_cast<Coord>(v);
  }
  BoxWindow window = [&] {
    try {
      return BoxWindow(origin, extent);
    } catch (const std::exception& ex) {
      throw FormatError(std::string("snapshot header: ") + ex.what());
    }
  }();
  ConfigMeta meta;
  meta.p = std::bit_cast<double>(detail::get_u64(is, "p"));
  meta.q = std::bit_cast<double>(detail::get_u64(is, "q"));
  meta.seed = detail::get_u64(is, "seed");
  const std::uint64_t len = detail::get_u64(is, "payload length");
  const std::size_t expected = Configuration::packed_length(window.size());
  if (len != expected)
    throw FormatError("snapshot payload length field " + std::to_string(len) + " does not match expected " +
                      std::to_string(expected));
  std::vector<std::uint8_t> packed(expected);
  is.read(reinterpret_cast<char*>(packed.data()), static_cast<std::streamsize>(expected));
  const auto got = static_cast<std::size_t>(is.gcount());
  if (got != expected)
    throw FormatError("snapshot payload truncated: expected " + std::to_string(expected) + " bytes, got " +
                      std::to_string(got));
  return Configuration::from_packed(std::move(window), std::move(packed), meta);
}

}  // namespace pbp
