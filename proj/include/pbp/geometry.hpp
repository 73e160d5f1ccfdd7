#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pbp/lattice.hpp"

namespace pbp {

using Vec3 = std::array<Coord, 3>;

inline Vec3 operator+(Vec3 a, const Vec3& b) {
  for (int i = 0; i < 3; ++i) a[i] += b[i];
  return a;
}
inline Vec3 operator-(Vec3 a, const Vec3& b) {
  for (int i = 0; i < 3; ++i) a[i] -= b[i];
  return a;
}
inline Vec3 operator*(Coord s, Vec3 a) {
  for (auto& c : a) c *= s;
  return a;
}
inline Coord dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
inline Coord sum(const Vec3& a) { return a[0] + a[1] + a[2]; }

inline std::string to_string(const Vec3& v) {
  return "(" + std::to_string(v[0]) + "," + std::to_string(v[1]) + "," + std::to_string(v[2]) + ")";
}

struct Vec3Hash {
  std::size_t operator()(const Vec3& v) const {
    std::uint64_t h = 0x9e3779b97f4a7c15ULL;
    for (Coord c : v) h = (h ^ static_cast<std::uint64_t>(c)) * 0xff51afd7ed558ccdULL + (h >> 29);
    return static_cast<std::size_t>(h ^ (h >> 32));
  }
};

inline BoxWindow box3(const Vec3& origin, const Vec3& extent) {
  return BoxWindow({origin[0], origin[1], origin[2]}, {extent[0], extent[1], extent[2]});
}
inline Vec3 lo3(const BoxWindow& w) { return {w.lo(0), w.lo(1), w.lo(2)}; }
inline Vec3 hi3(const BoxWindow& w) { return {w.hi(0), w.hi(1), w.hi(2)}; }

// Signed coordinate permutation plus translation:  (eta x)_i = sign_i * x_{perm_i} + shift_i.
struct Isometry {
  std::array<int, 3> perm{0, 1, 2};
  std::array<int, 3> sign{1, 1, 1};
  Vec3 shift{0, 0, 0};

  static Isometry identity() { return {}; }
  static Isometry translation(const Vec3& v) { return {{0, 1, 2}, {1, 1, 1}, v}; }

  /// One of the 48 linear parts: perm index (lexicographic) * 8 + sign bits (bit i set = axis i negated).
  static Isometry from_code(int code, const Vec3& shift = {0, 0, 0}) {
    if (code < 0 || code >= 48) throw ParameterError("Isometry: code must be in [0,48)");
    std::array<int, 3> p{0, 1, 2};
    for (int k = 0; k < code / 8; ++k) std::next_permutation(p.begin(), p.end());
    Isometry e;
    e.perm = p;
    for (int i = 0; i < 3; ++i) e.sign[i] = (code >> i) & 1 ? -1 : 1;
    e.shift = shift;
    return e;
  }

  int code() const {
    std::array<int, 3> p{0, 1, 2};
    int k = 0;
    while (p != perm) {
      std::next_permutation(p.begin(), p.end());
      ++k;
    }
    int bits = 0;
    for (int i = 0; i < 3; ++i) bits |= (sign[i] < 0) << i;
    return k * 8 + bits;
  }

  Vec3 linear(const Vec3& x) const {
    return {sign[0] * x[perm[0]], sign[1] * x[perm[1]], sign[2] * x[perm[2]]};
  }
  Vec3 operator()(const Vec3& x) const { return linear(x) + shift; }

  /// this ∘ other
  Isometry compose(const Isometry& o) const {
    Isometry r;
    for (int i = 0; i < 3; ++i) {
      r.perm[i] = o.perm[perm[i]];
      r.sign[i] = sign[i] * o.sign[perm[i]];
    }
    r.shift = linear(o.shift) + shift;
    return r;
  }

  Isometry inverse() const {
    Isometry r;
    for (int i = 0; i < 3; ++i) {
      r.perm[perm[i]] = i;
      r.sign[perm[i]] = sign[i];
    }
    r.shift = Vec3{0, 0, 0} - r.linear(shift);
    return r;
  }

  bool same_linear(const Isometry& o) const { return perm == o.perm && sign == o.sign; }

  /// Image of a box (as a set of sites).
  BoxWindow apply_box(const BoxWindow& b) const {
    const Vec3 a = (*this)(lo3(b));
    const Vec3 c = (*this)(hi3(b) - Vec3{1, 1, 1});
    Vec3 lo, ext;
    for (int i = 0; i < 3; ++i) {
      lo[i] = std::min(a[i], c[i]);
      ext[i] = std::max(a[i], c[i]) - lo[i] + 1;
    }
    return box3(lo, ext);
  }

  friend bool operator==(const Isometry&, const Isometry&) = default;
};

// Brick: eta applied to the canonical box [0,4L) x [0,16L) x [0,32L).  The
// distinguished corner is eta(0).
struct Brick {
  Isometry eta;
  Coord L = 1;

  static Brick canonical(Coord L) { return {Isometry::identity(), L}; }

  static Vec3 canonical_dims(Coord L) { return {4 * L, 16 * L, 32 * L}; }
  BoxWindow canonical_box() const { return box3({0, 0, 0}, canonical_dims(L)); }
  BoxWindow canonical_tail() const { return box3({0, 0, 0}, {4 * L, 16 * L, 16 * L}); }
  BoxWindow canonical_head() const { return box3({0, 0, 16 * L}, {4 * L, 16 * L, 16 * L}); }
  BoxWindow canonical_tip() const { return box3({0, 0, 16 * L}, {4 * L, 4 * L, 16 * L}); }
  BoxWindow canonical_base() const { return box3({0, 0, 0}, {4 * L, 16 * L, 16}); }

  BoxWindow box() const { return eta.apply_box(canonical_box()); }
  BoxWindow tail() const { return eta.apply_box(canonical_tail()); }
  BoxWindow head() const { return eta.apply_box(canonical_head()); }
  BoxWindow tip() const { return eta.apply_box(canonical_tip()); }
  BoxWindow base() const { return eta.apply_box(canonical_base()); }
  Vec3 corner() const { return eta.shift; }

  Vec3 to_world(const Vec3& canonical) const { return eta(canonical); }
  Vec3 to_canonical(const Vec3& world) const { return eta.inverse()(world); }

  Brick transformed(const Isometry& rho) const { return {rho.compose(eta), L}; }
  Brick translated(const Vec3& v) const { return transformed(Isometry::translation(v)); }

  std::string describe() const {
    const auto b = box();
    return "corner=" + to_string(corner()) + " dims=" + b.describe() + " eta=" + std::to_string(eta.code());
  }

  friend bool operator==(const Brick&, const Brick&) = default;
};

/// Twice the centroid of a box, exact in integers.
inline Vec3 doubled_centroid(const BoxWindow& b) {
  return {b.lo(0) + b.hi(0) - 1, b.lo(1) + b.hi(1) - 1, b.lo(2) + b.hi(2) - 1};
}

}  // namespace pbp
