#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstdlib>
#include <deque>
#include <stdexcept>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "pbp/curtain.hpp"
#include "pbp/geometry.hpp"
#include "pbp/lattice.hpp"

namespace pbp {

inline Vec3 proto_dims(Coord L) { return {4 * L, 4 * L, 2 * L}; }
inline BoxWindow proto_box(Coord L) { return box3({0, 0, 0}, proto_dims(L)); }

/// Distinguished site of the canonical brick and its proto-site.
inline Vec3 x0_site(Coord L) { return {L + 1, 4 * L + 4, 16 * L}; }
inline Vec3 x0_proto(Coord L) { return Vec3{1, 1, 0} + Vec3{L, L, L}; }

/// cell(x) = (x1, 4 x2, 16 x3) + {0} x [0,4) x [0,16)
inline BoxWindow cell(Coord L, const Vec3& x) {
  if (!proto_box(L).contains(as_span(x))) throw DomainError("cell: " + to_string(x) + " outside the proto-brick");
  return box3({x[0], 4 * x[1], 16 * x[2]}, {1, 4, 16});
}

/// Proto-site whose cell contains the canonical brick site y.
inline Vec3 cell_owner(const Vec3& y) { return {y[0], y[1] / 4, y[2] / 16}; }

struct ProtoBrick {
  Coord L = 1;
  Configuration aux;  // on [0,4L) x [0,4L) x [0,2L)

  SiteState at(const Vec3& x) const { return aux.at(as_span(x)); }
  bool contains(const Vec3& x) const { return aux.window().contains(as_span(x)); }
  /// Sites outside the proto-brick count as open.
  bool open(const Vec3& x) const { return !contains(x) || at(x) != SiteState::Closed; }
  bool occupied(const Vec3& x) const { return contains(x) && at(x) == SiteState::Occupied; }
};

inline ProtoBrick make_proto(Coord L, Configuration aux) {
  if (!(aux.window() == proto_box(L))) throw ParameterError("make_proto: configuration window is not the proto-brick");
  return {L, std::move(aux)};
}

/// Auxiliary configuration: open iff the whole cell is open, occupied iff the whole cell is occupied.
inline ProtoBrick aux_config(const Configuration& cfg, Coord L) {
  const BoxWindow brick = box3({0, 0, 0}, Brick::canonical_dims(L));
  if (!cfg.window().contains(brick)) throw DomainError("aux_config: configuration does not cover the brick");
  Configuration aux(proto_box(L));
  aux.window().for_each([&](std::size_t i, std::span<const Coord> xs) {
    bool open = true, occ = true;
    cell(L, {xs[0], xs[1], xs[2]}).for_each([&](std::size_t, std::span<const Coord> y) {
      const SiteState s = cfg.at(y);
      open = open && s != SiteState::Closed;
      occ = occ && s == SiteState::Occupied;
    });
    aux.set(i, occ ? SiteState::Occupied : open ? SiteState::OpenVacant : SiteState::Closed);
  });
  return {L, std::move(aux)};
}

/// x is swell if x, x + e3 and x + (-1,-1,1) are all open (sites outside count as open).
inline bool is_swell(const ProtoBrick& pb, const Vec3& x) {
  return pb.contains(x) && pb.open(x) && pb.open(x + Vec3{0, 0, 1}) && pb.open(x + Vec3{-1, -1, 1});
}

inline std::vector<std::uint8_t> swell_sites(const ProtoBrick& pb) {
  std::vector<std::uint8_t> mask(pb.aux.size());
  pb.aux.window().for_each(
      [&](std::size_t i, std::span<const Coord> x) { mask[i] = is_swell(pb, {x[0], x[1], x[2]}); });
  return mask;
}

struct GoodnessFlags {
  bool g1 = false, g2 = false, g3 = false, g4 = false, g5 = false;

  bool all() const { return g1 && g2 && g3 && g4 && g5; }
  /// Every failing condition, space separated.
  std::string failures() const {
    std::string out;
    const bool g[] = {g1, g2, g3, g4, g5};
    for (int i = 0; i < 5; ++i)
      if (!g[i]) out += (out.empty() ? "G" : " G") + std::to_string(i + 1);
    return out;
  }
  std::string first_failure() const {
    if (!g1) return "G1";
    if (!g2) return "G2";
    if (!g3) return "G3";
    if (!g4) return "G4";
    if (!g5) return "G5";
    return "";
  }
};

struct SailSet {
  Coord L = 1;
  std::vector<Vec3> proto;  // sorted
  GoodnessFlags flags;

  bool contains_proto(const Vec3& x) const { return std::binary_search(proto.begin(), proto.end(), x); }
  /// Membership of a canonical brick site in S = union of cells.
  bool contains(const Vec3& y) const {
    if (y[0] < 0 || y[1] < 0 || y[2] < 0) return false;
    return contains_proto(cell_owner(y));
  }
  /// sigma(S^) = {x, x+e3, x+(-1,-1,1)} intersected with the proto-brick.
  std::vector<Vec3> shadow() const {
    std::set<Vec3> out;
    const BoxWindow b = proto_box(L);
    for (const auto& x : proto)
      for (const Vec3& y : {x, x + Vec3{0, 0, 1}, x + Vec3{-1, -1, 1}})
        if (b.contains(as_span(y))) out.insert(y);
    return {out.begin(), out.end()};
  }
};

/// (G1)-(G5), each evaluated independently from scratch.
inline GoodnessFlags check_sail(const std::vector<Vec3>& s_hat, const ProtoBrick& pb) {
  const Coord L = pb.L;
  const BoxWindow b = proto_box(L);
  std::set<Vec3> s(s_hat.begin(), s_hat.end());
  for (const auto& x : s)
    if (!b.contains(as_span(x))) throw DomainError("check_sail: site " + to_string(x) + " outside the proto-brick");
  GoodnessFlags f;

  f.g1 = true;
  for (const auto& x : s)
    for (const Vec3& y : {x, x + Vec3{0, 0, 1}, x + Vec3{-1, -1, 1}})
      if (b.contains(as_span(y)) && pb.at(y) == SiteState::Closed) f.g1 = false;

  f.g2 = true;
  for (const auto& x : s)
    if (x[2] > 0 && !s.count(x + Vec3{0, 0, -1}) && !s.count(x + Vec3{1, 1, -1})) f.g2 = false;

  f.g3 = true;
  for (const auto& x : s)
    if (!(3 * L < sum(x) && sum(x) < 4 * L)) f.g3 = false;

  std::vector<std::vector<Vec3>> layers(static_cast<std::size_t>(2 * L));
  for (const auto& x : s) layers[static_cast<std::size_t>(x[2])].push_back(x);
  f.g4 = true;
  for (auto& layer : layers) {
    if (layer.empty()) {
      f.g4 = false;
      break;
    }
    sort_along_path(layer);
    if (layer.front()[0] != 0 || layer.back()[1] != 0) f.g4 = false;
    Vec3 last{0, 0, 0};
    int run = 0;
    for (std::size_t i = 1; i < layer.size(); ++i) {
      const Vec3 step = layer[i] - layer[i - 1];
      if (step != Vec3{1, 0, 0} && step != Vec3{0, -1, 0}) {
        f.g4 = false;
        break;
      }
      run = step == last ? run + 1 : 1;
      last = step;
      if (run >= 3) f.g4 = false;
    }
  }

  f.g5 = true;
  for (Coord k = 0; k + 1 < 2 * L; ++k) {
    bool seeded = false;
    for (const auto& x : layers[static_cast<std::size_t>(k)]) seeded = seeded || pb.occupied(x + Vec3{0, 0, 1});
    if (!seeded) f.g5 = false;
  }
  return f;
}

struct SailSearch {
  std::optional<SailSet> sail;
  std::string failure;  // failing conditions when no sail is returned
  bool unstable = false;
};

inline SailSet make_sail(Coord L, std::vector<Vec3> proto, const ProtoBrick& pb) {
  std::sort(proto.begin(), proto.end());
  proto.erase(std::unique(proto.begin(), proto.end()), proto.end());
  SailSet s{L, std::move(proto), {}};
  s.flags = check_sail(s.proto, pb);
  return s;
}

/// Curtain construction on swell sites from the half-space {sum <= 3L}, cut to the proto-brick.
inline SailSearch find_sail_constructive(const ProtoBrick& pb) {
  const Coord L = pb.L;
  const auto mask = swell_sites(pb);
  struct NotSwell {
    const ProtoBrick* pb;
    const std::vector<std::uint8_t>* mask;
    bool closed(std::span<const Coord> x) const {
      return pb->aux.window().contains(x) && !(*mask)[pb->aux.window().index_of(x)];
    }
  } field{&pb, &mask};
  const auto sc = stabilized_curtain(field, proto_box(L), 3 * L);
  SailSearch out;
  if (!sc.stable) {
    out.unstable = true;
    out.failure = "unstable";
    return out;
  }
  std::vector<Vec3> sites(sc.curtain.sites.begin(), sc.curtain.sites.end());
  SailSet s = make_sail(L, std::move(sites), pb);
  if (!s.flags.all()) {
    out.failure = s.flags.failures();
    return out;
  }
  out.sail = std::move(s);
  return out;
}

// ---------------------------------------------------------------------------
// Exhaustive search.  Layer paths are swept column by column in u = x1 - x2;
// at column u layer k sits at W = x1 + x2.  (G2) reads W(u, k-1) - W(u, k) in {0, 2},
// so each layer's u-range nests inside the one below: layers start bottom-up
// at x1 = 0 (W = -u) and end top-down at x2 = 0 (W = u).

inline constexpr Coord kExhaustiveMaxL = 6;

namespace detail {

// Sites placed at one column, before any layer ends there.
struct SweepState {
  std::array<std::int8_t, 2 * kExhaustiveMaxL> w{};    // W per active layer
  std::array<std::int8_t, 2 * kExhaustiveMaxL> run{};  // signed run of the last steps, 0 when it cannot bind
  std::uint8_t m = 0;                                  // active layers
  bool shrinking = false;                              // some layer has already ended
  std::uint32_t seeded = 0;                            // (G5) bits

  // W_0, the couplings and the runs fit in 60 bits.  The seed mask is compared by inclusion.
  std::uint64_t geometry() const {
    std::uint64_t g = static_cast<std::uint8_t>(w[0]);
    g = g << 4 | m;
    g = g << 1 | shrinking;
    for (int k = 1; k < m; ++k) g = g << 1 | static_cast<std::uint64_t>(w[k - 1] - w[k] == 2);
    for (int k = 0; k < m; ++k) g = g << 3 | static_cast<std::uint64_t>(run[k] + 2);
    return g;
  }
};

struct SweepNode {
  SweepState state;
  std::uint32_t parent;
  bool alive = true;
};

inline constexpr std::uint32_t kNoParent = UINT32_MAX;

}  // namespace detail

/// Column sweep over all layer-path families; exact for L <= 6.  Returns the
/// first sail met in sweep order, which is deterministic.
inline SailSearch find_sail_exhaustive(const ProtoBrick& pb) {
  const Coord L = pb.L;
  if (L > kExhaustiveMaxL)
    throw SizeError("find_sail_exhaustive: L = " + std::to_string(L) + " exceeds " + std::to_string(kExhaustiveMaxL));
  const int layers = static_cast<int>(2 * L);
  const std::uint32_t need_seeds = (1u << (layers - 1)) - 1;
  // Three equal steps need four W values inside a band of L - 1 values, so runs only matter from L = 5.
  const bool track_runs = L >= 5;

  const Coord u_lo = -(4 * L - 1), u_hi = 4 * L - 1;
  auto site = [](Coord u, Coord w, Coord k) { return Vec3{(w + u) / 2, (w - u) / 2, k}; };

  // Per (k, u, W): 0 = inadmissible, 1 = admissible, 2 = admissible with an occupied site above.
  const Coord w_span = 8 * L + 1;
  std::vector<std::uint8_t> table(static_cast<std::size_t>(layers * (u_hi - u_lo + 1) * w_span), 0);
  auto cell_of = [&](Coord u, Coord w, Coord k) -> std::uint8_t& {
    return table[static_cast<std::size_t>((k * (u_hi - u_lo + 1) + (u - u_lo)) * w_span + (w + 4 * L))];
  };
  for (Coord k = 0; k < layers; ++k)
    for (Coord u = u_lo; u <= u_hi; ++u)
      for (Coord w = -4 * L; w <= 4 * L; ++w) {
        if ((w + u) % 2) continue;
        const Vec3 x = site(u, w, k);
        if (x[0] < 0 || x[1] < 0 || x[0] >= 4 * L || x[1] >= 4 * L) continue;
        if (!(3 * L < w + k && w + k < 4 * L)) continue;
        bool ok = true;
        for (const Vec3& y : {x, x + Vec3{0, 0, 1}, x + Vec3{-1, -1, 1}})
          if (pb.contains(y) && pb.at(y) == SiteState::Closed) ok = false;
        if (ok) cell_of(u, w, k) = k + 1 < layers && pb.occupied(x + Vec3{0, 0, 1}) ? 2 : 1;
      }
  auto site_ok = [&](Coord u, Coord w, Coord k) { return w >= -4 * L && w <= 4 * L && cell_of(u, w, k) != 0; };
  auto seed_bit = [&](Coord u, Coord w, Coord k) -> std::uint32_t { return cell_of(u, w, k) == 2 ? (1u << k) : 0u; };
  auto coupled = [](Coord below, Coord w) { return below - w == 0 || below - w == 2; };

  std::vector<std::vector<detail::SweepNode>> columns;
  std::optional<std::pair<std::size_t, std::size_t>> found;

  for (Coord u = u_lo; u <= u_hi && !found; ++u) {
    std::vector<detail::SweepNode> next;
    std::vector<std::uint32_t> chain;  // next node with the same geometry
    std::unordered_map<std::uint64_t, std::uint32_t> head;
    std::uint32_t parent = detail::kNoParent;
    detail::SweepState cur;

    auto emit = [&] {
      if (cur.m == 0) return;
      const std::uint64_t g = cur.geometry();
      auto [it, fresh] = head.emplace(g, static_cast<std::uint32_t>(next.size()));
      if (!fresh) {
        for (std::uint32_t j = it->second; j != detail::kNoParent; j = chain[j]) {
          if (!next[j].alive) continue;
          const std::uint32_t mj = next[j].state.seeded;
          if ((mj | cur.seeded) == mj) return;
          if ((mj | cur.seeded) == cur.seeded) next[j].alive = false;
        }
        chain.push_back(it->second);
        it->second = static_cast<std::uint32_t>(next.size());
      } else {
        chain.push_back(detail::kNoParent);
      }
      next.push_back({cur, parent});
    };
    // New layers enter at x1 = 0 on top of the current stack.
    auto starts = [&] {
      emit();
      if (cur.shrinking) return;
      const detail::SweepState saved = cur;
      while (cur.m < layers) {
        const Coord k = cur.m, w = -u;
        if (!site_ok(u, w, k) || (k > 0 && !coupled(cur.w[k - 1], w))) break;
        cur.w[k] = static_cast<std::int8_t>(w);
        cur.run[k] = 0;
        cur.seeded |= seed_bit(u, w, k);
        ++cur.m;
        emit();
      }
      cur = saved;
    };
    auto step = [&](auto& self, const detail::SweepState& prev, int keep, int k) -> void {
      if (k == keep) {
        starts();
        return;
      }
      for (int dir : {+1, -1}) {
        const int r = prev.run[k];
        const int nr = r * dir > 0 ? r + dir : dir;
        if (nr >= 3 || nr <= -3) continue;
        const Coord w = prev.w[k] + dir;
        if (!site_ok(u, w, k) || (k > 0 && !coupled(cur.w[k - 1], w))) continue;
        // Keep the run only while the band leaves room to complete a triple.
        const Coord room = dir > 0 ? (4 * L - k - 1) - w : w - (3 * L - k + 1);
        const bool binding = track_runs && std::abs(nr) + room >= 3;
        const std::uint32_t saved = cur.seeded;
        cur.w[k] = static_cast<std::int8_t>(w);
        cur.run[k] = static_cast<std::int8_t>(binding ? nr : 0);
        cur.seeded |= seed_bit(u, w, k);
        cur.m = static_cast<std::uint8_t>(k + 1);
        self(self, prev, keep, k + 1);
        cur.seeded = saved;
      }
    };

    // Fresh stack starting at this column.
    cur = {};
    starts();
    if (!columns.empty()) {
      const auto& prev = columns.back();
      for (std::size_t i = 0; i < prev.size(); ++i) {
        const auto& ps = prev[i].state;
        const int m = ps.m;
        const bool may_end = ps.shrinking || m == layers;
        // Layers keep..m-1 end at the previous column; each must sit on x2 = 0.
        for (int keep = m; keep >= 1; --keep) {
          if (keep < m && (!may_end || ps.w[keep] != u - 1)) break;
          parent = static_cast<std::uint32_t>(i);
          cur = {};
          cur.shrinking = ps.shrinking || keep < m;
          cur.seeded = ps.seeded;
          step(step, ps, keep, 0);
        }
      }
    }
    std::erase_if(next, [](const detail::SweepNode& n) { return !n.alive; });
    // A node can close every layer here when all of them sit on x2 = 0.
    for (std::size_t i = 0; i < next.size() && !found; ++i) {
      const auto& st = next[i].state;
      const bool all_started = st.shrinking || st.m == layers;
      if (!all_started || (st.seeded & need_seeds) != need_seeds) continue;
      if (std::all_of(st.w.begin(), st.w.begin() + st.m, [&](std::int8_t w) { return w == u; }))
        found = {columns.size(), i};
    }
    columns.push_back(std::move(next));
  }

  SailSearch out;
  if (!found) {
    out.failure = "no sail";
    return out;
  }
  std::vector<Vec3> sites;
  std::size_t col = found->first, node = found->second;
  for (;;) {
    const auto& n = columns[col][node];
    const Coord u = u_lo + static_cast<Coord>(col);
    for (int k = 0; k < n.state.m; ++k) sites.push_back(site(u, n.state.w[k], k));
    if (n.parent == detail::kNoParent) break;
    node = n.parent;
    --col;
  }
  SailSet s = make_sail(L, std::move(sites), pb);
  if (!s.flags.all()) throw std::logic_error("find_sail_exhaustive: reconstructed family fails " + s.flags.first_failure());
  out.sail = std::move(s);
  return out;
}

/// Canonical brick content pulled back through eta, read from any site field.
template <class Field>
Configuration pull_back_field(const Field& field, const Brick& b) {
  Configuration out(b.canonical_box());
  out.window().for_each([&](std::size_t i, std::span<const Coord> y) {
    out.set(i, field.state_at(as_span(b.to_world({y[0], y[1], y[2]}))));
  });
  return out;
}

inline Configuration pull_back(const Configuration& cfg, const Brick& b) {
  if (!cfg.window().contains(b.box())) throw DomainError("pull_back: configuration does not cover " + b.describe());
  return pull_back_field(ConfigField{&cfg}, b);
}

struct BrickSail {
  Brick brick;
  SailSet sail;

  bool contains_world(const Vec3& x) const {
    const Vec3 y = brick.to_canonical(x);
    return brick.canonical_box().contains(as_span(y)) && sail.contains(y);
  }
  std::vector<Vec3> world_sites() const {
    std::vector<Vec3> out;
    for (const auto& xh : sail.proto)
      cell(sail.L, xh).for_each([&](std::size_t, std::span<const Coord> y) {
        out.push_back(brick.to_world({y[0], y[1], y[2]}));
      });
    std::sort(out.begin(), out.end());
    return out;
  }
};

struct GoodBrickResult {
  std::optional<BrickSail> sail;
  std::string failure;
  bool unstable = false;
  bool used_exhaustive = false;
};

/// A brick is good when its auxiliary proto-brick has a sail.  The constructive
/// finder runs first; the exhaustive one is the fallback for L <= 6.
inline GoodBrickResult good_brick_canonical(const Configuration& canonical, const Brick& b) {
  const ProtoBrick pb = aux_config(canonical, b.L);
  GoodBrickResult out;
  SailSearch s = find_sail_constructive(pb);
  out.unstable = s.unstable;
  if (!s.sail && b.L <= kExhaustiveMaxL) {
    out.used_exhaustive = true;
    SailSearch e = find_sail_exhaustive(pb);
    if (e.sail) s = std::move(e);
  }
  if (!s.sail) {
    out.failure = s.failure;
    return out;
  }
  out.sail = BrickSail{b, std::move(*s.sail)};
  return out;
}

inline GoodBrickResult good_brick(const Configuration& cfg, const Brick& b) {
  return good_brick_canonical(pull_back(cfg, b), b);
}

template <class Field>
GoodBrickResult good_brick_field(const Field& field, const Brick& b) {
  return good_brick_canonical(pull_back_field(field, b), b);
}

/// tip \ S separates the faces x1 = 0 and x1 = 4L - 1 of the tip (canonical frame).
inline bool separation_check(const SailSet& s) {
  const Coord L = s.L;
  const BoxWindow tip = Brick::canonical(L).canonical_tip();
  std::vector<std::uint8_t> seen(tip.size(), 0);
  std::deque<std::size_t> queue;
  tip.for_each([&](std::size_t i, std::span<const Coord> y) {
    if (y[0] == 0 && !s.contains({y[0], y[1], y[2]})) {
      seen[i] = 1;
      queue.push_back(i);
    }
  });
  while (!queue.empty()) {
    const std::size_t i = queue.front();
    queue.pop_front();
    const auto y = tip.point_at(i);
    if (y[0] == 4 * L - 1) return false;
    for (int a = 0; a < 3; ++a)
      for (Coord d : {-1, 1}) {
        auto z = y;
        z[a] += d;
        if (!tip.contains(z) || s.contains({z[0], z[1], z[2]})) continue;
        const std::size_t j = tip.index_of(z);
        if (!seen[j]) {
          seen[j] = 1;
          queue.push_back(j);
        }
      }
  }
  return true;
}

}  // namespace pbp
