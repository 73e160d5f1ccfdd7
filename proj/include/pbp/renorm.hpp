#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <deque>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "pbp/dynamics.hpp"
#include "pbp/geometry.hpp"
#include "pbp/parallel.hpp"
#include "pbp/sail.hpp"

namespace pbp {

struct GeometryError : std::logic_error {
  using std::logic_error::logic_error;
};

// ---------------------------------------------------------------------------
// Succession.  For the canonical brick the successor maps canonical axis 3
// (length 32L) to world x, axis 1 (4L) to world y and axis 2 (16L) to world z;
// the tail of B' is centred on the tip of B.  Two boxes share that tail, each
// with four orientations.

inline Isometry successor_map(Coord L, int s3, int s1, int s2) {
  Isometry e;
  e.perm = {2, 0, 1};
  e.sign = {s3, s1, s2};
  e.shift = {s3 == 1 ? -6 * L : 10 * L - 1, s1 == 1 ? 0 : 4 * L - 1, s2 == 1 ? 16 * L : 32 * L - 1};
  return e;
}

/// B |> B': tail centroid of B' equals tip centroid of B, and B' has the
/// successor shape (its long axis along B's short axis, and so on).
inline bool is_successor(const Brick& b, const Brick& bp) {
  if (b.L != bp.L) return false;
  const Isometry rel = b.eta.inverse().compose(bp.eta);  // B' in B's canonical frame
  if (rel.perm != std::array<int, 3>{2, 0, 1}) return false;
  return doubled_centroid(bp.tail()) == doubled_centroid(b.tip());
}

/// The eight successors: box choice first (lower corner, lexicographic), then orientation code.
inline std::vector<Brick> brick_successors(const Brick& b) {
  std::vector<Brick> out;
  for (int s3 : {-1, 1})
    for (int s1 : {1, -1})
      for (int s2 : {1, -1}) out.push_back({b.eta.compose(successor_map(b.L, s3, s1, s2)), b.L});
  std::sort(out.begin(), out.end(), [](const Brick& x, const Brick& y) {
    const Vec3 lx = lo3(x.box()), ly = lo3(y.box());
    if (lx != ly) return lx < ly;
    return x.eta.code() < y.eta.code();
  });
  return out;
}

// ---------------------------------------------------------------------------
// Gadget.

struct Gadget {
  Coord L = 1;
  Brick base;
  std::array<Brick, 3> chain;        // B1, B2, B3
  std::array<Brick, 3> chain_prime;  // B1', B2', B3'
  Vec3 u{0, 0, 0}, u_prime{0, 0, 0};
  std::array<int, 3> choices{}, choices_prime{};  // successor indices at each link
  double C = 0.0;

  std::vector<Brick> bricks() const {
    return {base, chain[0], chain[1], chain[2], chain_prime[0], chain_prime[1], chain_prime[2]};
  }
  Gadget translated(const Vec3& v) const {
    Gadget g = *this;
    g.base = base.translated(v);
    for (auto& b : g.chain) b = b.translated(v);
    for (auto& b : g.chain_prime) b = b.translated(v);
    return g;
  }
};

/// Every failed gadget invariant, empty when all hold.
inline std::vector<std::string> gadget_violations(const Gadget& g) {
  std::vector<std::string> bad;
  auto check = [&](bool ok, const std::string& what) {
    if (!ok) bad.push_back(what);
  };
  const auto& c = g.chain;
  const auto& d = g.chain_prime;
  check(is_successor(g.base, c[0]) && is_successor(c[0], c[1]) && is_successor(c[1], c[2]), "chain B |> B1 |> B2 |> B3");
  check(is_successor(g.base, d[0]) && is_successor(d[0], d[1]) && is_successor(d[1], d[2]), "chain B |> B1' |> B2' |> B3'");
  check(c[2] == g.base.translated(g.L * g.u), "B3 = B + Lu");
  check(d[2] == g.base.translated(g.L * g.u_prime), "B3' = B + Lu'");
  check(c[2].eta.same_linear(g.base.eta) && d[2].eta.same_linear(g.base.eta), "same orientation");
  check(!(c[2].box() == g.base.box()) && !(d[2].box() == g.base.box()) && !(c[2].box() == d[2].box()), "distinct");
  double reach = 0.0;
  for (const auto& b : g.bricks()) {
    const auto bx = b.box();
    for (int i = 0; i < 3; ++i)
      reach = std::max({reach, std::abs(static_cast<double>(bx.lo(i))), std::abs(static_cast<double>(bx.hi(i)))});
  }
  check(reach <= g.C * static_cast<double>(g.L) + 1e-9, "within distance CL");
  return bad;
}

namespace detail {

inline std::optional<std::pair<std::array<int, 3>, std::array<Brick, 3>>> find_chain(const Brick& b, const Vec3& target) {
  for (int i = 0; i < 8; ++i) {
    const Brick b1 = brick_successors(b)[static_cast<std::size_t>(i)];
    for (int j = 0; j < 8; ++j) {
      const Brick b2 = brick_successors(b1)[static_cast<std::size_t>(j)];
      for (int k = 0; k < 8; ++k) {
        const Brick b3 = brick_successors(b2)[static_cast<std::size_t>(k)];
        if (b3.eta.same_linear(b.eta) && b3.corner() == b.corner() + target)
          return std::make_pair(std::array<int, 3>{i, j, k}, std::array<Brick, 3>{b1, b2, b3});
      }
    }
  }
  return std::nullopt;
}

}  // namespace detail

inline Gadget build_gadget(Coord L, const Vec3& u, const Vec3& u_prime) {
  if (L < 1) throw ParameterError("build_gadget: L must be >= 1");
  Gadget g;
  g.L = L;
  g.base = Brick::canonical(L);
  g.u = u;
  g.u_prime = u_prime;
  const auto a = detail::find_chain(g.base, L * u);
  const auto b = detail::find_chain(g.base, L * u_prime);
  if (!a) throw GeometryError("build_gadget: no three-step chain reaches B + L" + to_string(u));
  if (!b) throw GeometryError("build_gadget: no three-step chain reaches B + L" + to_string(u_prime));
  g.choices = a->first;
  g.chain = a->second;
  g.choices_prime = b->first;
  g.chain_prime = b->second;
  double reach = 0.0;
  for (const auto& br : g.bricks()) {
    const auto bx = br.box();
    for (int i = 0; i < 3; ++i)
      reach = std::max({reach, std::abs(static_cast<double>(bx.lo(i))), std::abs(static_cast<double>(bx.hi(i)))});
  }
  g.C = reach / static_cast<double>(L);
  if (const auto bad = gadget_violations(g); !bad.empty()) throw GeometryError("build_gadget: " + bad.front());
  return g;
}

/// Translation vectors of the figure caption; no chain reaches them.
inline constexpr Vec3 kCaptionU{10, 22, 22};
inline constexpr Vec3 kCaptionUPrime{22, 22, 22};
/// Translation vectors reached by succession chains with B1 = B1'.
inline constexpr Vec3 kGadgetU{10, 10, 22};
inline constexpr Vec3 kGadgetUPrime{22, 10, 22};

inline Gadget build_gadget(Coord L) { return build_gadget(L, kGadgetU, kGadgetUPrime); }

// ---------------------------------------------------------------------------
// Activation.

inline BoxWindow bounding_box(const BoxWindow& a, const BoxWindow& b) {
  Vec3 lo, ext;
  for (int i = 0; i < 3; ++i) {
    lo[i] = std::min(a.lo(i), b.lo(i));
    ext[i] = std::max(a.hi(i), b.hi(i)) - lo[i];
  }
  return box3(lo, ext);
}

inline Configuration crop(const Configuration& cfg, const BoxWindow& w) {
  if (!cfg.window().contains(w)) throw DomainError("crop: " + w.describe() + " not inside " + cfg.window().describe());
  Configuration out(w, SiteState::OpenVacant, cfg.meta());
  w.for_each([&](std::size_t i, std::span<const Coord> x) { out.set(i, cfg.at(x)); });
  return out;
}

/// Head of a sail in world coordinates: cells of proto-sites in layers [L, 2L).
inline std::vector<Vec3> sail_head(const BrickSail& s) {
  std::vector<Vec3> out;
  for (const auto& xh : s.sail.proto) {
    if (xh[2] < s.sail.L) continue;
    cell(s.sail.L, xh).for_each([&](std::size_t, std::span<const Coord> y) {
      out.push_back(s.brick.to_world({y[0], y[1], y[2]}));
    });
  }
  return out;
}

struct ActivationReport {
  bool activated = false;  // head of S' fully occupied at the fixpoint
  BoxWindow region;
  std::size_t head_size = 0, head_prime_size = 0, head_prime_occupied = 0;
  std::uint32_t rounds = 0;
  std::optional<BrickSail> sail, sail_prime;
};

/// Occupies the head of S and runs modified r = 2 dynamics on the bounding box
/// of B and B' with everything outside closed.
inline ActivationReport activation_experiment(const Configuration& cfg, const Brick& b, const Brick& bp,
                                              bool occupy_head = true) {
  if (!is_successor(b, bp)) throw PreconditionError("activation_experiment: B' is not a successor of B");
  auto gb = good_brick(cfg, b);
  if (!gb.sail) throw PreconditionError("activation_experiment: B is not good (" + gb.failure + ")");
  auto gbp = good_brick(cfg, bp);
  if (!gbp.sail) throw PreconditionError("activation_experiment: B' is not good (" + gbp.failure + ")");

  ActivationReport rep;
  rep.region = bounding_box(b.box(), bp.box());
  Configuration work = crop(cfg, rep.region);
  const auto head = sail_head(*gb.sail);
  rep.head_size = head.size();
  if (occupy_head)
    for (const auto& x : head) work.set_at(as_span(x), SiteState::Occupied);
  const auto res = run_fixpoint(work, Rule::modified(2), ClosedOutside{});
  rep.rounds = res.rounds_elapsed;
  const auto head_p = sail_head(*gbp.sail);
  rep.head_prime_size = head_p.size();
  for (const auto& x : head_p) rep.head_prime_occupied += res.final.at(as_span(x)) == SiteState::Occupied;
  rep.activated = rep.head_prime_occupied == rep.head_prime_size;
  rep.sail = std::move(gb.sail);
  rep.sail_prime = std::move(gbp.sail);
  return rep;
}

/// All-open canonical brick whose auxiliary proto-brick carries the staircase
/// sail with one occupied cell above each layer.
inline Configuration planted_canonical_brick(Coord L) {
  Configuration c(box3({0, 0, 0}, Brick::canonical_dims(L)));
  for (Coord k = 0; k + 1 < 2 * L; ++k) {
    // (0, 3L+1-k, k) lies on layer k of the staircase; seed the cell above it.
    cell(L, {0, 3 * L + 1 - k, k + 1}).for_each([&](std::size_t, std::span<const Coord> y) {
      c.set_at(y, SiteState::Occupied);
    });
  }
  return c;
}

/// Writes the planted brick into `cfg` through eta (sites outside cfg are skipped).
inline void plant_brick(Configuration& cfg, const Brick& b) {
  const Configuration canon = planted_canonical_brick(b.L);
  canon.window().for_each([&](std::size_t i, std::span<const Coord> y) {
    if (canon.get(i) != SiteState::Occupied) return;
    const Vec3 x = b.to_world({y[0], y[1], y[2]});
    if (cfg.window().contains(as_span(x))) cfg.set_at(as_span(x), SiteState::Occupied);
  });
}

// ---------------------------------------------------------------------------
// Cut comparison: with everything outside A closed, making F occupied and
// A \ (F u B*) closed can only enlarge the final occupied set inside a
// component B* of A \ F.

inline std::vector<std::vector<std::size_t>> components(const BoxWindow& w, const std::vector<std::uint8_t>& mask) {
  std::vector<std::vector<std::size_t>> out;
  std::vector<std::uint8_t> seen(mask.size(), 0);
  for (std::size_t s = 0; s < mask.size(); ++s) {
    if (!mask[s] || seen[s]) continue;
    std::vector<std::size_t> comp{s};
    seen[s] = 1;
    for (std::size_t h = 0; h < comp.size(); ++h) {
      const auto x = w.point_at(comp[h]);
      for (int a = 0; a < w.dim(); ++a)
        for (Coord d : {-1, 1}) {
          auto y = x;
          y[static_cast<std::size_t>(a)] += d;
          if (!w.contains(y)) continue;
          const std::size_t j = w.index_of(y);
          if (mask[j] && !seen[j]) {
            seen[j] = 1;
            comp.push_back(j);
          }
        }
    }
    out.push_back(std::move(comp));
  }
  return out;
}

/// A and F are masks over cfg's window.
inline bool cut_comparison_test(const std::vector<std::uint8_t>& a, const std::vector<std::uint8_t>& f,
                                const Configuration& cfg, Rule rule) {
  const BoxWindow& w = cfg.window();
  if (a.size() != cfg.size() || f.size() != cfg.size()) throw ParameterError("cut_comparison_test: mask size mismatch");
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (f[i] && !a[i]) throw DomainError("cut_comparison_test: F is not contained in A");
    if (!a[i] && cfg.get(i) != SiteState::Closed)
      throw PreconditionError("cut_comparison_test: site outside A is not closed");
  }
  const auto original = run_fixpoint(cfg, rule);
  std::vector<std::uint8_t> rest(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) rest[i] = a[i] && !f[i];
  for (const auto& comp : components(w, rest)) {
    std::vector<std::uint8_t> in(a.size(), 0);
    for (std::size_t i : comp) in[i] = 1;
    Configuration altered = cfg;
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (f[i]) altered.set(i, SiteState::Occupied);
      else if (a[i] && !in[i]) altered.set(i, SiteState::Closed);
    }
    const auto after = run_fixpoint(altered, rule);
    for (std::size_t i : comp)
      if (original.occupied(i) && !after.occupied(i)) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Stretching: an auxiliary site occupied by modified dynamics (outside the
// proto-brick closed) has its whole cell occupied by modified dynamics on the
// brick (outside closed).

inline bool stretching_check(const Configuration& cfg, Coord L) {
  const Configuration brick = crop(cfg, box3({0, 0, 0}, Brick::canonical_dims(L)));
  const ProtoBrick pb = aux_config(brick, L);
  const auto aux = run_fixpoint(pb.aux, Rule::modified(2), ClosedOutside{});
  const auto orig = run_fixpoint(brick, Rule::modified(2), ClosedOutside{});
  bool ok = true;
  pb.aux.window().for_each([&](std::size_t i, std::span<const Coord> x) {
    if (!ok || !aux.occupied(i)) return;
    cell(L, {x[0], x[1], x[2]}).for_each([&](std::size_t, std::span<const Coord> y) {
      if (orig.final.at(y) != SiteState::Occupied) ok = false;
    });
  });
  return ok;
}

// ---------------------------------------------------------------------------
// Excellent sites and the oriented-percolation comparison.

using Site2 = std::array<Coord, 2>;

inline Vec3 gadget_offset(const Gadget& g, const Site2& a) { return g.L * (a[0] * g.u + a[1] * g.u_prime); }
/// B(a) = B + L a1 u + L a2 u'
inline Brick site_brick(const Gadget& g, const Site2& a) { return g.base.translated(gadget_offset(g, a)); }

struct ExcellentField {
  BoxWindow window;  // two-dimensional
  std::vector<std::uint8_t> flags;
  Gadget gadget;

  bool contains(const Site2& a) const { return window.contains(std::span<const Coord>(a.data(), 2)); }
  bool at(const Site2& a) const { return contains(a) && flags[window.index_of(std::span<const Coord>(a.data(), 2))]; }
  double density() const {
    return flags.empty() ? 0.0
                         : static_cast<double>(std::count(flags.begin(), flags.end(), 1)) / static_cast<double>(flags.size());
  }
};

/// a is excellent when the seven gadget bricks translated to B(a) are all good.
template <class Field>
bool is_excellent(const Field& field, const Gadget& g, const Site2& a) {
  const Gadget t = g.translated(gadget_offset(g, a));
  std::vector<Brick> seen;
  for (const auto& b : t.bricks()) {
    if (std::find(seen.begin(), seen.end(), b) != seen.end()) continue;
    seen.push_back(b);
    if (!good_brick_field(field, b).sail) return false;
  }
  return true;
}

template <class Field>
ExcellentField excellent_field(const Field& field, const Gadget& g, const BoxWindow& window, unsigned workers = 1) {
  if (window.dim() != 2) throw ParameterError("excellent_field: window must be two-dimensional");
  ExcellentField ef{window, {}, g};
  ef.flags = parallel_map(window.size(), workers, [&](std::size_t i) -> std::uint8_t {
    const auto x = window.point_at(i);
    return is_excellent(field, g, {x[0], x[1]});
  });
  return ef;
}

template <class Field>
ExcellentField excellent_field(const Field& field, Coord L, const BoxWindow& window, unsigned workers = 1) {
  return excellent_field(field, build_gadget(L), window, workers);
}

struct PathReport {
  bool from_excellent = false;
  Coord forward_length = 0;           // steps of the longest oriented path from the site
  std::vector<Site2> backward;        // excellent sites with an oriented path to the site
  bool reaches_upper = false;         // forward path to {a1 = hi-1} or {a2 = hi-1}
  bool reaches_lower = false;         // backward path from {a1 = lo} or {a2 = lo}
  bool spanning = false;              // both: finite-window proxy for a bi-infinite path
};

inline PathReport oriented_path_search(const ExcellentField& f, const Site2& from) {
  PathReport rep;
  const BoxWindow& w = f.window;
  rep.from_excellent = f.at(from);
  if (!rep.from_excellent) return rep;
  const Coord lo0 = w.lo(0), lo1 = w.lo(1), hi0 = w.hi(0), hi1 = w.hi(1);
  auto idx = [&](Coord a, Coord b) { return static_cast<std::size_t>((b - lo1) * (hi0 - lo0) + (a - lo0)); };

  // Forward: longest path and reach of the upper faces, sweeping down from the top corner.
  std::vector<Coord> len(w.size(), -1);
  std::vector<std::uint8_t> up(w.size(), 0);
  for (Coord b = hi1 - 1; b >= lo1; --b)
    for (Coord a = hi0 - 1; a >= lo0; --a) {
      if (!f.at({a, b})) continue;
      Coord best = 0;
      bool reach = a == hi0 - 1 || b == hi1 - 1;
      for (const Site2& n : {Site2{a + 1, b}, Site2{a, b + 1}}) {
        if (!f.at(n)) continue;
        best = std::max(best, len[idx(n[0], n[1])] + 1);
        reach = reach || up[idx(n[0], n[1])];
      }
      len[idx(a, b)] = best;
      up[idx(a, b)] = reach;
    }
  rep.forward_length = len[idx(from[0], from[1])];
  rep.reaches_upper = up[idx(from[0], from[1])];

  // Backward set.
  std::vector<std::uint8_t> seen(w.size(), 0);
  std::deque<Site2> queue{from};
  seen[idx(from[0], from[1])] = 1;
  while (!queue.empty()) {
    const Site2 s = queue.front();
    queue.pop_front();
    rep.backward.push_back(s);
    if (s[0] == lo0 || s[1] == lo1) rep.reaches_lower = true;
    for (const Site2& n : {Site2{s[0] - 1, s[1]}, Site2{s[0], s[1] - 1}})
      if (f.at(n) && !seen[idx(n[0], n[1])]) {
        seen[idx(n[0], n[1])] = 1;
        queue.push_back(n);
      }
  }
  rep.spanning = rep.reaches_upper && rep.reaches_lower;
  return rep;
}

/// An oriented path of excellent sites from `start` to `target`, empty if none.
inline std::vector<Site2> oriented_path(const ExcellentField& f, const Site2& start, const Site2& target) {
  if (!f.at(start) || !f.at(target)) return {};
  std::vector<Site2> path{start};
  // Greedy with lookahead through a reachability table toward the target.
  const BoxWindow& w = f.window;
  auto idx = [&](const Site2& s) { return w.index_of(std::span<const Coord>(s.data(), 2)); };
  std::vector<std::uint8_t> reach(w.size(), 0);
  for (Coord b = target[1]; b >= start[1]; --b)
    for (Coord a = target[0]; a >= start[0]; --a) {
      const Site2 s{a, b};
      if (!f.at(s)) continue;
      reach[idx(s)] = (s == target) || (a < target[0] && reach[idx({a + 1, b})]) || (b < target[1] && reach[idx({a, b + 1})]);
    }
  if (!reach[idx(start)]) return {};
  Site2 s = start;
  while (s != target) {
    const Site2 r{s[0] + 1, s[1]};
    s = (s[0] < target[0] && reach[idx(r)]) ? r : Site2{s[0], s[1] + 1};
    path.push_back(s);
  }
  return path;
}

// ---------------------------------------------------------------------------
// Nucleation.

enum class NucleationStatus { Activated, NotActivated, Inconclusive };

inline const char* to_string(NucleationStatus s) {
  switch (s) {
    case NucleationStatus::Activated: return "activated";
    case NucleationStatus::NotActivated: return "not-activated";
    default: return "inconclusive";
  }
}

struct NucleationReport {
  NucleationStatus status = NucleationStatus::Inconclusive;
  std::optional<Site2> nucleus;
  std::vector<Site2> path;           // nucleus -> target
  std::vector<Brick> activated;      // bricks whose sail head became occupied, in order
  std::size_t links = 0;             // |> links simulated
  std::string message;
};

/// Every open site of the brick occupied in the level-2 field.
template <class Field>
bool brick_fully_occupied(const Field& field, const Brick& b) {
  bool ok = true;
  const BoxWindow box = b.box();
  box.for_each([&](std::size_t, std::span<const Coord> x) {
    if (ok && field.state_at(x) == SiteState::OpenVacant) ok = false;
  });
  return ok;
}

/// Level-1 field decides excellence; level-2 field (after sprinkling) is
/// scanned along the backward set of `target` for a fully occupied brick
/// B(a), from which activation is chained brick by brick to B(target).
template <class Field1, class Field2>
NucleationReport nucleation_experiment(const Field1& level1, const Field2& level2, const ExcellentField& field,
                                       const Site2& target) {
  (void)level1;
  const Gadget& g = field.gadget;
  const PathReport pr = oriented_path_search(field, target);
  if (!pr.from_excellent) throw PreconditionError("nucleation_experiment: target site is not excellent");
  NucleationReport rep;
  // Nearest sites first (largest a1 + a2), ties by a1.
  auto order = pr.backward;
  std::sort(order.begin(), order.end(), [](const Site2& x, const Site2& y) {
    return x[0] + x[1] != y[0] + y[1] ? x[0] + x[1] > y[0] + y[1] : x < y;
  });
  for (const auto& a : order)
    if (brick_fully_occupied(level2, site_brick(g, a))) {
      rep.nucleus = a;
      break;
    }
  if (!rep.nucleus) {
    rep.message = "no fully occupied brick on the backward path";
    return rep;
  }
  rep.path = oriented_path(field, *rep.nucleus, target);
  rep.activated.push_back(site_brick(g, *rep.nucleus));
  for (std::size_t i = 0; i + 1 < rep.path.size(); ++i) {
    const Site2 a = rep.path[i], b = rep.path[i + 1];
    const Gadget t = g.translated(gadget_offset(g, a));
    const auto& links = (b[0] == a[0] + 1) ? t.chain : t.chain_prime;
    Brick prev = t.base;
    for (const auto& next : links) {
      const Configuration region = materialize(level2, bounding_box(prev.box(), next.box()));
      const auto r = activation_experiment(region, prev, next);
      ++rep.links;
      if (!r.activated) {
        rep.status = NucleationStatus::NotActivated;
        rep.message = "activation stopped at " + next.describe();
        return rep;
      }
      rep.activated.push_back(next);
      prev = next;
    }
  }
  rep.status = NucleationStatus::Activated;
  return rep;
}

/// Convenience form: level 2 sprinkles each vacant site of level 1 to occupied
/// with conditional probability `sprinkle_p`.
inline NucleationReport nucleation_experiment(const ProductSampler& level1, const ExcellentField& field,
                                              const Site2& target, double sprinkle_p) {
  if (sprinkle_p < 0.0 || sprinkle_p > 1.0) throw ParameterError("nucleation_experiment: sprinkle_p must be in [0,1]");
  const double extra = sprinkle_p * (1.0 - level1.p - level1.q);
  const auto level2 = sprinkled(level1, extra);
  return nucleation_experiment(level1, level2, field, target);
}

}  // namespace pbp
