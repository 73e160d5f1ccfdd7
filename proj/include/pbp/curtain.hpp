#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <concepts>
#include <deque>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "pbp/dynamics.hpp"
#include "pbp/geometry.hpp"
#include "pbp/parallel.hpp"
#include "pbp/random.hpp"
#include "pbp/stats.hpp"

namespace pbp {

enum class StepKind { Free, Taxed };

inline constexpr std::array<Vec3, 6> kFreeSteps{{{-1, 0, 0}, {0, -1, 0}, {0, 0, -1}, {-2, 1, 0}, {1, -2, 0}, {-1, -1, 1}}};
inline constexpr Vec3 kTaxedStep{1, 1, 0};
inline constexpr Vec3 kNormal{1, 1, 1};

template <class F>
concept ClosedField = requires(const F& f, std::span<const Coord> x) {
  { f.closed(x) } -> std::convertible_to<bool>;
};

inline std::span<const Coord> as_span(const Vec3& v) { return {v.data(), 3}; }

using SiteSet = std::unordered_set<Vec3, Vec3Hash>;

// Sites reachable by permissible paths from H = {x : x1+x2+x3 <= level}, with
// membership outside H restricted to the padded window.
struct ReachSet {
  BoxWindow window;
  Coord margin = 0;
  BoxWindow padded;
  Coord level = 0;
  SiteSet extra;                                  // members outside H
  std::unordered_map<Vec3, Vec3, Vec3Hash> parent;  // predecessor on a recorded permissible path

  bool in_source(const Vec3& x) const { return sum(x) <= level; }
  bool contains(const Vec3& x) const { return in_source(x) || extra.count(x) > 0; }
};

/// Recorded permissible path from the source to x (source site first).
struct PermissiblePath {
  std::vector<Vec3> sites;
  int free_steps = 0;
  int taxed_steps = 0;
};

inline PermissiblePath recorded_path(const ReachSet& a, const Vec3& x) {
  if (!a.contains(x)) throw DomainError("recorded_path: site " + to_string(x) + " not reachable");
  PermissiblePath path;
  Vec3 cur = x;
  path.sites.push_back(cur);
  while (!a.in_source(cur)) {
    const Vec3 prev = a.parent.at(cur);
    (cur - prev == kTaxedStep ? path.taxed_steps : path.free_steps) += 1;
    cur = prev;
    path.sites.push_back(cur);
  }
  std::reverse(path.sites.begin(), path.sites.end());
  return path;
}

/// Least fixpoint of the permissible-step closure inside window.grown(margin).
template <ClosedField Field>
ReachSet reachable_set(const Field& field, const BoxWindow& window, Coord margin, Coord level = 0) {
  if (window.dim() != 3) throw DomainError("reachable_set: requires d = 3");
  if (margin < 1) throw ParameterError("reachable_set: margin must be >= 1");
  ReachSet a;
  a.window = window;
  a.margin = margin;
  a.padded = window.grown(margin);
  a.level = level;
  const BoxWindow& pad = a.padded;
  std::deque<Vec3> queue;
  auto add = [&](const Vec3& y, const Vec3& from) {
    if (a.extra.insert(y).second) {
      a.parent.emplace(y, from);
      queue.push_back(y);
    }
  };
  // Entry points: closed sites one taxed step above H.
  for (Coord x1 = pad.lo(0); x1 < pad.hi(0); ++x1)
    for (Coord x2 = pad.lo(1); x2 < pad.hi(1); ++x2)
      for (Coord s : {level + 1, level + 2}) {
        const Vec3 c{x1, x2, s - x1 - x2};
        if (c[2] < pad.lo(2) || c[2] >= pad.hi(2)) continue;
        if (field.closed(as_span(c))) add(c, c - kTaxedStep);
      }
  while (!queue.empty()) {
    const Vec3 x = queue.front();
    queue.pop_front();
    for (const Vec3& s : kFreeSteps) {
      const Vec3 y = x + s;
      if (sum(y) > level && pad.contains(as_span(y))) add(y, x);
    }
    const Vec3 y = x + kTaxedStep;
    if (pad.contains(as_span(y)) && !a.extra.count(y) && field.closed(as_span(y))) add(y, x);
  }
  return a;
}

// ---------------------------------------------------------------------------

struct CurtainLayer {
  Coord k = 0;
  std::vector<Vec3> path;  // ordered along steps e1 / -e2
  bool truncated = false;
};

struct Curtain {
  BoxWindow window;
  std::vector<CurtainLayer> layers;  // ascending k, only layers meeting the window
  SiteSet sites;

  bool empty() const { return sites.empty(); }
  bool contains(const Vec3& x) const { return sites.count(x) > 0; }
  const CurtainLayer* layer(Coord k) const {
    for (const auto& l : layers)
      if (l.k == k) return &l;
    return nullptr;
  }
};

/// Orders sites of one layer along the path direction (u = x1 - x2 increases by one per step).
inline void sort_along_path(std::vector<Vec3>& v) {
  std::sort(v.begin(), v.end(), [](const Vec3& a, const Vec3& b) {
    return a[0] - a[1] < b[0] - b[1] || (a[0] - a[1] == b[0] - b[1] && a < b);
  });
}

/// Builds a curtain from explicit sites; layers assembled by sorting along the path.
inline Curtain curtain_from_sites(const BoxWindow& window, const std::vector<Vec3>& sites) {
  Curtain c;
  c.window = window;
  std::map<Coord, std::vector<Vec3>> by_layer;
  for (const auto& x : sites) {
    if (c.sites.insert(x).second) by_layer[x[2]].push_back(x);
  }
  for (auto& [k, v] : by_layer) {
    sort_along_path(v);
    c.layers.push_back({k, std::move(v), false});
  }
  return c;
}

/// D = {x not in A : x - (1,1,0) in A}, restricted to A's window and assembled into layer paths.
inline Curtain curtain_boundary(const ReachSet& a) {
  const BoxWindow& w = a.window;
  Curtain c;
  c.window = w;
  std::map<Coord, std::vector<Vec3>> by_layer;
  w.for_each([&](std::size_t, std::span<const Coord> xs) {
    const Vec3 x{xs[0], xs[1], xs[2]};
    if (!a.contains(x) && a.contains(x - kTaxedStep)) {
      c.sites.insert(x);
      by_layer[x[2]].push_back(x);
    }
  });
  for (auto& [k, layer_sites] : by_layer) {
    CurtainLayer layer{k, {}, false};
    std::optional<Vec3> start;
    for (const auto& x : layer_sites)
      if (x[0] == x[1]) {
        start = x;
        break;
      }
    if (!start) {
      layer.truncated = true;
      sort_along_path(layer_sites);
      start = layer_sites.front();
    }
    // Greedy extension: exactly one of z+e1, z-e2 follows z; one of z-e1, z+e2 precedes it.
    std::deque<Vec3> path{*start};
    for (Vec3 z = *start;;) {
      if (c.contains(z + Vec3{1, 0, 0})) z = z + Vec3{1, 0, 0};
      else if (c.contains(z - Vec3{0, 1, 0})) z = z - Vec3{0, 1, 0};
      else break;
      path.push_back(z);
    }
    for (Vec3 z = *start;;) {
      if (c.contains(z - Vec3{1, 0, 0})) z = z - Vec3{1, 0, 0};
      else if (c.contains(z + Vec3{0, 1, 0})) z = z + Vec3{0, 1, 0};
      else break;
      path.push_front(z);
    }
    layer.path.assign(path.begin(), path.end());
    if (layer.path.size() != layer_sites.size()) layer.truncated = true;
    c.layers.push_back(std::move(layer));
  }
  return c;
}

struct StableCurtain {
  ReachSet reach;
  Curtain curtain;
  bool stable = false;
  Coord margin = 0;
};

/// Margin stabilization: accept once D within the window agrees for margins m and 2m;
/// otherwise keep doubling up to 8x the window's largest extent and flag instability.
template <ClosedField Field>
StableCurtain stabilized_curtain(const Field& field, const BoxWindow& window, Coord level = 0, Coord m0 = 4) {
  const Coord cap = 8 * window.max_extent();
  Coord m = std::max<Coord>(1, m0);
  ReachSet a = reachable_set(field, window, m, level);
  Curtain d = curtain_boundary(a);
  while (2 * m <= cap) {
    ReachSet a2 = reachable_set(field, window, 2 * m, level);
    Curtain d2 = curtain_boundary(a2);
    const bool same = d.sites == d2.sites;
    m *= 2;
    a = std::move(a2);
    d = std::move(d2);
    if (same) return {std::move(a), std::move(d), true, m};
  }
  return {std::move(a), std::move(d), false, m};
}

// ---------------------------------------------------------------------------

struct LayerCheck {
  Coord k = 0;
  bool truncated = false;
  bool single_path = true;
  bool step_alphabet = true;
  bool no_triple = true;
  bool unique_diagonal = true;  // not evaluated on truncated layers
};

struct ValidationReport {
  std::vector<LayerCheck> layers;
  bool c2 = true;
  std::vector<Vec3> c2_failures;
  bool open = true;
  std::vector<Vec3> closed_sites;

  bool ok() const {
    if (!c2 || !open) return false;
    for (const auto& l : layers)
      if (!l.single_path || !l.step_alphabet || !l.no_triple || (!l.truncated && !l.unique_diagonal)) return false;
    return true;
  }

  std::string first_failure() const {
    for (const auto& l : layers) {
      const std::string at = " at layer " + std::to_string(l.k);
      if (!l.single_path) return "single-path" + at;
      if (!l.step_alphabet) return "step-alphabet" + at;
      if (!l.no_triple) return "three-consecutive-steps" + at;
      if (!l.truncated && !l.unique_diagonal) return "diagonal" + at;
    }
    if (!c2) return "C2 at " + to_string(c2_failures.front());
    if (!open) return "closed site " + to_string(closed_sites.front());
    return "";
  }
};

namespace detail {

inline void check_layer(std::vector<Vec3> v, LayerCheck& lc) {
  sort_along_path(v);
  int diag = 0;
  int run = 0;
  Vec3 last_step{0, 0, 0};
  for (std::size_t i = 0; i < v.size(); ++i) {
    diag += v[i][0] == v[i][1];
    if (i == 0) continue;
    const Vec3 step = v[i] - v[i - 1];
    const Coord du = step[0] - step[1];
    if (du != 1) lc.single_path = false;
    const bool unit = step == Vec3{1, 0, 0} || step == Vec3{0, -1, 0};
    if (!unit) {
      lc.step_alphabet = false;
      run = 0;
      continue;
    }
    run = step == last_step ? run + 1 : 1;
    last_step = step;
    if (run >= 3) lc.no_triple = false;
  }
  lc.unique_diagonal = diag == 1;
}

}  // namespace detail

/// Checks every curtain property that can be decided inside the curtain's window.
/// (C2) is only judged where both of its witnesses lie in the window.
inline ValidationReport validate_curtain(const Curtain& d) {
  ValidationReport rep;
  std::map<Coord, std::vector<Vec3>> by_layer;
  for (const auto& x : d.sites) by_layer[x[2]].push_back(x);
  for (auto& [k, v] : by_layer) {
    LayerCheck lc;
    lc.k = k;
    if (const auto* l = d.layer(k)) lc.truncated = l->truncated;
    detail::check_layer(v, lc);
    rep.layers.push_back(lc);
  }
  std::vector<Vec3> sorted(d.sites.begin(), d.sites.end());
  std::sort(sorted.begin(), sorted.end());
  for (const auto& x : sorted) {
    const Vec3 w1 = x + Vec3{0, 0, -1};
    const Vec3 w2 = x + Vec3{1, 1, -1};
    if (d.contains(w1) || d.contains(w2)) continue;
    if (d.window.contains(as_span(w1)) && d.window.contains(as_span(w2))) {
      rep.c2 = false;
      rep.c2_failures.push_back(x);
    }
  }
  return rep;
}

/// As above, plus openness of every curtain site in the given field.
template <ClosedField Field>
ValidationReport validate_curtain(const Curtain& d, const Field& field) {
  ValidationReport rep = validate_curtain(d);
  std::vector<Vec3> sorted(d.sites.begin(), d.sites.end());
  std::sort(sorted.begin(), sorted.end());
  for (const auto& x : sorted)
    if (field.closed(as_span(x))) {
      rep.open = false;
      rep.closed_sites.push_back(x);
    }
  return rep;
}

// ---------------------------------------------------------------------------
// Growth on a curtain under the modified r = 2 rule, inside cfg's window with
// everything outside closed.

struct GrowthReport {
  bool preconditions_ok = false;
  std::string failed_hypothesis;
  std::optional<Vec3> failed_site;
  std::vector<bool> layer_occupied;  // index k = 0..k_max
  bool all_occupied = false;
};

inline GrowthReport curtain_growth_experiment(const Curtain& d, const Configuration& cfg, Coord k_max) {
  GrowthReport rep;
  const BoxWindow& w = cfg.window();
  if (w.dim() != 3) throw DomainError("curtain_growth_experiment: requires d = 3");
  auto fail = [&](std::string what, std::optional<Vec3> site) {
    rep.failed_hypothesis = std::move(what);
    rep.failed_site = site;
    return rep;
  };
  auto state = [&](const Vec3& x) { return cfg.state_or(as_span(x), SiteState::Closed); };

  for (Coord k = 0; k <= k_max; ++k) {
    const CurtainLayer* layer = d.layer(k);
    if (!layer || layer->path.empty()) return fail("layer " + std::to_string(k) + " of the curtain is empty", std::nullopt);
    if (layer->truncated) return fail("layer " + std::to_string(k) + " is truncated", layer->path.front());
    // The in-window argument needs each layer to run from the x1-min face to the
    // x2-min face, clear of the opposite faces.
    const Vec3& first = layer->path.front();
    const Vec3& last = layer->path.back();
    if (first[0] != w.lo(0) || last[1] != w.lo(1))
      return fail("layer " + std::to_string(k) + " does not span from the x1-min face to the x2-min face", first);
    for (const auto& x : layer->path)
      if (x[0] >= w.hi(0) - 1 || x[1] >= w.hi(1) - 1)
        return fail("layer " + std::to_string(k) + " touches an upper window face", x);
  }
  for (const auto& x : d.layer(0)->path)
    if (state(x) != SiteState::Occupied) return fail("bottom layer not fully occupied", x);
  for (Coord k = 0; k < k_max; ++k) {
    for (const auto& x : d.layer(k)->path)
      for (const Vec3& y : {x, x + Vec3{0, 0, 1}, x + Vec3{-1, -1, 1}})
        if (w.contains(as_span(y)) && state(y) == SiteState::Closed) return fail("open-site hypothesis", y);
    bool seeded = false;
    for (const auto& x : d.layer(k)->path) seeded = seeded || state(x + Vec3{0, 0, 1}) == SiteState::Occupied;
    if (!seeded)
      return fail("no occupied site above layer " + std::to_string(k), d.layer(k)->path.front() + Vec3{0, 0, 1});
  }
  for (Coord k = 1; k <= k_max; ++k)
    for (const auto& x : d.layer(k)->path)
      if (!d.contains(x + Vec3{0, 0, -1}) && !d.contains(x + Vec3{1, 1, -1})) return fail("C2 inside the curtain", x);

  rep.preconditions_ok = true;
  const auto res = run_fixpoint(cfg, Rule::modified(2), ClosedOutside{});
  rep.all_occupied = true;
  for (Coord k = 0; k <= k_max; ++k) {
    bool full = true;
    for (const auto& x : d.layer(k)->path) full = full && res.final.at(as_span(x)) == SiteState::Occupied;
    rep.layer_occupied.push_back(full);
    rep.all_occupied = rep.all_occupied && full;
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Monte Carlo statistics of the curtain through the diagonal {(t,t,0)}.

struct TailStats {
  double q = 0.0;
  std::size_t trials = 0;
  std::size_t stabilized = 0;
  Proportion not_at_11;             // P((1,1,0) not in D)
  std::vector<Proportion> tail;     // tail[k-1]: P(D meets {(t,t,0) : t > k}), k = 1..k_max
  std::optional<double> log_slope;  // least squares on log tail, k = 0 anchor included
  double bound_56q = 0.0;
  bool bound_ok = false;
  bool tail_nonincreasing = false;
  double runtime_s = 0.0;
};

struct CurtainStatsSpec {
  double q = 0.001;
  Coord k_max = 6;
  std::size_t trials = 10000;
  std::uint64_t seed = 1;
  unsigned workers = 1;
  Coord initial_margin = 4;
};

/// Window used for the diagonal statistics: a flat slab around the ray.
inline BoxWindow diagonal_window(Coord k_max) { return box3({-2, -2, -1}, {k_max + 6, k_max + 6, 3}); }

inline TailStats curtain_statistics(const CurtainStatsSpec& spec) {
  check_probabilities(0.0, spec.q);
  if (spec.trials < 1 || spec.k_max < 1) throw ParameterError("curtain_statistics: trials and k_max must be >= 1");
  const auto t0 = std::chrono::steady_clock::now();
  const BoxWindow window = diagonal_window(spec.k_max);
  struct Outcome {
    std::uint8_t stable = 0;
    Coord first_out = 0;  // first t >= 1 with (t,t,0) not in A
  };
  auto outcomes = parallel_map(spec.trials, spec.workers, [&](std::size_t t) {
    const ProductSampler field(CouplingSource{trial_seed(spec.seed, t)}, 0.0, spec.q);
    const auto sc = stabilized_curtain(field, window, 0, spec.initial_margin);
    Outcome o;
    o.stable = sc.stable;
    o.first_out = 1;
    while (o.first_out <= spec.k_max + 1 && sc.reach.contains({o.first_out, o.first_out, 0})) ++o.first_out;
    return o;
  });
  TailStats s;
  s.q = spec.q;
  s.trials = spec.trials;
  std::vector<std::size_t> hits(static_cast<std::size_t>(spec.k_max), 0);
  for (const auto& o : outcomes) {
    if (!o.stable) continue;
    ++s.stabilized;
    for (Coord k = 1; k <= spec.k_max; ++k)
      if (o.first_out > k) ++hits[static_cast<std::size_t>(k - 1)];
  }
  for (std::size_t h : hits) s.tail.push_back(wilson(h, s.stabilized));
  s.not_at_11 = s.tail.front();
  s.bound_56q = 56.0 * spec.q;
  s.bound_ok = s.not_at_11.estimate <= s.bound_56q + s.not_at_11.half_width();
  s.tail_nonincreasing = true;
  for (std::size_t i = 1; i < s.tail.size(); ++i)
    s.tail_nonincreasing = s.tail_nonincreasing && s.tail[i].estimate <= s.tail[i - 1].estimate;
  std::vector<double> xs{0.0}, ys{0.0};
  for (std::size_t i = 0; i < s.tail.size(); ++i)
    if (s.tail[i].successes > 0) {
      xs.push_back(static_cast<double>(i + 1));
      ys.push_back(std::log(s.tail[i].estimate));
    }
  s.log_slope = ls_slope(xs, ys);
  s.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return s;
}

}  // namespace pbp
