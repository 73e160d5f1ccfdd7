#pragma once

#include <bit>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <string>
#include <variant>
#include <vector>

#include "pbp/lattice.hpp"
#include "pbp/parallel.hpp"
#include "pbp/random.hpp"
#include "pbp/stats.hpp"

namespace pbp {

enum class RuleVariant { Standard, Modified };

// Standard: a vacant site fills once >= r of its 2d neighbours are occupied.
// Modified: once >= r coordinate directions have an occupied neighbour on either side.
struct Rule {
  RuleVariant variant = RuleVariant::Standard;
  int r = 2;

  static Rule standard(int r) { return {RuleVariant::Standard, r}; }
  static Rule modified(int r) { return {RuleVariant::Modified, r}; }

  friend bool operator==(const Rule&, const Rule&) = default;
};

inline const char* to_string(RuleVariant v) { return v == RuleVariant::Standard ? "standard" : "modified"; }

struct ClosedOutside {};
/// Outside the window, sites with x[axis] <= level are Occupied and all others Closed.
struct OccupiedLowerHalfSpace {
  int axis = 2;
  Coord level = -1;
};
/// Outside sites take their state from a configuration on window.grown(1); frame
/// vacancies never evolve.
struct CustomFrame {
  Configuration frame;
};
using BoundaryPolicy = std::variant<ClosedOutside, OccupiedLowerHalfSpace, CustomFrame>;

struct EvolutionResult {
  static constexpr std::uint32_t kNever = std::numeric_limits<std::uint32_t>::max();

  Configuration final;
  std::vector<std::uint32_t> rounds;  // per window index; 0 = initially occupied
  std::uint32_t rounds_elapsed = 0;

  std::uint32_t round_at(std::span<const Coord> x) const { return rounds[final.window().index_of(x)]; }
  bool occupied(std::size_t i) const { return final.get(i) == SiteState::Occupied; }
};

namespace detail {

// Code 3 marks frame sites that count as neither occupied nor evolvable.
inline constexpr std::uint8_t kInert = 3;
inline constexpr std::uint8_t kVac = static_cast<std::uint8_t>(SiteState::OpenVacant);
inline constexpr std::uint8_t kOcc = static_cast<std::uint8_t>(SiteState::Occupied);

struct PaddedGrid {
  BoxWindow padded;
  std::vector<std::uint8_t> state;
  std::vector<std::size_t> interior;  // padded index of window site i
  std::vector<std::ptrdiff_t> offsets;  // (-stride_a, +stride_a) for each axis a
};

inline std::uint8_t frame_code(const BoundaryPolicy& bp, std::span<const Coord> x) {
  if (std::holds_alternative<ClosedOutside>(bp)) return static_cast<std::uint8_t>(SiteState::Closed);
  if (const auto* h = std::get_if<OccupiedLowerHalfSpace>(&bp))
    return x[h->axis] <= h->level ? kOcc : static_cast<std::uint8_t>(SiteState::Closed);
  const auto& f = std::get<CustomFrame>(bp).frame;
  const SiteState s = f.at(x);
  return s == SiteState::OpenVacant ? kInert : static_cast<std::uint8_t>(s);
}

inline PaddedGrid make_grid(const Configuration& cfg, const BoundaryPolicy& bp) {
  const BoxWindow& w = cfg.window();
  PaddedGrid g;
  g.padded = w.grown(1);
  if (const auto* f = std::get_if<CustomFrame>(&bp)) {
    if (!(f->frame.window() == g.padded)) throw ParameterError("CustomFrame: frame window must equal window grown by 1");
  }
  if (const auto* h = std::get_if<OccupiedLowerHalfSpace>(&bp)) {
    if (h->axis < 0 || h->axis >= w.dim()) throw ParameterError("OccupiedLowerHalfSpace: axis out of range");
  }
  g.state.assign(g.padded.size(), 0);
  g.padded.for_each([&](std::size_t i, std::span<const Coord> x) {
    if (!w.contains(x)) g.state[i] = frame_code(bp, x);
  });
  g.interior.resize(w.size());
  w.for_each([&](std::size_t i, std::span<const Coord> x) {
    const std::size_t v = g.padded.index_of(x);
    g.interior[i] = v;
    g.state[v] = static_cast<std::uint8_t>(cfg.get(i));
  });
  for (int a = 0; a < w.dim(); ++a) {
    const auto s = static_cast<std::ptrdiff_t>(g.padded.stride(a));
    g.offsets.push_back(-s);
    g.offsets.push_back(s);
  }
  return g;
}

// Accumulator of occupied-neighbour evidence: a count (Standard) or a
// per-axis bitmask (Modified).
inline std::uint32_t add_evidence(RuleVariant v, std::uint32_t acc, std::size_t offset_slot) {
  return v == RuleVariant::Standard ? acc + 1 : acc | (1u << (offset_slot / 2));
}

inline bool fires(const Rule& rule, std::uint32_t acc) {
  const int have = rule.variant == RuleVariant::Standard ? static_cast<int>(acc) : std::popcount(acc);
  return have >= rule.r;
}

inline EvolutionResult extract(const Configuration& cfg, const PaddedGrid& g, const std::vector<std::uint32_t>& round,
                               std::uint32_t elapsed) {
  EvolutionResult res{cfg, std::vector<std::uint32_t>(cfg.size(), EvolutionResult::kNever), elapsed};
  for (std::size_t i = 0; i < g.interior.size(); ++i) {
    const std::size_t v = g.interior[i];
    res.rounds[i] = round[v];
    if (round[v] != EvolutionResult::kNever) res.final.set(i, SiteState::Occupied);
  }
  return res;
}

}  // namespace detail

/// Least fixpoint of synchronous rule application, with the round at which
/// each site was first occupied.  Frontier-queue engine: each round only the
/// neighbours of the previous round's newly occupied sites are touched.
inline EvolutionResult run_fixpoint(const Configuration& cfg, Rule rule, const BoundaryPolicy& boundary = ClosedOutside{}) {
  using detail::kOcc;
  using detail::kVac;
  auto g = detail::make_grid(cfg, boundary);
  std::vector<std::uint32_t> round(g.state.size(), EvolutionResult::kNever);
  std::vector<std::uint32_t> acc(g.state.size(), 0);
  std::vector<std::size_t> frontier, next;

  for (std::size_t v : g.interior) {
    if (g.state[v] == kOcc) {
      round[v] = 0;
      continue;
    }
    if (g.state[v] != kVac) continue;
    std::uint32_t a = 0;
    for (std::size_t s = 0; s < g.offsets.size(); ++s)
      if (g.state[v + g.offsets[s]] == kOcc) a = detail::add_evidence(rule.variant, a, s);
    acc[v] = a;
    if (detail::fires(rule, a)) frontier.push_back(v);
  }
  std::uint32_t elapsed = 0;
  for (std::size_t v : frontier) {
    g.state[v] = kOcc;
    round[v] = 1;
  }
  if (!frontier.empty()) elapsed = 1;

  for (std::uint32_t t = 1; !frontier.empty(); ++t) {
    next.clear();
    for (std::size_t v : frontier) {
      for (std::size_t s = 0; s < g.offsets.size(); ++s) {
        const std::size_t w = v + g.offsets[s];
        if (g.state[w] != kVac) continue;
        // Evidence arrives from the opposite side of w.
        acc[w] = detail::add_evidence(rule.variant, acc[w], s ^ 1);
        if (detail::fires(rule, acc[w])) {
          g.state[w] = kOcc;
          round[w] = t + 1;
          next.push_back(w);
        }
      }
    }
    if (!next.empty()) elapsed = t + 1;
    frontier.swap(next);
  }
  return detail::extract(cfg, g, round, elapsed);
}

inline constexpr Coord kBruteForceMaxVolume = 1'000'000;

/// Oracle: full synchronous sweeps until nothing changes.
inline EvolutionResult brute_force_fixpoint(const Configuration& cfg, Rule rule,
                                            const BoundaryPolicy& boundary = ClosedOutside{}) {
  if (cfg.window().volume() > kBruteForceMaxVolume)
    throw SizeError("brute_force_fixpoint: window volume " + std::to_string(cfg.window().volume()) + " exceeds " +
                    std::to_string(kBruteForceMaxVolume));
  using detail::kOcc;
  using detail::kVac;
  auto g = detail::make_grid(cfg, boundary);
  std::vector<std::uint32_t> round(g.state.size(), EvolutionResult::kNever);
  for (std::size_t v : g.interior)
    if (g.state[v] == kOcc) round[v] = 0;
  std::uint32_t elapsed = 0;
  std::vector<std::size_t> changes;
  for (std::uint32_t t = 1;; ++t) {
    changes.clear();
    for (std::size_t v : g.interior) {
      if (g.state[v] != kVac) continue;
      std::uint32_t a = 0;
      for (std::size_t s = 0; s < g.offsets.size(); ++s)
        if (g.state[v + g.offsets[s]] == kOcc) a = detail::add_evidence(rule.variant, a, s);
      if (detail::fires(rule, a)) changes.push_back(v);
    }
    if (changes.empty()) break;
    for (std::size_t v : changes) {
      g.state[v] = kOcc;
      round[v] = t;
    }
    elapsed = t;
  }
  return detail::extract(cfg, g, round, elapsed);
}

// ---------------------------------------------------------------------------
// Blocking certificate for the standard r = 2 rule.

enum class CertificateStatus { Certified, NotCertified, Indeterminate, Unsupported };

inline const char* to_string(CertificateStatus s) {
  switch (s) {
    case CertificateStatus::Certified: return "certified";
    case CertificateStatus::NotCertified: return "not-certified";
    case CertificateStatus::Indeterminate: return "indeterminate";
    case CertificateStatus::Unsupported: return "unsupported";
  }
  return "?";
}

struct Certificate {
  CertificateStatus status = CertificateStatus::NotCertified;
  std::vector<Point> cluster;   // Z: 3-open cluster of the origin in the adjusted configuration
  std::vector<Point> boundary;  // external boundary of Z
  std::string reason;

  explicit operator bool() const { return status == CertificateStatus::Certified; }
};

/// When certified, no site of Z or its external boundary is ever occupied, so
/// the origin never is.  The adjusted configuration opens the origin and its
/// 2d neighbours; a site is 3-open if open with at least three open neighbours.
inline Certificate blocked_certificate(const Configuration& cfg, Rule rule = Rule::standard(2)) {
  const BoxWindow& w = cfg.window();
  const int d = w.dim();
  Certificate cert;
  if (d < 2) throw DomainError("blocked_certificate: requires d >= 2");
  if (rule != Rule::standard(2)) {
    cert.status = CertificateStatus::Unsupported;
    cert.reason = "only the standard r = 2 rule is supported";
    return cert;
  }
  const Point origin(static_cast<std::size_t>(d), 0);
  if (!w.contains(origin)) throw DomainError("blocked_certificate: origin outside window");
  if (cfg.at(origin) == SiteState::Occupied) {
    cert.reason = "origin initially occupied";
    return cert;
  }

  auto near_origin = [&](std::span<const Coord> x) {
    Coord l1 = 0;
    for (Coord c : x) l1 += c < 0 ? -c : c;
    return l1 <= 1;
  };
  // Only called on window sites.
  auto open_adj = [&](std::span<const Coord> x) { return near_origin(x) || cfg.at(x) != SiteState::Closed; };
  auto three_open = [&](const Point& x) {
    if (!open_adj(x)) return false;
    int n = 0;
    Point y = x;
    for (int a = 0; a < d; ++a)
      for (Coord s : {-1, 1}) {
        y[a] = x[a] + s;
        n += open_adj(y);
        y[a] = x[a];
      }
    return n >= 3;
  };

  if (w.on_frame(origin)) {
    cert.status = CertificateStatus::Indeterminate;
    cert.reason = "origin on window frame";
    return cert;
  }
  std::vector<std::uint8_t> mark(w.size(), 0);  // 1 = in Z, 2 = in boundary
  std::deque<Point> queue{origin};
  mark[w.index_of(origin)] = 1;
  while (!queue.empty()) {
    Point x = queue.front();
    queue.pop_front();
    cert.cluster.push_back(x);
    Point y = x;
    for (int a = 0; a < d; ++a)
      for (Coord s : {-1, 1}) {
        y[a] = x[a] + s;
        const std::size_t j = w.index_of(y);
        if (!mark[j]) {
          if (w.on_frame(y) && open_adj(y)) {
            cert.status = CertificateStatus::Indeterminate;
            cert.reason = "cluster reaches window frame";
            return cert;
          }
          if (three_open(y)) {
            mark[j] = 1;
            queue.push_back(y);
          } else {
            mark[j] = 2;
            cert.boundary.push_back(y);
          }
        }
        y[a] = x[a];
      }
  }
  for (const auto& x : cert.cluster)
    if (cfg.at(x) == SiteState::Occupied) {
      cert.reason = "initially occupied site in cluster";
      return cert;
    }
  for (const auto& x : cert.boundary) {
    if (cfg.at(x) == SiteState::Occupied) {
      cert.reason = "initially occupied site on cluster boundary";
      return cert;
    }
    if (three_open(x)) {
      cert.reason = "3-open site on cluster boundary";
      return cert;
    }
  }
  cert.status = CertificateStatus::Certified;
  return cert;
}

// ---------------------------------------------------------------------------
// Monte Carlo estimate of the probability that the origin is eventually occupied.

struct PhiSpec {
  Rule rule = Rule::modified(2);
  std::vector<Coord> extent{32, 32, 32};  // window centred on the origin
  BoundaryPolicy boundary = ClosedOutside{};
  double p = 0.05;
  double q = 0.0;
  std::size_t trials = 100;
  std::uint64_t seed = 1;
  unsigned workers = 1;
};

struct EstimateResult {
  Proportion phi;
  double mean_T = std::numeric_limits<double>::quiet_NaN();  // among trials where the origin fills
  double runtime_s = 0.0;
};

inline EstimateResult origin_occupied_estimate(const PhiSpec& spec) {
  if (spec.trials < 1) throw ParameterError("origin_occupied_estimate: trials must be >= 1");
  check_probabilities(spec.p, spec.q);
  const auto t0 = std::chrono::steady_clock::now();
  const BoxWindow window = BoxWindow::centered(spec.extent);
  const Point origin(spec.extent.size(), 0);
  struct Outcome {
    std::uint8_t occupied = 0;
    std::uint32_t round = 0;
  };
  auto outcomes = parallel_map(spec.trials, spec.workers, [&](std::size_t t) {
    const CouplingSource src{trial_seed(spec.seed, t)};
    const auto cfg = sample_config(window, spec.p, spec.q, src);
    const auto res = run_fixpoint(cfg, spec.rule, spec.boundary);
    const std::uint32_t r = res.round_at(origin);
    return Outcome{static_cast<std::uint8_t>(r != EvolutionResult::kNever), r};
  });
  std::size_t hits = 0;
  double sum_t = 0;
  for (const auto& o : outcomes)
    if (o.occupied) {
      ++hits;
      sum_t += o.round;
    }
  EstimateResult out;
  out.phi = wilson(hits, spec.trials);
  if (hits) out.mean_T = sum_t / static_cast<double>(hits);
  out.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

}  // namespace pbp
