#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>

#include "pbp/lattice.hpp"

namespace pbp {

// Stream indices of the per-site uniforms.  U decides the initial state,
// W drives sprinkling (offset by the configuration generation).
inline constexpr std::uint64_t kStreamU = 0;
inline constexpr std::uint64_t kStreamW = 2;

inline constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Seed of trial `trial` of an experiment seeded with `seed`.
inline constexpr std::uint64_t trial_seed(std::uint64_t seed, std::uint64_t trial) {
  return mix64(mix64(seed ^ 0x5851f42d4c957f2dULL) + 0x9e3779b97f4a7c15ULL * (trial + 1));
}

// Counter-based per-site uniforms: a pure function of (seed, stream, coordinates).
struct CouplingSource {
  std::uint64_t seed = 0;

  std::uint64_t bits(std::span<const Coord> x, std::uint64_t stream) const {
    std::uint64_t h = mix64(seed + 0x9e3779b97f4a7c15ULL);
    h = mix64(h ^ (stream * 0xd6e8feb86659fd93ULL + x.size()));
    for (Coord c : x) h = mix64(h + 0x9e3779b97f4a7c15ULL + static_cast<std::uint64_t>(c));
    return h;
  }

  /// Uniform in [0,1) with 53 random bits.
  double uniform(std::span<const Coord> x, std::uint64_t stream) const {
    return static_cast<double>(bits(x, stream) >> 11) * 0x1.0p-53;
  }
};

inline void check_probabilities(double p, double q) {
  if (!(p >= 0.0) || !(q >= 0.0) || !(p <= 1.0) || !(q <= 1.0) || p + q > 1.0 + 1e-12)
    throw ParameterError("invalid probabilities p=" + std::to_string(p) + " q=" + std::to_string(q) +
                         " (need p,q >= 0 and p+q <= 1)");
}

// Product measure: Closed with probability q, Occupied with probability p.
// A single uniform per site is split as [0,q) closed, [1-p,1) occupied, which
// makes the occupied set increasing in p and the closed set increasing in q
// while the occupied set is nonincreasing in q.
struct ProductSampler {
  CouplingSource src;
  double p = 0.0;
  double q = 0.0;

  ProductSampler(CouplingSource s, double p_, double q_) : src(s), p(p_), q(q_) { check_probabilities(p, q); }

  SiteState state_at(std::span<const Coord> x) const {
    const double u = src.uniform(x, kStreamU);
    if (u < q) return SiteState::Closed;
    if (u >= 1.0 - p) return SiteState::Occupied;
    return SiteState::OpenVacant;
  }
  bool closed(std::span<const Coord> x) const { return src.uniform(x, kStreamU) < q; }

  ConfigMeta meta() const { return {p, q, src.seed, 0}; }
};

// Level-2 field: every vacant site of the base field independently becomes
// Occupied with probability extra/(1-p-q), driven by stream W.
template <class Base>
struct SprinkledSampler {
  Base base;
  CouplingSource src;
  double base_p = 0.0;
  double base_q = 0.0;
  double extra = 0.0;
  std::uint32_t generation = 0;

  double conditional() const {
    const double vacant = 1.0 - base_p - base_q;
    return vacant > 0.0 ? std::min(1.0, extra / vacant) : 0.0;
  }

  SiteState state_at(std::span<const Coord> x) const {
    const SiteState s = base.state_at(x);
    if (s != SiteState::OpenVacant || extra <= 0.0) return s;
    return src.uniform(x, kStreamW + 16ULL * generation) < conditional() ? SiteState::Occupied : SiteState::OpenVacant;
  }
};

inline SprinkledSampler<ProductSampler> sprinkled(const ProductSampler& base, double extra) {
  check_probabilities(base.p + extra, base.q);
  if (extra < 0.0) throw ParameterError("sprinkle: extra must be nonnegative");
  return {base, base.src, base.p, base.q, extra, 0};
}

/// Evaluates any site field on a window.
template <class Field>
Configuration materialize(const Field& field, const BoxWindow& window, ConfigMeta meta = {}) {
  Configuration cfg(window, SiteState::OpenVacant, meta);
  window.for_each([&](std::size_t i, std::span<const Coord> x) { cfg.set(i, field.state_at(x)); });
  return cfg;
}

inline Configuration sample_config(const BoxWindow& window, double p, double q, CouplingSource src) {
  const ProductSampler sampler(src, p, q);
  return materialize(sampler, window, sampler.meta());
}

inline Configuration sprinkle(const Configuration& cfg, double extra, CouplingSource src) {
  const ConfigMeta& m = cfg.meta();
  if (extra < 0.0) throw ParameterError("sprinkle: extra must be nonnegative");
  check_probabilities(m.p + extra, m.q);
  Configuration out = cfg;
  out.meta().p = m.p + extra;
  out.meta().generation = m.generation + 1;
  if (extra == 0.0) return out;
  const double vacant = 1.0 - m.p - m.q;
  const double prob = vacant > 0.0 ? std::min(1.0, extra / vacant) : 0.0;
  const std::uint64_t stream = kStreamW + 16ULL * m.generation;
  cfg.window().for_each([&](std::size_t i, std::span<const Coord> x) {
    if (cfg.get(i) == SiteState::OpenVacant && src.uniform(x, stream) < prob) out.set(i, SiteState::Occupied);
  });
  return out;
}

// Adapter exposing a Configuration as a field; sites outside the window take `outside`.
struct ConfigField {
  const Configuration* cfg;
  SiteState outside = SiteState::Closed;

  SiteState state_at(std::span<const Coord> x) const { return cfg->state_or(x, outside); }
  bool closed(std::span<const Coord> x) const { return state_at(x) == SiteState::Closed; }
};

}  // namespace pbp
