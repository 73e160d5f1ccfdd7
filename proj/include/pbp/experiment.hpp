#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numeric>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "curtain.hpp"
#include "dynamics.hpp"
#include "export.hpp"
#include "parallel.hpp"
#include "random.hpp"
#include "renorm.hpp"
#include "sail.hpp"
#include "stats.hpp"

namespace pbp {

/// Bad or incomplete experiment description; the message names the field.
struct UsageError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// The estimated footprint exceeds the configured cap.
struct ResourceError : std::runtime_error {
  std::size_t estimate_bytes = 0, cap_bytes = 0;
  ResourceError(const std::string& what, std::size_t est, std::size_t cap)
      : std::runtime_error(what), estimate_bytes(est), cap_bytes(cap) {}
};

enum class ExperimentKind { PhiSweep, CurtainStats, SailDemo, ActivationDemo, ExcellentField, Nucleation };

inline const char* to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::PhiSweep: return "phi-sweep";
    case ExperimentKind::CurtainStats: return "curtain-stats";
    case ExperimentKind::SailDemo: return "sail-demo";
    case ExperimentKind::ActivationDemo: return "activation-demo";
    case ExperimentKind::ExcellentField: return "excellent-field";
    case ExperimentKind::Nucleation: return "nucleation";
  }
  return "?";
}

inline ExperimentKind parse_kind(const std::string& s) {
  for (auto k : {ExperimentKind::PhiSweep, ExperimentKind::CurtainStats, ExperimentKind::SailDemo,
                 ExperimentKind::ActivationDemo, ExperimentKind::ExcellentField, ExperimentKind::Nucleation})
    if (s == to_string(k)) return k;
  throw UsageError("kind: unknown experiment kind '" + s + "'");
}

inline RuleVariant parse_rule(const std::string& s) {
  if (s == "standard") return RuleVariant::Standard;
  if (s == "modified") return RuleVariant::Modified;
  throw UsageError("rule: expected 'standard' or 'modified', got '" + s + "'");
}

struct ExperimentSpec {
  ExperimentKind kind = ExperimentKind::PhiSweep;
  int d = 3;
  int r = 2;
  RuleVariant rule = RuleVariant::Modified;
  std::vector<Coord> extent{32, 32, 32};  // phi: centred window; excellent/nucleation: Z^2 window from the origin
  std::string boundary = "closed";        // closed | occupied-below (x_d <= -1 occupied outside)
  std::vector<double> p_grid{0.05};
  std::vector<double> q_grid{0.01};
  Coord L = 4;
  std::size_t trials = 100;
  std::optional<std::uint64_t> seed;
  unsigned workers = 1;
  Coord margin = 4;         // initial curtain margin, doubled until stable
  Coord k_max = 6;          // curtain ray length
  double sprinkle_p = 0.5;  // nucleation: conditional vacant -> occupied
  std::size_t memory_cap_mb = 4096;
  std::string out_dir = ".";
  bool svg = false;
  bool timing = false;
  std::string name;                   // preset name, if any
  std::vector<std::string> warnings;  // emitted by presets

  Rule rule_obj() const { return {rule, r}; }
};

inline BoundaryPolicy boundary_policy(const ExperimentSpec& s) {
  if (s.boundary == "closed") return ClosedOutside{};
  if (s.boundary == "occupied-below") return OccupiedLowerHalfSpace{s.d - 1, -1};
  throw UsageError("boundary: expected 'closed' or 'occupied-below', got '" + s.boundary + "'");
}

/// Checks everything the chosen kind needs before any work starts.
inline void validate(const ExperimentSpec& s) {
  auto need = [](bool ok, const std::string& msg) {
    if (!ok) throw UsageError(msg);
  };
  need(s.seed.has_value(), "seed: required (pass --seed or set seed in the config)");
  need(s.trials >= 1, "trials: must be >= 1");
  need(!s.p_grid.empty(), "p: grid must be nonempty");
  need(!s.q_grid.empty(), "q: grid must be nonempty");
  need(s.workers >= 1, "workers: must be >= 1");
  for (double p : s.p_grid)
    for (double q : s.q_grid)
      need(p >= 0 && q >= 0 && p <= 1 && q <= 1 && p + q <= 1 + 1e-12,
           "p/q: need p, q >= 0 and p + q <= 1 (p=" + num(p) + ", q=" + num(q) + ")");
  need(s.r >= 1, "r: must be >= 1");
  (void)boundary_policy(s);
  switch (s.kind) {
    case ExperimentKind::PhiSweep:
      need(s.d >= 1 && s.d <= kMaxDim, "d: must be in [1, " + std::to_string(kMaxDim) + "]");
      need(static_cast<int>(s.extent.size()) == s.d, "window: needs exactly d extents");
      for (Coord e : s.extent) need(e >= 1, "window: extents must be >= 1");
      break;
    case ExperimentKind::CurtainStats:
      need(s.d == 3, "d: curtain statistics are three-dimensional");
      need(s.k_max >= 1, "k_max: must be >= 1");
      need(s.margin >= 1, "margin: must be >= 1");
      break;
    case ExperimentKind::SailDemo:
    case ExperimentKind::ActivationDemo:
      need(s.d == 3, "d: sails are three-dimensional");
      need(s.L >= 1, "L: must be >= 1");
      break;
    case ExperimentKind::ExcellentField:
    case ExperimentKind::Nucleation:
      need(s.d == 3, "d: sails are three-dimensional");
      need(s.L >= 1, "L: must be >= 1");
      need(s.extent.size() == 2 && s.extent[0] >= 1 && s.extent[1] >= 1,
           "window: excellent fields need two positive extents");
      need(s.sprinkle_p >= 0 && s.sprinkle_p <= 1, "sprinkle_p: must be in [0,1]");
      break;
  }
}

// Rough peak footprint: per-worker working sets, bytes per site counted from
// the data structures each kind allocates.
inline std::size_t estimate_memory_bytes(const ExperimentSpec& s) {
  const double w = std::max(1u, s.workers);
  const double brick = 2048.0 * std::pow(static_cast<double>(s.L), 3);  // 4L x 16L x 32L
  double bytes = 0;
  switch (s.kind) {
    case ExperimentKind::PhiSweep: {
      double n = 1;
      for (Coord e : s.extent) n *= static_cast<double>(e + 2);
      bytes = w * 12.0 * n;  // packed config + byte grid + rounds + counters + result
      break;
    }
    case ExperimentKind::CurtainStats: {
      const double side = static_cast<double>(s.k_max + 6) + 2.0 * 8.0 * static_cast<double>(s.k_max + 6);
      bytes = w * 4.0 * side * side * 8.0;  // reach sets stay near the slab
      break;
    }
    case ExperimentKind::SailDemo: bytes = w * brick / 64.0 * 256.0; break;  // proto-brick plus sweep states
    case ExperimentKind::ActivationDemo: bytes = w * 2.0 * brick * 8.0; break;
    case ExperimentKind::ExcellentField:
    case ExperimentKind::Nucleation:
      bytes = w * 2.0 * brick * 8.0 + static_cast<double>(s.extent[0] * s.extent[1]) * 64.0;
      break;
  }
  return static_cast<std::size_t>(bytes);
}

inline void check_resources(const ExperimentSpec& s) {
  const std::size_t est = estimate_memory_bytes(s);
  const std::size_t cap = s.memory_cap_mb * (std::size_t{1} << 20);
  if (est > cap)
    throw ResourceError("estimated memory " + std::to_string(est >> 20) + " MiB exceeds the cap of " +
                            std::to_string(s.memory_cap_mb) + " MiB",
                        est, cap);
}

// ---------------------------------------------------------------------------
// Presets.

inline std::vector<std::string> preset_names() { return {"thm-main-trend", "gm-d2-contrast", "prop-32-scaling"}; }

inline ExperimentSpec preset(const std::string& name) {
  ExperimentSpec s;
  s.name = name;
  s.seed = 1;
  if (name == "thm-main-trend") {
    s.kind = ExperimentKind::PhiSweep;
    s.d = 3;
    s.rule = RuleVariant::Modified;
    s.p_grid = {0.05};
    s.q_grid = {0.2, 0.05, 0.01};
    s.extent = {96, 96, 96};
    s.trials = 100;
    return s;
  }
  if (name == "gm-d2-contrast") {
    // q on both sides of p^2 = 0.01
    s.kind = ExperimentKind::PhiSweep;
    s.d = 2;
    s.rule = RuleVariant::Standard;
    s.p_grid = {0.1};
    s.q_grid = {0.0005, 0.05};
    s.extent = {256, 256};
    s.trials = 200;
    return s;
  }
  if (name == "prop-32-scaling") {
    s.kind = ExperimentKind::SailDemo;
    s.p_grid = {0.05};
    s.q_grid = {0.0};
    s.L = 4;
    s.trials = 200;
    const double literal = std::ceil(std::pow(0.05, -128.0));
    s.warnings.push_back("prop-32-scaling: the literal scale L = ceil(p^-128) = " + num(literal) +
                         " at p = 0.05 is infeasible; using L = 4 on synthetic proto-bricks sampled at (p, q)");
    return s;
  }
  std::string list;
  for (const auto& n : preset_names()) list += (list.empty() ? "" : ", ") + n;
  throw UsageError("preset: unknown name '" + name + "'; available presets: " + list);
}

// ---------------------------------------------------------------------------
// Running.

struct RunResult {
  std::vector<CsvRow> rows;
  std::vector<std::string> files;  // written artifacts, CSV first
};

namespace detail {

inline CsvRow base_row(const ExperimentSpec& s, double p, double q) {
  CsvRow r;
  r.kind = to_string(s.kind);
  r.d = s.d;
  r.r = s.r;
  r.rule = to_string(s.rule);
  r.p = p;
  r.q = q;
  r.trials = s.trials;
  r.seed = *s.seed;
  return r;
}

inline void fill(CsvRow& r, const Proportion& pr) {
  r.estimate = pr.estimate;
  r.ci_lo = pr.lo;
  r.ci_hi = pr.hi;
}

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Each grid point gets its own seed so rows do not share trials.
inline std::uint64_t point_seed(std::uint64_t seed, std::size_t i, std::size_t j) {
  return mix64(seed ^ mix64(0x9e37 + 1000003 * i + j));
}

inline void run_phi(const ExperimentSpec& s, RunResult& out, std::vector<HeatCell>& heat) {
  for (double p : s.p_grid) {
    std::vector<CsvRow> rows;
    for (double q : s.q_grid) {
      // Common random numbers across the grid: monotone coupling in p and q.
      PhiSpec ps{s.rule_obj(), s.extent, boundary_policy(s), p, q, s.trials, *s.seed, s.workers};
      const auto e = origin_occupied_estimate(ps);
      CsvRow r = base_row(s, p, q);
      r.window = window_string(s.extent);
      fill(r, e.phi);
      r.mean_T = e.mean_T;
      if (s.timing) r.runtime_s = e.runtime_s;
      r.stat = "phi";
      rows.push_back(r);
      heat.push_back({p, q, e.phi.estimate});
    }
    // Flag monotonicity in q along this p.
    std::vector<std::size_t> order(rows.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return rows[a].q < rows[b].q; });
    bool mono = true;
    for (std::size_t i = 1; i < order.size(); ++i) mono = mono && rows[order[i]].estimate <= rows[order[i - 1]].estimate;
    for (auto& r : rows) {
      r.check = std::string("nonincreasing-in-q=") + (mono ? "pass" : "fail");
      out.rows.push_back(r);
    }
  }
}

inline void run_curtain(const ExperimentSpec& s, RunResult& out) {
  const BoxWindow w = diagonal_window(s.k_max);
  std::vector<Coord> ext(w.extent().begin(), w.extent().end());
  for (double q : s.q_grid) {
    CurtainStatsSpec cs{q, s.k_max, s.trials, *s.seed, s.workers, s.margin};
    const auto st = curtain_statistics(cs);
    auto row = [&] {
      CsvRow r = base_row(s, 0.0, q);
      r.rule = "";
      r.window = window_string(ext);
      if (s.timing) r.runtime_s = st.runtime_s;
      return r;
    };
    CsvRow head = row();
    fill(head, st.not_at_11);
    head.stat = "P((1,1,0) not in D) stabilized=" + std::to_string(st.stabilized);
    head.check = std::string("56q=") + (st.bound_ok ? "pass" : "fail");
    out.rows.push_back(head);
    for (std::size_t k = 0; k < st.tail.size(); ++k) {
      CsvRow r = row();
      fill(r, st.tail[k]);
      r.stat = "tail k=" + std::to_string(k + 1);
      out.rows.push_back(r);
    }
    CsvRow slope = row();
    slope.estimate = st.log_slope.value_or(std::nan(""));
    slope.stat = "log-slope";
    slope.check = std::string("nonincreasing=") + (st.tail_nonincreasing ? "pass" : "fail") +
                  " negative-slope=" + (st.log_slope && *st.log_slope < 0 ? "pass" : "fail");
    out.rows.push_back(slope);
  }
  if (s.svg) {
    const double q = s.q_grid.front();
    const BoxWindow cw = box3({0, 0, -s.k_max}, {2 * s.k_max + 2, 2 * s.k_max + 2, 2 * s.k_max});
    const ProductSampler field(CouplingSource{trial_seed(*s.seed, 0)}, 0.0, q);
    const auto sc = stabilized_curtain(field, cw, 0, s.margin);
    const std::string path = (std::filesystem::path(s.out_dir) / "curtain.svg").string();
    write_file(path, curtain_svg(sc.curtain));
    out.files.push_back(path);
  }
}

inline ProtoBrick synthetic_proto(Coord L, double p, double q, std::uint64_t seed) {
  return make_proto(L, sample_config(proto_box(L), p, q, CouplingSource{seed}));
}

inline void run_sail(const ExperimentSpec& s, RunResult& out) {
  const bool exhaustive = s.L <= 4;
  std::optional<std::pair<SailSet, ProtoBrick>> shown;
  for (std::size_t i = 0; i < s.p_grid.size(); ++i)
    for (std::size_t j = 0; j < s.q_grid.size(); ++j) {
      const double p = s.p_grid[i], q = s.q_grid[j];
      const auto t0 = std::chrono::steady_clock::now();
      struct Outcome {
        std::uint8_t constructive = 0, exhaustive = 0, separated = 0, unstable = 0, implied = 1;
      };
      const std::uint64_t seed = point_seed(*s.seed, i, j);
      auto res = parallel_map(s.trials, s.workers, [&](std::size_t t) {
        const ProtoBrick pb = synthetic_proto(s.L, p, q, trial_seed(seed, t));
        Outcome o;
        const auto c = find_sail_constructive(pb);
        o.unstable = c.unstable;
        o.constructive = c.sail.has_value();
        if (c.sail) o.separated = separation_check(*c.sail);
        if (exhaustive) {
          o.exhaustive = find_sail_exhaustive(pb).sail.has_value();
          o.implied = !o.constructive || o.exhaustive;
        }
        return o;
      });
      const double secs = seconds_since(t0);
      std::size_t nc = 0, ne = 0, ns = 0, nu = 0;
      bool implied = true;
      for (const auto& o : res) {
        nc += o.constructive;
        ne += o.exhaustive;
        ns += o.separated;
        nu += o.unstable;
        implied = implied && o.implied;
      }
      CsvRow r = base_row(s, p, q);
      r.rule = "";
      r.L = s.L;
      r.window = window_string({4 * s.L, 4 * s.L, 2 * s.L});
      if (s.timing) r.runtime_s = secs;
      fill(r, wilson(nc, s.trials));
      r.stat = "good (constructive) unstable=" + std::to_string(nu);
      r.check = std::string("separation=") + (ns == nc ? "pass" : "fail");
      out.rows.push_back(r);
      if (exhaustive) {
        CsvRow e = r;
        fill(e, wilson(ne, s.trials));
        e.stat = "good (exhaustive)";
        e.check = std::string("constructive-implies-exhaustive=") + (implied ? "pass" : "fail");
        out.rows.push_back(e);
      }
      if (!shown)
        for (std::size_t t = 0; t < res.size() && !shown; ++t)
          if (res[t].constructive) {
            ProtoBrick pb = synthetic_proto(s.L, p, q, trial_seed(seed, t));
            shown.emplace(*find_sail_constructive(pb).sail, std::move(pb));
          }
    }
  if (shown) {
    const auto dir = std::filesystem::path(s.out_dir);
    const std::string csv = (dir / "sail.csv").string();
    write_file(csv, sail_csv(shown->first, shown->second));
    out.files.push_back(csv);
    if (s.svg) {
      const std::string svg = (dir / "sail.svg").string();
      write_file(svg, sail_svg(shown->first, &shown->second));
      out.files.push_back(svg);
    }
  }
}

inline void run_activation(const ExperimentSpec& s, RunResult& out) {
  const Brick b = Brick::canonical(s.L);
  const auto succ = brick_successors(b);
  const auto t0 = std::chrono::steady_clock::now();
  // Planted pairs: every successor choice.
  std::size_t planted_ok = 0;
  std::string planted_note;
  for (std::size_t i = 0; i < succ.size(); ++i) {
    Configuration cfg(bounding_box(b.box(), succ[i].box()));
    plant_brick(cfg, b);
    plant_brick(cfg, succ[i]);
    try {
      planted_ok += activation_experiment(cfg, b, succ[i]).activated;
    } catch (const PreconditionError& e) {
      planted_note = e.what();
    }
  }
  CsvRow pr = base_row(s, 1.0, 0.0);
  pr.rule = "modified";
  pr.L = s.L;
  pr.window = "brick-pair";
  pr.trials = succ.size();
  if (s.timing) pr.runtime_s = seconds_since(t0);
  fill(pr, wilson(planted_ok, succ.size()));
  pr.stat = "planted pairs activated" + (planted_note.empty() ? std::string{} : " (" + planted_note + ")");
  pr.check = std::string("all-successors=") + (planted_ok == succ.size() ? "pass" : "fail");
  out.rows.push_back(pr);

  // Random pairs: whenever both bricks are good, activation must follow.
  for (std::size_t i = 0; i < s.p_grid.size(); ++i)
    for (std::size_t j = 0; j < s.q_grid.size(); ++j) {
      const double p = s.p_grid[i], q = s.q_grid[j];
      const std::uint64_t seed = point_seed(*s.seed, i, j);
      const auto t1 = std::chrono::steady_clock::now();
      struct Outcome {
        std::uint8_t good = 0, activated = 0;
      };
      auto res = parallel_map(s.trials, s.workers, [&](std::size_t t) {
        const Brick& bp = succ[t % succ.size()];
        const auto cfg = sample_config(bounding_box(b.box(), bp.box()), p, q, CouplingSource{trial_seed(seed, t)});
        Outcome o;
        if (!good_brick(cfg, b).sail || !good_brick(cfg, bp).sail) return o;
        o.good = 1;
        o.activated = activation_experiment(cfg, b, bp).activated;
        return o;
      });
      std::size_t ng = 0, na = 0;
      for (const auto& o : res) {
        ng += o.good;
        na += o.activated;
      }
      CsvRow r = base_row(s, p, q);
      r.rule = "modified";
      r.L = s.L;
      r.window = "brick-pair";
      if (s.timing) r.runtime_s = seconds_since(t1);
      fill(r, wilson(ng, s.trials));
      r.stat = "both good; activated " + std::to_string(na) + "/" + std::to_string(ng);
      r.check = std::string("good-implies-activated=") + (na == ng ? "pass" : "fail");
      out.rows.push_back(r);
    }

  const std::string path = (std::filesystem::path(s.out_dir) / "gadget.json").string();
  write_file(path, gadget_json(build_gadget(s.L)).dump(2) + "\n");
  out.files.push_back(path);
}

inline BoxWindow site_window(const ExperimentSpec& s) { return BoxWindow({0, 0}, {s.extent[0], s.extent[1]}); }

inline void run_excellent(const ExperimentSpec& s, RunResult& out) {
  const Gadget g = build_gadget(s.L);
  const BoxWindow w = site_window(s);
  for (std::size_t i = 0; i < s.p_grid.size(); ++i)
    for (std::size_t j = 0; j < s.q_grid.size(); ++j) {
      const double p = s.p_grid[i], q = s.q_grid[j];
      const std::uint64_t seed = point_seed(*s.seed, i, j);
      const auto t0 = std::chrono::steady_clock::now();
      std::size_t excellent = 0, sites = 0, spanning = 0;
      std::optional<ExcellentField> first;
      for (std::size_t t = 0; t < s.trials; ++t) {
        const ProductSampler field(CouplingSource{trial_seed(seed, t)}, p, q);
        auto ef = excellent_field(field, g, w, s.workers);
        excellent += static_cast<std::size_t>(std::count(ef.flags.begin(), ef.flags.end(), 1));
        sites += ef.flags.size();
        spanning += oriented_path_search(ef, {w.lo(0) + w.extent()[0] / 2, w.lo(1) + w.extent()[1] / 2}).spanning;
        if (!first) first = std::move(ef);
      }
      const double secs = seconds_since(t0);
      CsvRow r = base_row(s, p, q);
      r.rule = "modified";
      r.L = s.L;
      r.window = window_string(s.extent);
      if (s.timing) r.runtime_s = secs;
      fill(r, wilson(excellent, sites));
      r.stat = "excellent density";
      out.rows.push_back(r);
      CsvRow sp = r;
      fill(sp, wilson(spanning, s.trials));
      sp.stat = "spanning through centre";
      out.rows.push_back(sp);
      if (i == 0 && j == 0) {
        const std::string path = (std::filesystem::path(s.out_dir) / "excellent.pbm").string();
        write_file(path, excellent_pbm(*first));
        out.files.push_back(path);
      }
    }
}

inline void run_nucleation(const ExperimentSpec& s, RunResult& out) {
  const Gadget g = build_gadget(s.L);
  const BoxWindow w = site_window(s);
  for (std::size_t i = 0; i < s.p_grid.size(); ++i)
    for (std::size_t j = 0; j < s.q_grid.size(); ++j) {
      const double p = s.p_grid[i], q = s.q_grid[j];
      const std::uint64_t seed = point_seed(*s.seed, i, j);
      const auto t0 = std::chrono::steady_clock::now();
      std::size_t activated = 0, not_activated = 0, inconclusive = 0, no_target = 0;
      for (std::size_t t = 0; t < s.trials; ++t) {
        const ProductSampler level1(CouplingSource{trial_seed(seed, t)}, p, q);
        const auto ef = excellent_field(level1, g, w, s.workers);
        // Target: the excellent site farthest along the orientation.
        std::optional<Site2> target;
        w.for_each([&](std::size_t, std::span<const Coord> a) {
          const Site2 x{a[0], a[1]};
          if (ef.at(x) && (!target || x[0] + x[1] > (*target)[0] + (*target)[1])) target = x;
        });
        if (!target) {
          ++no_target;
          continue;
        }
        switch (nucleation_experiment(level1, ef, *target, s.sprinkle_p).status) {
          case NucleationStatus::Activated: ++activated; break;
          case NucleationStatus::NotActivated: ++not_activated; break;
          case NucleationStatus::Inconclusive: ++inconclusive; break;
        }
      }
      const double secs = seconds_since(t0);
      CsvRow r = base_row(s, p, q);
      r.rule = "modified";
      r.L = s.L;
      r.window = window_string(s.extent);
      if (s.timing) r.runtime_s = secs;
      fill(r, wilson(activated, s.trials));
      r.stat = "activated sprinkle_p=" + num(s.sprinkle_p) + " not-activated=" + std::to_string(not_activated) +
               " inconclusive=" + std::to_string(inconclusive) + " no-excellent-site=" + std::to_string(no_target);
      r.check = std::string("nucleus-implies-activated=") + (not_activated == 0 ? "pass" : "fail");
      out.rows.push_back(r);
    }
}

}  // namespace detail

/// Writes <out_dir>/<kind>.csv and any figures.  Output is a pure function of
/// the ExperimentSpec; runtime_s is filled only when timing is requested.
inline RunResult run(const ExperimentSpec& s) {
  validate(s);
  check_resources(s);
  std::error_code ec;
  std::filesystem::create_directories(s.out_dir, ec);
  if (ec) throw IoError("cannot create output directory " + s.out_dir + ": " + ec.message());
  RunResult out;
  std::vector<HeatCell> heat;
  switch (s.kind) {
    case ExperimentKind::PhiSweep: detail::run_phi(s, out, heat); break;
    case ExperimentKind::CurtainStats: detail::run_curtain(s, out); break;
    case ExperimentKind::SailDemo: detail::run_sail(s, out); break;
    case ExperimentKind::ActivationDemo: detail::run_activation(s, out); break;
    case ExperimentKind::ExcellentField: detail::run_excellent(s, out); break;
    case ExperimentKind::Nucleation: detail::run_nucleation(s, out); break;
  }
  const auto dir = std::filesystem::path(s.out_dir);
  const std::string stem = s.name.empty() ? to_string(s.kind) : s.name;
  std::ostringstream csv;
  write_csv(csv, out.rows);
  const std::string csv_path = (dir / (stem + ".csv")).string();
  write_file(csv_path, csv.str());
  out.files.insert(out.files.begin(), csv_path);
  if (s.svg && !heat.empty()) {
    const std::string path = (dir / (stem + ".svg")).string();
    write_file(path, heatmap_svg(heat, std::string("phi estimate, ") + to_string(s.rule) + " r=" + std::to_string(s.r) +
                                           ", window " + window_string(s.extent)));
    out.files.push_back(path);
  }
  return out;
}

}  // namespace pbp
