#include <gtest/gtest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <pbp/pbp.hpp>

using namespace pbp;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("pbp_cli_" + std::to_string(::getpid())) / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream is(s);
  for (std::string l; std::getline(is, l);) out.push_back(l);
  return out;
}

// Quote-aware CSV split.
std::vector<std::string> fields(const std::string& line) {
  std::vector<std::string> out(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') out.back() += '"', ++i;
      else if (c == '"') quoted = false;
      else out.back() += c;
    } else if (c == '"') quoted = true;
    else if (c == ',') out.emplace_back();
    else out.back() += c;
  }
  return out;
}

struct Cmd {
  int code = -1;
  std::string out, err;
};

Cmd pbp_cli(const std::string& args, const fs::path& dir) {
  const fs::path o = dir / "stdout.txt", e = dir / "stderr.txt";
  const std::string cmd = std::string(PBP_CLI_PATH) + " " + args + " >" + o.string() + " 2>" + e.string();
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(o), slurp(e)};
}

ExperimentSpec small_phi(const fs::path& dir) {
  ExperimentSpec s;
  s.kind = ExperimentKind::PhiSweep;
  s.d = 3;
  s.extent = {12, 12, 12};
  s.p_grid = {0.05, 0.1};
  s.q_grid = {0.2, 0.05, 0.01};
  s.trials = 30;
  s.seed = 5;
  s.out_dir = dir.string();
  return s;
}

}  // namespace

// ---------------------------------------------------------------------------
// Presets.

TEST(Preset, GmD2Contrast) {
  const auto s = preset("gm-d2-contrast");
  EXPECT_EQ(s.kind, ExperimentKind::PhiSweep);
  EXPECT_EQ(s.d, 2);
  EXPECT_EQ(s.rule, RuleVariant::Standard);
  EXPECT_EQ(s.p_grid, std::vector<double>{0.1});
  EXPECT_EQ(s.q_grid, (std::vector<double>{0.0005, 0.05}));
  EXPECT_EQ(s.extent, (std::vector<Coord>{256, 256}));
  EXPECT_GE(s.trials, 200u);
  // Straddles q = p^2.
  EXPECT_LT(s.q_grid[0], 0.01);
  EXPECT_GT(s.q_grid[1], 0.01);
  EXPECT_NO_THROW(validate(s));
}

TEST(Preset, ThmMainTrend) {
  const auto s = preset("thm-main-trend");
  EXPECT_EQ(s.d, 3);
  EXPECT_EQ(s.r, 2);
  EXPECT_EQ(s.rule, RuleVariant::Modified);
  EXPECT_EQ(s.p_grid, std::vector<double>{0.05});
  EXPECT_EQ(s.q_grid, (std::vector<double>{0.2, 0.05, 0.01}));
  EXPECT_EQ(s.extent, (std::vector<Coord>{96, 96, 96}));
  EXPECT_GE(s.trials, 100u);
  EXPECT_NO_THROW(validate(s));
  EXPECT_NO_THROW(check_resources(s));
}

TEST(Preset, ScalingPresetWarnsAndReducesL) {
  const auto s = preset("prop-32-scaling");
  ASSERT_EQ(s.warnings.size(), 1u);
  EXPECT_NE(s.warnings[0].find("infeasible"), std::string::npos);
  EXPECT_EQ(s.L, 4);
  EXPECT_EQ(s.kind, ExperimentKind::SailDemo);
}

TEST(Preset, UnknownNameListsPresets) {
  try {
    preset("bogus");
    FAIL() << "expected UsageError";
  } catch (const UsageError& e) {
    const std::string m = e.what();
    for (const auto& n : preset_names()) EXPECT_NE(m.find(n), std::string::npos) << m;
  }
}

// ---------------------------------------------------------------------------
// Validation and the resource guard.

TEST(ExperimentSpec, ValidationNamesTheField) {
  auto expect_field = [](ExperimentSpec s, const std::string& field) {
    try {
      validate(s);
      ADD_FAILURE() << "expected UsageError for " << field;
    } catch (const UsageError& e) {
      EXPECT_EQ(std::string(e.what()).rfind(field + ":", 0), 0u) << e.what();
    }
  };
  ExperimentSpec ok = small_phi(fs::temp_directory_path());
  EXPECT_NO_THROW(validate(ok));
  auto s = ok;
  s.seed.reset();
  expect_field(s, "seed");
  s = ok;
  s.trials = 0;
  expect_field(s, "trials");
  s = ok;
  s.p_grid.clear();
  expect_field(s, "p");
  s = ok;
  s.q_grid.clear();
  expect_field(s, "q");
  s = ok;
  s.extent = {12, 12};
  expect_field(s, "window");
  s = ok;
  s.p_grid = {0.7};
  s.q_grid = {0.5};
  expect_field(s, "p/q");
  s = ok;
  s.boundary = "periodic";
  expect_field(s, "boundary");
  s = ok;
  s.kind = ExperimentKind::ExcellentField;
  expect_field(s, "window");  // needs a 2D site window
  s = ok;
  s.kind = ExperimentKind::CurtainStats;
  s.d = 2;
  expect_field(s, "d");
}

TEST(ExperimentSpec, ResourceGuardRefusesAndReportsEstimate) {
  ExperimentSpec s = small_phi(fs::temp_directory_path());
  s.extent = {2000, 2000, 2000};
  try {
    check_resources(s);
    FAIL() << "expected ResourceError";
  } catch (const ResourceError& e) {
    EXPECT_GT(e.estimate_bytes, e.cap_bytes);
    EXPECT_NE(std::string(e.what()).find("MiB"), std::string::npos);
  }
  s.memory_cap_mb = 1 << 30;
  EXPECT_NO_THROW(check_resources(s));
  // run() checks before doing any work.
  s.memory_cap_mb = 1;
  EXPECT_THROW(run(s), ResourceError);
}

// ---------------------------------------------------------------------------
// Runner output.

TEST(Run, CsvSchemaAndFullParameterTuple) {
  const auto dir = scratch("schema");
  const auto res = run(small_phi(dir));
  ASSERT_FALSE(res.files.empty());
  const auto ls = lines(slurp(res.files[0]));
  ASSERT_EQ(ls.size(), 1u + 2 * 3);
  EXPECT_EQ(ls[0], "kind,d,r,rule,p,q,L,window,trials,seed,estimate,ci_lo,ci_hi,mean_T,runtime_s,stat,check");
  for (std::size_t i = 1; i < ls.size(); ++i) {
    const auto f = fields(ls[i]);
    ASSERT_EQ(f.size(), 17u) << ls[i];
    EXPECT_EQ(f[0], "phi-sweep");
    EXPECT_EQ(f[1], "3");
    EXPECT_EQ(f[2], "2");
    EXPECT_EQ(f[3], "modified");
    EXPECT_FALSE(f[4].empty());
    EXPECT_FALSE(f[5].empty());
    EXPECT_EQ(f[7], "12x12x12");
    EXPECT_EQ(f[8], "30");
    EXPECT_EQ(f[9], "5");
    const double est = std::stod(f[10]), lo = std::stod(f[11]), hi = std::stod(f[12]);
    EXPECT_GE(est, 0.0);
    EXPECT_LE(est, 1.0);
    EXPECT_LE(lo, est);
    EXPECT_GE(hi, est);
    EXPECT_EQ(f[14], "") << "runtime_s only with timing";
  }
}

TEST(Run, EstimatesAreWilsonAndNonincreasingInQ) {
  const auto dir = scratch("mono");
  const auto res = run(small_phi(dir));
  for (double p : {0.05, 0.1}) {
    std::vector<double> est;
    for (const auto& r : res.rows)
      if (r.p == p) {
        est.push_back(r.estimate);
        const auto w = wilson(static_cast<std::size_t>(std::lround(r.estimate * 30)), 30);
        EXPECT_DOUBLE_EQ(r.ci_lo, w.lo);
        EXPECT_DOUBLE_EQ(r.ci_hi, w.hi);
        EXPECT_EQ(r.check, "nonincreasing-in-q=pass");
      }
    ASSERT_EQ(est.size(), 3u);
    // q grid is 0.2, 0.05, 0.01: estimates must not decrease as q falls.
    EXPECT_LE(est[0], est[1]);
    EXPECT_LE(est[1], est[2]);
  }
}

TEST(Run, WorkerCountNeverChangesOutput) {
  for (auto kind : {ExperimentKind::PhiSweep, ExperimentKind::SailDemo, ExperimentKind::CurtainStats}) {
    std::string first;
    for (unsigned w : {1u, 3u, 8u}) {
      const auto dir = scratch(std::string("det_") + to_string(kind) + std::to_string(w));
      ExperimentSpec s = small_phi(dir);
      s.kind = kind;
      s.workers = w;
      if (kind == ExperimentKind::SailDemo) {
        s.p_grid = {0.5};
        s.q_grid = {0.005, 0.0};
        s.L = 3;
      }
      if (kind == ExperimentKind::CurtainStats) s.q_grid = {0.01};
      const auto csv = slurp(run(s).files[0]);
      if (first.empty()) first = csv;
      EXPECT_EQ(csv, first) << to_string(kind) << " workers=" << w;
    }
  }
}

TEST(Run, TimingFillsRuntimeColumn) {
  const auto dir = scratch("timing");
  auto s = small_phi(dir);
  s.timing = true;
  s.trials = 3;
  for (const auto& r : run(s).rows) {
    ASSERT_TRUE(r.runtime_s.has_value());
    EXPECT_GE(*r.runtime_s, 0.0);
  }
}

TEST(Run, CurtainStatsCarriesTheBoundFlag) {
  const auto dir = scratch("curtain");
  ExperimentSpec s;
  s.kind = ExperimentKind::CurtainStats;
  s.q_grid = {0.001};
  s.trials = 2000;
  s.seed = 3;
  s.out_dir = dir.string();
  s.svg = true;
  const auto res = run(s);
  ASSERT_FALSE(res.rows.empty());
  EXPECT_EQ(res.rows.front().check, "56q=pass");
  EXPECT_EQ(res.rows.size(), 1u + static_cast<std::size_t>(s.k_max) + 1u);
  EXPECT_EQ(res.rows.back().stat, "log-slope");
  ASSERT_EQ(res.files.size(), 2u);
  EXPECT_EQ(slurp(res.files[1]).rfind("<svg", 0), 0u);
}

TEST(Run, SailAndActivationArtifacts) {
  const auto dir = scratch("sail");
  ExperimentSpec s;
  s.kind = ExperimentKind::SailDemo;
  s.L = 4;
  s.p_grid = {0.5};
  s.q_grid = {0.0};
  s.trials = 20;
  s.seed = 9;
  s.svg = true;
  s.out_dir = dir.string();
  const auto res = run(s);
  ASSERT_EQ(res.rows.size(), 2u);  // constructive and exhaustive
  EXPECT_EQ(res.rows[0].check, "separation=pass");
  EXPECT_EQ(res.rows[1].check, "constructive-implies-exhaustive=pass");
  EXPECT_TRUE(fs::exists(dir / "sail.csv"));
  EXPECT_TRUE(fs::exists(dir / "sail.svg"));
  EXPECT_EQ(lines(slurp(dir / "sail.csv"))[0], "x1,x2,x3,sum,occupied");

  s.kind = ExperimentKind::ActivationDemo;
  s.L = 3;
  s.p_grid = {0.99};
  s.q_grid = {1e-5};
  s.trials = 8;
  const auto act = run(s);
  EXPECT_EQ(act.rows[0].check, "all-successors=pass");
  EXPECT_DOUBLE_EQ(act.rows[0].estimate, 1.0);
  const auto j = nlohmann::json::parse(slurp(dir / "gadget.json"));
  EXPECT_EQ(j["bricks"].size(), 7u);
  EXPECT_TRUE(j["violations"].empty());
  EXPECT_DOUBLE_EQ(j["C"].get<double>(), 54.0);
}

// ---------------------------------------------------------------------------
// Exporters.

TEST(Export, CsvQuotingAndNumbers) {
  EXPECT_EQ(csv_field("plain"), "plain");
  EXPECT_EQ(csv_field("a,b"), "\"a,b\"");
  EXPECT_EQ(csv_field("say \"x\""), "\"say \"\"x\"\"\"");
  EXPECT_EQ(num(0.0005), "0.0005");
  EXPECT_EQ(num(std::nan("")), "");
  EXPECT_EQ(std::stod(num(0.1 + 0.2)), 0.1 + 0.2);
  EXPECT_EQ(std::stod(num(1e-30)), 1e-30);
}

TEST(Export, ExcellentBitmapOrientation) {
  ExcellentField f{BoxWindow({0, 0}, {3, 2}), {1, 0, 0, 0, 0, 1}, build_gadget(1)};
  // Row for a2 = 1 first, a1 increasing to the right.
  EXPECT_EQ(excellent_pbm(f), "P1\n3 2\n0 0 1\n1 0 0\n");
}

TEST(Export, CurtainSvgHasOnePolylinePerLayer) {
  const BoxWindow w = box3({0, 0, 0}, {8, 8, 4});
  const ProductSampler field(CouplingSource{1}, 0.0, 0.0);
  const auto sc = stabilized_curtain(field, w);
  const std::string svg = curtain_svg(sc.curtain);
  std::size_t n = 0;
  for (auto at = svg.find("<polyline"); at != std::string::npos; at = svg.find("<polyline", at + 1)) ++n;
  std::size_t nonempty = 0;
  for (const auto& l : sc.curtain.layers) nonempty += !l.path.empty();
  EXPECT_EQ(n, nonempty);
  EXPECT_GT(n, 0u);
}

// ---------------------------------------------------------------------------
// The binary.

TEST(Binary, ExitCodes) {
  const auto dir = scratch("exit");
  const std::string out = " --out-dir " + (dir / "o").string();
  EXPECT_EQ(pbp_cli("--help", dir).code, 0);
  EXPECT_EQ(pbp_cli("phi --window 8,8,8 --trials 2 --seed 1" + out, dir).code, 0);
  EXPECT_EQ(pbp_cli("", dir).code, 2);
  EXPECT_EQ(pbp_cli("frobnicate", dir).code, 2);
  EXPECT_EQ(pbp_cli("phi --trials 2" + out, dir).code, 2) << "seed is mandatory";
  EXPECT_EQ(pbp_cli("phi --seed 1 --trials 0" + out, dir).code, 2);
  EXPECT_EQ(pbp_cli("phi --seed 1 --rule sideways" + out, dir).code, 2);
  const auto guard = pbp_cli("phi --seed 1 --window 3000,3000,3000" + out, dir);
  EXPECT_EQ(guard.code, 3);
  EXPECT_NE(guard.err.find("estimated memory"), std::string::npos) << guard.err;
  EXPECT_EQ(pbp_cli("phi --seed 1 --config " + (dir / "missing.ini").string() + out, dir).code, 4);
  EXPECT_EQ(pbp_cli("evolve --input " + (dir / "missing.pbp").string() + out, dir).code, 4);
  std::ofstream(dir / "junk.pbp") << "not a snapshot";
  EXPECT_EQ(pbp_cli("evolve --input " + (dir / "junk.pbp").string() + out, dir).code, 4);
}

TEST(Binary, PresetListing) {
  const auto dir = scratch("preset");
  const auto bad = pbp_cli("preset bogus", dir);
  EXPECT_EQ(bad.code, 2);
  for (const auto& n : preset_names()) EXPECT_NE(bad.err.find(n), std::string::npos) << bad.err;
  const auto warn = pbp_cli("preset prop-32-scaling", dir);
  EXPECT_EQ(warn.code, 0);
  EXPECT_NE(warn.err.find("infeasible"), std::string::npos);
  EXPECT_NE(warn.out.find("kind = sail-demo"), std::string::npos);
}

TEST(Binary, WorkersGiveByteIdenticalCsv) {
  const auto dir = scratch("workers");
  const std::string args = "phi --window 16,16,16 --p 0.05 --q 0.2,0.01 --trials 24 --seed 42";
  ASSERT_EQ(pbp_cli(args + " --workers 1 --out-dir " + (dir / "w1").string(), dir).code, 0);
  ASSERT_EQ(pbp_cli(args + " --workers 8 --out-dir " + (dir / "w8").string(), dir).code, 0);
  const auto a = slurp(dir / "w1" / "phi-sweep.csv"), b = slurp(dir / "w8" / "phi-sweep.csv");
  EXPECT_FALSE(a.empty());
  EXPECT_EQ(a, b);
}

TEST(Binary, PrintedPresetRoundTripsThroughConfig) {
  const auto dir = scratch("roundtrip");
  const auto printed = pbp_cli("preset gm-d2-contrast", dir);
  ASSERT_EQ(printed.code, 0);
  std::ofstream(dir / "gm.ini") << printed.out;
  const std::string small = " --trials 6 --window 24,24";
  ASSERT_EQ(pbp_cli("preset gm-d2-contrast --run" + small + " --out-dir " + (dir / "a").string(), dir).code, 0);
  ASSERT_EQ(pbp_cli("phi --config " + (dir / "gm.ini").string() + small + " --out-dir " + (dir / "b").string(), dir).code,
            0);
  const auto a = slurp(dir / "a" / "gm-d2-contrast.csv");
  EXPECT_FALSE(a.empty());
  EXPECT_EQ(a, slurp(dir / "b" / "gm-d2-contrast.csv"));
  // Flags override file values.
  const auto rows = lines(a);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(fields(rows[1])[8], "6");
  EXPECT_EQ(fields(rows[1])[7], "24x24");
}

TEST(Binary, ConfigKindMustMatchVerb) {
  const auto dir = scratch("kind");
  std::ofstream(dir / "c.ini") << "[experiment]\nkind = sail-demo\nseed = 1\n";
  const auto r = pbp_cli("phi --config " + (dir / "c.ini").string(), dir);
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("kind"), std::string::npos);
  std::ofstream(dir / "u.ini") << "seed = 1\ncolour = blue\n";
  const auto u = pbp_cli("phi --config " + (dir / "u.ini").string(), dir);
  EXPECT_EQ(u.code, 2);
  EXPECT_NE(u.err.find("colour"), std::string::npos);
}

TEST(Binary, SampleThenEvolve) {
  const auto dir = scratch("evolve");
  const std::string out = " --out-dir " + dir.string();
  ASSERT_EQ(pbp_cli("sample --seed 4 --window 10,10,10 --p 0.1 --q 0.05" + out, dir).code, 0);
  const auto ev = pbp_cli("evolve --rule standard --input " + (dir / "sample.pbp").string() + out, dir);
  ASSERT_EQ(ev.code, 0);
  std::ifstream in(dir / "sample.pbp", std::ios::binary);
  const auto cfg = read_snapshot(in);
  const auto res = run_fixpoint(cfg, Rule::standard(2));
  EXPECT_NE(ev.out.find("rounds " + std::to_string(res.rounds_elapsed) + " occupied " +
                        std::to_string(res.final.count(SiteState::Occupied))),
            std::string::npos)
      << ev.out;
  std::ifstream fin(dir / "evolve.pbp", std::ios::binary);
  EXPECT_EQ(read_snapshot(fin).count(SiteState::Occupied), res.final.count(SiteState::Occupied));
}

TEST(Binary, SvgFlagEmitsFigures) {
  const auto dir = scratch("svg");
  ASSERT_EQ(pbp_cli("phi --window 8,8 --p 0.1 --q 0.01,0.1 --trials 4 --seed 2 --svg --out-dir " + dir.string(), dir).code,
            0);
  EXPECT_EQ(slurp(dir / "phi-sweep.svg").rfind("<svg", 0), 0u);
}
