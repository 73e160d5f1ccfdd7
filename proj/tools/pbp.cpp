// pbp: command-line runner for the polluted bootstrap percolation toolkit.
//
// Exit codes: 0 success, 2 usage, 3 resource guard, 4 I/O.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <pbp/pbp.hpp>

namespace {

using namespace pbp;

constexpr int kExitUsage = 2;
constexpr int kExitGuard = 3;
constexpr int kExitIo = 4;

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, ',')) {
    const auto a = cur.find_first_not_of(" \t"), b = cur.find_last_not_of(" \t");
    if (a != std::string::npos) out.push_back(cur.substr(a, b - a + 1));
  }
  return out;
}

template <class T>
T parse_value(const std::string& key, const std::string& v) {
  std::istringstream is(v);
  T out{};
  is >> out;
  if (!is || !(is >> std::ws).eof()) throw UsageError(key + ": cannot parse '" + v + "'");
  return out;
}

template <class T>
std::vector<T> parse_list(const std::string& key, const std::string& v) {
  std::vector<T> out;
  for (const auto& item : split_list(v)) out.push_back(parse_value<T>(key, item));
  if (out.empty()) throw UsageError(key + ": empty list");
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw UsageError(key + ": expected a boolean, got '" + v + "'");
}

// Key = value settings, either flat or inside [sections]; section names are
// only for readability, so a key may appear once.
using Settings = std::map<std::string, std::string>;

Settings read_config(const std::string& path) {
  if (!std::filesystem::exists(path)) throw IoError("config file not found: " + path);
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::read_ini(path, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw UsageError(std::string("config: ") + e.what());
  }
  Settings out;
  auto put = [&](const std::string& k, const std::string& v) {
    if (!out.emplace(k, v).second) throw UsageError(k + ": set twice in " + path);
  };
  for (const auto& [k, node] : tree) {
    if (node.empty())
      put(k, node.data());
    else
      for (const auto& [k2, leaf] : node) put(k2, leaf.data());
  }
  return out;
}

void apply(ExperimentSpec& s, const std::string& key, const std::string& v) {
  if (key == "kind") s.kind = parse_kind(v);
  else if (key == "d") s.d = parse_value<int>(key, v);
  else if (key == "r") s.r = parse_value<int>(key, v);
  else if (key == "rule") s.rule = parse_rule(v);
  else if (key == "window") s.extent = parse_list<Coord>(key, v);
  else if (key == "boundary") s.boundary = v;
  else if (key == "p") s.p_grid = parse_list<double>(key, v);
  else if (key == "q") s.q_grid = parse_list<double>(key, v);
  else if (key == "L") s.L = parse_value<Coord>(key, v);
  else if (key == "trials") s.trials = parse_value<std::size_t>(key, v);
  else if (key == "seed") s.seed = parse_value<std::uint64_t>(key, v);
  else if (key == "workers") s.workers = parse_value<unsigned>(key, v);
  else if (key == "margin") s.margin = parse_value<Coord>(key, v);
  else if (key == "k_max") s.k_max = parse_value<Coord>(key, v);
  else if (key == "sprinkle_p") s.sprinkle_p = parse_value<double>(key, v);
  else if (key == "memory_cap_mb") s.memory_cap_mb = parse_value<std::size_t>(key, v);
  else if (key == "out_dir") s.out_dir = v;
  else if (key == "svg") s.svg = parse_bool(key, v);
  else if (key == "timing") s.timing = parse_bool(key, v);
  else if (key == "name") s.name = v;
  else throw UsageError(key + ": unknown setting");
}

std::string list_string(const std::vector<double>& v) {
  std::string s;
  for (double x : v) s += (s.empty() ? "" : ", ") + num(x);
  return s;
}

std::string to_ini(const ExperimentSpec& s) {
  std::ostringstream os;
  os << "[experiment]\n"
     << "name = " << s.name << "\n"
     << "kind = " << to_string(s.kind) << "\n"
     << "seed = " << (s.seed ? std::to_string(*s.seed) : "") << "\n"
     << "trials = " << s.trials << "\n\n"
     << "[model]\n"
     << "d = " << s.d << "\n"
     << "r = " << s.r << "\n"
     << "rule = " << to_string(s.rule) << "\n"
     << "p = " << list_string(s.p_grid) << "\n"
     << "q = " << list_string(s.q_grid) << "\n"
     << "boundary = " << s.boundary << "\n\n"
     << "[window]\n"
     << "window = " << window_string(s.extent) << "\n\n"
     << "[sail]\n"
     << "L = " << s.L << "\n\n"
     << "[curtain]\n"
     << "k_max = " << s.k_max << "\n"
     << "margin = " << s.margin << "\n\n"
     << "[nucleation]\n"
     << "sprinkle_p = " << num(s.sprinkle_p) << "\n\n"
     << "[run]\n"
     << "memory_cap_mb = " << s.memory_cap_mb << "\n";
  std::string out = os.str();
  // window_string joins with x; the reader expects commas.
  const auto at = out.find("window = ");
  for (auto i = at; i < out.size() && out[i] != '\n'; ++i)
    if (out[i] == 'x') out[i] = ',';
  return out;
}

// Defaults that make each verb meaningful out of the box.
ExperimentSpec defaults_for(ExperimentKind k) {
  ExperimentSpec s;
  s.kind = k;
  switch (k) {
    case ExperimentKind::PhiSweep: break;
    case ExperimentKind::CurtainStats:
      s.p_grid = {0.0};
      s.q_grid = {0.001};
      s.trials = 1000;
      break;
    case ExperimentKind::SailDemo:
      s.p_grid = {0.5};
      s.q_grid = {0.005};
      s.trials = 100;
      break;
    case ExperimentKind::ActivationDemo:
      s.L = 3;
      s.p_grid = {0.99};
      s.q_grid = {1e-5};
      s.trials = 8;
      break;
    case ExperimentKind::ExcellentField:
    case ExperimentKind::Nucleation:
      s.L = 3;
      s.p_grid = {0.99};
      s.q_grid = {1e-5};
      s.extent = {4, 4};
      s.trials = 4;
      s.sprinkle_p = 0.998;  // about one brick in five fully occupied at L = 3
      break;
  }
  return s;
}

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> workers;
  std::optional<std::string> out_dir;
  bool svg = false;
  bool timing = false;
  Settings overrides;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "key = value config file (INI sections allowed)");
  cmd->add_option("--seed", c.seed, "master seed (required unless set in the config)");
  cmd->add_option("--workers", c.workers, "worker threads (results do not depend on this)");
  cmd->add_option("--out-dir", c.out_dir, "directory for CSV and figures");
  cmd->add_flag("--svg", c.svg, "also emit SVG figures");
  cmd->add_flag("--timing", c.timing, "fill the runtime_s column");
  for (const char* key : {"p", "q", "window", "trials", "L", "rule", "r", "d", "boundary", "k_max", "margin",
                          "sprinkle_p", "memory_cap_mb"}) {
    const std::string flag = std::string("--") + key;
    cmd->add_option_function<std::string>(
        flag, [&c, k = std::string(key)](const std::string& v) { c.overrides[k] = v; }, "override '" + std::string(key) + "'");
  }
}

ExperimentSpec resolve(ExperimentSpec s, const Common& c) {
  bool window_set = false, d_set = false;
  auto set = [&](const std::string& k, const std::string& v) {
    window_set = window_set || k == "window";
    d_set = d_set || k == "d";
    apply(s, k, v);
  };
  if (!c.config.empty())
    for (const auto& [k, v] : read_config(c.config)) {
      if (k == "kind" && parse_kind(v) != s.kind)
        throw UsageError("kind: config says '" + v + "' but the verb runs '" + to_string(s.kind) + "'");
      set(k, v);
    }
  for (const auto& [k, v] : c.overrides) set(k, v);
  // A phi window fixes the dimension unless d is given explicitly.
  if (s.kind == ExperimentKind::PhiSweep && window_set && !d_set) s.d = static_cast<int>(s.extent.size());
  if (c.seed) s.seed = *c.seed;
  if (c.workers) s.workers = *c.workers;
  if (c.out_dir) s.out_dir = *c.out_dir;
  s.svg = s.svg || c.svg;
  s.timing = s.timing || c.timing;
  return s;
}

int run_experiment(const ExperimentSpec& s) {
  for (const auto& w : s.warnings) std::cerr << "warning: " << w << '\n';
  const auto res = pbp::run(s);
  for (const auto& f : res.files) std::cout << "wrote " << f << '\n';
  return 0;
}

int sample_verb(const ExperimentSpec& s) {
  validate(s);
  check_resources(s);
  const auto cfg = sample_config(BoxWindow::centered(s.extent), s.p_grid.front(), s.q_grid.front(), CouplingSource{*s.seed});
  std::filesystem::create_directories(s.out_dir);
  const std::string path = (std::filesystem::path(s.out_dir) / "sample.pbp").string();
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path + " for writing");
  write_snapshot(cfg, f);
  if (!f) throw IoError("write failed: " + path);
  std::cout << "window " << cfg.window().describe() << " closed " << cfg.count(SiteState::Closed) << " occupied "
            << cfg.count(SiteState::Occupied) << " vacant " << cfg.count(SiteState::OpenVacant) << '\n'
            << "wrote " << path << '\n';
  return 0;
}

int evolve_verb(const ExperimentSpec& s, const std::string& input) {
  Configuration cfg;
  if (!input.empty()) {
    std::ifstream f(input, std::ios::binary);
    if (!f) throw IoError("cannot open " + input);
    try {
      cfg = read_snapshot(f);
    } catch (const FormatError& e) {
      throw IoError(std::string("bad snapshot: ") + e.what());
    }
  } else {
    validate(s);
    check_resources(s);
    cfg = sample_config(BoxWindow::centered(s.extent), s.p_grid.front(), s.q_grid.front(), CouplingSource{*s.seed});
  }
  const auto res = run_fixpoint(cfg, s.rule_obj(), boundary_policy(s));
  const Point origin(static_cast<std::size_t>(cfg.window().dim()), 0);
  std::cout << "rule " << to_string(s.rule) << " r=" << s.r << " rounds " << res.rounds_elapsed << " occupied "
            << res.final.count(SiteState::Occupied) << "/" << cfg.window().size();
  if (cfg.window().contains(origin)) {
    const auto t = res.round_at(origin);
    std::cout << " origin " << (t == EvolutionResult::kNever ? std::string("never") : "round " + std::to_string(t));
  }
  std::cout << '\n';
  std::filesystem::create_directories(s.out_dir);
  const std::string path = (std::filesystem::path(s.out_dir) / "evolve.pbp").string();
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path + " for writing");
  write_snapshot(res.final, f);
  std::cout << "wrote " << path << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Polluted bootstrap percolation: simulation, curtains, sails and renormalization experiments"};
  app.require_subcommand(1);
  Common common;

  struct Verb {
    const char* name;
    ExperimentKind kind;
    const char* help;
  };
  const Verb experiment_verbs[] = {
      {"phi", ExperimentKind::PhiSweep, "estimate P(origin eventually occupied) over a (p, q) grid"},
      {"curtain", ExperimentKind::CurtainStats, "curtain statistics along the diagonal ray"},
      {"sail", ExperimentKind::SailDemo, "sail search on synthetic proto-bricks"},
      {"activate", ExperimentKind::ActivationDemo, "activation between successive bricks, plus the gadget"},
      {"excellent", ExperimentKind::ExcellentField, "excellent-site field and oriented paths"},
      {"nucleate", ExperimentKind::Nucleation, "two-level sprinkling and chained activation"},
  };
  std::map<CLI::App*, ExperimentKind> kinds;
  for (const auto& v : experiment_verbs) {
    auto* cmd = app.add_subcommand(v.name, v.help);
    add_common(cmd, common);
    kinds[cmd] = v.kind;
  }
  auto* sample = app.add_subcommand("sample", "sample an initial configuration and write a snapshot");
  add_common(sample, common);
  auto* evolve = app.add_subcommand("evolve", "run the dynamics to its fixpoint");
  add_common(evolve, common);
  std::string input;
  evolve->add_option("--input", input, "snapshot to evolve instead of a fresh sample");

  auto* preset_cmd = app.add_subcommand("preset", "print a preset experiment as a config, or run it");
  add_common(preset_cmd, common);
  std::string preset_name;
  bool preset_run = false;
  preset_cmd->add_option("name", preset_name, "preset name")->required();
  preset_cmd->add_flag("--run", preset_run, "run the preset instead of printing it");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    for (auto& [cmd, kind] : kinds)
      if (cmd->parsed()) return run_experiment(resolve(defaults_for(kind), common));
    if (sample->parsed()) return sample_verb(resolve(defaults_for(ExperimentKind::PhiSweep), common));
    if (evolve->parsed()) {
      ExperimentSpec s = defaults_for(ExperimentKind::PhiSweep);
      if (!input.empty()) s.seed = 0;  // nothing random
      return evolve_verb(resolve(s, common), input);
    }
    if (preset_cmd->parsed()) {
      ExperimentSpec s = resolve(preset(preset_name), common);
      if (preset_run) return run_experiment(s);
      for (const auto& w : s.warnings) std::cerr << "warning: " << w << '\n';
      std::cout << to_ini(s);
      return 0;
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ParameterError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ResourceError& e) {
    std::cerr << "resource guard: " << e.what() << " (estimate " << e.estimate_bytes << " bytes)\n";
    return kExitGuard;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return kExitIo;
  }
  return kExitUsage;
}
