#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "curtain.hpp"
#include "renorm.hpp"
#include "sail.hpp"

namespace pbp {

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Shortest round-trip decimal form, plain notation unless that gets long;
// empty for NaN so missing values stay blank.
inline std::string num(double v) {
  if (std::isnan(v)) return "";
  char buf[400];
  auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed);
  if (r.ec == std::errc{} && r.ptr - buf <= 20) return {buf, r.ptr};
  r = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, r.ptr};
}

inline std::string num(std::optional<double> v) { return v ? num(*v) : std::string{}; }

// ---------------------------------------------------------------------------
// CSV.  Fixed leading columns; `stat` says which quantity `estimate` holds and
// `check` carries any pass/fail flag attached to the row.

struct CsvRow {
  std::string kind;
  int d = 3;
  int r = 2;
  std::string rule;
  double p = 0.0;
  double q = 0.0;
  std::optional<Coord> L;
  std::string window;  // e.g. 96x96x96
  std::size_t trials = 0;
  std::uint64_t seed = 0;
  double estimate = std::nan("");
  double ci_lo = std::nan("");
  double ci_hi = std::nan("");
  double mean_T = std::nan("");
  std::optional<double> runtime_s;
  std::string stat;
  std::string check;
};

inline const char* csv_header() {
  return "kind,d,r,rule,p,q,L,window,trials,seed,estimate,ci_lo,ci_hi,mean_T,runtime_s,stat,check";
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline std::string csv_line(const CsvRow& r) {
  std::ostringstream os;
  os << csv_field(r.kind) << ',' << r.d << ',' << r.r << ',' << r.rule << ',' << num(r.p) << ',' << num(r.q) << ','
     << (r.L ? std::to_string(*r.L) : "") << ',' << r.window << ',' << r.trials << ',' << r.seed << ','
     << num(r.estimate) << ',' << num(r.ci_lo) << ',' << num(r.ci_hi) << ',' << num(r.mean_T) << ','
     << num(r.runtime_s) << ',' << csv_field(r.stat) << ',' << csv_field(r.check);
  return os.str();
}

inline void write_csv(std::ostream& os, const std::vector<CsvRow>& rows) {
  os << csv_header() << '\n';
  for (const auto& r : rows) os << csv_line(r) << '\n';
}

inline std::string window_string(const std::vector<Coord>& extent) {
  std::string s;
  for (std::size_t i = 0; i < extent.size(); ++i) s += (i ? "x" : "") + std::to_string(extent[i]);
  return s;
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path + " for writing");
  f << content;
  if (!f) throw IoError("write failed: " + path);
}

// ---------------------------------------------------------------------------
// SVG.

namespace detail {

// Isometric projection: x1 to the lower right, x2 to the lower left, x3 up.
struct Iso {
  double scale = 8.0;
  double sx(const Vec3& x) const { return scale * 0.8660254037844386 * static_cast<double>(x[0] - x[1]); }
  double sy(const Vec3& x) const { return scale * (0.5 * static_cast<double>(x[0] + x[1]) - static_cast<double>(x[2])); }
};

inline std::string layer_colour(std::size_t i, std::size_t n) {
  const double t = n > 1 ? static_cast<double>(i) / static_cast<double>(n - 1) : 0.0;
  const int r = static_cast<int>(40 + 200 * t), g = static_cast<int>(90 + 60 * (1 - t)), b = static_cast<int>(220 - 180 * t);
  return "rgb(" + std::to_string(r) + "," + std::to_string(g) + "," + std::to_string(b) + ")";
}

struct Bounds {
  double x0 = 1e300, y0 = 1e300, x1 = -1e300, y1 = -1e300;
  void add(double x, double y) {
    x0 = std::min(x0, x), x1 = std::max(x1, x), y0 = std::min(y0, y), y1 = std::max(y1, y);
  }
  std::string viewbox(double pad) const {
    if (x0 > x1) return "0 0 1 1";
    return num(x0 - pad) + " " + num(y0 - pad) + " " + num(x1 - x0 + 2 * pad) + " " + num(y1 - y0 + 2 * pad);
  }
};

}  // namespace detail

/// One polyline per curtain layer, isometric view.
inline std::string curtain_svg(const Curtain& c, double scale = 8.0) {
  const detail::Iso iso{scale};
  detail::Bounds bb;
  std::ostringstream body;
  for (std::size_t i = 0; i < c.layers.size(); ++i) {
    const auto& layer = c.layers[i];
    if (layer.path.empty()) continue;
    body << "<polyline fill=\"none\" stroke-width=\"" << num(scale / 4) << "\" stroke=\""
         << detail::layer_colour(i, c.layers.size()) << "\" points=\"";
    for (const auto& x : layer.path) {
      bb.add(iso.sx(x), iso.sy(x));
      body << num(iso.sx(x)) << ',' << num(iso.sy(x)) << ' ';
    }
    body << "\"><title>k=" << layer.k << "</title></polyline>\n";
  }
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"" << bb.viewbox(2 * scale) << "\">\n"
     << body.str() << "</svg>\n";
  return os.str();
}

/// Proto-sites of a sail as isometric cubes' top faces, coloured by layer;
/// occupied proto-sites get a dark outline.
inline std::string sail_svg(const SailSet& s, const ProtoBrick* pb = nullptr, double scale = 12.0) {
  const detail::Iso iso{scale};
  detail::Bounds bb;
  auto sorted = s.proto;
  // Paint far-to-near so nearer faces cover farther ones.
  std::sort(sorted.begin(), sorted.end(), [](const Vec3& a, const Vec3& b) {
    return std::make_tuple(a[2], a[0] + a[1], a[0]) < std::make_tuple(b[2], b[0] + b[1], b[0]);
  });
  const std::size_t layers = static_cast<std::size_t>(2 * s.L);
  std::ostringstream body;
  for (const auto& x : sorted) {
    const Vec3 c[4] = {x, x + Vec3{1, 0, 0}, x + Vec3{1, 1, 0}, x + Vec3{0, 1, 0}};
    body << "<polygon fill=\"" << detail::layer_colour(static_cast<std::size_t>(x[2]), layers) << "\"";
    const bool occ = pb && pb->occupied(x);
    body << " stroke=\"" << (occ ? "black" : "white") << "\" stroke-width=\"" << num(occ ? scale / 5 : scale / 20)
         << "\" points=\"";
    for (const auto& v : c) {
      bb.add(iso.sx(v), iso.sy(v));
      body << num(iso.sx(v)) << ',' << num(iso.sy(v)) << ' ';
    }
    body << "\"/>\n";
  }
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"" << bb.viewbox(scale) << "\">\n"
     << body.str() << "</svg>\n";
  return os.str();
}

struct HeatCell {
  double p = 0.0, q = 0.0, value = 0.0;
};

/// Estimate over the (p, q) grid; p along x, q along y (both in grid order).
inline std::string heatmap_svg(const std::vector<HeatCell>& cells, const std::string& title) {
  std::vector<double> ps, qs;
  for (const auto& c : cells) {
    if (std::find(ps.begin(), ps.end(), c.p) == ps.end()) ps.push_back(c.p);
    if (std::find(qs.begin(), qs.end(), c.q) == qs.end()) qs.push_back(c.q);
  }
  const int cw = 90, ch = 40, left = 80, top = 40;
  const int width = left + cw * static_cast<int>(ps.size()) + 20, height = top + ch * static_cast<int>(qs.size()) + 40;
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height << "\""
     << " font-family=\"monospace\" font-size=\"12\">\n";
  os << "<text x=\"" << left << "\" y=\"20\">" << title << "</text>\n";
  for (const auto& c : cells) {
    const auto i = std::find(ps.begin(), ps.end(), c.p) - ps.begin();
    const auto j = std::find(qs.begin(), qs.end(), c.q) - qs.begin();
    const int x = left + cw * static_cast<int>(i), y = top + ch * static_cast<int>(j);
    const int shade = static_cast<int>(std::lround(255 * (1.0 - std::clamp(c.value, 0.0, 1.0))));
    os << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << cw << "\" height=\"" << ch << "\" fill=\"rgb("
       << shade << "," << shade << ",255)\" stroke=\"white\"/>\n";
    os << "<text x=\"" << x + 8 << "\" y=\"" << y + 24 << "\" fill=\"" << (c.value > 0.5 ? "white" : "black") << "\">"
       << num(std::round(c.value * 1000) / 1000) << "</text>\n";
  }
  for (std::size_t j = 0; j < qs.size(); ++j)
    os << "<text x=\"4\" y=\"" << top + ch * static_cast<int>(j) + 24 << "\">q=" << num(qs[j]) << "</text>\n";
  for (std::size_t i = 0; i < ps.size(); ++i)
    os << "<text x=\"" << left + cw * static_cast<int>(i) + 8 << "\" y=\"" << height - 12 << "\">p=" << num(ps[i])
       << "</text>\n";
  os << "</svg>\n";
  return os.str();
}

// ---------------------------------------------------------------------------
// PBM bitmap of the excellent field: black = excellent, a1 to the right,
// a2 upward.

inline std::string excellent_pbm(const ExcellentField& f) {
  const BoxWindow& w = f.window;
  std::ostringstream os;
  os << "P1\n" << w.extent()[0] << ' ' << w.extent()[1] << '\n';
  for (Coord b = w.hi(1) - 1; b >= w.lo(1); --b) {
    for (Coord a = w.lo(0); a < w.hi(0); ++a) os << (a > w.lo(0) ? " " : "") << (f.at({a, b}) ? 1 : 0);
    os << '\n';
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Gadget and sail data.

inline nlohmann::json brick_json(const Brick& b, const std::string& name) {
  const auto bx = b.box();
  const Vec3 lo = lo3(bx), hi = hi3(bx);
  return {{"name", name},
          {"corner", {b.corner()[0], b.corner()[1], b.corner()[2]}},
          {"lo", {lo[0], lo[1], lo[2]}},
          {"dims", {hi[0] - lo[0], hi[1] - lo[1], hi[2] - lo[2]}},
          {"eta", b.eta.code()}};
}

inline nlohmann::json gadget_json(const Gadget& g) {
  nlohmann::json j;
  j["L"] = g.L;
  j["u"] = {g.u[0], g.u[1], g.u[2]};
  j["u_prime"] = {g.u_prime[0], g.u_prime[1], g.u_prime[2]};
  j["C"] = g.C;
  j["choices"] = g.choices;
  j["choices_prime"] = g.choices_prime;
  auto& bricks = j["bricks"] = nlohmann::json::array();
  bricks.push_back(brick_json(g.base, "B"));
  for (int i = 0; i < 3; ++i) bricks.push_back(brick_json(g.chain[i], "B" + std::to_string(i + 1)));
  for (int i = 0; i < 3; ++i) bricks.push_back(brick_json(g.chain_prime[i], "B" + std::to_string(i + 1) + "'"));
  j["violations"] = gadget_violations(g);
  return j;
}

/// Proto-sites of a sail, one per row, with the occupied flag from the proto-brick.
inline std::string sail_csv(const SailSet& s, const ProtoBrick& pb) {
  std::ostringstream os;
  os << "x1,x2,x3,sum,occupied\n";
  for (const auto& x : s.proto)
    os << x[0] << ',' << x[1] << ',' << x[2] << ',' << sum(x) << ',' << (pb.occupied(x) ? 1 : 0) << '\n';
  return os.str();
}

}  // namespace pbp
