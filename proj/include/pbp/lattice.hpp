#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace pbp {

using Coord = std::int64_t;
using Point = std::vector<Coord>;

inline constexpr int kMaxDim = 16;

struct ParameterError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct SizeError : std::length_error {
  using std::length_error::length_error;
};
struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};
struct PreconditionError : std::logic_error {
  using std::logic_error::logic_error;
};

enum class SiteState : std::uint8_t { OpenVacant = 0, Occupied = 1, Closed = 2 };

inline constexpr bool is_open(SiteState s) { return s != SiteState::Closed; }

inline const char* to_string(SiteState s) {
  switch (s) {
    case SiteState::OpenVacant: return "open";
    case SiteState::Occupied: return "occupied";
    case SiteState::Closed: return "closed";
  }
  return "?";
}

// Half-open box  prod_i [origin_i, origin_i + extent_i).  Linear indices are
// row-major with the first coordinate fastest.
class BoxWindow {
 public:
  BoxWindow() = default;

  BoxWindow(std::vector<Coord> origin, std::vector<Coord> extent)
      : origin_(std::move(origin)), extent_(std::move(extent)) {
    if (origin_.empty() || origin_.size() != extent_.size())
      throw ParameterError("BoxWindow: origin and extent must have equal nonzero length");
    if (origin_.size() > static_cast<std::size_t>(kMaxDim))
      throw ParameterError("BoxWindow: dimension exceeds " + std::to_string(kMaxDim));
    volume_ = 1;
    for (Coord e : extent_) {
      if (e <= 0) throw ParameterError("BoxWindow: extents must be positive");
      if (volume_ > (Coord{1} << 62) / e) throw SizeError("BoxWindow: volume overflows");
      volume_ *= e;
    }
  }

  /// Box of side `side` in every direction with the origin site near its center.
  static BoxWindow centered(int dim, Coord side) {
    return centered(std::vector<Coord>(static_cast<std::size_t>(dim), side));
  }
  static BoxWindow centered(std::vector<Coord> extent) {
    std::vector<Coord> origin(extent.size());
    for (std::size_t i = 0; i < extent.size(); ++i) origin[i] = -(extent[i] / 2);
    return BoxWindow(std::move(origin), std::move(extent));
  }
  /// Box spanning the inclusive corners lo..hi.
  static BoxWindow spanning(std::span<const Coord> lo, std::span<const Coord> hi) {
    std::vector<Coord> o(lo.begin(), lo.end()), e(lo.size());
    for (std::size_t i = 0; i < lo.size(); ++i) e[i] = hi[i] - lo[i] + 1;
    return BoxWindow(std::move(o), std::move(e));
  }

  int dim() const { return static_cast<int>(origin_.size()); }
  const std::vector<Coord>& origin() const { return origin_; }
  const std::vector<Coord>& extent() const { return extent_; }
  Coord lo(int axis) const { return origin_[axis]; }
  /// Exclusive upper bound along `axis`.
  Coord hi(int axis) const { return origin_[axis] + extent_[axis]; }
  Coord volume() const { return volume_; }
  std::size_t size() const { return static_cast<std::size_t>(volume_); }

  bool contains(std::span<const Coord> x) const {
    if (static_cast<int>(x.size()) != dim()) return false;
    for (std::size_t i = 0; i < x.size(); ++i)
      if (x[i] < origin_[i] || x[i] >= origin_[i] + extent_[i]) return false;
    return true;
  }

  bool contains(const BoxWindow& other) const {
    if (other.dim() != dim()) return false;
    for (int i = 0; i < dim(); ++i)
      if (other.lo(i) < lo(i) || other.hi(i) > hi(i)) return false;
    return true;
  }

  std::size_t index_of(std::span<const Coord> x) const {
    std::size_t idx = 0;
    for (int i = dim() - 1; i >= 0; --i)
      idx = idx * static_cast<std::size_t>(extent_[i]) + static_cast<std::size_t>(x[i] - origin_[i]);
    return idx;
  }

  Point point_at(std::size_t idx) const {
    Point x(origin_.size());
    for (std::size_t i = 0; i < origin_.size(); ++i) {
      auto e = static_cast<std::size_t>(extent_[i]);
      x[i] = origin_[i] + static_cast<Coord>(idx % e);
      idx /= e;
    }
    return x;
  }

  std::size_t stride(int axis) const {
    std::size_t s = 1;
    for (int i = 0; i < axis; ++i) s *= static_cast<std::size_t>(extent_[i]);
    return s;
  }

  BoxWindow grown(Coord margin) const {
    std::vector<Coord> o(origin_), e(extent_);
    for (std::size_t i = 0; i < o.size(); ++i) {
      o[i] -= margin;
      e[i] += 2 * margin;
    }
    return BoxWindow(std::move(o), std::move(e));
  }

  BoxWindow translated(std::span<const Coord> v) const {
    std::vector<Coord> o(origin_);
    for (std::size_t i = 0; i < o.size(); ++i) o[i] += v[i];
    return BoxWindow(std::move(o), extent_);
  }

  /// True if x lies in the window but on its outermost layer.
  bool on_frame(std::span<const Coord> x) const {
    for (int i = 0; i < dim(); ++i)
      if (x[i] == lo(i) || x[i] == hi(i) - 1) return true;
    return false;
  }

  Coord max_extent() const { return *std::max_element(extent_.begin(), extent_.end()); }

  std::string describe() const {
    std::string s;
    for (int i = 0; i < dim(); ++i) {
      if (i) s += 'x';
      s += std::to_string(extent_[i]);
    }
    return s;
  }

  friend bool operator==(const BoxWindow&, const BoxWindow&) = default;

  /// Visits every site in index order; the callback receives (index, coordinates).
  template <class Fn>
  void for_each(Fn&& fn) const {
    Point x(origin_);
    for (std::size_t idx = 0; idx < size(); ++idx) {
      fn(idx, std::span<const Coord>(x));
      for (int i = 0; i < dim(); ++i) {
        if (++x[i] < hi(i)) break;
        x[i] = origin_[i];
      }
    }
  }

 private:
  std::vector<Coord> origin_;
  std::vector<Coord> extent_;
  Coord volume_ = 0;
};

struct ConfigMeta {
  double p = 0.0;
  double q = 0.0;
  std::uint64_t seed = 0;
  std::uint32_t generation = 0;

  friend bool operator==(const ConfigMeta&, const ConfigMeta&) = default;
};

// Three-state field over a window, 2 bits per site, 4 sites per byte,
// site i at bits 2*(i%4) of byte i/4.
class Configuration {
 public:
  Configuration() = default;

  explicit Configuration(BoxWindow window, SiteState fill = SiteState::OpenVacant, ConfigMeta meta = {})
      : window_(std::move(window)), meta_(meta) {
    const auto code = static_cast<std::uint8_t>(fill);
    const std::uint8_t byte = static_cast<std::uint8_t>(code | code << 2 | code << 4 | code << 6);
    packed_.assign(packed_length(window_.size()), byte);
    clear_tail();
  }

  static std::size_t packed_length(std::size_t sites) { return (sites + 3) / 4; }

  static Configuration from_states(BoxWindow window, std::span<const SiteState> states, ConfigMeta meta = {}) {
    if (states.size() != window.size())
      throw ParameterError("Configuration: state count does not match window volume");
    Configuration c(std::move(window), SiteState::OpenVacant, meta);
    for (std::size_t i = 0; i < states.size(); ++i) c.set(i, states[i]);
    return c;
  }

  static Configuration from_packed(BoxWindow window, std::vector<std::uint8_t> packed, ConfigMeta meta) {
    if (packed.size() != packed_length(window.size()))
      throw FormatError("Configuration: packed length " + std::to_string(packed.size()) + " does not match expected " +
                        std::to_string(packed_length(window.size())));
    Configuration c;
    c.window_ = std::move(window);
    c.meta_ = meta;
    c.packed_ = std::move(packed);
    for (std::size_t i = 0; i < c.window_.size(); ++i)
      if (((c.packed_[i >> 2] >> ((i & 3) * 2)) & 3) == 3) throw FormatError("Configuration: reserved state code 3");
    return c;
  }

  const BoxWindow& window() const { return window_; }
  const ConfigMeta& meta() const { return meta_; }
  ConfigMeta& meta() { return meta_; }
  std::size_t size() const { return window_.size(); }
  const std::vector<std::uint8_t>& packed() const { return packed_; }

  SiteState get(std::size_t i) const {
    return static_cast<SiteState>((packed_[i >> 2] >> ((i & 3) * 2)) & 3);
  }

  void set(std::size_t i, SiteState s) {
    const int shift = static_cast<int>(i & 3) * 2;
    auto& b = packed_[i >> 2];
    b = static_cast<std::uint8_t>((b & ~(3 << shift)) | (static_cast<int>(s) << shift));
  }

  SiteState at(std::span<const Coord> x) const { return get(window_.index_of(x)); }
  void set_at(std::span<const Coord> x, SiteState s) { set(window_.index_of(x), s); }

  /// State at x, or `outside` when x is not in the window.
  SiteState state_or(std::span<const Coord> x, SiteState outside) const {
    return window_.contains(x) ? at(x) : outside;
  }

  std::vector<SiteState> unpack() const {
    std::vector<SiteState> out(size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = get(i);
    return out;
  }

  std::size_t count(SiteState s) const {
    std::size_t n = 0;
    for (std::size_t i = 0; i < size(); ++i) n += get(i) == s;
    return n;
  }

  friend bool operator==(const Configuration& a, const Configuration& b) {
    return a.window_ == b.window_ && a.packed_ == b.packed_ && a.meta_ == b.meta_;
  }

  bool same_states(const Configuration& other) const {
    return window_ == other.window_ && packed_ == other.packed_;
  }

 private:
  void clear_tail() {
    // Padding bits past the last site are kept zero so packed buffers compare bytewise.
    const std::size_t n = window_.size();
    if (n % 4 && !packed_.empty()) packed_.back() &= static_cast<std::uint8_t>((1u << (2 * (n % 4))) - 1);
  }

  BoxWindow window_;
  ConfigMeta meta_;
  std::vector<std::uint8_t> packed_;
};

}  // namespace pbp
