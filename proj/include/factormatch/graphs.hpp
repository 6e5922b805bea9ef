#pragma once

// Finite windows of transitive graph families and their metric quantities.

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace factormatch {

using VertexId = std::uint32_t;

inline constexpr VertexId kOutside = std::numeric_limits<VertexId>::max();
inline constexpr int kUnreachable = std::numeric_limits<int>::max();

struct RegularTree {
  int degree = 3;
};

/// Cayley graph of Z x Z_2 with generators (-1,0), (1,0), (0,1), (1,1), (-1,1).
struct LadderDiagonal {};

struct ExplicitFinite {
  /// adjacency[i] lists neighbor labels of the vertex labeled labels[i].
  std::vector<std::int64_t> labels;
  std::vector<std::vector<std::int64_t>> adjacency;
};

using GraphFamily = std::variant<RegularTree, LadderDiagonal, ExplicitFinite>;

std::string family_name(const GraphFamily& family);

/// Parses "id: n1 n2 n3" lines. Blank lines and lines starting with '#' are skipped.
ExplicitFinite parse_adjacency_list(const std::string& text);
ExplicitFinite load_adjacency_file(const std::string& path);

struct WindowOptions {
  std::size_t max_vertices = 4'000'000;
};

/// The ball B_L(root) of an infinite family graph, or the whole graph for
/// ExplicitFinite. Vertices are indexed in BFS order from the root with
/// neighbors discovered in generator order, so the index of a vertex does
/// not depend on L. Immutable after construction.
class GraphWindow {
 public:
  const GraphFamily& family() const noexcept { return family_; }
  VertexId root() const noexcept { return 0; }
  int depth() const noexcept { return depth_; }
  int core_margin() const noexcept { return core_margin_; }
  std::size_t size() const noexcept { return level_.size(); }

  /// Distance from the root.
  int level(VertexId v) const { return level_[v]; }
  bool in_core(VertexId v) const { return level_[v] <= depth_ - core_margin_; }
  std::vector<VertexId> core() const;
  std::size_t core_size() const;

  /// Neighbors inside the window, in generator order.
  std::span<const VertexId> neighbors(VertexId v) const;
  /// One entry per generator; kOutside where the neighbor lies beyond the window.
  std::span<const VertexId> slots(VertexId v) const;
  int full_degree(VertexId v) const { return static_cast<int>(slots(v).size()); }
  bool has_full_degree(VertexId v) const { return neighbors(v).size() == slots(v).size(); }

  /// Tree parent (kOutside for the root or non-tree families).
  VertexId parent(VertexId v) const { return parent_.empty() ? kOutside : parent_[v]; }

  /// Window-size-independent identifier; seeds per-vertex random streams.
  std::uint64_t canonical_id(VertexId v) const { return canonical_[v]; }

  /// Ladder coordinates (x, y); only for LadderDiagonal windows.
  std::pair<std::int64_t, int> ladder_coords(VertexId v) const;
  /// The vertex (x, 1-y), or kOutside.
  VertexId ladder_partner(VertexId v) const;

  /// Label from the adjacency file; only for ExplicitFinite windows.
  std::int64_t label(VertexId v) const { return labels_.empty() ? canonical_[v] : labels_[v]; }

  bool is_tree() const noexcept { return std::holds_alternative<RegularTree>(family_); }

  friend GraphWindow build_window(const GraphFamily&, int, int, const WindowOptions&);

 private:
  GraphFamily family_;
  int depth_ = 0;
  int core_margin_ = 0;
  std::vector<int> level_;
  std::vector<std::uint32_t> nbr_offset_;
  std::vector<VertexId> nbr_;
  std::vector<std::uint32_t> slot_offset_;
  std::vector<VertexId> slot_;
  std::vector<VertexId> parent_;
  std::vector<std::uint64_t> canonical_;
  std::vector<std::int64_t> labels_;
  std::vector<std::pair<std::int64_t, int>> coords_;
};

GraphWindow build_window(const GraphFamily& family, int depth, int core_margin,
                         const WindowOptions& options = {});

/// Shortest-path length inside the window; kUnreachable if disconnected.
int distance(const GraphWindow& w, VertexId u, VertexId v);

/// Distances from `source` to every window vertex, truncated at max_radius
/// (vertices further away get kUnreachable).
std::vector<int> bfs_distances(const GraphWindow& w, VertexId source,
                               int max_radius = kUnreachable);

struct VertexSet {
  std::vector<VertexId> vertices;  // BFS discovery order from the center
  bool complete = true;            // the metric set lies entirely inside the window
};

VertexSet ball(const GraphWindow& w, VertexId v, int r);
VertexSet sphere(const GraphWindow& w, VertexId v, int r);

/// Ball radius r around a vertex set. `complete` reports that it equals the
/// ball in the infinite family graph.
VertexSet ball_around(const GraphWindow& w, std::span<const VertexId> set, int r);

/// Minimum distance between two vertex sets.
int set_distance(const GraphWindow& w, std::span<const VertexId> a,
                 std::span<const VertexId> b);

/// b_r of the infinite family graph (for ExplicitFinite: |B_r(root)|).
std::uint64_t family_ball_size(const GraphFamily& family, int r);
/// |S_r| of the infinite family graph (RegularTree and LadderDiagonal only).
std::uint64_t family_sphere_size(const GraphFamily& family, int r);

struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;

  static Rational make(std::int64_t num, std::int64_t den);
  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  friend bool operator==(const Rational&, const Rational&) = default;
  friend bool operator<(const Rational& a, const Rational& b) {
    return static_cast<__int128>(a.num) * b.den < static_cast<__int128>(b.num) * a.den;
  }
  friend bool operator<=(const Rational& a, const Rational& b) { return !(b < a); }
};

struct CheegerOptions {
  int max_set_size_cap = 8;
};

/// min |dA|/|A| over connected A with |A| <= k whose boundary lies in the window.
/// Transitive families anchor A at the root; ExplicitFinite enumerates every A.
Rational cheeger_bound(const GraphWindow& w, int k, const CheegerOptions& options = {});

enum class SpectralMethod { closed_form, return_probability };

struct SpectralEstimate {
  double value = 0.0;         // primary estimate
  double root_estimate = 0.0; // p_{2n}(v,v)^{1/2n}, a lower bound
  int steps = 0;              // n
  bool amenable = false;      // value >= 1 (within rounding)
};

/// closed_form: 2 sqrt(d-1)/d for RegularTree(d).
/// return_probability: sqrt(p_{2n+2}/p_{2n}) from exact return probabilities of
/// the simple random walk at the root; needs window depth >= n + 2.
SpectralEstimate spectral_radius(const GraphFamily& family, SpectralMethod method, int n = 40,
                                 int window_depth = 45);

/// Enumerates every set S with start in S, S connected in the graph given by
/// `adjacent`, |S| <= max_size, S a subset of the candidates admitted by
/// `allowed`. Each set is reported once, as a vector in insertion order.
/// The callback returns false to stop. Returns true iff some set of size
/// max_size had an admissible extension (the cap truncated the enumeration),
/// or max_size == 0.
struct ConnectedEnumeration {
  bool truncated = false;
  bool stopped = false;
  std::uint64_t emitted = 0;
};

ConnectedEnumeration enumerate_connected_sets(
    VertexId start, std::size_t max_size,
    const std::function<void(VertexId, std::vector<VertexId>&)>& adjacent,
    const std::function<bool(VertexId)>& allowed,
    const std::function<bool(const std::vector<VertexId>&)>& callback);

}  // namespace factormatch
