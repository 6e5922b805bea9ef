#pragma once

// Point processes on a window: unit-intensity Poisson and perturbed vertex sets.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "factormatch/graphs.hpp"

namespace factormatch {

struct PoissonProcess {};

/// Each vertex emits one point, moved to a uniform vertex of the sphere
/// S_R(v) with R drawn from `distance_law` (index = distance).
struct PerturbedProcess {
  std::vector<double> distance_law;

  int max_distance() const { return static_cast<int>(distance_law.size()) - 1; }
  /// law {0 -> 1}: the vertex set itself.
  static PerturbedProcess degenerate() { return {{1.0}}; }
};

using ProcessSpec = std::variant<PoissonProcess, PerturbedProcess>;

std::string process_name(const ProcessSpec& spec);
/// Throws ConfigError unless the law is a probability vector.
void validate(const ProcessSpec& spec);
int max_displacement(const ProcessSpec& spec);

inline constexpr VertexId kNoOrigin = kOutside;

struct Point {
  VertexId vertex = 0;
  std::uint32_t index = 1;  // 1-based position among the points at `vertex`
  friend bool operator==(const Point&, const Point&) = default;
};

/// A realization {(v, i) : 1 <= i <= l_v}. Points are stored grouped by
/// vertex, vertices ascending, indices ascending.
class PointMultiset {
 public:
  PointMultiset() = default;
  /// Builds from counts; every point gets no origin.
  explicit PointMultiset(std::vector<std::uint32_t> counts);
  /// Builds from one (origin, landing) record per surviving point.
  PointMultiset(std::size_t vertex_count, std::span<const std::pair<VertexId, VertexId>> moves,
                std::uint64_t discarded);

  std::size_t vertex_count() const noexcept { return counts_.size(); }
  std::uint32_t count(VertexId v) const { return counts_[v]; }
  std::span<const std::uint32_t> counts() const noexcept { return counts_; }
  std::size_t total() const noexcept { return points_.size(); }
  std::span<const Point> points() const noexcept { return points_; }
  /// Positions in points() of the points at v.
  std::size_t first_point(VertexId v) const { return offset_[v]; }
  /// Origin of the k-th point (kNoOrigin for Poisson points).
  VertexId origin(std::size_t k) const { return origins_.empty() ? kNoOrigin : origins_[k]; }
  bool has_origins() const noexcept { return !origins_.empty(); }
  /// Perturbed points whose landing vertex fell outside the window.
  std::uint64_t discarded() const noexcept { return discarded_; }

  friend bool operator==(const PointMultiset&, const PointMultiset&) = default;

 private:
  void index_points();

  std::vector<std::uint32_t> counts_;
  std::vector<std::uint32_t> offset_;
  std::vector<Point> points_;
  std::vector<VertexId> origins_;
  std::uint64_t discarded_ = 0;
};

/// Per-vertex randomness comes from a stream keyed by (seed, canonical id),
/// so a vertex gets the same count in every window containing it.
/// Perturbed sampling requires window.core_margin() >= max displacement.
PointMultiset sample(const ProcessSpec& spec, const GraphWindow& window, std::uint64_t seed);

std::uint64_t count_in(const PointMultiset& pm, std::span<const VertexId> set);

struct HoleEstimate {
  double probability = 0.0;
  double std_error = 0.0;
  std::uint64_t trials = 0;
  std::uint64_t holes = 0;
  std::optional<double> analytic;  // exp(-b_r) for Poisson
};

/// Frequency of {no point in B_r(root)} over independent samples. Only the
/// part of the window that can influence the ball is sampled.
HoleEstimate hole_probability(const ProcessSpec& spec, const GraphWindow& window, int r,
                              std::uint64_t trials, std::uint64_t seed);

/// Text dump: "counts N" then N lines "vertex_id count"; for perturbed sets
/// "moves M" then M lines "origin_id landing_id", then "discarded K".
std::string dump(const PointMultiset& pm);
PointMultiset load_point_multiset(const std::string& text);

}  // namespace factormatch
