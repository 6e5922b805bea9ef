#pragma once

// The bipartite graph on Pi (left) and Pi' (right) induced by the radius fields.

#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "factormatch/graphs.hpp"
#include "factormatch/processes.hpp"
#include "factormatch/radii.hpp"

namespace factormatch {

enum class PointSide : std::uint8_t { left, right };

struct PointRef {
  PointSide side = PointSide::left;
  VertexId vertex = 0;
  std::uint32_t index = 1;

  friend auto operator<=>(const PointRef&, const PointRef&) = default;
};

enum EdgeOrigin : std::uint8_t { kFromLeft = 1, kFromRight = 2 };

struct MatchEdge {
  std::uint32_t left = 0;   // position among left points
  std::uint32_t right = 0;  // position among right points
  std::uint8_t origin = kFromLeft | kFromRight;
  int distance = 0;
};

/// Immutable after construction. Points are addressed by position on their
/// side; adjacency lists are sorted.
class MatchGraph {
 public:
  MatchGraph() = default;
  /// `counted[i]` marks points that enter density estimates (core points);
  /// densities divide by `density_base`.
  MatchGraph(std::vector<PointRef> left, std::vector<PointRef> right, std::vector<MatchEdge> edges,
             std::vector<std::uint8_t> left_counted, std::vector<std::uint8_t> right_counted,
             std::size_t density_base);

  /// Synthetic instance: left point i sits at vertex i, right point j at vertex j.
  static MatchGraph from_edges(std::size_t left, std::size_t right,
                               std::span<const std::pair<std::uint32_t, std::uint32_t>> edges);

  std::size_t left_size() const noexcept { return left_.size(); }
  std::size_t right_size() const noexcept { return right_.size(); }
  const PointRef& left(std::uint32_t i) const { return left_[i]; }
  const PointRef& right(std::uint32_t j) const { return right_[j]; }
  std::span<const std::uint32_t> left_adjacency(std::uint32_t i) const;
  std::span<const std::uint32_t> right_adjacency(std::uint32_t j) const;
  bool has_edge(std::uint32_t i, std::uint32_t j) const;
  std::span<const MatchEdge> edges() const noexcept { return edges_; }
  /// Window distance between the vertices of an adjacent pair.
  int edge_distance(std::uint32_t i, std::uint32_t j) const;

  bool left_counted(std::uint32_t i) const { return left_counted_[i] != 0; }
  bool right_counted(std::uint32_t j) const { return right_counted_[j] != 0; }
  std::size_t density_base() const noexcept { return density_base_; }

  std::optional<std::uint32_t> find(const PointRef& p) const;

  std::size_t dropped_left = 0;   // points at censored vertices
  std::size_t dropped_right = 0;

 private:
  std::vector<PointRef> left_, right_;
  std::vector<MatchEdge> edges_;
  std::vector<std::uint32_t> left_offset_, left_adj_, right_offset_, right_adj_;
  std::vector<std::uint32_t> left_edge_;  // edge position for each left_adj_ entry
  std::vector<std::uint8_t> left_counted_, right_counted_;
  std::size_t density_base_ = 1;
  std::unordered_map<std::uint64_t, std::uint32_t> lookup_;
};

/// Edges x -> x' when dist <= R_x and x' -> x when dist <= R'_{x'}. Points
/// at censored vertices are dropped. Density counts use core points.
MatchGraph build_match_graph(const PointMultiset& pi, const PointMultiset& pi_prime,
                             const RadiusField& r, const RadiusField& r_prime,
                             const GraphWindow& w);

/// Union of adjacencies of a one-sided set; ContractViolation on mixed sides
/// or unknown points.
std::vector<PointRef> neighborhood(const MatchGraph& g, std::span<const PointRef> a);

struct DensityEstimate {
  double value = 0.0;
  double std_error = 0.0;
  std::size_t core_size = 0;
  std::size_t trials = 1;
};

/// Points of A that count toward densities, divided by the density base.
DensityEstimate density(const MatchGraph& g, std::span<const PointRef> a);

/// Mean and standard error of per-trial values.
DensityEstimate aggregate(std::span<const double> per_trial, std::size_t core_size);

/// Lines "L vertex index | R vertex index".
std::string dump(const MatchGraph& g);

}  // namespace factormatch
