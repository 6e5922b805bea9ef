#include "factormatch/bipartite.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "factormatch/errors.hpp"

namespace factormatch {

namespace {

std::uint64_t pack(const PointRef& p) {
  return (static_cast<std::uint64_t>(p.vertex) << 32) | p.index;
}

}  // namespace

MatchGraph::MatchGraph(std::vector<PointRef> left, std::vector<PointRef> right,
                       std::vector<MatchEdge> edges, std::vector<std::uint8_t> left_counted,
                       std::vector<std::uint8_t> right_counted, std::size_t density_base)
    : left_(std::move(left)),
      right_(std::move(right)),
      edges_(std::move(edges)),
      left_counted_(std::move(left_counted)),
      right_counted_(std::move(right_counted)),
      density_base_(density_base) {
  if (left_counted_.size() != left_.size() || right_counted_.size() != right_.size()) {
    throw ContractViolation("density flags do not match the point lists");
  }
  if (density_base_ == 0) throw ContractViolation("density base must be positive");
  std::sort(edges_.begin(), edges_.end(), [](const MatchEdge& a, const MatchEdge& b) {
    return std::pair(a.left, a.right) < std::pair(b.left, b.right);
  });
  for (std::size_t k = 0; k < edges_.size(); ++k) {
    if (edges_[k].left >= left_.size() || edges_[k].right >= right_.size()) {
      throw ContractViolation("edge endpoint out of range");
    }
    if (k > 0 && edges_[k].left == edges_[k - 1].left && edges_[k].right == edges_[k - 1].right) {
      throw ContractViolation("duplicate edge");
    }
  }
  left_offset_.assign(left_.size() + 1, 0);
  right_offset_.assign(right_.size() + 1, 0);
  for (const auto& e : edges_) {
    ++left_offset_[e.left + 1];
    ++right_offset_[e.right + 1];
  }
  for (std::size_t i = 0; i < left_.size(); ++i) left_offset_[i + 1] += left_offset_[i];
  for (std::size_t j = 0; j < right_.size(); ++j) right_offset_[j + 1] += right_offset_[j];
  left_adj_.resize(edges_.size());
  left_edge_.resize(edges_.size());
  right_adj_.resize(edges_.size());
  auto right_fill = right_offset_;
  for (std::size_t k = 0; k < edges_.size(); ++k) {
    const auto& e = edges_[k];
    // Edges are sorted by (left, right), so left lists come out in order.
    left_adj_[k] = e.right;
    left_edge_[k] = static_cast<std::uint32_t>(k);
    right_adj_[right_fill[e.right]++] = e.left;
  }
  lookup_.reserve(left_.size() + right_.size());
  for (std::uint32_t i = 0; i < left_.size(); ++i) {
    if (left_[i].side != PointSide::left) throw ContractViolation("right point on the left side");
    lookup_.emplace(pack(left_[i]) << 1, i);
  }
  for (std::uint32_t j = 0; j < right_.size(); ++j) {
    if (right_[j].side != PointSide::right) throw ContractViolation("left point on the right side");
    lookup_.emplace((pack(right_[j]) << 1) | 1, j);
  }
}

MatchGraph MatchGraph::from_edges(std::size_t left, std::size_t right,
                                  std::span<const std::pair<std::uint32_t, std::uint32_t>> edges) {
  std::vector<PointRef> l, r;
  for (std::uint32_t i = 0; i < left; ++i) l.push_back({PointSide::left, i, 1});
  for (std::uint32_t j = 0; j < right; ++j) r.push_back({PointSide::right, j, 1});
  std::vector<MatchEdge> list;
  for (auto [a, b] : edges) list.push_back({a, b, kFromLeft | kFromRight, 1});
  std::sort(list.begin(), list.end(), [](const MatchEdge& a, const MatchEdge& b) {
    return std::pair(a.left, a.right) < std::pair(b.left, b.right);
  });
  list.erase(std::unique(list.begin(), list.end(),
                         [](const MatchEdge& a, const MatchEdge& b) {
                           return a.left == b.left && a.right == b.right;
                         }),
             list.end());
  return MatchGraph(std::move(l), std::move(r), std::move(list),
                    std::vector<std::uint8_t>(left, 1), std::vector<std::uint8_t>(right, 1),
                    std::max<std::size_t>({left, right, 1}));
}

std::span<const std::uint32_t> MatchGraph::left_adjacency(std::uint32_t i) const {
  return {left_adj_.data() + left_offset_[i], left_offset_[i + 1] - left_offset_[i]};
}

std::span<const std::uint32_t> MatchGraph::right_adjacency(std::uint32_t j) const {
  return {right_adj_.data() + right_offset_[j], right_offset_[j + 1] - right_offset_[j]};
}

bool MatchGraph::has_edge(std::uint32_t i, std::uint32_t j) const {
  const auto adj = left_adjacency(i);
  return std::binary_search(adj.begin(), adj.end(), j);
}

int MatchGraph::edge_distance(std::uint32_t i, std::uint32_t j) const {
  const auto adj = left_adjacency(i);
  const auto it = std::lower_bound(adj.begin(), adj.end(), j);
  if (it == adj.end() || *it != j) throw ContractViolation("not an edge");
  return edges_[left_edge_[left_offset_[i] + static_cast<std::size_t>(it - adj.begin())]].distance;
}

std::optional<std::uint32_t> MatchGraph::find(const PointRef& p) const {
  const auto key = (pack(p) << 1) | (p.side == PointSide::right ? 1 : 0);
  const auto it = lookup_.find(key);
  if (it == lookup_.end()) return std::nullopt;
  return it->second;
}

MatchGraph build_match_graph(const PointMultiset& pi, const PointMultiset& pi_prime,
                             const RadiusField& r, const RadiusField& r_prime,
                             const GraphWindow& w) {
  if (pi.vertex_count() != w.size() || pi_prime.vertex_count() != w.size() ||
      r.radius.size() != w.size() || r_prime.radius.size() != w.size()) {
    throw ContractViolation("match graph inputs do not fit the window");
  }
  std::vector<PointRef> left, right;
  std::vector<std::uint8_t> left_counted, right_counted;
  std::vector<std::uint32_t> left_first(w.size(), 0), right_first(w.size(), 0);
  std::size_t dropped_left = 0, dropped_right = 0;
  for (VertexId v = 0; v < w.size(); ++v) {
    left_first[v] = static_cast<std::uint32_t>(left.size());
    if (r.censored(v)) {
      dropped_left += pi.count(v);
    } else {
      for (std::uint32_t i = 1; i <= pi.count(v); ++i) {
        left.push_back({PointSide::left, v, i});
        left_counted.push_back(w.in_core(v) ? 1 : 0);
      }
    }
    right_first[v] = static_cast<std::uint32_t>(right.size());
    if (r_prime.censored(v)) {
      dropped_right += pi_prime.count(v);
    } else {
      for (std::uint32_t i = 1; i <= pi_prime.count(v); ++i) {
        right.push_back({PointSide::right, v, i});
        right_counted.push_back(w.in_core(v) ? 1 : 0);
      }
    }
  }
  auto live_left = [&](VertexId v) { return !r.censored(v) && pi.count(v) > 0; };
  auto live_right = [&](VertexId v) { return !r_prime.censored(v) && pi_prime.count(v) > 0; };

  // Vertex pairs first; co-located points share neighborhoods.
  std::map<std::pair<VertexId, VertexId>, std::pair<std::uint8_t, int>> pairs;
  for (VertexId x = 0; x < w.size(); ++x) {
    if (!live_left(x)) continue;
    const auto d = bfs_distances(w, x, r.radius[x]);
    for (VertexId y = 0; y < w.size(); ++y) {
      if (d[y] == kUnreachable || !live_right(y)) continue;
      auto& slot = pairs[{x, y}];
      slot.first |= kFromLeft;
      slot.second = d[y];
    }
  }
  for (VertexId y = 0; y < w.size(); ++y) {
    if (!live_right(y)) continue;
    const auto d = bfs_distances(w, y, r_prime.radius[y]);
    for (VertexId x = 0; x < w.size(); ++x) {
      if (d[x] == kUnreachable || !live_left(x)) continue;
      auto& slot = pairs[{x, y}];
      slot.first |= kFromRight;
      slot.second = d[x];
    }
  }
  std::vector<MatchEdge> edges;
  for (const auto& [key, info] : pairs) {
    const auto [x, y] = key;
    for (std::uint32_t a = 0; a < pi.count(x); ++a) {
      for (std::uint32_t b = 0; b < pi_prime.count(y); ++b) {
        edges.push_back({left_first[x] + a, right_first[y] + b, info.first, info.second});
      }
    }
  }
  MatchGraph g(std::move(left), std::move(right), std::move(edges), std::move(left_counted),
               std::move(right_counted), std::max<std::size_t>(w.core_size(), 1));
  g.dropped_left = dropped_left;
  g.dropped_right = dropped_right;
  return g;
}

std::vector<PointRef> neighborhood(const MatchGraph& g, std::span<const PointRef> a) {
  if (a.empty()) return {};
  const auto side = a.front().side;
  std::vector<PointRef> out;
  for (const auto& p : a) {
    if (p.side != side) throw ContractViolation("neighborhood of a mixed-side set");
    const auto pos = g.find(p);
    if (!pos) throw ContractViolation("point is not in the match graph");
    if (side == PointSide::left) {
      for (auto j : g.left_adjacency(*pos)) out.push_back(g.right(j));
    } else {
      for (auto i : g.right_adjacency(*pos)) out.push_back(g.left(i));
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

DensityEstimate density(const MatchGraph& g, std::span<const PointRef> a) {
  std::map<VertexId, double> per_vertex;
  for (const auto& p : a) {
    const auto pos = g.find(p);
    if (!pos) throw ContractViolation("point is not in the match graph");
    const bool counted = p.side == PointSide::left ? g.left_counted(*pos) : g.right_counted(*pos);
    if (counted) per_vertex[p.vertex] += 1.0;
  }
  const auto n = static_cast<double>(g.density_base());
  double sum = 0.0, sq = 0.0;
  for (const auto& [v, c] : per_vertex) {
    sum += c;
    sq += c * c;
  }
  DensityEstimate est;
  est.core_size = g.density_base();
  est.value = sum / n;
  if (g.density_base() > 1) {
    const double var = std::max(0.0, (sq - n * est.value * est.value) / (n - 1.0));
    est.std_error = std::sqrt(var / n);
  }
  return est;
}

DensityEstimate aggregate(std::span<const double> per_trial, std::size_t core_size) {
  DensityEstimate est;
  est.core_size = core_size;
  est.trials = per_trial.size();
  if (per_trial.empty()) return est;
  double sum = 0.0;
  for (double x : per_trial) sum += x;
  const double n = static_cast<double>(per_trial.size());
  est.value = sum / n;
  if (per_trial.size() > 1) {
    double ss = 0.0;
    for (double x : per_trial) ss += (x - est.value) * (x - est.value);
    est.std_error = std::sqrt(ss / (n - 1.0) / n);
  }
  return est;
}

std::string dump(const MatchGraph& g) {
  std::ostringstream out;
  for (const auto& e : g.edges()) {
    const auto& l = g.left(e.left);
    const auto& r = g.right(e.right);
    out << "L " << l.vertex << " " << l.index << " | R " << r.vertex << " " << r.index << "\n";
  }
  return out.str();
}

}  // namespace factormatch
