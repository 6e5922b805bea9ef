#include "factormatch/graphs.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>

#include "factormatch/errors.hpp"

namespace factormatch {

namespace {

constexpr std::array<std::pair<int, int>, 5> kLadderGenerators{
    {{-1, 0}, {1, 0}, {0, 1}, {1, 1}, {-1, 1}}};

std::uint64_t zigzag(std::int64_t x) {
  return x >= 0 ? static_cast<std::uint64_t>(x) << 1
                : (static_cast<std::uint64_t>(-(x + 1)) << 1) | 1U;
}

std::uint64_t saturating_tree_ball(int d, int r) {
  // 1 + d((d-1)^r - 1)/(d-2), computed incrementally with saturation.
  std::uint64_t total = 1;
  std::uint64_t shell = static_cast<std::uint64_t>(d);
  constexpr auto kMax = std::numeric_limits<std::uint64_t>::max();
  for (int k = 1; k <= r; ++k) {
    if (total > kMax - shell) return kMax;
    total += shell;
    if (shell > kMax / static_cast<std::uint64_t>(d - 1)) {
      shell = kMax;
    } else {
      shell *= static_cast<std::uint64_t>(d - 1);
    }
  }
  return total;
}

}  // namespace

std::string family_name(const GraphFamily& family) {
  return std::visit(
      [](const auto& f) -> std::string {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, RegularTree>) {
          return "tree(" + std::to_string(f.degree) + ")";
        } else if constexpr (std::is_same_v<T, LadderDiagonal>) {
          return "ladder";
        } else {
          return "explicit(" + std::to_string(f.labels.size()) + ")";
        }
      },
      family);
}

ExplicitFinite parse_adjacency_list(const std::string& text) {
  ExplicitFinite g;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    auto colon = line.find(':');
    if (colon == std::string::npos) {
      throw ConfigError("adjacency line " + std::to_string(lineno) + ": missing ':'");
    }
    std::int64_t id = 0;
    try {
      id = std::stoll(line.substr(0, colon));
    } catch (const std::exception&) {
      throw ConfigError("adjacency line " + std::to_string(lineno) + ": bad vertex id");
    }
    std::istringstream rest(line.substr(colon + 1));
    std::vector<std::int64_t> nbrs;
    std::string tok;
    while (rest >> tok) {
      try {
        nbrs.push_back(std::stoll(tok));
      } catch (const std::exception&) {
        throw ConfigError("adjacency line " + std::to_string(lineno) + ": bad neighbor '" +
                          tok + "'");
      }
    }
    g.labels.push_back(id);
    g.adjacency.push_back(std::move(nbrs));
  }
  return g;
}

ExplicitFinite load_adjacency_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open adjacency file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_adjacency_list(buf.str());
}

std::vector<VertexId> GraphWindow::core() const {
  std::vector<VertexId> out;
  for (VertexId v = 0; v < size(); ++v) {
    if (in_core(v)) out.push_back(v);
  }
  return out;
}

std::size_t GraphWindow::core_size() const {
  std::size_t n = 0;
  for (VertexId v = 0; v < size(); ++v) n += in_core(v) ? 1 : 0;
  return n;
}

std::span<const VertexId> GraphWindow::neighbors(VertexId v) const {
  return {nbr_.data() + nbr_offset_[v], nbr_offset_[v + 1] - nbr_offset_[v]};
}

std::span<const VertexId> GraphWindow::slots(VertexId v) const {
  return {slot_.data() + slot_offset_[v], slot_offset_[v + 1] - slot_offset_[v]};
}

std::pair<std::int64_t, int> GraphWindow::ladder_coords(VertexId v) const {
  if (coords_.empty()) throw ContractViolation("ladder_coords on a non-ladder window");
  return coords_[v];
}

VertexId GraphWindow::ladder_partner(VertexId v) const {
  if (coords_.empty()) throw ContractViolation("ladder_partner on a non-ladder window");
  // Generator (0,1) is slot 2.
  return slots(v)[2];
}

GraphWindow build_window(const GraphFamily& family, int depth, int core_margin,
                         const WindowOptions& options) {
  GraphWindow w;
  w.family_ = family;
  const bool explicit_graph = std::holds_alternative<ExplicitFinite>(family);
  if (!explicit_graph) {
    if (core_margin < 0 || depth < core_margin) {
      throw ConfigError("window requires depth >= core_margin >= 0 (got depth=" +
                        std::to_string(depth) + ", core_margin=" + std::to_string(core_margin) +
                        ")");
    }
  }
  w.depth_ = depth;
  w.core_margin_ = core_margin;

  std::vector<std::vector<VertexId>> slots;

  if (const auto* tree = std::get_if<RegularTree>(&family)) {
    const int d = tree->degree;
    if (d < 3) throw ConfigError("RegularTree degree must be >= 3, got " + std::to_string(d));
    const auto n = saturating_tree_ball(d, depth);
    if (n > options.max_vertices) {
      throw ResourceError("window of " + std::to_string(n) + " vertices exceeds cap " +
                          std::to_string(options.max_vertices));
    }
    w.level_.reserve(n);
    w.parent_.reserve(n);
    slots.reserve(n);
    w.level_.push_back(0);
    w.parent_.push_back(kOutside);
    slots.emplace_back();
    for (VertexId v = 0; v < w.level_.size(); ++v) {
      const int children = v == 0 ? d : d - 1;
      auto& s = slots[v];
      if (v != 0) s.push_back(w.parent_[v]);
      for (int c = 0; c < children; ++c) {
        if (w.level_[v] < depth) {
          const auto child = static_cast<VertexId>(w.level_.size());
          w.level_.push_back(w.level_[v] + 1);
          w.parent_.push_back(v);
          slots.emplace_back();
          slots[v].push_back(child);  // slots may have been reallocated
        } else {
          slots[v].push_back(kOutside);
        }
      }
    }
    w.canonical_.resize(w.level_.size());
    std::iota(w.canonical_.begin(), w.canonical_.end(), std::uint64_t{0});
  } else if (std::holds_alternative<LadderDiagonal>(family)) {
    const auto n = family_ball_size(family, depth);
    if (n > options.max_vertices) {
      throw ResourceError("window of " + std::to_string(n) + " vertices exceeds cap " +
                          std::to_string(options.max_vertices));
    }
    std::map<std::pair<std::int64_t, int>, VertexId> index;
    w.coords_.push_back({0, 0});
    w.level_.push_back(0);
    index[{0, 0}] = 0;
    for (VertexId v = 0; v < w.coords_.size(); ++v) {
      if (w.level_[v] >= depth) continue;
      auto [x, y] = w.coords_[v];
      for (auto [gx, gy] : kLadderGenerators) {
        std::pair<std::int64_t, int> c{x + gx, (y + gy) & 1};
        if (!index.count(c)) {
          index[c] = static_cast<VertexId>(w.coords_.size());
          w.coords_.push_back(c);
          w.level_.push_back(w.level_[v] + 1);
        }
      }
    }
    slots.resize(w.coords_.size());
    w.canonical_.resize(w.coords_.size());
    for (VertexId v = 0; v < w.coords_.size(); ++v) {
      auto [x, y] = w.coords_[v];
      for (auto [gx, gy] : kLadderGenerators) {
        auto it = index.find({x + gx, (y + gy) & 1});
        slots[v].push_back(it == index.end() ? kOutside : it->second);
      }
      w.canonical_[v] = (zigzag(x) << 1) | static_cast<std::uint64_t>(y);
    }
  } else {
    const auto& g = std::get<ExplicitFinite>(family);
    const std::size_t n = g.labels.size();
    if (n == 0) throw ConfigError("explicit graph has no vertices");
    if (n > options.max_vertices) {
      throw ResourceError("explicit graph of " + std::to_string(n) +
                          " vertices exceeds cap " + std::to_string(options.max_vertices));
    }
    std::unordered_map<std::int64_t, std::size_t> pos;
    for (std::size_t i = 0; i < n; ++i) {
      if (!pos.emplace(g.labels[i], i).second) {
        throw ConfigError("duplicate vertex id " + std::to_string(g.labels[i]));
      }
    }
    std::set<std::pair<std::size_t, std::size_t>> arcs;
    for (std::size_t i = 0; i < n; ++i) {
      for (auto lab : g.adjacency[i]) {
        auto it = pos.find(lab);
        if (it == pos.end()) {
          throw ConfigError("vertex " + std::to_string(g.labels[i]) +
                            " lists unknown neighbor " + std::to_string(lab));
        }
        if (it->second == i) {
          throw ConfigError("self loop at vertex " + std::to_string(lab));
        }
        if (!arcs.emplace(i, it->second).second) {
          throw ConfigError("duplicate edge " + std::to_string(g.labels[i]) + "-" +
                            std::to_string(lab));
        }
      }
    }
    for (auto [a, b] : arcs) {
      if (!arcs.count({b, a})) {
        throw ConfigError("edge " + std::to_string(g.labels[a]) + "-" +
                          std::to_string(g.labels[b]) + " is not symmetric");
      }
    }
    // BFS order from the first listed vertex, unreachable vertices appended.
    std::vector<VertexId> order_of(n, kOutside);
    std::vector<std::size_t> order;
    std::vector<int> lvl;
    order.reserve(n);
    for (std::size_t seed = 0; seed < n; ++seed) {
      if (order_of[seed] != kOutside) continue;
      const bool from_root = seed == 0;
      order_of[seed] = static_cast<VertexId>(order.size());
      order.push_back(seed);
      lvl.push_back(from_root ? 0 : kUnreachable);
      for (std::size_t q = order.size() - 1; q < order.size(); ++q) {
        const auto u = order[q];
        for (auto lab : g.adjacency[u]) {
          const auto nb = pos.at(lab);
          if (order_of[nb] == kOutside) {
            order_of[nb] = static_cast<VertexId>(order.size());
            order.push_back(nb);
            lvl.push_back(from_root ? lvl[q] + 1 : kUnreachable);
          }
        }
      }
    }
    w.level_ = lvl;
    slots.resize(n);
    for (std::size_t q = 0; q < n; ++q) {
      for (auto lab : g.adjacency[order[q]]) slots[q].push_back(order_of[pos.at(lab)]);
      w.labels_.push_back(g.labels[order[q]]);
    }
    w.canonical_.assign(w.labels_.begin(), w.labels_.end());
    int max_level = 0;
    for (int l : lvl) {
      if (l != kUnreachable) max_level = std::max(max_level, l);
    }
    // Every vertex of an explicit graph is interior; unreachable ones sit at
    // the maximal level so that the core covers the whole graph.
    for (auto& l : w.level_) {
      if (l == kUnreachable) l = max_level;
    }
    w.depth_ = max_level;
    w.core_margin_ = 0;
  }

  w.slot_offset_.assign(1, 0);
  w.nbr_offset_.assign(1, 0);
  for (const auto& s : slots) {
    for (auto u : s) {
      w.slot_.push_back(u);
      if (u != kOutside) w.nbr_.push_back(u);
    }
    w.slot_offset_.push_back(static_cast<std::uint32_t>(w.slot_.size()));
    w.nbr_offset_.push_back(static_cast<std::uint32_t>(w.nbr_.size()));
  }
  return w;
}

std::vector<int> bfs_distances(const GraphWindow& w, VertexId source, int max_radius) {
  std::vector<int> dist(w.size(), kUnreachable);
  std::vector<VertexId> queue{source};
  dist[source] = 0;
  for (std::size_t q = 0; q < queue.size(); ++q) {
    const auto u = queue[q];
    if (dist[u] >= max_radius) continue;
    for (auto nb : w.neighbors(u)) {
      if (dist[nb] == kUnreachable) {
        dist[nb] = dist[u] + 1;
        queue.push_back(nb);
      }
    }
  }
  return dist;
}

int distance(const GraphWindow& w, VertexId u, VertexId v) {
  if (u == v) return 0;
  if (w.is_tree()) {
    // Balls in a tree are geodesically convex, so the window distance is the
    // tree distance.
    int d = 0;
    while (w.level(u) > w.level(v)) u = w.parent(u), ++d;
    while (w.level(v) > w.level(u)) v = w.parent(v), ++d;
    while (u != v) u = w.parent(u), v = w.parent(v), d += 2;
    return d;
  }
  std::vector<int> dist(w.size(), kUnreachable);
  std::vector<VertexId> queue{u};
  dist[u] = 0;
  for (std::size_t q = 0; q < queue.size(); ++q) {
    const auto x = queue[q];
    for (auto nb : w.neighbors(x)) {
      if (dist[nb] == kUnreachable) {
        dist[nb] = dist[x] + 1;
        if (nb == v) return dist[nb];
        queue.push_back(nb);
      }
    }
  }
  return kUnreachable;
}

namespace {

VertexSet metric_set(const GraphWindow& w, std::span<const VertexId> centers, int r,
                     bool sphere_only) {
  VertexSet out;
  if (r < 0) return out;
  std::unordered_map<VertexId, int> dist;
  std::vector<VertexId> queue;
  for (auto c : centers) {
    if (dist.emplace(c, 0).second) queue.push_back(c);
  }
  for (std::size_t q = 0; q < queue.size(); ++q) {
    const auto u = queue[q];
    const int du = dist[u];
    if (!sphere_only || du == r) out.vertices.push_back(u);
    if (du >= r) continue;
    if (!w.has_full_degree(u)) out.complete = false;
    for (auto nb : w.neighbors(u)) {
      if (dist.emplace(nb, du + 1).second) queue.push_back(nb);
    }
  }
  return out;
}

}  // namespace

VertexSet ball(const GraphWindow& w, VertexId v, int r) {
  return metric_set(w, std::span<const VertexId>(&v, 1), r, false);
}

VertexSet sphere(const GraphWindow& w, VertexId v, int r) {
  return metric_set(w, std::span<const VertexId>(&v, 1), r, true);
}

VertexSet ball_around(const GraphWindow& w, std::span<const VertexId> set, int r) {
  return metric_set(w, set, r, false);
}

int set_distance(const GraphWindow& w, std::span<const VertexId> a,
                 std::span<const VertexId> b) {
  if (a.empty() || b.empty()) return kUnreachable;
  std::vector<char> target(w.size(), 0);
  for (auto v : b) target[v] = 1;
  std::vector<int> dist(w.size(), kUnreachable);
  std::vector<VertexId> queue;
  for (auto v : a) {
    if (target[v]) return 0;
    if (dist[v] == kUnreachable) {
      dist[v] = 0;
      queue.push_back(v);
    }
  }
  for (std::size_t q = 0; q < queue.size(); ++q) {
    const auto u = queue[q];
    for (auto nb : w.neighbors(u)) {
      if (dist[nb] == kUnreachable) {
        dist[nb] = dist[u] + 1;
        if (target[nb]) return dist[nb];
        queue.push_back(nb);
      }
    }
  }
  return kUnreachable;
}

std::uint64_t family_ball_size(const GraphFamily& family, int r) {
  if (r < 0) return 0;
  if (const auto* tree = std::get_if<RegularTree>(&family)) {
    return saturating_tree_ball(tree->degree, r);
  }
  if (std::holds_alternative<LadderDiagonal>(family)) {
    return r == 0 ? 1 : 4 * static_cast<std::uint64_t>(r) + 2;
  }
  const auto w = build_window(family, 0, 0);
  return ball(w, w.root(), r).vertices.size();
}

std::uint64_t family_sphere_size(const GraphFamily& family, int r) {
  if (r < 0) return 0;
  if (r == 0) return 1;
  if (std::holds_alternative<ExplicitFinite>(family)) {
    throw ConfigError("family_sphere_size is defined for infinite families only");
  }
  return family_ball_size(family, r) - family_ball_size(family, r - 1);
}

Rational Rational::make(std::int64_t num, std::int64_t den) {
  if (den == 0) throw ContractViolation("rational with zero denominator");
  if (den < 0) num = -num, den = -den;
  const auto g = std::gcd(num < 0 ? -num : num, den);
  return {num / (g == 0 ? 1 : g), den / (g == 0 ? 1 : g)};
}

Rational cheeger_bound(const GraphWindow& w, int k, const CheegerOptions& options) {
  if (k < 1) throw ConfigError("cheeger_bound needs max_set_size >= 1");
  if (k > options.max_set_size_cap) {
    throw ResourceError("cheeger_bound max_set_size " + std::to_string(k) +
                        " exceeds enumeration cap " +
                        std::to_string(options.max_set_size_cap));
  }
  std::optional<Rational> best;
  std::vector<char> in_set(w.size(), 0);
  std::vector<char> seen(w.size(), 0);
  auto evaluate = [&](const std::vector<VertexId>& set) {
    for (auto v : set) {
      if (!w.has_full_degree(v)) return true;
    }
    for (auto v : set) in_set[v] = 1;
    std::int64_t boundary = 0;
    std::vector<VertexId> touched;
    for (auto v : set) {
      for (auto nb : w.neighbors(v)) {
        if (!in_set[nb] && !seen[nb]) {
          seen[nb] = 1;
          touched.push_back(nb);
          ++boundary;
        }
      }
    }
    for (auto v : set) in_set[v] = 0;
    for (auto v : touched) seen[v] = 0;
    auto q = Rational::make(boundary, static_cast<std::int64_t>(set.size()));
    if (!best || q < *best) best = q;
    return true;
  };
  auto adjacent = [&](VertexId v, std::vector<VertexId>& out) {
    out.assign(w.neighbors(v).begin(), w.neighbors(v).end());
  };
  if (std::holds_alternative<ExplicitFinite>(w.family())) {
    for (VertexId anchor = 0; anchor < w.size(); ++anchor) {
      enumerate_connected_sets(
          anchor, static_cast<std::size_t>(k), adjacent,
          [anchor](VertexId v) { return v > anchor; }, evaluate);
    }
  } else {
    enumerate_connected_sets(
        w.root(), static_cast<std::size_t>(k), adjacent, [](VertexId) { return true; },
        evaluate);
  }
  if (!best) {
    throw CensoringError("no connected set of size <= " + std::to_string(k) +
                         " has its boundary inside the window");
  }
  return *best;
}

SpectralEstimate spectral_radius(const GraphFamily& family, SpectralMethod method, int n,
                                 int window_depth) {
  SpectralEstimate est;
  est.steps = n;
  if (method == SpectralMethod::closed_form) {
    const auto* tree = std::get_if<RegularTree>(&family);
    if (!tree) throw ConfigError("closed-form spectral radius is only known for RegularTree");
    if (tree->degree < 3) throw ConfigError("RegularTree degree must be >= 3");
    const double d = tree->degree;
    est.value = 2.0 * std::sqrt(d - 1.0) / d;
    est.root_estimate = est.value;
    est.steps = 0;
    return est;
  }
  if (n < 1) throw ConfigError("return-probability estimator needs n >= 1");
  const int steps = 2 * n + 2;
  std::vector<double> returns(steps + 1, 0.0);

  if (const auto* tree = std::get_if<RegularTree>(&family)) {
    if (window_depth < n + 2) {
      throw PrecisionError("return-probability estimate at n=" + std::to_string(n) +
                           " needs window depth >= " + std::to_string(n + 2) + ", got " +
                           std::to_string(window_depth));
    }
    // Exact walk on the window lumped by distance from the root (the law of
    // the walk is radially symmetric on a tree).
    const double d = tree->degree;
    std::vector<double> p(static_cast<std::size_t>(n + 3), 0.0), q(p.size());
    p[0] = 1.0;
    returns[0] = 1.0;
    for (int t = 1; t <= steps; ++t) {
      std::fill(q.begin(), q.end(), 0.0);
      for (std::size_t k = 0; k + 1 < p.size(); ++k) {
        if (p[k] == 0.0) continue;
        if (k == 0) {
          q[1] += p[0];
        } else {
          q[k - 1] += p[k] / d;
          q[k + 1] += p[k] * (d - 1.0) / d;
        }
      }
      p.swap(q);
      returns[t] = p[0];
    }
  } else {
    const bool infinite = std::holds_alternative<LadderDiagonal>(family);
    if (infinite && window_depth < n + 2) {
      throw PrecisionError("return-probability estimate at n=" + std::to_string(n) +
                           " needs window depth >= " + std::to_string(n + 2));
    }
    const auto w = build_window(family, infinite ? n + 2 : 0, 0);
    std::vector<double> p(w.size(), 0.0), q(w.size());
    p[w.root()] = 1.0;
    returns[0] = 1.0;
    for (int t = 1; t <= steps; ++t) {
      std::fill(q.begin(), q.end(), 0.0);
      for (VertexId v = 0; v < w.size(); ++v) {
        if (p[v] == 0.0) continue;
        const auto deg = static_cast<double>(w.full_degree(v));
        if (deg == 0) {
          q[v] += p[v];
          continue;
        }
        for (auto nb : w.neighbors(v)) q[nb] += p[v] / deg;
      }
      p.swap(q);
      returns[t] = p[w.root()];
    }
  }
  const double p2n = returns[2 * n];
  const double p2n2 = returns[2 * n + 2];
  if (!(p2n > 0.0) || !(p2n2 > 0.0)) {
    throw PrecisionError("return probabilities underflowed at n=" + std::to_string(n));
  }
  est.value = std::sqrt(p2n2 / p2n);
  est.root_estimate = std::pow(p2n, 1.0 / (2.0 * n));
  est.amenable = est.value >= 1.0 - 1e-12;
  return est;
}

ConnectedEnumeration enumerate_connected_sets(
    VertexId start, std::size_t max_size,
    const std::function<void(VertexId, std::vector<VertexId>&)>& adjacent,
    const std::function<bool(VertexId)>& allowed,
    const std::function<bool(const std::vector<VertexId>&)>& callback) {
  ConnectedEnumeration result;
  if (max_size == 0) {
    result.truncated = true;
    return result;
  }
  std::unordered_map<VertexId, char> marked;
  std::vector<VertexId> current{start};
  std::vector<VertexId> frontier;
  std::vector<VertexId> scratch;
  marked[start] = 1;
  adjacent(start, scratch);
  for (auto nb : scratch) {
    if (allowed(nb) && marked.emplace(nb, 1).second) frontier.push_back(nb);
  }

  // Include/exclude branching on the frontier; a set is reported once all of
  // its admissible neighbors have been decided.
  std::function<void()> grow = [&]() {
    if (result.stopped) return;
    if (frontier.empty()) {
      ++result.emitted;
      if (!callback(current)) result.stopped = true;
      return;
    }
    const auto w = frontier.back();
    frontier.pop_back();
    if (current.size() < max_size) {
      current.push_back(w);
      const auto before = frontier.size();
      std::vector<VertexId> nbrs;
      adjacent(w, nbrs);
      for (auto nb : nbrs) {
        if (allowed(nb) && marked.emplace(nb, 1).second) frontier.push_back(nb);
      }
      grow();
      for (auto i = frontier.size(); i > before; --i) marked.erase(frontier[i - 1]);
      frontier.resize(before);
      current.pop_back();
    } else {
      result.truncated = true;
    }
    grow();
    frontier.push_back(w);
  };
  grow();
  return result;
}

}  // namespace factormatch
