#include "factormatch/matching.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>
#include <queue>
#include <sstream>

#include "factormatch/errors.hpp"

namespace factormatch {

std::size_t Matching::size() const {
  return static_cast<std::size_t>(std::count_if(mate_left_.begin(), mate_left_.end(),
                                                [](auto j) { return j != kUnmatched; }));
}

void Matching::link(std::uint32_t i, std::uint32_t j) {
  if (mate_left_[i] != kUnmatched || mate_right_[j] != kUnmatched) {
    throw InvariantViolation("linking an already matched point");
  }
  mate_left_[i] = j;
  mate_right_[j] = i;
  ++flips_[{i, j}];
}

void Matching::unlink(std::uint32_t i, std::uint32_t j) {
  if (mate_left_[i] != j || mate_right_[j] != i) throw InvariantViolation("unlinking a non-edge");
  mate_left_[i] = kUnmatched;
  mate_right_[j] = kUnmatched;
  ++flips_[{i, j}];
}

void Matching::check(const MatchGraph& g) const {
  if (mate_left_.size() != g.left_size() || mate_right_.size() != g.right_size()) {
    throw InvariantViolation("matching does not fit the graph");
  }
  for (std::uint32_t i = 0; i < mate_left_.size(); ++i) {
    const auto j = mate_left_[i];
    if (j == kUnmatched) continue;
    if (mate_right_[j] != i) throw InvariantViolation("matching is not injective");
    if (!g.has_edge(i, j)) throw InvariantViolation("matched pair is not an edge");
  }
  for (std::uint32_t j = 0; j < mate_right_.size(); ++j) {
    const auto i = mate_right_[j];
    if (i != kUnmatched && mate_left_[i] != j) throw InvariantViolation("matching is not injective");
  }
}

std::uint64_t point_key(const PointRef& p, std::span<const std::uint32_t> vertex_rank) {
  const std::uint64_t rank = vertex_rank.empty() ? p.vertex : vertex_rank[p.vertex];
  const std::uint64_t side = p.side == PointSide::left ? 0 : 1;
  return (rank << 32) | (side << 31) | (p.index & 0x7fffffffu);
}

bool operator<(const ChainKey& a, const ChainKey& b) {
  if (a.keys.size() != b.keys.size()) return a.keys.size() < b.keys.size();
  return a.keys < b.keys;
}

ChainKey chain_key(const MatchGraph& g, const Chain& c, std::span<const std::uint32_t> vertex_rank) {
  ChainKey key;
  key.keys.reserve(2 * c.left.size());
  for (std::size_t k = 0; k < c.left.size(); ++k) {
    key.keys.push_back(point_key(g.left(c.left[k]), vertex_rank));
    key.keys.push_back(point_key(g.right(c.right[k]), vertex_rank));
  }
  if (key.keys.back() < key.keys.front()) std::reverse(key.keys.begin(), key.keys.end());
  return key;
}

std::vector<Chain> find_chains(const MatchGraph& g, const Matching& m, std::size_t max_len,
                               const ChainSearchOptions& options) {
  if (max_len < 1) throw ConfigError("chain length bound must be >= 1");
  const auto nl = static_cast<std::uint32_t>(g.left_size());
  constexpr std::size_t kFar = std::numeric_limits<std::size_t>::max();

  // Alternating distance from each left point to the nearest free right point.
  std::vector<std::size_t> reach(nl, kFar);
  std::queue<std::uint32_t> queue;
  for (std::uint32_t x = 0; x < nl; ++x) {
    for (auto y : g.left_adjacency(x)) {
      if (m.mate_of_right(y) == kUnmatched) {
        reach[x] = 1;
        queue.push(x);
        break;
      }
    }
  }
  while (!queue.empty()) {
    const auto xp = queue.front();
    queue.pop();
    const auto y = m.mate_of_left(xp);
    if (y == kUnmatched) continue;
    for (auto x : g.right_adjacency(y)) {
      if (reach[x] == kFar) {
        reach[x] = reach[xp] + 2;
        queue.push(x);
      }
    }
  }

  std::vector<Chain> chains;
  std::vector<char> on_left(nl, 0), on_right(g.right_size(), 0);
  Chain path;
  auto grow = [&](auto&& self, std::uint32_t x) -> void {
    const std::size_t so_far = 2 * (path.left.size() - 1);
    for (auto y : g.left_adjacency(x)) {
      if (on_right[y] || m.mate_of_left(x) == y) continue;
      const auto next = m.mate_of_right(y);
      if (next == kUnmatched) {
        if (so_far + 1 < max_len) {
          path.right.push_back(y);
          chains.push_back(path);
          path.right.pop_back();
          if (chains.size() > options.max_chains) {
            throw ResourceError("stage " + std::to_string(options.stage) + ": more than " +
                                std::to_string(options.max_chains) + " chains");
          }
        }
        continue;
      }
      if (on_left[next] || reach[next] == kFar || so_far + 2 + reach[next] >= max_len) continue;
      on_right[y] = 1;
      on_left[next] = 1;
      path.right.push_back(y);
      path.left.push_back(next);
      self(self, next);
      path.left.pop_back();
      path.right.pop_back();
      on_left[next] = 0;
      on_right[y] = 0;
    }
  };
  for (std::uint32_t x = 0; x < nl; ++x) {
    if (m.mate_of_left(x) != kUnmatched || reach[x] >= max_len) continue;
    path.left.assign(1, x);
    path.right.clear();
    on_left[x] = 1;
    grow(grow, x);
    on_left[x] = 0;
  }
  return chains;
}

std::vector<Chain> select_minimal(const MatchGraph& g, const std::vector<Chain>& chains,
                                  std::span<const std::uint32_t> vertex_rank) {
  std::vector<ChainKey> keys;
  keys.reserve(chains.size());
  for (const auto& c : chains) keys.push_back(chain_key(g, c, vertex_rank));
  std::vector<std::size_t> order(chains.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return keys[a] < keys[b]; });
  for (std::size_t k = 1; k < order.size(); ++k) {
    if (keys[order[k]] == keys[order[k - 1]]) throw InvariantViolation("two chains share a key");
  }
  constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> best_left(g.left_size(), kNone), best_right(g.right_size(), kNone);
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    const auto& c = chains[order[rank]];
    for (auto x : c.left) best_left[x] = std::min(best_left[x], rank);
    for (auto y : c.right) best_right[y] = std::min(best_right[y], rank);
  }
  std::vector<Chain> selected;
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    const auto& c = chains[order[rank]];
    const bool minimal =
        std::all_of(c.left.begin(), c.left.end(), [&](auto x) { return best_left[x] == rank; }) &&
        std::all_of(c.right.begin(), c.right.end(), [&](auto y) { return best_right[y] == rank; });
    if (minimal) selected.push_back(c);
  }
  return selected;
}

void flip(const MatchGraph& g, Matching& m, const Chain& c) {
  const auto n = c.left.size();
  if (n == 0 || c.right.size() != n) throw ContractViolation("malformed chain");
  if (m.mate_of_left(c.left.front()) != kUnmatched || m.mate_of_right(c.right.back()) != kUnmatched) {
    throw ContractViolation("chain endpoints are not both unmatched");
  }
  for (std::size_t k = 0; k < n; ++k) {
    if (!g.has_edge(c.left[k], c.right[k])) throw ContractViolation("chain uses a non-edge");
    if (k + 1 < n && m.mate_of_right(c.right[k]) != c.left[k + 1]) {
      throw ContractViolation("stale chain: expected a matching edge");
    }
  }
  for (std::size_t k = 0; k + 1 < n; ++k) m.unlink(c.left[k + 1], c.right[k]);
  for (std::size_t k = 0; k < n; ++k) m.link(c.left[k], c.right[k]);
}

namespace {

void fill_counts(const MatchGraph& g, const Matching& m, StageReport& report) {
  std::size_t counted_left = 0, counted_right = 0;
  report.unmatched_left = report.unmatched_right = 0;
  for (std::uint32_t i = 0; i < g.left_size(); ++i) {
    if (m.mate_of_left(i) != kUnmatched) continue;
    ++report.unmatched_left;
    if (g.left_counted(i)) ++counted_left;
  }
  for (std::uint32_t j = 0; j < g.right_size(); ++j) {
    if (m.mate_of_right(j) != kUnmatched) continue;
    ++report.unmatched_right;
    if (g.right_counted(j)) ++counted_right;
  }
  const auto base = static_cast<double>(g.density_base());
  report.p_left = static_cast<double>(counted_left) / base;
  report.p_right = static_cast<double>(counted_right) / base;
}

}  // namespace

StageReport run_stage(const MatchGraph& g, Matching& m, int n,
                      std::span<const std::uint32_t> vertex_rank, const EngineOptions& options) {
  if (n < 1) throw ConfigError("stage index must be >= 1");
  const auto start = std::chrono::steady_clock::now();
  StageReport report;
  report.stage = n;
  ChainSearchOptions search{options.max_chains, n};
  const auto max_len = static_cast<std::size_t>(4 * n);
  for (;;) {
    const auto chains = find_chains(g, m, max_len, search);
    if (chains.empty()) break;
    if (report.sweeps == options.max_sweeps) {
      throw StageDivergence("stage " + std::to_string(n) + " exceeded " +
                            std::to_string(options.max_sweeps) + " sweeps with " +
                            std::to_string(chains.size()) + " chains left");
    }
    const auto before = m.size();
    const auto selected = select_minimal(g, chains, vertex_rank);
    for (const auto& c : selected) flip(g, m, c);
    m.check(g);
    if (m.size() != before + selected.size()) throw InvariantViolation("flip lost a matched point");
    report.flips += selected.size();
    ++report.sweeps;
  }
  fill_counts(g, m, report);
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

int default_max_stage(const MatchGraph& g) {
  const auto points = g.left_size() + g.right_size();
  return static_cast<int>((points + 3) / 4) + 1;
}

RunResult run(const MatchGraph& g, std::span<const std::uint32_t> vertex_rank, int max_stage,
              const EngineOptions& options) {
  if (max_stage < 1) throw ConfigError("max_stage must be >= 1");
  RunResult result;
  result.matching = Matching(g.left_size(), g.right_size());
  for (int n = 1; n <= max_stage; ++n) {
    result.stages.push_back(run_stage(g, result.matching, n, vertex_rank, options));
    const auto mates = result.matching.left_mates();
    result.snapshots.emplace_back(mates.begin(), mates.end());
  }
  return result;
}

Matching max_matching_oracle(const MatchGraph& g) {
  const auto nl = static_cast<std::uint32_t>(g.left_size());
  const auto nr = static_cast<std::uint32_t>(g.right_size());
  std::vector<std::uint32_t> mate_l(nl, kUnmatched), mate_r(nr, kUnmatched);
  std::vector<std::uint32_t> layer(nl);
  constexpr std::uint32_t kInf = std::numeric_limits<std::uint32_t>::max();

  auto bfs = [&]() {
    std::queue<std::uint32_t> q;
    bool found = false;
    for (std::uint32_t x = 0; x < nl; ++x) {
      layer[x] = mate_l[x] == kUnmatched ? 0 : kInf;
      if (layer[x] == 0) q.push(x);
    }
    while (!q.empty()) {
      const auto x = q.front();
      q.pop();
      for (auto y : g.left_adjacency(x)) {
        const auto xp = mate_r[y];
        if (xp == kUnmatched) {
          found = true;
        } else if (layer[xp] == kInf) {
          layer[xp] = layer[x] + 1;
          q.push(xp);
        }
      }
    }
    return found;
  };
  std::vector<std::size_t> cursor(nl);
  auto dfs = [&](auto&& self, std::uint32_t x) -> bool {
    const auto adj = g.left_adjacency(x);
    for (auto& k = cursor[x]; k < adj.size(); ++k) {
      const auto y = adj[k];
      const auto xp = mate_r[y];
      if (xp == kUnmatched || (layer[xp] == layer[x] + 1 && self(self, xp))) {
        mate_l[x] = y;
        mate_r[y] = x;
        return true;
      }
    }
    layer[x] = kInf;
    return false;
  };
  while (bfs()) {
    std::fill(cursor.begin(), cursor.end(), 0);
    for (std::uint32_t x = 0; x < nl; ++x) {
      if (mate_l[x] == kUnmatched) dfs(dfs, x);
    }
  }
  Matching m(nl, nr);
  for (std::uint32_t x = 0; x < nl; ++x) {
    if (mate_l[x] != kUnmatched) m.link(x, mate_l[x]);
  }
  return m;
}

std::string dump(const MatchGraph& g, const Matching& m) {
  std::ostringstream out;
  for (std::uint32_t i = 0; i < g.left_size(); ++i) {
    const auto j = m.mate_of_left(i);
    if (j == kUnmatched) continue;
    const auto& l = g.left(i);
    const auto& r = g.right(j);
    out << l.vertex << " " << l.index << " " << r.vertex << " " << r.index << " "
        << g.edge_distance(i, j) << "\n";
  }
  return out.str();
}

std::string stages_csv(std::span<const StageReport> reports) {
  std::ostringstream out;
  out << "stage,sweeps,flips,p_n_left,p_n_right\n";
  out.precision(10);
  for (const auto& r : reports) {
    out << r.stage << "," << r.sweeps << "," << r.flips << "," << r.p_left << "," << r.p_right
        << "\n";
  }
  return out.str();
}

}  // namespace factormatch
