#include "factormatch/radii.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <sstream>

#include <boost/graph/adjacency_list.hpp>
#include <boost/graph/boykov_kolmogorov_max_flow.hpp>

#include "factormatch/errors.hpp"

namespace factormatch {

namespace {

// Stamped multi-source BFS, reusable across queries on one window.
class BallScanner {
 public:
  explicit BallScanner(const GraphWindow& w) : w_(w), stamp_(w.size(), 0), dist_(w.size(), 0) {}

  // Calls visit(u, d) for every u in B_r(sources); returns whether the ball
  // is complete.
  template <class Visit>
  bool scan(std::span<const VertexId> sources, int r, Visit&& visit) {
    ++epoch_;
    queue_.clear();
    for (auto s : sources) {
      if (stamp_[s] == epoch_) continue;
      stamp_[s] = epoch_;
      dist_[s] = 0;
      queue_.push_back(s);
    }
    bool complete = true;
    for (std::size_t head = 0; head < queue_.size(); ++head) {
      const auto u = queue_[head];
      const int d = dist_[u];
      visit(u, d);
      if (d >= r) continue;
      if (!w_.has_full_degree(u)) complete = false;
      for (auto x : w_.neighbors(u)) {
        if (stamp_[x] == epoch_) continue;
        stamp_[x] = epoch_;
        dist_[x] = d + 1;
        queue_.push_back(x);
      }
    }
    return complete;
  }

  template <class Visit>
  bool scan(VertexId source, int r, Visit&& visit) {
    return scan(std::span<const VertexId>(&source, 1), r, std::forward<Visit>(visit));
  }

 private:
  const GraphWindow& w_;
  std::vector<std::uint32_t> stamp_;
  std::vector<int> dist_;
  std::vector<VertexId> queue_;
  std::uint32_t epoch_ = 0;
};

using FlowTraits = boost::adjacency_list_traits<boost::vecS, boost::vecS, boost::directedS>;
using FlowGraph = boost::adjacency_list<
    boost::vecS, boost::vecS, boost::directedS,
    boost::property<boost::vertex_color_t, boost::default_color_type,
                    boost::property<boost::vertex_distance_t, long,
                                    boost::property<boost::vertex_predecessor_t,
                                                    FlowTraits::edge_descriptor>>>,
    boost::property<boost::edge_capacity_t, std::int64_t,
                    boost::property<boost::edge_residual_capacity_t, std::int64_t,
                                    boost::property<boost::edge_reverse_t,
                                                    FlowTraits::edge_descriptor>>>>;

void add_flow_edge(FlowGraph& g, std::size_t u, std::size_t v, std::int64_t cap) {
  auto e = boost::add_edge(u, v, g).first;
  auto back = boost::add_edge(v, u, g).first;
  boost::put(boost::edge_capacity, g, e, cap);
  boost::put(boost::edge_capacity, g, back, 0);
  boost::put(boost::edge_reverse, g, e, back);
  boost::put(boost::edge_reverse, g, back, e);
}

}  // namespace

std::size_t BadSet::count(BadFlag f) const {
  return static_cast<std::size_t>(std::count(flags.begin(), flags.end(), f));
}

BadSet compute_bad_set(const PointMultiset& supply, const GraphWindow& w, int r0,
                       std::int64_t threshold_num, std::int64_t threshold_den) {
  if (r0 < 2 || r0 % 2 != 0) throw ConfigError("r0 must be even and >= 2");
  if (threshold_num < 0 || threshold_den <= 0) throw ConfigError("bad-set threshold must be >= 0");
  if (supply.vertex_count() != w.size()) throw ContractViolation("point set does not fit window");
  BadSet bad;
  bad.r0 = r0;
  bad.threshold_num = threshold_num;
  bad.threshold_den = threshold_den;
  bad.flags.assign(w.size(), BadFlag::censored);
  const auto b = static_cast<std::int64_t>(family_ball_size(w.family(), r0 / 2));
  BallScanner scanner(w);
  for (VertexId v = 0; v < w.size(); ++v) {
    std::int64_t count = 0;
    const bool complete = scanner.scan(v, r0 / 2, [&](VertexId u, int) { count += supply.count(u); });
    if (!complete) continue;
    bad.flags[v] = count * threshold_den <= threshold_num * b ? BadFlag::bad : BadFlag::good;
  }
  return bad;
}

std::string mode_name(ConstraintMode mode) {
  return mode == ConstraintMode::exact ? "exact" : "support";
}

std::string status_name(ConstraintStatus s) {
  switch (s) {
    case ConstraintStatus::holds: return "holds";
    case ConstraintStatus::violated: return "violated";
    case ConstraintStatus::truncated: return "truncated";
    case ConstraintStatus::censored: return "censored";
  }
  return "?";
}

std::string reason_name(CensorReason r) {
  switch (r) {
    case CensorReason::none: return "none";
    case CensorReason::clause1_unknown: return "clause1_unknown";
    case CensorReason::not_interior: return "not_interior";
    case CensorReason::truncated: return "truncated";
    case CensorReason::r_max: return "r_max";
  }
  return "?";
}

EnumerationResult enumerate_rconnected(
    const PointMultiset& pi, const GraphWindow& w, const ConnectedSetQuery& q,
    ConstraintMode mode, const std::function<bool(const std::vector<VertexId>&)>& callback,
    const std::function<bool(VertexId)>& admissible) {
  if (q.gap < 1) throw ConfigError("connectivity gap must be >= 1");
  if (q.center >= w.size()) throw ContractViolation("query center outside the window");
  EnumerationResult out;
  if (q.s_max == 0) {
    out.truncated = true;
    return out;
  }
  std::vector<int> from_center;
  if (q.radius_cap != kUnreachable) from_center = bfs_distances(w, q.center, q.radius_cap);
  auto allowed = [&](VertexId u) {
    if (u == q.center) return true;
    if (mode == ConstraintMode::support && pi.count(u) == 0) return false;
    if (!from_center.empty() && from_center[u] == kUnreachable) return false;
    return !admissible || admissible(u);
  };
  BallScanner scanner(w);
  std::map<VertexId, std::vector<VertexId>> near;
  auto adjacent = [&](VertexId u, std::vector<VertexId>& nbrs) {
    auto [it, fresh] = near.try_emplace(u);
    if (fresh) {
      scanner.scan(u, q.gap, [&](VertexId x, int d) {
        if (d > 0 && allowed(x)) it->second.push_back(x);
      });
    }
    nbrs = it->second;
  };
  const auto res = enumerate_connected_sets(q.center, q.s_max, adjacent, allowed, callback);
  out.truncated = res.truncated;
  out.stopped = res.stopped;
  out.emitted = res.emitted;
  return out;
}

struct ConstraintEvaluator::Impl {
  struct PerRadius {
    std::vector<std::int8_t> interior;  // -1 unknown
    std::vector<std::vector<std::pair<VertexId, std::int64_t>>> supply_ball;
    std::vector<std::uint8_t> ball_ready;
    // 4r-components of supp(demand) cap interior, built on first support query.
    bool components_ready = false;
    std::vector<std::int32_t> component;
    std::vector<std::vector<VertexId>> members;
  };

  const PointMultiset& demand;
  const PointMultiset& supply;
  const GraphWindow& w;
  RadiusCaps caps;
  BallScanner scanner;
  std::map<int, PerRadius> per_radius;
  std::vector<std::uint32_t> cover_stamp;
  std::uint32_t cover_epoch = 0;

  Impl(const PointMultiset& d, const PointMultiset& s, const GraphWindow& win, RadiusCaps c)
      : demand(d), supply(s), w(win), caps(c), scanner(win), cover_stamp(win.size(), 0) {}

  PerRadius& data(int r) {
    auto [it, fresh] = per_radius.try_emplace(r);
    if (fresh) {
      it->second.interior.assign(w.size(), -1);
      it->second.supply_ball.resize(w.size());
      it->second.ball_ready.assign(w.size(), 0);
    }
    return it->second;
  }

  void load_ball(PerRadius& pr, VertexId u, int r) {
    if (pr.ball_ready[u]) return;
    auto& list = pr.supply_ball[u];
    const bool complete = scanner.scan(u, r, [&](VertexId x, int) {
      if (supply.count(x) > 0) list.emplace_back(x, supply.count(x));
    });
    pr.interior[u] = complete ? 1 : 0;
    pr.ball_ready[u] = 1;
  }

  bool interior(VertexId u, int r) {
    auto& pr = data(r);
    if (pr.interior[u] < 0) {
      if (w.is_tree()) {
        pr.interior[u] = w.level(u) + r <= w.depth() ? 1 : 0;
      } else {
        load_ball(pr, u, r);
      }
    }
    return pr.interior[u] == 1;
  }

  std::pair<std::int64_t, std::int64_t> sides(std::span<const VertexId> set, int r) {
    auto& pr = data(r);
    ++cover_epoch;
    std::int64_t got = 0, need = 0;
    for (auto u : set) {
      load_ball(pr, u, r);
      need += static_cast<std::int64_t>(r) * demand.count(u);
      for (auto [x, c] : pr.supply_ball[u]) {
        if (cover_stamp[x] == cover_epoch) continue;
        cover_stamp[x] = cover_epoch;
        got += c;
      }
    }
    return {got, need};
  }

  void build_components(PerRadius& pr, int r) {
    pr.components_ready = true;
    pr.component.assign(w.size(), -1);
    const int gap = 4 * r;
    std::vector<VertexId> stack;
    for (VertexId s = 0; s < w.size(); ++s) {
      if (demand.count(s) == 0 || pr.component[s] >= 0 || !interior(s, r)) continue;
      const auto id = static_cast<std::int32_t>(pr.members.size());
      pr.members.emplace_back();
      pr.component[s] = id;
      stack.assign(1, s);
      while (!stack.empty()) {
        const auto u = stack.back();
        stack.pop_back();
        pr.members[id].push_back(u);
        std::vector<VertexId> found;
        scanner.scan(u, gap, [&](VertexId x, int) {
          if (pr.component[x] < 0 && demand.count(x) > 0) found.push_back(x);
        });
        for (auto x : found) {
          if (pr.component[x] >= 0 || !interior(x, r)) continue;
          pr.component[x] = id;
          stack.push_back(x);
        }
      }
      std::sort(pr.members[id].begin(), pr.members[id].end());
    }
  }

  ConstraintResult enumerate(VertexId v, int r, ConstraintMode mode) {
    ConstraintResult res;
    ConnectedSetQuery q;
    q.center = v;
    q.gap = 4 * r;
    q.s_max = caps.s_max;
    std::uint64_t budget = caps.max_sets;
    bool over_budget = false;
    const auto scan = enumerate_rconnected(
        demand, w, q, mode,
        [&](const std::vector<VertexId>& set) {
          if (budget-- == 0) {
            over_budget = true;
            return false;
          }
          auto [got, need] = sides(set, r);
          if (got < need) {
            res.status = ConstraintStatus::violated;
            res.witness = set;
            std::sort(res.witness.begin(), res.witness.end());
            res.supply = got;
            res.demand = need;
            return false;
          }
          return true;
        },
        [&](VertexId u) { return interior(u, r); });
    if (res.status == ConstraintStatus::violated) return res;
    res.status = scan.truncated || over_budget ? ConstraintStatus::truncated
                                               : ConstraintStatus::holds;
    return res;
  }

  // Maximizes F(X) = r l(X) - l'(X^{+r}) over X inside the 4r-component of v,
  // v in X, as a max-closure problem. F is additive over sets further than 4r
  // apart, so a positive maximum whose v-component is positive is a witness.
  ConstraintResult support(VertexId v, int r) {
    auto& pr = data(r);
    if (!pr.components_ready) build_components(pr, r);

    std::vector<VertexId> block;
    if (pr.component[v] >= 0) {
      block = pr.members[pr.component[v]];
    } else {
      std::vector<std::int32_t> touching;
      scanner.scan(v, 4 * r, [&](VertexId x, int) {
        if (pr.component[x] >= 0) touching.push_back(pr.component[x]);
      });
      std::sort(touching.begin(), touching.end());
      touching.erase(std::unique(touching.begin(), touching.end()), touching.end());
      block.push_back(v);
      for (auto id : touching) block.insert(block.end(), pr.members[id].begin(), pr.members[id].end());
      std::sort(block.begin(), block.end());
    }

    load_ball(pr, v, r);
    std::map<VertexId, std::size_t> tool_index;
    ++cover_epoch;
    std::int64_t base = static_cast<std::int64_t>(r) * demand.count(v);
    for (auto [x, c] : pr.supply_ball[v]) {
      cover_stamp[x] = cover_epoch;
      base -= c;
    }
    std::vector<VertexId> projects;
    for (auto u : block) {
      if (u == v) continue;
      projects.push_back(u);
      load_ball(pr, u, r);
      for (auto [x, c] : pr.supply_ball[u]) {
        if (cover_stamp[x] != cover_epoch) tool_index.try_emplace(x, 0);
      }
    }

    const std::size_t source = 0, sink = 1;
    FlowGraph g(2 + projects.size() + tool_index.size());
    std::size_t next = 2 + projects.size();
    for (auto& [x, idx] : tool_index) {
      idx = next++;
      add_flow_edge(g, idx, sink, supply.count(x));
    }
    std::int64_t profit = 0;
    constexpr std::int64_t kInf = std::int64_t{1} << 50;
    for (std::size_t i = 0; i < projects.size(); ++i) {
      const auto u = projects[i];
      const std::int64_t gain = static_cast<std::int64_t>(r) * demand.count(u);
      profit += gain;
      add_flow_edge(g, source, 2 + i, gain);
      for (auto [x, c] : pr.supply_ball[u]) {
        auto it = tool_index.find(x);
        if (it != tool_index.end()) add_flow_edge(g, 2 + i, it->second, kInf);
      }
    }
    const std::int64_t flow = boost::boykov_kolmogorov_max_flow(g, source, sink);
    const std::int64_t best = base + profit - flow;

    ConstraintResult res;
    if (best <= 0) return res;

    // Source side of the minimum cut, from residual reachability.
    auto residual = boost::get(boost::edge_residual_capacity, g);
    std::vector<char> seen(boost::num_vertices(g), 0);
    std::vector<std::size_t> stack{source};
    seen[source] = 1;
    while (!stack.empty()) {
      const auto a = stack.back();
      stack.pop_back();
      for (auto [e, end] = boost::out_edges(a, g); e != end; ++e) {
        const auto b = boost::target(*e, g);
        if (!seen[b] && residual[*e] > 0) {
          seen[b] = 1;
          stack.push_back(b);
        }
      }
    }
    std::vector<VertexId> chosen{v};
    for (std::size_t i = 0; i < projects.size(); ++i) {
      if (seen[2 + i]) chosen.push_back(projects[i]);
    }
    // Restrict to the 4r-connected part containing v.
    std::vector<VertexId> witness{v};
    std::vector<char> taken(chosen.size(), 0);
    taken[0] = 1;
    for (std::size_t head = 0; head < witness.size(); ++head) {
      const auto u = witness[head];
      std::vector<char> close(w.size(), 0);
      scanner.scan(u, 4 * r, [&](VertexId x, int) { close[x] = 1; });
      for (std::size_t i = 1; i < chosen.size(); ++i) {
        if (!taken[i] && close[chosen[i]]) {
          taken[i] = 1;
          witness.push_back(chosen[i]);
        }
      }
    }
    std::sort(witness.begin(), witness.end());
    auto [got, need] = sides(witness, r);
    if (got < need) {
      res.status = ConstraintStatus::violated;
      res.witness = std::move(witness);
      res.supply = got;
      res.demand = need;
      return res;
    }
    res = enumerate(v, r, ConstraintMode::support);
    res.used_fallback = true;
    return res;
  }
};

ConstraintEvaluator::ConstraintEvaluator(const PointMultiset& demand, const PointMultiset& supply,
                                         const GraphWindow& w, RadiusCaps caps)
    : impl_(std::make_unique<Impl>(demand, supply, w, caps)) {
  if (demand.vertex_count() != w.size() || supply.vertex_count() != w.size()) {
    throw ContractViolation("point sets do not fit the window");
  }
}

ConstraintEvaluator::~ConstraintEvaluator() = default;

bool ConstraintEvaluator::interior(VertexId u, int r) { return impl_->interior(u, r); }

std::pair<std::int64_t, std::int64_t> ConstraintEvaluator::sides(std::span<const VertexId> set,
                                                                 int r) {
  return impl_->sides(set, r);
}

ConstraintResult ConstraintEvaluator::evaluate(VertexId v, int r, ConstraintMode mode) {
  if (r < 0) throw ConfigError("constraint radius must be >= 0");
  ConstraintResult res;
  if (impl_->caps.s_max == 0) {
    res.status = ConstraintStatus::truncated;
    return res;
  }
  if (!impl_->interior(v, r)) {
    res.status = ConstraintStatus::censored;
    return res;
  }
  // {v} belongs to both families; checking it first keeps witnesses minimal when it fails.
  const VertexId single[1] = {v};
  const auto [supply, demand] = sides(single, r);
  if (supply < demand) {
    res.status = ConstraintStatus::violated;
    res.witness = {v};
    res.supply = supply;
    res.demand = demand;
    return res;
  }
  if (mode == ConstraintMode::exact || r == 0) return impl_->enumerate(v, r, mode);
  return impl_->support(v, r);
}

ConstraintResult constraint_holds(const PointMultiset& pi, const PointMultiset& pi_prime,
                                  const GraphWindow& w, VertexId v, int r, ConstraintMode mode,
                                  const RadiusCaps& caps) {
  ConstraintEvaluator eval(pi, pi_prime, w, caps);
  return eval.evaluate(v, r, mode);
}

std::size_t RadiusField::censored_count() const {
  return static_cast<std::size_t>(
      std::count_if(reason.begin(), reason.end(), [](auto r) { return r != CensorReason::none; }));
}

RadiusField compute_radius_field(const PointMultiset& own, const PointMultiset& other,
                                 const GraphWindow& w, int r0, ConstraintMode mode,
                                 const RadiusCaps& caps, Side side) {
  if (caps.r_max < r0) throw ConfigError("radius cap R_max must be >= r0");
  RadiusField field;
  field.side = side;
  field.mode = mode;
  field.r0 = r0;
  field.caps = caps;
  field.bad = compute_bad_set(other, w, r0);
  field.radius.assign(w.size(), 0);
  field.reason.assign(w.size(), CensorReason::none);
  field.first_clause.assign(w.size(), 0);

  ConstraintEvaluator eval(own, other, w, caps);
  BallScanner scanner(w);
  for (VertexId v = 0; v < w.size(); ++v) {
    if (own.count(v) <= static_cast<std::uint32_t>(r0)) {
      bool any_bad = false, unknown = false;
      const bool complete = scanner.scan(v, r0 / 2, [&](VertexId u, int) {
        if (field.bad.flags[u] == BadFlag::bad) any_bad = true;
        if (field.bad.flags[u] == BadFlag::censored) unknown = true;
      });
      if (!any_bad && (unknown || !complete)) {
        field.reason[v] = CensorReason::clause1_unknown;
        continue;
      }
      if (!any_bad) {
        field.radius[v] = r0;
        field.first_clause[v] = 1;
        continue;
      }
    }
    field.reason[v] = CensorReason::r_max;
    for (int r = r0 + 1; r <= caps.r_max; ++r) {
      const auto res = eval.evaluate(v, r, mode);
      if (res.used_fallback) ++field.fallback_checks;
      if (res.status == ConstraintStatus::violated) continue;
      if (res.status == ConstraintStatus::holds) {
        field.radius[v] = r;
        field.reason[v] = CensorReason::none;
      } else {
        field.reason[v] = res.status == ConstraintStatus::truncated ? CensorReason::truncated
                                                                    : CensorReason::not_interior;
      }
      break;
    }
  }
  return field;
}

std::vector<RadiusComponent> components_above(const RadiusField& field, const GraphWindow& w,
                                              int r, const ComponentOptions& options) {
  std::vector<VertexId> above;
  for (VertexId v = 0; v < w.size(); ++v) {
    if (options.core_only && !w.in_core(v)) continue;
    const bool hit = field.censored(v) ? options.include_censored : field.radius[v] > r;
    if (hit) above.push_back(v);
  }
  // Union by BFS over the 4r-proximity graph of `above`.
  std::vector<int> comp(above.size(), -1);
  std::vector<RadiusComponent> out;
  const int gap = std::max(4 * r, 1);
  for (std::size_t s = 0; s < above.size(); ++s) {
    if (comp[s] >= 0) continue;
    const int id = static_cast<int>(out.size());
    out.emplace_back();
    std::vector<std::size_t> queue{s};
    comp[s] = id;
    for (std::size_t head = 0; head < queue.size(); ++head) {
      const auto u = above[queue[head]];
      out[id].vertices.push_back(u);
      const auto d = bfs_distances(w, u, gap);
      for (std::size_t j = 0; j < above.size(); ++j) {
        if (comp[j] < 0 && d[above[j]] != kUnreachable) {
          comp[j] = id;
          queue.push_back(j);
        }
      }
    }
  }
  for (auto& c : out) {
    std::sort(c.vertices.begin(), c.vertices.end());
    for (auto u : c.vertices) {
      if (field.censored(u)) ++c.censored;
    }
    for (std::size_t i = 0; i < c.vertices.size(); ++i) {
      const auto d = bfs_distances(w, c.vertices[i]);
      for (std::size_t j = i + 1; j < c.vertices.size(); ++j) {
        c.diameter = std::max(c.diameter, d[c.vertices[j]]);
      }
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const RadiusComponent& a, const RadiusComponent& b) {
    if (a.vertices.size() != b.vertices.size()) return a.vertices.size() > b.vertices.size();
    return a.vertices.front() < b.vertices.front();
  });
  return out;
}

std::string dump(const RadiusField& field) {
  std::ostringstream out;
  const char* side = field.side == Side::pi ? "pi" : "pi_prime";
  for (VertexId v = 0; v < field.radius.size(); ++v) {
    out << v << " ";
    if (field.censored(v)) {
      out << "- " << mode_name(field.mode) << " " << side << ",censored:" << reason_name(field.reason[v]);
    } else {
      out << field.radius[v] << " " << mode_name(field.mode) << " " << side
          << (field.first_clause[v] ? ",clause1" : ",clause2");
    }
    out << "\n";
  }
  return out.str();
}

}  // namespace factormatch
