#include "factormatch/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>
#include <sstream>

#include "factormatch/errors.hpp"

namespace factormatch {

namespace {

// Least-squares slope of y on x.
bool fit_slope(const std::vector<double>& x, const std::vector<double>& y, double& slope) {
  if (x.size() < 2) return false;
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) return false;
  slope = sxy / sxx;
  return true;
}

std::vector<int> multi_source_distances(const GraphWindow& w, std::span<const VertexId> sources) {
  std::vector<int> dist(w.size(), kUnreachable);
  std::queue<VertexId> q;
  for (auto s : sources) {
    if (dist[s] == 0) continue;
    dist[s] = 0;
    q.push(s);
  }
  while (!q.empty()) {
    const auto u = q.front();
    q.pop();
    for (auto x : w.neighbors(u)) {
      if (dist[x] == kUnreachable) {
        dist[x] = dist[u] + 1;
        q.push(x);
      }
    }
  }
  return dist;
}

int diameter(const GraphWindow& w, const std::vector<VertexId>& set) {
  int best = 0;
  for (std::size_t i = 0; i < set.size(); ++i) {
    for (std::size_t j = i + 1; j < set.size(); ++j) best = std::max(best, distance(w, set[i], set[j]));
  }
  return best;
}

template <class T>
T pick(const std::vector<T>& items, StreamRng& rng) {
  return items[rng.uniform_index(items.size())];
}

}  // namespace

TrialTail trial_tail(const MatchGraph& g, const Matching& m, const GraphWindow& w,
                     const RadiusField& r_field, const PointMultiset& pi_prime, int r_max) {
  if (r_max < 0) throw ConfigError("tail radius must be >= 0");
  TrialTail out;
  out.tail.assign(static_cast<std::size_t>(r_max) + 2, 0.0);
  out.hole.assign(static_cast<std::size_t>(r_max) + 2, 0.0);
  constexpr int kInfinite = std::numeric_limits<int>::max();
  for (VertexId v = 0; v < w.size(); ++v) {
    if (!w.in_core(v) || r_field.censored(v)) continue;
    ++out.base;
    for (std::uint32_t i = 1;; ++i) {
      const auto pos = g.find({PointSide::left, v, i});
      if (!pos) break;
      const auto mate = m.mate_of_left(*pos);
      const int d = mate == kUnmatched ? kInfinite : g.edge_distance(*pos, mate);
      for (int r = 0; r < static_cast<int>(out.tail.size()); ++r) {
        if (d >= r) out.tail[r] += 1.0;
      }
    }
    const auto dist = bfs_distances(w, v, r_max + 1);
    int nearest = kInfinite;
    for (VertexId u = 0; u < w.size(); ++u) {
      if (dist[u] != kUnreachable && pi_prime.count(u) > 0) nearest = std::min(nearest, dist[u]);
    }
    for (int r = 0; r < static_cast<int>(out.hole.size()); ++r) {
      if (nearest > r) out.hole[r] += 1.0;
    }
  }
  if (out.base > 0) {
    for (auto& x : out.tail) x /= static_cast<double>(out.base);
    for (auto& x : out.hole) x /= static_cast<double>(out.base);
  }
  return out;
}

TailCurve matching_distance_tail(const std::vector<TrialTail>& trials, const GraphFamily& family) {
  TailCurve curve;
  curve.trials = trials.size();
  std::size_t width = 0;
  for (const auto& t : trials) {
    curve.base_vertices += t.base;
    width = std::max(width, t.tail.size());
  }
  if (curve.base_vertices == 0) throw CensoringError("every core vertex is censored");
  for (std::size_t r = 0; r < width; ++r) {
    double sum = 0.0, hole = 0.0;
    std::vector<double> per_trial;
    for (const auto& t : trials) {
      if (t.base == 0 || r >= t.tail.size()) continue;
      sum += t.tail[r] * static_cast<double>(t.base);
      hole += t.hole[r] * static_cast<double>(t.base);
      per_trial.push_back(t.tail[r]);
    }
    const double est = sum / static_cast<double>(curve.base_vertices);
    double se = 0.0;
    if (per_trial.size() > 1) {
      double ss = 0.0;
      for (double x : per_trial) ss += (x - est) * (x - est);
      const double k = static_cast<double>(per_trial.size());
      se = std::sqrt(ss / (k - 1.0) / k);
    }
    curve.radii.push_back(static_cast<int>(r));
    curve.ball_sizes.push_back(family_ball_size(family, static_cast<int>(r)));
    curve.estimate.push_back(est);
    curve.std_error.push_back(se);
    curve.hole.push_back(hole / static_cast<double>(curve.base_vertices));
  }
  std::vector<double> xs, ys;
  for (std::size_t r = 1; r < width; ++r) {
    if (curve.estimate[r] > 0.0) {
      xs.push_back(static_cast<double>(curve.ball_sizes[r]));
      ys.push_back(std::log(curve.estimate[r]));
    }
  }
  curve.slope_defined = fit_slope(xs, ys, curve.slope);
  return curve;
}

std::string TailCurve::csv() const {
  std::ostringstream out;
  out.precision(10);
  out << "r,b_r,estimate,stderr,hole\n";
  for (std::size_t i = 0; i < radii.size(); ++i) {
    out << radii[i] << "," << ball_sizes[i] << "," << estimate[i] << "," << std_error[i] << ","
        << hole[i] << "\n";
  }
  return out.str();
}

LemmaReport make_report(std::string id, bool exact, std::vector<LemmaRow> rows,
                        std::size_t core_size) {
  LemmaReport rep;
  rep.id = std::move(id);
  rep.exact = exact;
  std::vector<double> d, l, r;
  for (const auto& row : rows) {
    if (!row.holds) ++rep.violations;
    d.push_back(row.density);
    l.push_back(row.lhs);
    r.push_back(row.rhs);
  }
  rep.rows = std::move(rows);
  rep.density_mean = aggregate(d, core_size);
  rep.lhs_mean = aggregate(l, core_size);
  rep.rhs_mean = aggregate(r, core_size);
  return rep;
}

std::string LemmaReport::csv() const {
  std::ostringstream out;
  out.precision(10);
  out << "trial,density,lhs,rhs,holds\n";
  for (const auto& row : rows) {
    out << row.trial << "," << row.density << "," << row.lhs << "," << row.rhs << ","
        << (row.holds ? 1 : 0) << "\n";
  }
  return out.str();
}

SetGenerator occupied_set(std::uint32_t threshold) {
  return [threshold](const PointMultiset& pm, const GraphWindow& w) {
    std::vector<std::uint8_t> a(w.size(), 0);
    for (VertexId v = 0; v < w.size(); ++v) a[v] = pm.count(v) >= threshold ? 1 : 0;
    return a;
  };
}

LemmaReport verify_chebyshev(const GraphWindow& w, const SetGenerator& gen, std::uint64_t trials,
                             std::uint64_t seed) {
  const auto* tree = std::get_if<RegularTree>(&w.family());
  if (!tree) throw ConfigError("the Chebyshev check needs a family with known spectral radius < 1");
  const double rho = spectral_radius(w.family(), SpectralMethod::closed_form).value;
  std::vector<VertexId> base;
  for (VertexId v = 0; v < w.size(); ++v) {
    if (w.in_core(v) && w.has_full_degree(v)) base.push_back(v);
  }
  if (base.empty()) throw CensoringError("no core vertex has its full neighborhood");
  std::vector<LemmaRow> rows;
  for (std::uint64_t t = 0; t < trials; ++t) {
    const auto pm = sample(PoissonProcess{}, w, derive_seed({seed, t}));
    const auto a = gen(pm, w);
    std::size_t in_a = 0, in_n = 0;
    for (auto v : base) {
      if (a[v]) ++in_a;
      const auto nb = w.neighbors(v);
      if (std::any_of(nb.begin(), nb.end(), [&](VertexId x) { return a[x] != 0; })) ++in_n;
    }
    const double n = static_cast<double>(base.size());
    LemmaRow row;
    row.trial = t;
    row.density = static_cast<double>(in_a) / n;
    row.lhs = static_cast<double>(in_n) / n;
    const double p = row.density;
    row.rhs = p == 0.0 ? 0.0 : p / (rho * rho * (1.0 - p) + p);
    row.holds = row.lhs >= row.rhs;
    rows.push_back(row);
  }
  return make_report("chebyshev", false, std::move(rows), base.size());
}

LemmaRow boosted_hall_row(const MatchGraph& g, std::span<const PointRef> a, std::uint64_t trial) {
  LemmaRow row;
  row.trial = trial;
  row.density = density(g, a).value;
  const auto n = neighborhood(g, a);
  row.lhs = density(g, n).value;
  row.rhs = std::min(2.0 * row.density, 0.8);
  row.holds = row.lhs >= row.rhs;
  return row;
}

std::vector<PointRef> crowded_points(const MatchGraph& g, PointSide side, std::uint32_t threshold) {
  std::vector<PointRef> all;
  const auto n = side == PointSide::left ? g.left_size() : g.right_size();
  for (std::uint32_t i = 0; i < n; ++i) all.push_back(side == PointSide::left ? g.left(i) : g.right(i));
  std::vector<PointRef> out;
  for (std::size_t k = 0; k < all.size();) {
    std::size_t e = k;
    while (e < all.size() && all[e].vertex == all[k].vertex) ++e;
    if (e - k >= threshold) out.insert(out.end(), all.begin() + static_cast<std::ptrdiff_t>(k),
                                       all.begin() + static_cast<std::ptrdiff_t>(e));
    k = e;
  }
  return out;
}

LemmaReport verify_indep_set(const MatchGraph& g, std::span<const std::uint32_t> left_mates, int n) {
  if (left_mates.size() != g.left_size()) throw ContractViolation("snapshot does not fit the graph");
  if (n < 1) throw ConfigError("stage index must be >= 1");
  std::vector<std::uint32_t> right_mates(g.right_size(), kUnmatched);
  for (std::uint32_t i = 0; i < left_mates.size(); ++i) {
    if (left_mates[i] != kUnmatched) right_mates[left_mates[i]] = i;
  }
  std::vector<char> a_left(g.left_size(), 0), a_right(g.right_size(), 0);
  for (std::uint32_t i = 0; i < g.left_size(); ++i) a_left[i] = left_mates[i] == kUnmatched;
  for (std::uint32_t j = 0; j < g.right_size(); ++j) a_right[j] = right_mates[j] == kUnmatched;

  std::size_t failures = 0;
  std::vector<LemmaRow> rows;
  const auto base = static_cast<double>(g.density_base());
  for (int k = 0; k < n; ++k) {
    std::size_t left_count = 0, right_count = 0;
    bool independent = true;
    for (std::uint32_t i = 0; i < g.left_size(); ++i) {
      if (!a_left[i]) continue;
      if (g.left_counted(i)) ++left_count;
      for (auto j : g.left_adjacency(i)) {
        if (a_right[j]) independent = false;
      }
    }
    for (std::uint32_t j = 0; j < g.right_size(); ++j) {
      if (a_right[j] && g.right_counted(j)) ++right_count;
    }
    // B_k = N(A_k); every member must be matched, and A_{k+1} = mates of B_k.
    std::vector<char> b_left(g.left_size(), 0), b_right(g.right_size(), 0);
    for (std::uint32_t i = 0; i < g.left_size(); ++i) {
      if (!a_left[i]) continue;
      for (auto j : g.left_adjacency(i)) b_right[j] = 1;
    }
    for (std::uint32_t j = 0; j < g.right_size(); ++j) {
      if (!a_right[j]) continue;
      for (auto i : g.right_adjacency(j)) b_left[i] = 1;
    }
    bool b_matched = true;
    std::vector<char> next_left(g.left_size(), 0), next_right(g.right_size(), 0);
    for (std::uint32_t j = 0; j < g.right_size(); ++j) {
      if (!b_right[j]) continue;
      if (right_mates[j] == kUnmatched) {
        b_matched = false;
      } else {
        next_left[right_mates[j]] = 1;
      }
    }
    for (std::uint32_t i = 0; i < g.left_size(); ++i) {
      if (!b_left[i]) continue;
      if (left_mates[i] == kUnmatched) {
        b_matched = false;
      } else {
        next_right[left_mates[i]] = 1;
      }
    }
    if (!independent) ++failures;
    if (!b_matched) ++failures;
    LemmaRow row;
    row.trial = static_cast<std::uint64_t>(k);
    row.density = static_cast<double>(left_count) / base;
    row.lhs = std::min(static_cast<double>(left_count), static_cast<double>(right_count)) / base;
    row.rhs = 1.0 / 3.0;
    row.holds = row.lhs <= row.rhs;
    rows.push_back(row);
    a_left.swap(next_left);
    a_right.swap(next_right);
  }
  auto rep = make_report("indep_set", true, std::move(rows), g.density_base());
  rep.structural_failures = failures;
  return rep;
}

std::vector<VertexId> random_connected_set(const GraphWindow& w, VertexId start, std::size_t size,
                                           StreamRng& rng) {
  if (size == 0) return {};
  if (!w.in_core(start)) throw ContractViolation("start vertex outside the core");
  std::vector<VertexId> set{start};
  std::vector<char> in(w.size(), 0);
  in[start] = 1;
  while (set.size() < size) {
    std::vector<VertexId> frontier;
    for (auto u : set) {
      for (auto x : w.neighbors(u)) {
        if (!in[x] && w.in_core(x)) frontier.push_back(x);
      }
    }
    std::sort(frontier.begin(), frontier.end());
    frontier.erase(std::unique(frontier.begin(), frontier.end()), frontier.end());
    if (frontier.empty()) throw ContractViolation("core too small for the requested set size");
    const auto x = pick(frontier, rng);
    in[x] = 1;
    set.push_back(x);
  }
  return set;
}

DiscrepancyReport verify_discrepancy(const GraphFamily& family, const ProcessSpec& pi,
                                     const ProcessSpec& pi_prime, const std::vector<std::size_t>& sizes,
                                     int r, std::uint64_t trials, std::uint64_t seed) {
  if (r < 0) throw ConfigError("discrepancy radius must be >= 0");
  DiscrepancyReport rep;
  rep.r = r;
  const int reach = std::max(max_displacement(pi), max_displacement(pi_prime));
  for (auto s : sizes) {
    if (s == 0) throw ConfigError("set sizes must be positive");
    const int margin = r + reach;
    const auto w = build_window(family, static_cast<int>(s) - 1 + margin, margin);
    DiscrepancyBucket bucket;
    bucket.u_size = s;
    bucket.trials = trials;
    for (std::uint64_t t = 0; t < trials; ++t) {
      StreamRng rng(derive_seed({seed, s, t, 0}));
      const auto u = random_connected_set(w, w.root(), s, rng);
      const auto blown = ball_around(w, u, r);
      if (!blown.complete) throw CensoringError("U^{+r} leaves the window");
      if (t == 0) bucket.blown_size = blown.vertices.size();
      const auto a = sample(pi, w, derive_seed({seed, s, t, 1}));
      const auto b = sample(pi_prime, w, derive_seed({seed, s, t, 2}));
      const auto lhs = count_in(b, blown.vertices);
      const auto rhs = static_cast<std::uint64_t>(r) * count_in(a, u);
      if (lhs < rhs) ++bucket.events;
    }
    const double n = static_cast<double>(trials);
    bucket.frequency = trials ? static_cast<double>(bucket.events) / n : 0.0;
    bucket.std_error = trials ? std::sqrt(bucket.frequency * (1.0 - bucket.frequency) / n) : 0.0;
    rep.buckets.push_back(bucket);
  }
  std::vector<double> xs, ys;
  for (const auto& b : rep.buckets) {
    if (b.frequency > 0.0) {
      xs.push_back(static_cast<double>(b.blown_size));
      ys.push_back(std::log(b.frequency));
    }
  }
  rep.slope_defined = fit_slope(xs, ys, rep.slope);
  return rep;
}

std::string DiscrepancyReport::csv() const {
  std::ostringstream out;
  out.precision(10);
  out << "u_size,blown_size,trials,events,frequency,stderr\n";
  for (const auto& b : buckets) {
    out << b.u_size << "," << b.blown_size << "," << b.trials << "," << b.events << ","
        << b.frequency << "," << b.std_error << "\n";
  }
  return out.str();
}

GreedyResult greedy_sparse_subpath(const GraphWindow& w,
                                   const std::vector<std::vector<VertexId>>& sets, VertexId u,
                                   VertexId v, int r) {
  if (r < 1) throw ConfigError("connectivity scale r must be >= 1");
  const std::size_t m = sets.size();
  for (const auto& s : sets) {
    if (s.empty()) throw ContractViolation("empty set in the family");
  }
  // Pairwise set distances.
  std::vector<std::vector<int>> sd(m, std::vector<int>(m, 0));
  for (std::size_t i = 0; i < m; ++i) {
    const auto dist = multi_source_distances(w, sets[i]);
    for (std::size_t j = 0; j < m; ++j) {
      int best = kUnreachable;
      for (auto x : sets[j]) best = std::min(best, dist[x]);
      sd[i][j] = best;
    }
  }
  auto contains = [&](std::size_t i, VertexId x) {
    return std::find(sets[i].begin(), sets[i].end(), x) != sets[i].end();
  };

  // Shortest path from the sets containing u to a set containing v.
  constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> parent(m, kNone), level(m, kNone);
  std::queue<std::size_t> q;
  for (std::size_t i = 0; i < m; ++i) {
    if (contains(i, u)) {
      level[i] = 0;
      q.push(i);
    }
  }
  if (q.empty()) throw ContractViolation("u is not covered by the family");
  std::size_t target = kNone;
  while (!q.empty() && target == kNone) {
    const auto i = q.front();
    q.pop();
    if (contains(i, v)) {
      target = i;
      break;
    }
    for (std::size_t j = 0; j < m; ++j) {
      if (level[j] == kNone && sd[i][j] <= r) {
        level[j] = level[i] + 1;
        parent[j] = i;
        q.push(j);
      }
    }
  }
  if (target == kNone) throw ContractViolation("the family does not connect u and v");

  GreedyResult res;
  for (auto i = target; i != kNone; i = parent[i]) res.path.push_back(i);
  std::reverse(res.path.begin(), res.path.end());

  const std::size_t len = res.path.size();
  std::vector<char> chosen(len, 0);
  for (;;) {
    std::size_t best = kNone;
    for (std::size_t p = 0; p < len; ++p) {
      if (chosen[p] || (p > 0 && chosen[p - 1]) || (p + 1 < len && chosen[p + 1])) continue;
      if (best == kNone) {
        best = p;
        continue;
      }
      const auto sp = sets[res.path[p]].size(), sb = sets[res.path[best]].size();
      if (sp > sb || (sp == sb && res.path[p] < res.path[best])) best = p;
    }
    if (best == kNone) break;
    chosen[best] = 1;
  }
  for (std::size_t p = 0; p < len; ++p) {
    if (chosen[p]) res.selected.push_back(res.path[p]);
  }

  const auto& sel = res.selected;
  const std::size_t n = sel.size();
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) {
      if (sd[sel[a]][sel[b]] <= r) res.condition1 = false;
    }
  }
  for (std::size_t k = 0; k + 1 < n; ++k) {
    const auto& A = sets[sel[k]];
    const auto& B = sets[sel[k + 1]];
    const long long d = sd[sel[k]][sel[k + 1]];
    if (d > static_cast<long long>(A.size() + B.size()) + 3LL * r) res.condition2 = false;
    const long long da = diameter(w, A) + 1, db = diameter(w, B) + 1;
    if (d > da + db + 3LL * r) res.condition2_diameter = false;
  }
  auto point_to_set = [&](VertexId x, const std::vector<VertexId>& s) {
    int best = kUnreachable;
    for (auto y : s) best = std::min(best, distance(w, x, y));
    return best;
  };
  const auto& first = sets[sel.front()];
  const auto& last = sets[sel.back()];
  if (point_to_set(u, first) > static_cast<int>(first.size()) + r) res.condition3 = false;
  if (point_to_set(v, last) > static_cast<int>(last.size()) + r) res.condition3 = false;
  res.dist_uv = distance(w, u, v);
  long long total = 0;
  for (auto i : sel) total += static_cast<long long>(sets[i].size());
  res.bound_value = 3LL * r * static_cast<long long>(n) + 3 * total;
  res.bound = res.dist_uv <= res.bound_value;
  return res;
}

std::vector<std::vector<VertexId>> random_rconnected_family(const GraphWindow& w, int r,
                                                            std::size_t count, std::size_t max_size,
                                                            StreamRng& rng) {
  if (count == 0 || max_size == 0) throw ConfigError("family needs at least one non-empty set");
  const auto core = w.core();
  auto near_core = [&](VertexId x) {
    std::vector<VertexId> out;
    for (auto y : ball(w, x, r).vertices) {
      if (w.in_core(y)) out.push_back(y);
    }
    return out;
  };
  std::vector<std::vector<VertexId>> family;
  std::vector<VertexId> united;
  for (std::size_t k = 0; k < count; ++k) {
    const VertexId start = family.empty() ? pick(core, rng) : pick(near_core(pick(united, rng)), rng);
    std::vector<VertexId> set{start};
    const auto target = 1 + rng.uniform_index(max_size);
    for (std::size_t tries = 0; set.size() < target && tries < 8 * target; ++tries) {
      const auto cand = pick(near_core(pick(set, rng)), rng);
      if (std::find(set.begin(), set.end(), cand) == set.end()) set.push_back(cand);
    }
    united.insert(united.end(), set.begin(), set.end());
    family.push_back(std::move(set));
  }
  return family;
}

PnDecay pn_decay(std::span<const StageReport> reports) {
  PnDecay out;
  for (const auto& r : reports) out.p.push_back(r.p_left);
  std::vector<double> xs, ys;
  for (std::size_t n = 0; n < out.p.size(); ++n) {
    if (n + 1 < out.p.size()) {
      if (out.p[n + 1] > out.p[n]) out.monotone = false;
      if (out.p[n] > 0.0) out.ratios.push_back(out.p[n + 1] / out.p[n]);
    }
    if (out.p[n] > 0.0) {
      xs.push_back(static_cast<double>(n + 1));
      ys.push_back(std::log(out.p[n]));
    }
  }
  double slope = 0.0;
  out.fitted = fit_slope(xs, ys, slope);
  if (out.fitted) out.fitted_ratio = std::exp(slope);
  return out;
}

std::string PnDecay::csv() const {
  std::ostringstream out;
  out.precision(10);
  out << "stage,p_n,ratio,two_pow_minus_n\n";
  for (std::size_t n = 0; n < p.size(); ++n) {
    out << n + 1 << "," << p[n] << ",";
    if (n + 1 < p.size() && p[n] > 0.0) out << p[n + 1] / p[n];
    out << "," << std::ldexp(1.0, -static_cast<int>(n + 1)) << "\n";
  }
  return out.str();
}

}  // namespace factormatch
