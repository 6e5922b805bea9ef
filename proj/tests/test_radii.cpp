#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "factormatch/errors.hpp"
#include "factormatch/radii.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace factormatch;

namespace {

using fixtures::path_window;
using fixtures::uniform_counts;

std::set<std::vector<VertexId>> collect(const PointMultiset& pi, const GraphWindow& w,
                                        const ConnectedSetQuery& q, ConstraintMode mode) {
  std::set<std::vector<VertexId>> out;
  enumerate_rconnected(pi, w, q, mode, [&](const std::vector<VertexId>& s) {
    auto sorted = s;
    std::sort(sorted.begin(), sorted.end());
    EXPECT_TRUE(out.insert(sorted).second);
    return true;
  });
  return out;
}

// Whether some g-connected U containing v (any size) violates the constraint,
// by enumerating every vertex subset of a small explicit graph.
bool violated_by_bruteforce(const PointMultiset& pi, const PointMultiset& pi_prime, const GraphWindow& w,
                            VertexId v, int r) {
  const std::size_t n = w.size();
  std::vector<std::vector<int>> dist(n);
  for (VertexId a = 0; a < n; ++a) dist[a] = bfs_distances(w, a);
  std::vector<std::vector<std::uint32_t>> gap_adj(n);
  for (VertexId a = 0; a < n; ++a) {
    for (VertexId b = 0; b < n; ++b) {
      if (a != b && dist[a][b] <= 4 * r) gap_adj[a].push_back(b);
    }
  }
  for (std::uint64_t mask = 1; mask < (std::uint64_t{1} << n); ++mask) {
    if (!(mask >> v & 1) || !oracle::connected_mask(gap_adj, mask)) continue;
    std::int64_t supply = 0, demand = 0;
    for (VertexId a = 0; a < n; ++a) {
      if (mask >> a & 1) demand += static_cast<std::int64_t>(r) * pi.count(a);
      bool near = false;
      for (VertexId b = 0; b < n && !near; ++b) near = (mask >> b & 1) && dist[b][a] <= r;
      if (near) supply += pi_prime.count(a);
    }
    if (supply < demand) return true;
  }
  return false;
}

}  // namespace

TEST(BadSet, ThresholdBoundary) {
  const auto w = build_window(RegularTree{3}, 5, 3);
  // b_1 = 4, so a vertex is bad iff its 1-ball holds at most 3.6, i.e. at most 3 points.
  std::vector<std::uint32_t> counts(w.size(), 1);
  counts[0] = 0;
  const auto bad = compute_bad_set(PointMultiset(counts), w, 2);
  EXPECT_EQ(bad.flags[0], BadFlag::bad);
  for (auto u : w.neighbors(0)) EXPECT_EQ(bad.flags[u], BadFlag::bad);
  EXPECT_EQ(bad.flags[w.neighbors(1)[1]], BadFlag::good);
  EXPECT_EQ(compute_bad_set(uniform_counts(w, 1), w, 2).count(BadFlag::bad), 0u);
  // Leaves of the window cannot see their whole ball.
  EXPECT_EQ(bad.flags[w.size() - 1], BadFlag::censored);
}

TEST(Enumerate, SingletonWhenCapIsOne) {
  const auto w = build_window(RegularTree{3}, 4, 0);
  const auto pi = uniform_counts(w, 1);
  const auto sets = collect(pi, w, {3, 2, 1}, ConstraintMode::exact);
  EXPECT_EQ(sets, (std::set<std::vector<VertexId>>{{3}}));
}

TEST(Enumerate, PathOfThree) {
  const auto w = path_window(3);
  const auto sets = collect(uniform_counts(w, 1), w, {1, 1, 3}, ConstraintMode::exact);
  EXPECT_EQ(sets, (std::set<std::vector<VertexId>>{{1}, {0, 1}, {1, 2}, {0, 1, 2}}));
}

TEST(Enumerate, SupportModeWithEmptyPiIsTheCenter) {
  const auto w = build_window(RegularTree{3}, 4, 0);
  const auto sets = collect(uniform_counts(w, 0), w, {5, 4, 6}, ConstraintMode::support);
  EXPECT_EQ(sets, (std::set<std::vector<VertexId>>{{5}}));
}

TEST(Enumerate, SupportFamilyIsSubsetOfExact) {
  const auto w = path_window(9);
  std::vector<std::uint32_t> counts{1, 0, 0, 2, 0, 1, 0, 0, 1};
  const PointMultiset pi(counts);
  const ConnectedSetQuery q{4, 2, 9};
  const auto exact = collect(pi, w, q, ConstraintMode::exact);
  const auto support = collect(pi, w, q, ConstraintMode::support);
  for (const auto& s : support) {
    EXPECT_TRUE(exact.count(s));
    for (auto u : s) EXPECT_TRUE(u == 4 || pi.count(u) > 0);
  }
}

TEST(Constraint, DegenerateHoldsOnTree) {
  const auto w = build_window(RegularTree{3}, 6, 3);
  const auto pm = uniform_counts(w, 1);
  for (int r = 2; r <= 3; ++r) {
    // Support mode certifies the whole family through the closure bound.
    const auto res = constraint_holds(pm, pm, w, 0, r, ConstraintMode::support, {6, r, 2'000'000});
    EXPECT_EQ(res.status, ConstraintStatus::holds) << r;
    // Exact mode hits the size cap but finds no violation below it.
    const auto capped = constraint_holds(pm, pm, w, 0, r, ConstraintMode::exact, {4, r, 2'000'000});
    EXPECT_NE(capped.status, ConstraintStatus::violated) << r;
  }
}

TEST(Constraint, CrowdedIsolatedVertexIsAWitness) {
  const auto w = build_window(RegularTree{3}, 7, 4);
  std::vector<std::uint32_t> counts(w.size(), 0);
  counts[0] = 10;
  const PointMultiset pi(counts);
  const auto empty = uniform_counts(w, 0);
  for (auto mode : {ConstraintMode::exact, ConstraintMode::support}) {
    const auto res = constraint_holds(pi, empty, w, 0, 2, mode, {4, 2, 2'000'000});
    EXPECT_EQ(res.status, ConstraintStatus::violated);
    EXPECT_EQ(res.witness, std::vector<VertexId>{0});
    EXPECT_EQ(res.supply, 0);
    EXPECT_EQ(res.demand, 20);
  }
}

TEST(Constraint, ZeroSetCapIsTruncated) {
  const auto w = build_window(RegularTree{3}, 6, 3);
  const auto pm = uniform_counts(w, 1);
  EXPECT_EQ(constraint_holds(pm, pm, w, 0, 2, ConstraintMode::exact, {0, 2, 100}).status,
            ConstraintStatus::truncated);
}

TEST(Constraint, ExactModeAgreesWithSubsetEnumeration) {
  const auto w = path_window(12);
  StreamRng rng(17);
  for (int t = 0; t < 60; ++t) {
    std::vector<std::uint32_t> a(w.size()), b(w.size());
    for (auto& x : a) x = static_cast<std::uint32_t>(rng.uniform_index(3));
    for (auto& x : b) x = static_cast<std::uint32_t>(rng.uniform_index(4));
    const PointMultiset pi(a), pi_prime(b);
    const VertexId v = static_cast<VertexId>(rng.uniform_index(w.size()));
    const int r = 1;
    const bool expected = violated_by_bruteforce(pi, pi_prime, w, v, r);
    for (auto mode : {ConstraintMode::exact, ConstraintMode::support}) {
      const auto res = constraint_holds(pi, pi_prime, w, v, r, mode, {12, 4, 10'000'000});
      ASSERT_NE(res.status, ConstraintStatus::truncated);
      if (mode == ConstraintMode::exact) {
        EXPECT_EQ(res.status == ConstraintStatus::violated, expected) << t;
      } else if (res.status == ConstraintStatus::violated) {
        // Support mode only sees a subfamily, so it can miss but never invent a violation.
        EXPECT_TRUE(expected) << t;
      }
      if (res.status == ConstraintStatus::violated) {
        EXPECT_LT(res.supply, res.demand);
      }
    }
  }
}

TEST(RadiusField, DegenerateGivesR0OnInterior) {
  const auto w = build_window(RegularTree{3}, 8, 6);
  const auto pm = uniform_counts(w, 1);
  const auto field = compute_radius_field(pm, pm, w, 4, ConstraintMode::support, {12, 6, 2'000'000});
  EXPECT_EQ(field.bad.count(BadFlag::bad), 0u);
  for (VertexId v = 0; v < w.size(); ++v) {
    // Clause one needs the bad flags on B_{r0/2}(v), hence the complete r0-ball.
    if (w.level(v) + 4 <= w.depth()) {
      ASSERT_FALSE(field.censored(v)) << v;
      EXPECT_EQ(field.radius[v], 4);
      EXPECT_TRUE(field.first_clause[v]);
    }
  }
}

TEST(RadiusField, CrowdedVertexTakesSecondClause) {
  const auto w = build_window(RegularTree{3}, 8, 6);
  std::vector<std::uint32_t> counts(w.size(), 1);
  counts[0] = 5;
  const auto pm = uniform_counts(w, 1);
  const auto field = compute_radius_field(PointMultiset(counts), pm, w, 4, ConstraintMode::support,
                                          {12, 6, 2'000'000});
  EXPECT_FALSE(field.first_clause[0]);
  EXPECT_TRUE(field.first_clause[1]);
  if (!field.censored(0)) {
    EXPECT_GT(field.radius[0], 4);
  }
}

TEST(RadiusField, PoissonTailDecreases) {
  const auto w = build_window(RegularTree{3}, 9, 6);
  std::vector<std::size_t> above(8, 0);
  std::size_t resolved = 0;
  for (std::uint64_t s = 0; s < 6; ++s) {
    const auto pi = sample(PoissonProcess{}, w, derive_seed({s, 1}));
    const auto pp = sample(PoissonProcess{}, w, derive_seed({s, 2}));
    const auto field = compute_radius_field(pi, pp, w, 2, ConstraintMode::support, {10, 6, 2'000'000});
    for (auto v : w.core()) {
      if (field.censored(v)) continue;
      ++resolved;
      for (int r = 0; r < 8; ++r) above[r] += field.radius[v] > r;
    }
  }
  ASSERT_GT(resolved, 0u);
  for (int r = 1; r < 8; ++r) EXPECT_LE(above[r], above[r - 1]);
  EXPECT_EQ(above[1], resolved);
}

TEST(Components, EmptyAndIsolated) {
  const auto w = build_window(RegularTree{3}, 8, 6);
  const auto pm = uniform_counts(w, 1);
  const auto field = compute_radius_field(pm, pm, w, 4, ConstraintMode::support, {12, 6, 2'000'000});
  EXPECT_TRUE(components_above(field, w, 4, {false, false}).empty());

  RadiusField single = field;
  single.radius[0] = 7;
  const auto comps = components_above(single, w, 4, {false, false});
  ASSERT_EQ(comps.size(), 1u);
  EXPECT_EQ(comps[0].vertices, std::vector<VertexId>{0});
  EXPECT_EQ(comps[0].diameter, 0);
}

TEST(Dump, CensoredRadiiPrintAsDash) {
  const auto w = build_window(RegularTree{3}, 4, 2);
  const auto pm = uniform_counts(w, 1);
  const auto text = dump(compute_radius_field(pm, pm, w, 2, ConstraintMode::support, {6, 2, 1000}));
  EXPECT_NE(text.find("0 2 support"), std::string::npos);
  EXPECT_NE(text.find(" - "), std::string::npos);
}
