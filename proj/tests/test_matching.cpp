#include <gtest/gtest.h>

#include <numeric>

#include "factormatch/bipartite.hpp"
#include "factormatch/errors.hpp"
#include "factormatch/matching.hpp"
#include "oracles.hpp"

using namespace factormatch;

namespace {

std::vector<std::uint32_t> identity_rank(std::size_t n) {
  std::vector<std::uint32_t> rank(n);
  std::iota(rank.begin(), rank.end(), 0u);
  return rank;
}

MatchGraph graph_of(const oracle::Instance& in) { return MatchGraph::from_edges(in.left, in.right, in.edges); }

// L0 - R0 - L1 - R1 - ... - L{n-1} - R{n-1}, with R_k - L_{k+1} matched.
struct PathInstance {
  MatchGraph g;
  Matching m;
};

PathInstance alternating_path(std::uint32_t n) {
  oracle::Edges edges;
  for (std::uint32_t k = 0; k < n; ++k) {
    edges.emplace_back(k, k);
    if (k + 1 < n) edges.emplace_back(k + 1, k);
  }
  PathInstance p{MatchGraph::from_edges(n, n, edges), Matching(n, n)};
  for (std::uint32_t k = 0; k + 1 < n; ++k) p.m.link(k + 1, k);
  return p;
}

struct Degenerate {
  GraphWindow w = build_window(RegularTree{3}, 8, 6);
  PointMultiset pm = PointMultiset(std::vector<std::uint32_t>(w.size(), 1));
  RadiusField field = compute_radius_field(pm, pm, w, 4, ConstraintMode::support, {12, 6, 2'000'000});
};

}  // namespace

TEST(MatchGraph, DegenerateColocatedPairsAreAdjacent) {
  Degenerate d;
  const auto g = build_match_graph(d.pm, d.pm, d.field, d.field, d.w);
  ASSERT_EQ(g.left_size(), g.right_size());
  for (std::uint32_t i = 0; i < g.left_size(); ++i) {
    const auto j = g.find({PointSide::right, g.left(i).vertex, 1});
    ASSERT_TRUE(j.has_value());
    EXPECT_TRUE(g.has_edge(i, *j));
    EXPECT_EQ(g.edge_distance(i, *j), 0);
    for (auto y : g.left_adjacency(i)) EXPECT_LE(g.edge_distance(i, y), 4);
  }
}

TEST(MatchGraph, EdgeThroughTheOtherRadius) {
  Degenerate d;
  std::vector<std::uint32_t> left(d.w.size(), 0), right(d.w.size(), 0);
  left[0] = 1;
  VertexId far = 0;
  for (VertexId v = 0; v < d.w.size(); ++v) {
    if (d.w.level(v) == 5) {
      far = v;
      break;
    }
  }
  right[far] = 1;
  auto r = d.field;
  auto rp = d.field;
  rp.radius[far] = 5;
  rp.reason[far] = CensorReason::none;
  const auto g = build_match_graph(PointMultiset(left), PointMultiset(right), r, rp, d.w);
  ASSERT_EQ(g.left_size(), 1u);
  ASSERT_EQ(g.right_size(), 1u);
  ASSERT_TRUE(g.has_edge(0, 0));
  EXPECT_EQ(g.edges()[0].origin, kFromRight);
  rp.radius[far] = 4;
  EXPECT_FALSE(build_match_graph(PointMultiset(left), PointMultiset(right), r, rp, d.w).has_edge(0, 0));
}

TEST(MatchGraph, EmptyRightSide) {
  Degenerate d;
  const PointMultiset empty(std::vector<std::uint32_t>(d.w.size(), 0));
  const auto g = build_match_graph(d.pm, empty, d.field, d.field, d.w);
  EXPECT_EQ(g.right_size(), 0u);
  for (std::uint32_t i = 0; i < g.left_size(); ++i) EXPECT_TRUE(g.left_adjacency(i).empty());
}

TEST(Neighborhood, BasicsAndDoubleNeighborhood) {
  Degenerate d;
  const auto g = build_match_graph(d.pm, d.pm, d.field, d.field, d.w);
  EXPECT_TRUE(neighborhood(g, {}).empty());
  std::vector<PointRef> all_left;
  for (std::uint32_t i = 0; i < g.left_size(); ++i) all_left.push_back(g.left(i));
  EXPECT_EQ(neighborhood(g, all_left).size(), g.right_size());
  std::vector<PointRef> mixed{g.left(0), g.right(0)};
  EXPECT_THROW(neighborhood(g, mixed), ContractViolation);

  StreamRng rng(4);
  for (int t = 0; t < 50; ++t) {
    const auto inst = oracle::random_instance(rng, 15, 2.0);
    const auto h = graph_of(inst);
    std::vector<PointRef> a;
    for (std::uint32_t i = 0; i < h.left_size(); ++i) {
      if (!h.left_adjacency(i).empty() && rng.uniform() < 0.5) a.push_back(h.left(i));
    }
    const auto back = neighborhood(h, neighborhood(h, a));
    for (const auto& p : a) EXPECT_TRUE(std::binary_search(back.begin(), back.end(), p));
  }
}

TEST(Density, Basics) {
  Degenerate d;
  const auto g = build_match_graph(d.pm, d.pm, d.field, d.field, d.w);
  std::vector<PointRef> all_left;
  for (std::uint32_t i = 0; i < g.left_size(); ++i) all_left.push_back(g.left(i));
  EXPECT_DOUBLE_EQ(density(g, all_left).value, 1.0);
  EXPECT_DOUBLE_EQ(density(g, {}).value, 0.0);
}

TEST(Chains, SingleEdgeAndMatchedGraph) {
  const oracle::Edges one{{0, 0}};
  const auto g = MatchGraph::from_edges(1, 1, one);
  Matching m(1, 1);
  const auto chains = find_chains(g, m, 2);
  ASSERT_EQ(chains.size(), 1u);
  EXPECT_EQ(chains[0].length(), 1u);
  m.link(0, 0);
  EXPECT_TRUE(find_chains(g, m, 10).empty());
}

TEST(Chains, FourPointPath) {
  auto p = alternating_path(2);
  const auto chains = find_chains(p.g, p.m, 4);
  ASSERT_EQ(chains.size(), 1u);
  EXPECT_EQ(chains[0].left, (std::vector<std::uint32_t>{0, 1}));
  EXPECT_EQ(chains[0].right, (std::vector<std::uint32_t>{0, 1}));
  EXPECT_EQ(chains[0].length(), 3u);
  EXPECT_TRUE(find_chains(p.g, p.m, 3).empty());

  const auto report = run_stage(p.g, p.m, 1, identity_rank(2));
  EXPECT_EQ(report.flips, 1u);
  EXPECT_EQ(p.m.size(), 2u);
}

TEST(Chains, AgreeWithUnprunedSearch) {
  StreamRng rng(8);
  for (int t = 0; t < 200; ++t) {
    const auto inst = oracle::random_instance(rng, 12, 1.8);
    const auto g = graph_of(inst);
    Matching m(g.left_size(), g.right_size());
    // A random greedy matching as the starting point.
    for (auto [i, j] : inst.edges) {
      if (m.mate_of_left(i) == kUnmatched && m.mate_of_right(j) == kUnmatched && rng.uniform() < 0.5) {
        m.link(i, j);
      }
    }
    for (std::size_t len : {2u, 4u, 6u, 10u}) {
      const auto chains = find_chains(g, m, len);
      EXPECT_EQ(chains.size(), oracle::count_short_chains(g, m, len, 1'000'000)) << t << " " << len;
    }
  }
}

TEST(Selection, Rules) {
  const oracle::Edges edges{{0, 0}, {1, 0}, {1, 1}, {2, 2}};
  const auto g = MatchGraph::from_edges(3, 3, edges);
  const auto rank = identity_rank(3);
  const Chain a{{0}, {0}}, b{{1}, {0}}, c{{1}, {1}}, d{{2}, {2}};
  ASSERT_TRUE(chain_key(g, a, rank) < chain_key(g, b, rank));
  ASSERT_TRUE(chain_key(g, b, rank) < chain_key(g, c, rank));
  EXPECT_EQ(select_minimal(g, {a, d}, rank), (std::vector<Chain>{a, d}));
  EXPECT_EQ(select_minimal(g, {b, a}, rank), (std::vector<Chain>{a}));
  EXPECT_EQ(select_minimal(g, {c, b, a}, rank), (std::vector<Chain>{a}));
}

TEST(ChainKey, OrderAndCanonicalReading) {
  const oracle::Edges edges{{0, 0}, {1, 1}, {2, 0}};
  const auto g = MatchGraph::from_edges(3, 2, edges);
  const std::vector<std::uint32_t> rank{2, 0, 1};
  // Left 1 / right 1 sit at vertex 1, which has the smallest rank.
  EXPECT_TRUE(chain_key(g, Chain{{1}, {1}}, rank) < chain_key(g, Chain{{0}, {0}}, rank));
  const auto k = chain_key(g, Chain{{2}, {0}}, rank);
  EXPECT_LE(k.keys.front(), k.keys.back());

  // Points (v,1) and (v,2) at one vertex: index breaks the tie.
  std::vector<PointRef> left{{PointSide::left, 0, 1}, {PointSide::left, 0, 2}};
  std::vector<PointRef> right{{PointSide::right, 1, 1}};
  const MatchGraph h(left, right, {{0, 0, kFromLeft, 1}, {1, 0, kFromLeft, 1}}, {1, 1}, {1}, 2);
  const std::vector<std::uint32_t> r2{0, 1};
  EXPECT_LT(point_key(left[0], r2), point_key(left[1], r2));
  EXPECT_TRUE(chain_key(h, Chain{{0}, {0}}, r2) < chain_key(h, Chain{{1}, {0}}, r2));
  EXPECT_EQ(select_minimal(h, {Chain{{1}, {0}}, Chain{{0}, {0}}}, r2), (std::vector<Chain>{Chain{{0}, {0}}}));
}

TEST(Flip, NetGainIsTwoPoints) {
  for (std::uint32_t n : {1u, 2u, 5u}) {
    auto p = alternating_path(n);
    const auto before = p.m.flip_counts();
    Chain c;
    for (std::uint32_t k = 0; k < n; ++k) {
      c.left.push_back(k);
      c.right.push_back(k);
    }
    const auto size = p.m.size();
    flip(p.g, p.m, c);
    EXPECT_EQ(p.m.size(), size + 1);
    // Length 2n-1: n-1 matched edges removed, n added.
    std::size_t changed = 0;
    for (const auto& [edge, count] : p.m.flip_counts()) {
      const auto it = before.find(edge);
      changed += count - (it == before.end() ? 0 : it->second);
    }
    EXPECT_EQ(changed, 2 * n - 1);
    for (std::uint32_t k = 0; k < n; ++k) EXPECT_EQ(p.m.mate_of_left(k), k);
    p.m.check(p.g);
  }
}

TEST(Flip, StaleChainIsRejected) {
  auto p = alternating_path(2);
  EXPECT_THROW(flip(p.g, p.m, Chain{{1}, {1}}), ContractViolation);
}

TEST(Stage, NothingToDoReportsZeroFlips) {
  auto p = alternating_path(1);
  p.m.link(0, 0);
  const auto report = run_stage(p.g, p.m, 3, identity_rank(1));
  EXPECT_EQ(report.flips, 0u);
  EXPECT_EQ(report.unmatched_left, 0u);
}

TEST(Stage, DegenerateStageOneIsTheIdentity) {
  Degenerate d;
  const auto g = build_match_graph(d.pm, d.pm, d.field, d.field, d.w);
  Matching m(g.left_size(), g.right_size());
  const auto report = run_stage(g, m, 1, identity_rank(d.w.size()));
  EXPECT_EQ(report.unmatched_left, 0u);
  EXPECT_EQ(report.unmatched_right, 0u);
  EXPECT_EQ(report.p_left, 0.0);
  for (std::uint32_t i = 0; i < g.left_size(); ++i) EXPECT_EQ(g.right(m.mate_of_left(i)).vertex, g.left(i).vertex);
}

TEST(Stage, PostconditionAgainstUnprunedSearch) {
  StreamRng rng(31);
  for (int t = 0; t < 40; ++t) {
    const auto inst = oracle::random_instance(rng, 30, 2.2);
    const auto g = graph_of(inst);
    const auto rank = identity_rank(std::max(inst.left, inst.right));
    Matching m(g.left_size(), g.right_size());
    std::size_t last = 0;
    for (int n = 1; n <= 4; ++n) {
      run_stage(g, m, n, rank);
      EXPECT_EQ(oracle::count_short_chains(g, m, 4 * n), 0u) << t << " " << n;
      EXPECT_GE(m.size(), last);
      last = m.size();
    }
  }
}

TEST(Run, ReachesMaximumMatching) {
  StreamRng rng(77);
  for (int t = 0; t < 60; ++t) {
    const auto inst = oracle::random_instance(rng, 10, 2.0);
    const auto g = graph_of(inst);
    const auto result = run(g, identity_rank(10), default_max_stage(g));
    const auto expected = oracle::exhaustive_matching_size(inst);
    EXPECT_EQ(result.matching.size(), expected);
    EXPECT_EQ(max_matching_oracle(g).size(), expected);
    EXPECT_EQ(oracle::boost_matching_size(inst), expected);
    for (std::size_t k = 1; k < result.stages.size(); ++k) {
      EXPECT_LE(result.stages[k].p_left, result.stages[k - 1].p_left);
    }
  }
}

TEST(Run, EmptyAndStar) {
  const auto empty = MatchGraph::from_edges(0, 3, {});
  EXPECT_EQ(run(empty, identity_rank(3), 2).matching.size(), 0u);
  const oracle::Edges star{{0, 0}, {0, 1}, {0, 2}};
  const auto g = MatchGraph::from_edges(1, 3, star);
  EXPECT_EQ(max_matching_oracle(g).size(), 1u);
  EXPECT_EQ(run(g, identity_rank(3), default_max_stage(g)).matching.size(), 1u);
  EXPECT_THROW(run(g, identity_rank(3), 0), ConfigError);
}

TEST(Run, ChainCapIsAResourceError) {
  // Complete bipartite K_{6,6}: 36 length-1 chains at stage 1.
  oracle::Edges edges;
  for (std::uint32_t i = 0; i < 6; ++i) {
    for (std::uint32_t j = 0; j < 6; ++j) edges.emplace_back(i, j);
  }
  const auto g = MatchGraph::from_edges(6, 6, edges);
  Matching m(6, 6);
  EngineOptions tight;
  tight.max_chains = 10;
  EXPECT_THROW(run_stage(g, m, 1, identity_rank(6), tight), ResourceError);
}

TEST(Matching, CheckDetectsNonEdges) {
  const oracle::Edges edges{{0, 0}};
  const auto g = MatchGraph::from_edges(2, 2, edges);
  Matching m(2, 2);
  m.link(1, 1);
  EXPECT_THROW(m.check(g), InvariantViolation);
}
