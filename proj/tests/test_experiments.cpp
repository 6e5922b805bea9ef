#include <gtest/gtest.h>

#include <cmath>

#include "factormatch/errors.hpp"
#include "factormatch/experiments.hpp"
#include "factormatch/pipeline.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace factormatch;

namespace {

RunConfig degenerate_config() {
  return parse_config("[process]\npi = degenerate\npi_prime = degenerate\n");
}

std::vector<VertexId> range(VertexId from, VertexId to, VertexId step) {
  std::vector<VertexId> out;
  for (VertexId v = from; v <= to; v += step) out.push_back(v);
  return out;
}

}  // namespace

TEST(Tail, DegeneratePipelineIsZeroBeyondZero) {
  const auto cfg = degenerate_config();
  const auto w = make_window(cfg);
  const auto t = run_trial(cfg, w, 0);
  ASSERT_GT(t.tail.base, 0u);
  EXPECT_DOUBLE_EQ(t.tail.tail[0], 1.0);
  for (std::size_t r = 1; r < t.tail.tail.size(); ++r) EXPECT_EQ(t.tail.tail[r], 0.0);
  for (double h : t.tail.hole) EXPECT_EQ(h, 0.0);
  const auto curve = matching_distance_tail({t.tail}, cfg.family);
  EXPECT_EQ(curve.estimate[0], 1.0);
  EXPECT_FALSE(curve.slope_defined);
}

TEST(Tail, NonIncreasingAndAboveHoleWhenPiIsTheVertexSet) {
  auto cfg = parse_config("[process]\npi = degenerate\npi_prime = poisson\n");
  const auto w = make_window(cfg);
  for (std::uint64_t trial = 0; trial < 10; ++trial) {
    const auto t = run_trial(cfg, w, trial);
    for (std::size_t r = 0; r < t.tail.tail.size(); ++r) {
      if (r > 0) {
        EXPECT_LE(t.tail.tail[r], t.tail.tail[r - 1]);
      }
      EXPECT_GE(t.tail.tail[r], t.tail.hole[r]);
      if (r + 1 < t.tail.tail.size()) {
        EXPECT_GE(t.tail.tail[r + 1], t.tail.hole[r]);
      }
    }
  }
}

TEST(Tail, AllBasesEmptyIsCensored) {
  TrialTail empty;
  empty.tail.assign(3, 0.0);
  empty.hole.assign(3, 0.0);
  EXPECT_THROW(matching_distance_tail({empty}, RegularTree{3}), CensoringError);
}

TEST(Chebyshev, AllAndNothing) {
  const auto w = build_window(RegularTree{3}, 6, 2);
  const auto all = [](const PointMultiset&, const GraphWindow& win) {
    return std::vector<std::uint8_t>(win.size(), 1);
  };
  const auto none = [](const PointMultiset&, const GraphWindow& win) {
    return std::vector<std::uint8_t>(win.size(), 0);
  };
  const auto full = verify_chebyshev(w, all, 3, 1);
  EXPECT_DOUBLE_EQ(full.density_mean.value, 1.0);
  EXPECT_DOUBLE_EQ(full.lhs_mean.value, 1.0);
  EXPECT_DOUBLE_EQ(full.rhs_mean.value, 1.0);
  EXPECT_EQ(full.violations, 0u);
  const auto empty = verify_chebyshev(w, none, 3, 1);
  EXPECT_EQ(empty.rhs_mean.value, 0.0);
  EXPECT_EQ(empty.violations, 0u);
  EXPECT_THROW(verify_chebyshev(build_window(LadderDiagonal{}, 4, 2), all, 1, 1), ConfigError);
}

TEST(Chebyshev, PoissonOccupancyMatchesAnalytics) {
  const auto w = build_window(RegularTree{3}, 9, 2);
  const auto rep = verify_chebyshev(w, occupied_set(1), 20, 5);
  EXPECT_NEAR(rep.density_mean.value, 1 - std::exp(-1.0), 0.02);
  EXPECT_NEAR(rep.lhs_mean.value, 1 - std::exp(-3.0), 0.02);
  EXPECT_NEAR(rep.rhs_mean.value, 0.659, 0.02);
  EXPECT_EQ(rep.violations, 0u);
}

TEST(BoostedHall, EmptyAndAll) {
  const auto cfg = degenerate_config();
  const auto w = make_window(cfg);
  const auto t = run_trial(cfg, w, 0);
  const auto none = boosted_hall_row(t.graph, {}, 0);
  EXPECT_EQ(none.lhs, 0.0);
  EXPECT_EQ(none.rhs, 0.0);
  EXPECT_TRUE(none.holds);
  std::vector<PointRef> all;
  for (std::uint32_t i = 0; i < t.graph.left_size(); ++i) all.push_back(t.graph.left(i));
  const auto row = boosted_hall_row(t.graph, all, 0);
  EXPECT_DOUBLE_EQ(row.lhs, 1.0);
  EXPECT_TRUE(row.holds);
}

TEST(IndepSet, DegenerateHasNothingUnmatched) {
  const auto cfg = degenerate_config();
  const auto w = make_window(cfg);
  const auto t = run_trial(cfg, w, 0);
  const auto rep = verify_indep_set(t.graph, t.run.snapshots[0], 1);
  EXPECT_EQ(rep.structural_failures, 0u);
  ASSERT_EQ(rep.rows.size(), 1u);
  EXPECT_EQ(rep.rows[0].lhs, 0.0);
}

TEST(IndepSet, PoissonSnapshotsAreStructurallySound) {
  const auto cfg = parse_config("");
  const auto w = make_window(cfg);
  for (std::uint64_t trial = 0; trial < 5; ++trial) {
    const auto t = run_trial(cfg, w, trial);
    for (int n = 1; n <= 3 && n <= static_cast<int>(t.run.snapshots.size()); ++n) {
      EXPECT_EQ(verify_indep_set(t.graph, t.run.snapshots[n - 1], n).structural_failures, 0u);
    }
  }
}

TEST(Discrepancy, SingletonMatchesConvolution) {
  // |U| = 1, r = 1 on the 3-regular tree: the event is Poi(4) < Poi(1).
  const std::uint64_t trials = 40000;
  const auto rep = verify_discrepancy(RegularTree{3}, PoissonProcess{}, PoissonProcess{}, {1}, 1, trials, 3);
  const double p = oracle::poisson_less(4.0, 1.0);
  ASSERT_EQ(rep.buckets.size(), 1u);
  EXPECT_EQ(rep.buckets[0].blown_size, 4u);
  EXPECT_NEAR(rep.buckets[0].frequency, p, 3.0 * std::sqrt(p * (1 - p) / trials));
}

TEST(Discrepancy, RadiusZeroNeverFires) {
  const auto rep = verify_discrepancy(RegularTree{3}, PerturbedProcess::degenerate(),
                                      PerturbedProcess::degenerate(), {1, 2, 3}, 0, 100, 1);
  for (const auto& b : rep.buckets) EXPECT_EQ(b.events, 0u);
}

TEST(Greedy, SingleSet) {
  const auto w = fixtures::path_window(10);
  const auto res = greedy_sparse_subpath(w, {{2, 3, 4}}, 2, 4, 1);
  EXPECT_EQ(res.selected.size(), 1u);
  EXPECT_TRUE(res.all());
}

TEST(Greedy, DropsTheSmallBridge) {
  const auto w = fixtures::path_window(20);
  const std::vector<std::vector<VertexId>> sets{{0, 1, 2, 3}, {5}, {7, 8, 9, 10}};
  const auto res = greedy_sparse_subpath(w, sets, 0, 10, 2);
  EXPECT_EQ(res.path, (std::vector<std::size_t>{0, 1, 2}));
  EXPECT_EQ(res.selected, (std::vector<std::size_t>{0, 2}));
  EXPECT_TRUE(res.all());
}

TEST(Greedy, SparseSetsCanBreakTheSizeForm) {
  // Members of each set sit r apart, so a set spans (|U| - 1) r rather than |U|.
  const int r = 4;
  const auto w = fixtures::path_window(60);
  const std::vector<std::vector<VertexId>> sets{range(0, 16, 4), range(20, 36, 4), range(40, 56, 4)};
  const auto res = greedy_sparse_subpath(w, sets, 0, 56, r);
  EXPECT_EQ(res.selected, (std::vector<std::size_t>{0, 2}));
  EXPECT_FALSE(res.condition2);
  EXPECT_TRUE(res.condition2_diameter);
  // 3 r n + 3 sum |U| = 24 + 30 < 56, so the distance bound breaks along with it.
  EXPECT_EQ(res.bound_value, 54);
  EXPECT_FALSE(res.bound);
}

TEST(Greedy, RandomTreeFamiliesWithAdjacentSteps) {
  // With r = 1 every set is connected, so the size form of every condition applies.
  const auto w = build_window(RegularTree{3}, 9, 5);
  StreamRng rng(12);
  for (int t = 0; t < 100; ++t) {
    const auto family = random_rconnected_family(w, 1, 5, 6, rng);
    const auto u = family.front().front();
    const auto v = family.back().back();
    const auto res = greedy_sparse_subpath(w, family, u, v, 1);
    EXPECT_TRUE(res.all()) << t;
    EXPECT_TRUE(res.condition2_diameter) << t;
  }
}

TEST(Greedy, UncoveredEndpointIsAContractViolation) {
  const auto w = fixtures::path_window(10);
  EXPECT_THROW(greedy_sparse_subpath(w, {{1, 2}}, 5, 1, 1), ContractViolation);
  EXPECT_THROW(greedy_sparse_subpath(w, {{1, 2}, {8}}, 1, 8, 1), ContractViolation);
}

TEST(PnDecay, MonotoneAndFitted) {
  std::vector<StageReport> reports(4);
  const double p[] = {0.4, 0.2, 0.1, 0.05};
  for (int k = 0; k < 4; ++k) reports[k].p_left = p[k];
  const auto d = pn_decay(reports);
  EXPECT_TRUE(d.monotone);
  ASSERT_TRUE(d.fitted);
  EXPECT_NEAR(d.fitted_ratio, 0.5, 1e-12);
  reports[2].p_left = 0.3;
  EXPECT_FALSE(pn_decay(reports).monotone);
}

TEST(PnDecay, DegenerateStageOneIsZero) {
  const auto cfg = degenerate_config();
  const auto w = make_window(cfg);
  const auto t = run_trial(cfg, w, 0);
  EXPECT_EQ(pn_decay(t.run.stages).p[0], 0.0);
}
