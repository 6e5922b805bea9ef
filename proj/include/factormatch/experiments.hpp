#pragma once

// Statistical harness: distance tails, lemma checks, p_n decay, greedy sub-paths.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "factormatch/bipartite.hpp"
#include "factormatch/graphs.hpp"
#include "factormatch/matching.hpp"
#include "factormatch/processes.hpp"
#include "factormatch/radii.hpp"
#include "factormatch/rng.hpp"

namespace factormatch {

/// One realization: per-radius spatial averages over the base vertices
/// (core vertices with an uncensored R_v).
struct TrialTail {
  std::vector<double> tail;  // tail[r]: mean #{x at v : dist(M(x), x) >= r}; unmatched counts as infinite
  std::vector<double> hole;  // hole[r]: mean 1{Pi' has no point in B_r(v)}
  std::size_t base = 0;
};

TrialTail trial_tail(const MatchGraph& g, const Matching& m, const GraphWindow& w,
                     const RadiusField& r_field, const PointMultiset& pi_prime, int r_max);

struct TailCurve {
  std::vector<int> radii;
  std::vector<std::uint64_t> ball_sizes;
  std::vector<double> estimate;
  std::vector<double> std_error;
  std::vector<double> hole;
  double slope = 0.0;        // least squares of log(estimate) on b_r, r >= 1, estimate > 0
  bool slope_defined = false;
  std::size_t trials = 0;
  std::size_t base_vertices = 0;  // summed over trials

  std::string csv() const;  // r,b_r,estimate,stderr,hole
};

/// Pools per-trial curves (weights = base sizes); CensoringError if every base is empty.
TailCurve matching_distance_tail(const std::vector<TrialTail>& trials, const GraphFamily& family);

struct LemmaRow {
  std::uint64_t trial = 0;
  double density = 0.0;  // p(A), or the quantity the row is about
  double lhs = 0.0;
  double rhs = 0.0;
  bool holds = true;
};

struct LemmaReport {
  std::string id;
  bool exact = false;  // exact structural assertion rather than a Monte Carlo comparison
  std::vector<LemmaRow> rows;
  std::size_t violations = 0;
  std::size_t structural_failures = 0;
  DensityEstimate density_mean, lhs_mean, rhs_mean;

  std::string csv() const;  // trial,density,lhs,rhs,holds
};

LemmaReport make_report(std::string id, bool exact, std::vector<LemmaRow> rows,
                        std::size_t core_size);

using SetGenerator = std::function<std::vector<std::uint8_t>(const PointMultiset&, const GraphWindow&)>;

/// A = {v : l_v >= threshold}.
SetGenerator occupied_set(std::uint32_t threshold = 1);

/// p' = density of N(A) (graph neighborhood) against p / (rho^2 (1 - p) + p),
/// over Poisson samples. Densities use core vertices whose neighbors all lie
/// in the window. Refuses families without a known rho < 1.
LemmaReport verify_chebyshev(const GraphWindow& w, const SetGenerator& gen, std::uint64_t trials,
                             std::uint64_t seed);

/// p(N_G(A)) against min{2 p(A), 4/5} for a one-sided point set A.
LemmaRow boosted_hall_row(const MatchGraph& g, std::span<const PointRef> a, std::uint64_t trial);

/// Points of one side sitting at vertices with at least `threshold` points of that side.
std::vector<PointRef> crowded_points(const MatchGraph& g, PointSide side, std::uint32_t threshold);

/// Replays A_0 = unmatched points, B_k = N(A_k), A_{k+1} = mates of B_k from the
/// left mates after stage n. Rows k = 0..n-1 report min{p(A_k cap Pi), p(A_k cap Pi')}
/// against 1/3; structural failures count A_k that are not independent or B_k
/// with an unmatched point.
LemmaReport verify_indep_set(const MatchGraph& g, std::span<const std::uint32_t> left_mates, int n);

struct DiscrepancyBucket {
  std::size_t u_size = 0;
  std::size_t blown_size = 0;  // |U^{+r}|
  std::uint64_t trials = 0;
  std::uint64_t events = 0;
  double frequency = 0.0;
  double std_error = 0.0;
};

struct DiscrepancyReport {
  int r = 0;
  std::vector<DiscrepancyBucket> buckets;  // by |U|
  double slope = 0.0;                      // log frequency on |U^{+r}|
  bool slope_defined = false;
  std::string csv() const;                 // u_size,blown_size,trials,events,frequency,stderr
};

/// Frequency of |Pi' cap U^{+r}| < r |Pi cap U| for random connected U of each
/// size in `sizes`, grown from the root of the family graph.
DiscrepancyReport verify_discrepancy(const GraphFamily& family, const ProcessSpec& pi,
                                     const ProcessSpec& pi_prime, const std::vector<std::size_t>& sizes,
                                     int r, std::uint64_t trials, std::uint64_t seed);

/// Random connected set of `size` vertices containing `start`, inside the core.
std::vector<VertexId> random_connected_set(const GraphWindow& w, VertexId start, std::size_t size,
                                           StreamRng& rng);

struct GreedyResult {
  std::vector<std::size_t> path;      // shortest path i_1..i_m in the auxiliary graph
  std::vector<std::size_t> selected;  // j_1..j_n in path order
  bool condition1 = true;
  bool condition2 = true;
  bool condition3 = true;
  bool bound = true;                  // dist(u,v) <= 3rn + 3 sum |U_j|
  bool condition2_diameter = true;    // (2) with |U| replaced by diam(U) + 1
  int dist_uv = 0;
  long long bound_value = 0;

  bool all() const { return condition1 && condition2 && condition3 && bound; }
};

/// Greedy maximal sparse sub-path of a shortest path between sets containing u
/// and v in the graph {i ~ i' iff dist(U_i, U_i') <= r}. ContractViolation when
/// u or v is not covered or the auxiliary graph does not connect them.
GreedyResult greedy_sparse_subpath(const GraphWindow& w,
                                   const std::vector<std::vector<VertexId>>& sets, VertexId u,
                                   VertexId v, int r);

/// A family of r-connected sets whose union is r-connected, inside the core.
std::vector<std::vector<VertexId>> random_rconnected_family(const GraphWindow& w, int r,
                                                            std::size_t count, std::size_t max_size,
                                                            StreamRng& rng);

struct PnDecay {
  std::vector<double> p;
  std::vector<double> ratios;  // p_{n+1} / p_n where p_n > 0
  double fitted_ratio = 0.0;   // exp(slope of log p_n on n), positive p_n only
  bool fitted = false;
  bool monotone = true;
  std::string csv() const;     // stage,p_n,ratio,two_pow_minus_n
};

PnDecay pn_decay(std::span<const StageReport> reports);

}  // namespace factormatch
