#pragma once

// Staged chain-flipping matcher and a Hopcroft-Karp reference.

#include <cstdint>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "factormatch/bipartite.hpp"

namespace factormatch {

inline constexpr std::uint32_t kUnmatched = std::numeric_limits<std::uint32_t>::max();

class Matching {
 public:
  Matching() = default;
  Matching(std::size_t left, std::size_t right)
      : mate_left_(left, kUnmatched), mate_right_(right, kUnmatched) {}

  std::uint32_t mate_of_left(std::uint32_t i) const { return mate_left_[i]; }
  std::uint32_t mate_of_right(std::uint32_t j) const { return mate_right_[j]; }
  std::span<const std::uint32_t> left_mates() const noexcept { return mate_left_; }
  std::span<const std::uint32_t> right_mates() const noexcept { return mate_right_; }
  std::size_t size() const;

  void link(std::uint32_t i, std::uint32_t j);
  void unlink(std::uint32_t i, std::uint32_t j);

  /// Times each (left, right) edge changed state.
  const std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint32_t>& flip_counts() const {
    return flips_;
  }

  /// Throws InvariantViolation unless the pairing is injective and uses edges of g.
  void check(const MatchGraph& g) const;

 private:
  std::vector<std::uint32_t> mate_left_, mate_right_;
  std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint32_t> flips_;
};

/// x_1, y_1, ..., x_n, y_n by position on each side. x_1 and y_n are
/// unmatched; (y_k, x_{k+1}) are matching edges.
struct Chain {
  std::vector<std::uint32_t> left;
  std::vector<std::uint32_t> right;

  std::size_t length() const { return 2 * left.size() - 1; }
  friend bool operator==(const Chain&, const Chain&) = default;
};

/// Point key (vertex rank, side, index) packed into one integer; left
/// points precede right points at the same vertex.
std::uint64_t point_key(const PointRef& p, std::span<const std::uint32_t> vertex_rank);

/// Keys along the canonical reading (from the endpoint with the smaller key).
/// Chains compare by length first, then lexicographically by key.
struct ChainKey {
  std::vector<std::uint64_t> keys;
  friend bool operator==(const ChainKey&, const ChainKey&) = default;
  friend bool operator<(const ChainKey& a, const ChainKey& b);
};

ChainKey chain_key(const MatchGraph& g, const Chain& c, std::span<const std::uint32_t> vertex_rank);

struct ChainSearchOptions {
  std::size_t max_chains = 1'000'000;
  int stage = 0;  // named in resource errors
};

/// Every chain of length < max_len (each reported once, from its left end).
std::vector<Chain> find_chains(const MatchGraph& g, const Matching& m, std::size_t max_len,
                               const ChainSearchOptions& options = {});

/// Chains c with c <= c' for every c' sharing a point with c.
std::vector<Chain> select_minimal(const MatchGraph& g, const std::vector<Chain>& chains,
                                  std::span<const std::uint32_t> vertex_rank);

/// Augments along c; ContractViolation if c is not a chain for m.
void flip(const MatchGraph& g, Matching& m, const Chain& c);

struct StageReport {
  int stage = 0;
  std::size_t sweeps = 0;
  std::size_t flips = 0;
  std::size_t unmatched_left = 0;   // all points
  std::size_t unmatched_right = 0;
  double p_left = 0.0;              // unmatched counted points / density base
  double p_right = 0.0;
  double wall_seconds = 0.0;
};

struct EngineOptions {
  std::size_t max_chains = 1'000'000;
  std::size_t max_sweeps = 100'000;
};

StageReport run_stage(const MatchGraph& g, Matching& m, int n,
                      std::span<const std::uint32_t> vertex_rank, const EngineOptions& options = {});

struct RunResult {
  Matching matching;
  std::vector<StageReport> stages;
  std::vector<std::vector<std::uint32_t>> snapshots;  // left mates after each stage
};

/// ceil(#points / 4) + 1.
int default_max_stage(const MatchGraph& g);

RunResult run(const MatchGraph& g, std::span<const std::uint32_t> vertex_rank, int max_stage,
              const EngineOptions& options = {});

/// Maximum-cardinality matching (Hopcroft-Karp).
Matching max_matching_oracle(const MatchGraph& g);

/// Lines "Lvertex Lindex Rvertex Rindex distance".
std::string dump(const MatchGraph& g, const Matching& m);
/// CSV "stage,sweeps,flips,p_n_left,p_n_right" (no header comment).
std::string stages_csv(std::span<const StageReport> reports);

}  // namespace factormatch
