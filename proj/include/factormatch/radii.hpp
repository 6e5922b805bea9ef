#pragma once

// The bad set and the matching-reach radius fields R_v, R'_v.
//
// R_v = r0 when no bad vertex lies within r0/2 of v and l_v <= r0.
// Otherwise R_v is the least r > r0 such that every 4r-connected U
// containing v satisfies |Pi' cap U^{+r}| >= r |Pi cap U|.
//
// On a finite window the quantifier runs over sets U of "r-interior"
// vertices (those whose r-ball is complete), so U^{+r} is always exact.

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "factormatch/graphs.hpp"
#include "factormatch/processes.hpp"

namespace factormatch {

enum class BadFlag : std::uint8_t { good, bad, censored };

struct BadSet {
  int r0 = 4;
  std::int64_t threshold_num = 9;  // bad iff count <= (num/den) * b_{r0/2}
  std::int64_t threshold_den = 10;
  std::vector<BadFlag> flags;

  bool is_bad(VertexId v) const { return flags[v] == BadFlag::bad; }
  std::size_t count(BadFlag f) const;
};

/// `supply` is the process whose shortage defines the set (Pi' for R_v).
BadSet compute_bad_set(const PointMultiset& supply, const GraphWindow& w, int r0,
                       std::int64_t threshold_num = 9, std::int64_t threshold_den = 10);

enum class ConstraintMode { exact, support };

std::string mode_name(ConstraintMode mode);

struct RadiusCaps {
  std::size_t s_max = 12;            // largest enumerated set
  int r_max = 8;                     // largest radius searched
  std::uint64_t max_sets = 2'000'000;  // enumeration budget per constraint check
};

struct ConnectedSetQuery {
  VertexId center = 0;
  int gap = 1;                       // g: consecutive members at distance <= g
  std::size_t s_max = 12;
  int radius_cap = kUnreachable;     // members stay within this distance of center
};

struct EnumerationResult {
  bool truncated = false;
  bool stopped = false;
  std::uint64_t emitted = 0;
};

/// exact: g-connected subsets of admissible window vertices containing the
/// center. support: the same over supp(Pi) plus the center. `admissible`
/// may be empty (every window vertex admissible).
EnumerationResult enumerate_rconnected(
    const PointMultiset& pi, const GraphWindow& w, const ConnectedSetQuery& q,
    ConstraintMode mode, const std::function<bool(const std::vector<VertexId>&)>& callback,
    const std::function<bool(VertexId)>& admissible = {});

enum class ConstraintStatus { holds, violated, truncated, censored };

std::string status_name(ConstraintStatus s);

struct ConstraintResult {
  ConstraintStatus status = ConstraintStatus::holds;
  std::vector<VertexId> witness;  // violating U, when status == violated
  std::int64_t supply = 0;        // |Pi' cap U^{+r}| for the witness
  std::int64_t demand = 0;        // r |Pi cap U| for the witness
  bool used_fallback = false;     // support mode had to enumerate
};

/// Checks the 4r-connected-set constraint at (v, r). Reusable caches make
/// repeated queries over one (Pi, Pi', window) cheap.
class ConstraintEvaluator {
 public:
  ConstraintEvaluator(const PointMultiset& demand, const PointMultiset& supply,
                      const GraphWindow& w, RadiusCaps caps);
  ~ConstraintEvaluator();
  ConstraintEvaluator(const ConstraintEvaluator&) = delete;
  ConstraintEvaluator& operator=(const ConstraintEvaluator&) = delete;

  ConstraintResult evaluate(VertexId v, int r, ConstraintMode mode);

  /// B_r(u) is complete (u may belong to an enumerated U).
  bool interior(VertexId u, int r);
  /// |Pi' cap U^{+r}| and r |Pi cap U| for an arbitrary set of interior vertices.
  std::pair<std::int64_t, std::int64_t> sides(std::span<const VertexId> set, int r);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

ConstraintResult constraint_holds(const PointMultiset& pi, const PointMultiset& pi_prime,
                                  const GraphWindow& w, VertexId v, int r, ConstraintMode mode,
                                  const RadiusCaps& caps);

enum class Side : std::uint8_t { pi, pi_prime };

enum class CensorReason : std::uint8_t {
  none,
  clause1_unknown,  // bad flags near v are censored
  not_interior,     // B_r(v) leaves the window before the search resolved
  truncated,        // an enumeration cap was hit
  r_max,            // unresolved at the radius cap
};

std::string reason_name(CensorReason r);

struct RadiusField {
  Side side = Side::pi;
  ConstraintMode mode = ConstraintMode::support;
  int r0 = 4;
  RadiusCaps caps;
  BadSet bad;
  std::vector<int> radius;            // meaningful when reason[v] == none
  std::vector<CensorReason> reason;
  std::vector<std::uint8_t> first_clause;  // R_v = r0 via the first clause
  std::uint64_t fallback_checks = 0;

  bool censored(VertexId v) const { return reason[v] != CensorReason::none; }
  std::size_t censored_count() const;
};

/// Pass (Pi, Pi') for R and (Pi', Pi) with Side::pi_prime for R'.
RadiusField compute_radius_field(const PointMultiset& own, const PointMultiset& other,
                                 const GraphWindow& w, int r0, ConstraintMode mode,
                                 const RadiusCaps& caps, Side side = Side::pi);

struct RadiusComponent {
  std::vector<VertexId> vertices;
  int diameter = 0;
  std::size_t censored = 0;
};

struct ComponentOptions {
  bool include_censored = true;  // censored vertices count as above r
  bool core_only = false;
};

/// 4r-connected components of {v : R_v > r}, largest first (ties by smallest vertex).
std::vector<RadiusComponent> components_above(const RadiusField& field, const GraphWindow& w,
                                              int r, const ComponentOptions& options = {});

/// Lines "vertex_id R_v mode flags"; censored radii print as '-'.
std::string dump(const RadiusField& field);

}  // namespace factormatch
