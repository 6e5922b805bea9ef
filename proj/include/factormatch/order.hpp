#pragma once

// Total-order factor from sphere-count signatures.

#include <cstdint>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "factormatch/graphs.hpp"
#include "factormatch/processes.hpp"

namespace factormatch {

using BigInt = boost::multiprecision::cpp_int;

/// counts[r] = |Pi cap S_r(v)| for every r <= r_max whose sphere is complete;
/// radii beyond the first incomplete sphere are absent.
struct SphereSignature {
  VertexId vertex = 0;
  int r_max = 0;
  std::vector<std::uint64_t> counts;

  bool complete() const { return counts.size() == static_cast<std::size_t>(r_max) + 1; }
};

SphereSignature sphere_signature(const PointMultiset& pi, const GraphWindow& w, VertexId v,
                                 int r_max);

/// Exact dyadic value num / 2^exponent in lowest terms (num odd unless zero).
struct Dyadic {
  BigInt numerator = 0;
  std::uint64_t exponent = 0;

  BigInt denominator() const { return BigInt(1) << exponent; }
  friend bool operator==(const Dyadic&, const Dyadic&) = default;
  friend bool operator<(const Dyadic& a, const Dyadic& b);
};

/// Binary digits: a_1 ones, a zero, a_2 ones, a zero, ...
std::vector<std::uint8_t> psi_digits(const std::vector<std::uint64_t>& seq);
Dyadic psi(const std::vector<std::uint64_t>& seq);
/// Inverse of psi on sequences of the given length.
std::vector<std::uint64_t> psi_decode(const Dyadic& value, std::size_t length);

/// Lexicographic; a proper prefix sorts first.
bool signature_less(const std::vector<std::uint64_t>& a, const std::vector<std::uint64_t>& b);

struct OrderFactor {
  int r_max = 0;
  std::vector<SphereSignature> signatures;
  std::vector<std::uint32_t> rank;         // position of each vertex in the total order
  std::vector<std::uint8_t> fallback;      // signature shared with another vertex
  std::vector<std::vector<VertexId>> collisions;       // groups of identical signatures
  std::vector<std::vector<VertexId>> core_collisions;  // same, restricted to the core

  bool less(VertexId a, VertexId b) const { return rank[a] < rank[b]; }
  std::size_t fallback_count() const;
};

/// Orders vertices by signature, ties broken by canonical id.
OrderFactor build_order(const PointMultiset& pi, const GraphWindow& w, int r_max);

/// Ladder windows: vertical pairs (x,0),(x,1) whose signatures agree at every radius.
std::vector<std::pair<VertexId, VertexId>> tied_vertical_pairs(const OrderFactor& order,
                                                               const GraphWindow& w);

/// Lines "vertex_id signature_csv psi_numerator psi_denominator fallback_flag".
std::string dump(const OrderFactor& order);

}  // namespace factormatch
