#include "factormatch/order.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

#include "factormatch/errors.hpp"

namespace factormatch {

SphereSignature sphere_signature(const PointMultiset& pi, const GraphWindow& w, VertexId v,
                                 int r_max) {
  if (r_max < 0) throw ConfigError("signature radius must be >= 0");
  SphereSignature sig;
  sig.vertex = v;
  sig.r_max = r_max;
  sig.counts.assign(static_cast<std::size_t>(r_max) + 1, 0);
  const auto dist = bfs_distances(w, v, r_max);
  // Sphere r is complete when every vertex at distance < r has full degree.
  int first_incomplete = r_max + 1;
  for (VertexId u = 0; u < w.size(); ++u) {
    const int d = dist[u];
    if (d == kUnreachable) continue;
    sig.counts[d] += pi.count(u);
    if (d < r_max && !w.has_full_degree(u)) first_incomplete = std::min(first_incomplete, d + 1);
  }
  sig.counts.resize(static_cast<std::size_t>(first_incomplete));
  return sig;
}

bool operator<(const Dyadic& a, const Dyadic& b) {
  const auto e = std::max(a.exponent, b.exponent);
  return (a.numerator << (e - a.exponent)) < (b.numerator << (e - b.exponent));
}

std::vector<std::uint8_t> psi_digits(const std::vector<std::uint64_t>& seq) {
  std::vector<std::uint8_t> digits;
  for (auto a : seq) {
    digits.insert(digits.end(), a, 1);
    digits.push_back(0);
  }
  return digits;
}

Dyadic psi(const std::vector<std::uint64_t>& seq) {
  const auto digits = psi_digits(seq);
  Dyadic out;
  for (auto d : digits) out.numerator = (out.numerator << 1) | d;
  out.exponent = digits.size();
  if (out.numerator == 0) {
    out.exponent = 0;
    return out;
  }
  const auto zeros = boost::multiprecision::lsb(out.numerator);
  out.numerator >>= zeros;
  out.exponent -= zeros;
  return out;
}

std::vector<std::uint64_t> psi_decode(const Dyadic& value, std::size_t length) {
  std::vector<std::uint64_t> seq;
  std::uint64_t run = 0;
  for (std::uint64_t k = 1; seq.size() < length; ++k) {
    // Digits past the exponent are zero.
    const bool one = k <= value.exponent && bit_test(value.numerator, value.exponent - k);
    if (one) {
      ++run;
    } else {
      seq.push_back(run);
      run = 0;
    }
  }
  return seq;
}

bool signature_less(const std::vector<std::uint64_t>& a, const std::vector<std::uint64_t>& b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

std::size_t OrderFactor::fallback_count() const {
  return static_cast<std::size_t>(std::count(fallback.begin(), fallback.end(), 1));
}

OrderFactor build_order(const PointMultiset& pi, const GraphWindow& w, int r_max) {
  if (pi.vertex_count() != w.size()) throw ContractViolation("point set does not fit window");
  OrderFactor order;
  order.r_max = r_max;
  order.signatures.reserve(w.size());
  for (VertexId v = 0; v < w.size(); ++v) order.signatures.push_back(sphere_signature(pi, w, v, r_max));

  std::vector<VertexId> by_key(w.size());
  std::iota(by_key.begin(), by_key.end(), VertexId{0});
  std::sort(by_key.begin(), by_key.end(), [&](VertexId a, VertexId b) {
    const auto& sa = order.signatures[a].counts;
    const auto& sb = order.signatures[b].counts;
    if (sa != sb) return signature_less(sa, sb);
    return w.canonical_id(a) < w.canonical_id(b);
  });
  order.rank.assign(w.size(), 0);
  order.fallback.assign(w.size(), 0);
  for (std::size_t i = 0; i < by_key.size(); ++i) order.rank[by_key[i]] = static_cast<std::uint32_t>(i);

  for (std::size_t i = 0; i < by_key.size();) {
    std::size_t j = i + 1;
    while (j < by_key.size() &&
           order.signatures[by_key[j]].counts == order.signatures[by_key[i]].counts) {
      ++j;
    }
    if (j - i > 1) {
      std::vector<VertexId> group(by_key.begin() + static_cast<std::ptrdiff_t>(i),
                                  by_key.begin() + static_cast<std::ptrdiff_t>(j));
      std::vector<VertexId> core_group;
      for (auto v : group) {
        order.fallback[v] = 1;
        if (w.in_core(v)) core_group.push_back(v);
      }
      if (core_group.size() > 1) order.core_collisions.push_back(std::move(core_group));
      order.collisions.push_back(std::move(group));
    }
    i = j;
  }
  return order;
}

std::vector<std::pair<VertexId, VertexId>> tied_vertical_pairs(const OrderFactor& order,
                                                               const GraphWindow& w) {
  if (!std::holds_alternative<LadderDiagonal>(w.family())) {
    throw ConfigError("vertical pairs are only defined on LadderDiagonal windows");
  }
  std::vector<std::pair<VertexId, VertexId>> out;
  for (VertexId v = 0; v < w.size(); ++v) {
    if (w.ladder_coords(v).second != 0) continue;
    const auto u = w.ladder_partner(v);
    if (u == kOutside) continue;
    const auto& a = order.signatures[v];
    const auto& b = order.signatures[u];
    if (a.complete() && b.complete() && a.counts == b.counts) out.emplace_back(v, u);
  }
  return out;
}

std::string dump(const OrderFactor& order) {
  std::ostringstream out;
  for (VertexId v = 0; v < order.signatures.size(); ++v) {
    const auto& counts = order.signatures[v].counts;
    out << v << " ";
    for (std::size_t i = 0; i < counts.size(); ++i) out << (i ? "," : "") << counts[i];
    if (counts.empty()) out << "-";
    const auto value = psi(counts);
    out << " " << value.numerator << " " << value.denominator() << " "
        << static_cast<int>(order.fallback[v]) << "\n";
  }
  return out.str();
}

}  // namespace factormatch
