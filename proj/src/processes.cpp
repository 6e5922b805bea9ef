#include "factormatch/processes.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "factormatch/errors.hpp"
#include "factormatch/rng.hpp"

namespace factormatch {

namespace {

constexpr std::uint64_t kPoissonTag = 0x506f6973736f6e31ULL;
constexpr std::uint64_t kPerturbTag = 0x5065727475726231ULL;

// Uniform landing vertex on the infinite sphere S_R(origin) of a regular
// tree: a non-backtracking walk with uniform generator choices. Returns
// kOutside when the walk leaves the window.
VertexId tree_landing(const GraphWindow& w, VertexId origin, int radius, StreamRng& rng) {
  VertexId prev = kOutside;
  VertexId cur = origin;
  for (int step = 0; step < radius; ++step) {
    const auto slots = w.slots(cur);
    const int choices = static_cast<int>(slots.size()) - (prev == kOutside ? 0 : 1);
    std::uniform_int_distribution<int> pick(0, choices - 1);
    int k = pick(rng);
    VertexId next = kOutside;
    for (auto s : slots) {
      if (prev != kOutside && s == prev) continue;
      if (k-- == 0) {
        next = s;
        break;
      }
    }
    if (next == kOutside) return kOutside;
    prev = cur;
    cur = next;
  }
  return cur;
}

}  // namespace

std::string process_name(const ProcessSpec& spec) {
  if (std::holds_alternative<PoissonProcess>(spec)) return "poisson";
  const auto& law = std::get<PerturbedProcess>(spec).distance_law;
  if (law.size() == 1) return "degenerate";
  std::ostringstream out;
  out << "perturbed(";
  for (std::size_t i = 0; i < law.size(); ++i) out << (i ? "," : "") << law[i];
  out << ")";
  return out.str();
}

void validate(const ProcessSpec& spec) {
  if (const auto* p = std::get_if<PerturbedProcess>(&spec)) {
    if (p->distance_law.empty()) throw ConfigError("perturbation law is empty");
    double sum = 0.0;
    for (double x : p->distance_law) {
      if (!(x >= 0.0) || !std::isfinite(x)) {
        throw ConfigError("perturbation law has a negative or non-finite entry");
      }
      sum += x;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
      throw ConfigError("perturbation law sums to " + std::to_string(sum) + ", not 1");
    }
  }
}

int max_displacement(const ProcessSpec& spec) {
  if (const auto* p = std::get_if<PerturbedProcess>(&spec)) return p->max_distance();
  return 0;
}

PointMultiset::PointMultiset(std::vector<std::uint32_t> counts) : counts_(std::move(counts)) {
  index_points();
}

PointMultiset::PointMultiset(std::size_t vertex_count,
                             std::span<const std::pair<VertexId, VertexId>> moves,
                             std::uint64_t discarded)
    : counts_(vertex_count, 0), discarded_(discarded) {
  std::vector<std::pair<VertexId, VertexId>> by_landing;
  by_landing.reserve(moves.size());
  for (auto [origin, landing] : moves) {
    if (landing >= vertex_count || origin >= vertex_count) {
      throw ContractViolation("perturbation record outside the window");
    }
    by_landing.emplace_back(landing, origin);
    ++counts_[landing];
  }
  std::sort(by_landing.begin(), by_landing.end());
  index_points();
  origins_.reserve(by_landing.size());
  for (auto [landing, origin] : by_landing) origins_.push_back(origin);
}

void PointMultiset::index_points() {
  offset_.assign(counts_.size() + 1, 0);
  points_.clear();
  for (VertexId v = 0; v < counts_.size(); ++v) {
    offset_[v] = static_cast<std::uint32_t>(points_.size());
    for (std::uint32_t i = 1; i <= counts_[v]; ++i) points_.push_back({v, i});
  }
  offset_[counts_.size()] = static_cast<std::uint32_t>(points_.size());
}

PointMultiset sample(const ProcessSpec& spec, const GraphWindow& window, std::uint64_t seed) {
  validate(spec);
  if (std::holds_alternative<PoissonProcess>(spec)) {
    std::vector<std::uint32_t> counts(window.size());
    for (VertexId v = 0; v < window.size(); ++v) {
      StreamRng rng(derive_seed({seed, kPoissonTag, window.canonical_id(v)}));
      std::poisson_distribution<std::uint32_t> poisson(1.0);
      counts[v] = poisson(rng);
    }
    return PointMultiset(std::move(counts));
  }

  const auto& law = std::get<PerturbedProcess>(spec);
  const int dmax = law.max_distance();
  if (std::holds_alternative<LadderDiagonal>(window.family())) {
    throw ConfigError("uniform-on-sphere perturbation needs a distance-transitive family");
  }
  if (!std::holds_alternative<ExplicitFinite>(window.family()) && dmax > window.core_margin()) {
    throw ConfigError("perturbation support " + std::to_string(dmax) +
                      " exceeds core margin " + std::to_string(window.core_margin()));
  }
  std::vector<std::pair<VertexId, VertexId>> moves;
  moves.reserve(window.size());
  std::uint64_t discarded = 0;
  for (VertexId v = 0; v < window.size(); ++v) {
    StreamRng rng(derive_seed({seed, kPerturbTag, window.canonical_id(v)}));
    int radius = 0;
    if (dmax > 0) {
      std::discrete_distribution<int> pick_radius(law.distance_law.begin(),
                                                  law.distance_law.end());
      radius = pick_radius(rng);
    }
    VertexId landing = v;
    if (radius > 0) {
      if (window.is_tree()) {
        landing = tree_landing(window, v, radius, rng);
      } else {
        const auto s = sphere(window, v, radius).vertices;
        if (s.empty()) {
          landing = kOutside;
        } else {
          std::uniform_int_distribution<std::size_t> pick(0, s.size() - 1);
          landing = s[pick(rng)];
        }
      }
    }
    if (landing == kOutside) {
      ++discarded;
    } else {
      moves.emplace_back(v, landing);
    }
  }
  return PointMultiset(window.size(), moves, discarded);
}

std::uint64_t count_in(const PointMultiset& pm, std::span<const VertexId> set) {
  std::uint64_t total = 0;
  for (auto v : set) total += pm.count(v);
  return total;
}

HoleEstimate hole_probability(const ProcessSpec& spec, const GraphWindow& window, int r,
                              std::uint64_t trials, std::uint64_t seed) {
  validate(spec);
  if (r < 0) throw ConfigError("hole radius must be non-negative");
  const bool finite = std::holds_alternative<ExplicitFinite>(window.family());
  if (!finite && r > window.core_margin()) {
    throw CensoringError("hole radius " + std::to_string(r) + " exceeds core margin " +
                         std::to_string(window.core_margin()));
  }
  if (trials == 0) throw ConfigError("hole_probability needs at least one trial");
  const int reach = max_displacement(spec);
  // The ball around the root only sees origins within r + reach; indices are
  // prefix-stable, so a smaller window reproduces the same realization there.
  const GraphWindow local =
      finite ? window : build_window(window.family(), r + reach, reach);
  const auto probe = ball(local, local.root(), r);
  if (!probe.complete) throw CensoringError("hole ball is not complete");

  HoleEstimate est;
  est.trials = trials;
  for (std::uint64_t t = 0; t < trials; ++t) {
    const auto pm = sample(spec, local, derive_seed({seed, t}));
    if (count_in(pm, probe.vertices) == 0) ++est.holes;
  }
  const double n = static_cast<double>(trials);
  est.probability = static_cast<double>(est.holes) / n;
  est.std_error = std::sqrt(est.probability * (1.0 - est.probability) / n);
  if (std::holds_alternative<PoissonProcess>(spec)) {
    est.analytic = std::exp(-static_cast<double>(probe.vertices.size()));
  }
  return est;
}

std::string dump(const PointMultiset& pm) {
  std::ostringstream out;
  out << "counts " << pm.vertex_count() << "\n";
  for (VertexId v = 0; v < pm.vertex_count(); ++v) out << v << " " << pm.count(v) << "\n";
  if (pm.has_origins()) {
    out << "moves " << pm.total() << "\n";
    for (std::size_t k = 0; k < pm.total(); ++k) {
      out << pm.origin(k) << " " << pm.points()[k].vertex << "\n";
    }
    out << "discarded " << pm.discarded() << "\n";
  }
  return out.str();
}

PointMultiset load_point_multiset(const std::string& text) {
  std::istringstream in(text);
  std::string tag;
  std::size_t n = 0;
  if (!(in >> tag >> n) || tag != "counts") throw ConfigError("point dump: missing counts header");
  std::vector<std::uint32_t> counts(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t v = 0;
    std::uint32_t c = 0;
    if (!(in >> v >> c) || v >= n) throw ConfigError("point dump: bad count line");
    counts[v] = c;
  }
  if (!(in >> tag)) return PointMultiset(std::move(counts));
  std::size_t m = 0;
  if (tag != "moves" || !(in >> m)) throw ConfigError("point dump: expected moves section");
  std::vector<std::pair<VertexId, VertexId>> moves(m);
  for (auto& [o, l] : moves) {
    if (!(in >> o >> l)) throw ConfigError("point dump: bad move line");
  }
  std::uint64_t discarded = 0;
  if (!(in >> tag >> discarded) || tag != "discarded") {
    throw ConfigError("point dump: missing discarded count");
  }
  PointMultiset pm(n, moves, discarded);
  if (!std::equal(counts.begin(), counts.end(), pm.counts().begin(), pm.counts().end())) {
    throw ConfigError("point dump: counts disagree with moves");
  }
  return pm;
}

}  // namespace factormatch
