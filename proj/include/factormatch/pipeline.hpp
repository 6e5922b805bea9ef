#pragma once

// One trial of the full construction, and a deterministic trial pool.

#include <atomic>
#include <cstdint>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

#include "factormatch/bipartite.hpp"
#include "factormatch/config.hpp"
#include "factormatch/experiments.hpp"
#include "factormatch/matching.hpp"
#include "factormatch/order.hpp"
#include "factormatch/radii.hpp"

namespace factormatch {

enum class Stage { sample, radii, match };

struct TrialOutput {
  std::uint64_t trial = 0;
  PointMultiset pi, pi_prime;
  RadiusField r, r_prime;
  OrderFactor order;
  MatchGraph graph;
  RunResult run;
  TrialTail tail;
};

std::uint64_t pi_seed(std::uint64_t seed, std::uint64_t trial);
std::uint64_t pi_prime_seed(std::uint64_t seed, std::uint64_t trial);

/// depth < 0 uses the configured depth.
GraphWindow make_window(const RunConfig& cfg, int depth = -1);

/// Runs the pipeline up to `stage`; later fields stay empty.
TrialOutput run_trial(const RunConfig& cfg, const GraphWindow& w, std::uint64_t trial,
                      Stage stage = Stage::match);

/// fn(i) for i < n on `workers` threads; results and the first failure (by
/// index) do not depend on scheduling.
template <class T>
std::vector<T> parallel_map(std::size_t n, unsigned workers, const std::function<T(std::size_t)>& fn) {
  std::vector<T> out(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto work = [&]() {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        out[i] = fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const unsigned threads = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(n)));
  if (threads <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

}  // namespace factormatch
