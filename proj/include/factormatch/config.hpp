#pragma once

// Run configuration: INI sections mirroring the modules, plus overrides.

#include <cstdint>
#include <string>
#include <vector>

#include "factormatch/graphs.hpp"
#include "factormatch/processes.hpp"
#include "factormatch/radii.hpp"

namespace factormatch {

struct RunConfig {
  // [graph]
  GraphFamily family = RegularTree{3};
  std::string family_text = "tree";
  std::string adjacency_file;
  int depth = 8;
  int core_margin = 6;
  // [process]
  ProcessSpec pi = PoissonProcess{};
  ProcessSpec pi_prime = PoissonProcess{};
  // [radii]
  int r0 = 4;
  ConstraintMode mode = ConstraintMode::support;
  RadiusCaps caps{12, 6, 2'000'000};
  // [order]
  int order_r_max = 2;
  bool order_from_pi_prime = false;
  // [matcher]
  int max_stage = 0;  // 0: ceil(#points / 4) + 1
  std::size_t max_chains = 1'000'000;
  std::size_t max_sweeps = 100'000;
  // [experiment]
  std::uint64_t trials = 4;
  int tail_r_max = 6;
  std::uint64_t chebyshev_trials = 50;
  int chebyshev_depth = 10;
  std::uint64_t discrepancy_trials = 2000;
  std::uint64_t greedy_instances = 100;
  std::vector<int> scan_depths{6, 8, 10};
  // [run]
  std::uint64_t seed = 1;
  unsigned workers = 1;
  // [output]
  std::string out_dir = "out";

  /// Canonical "section.key=value" lines; omits settings that cannot change outputs.
  std::string canonical() const;
  /// FNV-1a of canonical(), as 16 hex digits.
  std::string hash() const;
};

/// Parses INI text, then applies "section.key=value" overrides. Unknown keys
/// and malformed values raise ConfigError naming the field.
RunConfig parse_config(const std::string& ini_text, const std::vector<std::string>& overrides = {});
RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides = {});

/// Throws ConfigError naming the first offending field.
void validate(const RunConfig& cfg);

std::uint64_t fnv1a(const std::string& text);

}  // namespace factormatch
