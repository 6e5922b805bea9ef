#pragma once

#include <sstream>

#include "factormatch/graphs.hpp"
#include "factormatch/processes.hpp"

namespace fixtures {

/// Path 0 - 1 - ... - (n-1) as an explicit graph.
inline factormatch::GraphWindow path_window(int n) {
  std::ostringstream text;
  for (int i = 0; i < n; ++i) {
    text << i << ":";
    if (i > 0) text << " " << i - 1;
    if (i + 1 < n) text << " " << i + 1;
    text << "\n";
  }
  return factormatch::build_window(factormatch::parse_adjacency_list(text.str()), 0, 0);
}

inline factormatch::PointMultiset uniform_counts(const factormatch::GraphWindow& w, std::uint32_t c) {
  return factormatch::PointMultiset(std::vector<std::uint32_t>(w.size(), c));
}

}  // namespace fixtures
