#include "factormatch/config.hpp"

#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include <boost/algorithm/string.hpp>
#include <boost/lexical_cast.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "factormatch/errors.hpp"

namespace factormatch {

namespace {

namespace pt = boost::property_tree;

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "graph.family",        "graph.degree",          "graph.depth",
      "graph.core_margin",   "graph.adjacency_file",  "process.pi",
      "process.pi_prime",    "radii.r0",              "radii.mode",
      "radii.s_max",         "radii.r_max",           "radii.max_sets",
      "order.r_max",         "order.source",          "matcher.max_stage",
      "matcher.max_chains",  "matcher.max_sweeps",    "experiment.trials",
      "experiment.tail_r_max", "experiment.chebyshev_trials", "experiment.chebyshev_depth",
      "experiment.discrepancy_trials", "experiment.greedy_instances", "experiment.scan_depths",
      "run.seed",            "run.workers",           "output.dir"};
  return keys;
}

template <class T>
T get_as(const pt::ptree& tree, const std::string& key, T fallback) {
  const auto node = tree.get_optional<std::string>(pt::ptree::path_type(key, '.'));
  if (!node) return fallback;
  try {
    return boost::lexical_cast<T>(boost::trim_copy(*node));
  } catch (const boost::bad_lexical_cast&) {
    throw ConfigError(key + ": cannot parse '" + *node + "'");
  }
}

std::string get_text(const pt::ptree& tree, const std::string& key, const std::string& fallback) {
  const auto node = tree.get_optional<std::string>(pt::ptree::path_type(key, '.'));
  return node ? boost::trim_copy(*node) : fallback;
}

ProcessSpec parse_process(const std::string& key, const std::string& text) {
  if (text == "poisson") return PoissonProcess{};
  if (text == "degenerate") return PerturbedProcess::degenerate();
  const std::string prefix = "perturbed:";
  if (text.rfind(prefix, 0) == 0) {
    std::vector<std::string> parts;
    const auto body = text.substr(prefix.size());
    boost::split(parts, body, boost::is_any_of(","));
    PerturbedProcess p;
    for (auto& s : parts) {
      try {
        p.distance_law.push_back(boost::lexical_cast<double>(boost::trim_copy(s)));
      } catch (const boost::bad_lexical_cast&) {
        throw ConfigError(key + ": bad probability '" + s + "'");
      }
    }
    try {
      validate(ProcessSpec{p});
    } catch (const ConfigError& e) {
      throw ConfigError(key + ": " + e.what());
    }
    return p;
  }
  throw ConfigError(key + ": expected poisson, degenerate or perturbed:p0,p1,...");
}

std::string process_text(const ProcessSpec& spec) {
  if (std::holds_alternative<PoissonProcess>(spec)) return "poisson";
  const auto& law = std::get<PerturbedProcess>(spec).distance_law;
  if (law.size() == 1) return "degenerate";
  std::ostringstream out;
  out << std::setprecision(17) << "perturbed:";
  for (std::size_t i = 0; i < law.size(); ++i) out << (i ? "," : "") << law[i];
  return out.str();
}

}  // namespace

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string RunConfig::canonical() const {
  std::ostringstream out;
  out << "graph.family=" << family_text << "\n";
  if (const auto* t = std::get_if<RegularTree>(&family)) out << "graph.degree=" << t->degree << "\n";
  out << "graph.adjacency_file=" << adjacency_file << "\n"
      << "graph.depth=" << depth << "\n"
      << "graph.core_margin=" << core_margin << "\n"
      << "process.pi=" << process_text(pi) << "\n"
      << "process.pi_prime=" << process_text(pi_prime) << "\n"
      << "radii.r0=" << r0 << "\n"
      << "radii.mode=" << mode_name(mode) << "\n"
      << "radii.s_max=" << caps.s_max << "\n"
      << "radii.r_max=" << caps.r_max << "\n"
      << "radii.max_sets=" << caps.max_sets << "\n"
      << "order.r_max=" << order_r_max << "\n"
      << "order.source=" << (order_from_pi_prime ? "pi_prime" : "pi") << "\n"
      << "matcher.max_stage=" << max_stage << "\n"
      << "matcher.max_chains=" << max_chains << "\n"
      << "matcher.max_sweeps=" << max_sweeps << "\n"
      << "experiment.trials=" << trials << "\n"
      << "experiment.tail_r_max=" << tail_r_max << "\n"
      << "experiment.chebyshev_trials=" << chebyshev_trials << "\n"
      << "experiment.chebyshev_depth=" << chebyshev_depth << "\n"
      << "experiment.discrepancy_trials=" << discrepancy_trials << "\n"
      << "experiment.greedy_instances=" << greedy_instances << "\n"
      << "experiment.scan_depths=";
  for (std::size_t i = 0; i < scan_depths.size(); ++i) out << (i ? "," : "") << scan_depths[i];
  out << "\n";
  return out.str();
}

std::string RunConfig::hash() const {
  std::ostringstream out;
  out << std::hex << std::setw(16) << std::setfill('0') << fnv1a(canonical());
  return out.str();
}

RunConfig parse_config(const std::string& ini_text, const std::vector<std::string>& overrides) {
  pt::ptree tree;
  try {
    std::istringstream in(ini_text);
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos || o.find('.') > eq) {
      throw ConfigError("--set expects section.key=value, got '" + o + "'");
    }
    tree.put(pt::ptree::path_type(boost::trim_copy(o.substr(0, eq)), '.'), o.substr(eq + 1));
  }
  for (const auto& [section, body] : tree) {
    if (body.empty()) throw ConfigError(section + ": settings must live inside a section");
    for (const auto& [key, value] : body) {
      const auto full = section + "." + key;
      if (!known_keys().count(full)) throw ConfigError(full + ": unknown setting");
    }
  }

  RunConfig cfg;
  cfg.family_text = get_text(tree, "graph.family", "tree");
  if (cfg.family_text == "tree") {
    cfg.family = RegularTree{get_as<int>(tree, "graph.degree", 3)};
  } else if (cfg.family_text == "ladder") {
    cfg.family = LadderDiagonal{};
  } else if (cfg.family_text == "explicit") {
    cfg.adjacency_file = get_text(tree, "graph.adjacency_file", "");
    if (cfg.adjacency_file.empty()) throw ConfigError("graph.adjacency_file: required for explicit graphs");
    cfg.family = load_adjacency_file(cfg.adjacency_file);
  } else {
    throw ConfigError("graph.family: expected tree, ladder or explicit");
  }
  cfg.depth = get_as<int>(tree, "graph.depth", cfg.depth);
  cfg.core_margin = get_as<int>(tree, "graph.core_margin", cfg.core_margin);
  cfg.pi = parse_process("process.pi", get_text(tree, "process.pi", "poisson"));
  cfg.pi_prime = parse_process("process.pi_prime", get_text(tree, "process.pi_prime", "poisson"));

  cfg.r0 = get_as<int>(tree, "radii.r0", cfg.r0);
  const auto mode = get_text(tree, "radii.mode", "support");
  if (mode == "support") {
    cfg.mode = ConstraintMode::support;
  } else if (mode == "exact") {
    cfg.mode = ConstraintMode::exact;
  } else {
    throw ConfigError("radii.mode: expected support or exact");
  }
  cfg.caps.s_max = get_as<std::size_t>(tree, "radii.s_max", cfg.caps.s_max);
  cfg.caps.r_max = get_as<int>(tree, "radii.r_max", cfg.core_margin);
  cfg.caps.max_sets = get_as<std::uint64_t>(tree, "radii.max_sets", cfg.caps.max_sets);

  cfg.order_r_max = get_as<int>(tree, "order.r_max", cfg.core_margin - cfg.r0);
  const auto source = get_text(tree, "order.source", "pi");
  if (source != "pi" && source != "pi_prime") throw ConfigError("order.source: expected pi or pi_prime");
  cfg.order_from_pi_prime = source == "pi_prime";

  cfg.max_stage = get_as<int>(tree, "matcher.max_stage", cfg.max_stage);
  cfg.max_chains = get_as<std::size_t>(tree, "matcher.max_chains", cfg.max_chains);
  cfg.max_sweeps = get_as<std::size_t>(tree, "matcher.max_sweeps", cfg.max_sweeps);

  cfg.trials = get_as<std::uint64_t>(tree, "experiment.trials", cfg.trials);
  cfg.tail_r_max = get_as<int>(tree, "experiment.tail_r_max", cfg.tail_r_max);
  cfg.chebyshev_trials = get_as<std::uint64_t>(tree, "experiment.chebyshev_trials", cfg.chebyshev_trials);
  cfg.chebyshev_depth = get_as<int>(tree, "experiment.chebyshev_depth", cfg.chebyshev_depth);
  cfg.discrepancy_trials =
      get_as<std::uint64_t>(tree, "experiment.discrepancy_trials", cfg.discrepancy_trials);
  cfg.greedy_instances = get_as<std::uint64_t>(tree, "experiment.greedy_instances", cfg.greedy_instances);
  const auto depths = get_text(tree, "experiment.scan_depths", "");
  if (!depths.empty()) {
    std::vector<std::string> parts;
    boost::split(parts, depths, boost::is_any_of(","));
    cfg.scan_depths.clear();
    for (auto& s : parts) {
      try {
        cfg.scan_depths.push_back(boost::lexical_cast<int>(boost::trim_copy(s)));
      } catch (const boost::bad_lexical_cast&) {
        throw ConfigError("experiment.scan_depths: bad depth '" + s + "'");
      }
    }
  }
  cfg.seed = get_as<std::uint64_t>(tree, "run.seed", cfg.seed);
  cfg.workers = get_as<unsigned>(tree, "run.workers", cfg.workers);
  cfg.out_dir = get_text(tree, "output.dir", cfg.out_dir);
  validate(cfg);
  return cfg;
}

RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str(), overrides);
}

void validate(const RunConfig& cfg) {
  if (const auto* t = std::get_if<RegularTree>(&cfg.family); t && t->degree < 3) {
    throw ConfigError("graph.degree: must be >= 3");
  }
  if (cfg.depth < 0) throw ConfigError("graph.depth: must be >= 0");
  if (cfg.core_margin < 0 || cfg.core_margin > cfg.depth) {
    throw ConfigError("graph.core_margin: must lie in [0, depth]");
  }
  if (cfg.r0 < 2 || cfg.r0 % 2 != 0) throw ConfigError("radii.r0: must be even and >= 2");
  const int reach = std::max(max_displacement(cfg.pi), max_displacement(cfg.pi_prime));
  const bool finite = std::holds_alternative<ExplicitFinite>(cfg.family);
  if (!finite && cfg.core_margin < std::max({cfg.r0, reach, cfg.order_r_max})) {
    throw ConfigError("graph.core_margin: must be >= max(r0, perturbation support, order.r_max)");
  }
  if (cfg.caps.s_max == 0) throw ConfigError("radii.s_max: must be positive");
  if (cfg.caps.max_sets == 0) throw ConfigError("radii.max_sets: must be positive");
  if (cfg.caps.r_max < cfg.r0) throw ConfigError("radii.r_max: must be >= r0");
  if (cfg.order_r_max < 0) throw ConfigError("order.r_max: must be >= 0");
  if (cfg.max_stage < 0) throw ConfigError("matcher.max_stage: must be >= 0 (0 = automatic)");
  if (cfg.max_chains == 0) throw ConfigError("matcher.max_chains: must be positive");
  if (cfg.max_sweeps == 0) throw ConfigError("matcher.max_sweeps: must be positive");
  if (cfg.trials == 0) throw ConfigError("experiment.trials: must be positive");
  if (cfg.tail_r_max < 0) throw ConfigError("experiment.tail_r_max: must be >= 0");
  if (cfg.workers == 0) throw ConfigError("run.workers: must be positive");
  for (int d : cfg.scan_depths) {
    if (!finite && d < cfg.core_margin) throw ConfigError("experiment.scan_depths: depths must be >= core_margin");
  }
}

}  // namespace factormatch
