// factormatch: batch runner for the sampling, radii, matching and verification pipelines.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>
#include <boost/version.hpp>

#include "factormatch/config.hpp"
#include "factormatch/errors.hpp"
#include "factormatch/pipeline.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace factormatch;

namespace {

struct Flags {
  std::string config_path;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> trials;
  std::optional<std::string> out;
  std::optional<unsigned> workers;
};

class Output {
 public:
  explicit Output(const RunConfig& cfg) : cfg_(cfg), dir_(cfg.out_dir) { fs::create_directories(dir_); }

  std::string header() const {
    return "# config_hash=" + cfg_.hash() + " seed=" + std::to_string(cfg_.seed) + "\n";
  }

  void write(const std::string& name, const std::string& body) {
    std::ofstream f(dir_ / name, std::ios::binary);
    if (!f) throw ResourceError("cannot write " + (dir_ / name).string());
    f << header() << body;
    files_.push_back(name);
  }

  void summary(json j) {
    std::ostringstream body;
    body << j.dump(2) << "\n";
    std::ofstream f(dir_ / "summary.json", std::ios::binary);
    // JSON has no comments, so the hash lives in the object itself.
    f << body.str();
    files_.push_back("summary.json");
  }

  void manifest(const std::string& command, double wall_seconds) {
    std::ofstream f(dir_ / "manifest.txt", std::ios::binary);
    f << header() << "command=" << command << "\n"
      << "version=" << PROJECT_VERSION << "\n"
      << "compiler=" << __VERSION__ << "\n"
      << "boost=" << BOOST_LIB_VERSION << "\n"
      << "workers=" << cfg_.workers << "\n"
      << "wall_seconds=" << std::fixed << std::setprecision(3) << wall_seconds << "\n"
      << "files=";
    for (std::size_t i = 0; i < files_.size(); ++i) f << (i ? "," : "") << files_[i];
    f << "\n[config]\n" << cfg_.canonical();
  }

 private:
  const RunConfig& cfg_;
  fs::path dir_;
  std::vector<std::string> files_;
};

json base_summary(const std::string& command, const RunConfig& cfg) {
  return json{{"command", command},
              {"config_hash", cfg.hash()},
              {"seed", cfg.seed},
              {"trials", cfg.trials},
              {"family", family_name(cfg.family)},
              {"depth", cfg.depth}};
}

std::vector<TrialOutput> run_all(const RunConfig& cfg, const GraphWindow& w, Stage stage) {
  return parallel_map<TrialOutput>(cfg.trials, cfg.workers,
                                   [&](std::size_t t) { return run_trial(cfg, w, t, stage); });
}

double mean_count(const PointMultiset& pm, const GraphWindow& w) {
  const auto core = w.core();
  return core.empty() ? 0.0 : static_cast<double>(count_in(pm, core)) / static_cast<double>(core.size());
}

void cmd_sample(const RunConfig& cfg, Output& out) {
  const auto w = make_window(cfg);
  const auto trials = run_all(cfg, w, Stage::sample);
  std::ostringstream body;
  json per = json::array();
  for (const auto& t : trials) {
    body << "# trial " << t.trial << " pi\n" << dump(t.pi) << "# trial " << t.trial << " pi_prime\n"
         << dump(t.pi_prime);
    per.push_back({{"trial", t.trial},
                   {"core_density_pi", mean_count(t.pi, w)},
                   {"core_density_pi_prime", mean_count(t.pi_prime, w)}});
  }
  out.write("samples.txt", body.str());
  auto j = base_summary("sample", cfg);
  j["window_size"] = w.size();
  j["core_size"] = w.core_size();
  j["per_trial"] = per;
  out.summary(j);
}

std::string radii_rows(const TrialOutput& t, const RadiusField& f) {
  std::ostringstream s;
  const char* side = f.side == Side::pi ? "pi" : "pi_prime";
  for (VertexId v = 0; v < f.radius.size(); ++v) {
    s << t.trial << "," << v << "," << side << ",";
    if (f.censored(v)) {
      s << ",," << reason_name(f.reason[v]);
    } else {
      s << f.radius[v] << "," << int(f.first_clause[v]) << ",";
    }
    s << "," << static_cast<int>(f.bad.flags[v]) << "\n";
  }
  return s.str();
}

json field_summary(const RadiusField& f, const GraphWindow& w) {
  std::size_t bad = 0, censored = 0, core_max = 0;
  int max_r = 0;
  for (VertexId v = 0; v < f.radius.size(); ++v) {
    bad += f.bad.flags[v] == BadFlag::bad;
    censored += f.censored(v);
    if (!f.censored(v) && w.in_core(v)) {
      max_r = std::max(max_r, f.radius[v]);
      ++core_max;
    }
  }
  return json{{"bad", bad},
              {"censored", censored},
              {"core_resolved", core_max},
              {"core_max_radius", max_r},
              {"fallback_checks", f.fallback_checks}};
}

void cmd_radii(const RunConfig& cfg, Output& out) {
  const auto w = make_window(cfg);
  const auto trials = run_all(cfg, w, Stage::radii);
  std::ostringstream rows, comps;
  rows << "trial,vertex,side,R,first_clause,censor_reason,bad_flag\n";
  comps << "trial,side,r,components,max_size,max_diameter,vertices_above,resolved_above\n";
  json per = json::array();
  for (const auto& t : trials) {
    for (const auto* f : {&t.r, &t.r_prime}) {
      rows << radii_rows(t, *f);
      for (int r = cfg.r0; r <= cfg.caps.r_max; ++r) {
        const auto all = components_above(*f, w, r, {true, true});
        const auto resolved = components_above(*f, w, r, {false, true});
        std::size_t above = 0, resolved_above = 0;
        int diam = 0;
        for (const auto& c : all) {
          above += c.vertices.size();
          diam = std::max(diam, c.diameter);
        }
        for (const auto& c : resolved) resolved_above += c.vertices.size();
        comps << t.trial << "," << (f->side == Side::pi ? "pi" : "pi_prime") << "," << r << ","
              << all.size() << "," << (all.empty() ? 0 : all.front().vertices.size()) << "," << diam
              << "," << above << "," << resolved_above << "\n";
      }
    }
    per.push_back({{"trial", t.trial}, {"R", field_summary(t.r, w)}, {"R_prime", field_summary(t.r_prime, w)}});
  }
  out.write("radii.csv", rows.str());
  out.write("components.csv", comps.str());
  auto j = base_summary("radii", cfg);
  j["r0"] = cfg.r0;
  j["mode"] = mode_name(cfg.mode);
  j["per_trial"] = per;
  out.summary(j);
}

std::string stages_rows(const std::vector<TrialOutput>& trials) {
  std::ostringstream s;
  s.precision(10);
  s << "trial,stage,sweeps,flips,unmatched_left,unmatched_right,p_n_left,p_n_right\n";
  for (const auto& t : trials) {
    for (const auto& r : t.run.stages) {
      s << t.trial << "," << r.stage << "," << r.sweeps << "," << r.flips << "," << r.unmatched_left << ","
        << r.unmatched_right << "," << r.p_left << "," << r.p_right << "\n";
    }
  }
  return s.str();
}

// Per-stage p_n averaged over trials; trials that ran fewer stages keep their final value.
std::vector<StageReport> pooled_stages(const std::vector<TrialOutput>& trials) {
  std::size_t n = 0;
  for (const auto& t : trials) n = std::max(n, t.run.stages.size());
  std::vector<StageReport> pooled(n);
  for (std::size_t k = 0; k < n; ++k) {
    pooled[k].stage = static_cast<int>(k + 1);
    for (const auto& t : trials) {
      if (t.run.stages.empty()) continue;
      const auto& r = t.run.stages[std::min(k, t.run.stages.size() - 1)];
      pooled[k].p_left += r.p_left / static_cast<double>(trials.size());
      pooled[k].p_right += r.p_right / static_cast<double>(trials.size());
      pooled[k].flips += k < t.run.stages.size() ? r.flips : 0;
    }
  }
  return pooled;
}

TailCurve pooled_tail(const std::vector<TrialOutput>& trials, const RunConfig& cfg) {
  std::vector<TrialTail> tails;
  for (const auto& t : trials) tails.push_back(t.tail);
  return matching_distance_tail(tails, cfg.family);
}

json tail_json(const TailCurve& c) {
  return json{{"slope", c.slope_defined ? json(c.slope) : json(nullptr)},
              {"base_vertices", c.base_vertices},
              {"estimate", c.estimate},
              {"hole", c.hole}};
}

json pn_json(const PnDecay& d) {
  return json{{"p_n", d.p},
              {"monotone", d.monotone},
              {"fitted_ratio", d.fitted ? json(d.fitted_ratio) : json(nullptr)}};
}

void cmd_match(const RunConfig& cfg, Output& out, bool write_matching) {
  const auto w = make_window(cfg);
  const auto trials = run_all(cfg, w, Stage::match);
  json per = json::array();
  std::ostringstream matching;
  for (const auto& t : trials) {
    if (write_matching) matching << "# trial " << t.trial << "\n" << dump(t.graph, t.run.matching);
    const auto oracle = max_matching_oracle(t.graph);
    per.push_back({{"trial", t.trial},
                   {"left_points", t.graph.left_size()},
                   {"right_points", t.graph.right_size()},
                   {"matched", t.run.matching.size()},
                   {"oracle_maximum", oracle.size()},
                   {"stages", t.run.stages.size()}});
  }
  if (write_matching) out.write("matching.txt", matching.str());
  out.write("stages.csv", stages_rows(trials));
  const auto curve = pooled_tail(trials, cfg);
  out.write("tail.csv", curve.csv());
  const auto pooled = pooled_stages(trials);
  const auto decay = pn_decay(pooled);
  out.write("pn.csv", decay.csv());
  auto j = base_summary(write_matching ? "match" : "tail", cfg);
  j["tail"] = tail_json(curve);
  j["p_n"] = pn_json(decay);
  j["per_trial"] = per;
  out.summary(j);
}

json report_json(const LemmaReport& r) {
  return json{{"id", r.id},
              {"exact", r.exact},
              {"rows", r.rows.size()},
              {"violations", r.violations},
              {"structural_failures", r.structural_failures},
              {"density_mean", r.density_mean.value},
              {"lhs_mean", r.lhs_mean.value},
              {"rhs_mean", r.rhs_mean.value}};
}

void cmd_verify(const RunConfig& cfg, Output& out) {
  json lemmas = json::array();
  std::size_t exact_failures = 0;
  auto record = [&](const LemmaReport& r) {
    out.write("lemma_" + r.id + ".csv", r.csv());
    lemmas.push_back(report_json(r));
    exact_failures += r.structural_failures + (r.exact ? r.violations : 0);
  };

  if (std::holds_alternative<RegularTree>(cfg.family)) {
    const auto cw = build_window(cfg.family, cfg.chebyshev_depth, std::min(cfg.core_margin, cfg.chebyshev_depth));
    record(verify_chebyshev(cw, occupied_set(1), cfg.chebyshev_trials, derive_seed({cfg.seed, 101})));
  }

  const auto w = make_window(cfg);
  const auto trials = run_all(cfg, w, Stage::match);
  std::vector<LemmaRow> hall, indep_rows;
  std::size_t indep_failures = 0, indep_violations = 0;
  for (const auto& t : trials) {
    const auto crowded = crowded_points(t.graph, PointSide::left, 2);
    hall.push_back(boosted_hall_row(t.graph, crowded, t.trial));
    const int n = static_cast<int>(std::min<std::size_t>(t.run.snapshots.size(), 4));
    for (int k = 1; k <= n; ++k) {
      auto rep = verify_indep_set(t.graph, t.run.snapshots[k - 1], k);
      indep_failures += rep.structural_failures;
      indep_violations += rep.violations;
      for (auto row : rep.rows) {
        row.trial = t.trial;
        indep_rows.push_back(row);
      }
    }
  }
  record(make_report("boosted_hall", false, hall, w.core_size()));
  auto indep = make_report("indep_set", false, indep_rows, w.core_size());
  indep.structural_failures = indep_failures;
  record(indep);

  std::vector<std::size_t> sizes{1, 2, 3, 4, 5, 6};
  const auto disc = verify_discrepancy(cfg.family, cfg.pi, cfg.pi_prime, sizes, cfg.r0 / 2,
                                       cfg.discrepancy_trials, derive_seed({cfg.seed, 102}));
  out.write("lemma_discrepancy.csv", disc.csv());

  if (w.is_tree()) {
    std::vector<LemmaRow> greedy_rows;
    std::size_t diam_failures = 0;
    StreamRng rng(derive_seed({cfg.seed, 103}));
    const int r = std::max(1, cfg.r0 / 2);
    for (std::uint64_t i = 0; i < cfg.greedy_instances; ++i) {
      const auto family = random_rconnected_family(w, r, 6, 8, rng);
      std::vector<VertexId> covered;
      for (const auto& s : family) covered.insert(covered.end(), s.begin(), s.end());
      const auto u = covered[rng.uniform_index(covered.size())];
      const auto v = covered[rng.uniform_index(covered.size())];
      const auto g = greedy_sparse_subpath(w, family, u, v, r);
      diam_failures += !g.condition2_diameter;
      greedy_rows.push_back({i, static_cast<double>(g.selected.size()), static_cast<double>(g.dist_uv),
                             static_cast<double>(g.bound_value), g.all()});
    }
    auto rep = make_report("greedy", true, greedy_rows, w.core_size());
    rep.structural_failures = diam_failures;
    record(rep);
  }

  const auto curve = pooled_tail(trials, cfg);
  out.write("tail.csv", curve.csv());
  const auto decay = pn_decay(pooled_stages(trials));
  out.write("pn.csv", decay.csv());

  std::ostringstream scan;
  scan << "depth,side,r,window_size,components,max_size,vertices_above\n";
  for (int depth : cfg.scan_depths) {
    const auto sw = make_window(cfg, depth);
    const auto t = run_trial(cfg, sw, 0, Stage::radii);
    for (int r = cfg.r0; r <= cfg.caps.r_max; ++r) {
      const auto comps = components_above(t.r, sw, r, {false, true});
      std::size_t above = 0;
      for (const auto& c : comps) above += c.vertices.size();
      scan << depth << ",pi," << r << "," << sw.size() << "," << comps.size() << ","
           << (comps.empty() ? 0 : comps.front().vertices.size()) << "," << above << "\n";
    }
  }
  out.write("components_scan.csv", scan.str());

  auto j = base_summary("verify", cfg);
  j["lemmas"] = lemmas;
  j["discrepancy_slope"] = disc.slope_defined ? json(disc.slope) : json(nullptr);
  j["tail"] = tail_json(curve);
  j["p_n"] = pn_json(decay);
  j["exact_assertion_failures"] = exact_failures;
  j["monotone_failures"] = decay.monotone ? 0 : 1;
  out.summary(j);
  if (exact_failures > 0 || !decay.monotone) {
    throw InvariantViolation("verify: " + std::to_string(exact_failures) +
                             " exact assertion failures, p_n monotone=" + (decay.monotone ? "yes" : "no"));
  }
}

void cmd_demo_ladder(const RunConfig& cfg, Output& out) {
  const auto w = make_window(cfg);
  const auto pi = sample(cfg.pi, w, pi_seed(cfg.seed, 0));
  const auto order = build_order(pi, w, cfg.order_r_max);
  const auto ties = tied_vertical_pairs(order, w);
  std::ostringstream csv;
  csv << "x,vertex_y0,vertex_y1,signature\n";
  for (const auto& [a, b] : ties) {
    std::ostringstream sig;
    const auto& counts = order.signatures[a].counts;
    for (std::size_t i = 0; i < counts.size(); ++i) sig << (i ? " " : "") << counts[i];
    const auto x = w.ladder_coords(a).first;
    csv << x << "," << a << "," << b << "," << sig.str() << "\n";
    std::cout << "x=" << x << " (" << x << ",0)~(" << x << ",1) signature " << sig.str() << "\n";
  }
  std::size_t complete = 0;
  for (const auto& s : order.signatures) complete += s.complete() && w.ladder_coords(s.vertex).second == 0;
  std::cout << ties.size() << " tied vertical pairs out of " << complete << " columns with complete signatures\n";
  out.write("ladder_ties.csv", csv.str());
  auto j = base_summary("demo-ladder", cfg);
  j["order_r_max"] = cfg.order_r_max;
  j["tied_pairs"] = ties.size();
  j["complete_columns"] = complete;
  j["order_fallbacks"] = order.fallback_count();
  out.summary(j);
}

RunConfig resolve(const Flags& f, const std::string& command) {
  std::string text;
  if (!f.config_path.empty()) {
    std::ifstream in(f.config_path);
    if (!in) throw ConfigError("--config: cannot read " + f.config_path);
    text.assign(std::istreambuf_iterator<char>(in), {});
  }
  auto sets = f.sets;
  if (command == "demo-ladder") sets.insert(sets.begin(), "graph.family=ladder");
  auto cfg = parse_config(text, sets);
  if (f.seed) cfg.seed = *f.seed;
  if (f.trials) cfg.trials = *f.trials;
  if (f.out) cfg.out_dir = *f.out;
  if (f.workers) cfg.workers = *f.workers;
  validate(cfg);
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Factor matchings of point processes on graphs: simulation and checks"};
  app.require_subcommand(1);
  Flags flags;
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"sample", "sample Pi and Pi' on the window"},
      {"radii", "compute the radius fields R and R'"},
      {"match", "run the staged matcher and dump the matching"},
      {"tail", "matching-distance tail and p_n decay"},
      {"verify", "run the experiment suite"},
      {"demo-ladder", "tied vertical pairs on the ladder graph"}};
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", flags.config_path, "INI config file")->check(CLI::ExistingFile);
    sub->add_option("--seed", flags.seed, "master seed");
    sub->add_option("--trials", flags.trials, "number of trials");
    sub->add_option("--out", flags.out, "output directory");
    sub->add_option("--set", flags.sets, "override section.key=value (repeatable)");
    sub->add_option("--workers", flags.workers, "worker threads");
  }
  CLI11_PARSE(app, argc, argv);
  const std::string command = app.get_subcommands().front()->get_name();

  RunConfig cfg;
  try {
    cfg = resolve(flags, command);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }

  const auto start = std::chrono::steady_clock::now();
  try {
    Output out(cfg);
    if (command == "sample") cmd_sample(cfg, out);
    if (command == "radii") cmd_radii(cfg, out);
    if (command == "match") cmd_match(cfg, out, true);
    if (command == "tail") cmd_match(cfg, out, false);
    if (command == "verify") cmd_verify(cfg, out);
    if (command == "demo-ladder") cmd_demo_ladder(cfg, out);
    const std::chrono::duration<double> wall = std::chrono::steady_clock::now() - start;
    out.manifest(command, wall.count());
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const ResourceError& e) {
    std::cerr << "resource cap exceeded in " << e.what() << "\n";
    return 3;
  } catch (const StageDivergence& e) {
    std::cerr << "did not converge in " << e.what() << "\n";
    return 3;
  } catch (const CensoringError& e) {
    std::cerr << "censored in " << e.what() << "\n";
    return 3;
  } catch (const InvariantViolation& e) {
    std::cerr << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
