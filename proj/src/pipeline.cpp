#include "factormatch/pipeline.hpp"

#include "factormatch/errors.hpp"
#include "factormatch/rng.hpp"

namespace factormatch {

namespace {

// Prefixes cap and censoring failures with the pipeline step that raised them.
template <class F>
auto in_step(const char* step, F&& f) {
  const auto tag = [step](const std::exception& e) { return std::string(step) + ": " + e.what(); };
  try {
    return f();
  } catch (const ResourceError& e) {
    throw ResourceError(tag(e));
  } catch (const StageDivergence& e) {
    throw StageDivergence(tag(e));
  } catch (const CensoringError& e) {
    throw CensoringError(tag(e));
  }
}

}  // namespace

std::uint64_t pi_seed(std::uint64_t seed, std::uint64_t trial) {
  return derive_seed({seed, trial, 1});
}

std::uint64_t pi_prime_seed(std::uint64_t seed, std::uint64_t trial) {
  return derive_seed({seed, trial, 2});
}

GraphWindow make_window(const RunConfig& cfg, int depth) {
  return build_window(cfg.family, depth < 0 ? cfg.depth : depth, cfg.core_margin);
}

TrialOutput run_trial(const RunConfig& cfg, const GraphWindow& w, std::uint64_t trial, Stage stage) {
  TrialOutput out;
  out.trial = trial;
  out.pi = in_step("sample", [&] { return sample(cfg.pi, w, pi_seed(cfg.seed, trial)); });
  out.pi_prime =
      in_step("sample", [&] { return sample(cfg.pi_prime, w, pi_prime_seed(cfg.seed, trial)); });
  if (stage == Stage::sample) return out;

  out.r = in_step("radii", [&] {
    return compute_radius_field(out.pi, out.pi_prime, w, cfg.r0, cfg.mode, cfg.caps, Side::pi);
  });
  out.r_prime = in_step("radii", [&] {
    return compute_radius_field(out.pi_prime, out.pi, w, cfg.r0, cfg.mode, cfg.caps, Side::pi_prime);
  });
  if (stage == Stage::radii) return out;

  out.order = in_step("order", [&] {
    return build_order(cfg.order_from_pi_prime ? out.pi_prime : out.pi, w, cfg.order_r_max);
  });
  out.graph = in_step("bipartite", [&] {
    return build_match_graph(out.pi, out.pi_prime, out.r, out.r_prime, w);
  });
  const int stages = cfg.max_stage > 0 ? cfg.max_stage : default_max_stage(out.graph);
  const EngineOptions engine{cfg.max_chains, cfg.max_sweeps};
  out.run = in_step("matcher", [&] { return run(out.graph, out.order.rank, stages, engine); });
  out.tail = in_step("tail", [&] {
    return trial_tail(out.graph, out.run.matching, w, out.r, out.pi_prime, cfg.tail_r_max);
  });
  return out;
}

}  // namespace factormatch
