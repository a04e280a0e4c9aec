#pragma once

// Multi-trial comparison protocol: every algorithm gets the same number of
// variable instantiations per trial, each trial runs on its own derived seed,
// and the error against exact marginals is recorded at the end of the trial.

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "belief_sim/exact.hpp"
#include "belief_sim/network.hpp"
#include "belief_sim/rng.hpp"
#include "belief_sim/sampler.hpp"
#include "belief_sim/scores.hpp"

namespace belief_sim {

struct Experiment {
  std::shared_ptr<const BeliefNetwork> network;
  Evidence evidence;
  std::vector<Algorithm> algorithms{kAllAlgorithms.begin(), kAllAlgorithms.end()};
  std::vector<std::uint64_t> iterations{250, 1000};
  std::size_t trials = 25;
  std::uint64_t master_seed = 0;
  std::size_t si_period = 100;
  std::size_t restarts = 10;
  std::optional<std::vector<NodeId>> mb_nodes;
  // Nodes whose error is measured; all unobserved nodes when unset.
  std::optional<std::vector<NodeId>> targets;
  // Id of each node of `network` in the network the experiment was pruned
  // from (identity when unpruned).
  std::vector<NodeId> original_ids;

  void validate() const {
    if (!network) throw std::invalid_argument("experiment has no network");
    if (trials < 1) throw std::invalid_argument("trials must be >= 1");
    if (iterations.empty()) throw std::invalid_argument("no iteration counts");
    for (auto n : iterations)
      if (n < 1) throw std::invalid_argument("iterations must be >= 1");
    if (algorithms.empty()) throw std::invalid_argument("no algorithms");
    validate_evidence(*network, evidence);
    if (unobserved_nodes(*network, evidence).empty())
      throw std::invalid_argument("every node is observed; nothing to estimate");
  }
};

// Forward samplers instantiate every unobserved node per iteration; the
// single-site chains instantiate one, so they get |N \ E| times as many.
inline std::uint64_t instantiation_budget(Algorithm a, const BeliefNetwork& net,
                                          const Evidence& ev,
                                          std::uint64_t base_iterations) {
  if (!is_markov_chain(a)) return base_iterations;
  return base_iterations * unobserved_nodes(net, ev).size();
}

inline std::size_t algorithm_index(Algorithm a) {
  for (std::size_t i = 0; i < kAllAlgorithms.size(); ++i)
    if (kAllAlgorithms[i] == a) return i;
  return kAllAlgorithms.size();
}

// seed = derive(derive(derive(master, algorithm), base iterations), trial)
inline std::uint64_t trial_seed(std::uint64_t master, Algorithm a,
                                std::uint64_t base_iterations, std::size_t trial) {
  return derive_seed(derive_seed(derive_seed(master, algorithm_index(a)),
                                 base_iterations),
                     trial);
}

struct TrialResult {
  std::size_t trial = 0;
  std::uint64_t seed = 0;
  double error = std::numeric_limits<double>::quiet_NaN();  // NaN if undefined
  double wall_time_s = 0.0;
  bool aborted = false;
  std::string abort_reason;
  std::uint64_t instantiations = 0;  // unobserved-variable draws in iterations
  std::uint64_t initialization_instantiations = 0;
  std::size_t excluded_terms = 0;
};

struct AlgorithmSummary {
  Algorithm algorithm = Algorithm::basic;
  std::uint64_t base_iterations = 0;
  std::uint64_t budget = 0;
  std::vector<TrialResult> trials;

  // Recomputed from `trials` by aggregate().
  double mean_error = std::numeric_limits<double>::quiet_NaN();
  double sd_error = std::numeric_limits<double>::quiet_NaN();
  double mean_time_s = 0.0;
  double error_sq_time = std::numeric_limits<double>::quiet_NaN();
  std::size_t used = 0;       // trials entering the error statistics
  std::size_t aborted = 0;
  std::size_t undefined = 0;  // trials whose error was undefined
};

// Aggregates over trials that completed with a defined error. The standard
// deviation uses the n - 1 divisor.
inline void aggregate(AlgorithmSummary& s) {
  double sum = 0.0, time = 0.0;
  s.used = s.aborted = s.undefined = 0;
  for (const auto& t : s.trials) {
    time += t.wall_time_s;
    if (t.aborted) {
      ++s.aborted;
      continue;
    }
    if (std::isnan(t.error)) {
      ++s.undefined;
      continue;
    }
    sum += t.error;
    ++s.used;
  }
  s.mean_time_s = s.trials.empty() ? 0.0 : time / static_cast<double>(s.trials.size());
  if (s.used == 0) {
    s.mean_error = s.sd_error = s.error_sq_time =
        std::numeric_limits<double>::quiet_NaN();
    return;
  }
  s.mean_error = sum / static_cast<double>(s.used);
  double ss = 0.0;
  for (const auto& t : s.trials)
    if (!t.aborted && !std::isnan(t.error))
      ss += (t.error - s.mean_error) * (t.error - s.mean_error);
  s.sd_error = s.used > 1 ? std::sqrt(ss / static_cast<double>(s.used - 1)) : 0.0;
  s.error_sq_time = s.mean_error * s.mean_error * s.mean_time_s;
}

struct TrialReport {
  std::vector<AlgorithmSummary> rows;  // iteration-major, then algorithm order
  MarginalTable exact;
  std::uint64_t master_seed = 0;
  std::string rng_name{Rng::kName};
};

inline std::size_t default_thread_count() {
  if (const char* env = std::getenv("BELIEF_SIM_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && v > 0) return static_cast<std::size_t>(v);
  }
  return 1;
}

inline TrialResult run_trial(const Experiment& exp, const MarginalTable& exact,
                             Algorithm a, std::uint64_t base, std::size_t trial) {
  TrialResult r;
  r.trial = trial;
  r.seed = trial_seed(exp.master_seed, a, base, trial);
  SamplerConfig cfg;
  cfg.algorithm = a;
  cfg.iterations = instantiation_budget(a, *exp.network, exp.evidence, base);
  cfg.seed = r.seed;
  cfg.si_period = exp.si_period;
  cfg.restarts = exp.restarts;
  if (a == Algorithm::basic_mb) cfg.mb_nodes = exp.mb_nodes;

  const auto start = std::chrono::steady_clock::now();
  SamplingRun run(*exp.network, exp.evidence, cfg);
  run.run();
  const auto stop = std::chrono::steady_clock::now();
  r.wall_time_s = std::chrono::duration<double>(stop - start).count();

  r.aborted = run.stats().aborted;
  r.abort_reason = run.stats().abort_reason;
  r.instantiations = run.stats().in_iterations.sampled;
  r.initialization_instantiations = run.stats().in_initialization.sampled;
  const auto err =
      fertig_mann_error(normalize(run.table()), exact, exp.evidence, exp.targets);
  r.excluded_terms = err.excluded_terms;
  if (err.defined) r.error = err.value;
  return r;
}

// Deterministic given the master seed (wall times aside) and independent of
// the thread count: every (algorithm, iterations, trial) job owns its seed and
// writes to its own slot.
inline TrialReport run_experiment(const Experiment& exp,
                                  std::optional<MarginalTable> golden = {},
                                  std::size_t threads = 1) {
  exp.validate();
  TrialReport report;
  report.master_seed = exp.master_seed;
  report.exact = golden ? std::move(*golden)
                        : exact_posteriors(*exp.network, exp.evidence,
                                           ExactEngine::elimination);
  if (report.exact.inconsistent)
    throw NetworkError(NetworkError::Kind::evidence,
                       "evidence has probability zero");

  for (auto base : exp.iterations)
    for (Algorithm a : exp.algorithms) {
      AlgorithmSummary s;
      s.algorithm = a;
      s.base_iterations = base;
      s.budget = instantiation_budget(a, *exp.network, exp.evidence, base);
      s.trials.resize(exp.trials);
      report.rows.push_back(std::move(s));
    }

  const std::size_t jobs = report.rows.size() * exp.trials;
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < jobs; k = next++) {
      auto& row = report.rows[k / exp.trials];
      const std::size_t t = k % exp.trials;
      row.trials[t] = run_trial(exp, report.exact, row.algorithm,
                                row.base_iterations, t);
    }
  };
  threads = std::max<std::size_t>(1, std::min(threads, jobs));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t i = 0; i < threads; ++i) pool.emplace_back(worker);
  }

  const std::uint64_t free_count =
      unobserved_nodes(*exp.network, exp.evidence).size();
  for (auto& row : report.rows) {
    aggregate(row);
    for (const auto& t : row.trials)
      if (!t.aborted && t.instantiations != row.base_iterations * free_count)
        throw std::logic_error("instantiation count mismatch for " +
                               std::string(tag(row.algorithm)));
  }
  return report;
}

// Restricts the experiment to the ancestral closure of targets and evidence.
// Errors are then measured on the targets only.
inline Experiment prune_for_targets(const Experiment& exp,
                                    const std::vector<NodeId>& targets) {
  if (targets.empty()) throw std::invalid_argument("empty target set");
  const BeliefNetwork& net = *exp.network;
  for (NodeId t : targets) {
    if (t >= net.size())
      throw NetworkError(NetworkError::Kind::unknown_node,
                         "unknown target id " + std::to_string(t));
    if (exp.evidence.observed(t))
      throw std::invalid_argument("target '" + net.variable(t).name +
                                  "' is observed");
  }
  const auto ev_nodes = exp.evidence.nodes();
  const auto keep = relevant_nodes(net, targets, ev_nodes);
  auto sub = induced_subnetwork(net, keep);

  Experiment out = exp;
  out.evidence = Evidence(sub.network.size());
  for (auto [j, s] : exp.evidence.entries())
    if (sub.new_id[j]) out.evidence.observe(*sub.new_id[j], s);
  std::vector<NodeId> mapped_targets;
  for (NodeId t : targets) mapped_targets.push_back(*sub.new_id[t]);
  std::sort(mapped_targets.begin(), mapped_targets.end());
  mapped_targets.erase(std::unique(mapped_targets.begin(), mapped_targets.end()),
                       mapped_targets.end());
  out.targets = std::move(mapped_targets);
  if (exp.mb_nodes) {
    std::vector<NodeId> mb;
    for (NodeId j : *exp.mb_nodes)
      if (j < net.size() && sub.new_id[j]) mb.push_back(*sub.new_id[j]);
    out.mb_nodes = std::move(mb);
  }
  out.original_ids.clear();
  for (NodeId i : sub.original_id)
    out.original_ids.push_back(exp.original_ids.empty() ? i : exp.original_ids[i]);
  out.network = std::make_shared<const BeliefNetwork>(std::move(sub.network));
  return out;
}

}  // namespace belief_sim
