#pragma once

// A resumable sampling run for any of the nine algorithms. The run advances
// one natural iteration at a time, so it can be snapshotted (normalized
// estimate plus standard errors) at any iteration boundary.

#include <algorithm>
#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "belief_sim/forward.hpp"
#include "belief_sim/importance.hpp"
#include "belief_sim/mcmc.hpp"
#include "belief_sim/network.hpp"
#include "belief_sim/rng.hpp"
#include "belief_sim/scores.hpp"

namespace belief_sim {

enum class Algorithm {
  logic,
  basic,
  basic_mb,
  self_importance,
  heuristic_importance,
  pearl,
  pearl_mb,
  chavez,
  chavez_mb,
};

inline constexpr std::array<Algorithm, 9> kAllAlgorithms = {
    Algorithm::logic,           Algorithm::basic,
    Algorithm::basic_mb,        Algorithm::self_importance,
    Algorithm::heuristic_importance, Algorithm::pearl,
    Algorithm::pearl_mb,        Algorithm::chavez,
    Algorithm::chavez_mb,
};

inline constexpr std::string_view tag(Algorithm a) {
  switch (a) {
    case Algorithm::logic: return "logic";
    case Algorithm::basic: return "basic";
    case Algorithm::basic_mb: return "basic-mb";
    case Algorithm::self_importance: return "self-importance";
    case Algorithm::heuristic_importance: return "heuristic-importance";
    case Algorithm::pearl: return "pearl";
    case Algorithm::pearl_mb: return "pearl-mb";
    case Algorithm::chavez: return "chavez";
    case Algorithm::chavez_mb: return "chavez-mb";
  }
  return "?";
}

inline constexpr std::string_view display_name(Algorithm a) {
  switch (a) {
    case Algorithm::logic: return "Logic Sampling";
    case Algorithm::basic: return "Basic Algorithm";
    case Algorithm::basic_mb: return "Markov Blanket";
    case Algorithm::self_importance: return "Self Importance";
    case Algorithm::heuristic_importance: return "Heuristic Importance";
    case Algorithm::pearl: return "Pearl";
    case Algorithm::pearl_mb: return "Pearl with M. Blanket";
    case Algorithm::chavez: return "Chavez";
    case Algorithm::chavez_mb: return "Chavez with M. Blanket";
  }
  return "?";
}

inline std::optional<Algorithm> parse_algorithm(std::string_view s) {
  for (Algorithm a : kAllAlgorithms)
    if (tag(a) == s) return a;
  return std::nullopt;
}

inline constexpr bool is_markov_chain(Algorithm a) {
  return a == Algorithm::pearl || a == Algorithm::pearl_mb ||
         a == Algorithm::chavez || a == Algorithm::chavez_mb;
}

struct SamplerConfig {
  Algorithm algorithm = Algorithm::basic;
  std::uint64_t iterations = 1;  // natural iterations (samples or single-site steps)
  std::uint64_t seed = 0;
  std::size_t si_period = 100;
  std::optional<std::vector<NodeId>> mb_nodes;  // basic-mb only; default all
  std::size_t restarts = 10;
  std::size_t init_retry_limit = 100;
  std::optional<ImportanceDistribution> initial_importance;  // self-importance

  void validate() const {
    if (iterations < 1) throw std::invalid_argument("iterations must be >= 1");
    if (si_period < 1) throw std::invalid_argument("si-period must be >= 1");
    if (restarts < 1) throw std::invalid_argument("restarts must be >= 1");
    if (mb_nodes && algorithm != Algorithm::basic_mb)
      throw std::invalid_argument("mb-nodes applies to basic-mb only");
    if (initial_importance && algorithm != Algorithm::self_importance)
      throw std::invalid_argument(
          "an initial importance distribution applies to self-importance only");
  }
};

struct RunStats {
  std::uint64_t iterations = 0;
  InstantiationCounter in_iterations;      // counted toward the budget
  InstantiationCounter in_initialization;  // chain starts and restarts
  std::size_t degenerate_blankets = 0;
  std::size_t importance_updates = 0;
  bool aborted = false;
  std::string abort_reason;
};

struct Snapshot {
  PosteriorEstimate estimate;
  std::uint64_t iterations = 0;
};

class SamplingRun {
 public:
  // The network must outlive the run.
  SamplingRun(const BeliefNetwork& net, Evidence ev, SamplerConfig cfg)
      : net_(&net),
        ev_(std::move(ev)),
        cfg_(std::move(cfg)),
        rng_(cfg_.seed),
        table_(net, ev_),
        free_(unobserved_nodes(net, ev_)) {
    cfg_.validate();
    validate_evidence(net, ev_);
    switch (cfg_.algorithm) {
      case Algorithm::basic_mb: {
        mb_.assign(net.size(), !cfg_.mb_nodes.has_value());
        if (cfg_.mb_nodes)
          for (NodeId j : *cfg_.mb_nodes) {
            if (j >= net.size())
              throw NetworkError(NetworkError::Kind::unknown_node,
                                 "mb-nodes names unknown node id " +
                                     std::to_string(j));
            mb_[j] = true;
          }
        break;
      }
      case Algorithm::self_importance:
        importance_ = cfg_.initial_importance
                          ? *cfg_.initial_importance
                          : ImportanceDistribution::from_network(net);
        require_support(net, ev_, importance_);
        accumulator_ = SelfImportanceAccumulator(net, importance_);
        break;
      case Algorithm::heuristic_importance: {
        auto h = heuristic_importance_build(net, ev_);
        fallback_rows_ = std::move(h.fallback_rows);
        importance_ = std::move(h.distribution);
        require_support(net, ev_, importance_);
        break;
      }
      case Algorithm::chavez:
      case Algorithm::chavez_mb:
        if (!free_.empty()) segments_ = restart_segments(cfg_.iterations, cfg_.restarts);
        break;
      default:
        break;
    }
  }

  const SamplerConfig& config() const noexcept { return cfg_; }
  const Evidence& evidence() const noexcept { return ev_; }
  const ScoreTable& table() const noexcept { return table_; }
  const RunStats& stats() const noexcept { return stats_; }
  const ImportanceDistribution& importance() const noexcept { return importance_; }
  const std::vector<std::pair<NodeId, std::size_t>>& fallback_rows() const noexcept {
    return fallback_rows_;
  }

  bool done() const noexcept {
    return stats_.aborted || stats_.iterations >= cfg_.iterations;
  }

  void step() {
    if (done()) return;
    try {
      iterate();
    } catch (const ChainInitError& e) {
      stats_.aborted = true;
      stats_.abort_reason = e.what();
      return;
    }
    ++stats_.iterations;
  }

  void run() {
    while (!done()) step();
  }

  // Runs until done or until `stop()` returns true; checked between
  // iterations only.
  template <class StopFn>
  void run(StopFn&& stop) {
    while (!done() && !stop()) step();
  }

  Snapshot snapshot() const { return {normalize(table_), stats_.iterations}; }

 private:
  void iterate() {
    const BeliefNetwork& net = *net_;
    if (free_.empty()) return;
    auto* counter = &stats_.in_iterations;
    switch (cfg_.algorithm) {
      case Algorithm::logic:
        logic_sampling_step(net, ev_, rng_, sample_, counter);
        score_sample(false);
        break;
      case Algorithm::basic:
        basic_step(net, ev_, rng_, sample_, counter);
        score_sample(false);
        break;
      case Algorithm::basic_mb:
        basic_step(net, ev_, rng_, sample_, counter);
        score_sample(true);
        break;
      case Algorithm::self_importance:
        importance_step(net, ev_, importance_, rng_, sample_, counter);
        score_sample(false);
        accumulator_.add(net, ev_, sample_);
        if ((stats_.iterations + 1) % cfg_.si_period == 0) {
          accumulator_.apply(net, ev_, importance_);
          ++stats_.importance_updates;
        }
        break;
      case Algorithm::heuristic_importance:
        importance_step(net, ev_, importance_, rng_, sample_, counter);
        score_sample(false);
        break;
      case Algorithm::pearl:
      case Algorithm::pearl_mb: {
        if (!chain_) start_chain();
        const auto e = pearl_step(net, *chain_, rng_, chain_scoring(), counter);
        if (e.degenerate) ++stats_.degenerate_blankets;
        record(table_, e);
        table_.add_sample(1.0);
        break;
      }
      case Algorithm::chavez:
      case Algorithm::chavez_mb: {
        if (!chain_) start_chain();
        const auto e = pearl_step(net, *chain_, rng_, chain_scoring(), counter);
        if (e.degenerate) ++stats_.degenerate_blankets;
        if (++segment_pos_ == segments_[segment_]) {
          score_chain_state(net, *chain_, chain_scoring(), table_,
                            &stats_.degenerate_blankets);
          chain_.reset();
          segment_pos_ = 0;
          ++segment_;
        }
        break;
      }
    }
  }

  Scoring chain_scoring() const {
    return cfg_.algorithm == Algorithm::pearl_mb ||
                   cfg_.algorithm == Algorithm::chavez_mb
               ? Scoring::markov_blanket
               : Scoring::plain;
  }

  void start_chain() {
    chain_ = initialize_chain(*net_, ev_, rng_, cfg_.init_retry_limit,
                              &stats_.in_initialization);
  }

  void score_sample(bool blanket) {
    const double z = sample_.weight;
    table_.add_sample(z);
    for (NodeId j : free_) {
      if (blanket && mb_[j]) {
        const auto w = markov_blanket_score(*net_, sample_.assignment, j, 1.0);
        if (w.degenerate && z > 0.0) ++stats_.degenerate_blankets;
        table_.score_weights(j, w.weights, z);
      } else {
        table_.score_state(j, sample_.assignment.values[j], z);
      }
    }
  }

  const BeliefNetwork* net_;
  Evidence ev_;
  SamplerConfig cfg_;
  Rng rng_;
  ScoreTable table_;
  std::vector<NodeId> free_;
  RunStats stats_;
  SampleScore sample_;

  std::vector<bool> mb_;
  ImportanceDistribution importance_;
  SelfImportanceAccumulator accumulator_;
  std::vector<std::pair<NodeId, std::size_t>> fallback_rows_;

  std::optional<ChainState> chain_;
  std::vector<std::uint64_t> segments_;
  std::size_t segment_ = 0;
  std::uint64_t segment_pos_ = 0;
};

inline SamplingRun run_sampler(const BeliefNetwork& net, const Evidence& ev,
                               const SamplerConfig& cfg) {
  SamplingRun run(net, ev, cfg);
  run.run();
  return run;
}

}  // namespace belief_sim
