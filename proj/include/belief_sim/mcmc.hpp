#pragma once

// Markov-chain baselines: single-site resampling from the Markov-blanket
// conditional (stochastic simulation), and independent restarts that only
// score the chain's final state.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "belief_sim/forward.hpp"
#include "belief_sim/network.hpp"
#include "belief_sim/rng.hpp"
#include "belief_sim/scores.hpp"

namespace belief_sim {

enum class Scoring { plain, markov_blanket };

class ChainInitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ChainState {
  Assignment x;
  std::uint64_t iteration = 0;
  std::vector<NodeId> free_nodes;  // unobserved nodes, ascending id
};

// One Basic-Algorithm forward pass with evidence clamped. A pass whose
// evidence likelihood is zero is redrawn, up to `retry_limit` attempts.
inline ChainState initialize_chain(const BeliefNetwork& net, const Evidence& ev,
                                   Rng& rng, std::size_t retry_limit = 100,
                                   InstantiationCounter* counter = nullptr) {
  ChainState st;
  st.free_nodes = unobserved_nodes(net, ev);
  SampleScore s;
  for (std::size_t attempt = 0; attempt < retry_limit; ++attempt) {
    basic_step(net, ev, rng, s, counter);
    if (s.weight > 0.0) {
      st.x = std::move(s.assignment);
      return st;
    }
  }
  throw ChainInitError("chain initialization drew a zero-probability "
                       "configuration " +
                       std::to_string(retry_limit) + " times");
}

struct Emission {
  NodeId node = 0;
  std::vector<double> weights;  // unit vector (plain) or blanket conditional
  bool degenerate = false;      // blanket conditional was all zero
};

// Picks an unobserved node uniformly, redraws it from its normalized blanket
// conditional, and reports the score for that node. If the conditional is
// all zero the node keeps its value and is scored on it.
inline Emission pearl_step(const BeliefNetwork& net, ChainState& st, Rng& rng,
                           Scoring scoring,
                           InstantiationCounter* counter = nullptr) {
  if (st.free_nodes.empty())
    throw std::logic_error("pearl_step on a chain with no unobserved nodes");
  Emission e;
  e.node = st.free_nodes[rng.index(st.free_nodes.size())];
  e.weights.assign(net.cardinality(e.node), 0.0);
  const double sum = blanket_conditional(net, st.x, e.node, e.weights);
  ++st.iteration;
  if (counter) ++counter->sampled;
  if (!(sum > 0.0)) {
    e.degenerate = true;
    std::fill(e.weights.begin(), e.weights.end(), 0.0);
    e.weights[st.x.values[e.node]] = 1.0;
    return e;
  }
  for (double& w : e.weights) w /= sum;
  const StateIndex s = rng.categorical(e.weights);
  st.x.set(e.node, s);
  if (scoring == Scoring::plain) {
    std::fill(e.weights.begin(), e.weights.end(), 0.0);
    e.weights[s] = 1.0;
  }
  return e;
}

// Overload taking the evidence for symmetry with the forward samplers; the
// chain state already excludes observed nodes.
inline Emission pearl_step(const BeliefNetwork& net, const Evidence&,
                           ChainState& st, Rng& rng, Scoring scoring) {
  return pearl_step(net, st, rng, scoring);
}

inline void record(ScoreTable& table, const Emission& e) {
  table.score_weights(e.node, e.weights, 1.0);
}

// Scores every unobserved node of the chain's current state: the state itself
// (plain) or the blanket conditional (markov_blanket).
inline void score_chain_state(const BeliefNetwork& net, const ChainState& st,
                              Scoring scoring, ScoreTable& table,
                              std::size_t* degenerate = nullptr) {
  for (NodeId j : st.free_nodes) {
    if (scoring == Scoring::plain) {
      table.score_state(j, st.x.values[j], 1.0);
    } else {
      const auto w = markov_blanket_score(net, st.x, j, 1.0);
      if (w.degenerate && degenerate) ++*degenerate;
      table.score_weights(j, w.weights, 1.0);
    }
  }
  table.add_sample(1.0);
}

struct ChavezConfig {
  std::uint64_t steps = 0;     // total single-site steps across all chains
  std::size_t restarts = 10;
  std::size_t init_retry_limit = 100;
};

// Segment lengths for the restart schedule: equal shares, remainder to the
// last chain.
inline std::vector<std::uint64_t> restart_segments(std::uint64_t steps,
                                                   std::size_t restarts) {
  if (restarts == 0) throw std::invalid_argument("restarts must be >= 1");
  if (steps < restarts)
    throw std::invalid_argument("step budget smaller than the restart count");
  std::vector<std::uint64_t> seg(restarts, steps / restarts);
  seg.back() += steps % restarts;
  return seg;
}

inline ScoreTable chavez_run(const BeliefNetwork& net, const Evidence& ev,
                             const ChavezConfig& cfg, Rng& rng, Scoring scoring) {
  ScoreTable table(net, ev);
  if (unobserved_nodes(net, ev).empty()) return table;
  for (std::uint64_t len : restart_segments(cfg.steps, cfg.restarts)) {
    ChainState st = initialize_chain(net, ev, rng, cfg.init_retry_limit);
    for (std::uint64_t i = 0; i < len; ++i) pearl_step(net, st, rng, scoring);
    score_chain_state(net, st, scoring, table);
  }
  return table;
}

}  // namespace belief_sim
