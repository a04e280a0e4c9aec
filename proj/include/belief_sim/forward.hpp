#pragma once

// Forward samplers that draw every unobserved variable in topological order
// and weight the sample by P(x) / P(selecting x).

#include <cstdint>
#include <span>
#include <vector>

#include "belief_sim/network.hpp"
#include "belief_sim/rng.hpp"

namespace belief_sim {

struct SampleScore {
  double weight = 0.0;  // Z(x | x*_E)
  Assignment assignment;
};

// Instrumentation. `sampled` counts values drawn for unobserved variables;
// `evidence_draws` counts values drawn for observed variables (logic sampling
// only, which simulates evidence nodes and then checks them).
struct InstantiationCounter {
  std::uint64_t sampled = 0;
  std::uint64_t evidence_draws = 0;
};

// Score is the indicator that the simulated evidence nodes match x*_E.
inline void logic_sampling_step(const BeliefNetwork& net, const Evidence& ev,
                                Rng& rng, SampleScore& out,
                                InstantiationCounter* counter = nullptr) {
  Assignment& x = out.assignment;
  if (x.size() != net.size()) x = Assignment(net.size());
  bool match = true;
  for (NodeId j : net.topological_order()) {
    const StateIndex s =
        rng.categorical(net.cpt(j).row(net.row_index(j, x)));
    x.set(j, s);
    if (ev.observed(j)) {
      match = match && s == ev.value(j);
      if (counter) ++counter->evidence_draws;
    } else if (counter) {
      ++counter->sampled;
    }
  }
  out.weight = match ? 1.0 : 0.0;
}

inline SampleScore logic_sampling_step(const BeliefNetwork& net,
                                       const Evidence& ev, Rng& rng) {
  SampleScore out;
  logic_sampling_step(net, ev, rng, out);
  return out;
}

// Evidence clamped, everything else drawn from its CPT given the values
// already in place; the score is the evidence likelihood.
inline void basic_step(const BeliefNetwork& net, const Evidence& ev, Rng& rng,
                       SampleScore& out, InstantiationCounter* counter = nullptr) {
  Assignment& x = out.assignment;
  if (x.size() != net.size()) x = Assignment(net.size());
  double z = 1.0;
  for (NodeId j : net.topological_order()) {
    const std::size_t r = net.row_index(j, x);
    if (ev.observed(j)) {
      const StateIndex s = ev.value(j);
      x.set(j, s);
      z *= net.cpt(j).prob(r, s);
    } else {
      x.set(j, rng.categorical(net.cpt(j).row(r)));
      if (counter) ++counter->sampled;
    }
  }
  out.weight = z;
}

inline SampleScore basic_step(const BeliefNetwork& net, const Evidence& ev,
                              Rng& rng) {
  SampleScore out;
  basic_step(net, ev, rng, out);
  return out;
}

// Unnormalized blanket conditional of j given the rest of x:
//   w(y) = P{y | x_C(j)} * prod_{k in S(j)} P{x_k | y, x_C(k)\j}
// Writes into `w` and returns the sum.
inline double blanket_conditional(const BeliefNetwork& net, const Assignment& x,
                                  NodeId j, std::span<double> w) {
  const Cpt& own = net.cpt(j);
  const std::size_t own_row = net.row_index(j, x);
  const StateIndex current = x.values[j];
  for (StateIndex y = 0; y < w.size(); ++y) w[y] = own.prob(own_row, y);
  for (NodeId k : net.children(j)) {
    const Cpt& c = net.cpt(k);
    const std::size_t stride = net.parent_stride(k, j);
    const std::size_t base = net.row_index(k, x) - current * stride;
    const StateIndex xk = x.values[k];
    for (StateIndex y = 0; y < w.size(); ++y)
      if (w[y] != 0.0) w[y] *= c.prob(base + y * stride, xk);
  }
  double sum = 0.0;
  for (double v : w) sum += v;
  return sum;
}

struct BlanketWeights {
  std::vector<double> weights;  // normalized w(.) times base_z
  bool degenerate = false;      // every substitution had probability zero
};

// Scores every state of j in proportion to its blanket conditional. The
// sampled value of j is ignored except as a fallback when the blanket
// conditional vanishes, in which case all weight goes to the sampled state.
inline BlanketWeights markov_blanket_score(const BeliefNetwork& net,
                                           const Assignment& x, NodeId j,
                                           double base_z) {
  BlanketWeights out;
  out.weights.assign(net.cardinality(j), 0.0);
  const double sum = blanket_conditional(net, x, j, out.weights);
  if (!(sum > 0.0)) {
    out.degenerate = true;
    std::fill(out.weights.begin(), out.weights.end(), 0.0);
    out.weights[x.values[j]] = base_z;
    return out;
  }
  for (double& v : out.weights) v = v / sum * base_z;
  return out;
}

}  // namespace belief_sim
