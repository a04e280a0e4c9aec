#pragma once

// Test-only oracle: exhaustive recursion over every complete assignment with
// its own CPT indexing. Shares nothing with the library's exact engines
// beyond reading the network's tables.

#include <cstddef>
#include <functional>
#include <vector>

#include "belief_sim/network.hpp"

namespace belief_sim::testing {

inline std::size_t row_of(const BeliefNetwork& net, NodeId j,
                          const std::vector<StateIndex>& x) {
  std::size_t r = 0;
  for (NodeId p : net.cpt(j).parents()) r = r * net.cardinality(p) + x[p];
  return r;
}

inline double brute_joint(const BeliefNetwork& net,
                          const std::vector<StateIndex>& x) {
  double p = 1.0;
  for (NodeId j = 0; j < net.size(); ++j)
    p *= net.cpt(j).table()[row_of(net, j, x) * net.cardinality(j) + x[j]];
  return p;
}

inline void for_each_assignment(
    const BeliefNetwork& net,
    const std::function<void(const std::vector<StateIndex>&)>& visit) {
  std::vector<StateIndex> x(net.size(), 0);
  std::function<void(NodeId)> rec = [&](NodeId j) {
    if (j == net.size()) {
      visit(x);
      return;
    }
    for (StateIndex s = 0; s < net.cardinality(j); ++s) {
      x[j] = s;
      rec(j + 1);
    }
  };
  rec(0);
}

struct BruteResult {
  std::vector<std::vector<double>> posterior;  // [node][state]
  double evidence_probability = 0.0;
};

inline BruteResult brute_posteriors(const BeliefNetwork& net, const Evidence& ev) {
  BruteResult r;
  r.posterior.resize(net.size());
  for (NodeId j = 0; j < net.size(); ++j) r.posterior[j].assign(net.cardinality(j), 0.0);
  for_each_assignment(net, [&](const std::vector<StateIndex>& x) {
    for (auto [j, s] : ev.entries())
      if (x[j] != s) return;
    const double p = brute_joint(net, x);
    r.evidence_probability += p;
    for (NodeId j = 0; j < net.size(); ++j) r.posterior[j][x[j]] += p;
  });
  if (r.evidence_probability > 0.0)
    for (auto& v : r.posterior)
      for (double& p : v) p /= r.evidence_probability;
  return r;
}

}  // namespace belief_sim::testing
