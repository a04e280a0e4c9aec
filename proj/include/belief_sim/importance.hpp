#pragma once

// Importance sampling on top of the Basic Algorithm: a replacement sampling
// distribution P' for the unobserved nodes, adaptive (self) and
// likelihood-propagation (heuristic) constructions of P', and the
// configuration-time support check.

#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "belief_sim/forward.hpp"
#include "belief_sim/network.hpp"
#include "belief_sim/rng.hpp"

namespace belief_sim {

class ImportanceError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// One replacement table per node with the same shape as the node's CPT.
// Rows of observed nodes are never consulted.
//
// `likelihood_zero[j][s]` marks states whose evidence likelihood is known to
// be zero; P' may drop those states even where the prior row allows them.
class ImportanceDistribution {
 public:
  ImportanceDistribution() = default;

  static ImportanceDistribution from_network(const BeliefNetwork& net) {
    ImportanceDistribution d;
    d.tables_.reserve(net.size());
    for (NodeId j = 0; j < net.size(); ++j) {
      d.tables_.push_back(net.cpt(j).table());
      d.cards_.push_back(net.cardinality(j));
      d.likelihood_zero_.emplace_back(net.cardinality(j), false);
    }
    return d;
  }

  std::size_t size() const noexcept { return tables_.size(); }
  std::size_t cardinality(NodeId j) const { return cards_.at(j); }

  std::span<const double> row(NodeId j, std::size_t r) const {
    return {tables_[j].data() + r * cards_[j], cards_[j]};
  }
  std::span<double> row(NodeId j, std::size_t r) {
    return {tables_[j].data() + r * cards_[j], cards_[j]};
  }
  double prob(NodeId j, std::size_t r, StateIndex s) const {
    return tables_[j][r * cards_[j] + s];
  }

  std::vector<double>& table(NodeId j) { return tables_.at(j); }
  const std::vector<double>& table(NodeId j) const { return tables_.at(j); }

  std::vector<bool>& likelihood_zero(NodeId j) { return likelihood_zero_.at(j); }
  const std::vector<bool>& likelihood_zero(NodeId j) const {
    return likelihood_zero_.at(j);
  }

  friend bool operator==(const ImportanceDistribution&,
                         const ImportanceDistribution&) = default;

 private:
  std::vector<std::vector<double>> tables_;
  std::vector<std::size_t> cards_;
  std::vector<std::vector<bool>> likelihood_zero_;
};

// Returns a description of the first problem found, or nothing if P' can be
// used to sample: matching shape, probability rows, and P'(s | r) > 0
// wherever P(s | r) > 0 (unless s is marked likelihood-zero).
inline std::optional<std::string> check_support(const BeliefNetwork& net,
                                                const Evidence& ev,
                                                const ImportanceDistribution& q) {
  if (q.size() != net.size())
    return "importance distribution covers " + std::to_string(q.size()) +
           " nodes, network has " + std::to_string(net.size());
  for (NodeId j = 0; j < net.size(); ++j) {
    const Cpt& c = net.cpt(j);
    const auto& name = net.variable(j).name;
    if (q.cardinality(j) != c.cardinality() ||
        q.table(j).size() != c.table().size() ||
        q.likelihood_zero(j).size() != c.cardinality())
      return "importance table for '" + name + "' has the wrong shape";
    if (ev.observed(j)) continue;
    for (std::size_t r = 0; r < c.row_count(); ++r) {
      const auto row = q.row(j, r);
      double sum = 0.0;
      for (StateIndex s = 0; s < row.size(); ++s) {
        const double v = row[s];
        if (!std::isfinite(v) || v < 0.0 || v > 1.0)
          return "importance row " + std::to_string(r) + " of '" + name +
                 "' has an entry outside [0, 1]";
        if (v == 0.0 && c.prob(r, s) > 0.0 && !q.likelihood_zero(j)[s])
          return "importance row " + std::to_string(r) + " of '" + name +
                 "' gives zero probability to state '" +
                 net.variable(j).state_names[s] +
                 "', which the network can produce";
        sum += v;
      }
      if (std::abs(sum - 1.0) > kRowSumTolerance)
        return "importance row " + std::to_string(r) + " of '" + name +
               "' does not sum to 1";
    }
  }
  return std::nullopt;
}

inline void require_support(const BeliefNetwork& net, const Evidence& ev,
                            const ImportanceDistribution& q) {
  if (auto problem = check_support(net, ev, q)) throw ImportanceError(*problem);
}

// Unobserved nodes drawn from P'; observed nodes clamped. Score is
//   prod_{k in N} P(x_k | x_C(k)) / prod_{k not in E} P'(x_k | x_C(k)),
// accumulated node by node in topological order.
inline void importance_step(const BeliefNetwork& net, const Evidence& ev,
                            const ImportanceDistribution& q, Rng& rng,
                            SampleScore& out,
                            InstantiationCounter* counter = nullptr) {
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
      const StateIndex s = rng.categorical(q.row(j, r));
      x.set(j, s);
      z *= net.cpt(j).prob(r, s) / q.prob(j, r, s);
      if (counter) ++counter->sampled;
    }
  }
  out.weight = z;
}

inline SampleScore importance_step(const BeliefNetwork& net, const Evidence& ev,
                                   const ImportanceDistribution& q, Rng& rng) {
  SampleScore out;
  importance_step(net, ev, q, rng, out);
  return out;
}

// Running weights W = P'_0 + (sum of sample scores) per cell (node, realized
// parent row, realized state) of every unobserved node. apply() sets P' to
// the normalized rows of W for rows that gained score since the last apply;
// W itself is never rescaled, so early scores keep their weight.
class SelfImportanceAccumulator {
 public:
  SelfImportanceAccumulator() = default;
  SelfImportanceAccumulator(const BeliefNetwork& net, const ImportanceDistribution& initial) {
    for (NodeId j = 0; j < net.size(); ++j) {
      weights_.push_back(initial.table(j));
      touched_.emplace_back(net.cpt(j).row_count(), false);
    }
  }

  void add(const BeliefNetwork& net, const Evidence& ev, const SampleScore& s) {
    if (s.weight == 0.0) return;
    for (NodeId j = 0; j < net.size(); ++j) {
      if (ev.observed(j)) continue;
      const std::size_t r = net.row_index(j, s.assignment);
      weights_[j][r * net.cardinality(j) + s.assignment.values[j]] += s.weight;
      touched_[j][r] = true;
    }
    any_ = true;
  }

  // P'_new(. | r) proportional to W(. | r), for rows that received score.
  // Other rows keep their values.
  void apply(const BeliefNetwork& net, const Evidence& ev,
             ImportanceDistribution& q) {
    if (!any_) return;
    for (NodeId j = 0; j < net.size(); ++j) {
      if (ev.observed(j)) continue;
      const std::size_t card = net.cardinality(j);
      for (std::size_t r = 0; r < touched_[j].size(); ++r) {
        if (!touched_[j][r]) continue;
        touched_[j][r] = false;
        const double* w = weights_[j].data() + r * card;
        double total = 0.0;
        for (StateIndex s = 0; s < card; ++s) total += w[s];
        auto row = q.row(j, r);
        for (StateIndex s = 0; s < card; ++s) row[s] = w[s] / total;
      }
    }
    any_ = false;
  }

 private:
  std::vector<std::vector<double>> weights_;
  std::vector<std::vector<bool>> touched_;
  bool any_ = false;
};

inline ImportanceDistribution self_importance_update(
    const BeliefNetwork& net, const Evidence& ev, ImportanceDistribution q,
    std::span<const SampleScore> batch) {
  SelfImportanceAccumulator acc(net, q);
  for (const auto& s : batch) acc.add(net, ev, s);
  acc.apply(net, ev, q);
  return q;
}

struct HeuristicImportance {
  ImportanceDistribution distribution;
  std::vector<std::vector<double>> lambda;  // per node, scaled to max 1
  // Rows where lambda * P vanished; P is used for them instead.
  std::vector<std::pair<NodeId, std::size_t>> fallback_rows;
};

namespace detail {

// Prior marginals by one forward pass that treats parents as independent.
inline std::vector<std::vector<double>> independent_prior_marginals(
    const BeliefNetwork& net) {
  std::vector<std::vector<double>> pi(net.size());
  for (NodeId j : net.topological_order()) {
    const Cpt& c = net.cpt(j);
    pi[j].assign(c.cardinality(), 0.0);
    std::vector<StateIndex> idx(c.parents().size(), 0);
    for (std::size_t r = 0; r < c.row_count(); ++r) {
      double weight = 1.0;
      for (std::size_t i = 0; i < idx.size(); ++i)
        weight *= pi[c.parents()[i]][idx[i]];
      if (weight > 0.0)
        for (StateIndex s = 0; s < c.cardinality(); ++s)
          pi[j][s] += weight * c.prob(r, s);
      for (std::size_t d = idx.size(); d-- > 0;) {
        if (++idx[d] < net.cardinality(c.parents()[d])) break;
        idx[d] = 0;
      }
    }
  }
  return pi;
}

}  // namespace detail

// One backward likelihood pass as if the network were singly connected:
// lambda(x_j) is the product of messages from j's children, each child
// message marginalizing the child's CPT against lambda(child) and the
// co-parents' prior marginals (observed co-parents use their observed value).
// Then P'(x_j | x_C(j)) is proportional to lambda(x_j) P(x_j | x_C(j)).
inline HeuristicImportance heuristic_importance_build(const BeliefNetwork& net,
                                                      const Evidence& ev) {
  validate_evidence(net, ev);
  const std::size_t n = net.size();
  const auto pi = detail::independent_prior_marginals(net);

  std::vector<bool> informed(n, false);  // observed or has observed descendant
  const auto& order = net.topological_order();
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const NodeId j = *it;
    informed[j] = ev.observed(j);
    for (NodeId k : net.children(j)) informed[j] = informed[j] || informed[k];
  }

  auto coparent_weight = [&](NodeId i, StateIndex s) {
    if (ev.observed(i)) return ev.value(i) == s ? 1.0 : 0.0;
    return pi[i][s];
  };

  std::vector<std::vector<double>> lambda(n);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const NodeId j = *it;
    const std::size_t card = net.cardinality(j);
    lambda[j].assign(card, 1.0);
    if (ev.observed(j)) {
      std::fill(lambda[j].begin(), lambda[j].end(), 0.0);
      lambda[j][ev.value(j)] = 1.0;
      continue;
    }
    if (!informed[j]) continue;
    for (NodeId k : net.children(j)) {
      if (!informed[k]) continue;
      const Cpt& c = net.cpt(k);
      std::vector<double> msg(card, 0.0);
      std::vector<StateIndex> idx(c.parents().size(), 0);
      std::size_t jpos = 0;
      for (std::size_t i = 0; i < c.parents().size(); ++i)
        if (c.parents()[i] == j) jpos = i;
      for (std::size_t r = 0; r < c.row_count(); ++r) {
        double weight = 1.0;
        for (std::size_t i = 0; i < idx.size() && weight > 0.0; ++i)
          if (i != jpos) weight *= coparent_weight(c.parents()[i], idx[i]);
        if (weight > 0.0) {
          double like = 0.0;
          for (StateIndex s = 0; s < c.cardinality(); ++s)
            like += lambda[k][s] * c.prob(r, s);
          msg[idx[jpos]] += weight * like;
        }
        for (std::size_t d = idx.size(); d-- > 0;) {
          if (++idx[d] < net.cardinality(c.parents()[d])) break;
          idx[d] = 0;
        }
      }
      for (StateIndex s = 0; s < card; ++s) lambda[j][s] *= msg[s];
    }
    double top = 0.0;
    for (double v : lambda[j]) top = std::max(top, v);
    if (top > 0.0)
      for (double& v : lambda[j]) v /= top;
  }

  HeuristicImportance out;
  out.distribution = ImportanceDistribution::from_network(net);
  for (NodeId j = 0; j < n; ++j) {
    if (ev.observed(j) || !informed[j]) continue;
    const Cpt& c = net.cpt(j);
    auto& zero = out.distribution.likelihood_zero(j);
    for (StateIndex s = 0; s < c.cardinality(); ++s) zero[s] = lambda[j][s] == 0.0;
    for (std::size_t r = 0; r < c.row_count(); ++r) {
      auto row = out.distribution.row(j, r);
      double total = 0.0;
      for (StateIndex s = 0; s < row.size(); ++s) {
        row[s] = lambda[j][s] * c.prob(r, s);
        total += row[s];
      }
      if (!(total > 0.0)) {
        auto prior = c.row(r);
        std::copy(prior.begin(), prior.end(), row.begin());
        out.fallback_rows.emplace_back(j, r);
        continue;
      }
      for (double& v : row) v /= total;
    }
  }
  out.lambda = std::move(lambda);
  return out;
}

}  // namespace belief_sim
