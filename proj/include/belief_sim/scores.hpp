#pragma once

// Accumulated sample scores, posterior estimates, standard errors, and the
// root-mean normalized squared error used to compare samplers.

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "belief_sim/exact.hpp"
#include "belief_sim/network.hpp"

namespace belief_sim {

// Identifies which network shape and evidence a table was built against.
struct TableSignature {
  std::vector<std::size_t> cardinalities;
  std::vector<std::pair<NodeId, StateIndex>> evidence;

  friend bool operator==(const TableSignature&, const TableSignature&) = default;
};

// Additive estimator state. Every field is a plain sum, so merging tables is
// fieldwise addition.
//
// Per node j: emissions, sum of base weights Z and Z^2.
// Per (j, s): score = sum of a, where a = Z * I{x_j = s} (plain) or
// Z * w(s) (blanket scoring); plus sum of a^2 and sum of a * Z for the
// ratio-estimator variance.
// Globally: completed samples, sum of Z and Z^2.
class ScoreTable {
 public:
  ScoreTable() = default;
  ScoreTable(const BeliefNetwork& net, const Evidence& ev) {
    sig_.evidence = ev.entries();
    offsets_.push_back(0);
    for (NodeId j = 0; j < net.size(); ++j) {
      sig_.cardinalities.push_back(net.cardinality(j));
      offsets_.push_back(offsets_.back() + net.cardinality(j));
    }
    const std::size_t n = net.size(), cells = offsets_.back();
    score_.assign(cells, 0.0);
    sum_a2_.assign(cells, 0.0);
    sum_az_.assign(cells, 0.0);
    emissions_.assign(n, 0);
    node_z_.assign(n, 0.0);
    node_z2_.assign(n, 0.0);
  }

  const TableSignature& signature() const noexcept { return sig_; }
  std::size_t node_count() const noexcept { return sig_.cardinalities.size(); }
  std::size_t cardinality(NodeId j) const { return sig_.cardinalities.at(j); }

  void add_sample(double z) {
    ++samples_;
    sum_z_ += z;
    sum_z2_ += z * z;
  }

  void score_state(NodeId j, StateIndex s, double z) {
    note_emission(j, z);
    const std::size_t c = offsets_[j] + s;
    score_[c] += z;
    sum_a2_[c] += z * z;
    sum_az_[c] += z * z;
  }

  // `w` must be normalized over the states of j.
  void score_weights(NodeId j, std::span<const double> w, double z) {
    note_emission(j, z);
    for (std::size_t s = 0; s < w.size(); ++s) {
      const double a = w[s] * z;
      const std::size_t c = offsets_[j] + s;
      score_[c] += a;
      sum_a2_[c] += a * a;
      sum_az_[c] += a * z;
    }
  }

  ScoreTable& merge(const ScoreTable& other) {
    if (!(sig_ == other.sig_))
      throw std::invalid_argument(
          "cannot merge score tables with different network/evidence "
          "signatures");
    for (std::size_t c = 0; c < score_.size(); ++c) {
      score_[c] += other.score_[c];
      sum_a2_[c] += other.sum_a2_[c];
      sum_az_[c] += other.sum_az_[c];
    }
    for (std::size_t j = 0; j < emissions_.size(); ++j) {
      emissions_[j] += other.emissions_[j];
      node_z_[j] += other.node_z_[j];
      node_z2_[j] += other.node_z2_[j];
    }
    samples_ += other.samples_;
    sum_z_ += other.sum_z_;
    sum_z2_ += other.sum_z2_;
    return *this;
  }

  double score(NodeId j, StateIndex s) const { return score_[offsets_[j] + s]; }
  double sum_a2(NodeId j, StateIndex s) const { return sum_a2_[offsets_[j] + s]; }
  double sum_az(NodeId j, StateIndex s) const { return sum_az_[offsets_[j] + s]; }
  std::uint64_t emissions(NodeId j) const { return emissions_[j]; }
  double node_z(NodeId j) const { return node_z_[j]; }
  double node_z2(NodeId j) const { return node_z2_[j]; }
  std::uint64_t samples() const noexcept { return samples_; }
  double sum_z() const noexcept { return sum_z_; }
  double sum_z2() const noexcept { return sum_z2_; }

  friend bool operator==(const ScoreTable&, const ScoreTable&) = default;

 private:
  void note_emission(NodeId j, double z) {
    ++emissions_[j];
    node_z_[j] += z;
    node_z2_[j] += z * z;
  }

  TableSignature sig_;
  std::vector<std::size_t> offsets_;
  std::vector<double> score_, sum_a2_, sum_az_;
  std::vector<std::uint64_t> emissions_;
  std::vector<double> node_z_, node_z2_;
  std::uint64_t samples_ = 0;
  double sum_z_ = 0.0, sum_z2_ = 0.0;
};

inline ScoreTable merge(ScoreTable a, const ScoreTable& b) {
  a.merge(b);
  return a;
}

struct StandardErrors {
  std::vector<std::vector<double>> values;  // [node][state]
  std::vector<bool> insufficient;           // fewer than 2 emissions
};

// Delta-method standard error of the ratio estimate sum(a) / sum(Z):
//   se^2 = sum (a_i - p Z_i)^2 / (sum Z_i)^2
// With Z = 1 this is the binomial sqrt(p (1 - p) / n).
inline StandardErrors standard_error(const ScoreTable& t) {
  StandardErrors out;
  const std::size_t n = t.node_count();
  out.values.resize(n);
  out.insufficient.assign(n, false);
  for (NodeId j = 0; j < n; ++j) {
    out.values[j].assign(t.cardinality(j), 0.0);
    const double zsum = t.node_z(j);
    if (t.emissions(j) < 2 || !(zsum > 0.0)) {
      out.insufficient[j] = true;
      continue;
    }
    for (StateIndex s = 0; s < t.cardinality(j); ++s) {
      const double p = t.score(j, s) / zsum;
      const double ss = t.sum_a2(j, s) - 2.0 * p * t.sum_az(j, s) +
                        p * p * t.node_z2(j);
      out.values[j][s] = std::sqrt(std::max(ss, 0.0)) / zsum;
    }
  }
  return out;
}

struct PosteriorEstimate {
  std::vector<std::vector<double>> probabilities;  // [node][state]
  std::vector<std::vector<double>> standard_errors;
  std::vector<bool> all_zero;  // no score mass yet; reported as uniform
  std::vector<bool> scored;    // false for nodes that never receive scores
};

inline PosteriorEstimate normalize(const ScoreTable& t) {
  PosteriorEstimate est;
  const std::size_t n = t.node_count();
  auto se = standard_error(t);
  est.standard_errors = std::move(se.values);
  est.probabilities.resize(n);
  est.all_zero.assign(n, false);
  est.scored.assign(n, true);
  for (auto [j, s] : t.signature().evidence) est.scored[j] = false;
  for (NodeId j = 0; j < n; ++j) {
    const std::size_t card = t.cardinality(j);
    double sum = 0.0;
    for (StateIndex s = 0; s < card; ++s) sum += t.score(j, s);
    auto& p = est.probabilities[j];
    if (!(sum > 0.0)) {
      est.all_zero[j] = true;
      p.assign(card, 1.0 / static_cast<double>(card));
      continue;
    }
    p.resize(card);
    for (StateIndex s = 0; s < card; ++s) p[s] = t.score(j, s) / sum;
  }
  return est;
}

struct ErrorResult {
  double value = 0.0;
  bool defined = false;
  std::size_t included_nodes = 0;
  std::size_t excluded_terms = 0;  // node-states with exact p in {0, 1}
};

// sqrt( (1/|J|) sum_{j in J} (p_hat_j - p_j)^2 / (p_j (1 - p_j)) ) over the
// unobserved nodes J (or `nodes` when given). For a binary node both states
// give the same term; multi-state nodes average the terms of their states.
// Degenerate exact values p in {0, 1} are excluded and the divisor reduced.
inline ErrorResult fertig_mann_error(const PosteriorEstimate& est,
                                     const MarginalTable& exact,
                                     const Evidence& ev,
                                     std::optional<std::vector<NodeId>> nodes = {}) {
  if (exact.inconsistent)
    throw std::invalid_argument("exact marginals flag inconsistent evidence");
  std::vector<NodeId> js;
  if (nodes) {
    js = *nodes;
  } else {
    for (NodeId j = 0; j < exact.marginals.size(); ++j)
      if (!ev.observed(j)) js.push_back(j);
  }
  ErrorResult r;
  double total = 0.0;
  for (NodeId j : js) {
    const auto& p = exact.marginals.at(j);
    const auto& q = est.probabilities.at(j);
    double node_sum = 0.0;
    std::size_t terms = 0;
    for (StateIndex s = 0; s < p.size(); ++s) {
      const double v = p[s] * (1.0 - p[s]);
      if (!(v > 0.0)) {
        ++r.excluded_terms;
        continue;
      }
      node_sum += (q[s] - p[s]) * (q[s] - p[s]) / v;
      ++terms;
    }
    if (terms == 0) continue;
    total += node_sum / static_cast<double>(terms);
    ++r.included_nodes;
  }
  if (r.included_nodes == 0) return r;
  r.defined = true;
  r.value = std::sqrt(total / static_cast<double>(r.included_nodes));
  return r;
}

}  // namespace belief_sim
