#pragma once

// Exact posterior marginals for desk-scale networks. Enumeration is the
// reference; variable elimination (min-degree ordering) is cross-checked
// against it.

#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "belief_sim/network.hpp"

namespace belief_sim {

inline constexpr std::uint64_t kDefaultEnumerationCap = std::uint64_t{1} << 24;

class OracleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct MarginalTable {
  // marginals[j][s] = P{X_j = s | x*_E}; observed nodes hold an indicator.
  std::vector<std::vector<double>> marginals;
  std::vector<bool> observed;
  double evidence_probability = 0.0;
  bool inconsistent = false;
};

enum class ExactEngine { enumeration, elimination };

inline double joint_probability(const BeliefNetwork& net, const Assignment& x) {
  if (x.size() != net.size() || !x.is_complete())
    throw std::invalid_argument("joint_probability needs a complete assignment");
  double p = 1.0;
  for (NodeId k = 0; k < net.size(); ++k) {
    p *= net.conditional(k, x);
    if (p == 0.0) break;
  }
  return p;
}

namespace detail {

inline MarginalTable finish_table(const BeliefNetwork& net, const Evidence& ev,
                                  std::vector<std::vector<double>> mass,
                                  double pe) {
  MarginalTable t;
  t.observed.assign(net.size(), false);
  t.evidence_probability = pe;
  t.inconsistent = !(pe > 0.0);
  for (NodeId j = 0; j < net.size(); ++j) {
    if (ev.observed(j)) {
      t.observed[j] = true;
      mass[j].assign(net.cardinality(j), 0.0);
      mass[j][ev.value(j)] = 1.0;
      continue;
    }
    if (!t.inconsistent)
      for (double& m : mass[j]) m /= pe;
  }
  t.marginals = std::move(mass);
  return t;
}

// Dense table over an ordered variable list, last variable fastest.
struct Factor {
  std::vector<NodeId> vars;
  std::vector<std::size_t> cards;
  std::vector<double> values;

  std::size_t position(NodeId v) const {
    for (std::size_t i = 0; i < vars.size(); ++i)
      if (vars[i] == v) return i;
    return SIZE_MAX;
  }
};

inline Factor factor_from_cpt(const BeliefNetwork& net, NodeId j,
                              const Evidence& ev) {
  const Cpt& c = net.cpt(j);
  Factor f;
  for (NodeId p : c.parents()) f.vars.push_back(p);
  f.vars.push_back(j);
  for (NodeId v : f.vars) f.cards.push_back(net.cardinality(v));
  f.values = c.table();  // rows (parents, last fastest) x states
  // Restrict observed variables one at a time.
  for (NodeId v : std::vector<NodeId>(f.vars)) {
    if (!ev.observed(v)) continue;
    const std::size_t pos = f.position(v);
    std::size_t inner = 1;
    for (std::size_t i = pos + 1; i < f.vars.size(); ++i) inner *= f.cards[i];
    const std::size_t card = f.cards[pos];
    const std::size_t outer = f.values.size() / (inner * card);
    std::vector<double> out;
    out.reserve(outer * inner);
    for (std::size_t o = 0; o < outer; ++o)
      for (std::size_t i = 0; i < inner; ++i)
        out.push_back(f.values[(o * card + ev.value(v)) * inner + i]);
    f.values = std::move(out);
    f.vars.erase(f.vars.begin() + pos);
    f.cards.erase(f.cards.begin() + pos);
  }
  return f;
}

inline Factor multiply(const Factor& a, const Factor& b) {
  Factor r;
  r.vars = a.vars;
  r.cards = a.cards;
  for (std::size_t i = 0; i < b.vars.size(); ++i)
    if (r.position(b.vars[i]) == SIZE_MAX) {
      r.vars.push_back(b.vars[i]);
      r.cards.push_back(b.cards[i]);
    }
  std::size_t size = 1;
  for (auto c : r.cards) size *= c;
  r.values.assign(size, 0.0);

  auto strides_in = [&](const Factor& f) {
    std::vector<std::size_t> s(r.vars.size(), 0);
    std::size_t stride = 1;
    for (std::size_t i = f.vars.size(); i-- > 0;) {
      s[r.position(f.vars[i])] = stride;
      stride *= f.cards[i];
    }
    return s;
  };
  const auto sa = strides_in(a);
  const auto sb = strides_in(b);
  std::vector<std::size_t> idx(r.vars.size(), 0);
  std::size_t ia = 0, ib = 0;
  for (std::size_t k = 0; k < size; ++k) {
    r.values[k] = a.values[ia] * b.values[ib];
    for (std::size_t d = r.vars.size(); d-- > 0;) {
      if (++idx[d] < r.cards[d]) {
        ia += sa[d];
        ib += sb[d];
        break;
      }
      ia -= sa[d] * (r.cards[d] - 1);
      ib -= sb[d] * (r.cards[d] - 1);
      idx[d] = 0;
    }
  }
  return r;
}

inline Factor sum_out(const Factor& f, NodeId v) {
  const std::size_t pos = f.position(v);
  std::size_t inner = 1;
  for (std::size_t i = pos + 1; i < f.vars.size(); ++i) inner *= f.cards[i];
  const std::size_t card = f.cards[pos];
  const std::size_t outer = f.values.size() / (inner * card);
  Factor r;
  r.vars = f.vars;
  r.cards = f.cards;
  r.vars.erase(r.vars.begin() + pos);
  r.cards.erase(r.cards.begin() + pos);
  r.values.assign(outer * inner, 0.0);
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t s = 0; s < card; ++s)
      for (std::size_t i = 0; i < inner; ++i)
        r.values[o * inner + i] += f.values[(o * card + s) * inner + i];
  return r;
}

// Eliminates every variable in `eliminate` (min-degree, ties by id) and
// returns the product of what remains.
inline Factor eliminate_all(std::vector<Factor> factors,
                            std::vector<NodeId> eliminate) {
  while (!eliminate.empty()) {
    std::size_t best = 0, best_degree = SIZE_MAX;
    for (std::size_t i = 0; i < eliminate.size(); ++i) {
      std::vector<NodeId> nbrs;
      for (const auto& f : factors)
        if (f.position(eliminate[i]) != SIZE_MAX)
          nbrs.insert(nbrs.end(), f.vars.begin(), f.vars.end());
      std::sort(nbrs.begin(), nbrs.end());
      nbrs.erase(std::unique(nbrs.begin(), nbrs.end()), nbrs.end());
      if (nbrs.size() < best_degree ||
          (nbrs.size() == best_degree && eliminate[i] < eliminate[best])) {
        best = i;
        best_degree = nbrs.size();
      }
    }
    const NodeId v = eliminate[best];
    eliminate.erase(eliminate.begin() + best);
    Factor prod{{}, {}, {1.0}};
    std::vector<Factor> rest;
    for (auto& f : factors) {
      if (f.position(v) != SIZE_MAX)
        prod = multiply(prod, f);
      else
        rest.push_back(std::move(f));
    }
    rest.push_back(sum_out(prod, v));
    factors = std::move(rest);
  }
  Factor prod{{}, {}, {1.0}};
  for (const auto& f : factors) prod = multiply(prod, f);
  return prod;
}

}  // namespace detail

inline MarginalTable exact_by_enumeration(
    const BeliefNetwork& net, const Evidence& ev,
    std::uint64_t cap = kDefaultEnumerationCap) {
  validate_evidence(net, ev);
  const auto free = unobserved_nodes(net, ev);
  std::uint64_t space = 1;
  for (NodeId j : free) {
    space *= net.cardinality(j);
    if (space > cap)
      throw OracleError("state space exceeds the enumeration cap of " +
                        std::to_string(cap) + " configurations");
  }

  std::vector<std::vector<double>> mass(net.size());
  for (NodeId j = 0; j < net.size(); ++j) mass[j].assign(net.cardinality(j), 0.0);

  Assignment x(net.size());
  for (auto [j, s] : ev.entries()) x.set(j, s);
  for (NodeId j : free) x.set(j, 0);
  double pe = 0.0;
  for (std::uint64_t k = 0; k < space; ++k) {
    const double p = joint_probability(net, x);
    pe += p;
    for (NodeId j : free) mass[j][x.values[j]] += p;
    for (std::size_t d = free.size(); d-- > 0;) {
      const NodeId j = free[d];
      if (++x.values[j] < net.cardinality(j)) break;
      x.values[j] = 0;
    }
  }
  return detail::finish_table(net, ev, std::move(mass), pe);
}

inline MarginalTable exact_by_elimination(const BeliefNetwork& net,
                                          const Evidence& ev) {
  validate_evidence(net, ev);
  std::vector<detail::Factor> base;
  for (NodeId j = 0; j < net.size(); ++j)
    base.push_back(detail::factor_from_cpt(net, j, ev));
  const auto free = unobserved_nodes(net, ev);

  const double pe = detail::eliminate_all(base, free).values.at(0);
  std::vector<std::vector<double>> mass(net.size());
  for (NodeId j = 0; j < net.size(); ++j) {
    mass[j].assign(net.cardinality(j), 0.0);
    if (ev.observed(j)) continue;
    std::vector<NodeId> others;
    for (NodeId k : free)
      if (k != j) others.push_back(k);
    const auto f = detail::eliminate_all(base, others);
    mass[j] = f.values;
  }
  return detail::finish_table(net, ev, std::move(mass), pe);
}

inline MarginalTable exact_posteriors(const BeliefNetwork& net,
                                      const Evidence& ev,
                                      ExactEngine engine = ExactEngine::enumeration,
                                      std::uint64_t cap = kDefaultEnumerationCap) {
  return engine == ExactEngine::enumeration ? exact_by_enumeration(net, ev, cap)
                                            : exact_by_elimination(net, ev);
}

}  // namespace belief_sim
