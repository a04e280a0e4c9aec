#pragma once

// Discrete belief networks: variables, conditional probability tables,
// evidence, and the graph queries the samplers rely on.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <queue>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace belief_sim {

using NodeId = std::size_t;
using StateIndex = std::size_t;

inline constexpr double kRowSumTolerance = 1e-9;

class NetworkError : public std::runtime_error {
 public:
  enum class Kind { parse, schema, cycle, cpt, unknown_node, evidence };

  NetworkError(Kind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

struct Variable {
  NodeId id = 0;
  std::string name;
  std::vector<std::string> state_names;

  std::size_t cardinality() const noexcept { return state_names.size(); }

  friend bool operator==(const Variable&, const Variable&) = default;
};

// Rows are ordered over parent configurations with the last parent varying
// fastest. Each row is a probability vector over the owner's states.
class Cpt {
 public:
  Cpt() = default;
  Cpt(NodeId owner, std::vector<NodeId> parents, std::size_t cardinality,
      std::vector<double> table)
      : owner_(owner),
        parents_(std::move(parents)),
        cardinality_(cardinality),
        table_(std::move(table)) {}

  NodeId owner() const noexcept { return owner_; }
  const std::vector<NodeId>& parents() const noexcept { return parents_; }
  std::size_t cardinality() const noexcept { return cardinality_; }
  std::size_t row_count() const noexcept {
    return cardinality_ == 0 ? 0 : table_.size() / cardinality_;
  }
  const std::vector<double>& table() const noexcept { return table_; }

  std::span<const double> row(std::size_t r) const {
    return {table_.data() + r * cardinality_, cardinality_};
  }
  double prob(std::size_t r, StateIndex s) const {
    return table_[r * cardinality_ + s];
  }

  // Stride of the i-th parent in the row index. Filled in by BeliefNetwork.
  const std::vector<std::size_t>& parent_strides() const noexcept {
    return strides_;
  }

  friend bool operator==(const Cpt& a, const Cpt& b) {
    return a.owner_ == b.owner_ && a.parents_ == b.parents_ &&
           a.cardinality_ == b.cardinality_ && a.table_ == b.table_;
  }

 private:
  friend class BeliefNetwork;

  NodeId owner_ = 0;
  std::vector<NodeId> parents_;
  std::size_t cardinality_ = 0;
  std::vector<double> table_;
  std::vector<std::size_t> strides_;
};

// A (possibly partial) instantiation of every variable.
struct Assignment {
  std::vector<StateIndex> values;
  std::vector<bool> valid;

  Assignment() = default;
  explicit Assignment(std::size_t n) : values(n, 0), valid(n, false) {}

  static Assignment complete(std::vector<StateIndex> v) {
    Assignment a;
    a.valid.assign(v.size(), true);
    a.values = std::move(v);
    return a;
  }

  std::size_t size() const noexcept { return values.size(); }
  void set(NodeId j, StateIndex s) {
    values[j] = s;
    valid[j] = true;
  }
  bool is_complete() const {
    return std::all_of(valid.begin(), valid.end(), [](bool b) { return b; });
  }

  friend bool operator==(const Assignment&, const Assignment&) = default;
};

// Observed evidence X_E = x*_E, stored densely by node id.
class Evidence {
 public:
  Evidence() = default;
  explicit Evidence(std::size_t node_count) : values_(node_count) {}

  void observe(NodeId j, StateIndex s) {
    if (j >= values_.size()) values_.resize(j + 1);
    values_[j] = s;
  }
  void clear(NodeId j) {
    if (j < values_.size()) values_[j].reset();
  }

  bool observed(NodeId j) const {
    return j < values_.size() && values_[j].has_value();
  }
  StateIndex value(NodeId j) const { return *values_.at(j); }

  std::vector<NodeId> nodes() const {
    std::vector<NodeId> out;
    for (NodeId j = 0; j < values_.size(); ++j)
      if (values_[j]) out.push_back(j);
    return out;
  }
  std::size_t count() const {
    return static_cast<std::size_t>(
        std::count_if(values_.begin(), values_.end(),
                      [](const auto& v) { return v.has_value(); }));
  }
  bool empty() const { return count() == 0; }

  std::vector<std::pair<NodeId, StateIndex>> entries() const {
    std::vector<std::pair<NodeId, StateIndex>> out;
    for (NodeId j = 0; j < values_.size(); ++j)
      if (values_[j]) out.emplace_back(j, *values_[j]);
    return out;
  }

  friend bool operator==(const Evidence& a, const Evidence& b) {
    return a.entries() == b.entries();
  }

 private:
  std::vector<std::optional<StateIndex>> values_;
};

class BeliefNetwork {
 public:
  BeliefNetwork() = default;

  // Validates every invariant: dense ids, cardinality >= 2, one CPT per
  // variable with the right shape and rows summing to 1, and acyclicity.
  BeliefNetwork(std::vector<Variable> variables, std::vector<Cpt> cpts)
      : variables_(std::move(variables)) {
    const std::size_t n = variables_.size();
    for (NodeId j = 0; j < n; ++j) {
      auto& v = variables_[j];
      if (v.id != j)
        throw NetworkError(NetworkError::Kind::schema,
                           "variable '" + v.name + "' has id " +
                               std::to_string(v.id) + ", expected " +
                               std::to_string(j));
      if (v.cardinality() < 2)
        throw NetworkError(NetworkError::Kind::schema,
                           "variable '" + v.name +
                               "' must have at least 2 states");
    }

    cpts_.resize(n);
    std::vector<bool> seen(n, false);
    for (auto& cpt : cpts) {
      const NodeId j = cpt.owner_;
      if (j >= n)
        throw NetworkError(NetworkError::Kind::unknown_node,
                           "CPT for unknown node id " + std::to_string(j));
      if (seen[j])
        throw NetworkError(NetworkError::Kind::cpt,
                           "duplicate CPT for node '" + variables_[j].name +
                               "'");
      seen[j] = true;
      cpts_[j] = std::move(cpt);
    }
    for (NodeId j = 0; j < n; ++j) {
      if (!seen[j])
        throw NetworkError(NetworkError::Kind::cpt,
                           "missing CPT for node '" + variables_[j].name +
                               "'");
      check_cpt(j);
    }

    children_.assign(n, {});
    for (NodeId j = 0; j < n; ++j)
      for (NodeId p : cpts_[j].parents_) children_[p].push_back(j);
    for (auto& c : children_) std::sort(c.begin(), c.end());

    compute_order();
  }

  std::size_t size() const noexcept { return variables_.size(); }
  const std::vector<Variable>& variables() const noexcept { return variables_; }
  const Variable& variable(NodeId j) const { return variables_.at(j); }
  const Cpt& cpt(NodeId j) const { return cpts_.at(j); }
  const std::vector<NodeId>& parents(NodeId j) const {
    return cpts_.at(j).parents();
  }
  const std::vector<NodeId>& children(NodeId j) const {
    return children_.at(j);
  }
  std::size_t cardinality(NodeId j) const {
    return variables_[j].cardinality();
  }

  // Every node appears after all of its parents; ties broken by ascending id.
  const std::vector<NodeId>& topological_order() const noexcept {
    return order_;
  }

  std::optional<NodeId> find(std::string_view name) const {
    for (const auto& v : variables_)
      if (v.name == name) return v.id;
    return std::nullopt;
  }
  NodeId require(std::string_view name) const {
    if (auto id = find(name)) return *id;
    throw NetworkError(NetworkError::Kind::unknown_node,
                       "unknown node '" + std::string(name) + "'");
  }
  std::optional<StateIndex> find_state(NodeId j, std::string_view s) const {
    const auto& names = variables_.at(j).state_names;
    for (StateIndex i = 0; i < names.size(); ++i)
      if (names[i] == s) return i;
    return std::nullopt;
  }

  // Row of node j's CPT selected by the parent values in x.
  std::size_t row_index(NodeId j, const Assignment& x) const {
    return row_index(j, std::span<const StateIndex>(x.values));
  }
  std::size_t row_index(NodeId j, std::span<const StateIndex> values) const {
    const auto& c = cpts_[j];
    std::size_t r = 0;
    for (std::size_t i = 0; i < c.parents_.size(); ++i)
      r += values[c.parents_[i]] * c.strides_[i];
    return r;
  }

  // Stride of `parent` within the row index of `child`'s CPT.
  std::size_t parent_stride(NodeId child, NodeId parent) const {
    const auto& c = cpts_[child];
    for (std::size_t i = 0; i < c.parents_.size(); ++i)
      if (c.parents_[i] == parent) return c.strides_[i];
    throw std::invalid_argument("node is not a parent");
  }

  double conditional(NodeId j, const Assignment& x) const {
    return cpts_[j].prob(row_index(j, x), x.values[j]);
  }

  friend bool operator==(const BeliefNetwork& a, const BeliefNetwork& b) {
    return a.variables_ == b.variables_ && a.cpts_ == b.cpts_;
  }

 private:
  void check_cpt(NodeId j) {
    auto& c = cpts_[j];
    const auto& name = variables_[j].name;
    if (c.cardinality_ != variables_[j].cardinality())
      throw NetworkError(NetworkError::Kind::cpt,
                         "CPT for '" + name + "' has " +
                             std::to_string(c.cardinality_) +
                             " columns, expected " +
                             std::to_string(variables_[j].cardinality()));
    std::vector<NodeId> sorted = c.parents_;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
      throw NetworkError(NetworkError::Kind::cpt,
                         "CPT for '" + name + "' repeats a parent");
    std::size_t rows = 1;
    c.strides_.assign(c.parents_.size(), 0);
    for (std::size_t i = c.parents_.size(); i-- > 0;) {
      const NodeId p = c.parents_[i];
      if (p >= variables_.size())
        throw NetworkError(NetworkError::Kind::unknown_node,
                           "CPT for '" + name + "' names unknown parent id " +
                               std::to_string(p));
      if (p == j)
        throw NetworkError(NetworkError::Kind::cycle,
                           "cycle detected: " + name + " -> " + name);
      c.strides_[i] = rows;
      rows *= variables_[p].cardinality();
    }
    if (c.table_.size() != rows * c.cardinality_)
      throw NetworkError(NetworkError::Kind::cpt,
                         "CPT for '" + name + "' has " +
                             std::to_string(c.row_count()) +
                             " rows, expected " + std::to_string(rows));
    for (std::size_t r = 0; r < rows; ++r) {
      double sum = 0.0;
      for (double p : c.row(r)) {
        if (!std::isfinite(p) || p < 0.0 || p > 1.0)
          throw NetworkError(NetworkError::Kind::cpt,
                             "CPT for '" + name + "' row " +
                                 std::to_string(r) +
                                 " has an entry outside [0, 1]");
        sum += p;
      }
      if (std::abs(sum - 1.0) > kRowSumTolerance) {
        std::ostringstream os;
        os.precision(17);
        os << "CPT for '" << name << "' row " << r << " sums to " << sum
           << ", expected 1";
        throw NetworkError(NetworkError::Kind::cpt, os.str());
      }
    }
  }

  void compute_order() {
    const std::size_t n = variables_.size();
    std::vector<std::size_t> pending(n);
    std::priority_queue<NodeId, std::vector<NodeId>, std::greater<>> ready;
    for (NodeId j = 0; j < n; ++j) {
      pending[j] = cpts_[j].parents_.size();
      if (pending[j] == 0) ready.push(j);
    }
    order_.clear();
    order_.reserve(n);
    while (!ready.empty()) {
      const NodeId j = ready.top();
      ready.pop();
      order_.push_back(j);
      for (NodeId c : children_[j])
        if (--pending[c] == 0) ready.push(c);
    }
    if (order_.size() != n) throw NetworkError(NetworkError::Kind::cycle,
                                               describe_cycle(pending));
  }

  std::string describe_cycle(const std::vector<std::size_t>& pending) const {
    // Walk parent links among unresolved nodes until a node repeats.
    NodeId start = 0;
    while (pending[start] == 0) ++start;
    std::vector<NodeId> path;
    std::vector<std::size_t> pos(variables_.size(), SIZE_MAX);
    NodeId cur = start;
    while (pos[cur] == SIZE_MAX) {
      pos[cur] = path.size();
      path.push_back(cur);
      for (NodeId p : cpts_[cur].parents_)
        if (pending[p] != 0) {
          cur = p;
          break;
        }
    }
    std::string out = "cycle detected: ";
    // path[pos[cur]..] follows parent links; print in arc direction.
    std::vector<NodeId> cycle(path.begin() + pos[cur], path.end());
    std::reverse(cycle.begin(), cycle.end());
    cycle.push_back(cycle.front());
    for (std::size_t i = 0; i < cycle.size(); ++i) {
      if (i) out += " -> ";
      out += variables_[cycle[i]].name;
    }
    return out;
  }

  std::vector<Variable> variables_;
  std::vector<Cpt> cpts_;
  std::vector<std::vector<NodeId>> children_;
  std::vector<NodeId> order_;
};

inline void validate_evidence(const BeliefNetwork& net, const Evidence& ev) {
  for (auto [j, s] : ev.entries()) {
    if (j >= net.size())
      throw NetworkError(NetworkError::Kind::evidence,
                         "evidence on unknown node id " + std::to_string(j));
    if (s >= net.cardinality(j))
      throw NetworkError(NetworkError::Kind::evidence,
                         "evidence state " + std::to_string(s) +
                             " out of range for '" + net.variable(j).name +
                             "'");
  }
}

inline std::vector<NodeId> unobserved_nodes(const BeliefNetwork& net,
                                            const Evidence& ev) {
  std::vector<NodeId> out;
  for (NodeId j = 0; j < net.size(); ++j)
    if (!ev.observed(j)) out.push_back(j);
  return out;
}

inline const std::vector<NodeId>& topological_order(const BeliefNetwork& net) {
  return net.topological_order();
}

// Parents, children, and children's other parents of j, sorted by id.
inline std::vector<NodeId> markov_blanket(const BeliefNetwork& net, NodeId j) {
  if (j >= net.size())
    throw NetworkError(NetworkError::Kind::unknown_node,
                       "unknown node id " + std::to_string(j));
  std::vector<NodeId> out(net.parents(j).begin(), net.parents(j).end());
  for (NodeId c : net.children(j)) {
    out.push_back(c);
    for (NodeId p : net.parents(c))
      if (p != j) out.push_back(p);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

// Ancestral closure of targets and evidence nodes, sorted by id.
inline std::vector<NodeId> relevant_nodes(const BeliefNetwork& net,
                                          std::span<const NodeId> targets,
                                          std::span<const NodeId> evidence) {
  std::vector<bool> keep(net.size(), false);
  std::vector<NodeId> stack;
  auto push = [&](NodeId j) {
    if (j >= net.size())
      throw NetworkError(NetworkError::Kind::unknown_node,
                         "unknown node id " + std::to_string(j));
    if (!keep[j]) {
      keep[j] = true;
      stack.push_back(j);
    }
  };
  for (NodeId j : targets) push(j);
  for (NodeId j : evidence) push(j);
  while (!stack.empty()) {
    const NodeId j = stack.back();
    stack.pop_back();
    for (NodeId p : net.parents(j)) push(p);
  }
  std::vector<NodeId> out;
  for (NodeId j = 0; j < net.size(); ++j)
    if (keep[j]) out.push_back(j);
  return out;
}

// The network restricted to `keep`, which must be closed under parents.
// Node ids are renumbered in ascending order of their original ids.
struct Subnetwork {
  BeliefNetwork network;
  std::vector<NodeId> original_id;  // new id -> original id
  std::vector<std::optional<NodeId>> new_id;  // original id -> new id
};

inline Subnetwork induced_subnetwork(const BeliefNetwork& net,
                                     std::span<const NodeId> keep) {
  Subnetwork sub;
  sub.original_id.assign(keep.begin(), keep.end());
  std::sort(sub.original_id.begin(), sub.original_id.end());
  sub.new_id.assign(net.size(), std::nullopt);
  for (NodeId i = 0; i < sub.original_id.size(); ++i)
    sub.new_id[sub.original_id[i]] = i;

  std::vector<Variable> vars;
  std::vector<Cpt> cpts;
  for (NodeId i = 0; i < sub.original_id.size(); ++i) {
    const NodeId j = sub.original_id[i];
    Variable v = net.variable(j);
    v.id = i;
    vars.push_back(std::move(v));
    std::vector<NodeId> parents;
    for (NodeId p : net.parents(j)) {
      if (!sub.new_id[p])
        throw std::invalid_argument("subnetwork node set is not closed under "
                                    "parents");
      parents.push_back(*sub.new_id[p]);
    }
    const Cpt& c = net.cpt(j);
    cpts.emplace_back(i, std::move(parents), c.cardinality(), c.table());
  }
  sub.network = BeliefNetwork(std::move(vars), std::move(cpts));
  return sub;
}

}  // namespace belief_sim
