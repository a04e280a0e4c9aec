#pragma once

// Reading and writing the network and evidence documents (JSON).
//
// Network document:
//   { "comment": "...",                                   (optional)
//     "variables": [ {"name": "A", "states": ["true", "false"]}, ... ],
//     "cpts": [ {"node": "A", "parents": ["B", "C"], "rows": [[...], ...]} ] }
//
// Rows run over parent configurations with the last parent varying fastest.
// Evidence document: { "node-name": "state-name", ... }.
// Unknown fields are rejected.

#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>

#include "belief_sim/network.hpp"
#include "json.hpp"

namespace belief_sim {

namespace detail {

using Json = nlohmann::ordered_json;

inline std::string line_col(std::string_view text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

[[noreturn]] inline void schema_error(const std::string& where,
                                      const std::string& what) {
  throw NetworkError(NetworkError::Kind::schema, where + ": " + what);
}

inline Json parse_json(std::string_view text) {
  try {
    return Json::parse(text.begin(), text.end());
  } catch (const Json::parse_error& e) {
    const std::size_t byte = e.byte == 0 ? 0 : e.byte - 1;
    throw NetworkError(NetworkError::Kind::parse,
                       "parse error at " + line_col(text, byte) + ": " +
                           e.what());
  }
}

inline void only_fields(const Json& obj, const std::string& where,
                        std::initializer_list<std::string_view> allowed) {
  if (!obj.is_object()) schema_error(where, "expected an object");
  for (const auto& [key, _] : obj.items()) {
    bool ok = false;
    for (auto a : allowed) ok = ok || key == a;
    if (!ok) schema_error(where, "unknown field '" + key + "'");
  }
}

inline const Json& field(const Json& obj, const std::string& where,
                         const char* key) {
  auto it = obj.find(key);
  if (it == obj.end())
    schema_error(where, std::string("missing field '") + key + "'");
  return *it;
}

inline std::string string_field(const Json& j, const std::string& where) {
  if (!j.is_string()) schema_error(where, "expected a string");
  return j.get<std::string>();
}

}  // namespace detail

inline BeliefNetwork parse_network(std::string_view text) {
  using detail::Json;
  const Json doc = detail::parse_json(text);
  detail::only_fields(doc, "document", {"variables", "cpts", "comment"});
  if (auto it = doc.find("comment"); it != doc.end() && !it->is_string())
    detail::schema_error("comment", "expected a string");

  const Json& jvars = detail::field(doc, "document", "variables");
  if (!jvars.is_array()) detail::schema_error("variables", "expected a list");
  std::vector<Variable> vars;
  std::map<std::string, NodeId> ids;
  for (std::size_t i = 0; i < jvars.size(); ++i) {
    const std::string where = "variables[" + std::to_string(i) + "]";
    const Json& jv = jvars[i];
    detail::only_fields(jv, where, {"name", "states"});
    Variable v;
    v.id = i;
    v.name = detail::string_field(detail::field(jv, where, "name"),
                                  where + ".name");
    if (v.name.empty()) detail::schema_error(where, "empty name");
    const Json& js = detail::field(jv, where, "states");
    if (!js.is_array()) detail::schema_error(where + ".states", "expected a list");
    std::set<std::string> seen;
    for (std::size_t s = 0; s < js.size(); ++s) {
      auto name = detail::string_field(
          js[s], where + ".states[" + std::to_string(s) + "]");
      if (!seen.insert(name).second)
        detail::schema_error(where, "duplicate state '" + name + "'");
      v.state_names.push_back(std::move(name));
    }
    if (v.state_names.size() < 2)
      detail::schema_error(where, "variable '" + v.name +
                                      "' needs at least 2 states");
    if (!ids.emplace(v.name, i).second)
      detail::schema_error(where, "duplicate variable '" + v.name + "'");
    vars.push_back(std::move(v));
  }

  const Json& jcpts = detail::field(doc, "document", "cpts");
  if (!jcpts.is_array()) detail::schema_error("cpts", "expected a list");
  std::vector<Cpt> cpts;
  for (std::size_t i = 0; i < jcpts.size(); ++i) {
    const std::string where = "cpts[" + std::to_string(i) + "]";
    const Json& jc = jcpts[i];
    detail::only_fields(jc, where, {"node", "parents", "rows"});
    auto lookup = [&](const Json& j, const std::string& w) {
      auto name = detail::string_field(j, w);
      auto it = ids.find(name);
      if (it == ids.end())
        throw NetworkError(NetworkError::Kind::unknown_node,
                           w + ": unknown node '" + name + "'");
      return it->second;
    };
    const NodeId owner = lookup(detail::field(jc, where, "node"), where + ".node");
    std::vector<NodeId> parents;
    if (auto it = jc.find("parents"); it != jc.end()) {
      if (!it->is_array())
        detail::schema_error(where + ".parents", "expected a list");
      for (std::size_t p = 0; p < it->size(); ++p)
        parents.push_back(
            lookup((*it)[p], where + ".parents[" + std::to_string(p) + "]"));
    }
    const Json& jrows = detail::field(jc, where, "rows");
    if (!jrows.is_array()) detail::schema_error(where + ".rows", "expected a list");
    const std::size_t card = vars[owner].cardinality();
    std::vector<double> table;
    for (std::size_t r = 0; r < jrows.size(); ++r) {
      const std::string rw = where + ".rows[" + std::to_string(r) + "]";
      const Json& row = jrows[r];
      if (!row.is_array()) detail::schema_error(rw, "expected a list");
      if (row.size() != card)
        throw NetworkError(NetworkError::Kind::cpt,
                           rw + ": CPT for '" + vars[owner].name +
                               "' row has " + std::to_string(row.size()) +
                               " entries, expected " + std::to_string(card));
      for (const auto& p : row) {
        if (!p.is_number()) detail::schema_error(rw, "expected numbers");
        table.push_back(p.get<double>());
      }
    }
    cpts.emplace_back(owner, std::move(parents), card, std::move(table));
  }
  return BeliefNetwork(std::move(vars), std::move(cpts));
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw NetworkError(NetworkError::Kind::parse, "cannot open '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

inline BeliefNetwork load_network(const std::string& path) {
  return parse_network(read_file(path));
}

// Canonical form: variables in id order, one CPT per variable in id order.
inline std::string serialize_network(const BeliefNetwork& net,
                                     const std::string& comment = {}) {
  using detail::Json;
  Json doc = Json::object();
  if (!comment.empty()) doc["comment"] = comment;
  Json vars = Json::array();
  for (const auto& v : net.variables())
    vars.push_back({{"name", v.name}, {"states", v.state_names}});
  doc["variables"] = std::move(vars);
  Json cpts = Json::array();
  for (NodeId j = 0; j < net.size(); ++j) {
    const Cpt& c = net.cpt(j);
    Json parents = Json::array();
    for (NodeId p : c.parents()) parents.push_back(net.variable(p).name);
    Json rows = Json::array();
    for (std::size_t r = 0; r < c.row_count(); ++r) {
      auto row = c.row(r);
      rows.push_back(std::vector<double>(row.begin(), row.end()));
    }
    cpts.push_back({{"node", net.variable(j).name},
                    {"parents", std::move(parents)},
                    {"rows", std::move(rows)}});
  }
  doc["cpts"] = std::move(cpts);
  return doc.dump(2) + "\n";
}

inline Evidence parse_evidence(const BeliefNetwork& net, std::string_view text) {
  using detail::Json;
  const Json doc = detail::parse_json(text);
  if (!doc.is_object())
    throw NetworkError(NetworkError::Kind::evidence,
                       "evidence document must be an object");
  Evidence ev(net.size());
  for (const auto& [key, value] : doc.items()) {
    auto j = net.find(key);
    if (!j)
      throw NetworkError(NetworkError::Kind::evidence,
                         "evidence names unknown node '" + key + "'");
    if (!value.is_string())
      throw NetworkError(NetworkError::Kind::evidence,
                         "evidence for '" + key + "' must be a state name");
    const auto state = value.get<std::string>();
    auto s = net.find_state(*j, state);
    if (!s)
      throw NetworkError(NetworkError::Kind::evidence,
                         "node '" + key + "' has no state '" + state + "'");
    ev.observe(*j, *s);
  }
  return ev;
}

inline Evidence load_evidence(const BeliefNetwork& net, const std::string& path) {
  return parse_evidence(net, read_file(path));
}

inline std::string serialize_evidence(const BeliefNetwork& net,
                                      const Evidence& ev) {
  detail::Json doc = detail::Json::object();
  for (auto [j, s] : ev.entries())
    doc[net.variable(j).name] = net.variable(j).state_names[s];
  return doc.dump(2) + "\n";
}

}  // namespace belief_sim
