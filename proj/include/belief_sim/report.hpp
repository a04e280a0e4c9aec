#pragma once

// Text renderings of estimates, exact marginals, and experiment reports in
// table, CSV, and JSON form.

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

#include "belief_sim/exact.hpp"
#include "belief_sim/harness.hpp"
#include "belief_sim/network.hpp"
#include "belief_sim/scores.hpp"
#include "json.hpp"

namespace belief_sim {

enum class OutputFormat { table, csv, json };

inline std::optional<OutputFormat> parse_format(std::string_view s) {
  if (s == "table") return OutputFormat::table;
  if (s == "csv") return OutputFormat::csv;
  if (s == "json") return OutputFormat::json;
  return std::nullopt;
}

namespace detail {

inline std::string fixed(double v, int precision = 6) {
  if (std::isnan(v)) return "nan";
  std::ostringstream os;
  os << std::fixed << std::setprecision(precision) << v;
  return os.str();
}

inline std::string csv_number(double v) {
  if (std::isnan(v)) return "";
  std::ostringstream os;
  os << std::setprecision(10) << v;
  return os.str();
}

inline nlohmann::ordered_json json_number(double v) {
  if (std::isnan(v)) return nullptr;
  return v;
}

// Column widths that fit the longest node and state names.
inline std::pair<int, int> name_widths(const BeliefNetwork& net) {
  std::size_t node = 4, state = 5;
  for (NodeId j = 0; j < net.size(); ++j) {
    node = std::max(node, net.variable(j).name.size());
    for (const auto& s : net.variable(j).state_names) state = std::max(state, s.size());
  }
  return {static_cast<int>(node + 2), static_cast<int>(state + 2)};
}

}  // namespace detail

inline std::string format_marginals(const BeliefNetwork& net,
                                    const MarginalTable& t, OutputFormat fmt) {
  std::ostringstream os;
  switch (fmt) {
    case OutputFormat::table: {
      const auto [nw, sw] = detail::name_widths(net);
      os << "P(evidence) = " << std::setprecision(10) << t.evidence_probability;
      if (t.inconsistent) os << "  (inconsistent evidence)";
      os << "\n";
      os << std::left << std::setw(nw) << "node" << std::setw(sw) << "state"
         << "probability\n";
      for (NodeId j = 0; j < net.size(); ++j)
        for (StateIndex s = 0; s < net.cardinality(j); ++s)
          os << std::left << std::setw(nw) << net.variable(j).name
             << std::setw(sw) << net.variable(j).state_names[s]
             << detail::fixed(t.marginals[j][s], 9)
             << (t.observed[j] ? "  (observed)" : "") << "\n";
      break;
    }
    case OutputFormat::csv:
      os << "node,state,probability,observed\n";
      for (NodeId j = 0; j < net.size(); ++j)
        for (StateIndex s = 0; s < net.cardinality(j); ++s)
          os << net.variable(j).name << ',' << net.variable(j).state_names[s]
             << ',' << detail::csv_number(t.marginals[j][s]) << ','
             << (t.observed[j] ? 1 : 0) << "\n";
      break;
    case OutputFormat::json: {
      nlohmann::ordered_json doc;
      doc["evidence_probability"] = t.evidence_probability;
      doc["inconsistent"] = t.inconsistent;
      nlohmann::ordered_json nodes = nlohmann::ordered_json::object();
      for (NodeId j = 0; j < net.size(); ++j) {
        nlohmann::ordered_json states = nlohmann::ordered_json::object();
        for (StateIndex s = 0; s < net.cardinality(j); ++s)
          states[net.variable(j).state_names[s]] = t.marginals[j][s];
        nodes[net.variable(j).name] = {{"observed", bool(t.observed[j])},
                                       {"marginal", std::move(states)}};
      }
      doc["nodes"] = std::move(nodes);
      os << doc.dump(2) << "\n";
      break;
    }
  }
  return os.str();
}

inline std::string format_estimate(const BeliefNetwork& net,
                                   const PosteriorEstimate& est,
                                   OutputFormat fmt,
                                   const ErrorResult* error = nullptr) {
  std::ostringstream os;
  switch (fmt) {
    case OutputFormat::table: {
      const auto [nw, sw] = detail::name_widths(net);
      os << std::left << std::setw(nw) << "node" << std::setw(sw) << "state"
         << std::setw(14) << "estimate" << "std_error\n";
      for (NodeId j = 0; j < net.size(); ++j) {
        if (!est.scored[j]) continue;
        for (StateIndex s = 0; s < net.cardinality(j); ++s)
          os << std::left << std::setw(nw) << net.variable(j).name
             << std::setw(sw) << net.variable(j).state_names[s] << std::setw(14)
             << detail::fixed(est.probabilities[j][s])
             << detail::fixed(est.standard_errors[j][s])
             << (est.all_zero[j] ? "  (no score yet)" : "") << "\n";
      }
      if (error && error->defined)
        os << "error vs exact: " << detail::fixed(error->value) << "\n";
      break;
    }
    case OutputFormat::csv:
      os << "node,state,estimate,std_error,all_zero\n";
      for (NodeId j = 0; j < net.size(); ++j) {
        if (!est.scored[j]) continue;
        for (StateIndex s = 0; s < net.cardinality(j); ++s)
          os << net.variable(j).name << ',' << net.variable(j).state_names[s]
             << ',' << detail::csv_number(est.probabilities[j][s]) << ','
             << detail::csv_number(est.standard_errors[j][s]) << ','
             << (est.all_zero[j] ? 1 : 0) << "\n";
      }
      break;
    case OutputFormat::json: {
      nlohmann::ordered_json doc;
      nlohmann::ordered_json nodes = nlohmann::ordered_json::object();
      for (NodeId j = 0; j < net.size(); ++j) {
        if (!est.scored[j]) continue;
        nlohmann::ordered_json p = nlohmann::ordered_json::object();
        nlohmann::ordered_json se = nlohmann::ordered_json::object();
        for (StateIndex s = 0; s < net.cardinality(j); ++s) {
          p[net.variable(j).state_names[s]] = est.probabilities[j][s];
          se[net.variable(j).state_names[s]] = est.standard_errors[j][s];
        }
        nodes[net.variable(j).name] = {{"estimate", std::move(p)},
                                       {"std_error", std::move(se)},
                                       {"all_zero", bool(est.all_zero[j])}};
      }
      doc["nodes"] = std::move(nodes);
      if (error && error->defined) doc["error"] = error->value;
      os << doc.dump(2) << "\n";
      break;
    }
  }
  return os.str();
}

// Columns: algorithm,iterations,trial,mean_error,std_dev_error,wall_time_s,
// error_sq_times_time,aborted. One row per trial (mean_error holds that
// trial's error, std_dev_error is empty) followed by one aggregate row per
// algorithm with trial = "all".
inline std::string format_report_csv(const TrialReport& report) {
  std::ostringstream os;
  os << "algorithm,iterations,trial,mean_error,std_dev_error,wall_time_s,"
        "error_sq_times_time,aborted\n";
  for (const auto& row : report.rows) {
    for (const auto& t : row.trials)
      os << tag(row.algorithm) << ',' << row.base_iterations << ',' << t.trial
         << ',' << detail::csv_number(t.error) << ",,"
         << detail::csv_number(t.wall_time_s) << ','
         << detail::csv_number(t.error * t.error * t.wall_time_s) << ','
         << (t.aborted ? 1 : 0) << "\n";
    os << tag(row.algorithm) << ',' << row.base_iterations << ",all,"
       << detail::csv_number(row.mean_error) << ','
       << detail::csv_number(row.sd_error) << ','
       << detail::csv_number(row.mean_time_s) << ','
       << detail::csv_number(row.error_sq_time) << ',' << row.aborted << "\n";
  }
  return os.str();
}

// One block per iteration count, algorithms as columns.
inline std::string format_report_table(const TrialReport& report,
                                       std::size_t trials) {
  std::ostringstream os;
  constexpr int label = 22, col = 24;
  std::vector<std::uint64_t> blocks;
  for (const auto& r : report.rows)
    if (blocks.empty() || blocks.back() != r.base_iterations)
      blocks.push_back(r.base_iterations);
  for (auto base : blocks) {
    std::vector<const AlgorithmSummary*> rows;
    for (const auto& r : report.rows)
      if (r.base_iterations == base) rows.push_back(&r);
    os << base << " Iterations, " << trials << " trials\n";
    os << std::left << std::setw(label) << "";
    for (auto* r : rows) os << std::right << std::setw(col) << display_name(r->algorithm);
    os << "\n";
    auto line = [&](const char* name, auto get, int precision) {
      os << std::left << std::setw(label) << name;
      for (auto* r : rows)
        os << std::right << std::setw(col) << detail::fixed(get(*r), precision);
      os << "\n";
    };
    line("mean error", [](const AlgorithmSummary& r) { return r.mean_error; }, 3);
    line("std. deviation error", [](const AlgorithmSummary& r) { return r.sd_error; }, 3);
    line("mean time (sec)", [](const AlgorithmSummary& r) { return r.mean_time_s; }, 6);
    line("error^2 time", [](const AlgorithmSummary& r) { return r.error_sq_time; }, 9);
    bool any_abort = false;
    for (auto* r : rows) any_abort = any_abort || r->aborted > 0;
    if (any_abort)
      line("aborted trials",
           [](const AlgorithmSummary& r) { return static_cast<double>(r.aborted); }, 0);
    os << "\n";
  }
  return os.str();
}

inline std::string format_report_json(const TrialReport& report) {
  nlohmann::ordered_json doc;
  doc["rng"] = report.rng_name;
  doc["master_seed"] = report.master_seed;
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const auto& r : report.rows) {
    nlohmann::ordered_json trials = nlohmann::ordered_json::array();
    for (const auto& t : r.trials)
      trials.push_back({{"trial", t.trial},
                        {"seed", t.seed},
                        {"error", detail::json_number(t.error)},
                        {"wall_time_s", t.wall_time_s},
                        {"aborted", t.aborted},
                        {"instantiations", t.instantiations}});
    rows.push_back({{"algorithm", std::string(tag(r.algorithm))},
                    {"iterations", r.base_iterations},
                    {"budget", r.budget},
                    {"mean_error", detail::json_number(r.mean_error)},
                    {"std_dev_error", detail::json_number(r.sd_error)},
                    {"mean_time_s", r.mean_time_s},
                    {"error_sq_times_time", detail::json_number(r.error_sq_time)},
                    {"aborted", r.aborted},
                    {"trials", std::move(trials)}});
  }
  doc["rows"] = std::move(rows);
  return doc.dump(2) + "\n";
}

}  // namespace belief_sim
