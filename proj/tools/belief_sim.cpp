// belief-sim: exact and Monte Carlo inference on discrete belief networks,
// plus the multi-trial comparison bench.
//
// Exit codes: 0 success, 1 usage, 2 invalid input, 3 runtime abort.

#include <atomic>
#include <csignal>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "belief_sim/belief_sim.hpp"

namespace bs = belief_sim;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitInput = 2;
constexpr int kExitRuntime = 3;

volatile std::sig_atomic_t g_interrupted = 0;

extern "C" void on_interrupt(int) { g_interrupted = 1; }

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

bs::OutputFormat to_format(const std::string& s) {
  if (auto f = bs::parse_format(s)) return *f;
  throw UsageError("unknown format '" + s + "' (table, csv, json)");
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else if (c != ' ') {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

std::vector<bs::NodeId> node_list(const bs::BeliefNetwork& net,
                                  const std::string& s) {
  std::vector<bs::NodeId> out;
  for (const auto& name : split_list(s)) out.push_back(net.require(name));
  return out;
}

bs::Algorithm to_algorithm(const std::string& s) {
  if (auto a = bs::parse_algorithm(s)) return *a;
  throw UsageError("unknown algorithm '" + s + "'");
}

bs::Evidence evidence_for(const bs::BeliefNetwork& net, const std::string& path) {
  if (path.empty()) return bs::Evidence(net.size());
  return bs::load_evidence(net, path);
}

struct CommonOptions {
  std::string network;
  std::string evidence;
  std::string format = "table";
  std::string mb_nodes;
  std::string targets;
  std::size_t si_period = 100;
  std::size_t restarts = 10;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--network", o.network, "network document")->required();
  cmd->add_option("--evidence", o.evidence, "evidence document (default: none)");
  cmd->add_option("--mb-nodes", o.mb_nodes,
                  "comma-separated nodes scored by Markov blanket (basic-mb)");
  cmd->add_option("--si-period", o.si_period,
                  "self-importance update period in iterations")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--restarts", o.restarts, "Chavez restarts per trial")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--targets", o.targets,
                  "only estimate these nodes; simulate their relevant ancestors");
}

int cmd_validate(const std::string& path) {
  const auto net = bs::load_network(path);
  std::size_t arcs = 0;
  for (bs::NodeId j = 0; j < net.size(); ++j) arcs += net.parents(j).size();
  std::cout << "ok: " << net.size() << " variables, " << arcs << " arcs\n";
  return 0;
}

int cmd_exact(const CommonOptions& o, const std::string& engine,
              std::uint64_t cap) {
  const auto net = bs::load_network(o.network);
  const auto ev = evidence_for(net, o.evidence);
  bs::ExactEngine e;
  if (engine == "enum")
    e = bs::ExactEngine::enumeration;
  else if (engine == "ve")
    e = bs::ExactEngine::elimination;
  else
    throw UsageError("unknown engine '" + engine + "' (enum, ve)");
  const auto table = bs::exact_posteriors(net, ev, e, cap);
  std::cout << bs::format_marginals(net, table, to_format(o.format));
  return 0;
}

int cmd_run(const CommonOptions& o, const std::string& algorithm,
            std::uint64_t iterations, std::uint64_t seed, bool compare_exact) {
  auto full = std::make_shared<const bs::BeliefNetwork>(bs::load_network(o.network));
  bs::Experiment exp;
  exp.network = full;
  exp.evidence = evidence_for(*full, o.evidence);
  if (!o.mb_nodes.empty()) exp.mb_nodes = node_list(*full, o.mb_nodes);
  if (!o.targets.empty()) exp = bs::prune_for_targets(exp, node_list(*full, o.targets));
  const bs::BeliefNetwork& net = *exp.network;

  bs::SamplerConfig cfg;
  cfg.algorithm = to_algorithm(algorithm);
  cfg.iterations = bs::instantiation_budget(cfg.algorithm, net, exp.evidence, iterations);
  cfg.seed = seed;
  cfg.si_period = o.si_period;
  cfg.restarts = o.restarts;
  if (exp.mb_nodes) cfg.mb_nodes = exp.mb_nodes;

  bs::SamplingRun run(net, exp.evidence, cfg);
  for (const auto& [j, r] : run.fallback_rows())
    std::cerr << "warning: heuristic importance row " << r << " of '"
              << net.variable(j).name << "' vanished; using the prior row\n";

  std::signal(SIGINT, on_interrupt);
  run.run([] { return g_interrupted != 0; });
  std::signal(SIGINT, SIG_DFL);

  const auto snap = run.snapshot();
  if (g_interrupted)
    std::cerr << "interrupted after " << snap.iterations << " of "
              << cfg.iterations << " iterations\n";
  if (run.stats().aborted) {
    std::cerr << "run aborted: " << run.stats().abort_reason << "\n";
    return kExitRuntime;
  }

  std::optional<bs::ErrorResult> err;
  if (compare_exact) {
    const auto exact = bs::exact_posteriors(net, exp.evidence, bs::ExactEngine::elimination);
    if (!exact.inconsistent)
      err = bs::fertig_mann_error(snap.estimate, exact, exp.evidence, exp.targets);
  }

  // Show only the requested targets when pruned.
  auto est = snap.estimate;
  if (exp.targets) {
    std::vector<bool> keep(net.size(), false);
    for (auto t : *exp.targets) keep[t] = true;
    for (bs::NodeId j = 0; j < net.size(); ++j) est.scored[j] = est.scored[j] && keep[j];
  }
  std::cout << bs::format_estimate(net, est, to_format(o.format),
                                   err ? &*err : nullptr);
  return 0;
}

int cmd_bench(const CommonOptions& o, const std::string& algorithms,
              const std::string& iterations, std::size_t trials,
              std::uint64_t seed, const std::string& out, std::size_t threads) {
  auto full = std::make_shared<const bs::BeliefNetwork>(bs::load_network(o.network));
  bs::Experiment exp;
  exp.network = full;
  exp.evidence = evidence_for(*full, o.evidence);
  exp.algorithms.clear();
  for (const auto& a : split_list(algorithms)) exp.algorithms.push_back(to_algorithm(a));
  exp.iterations.clear();
  for (const auto& n : split_list(iterations)) {
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(n, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != n.size() || v == 0) throw UsageError("bad iteration count '" + n + "'");
    exp.iterations.push_back(v);
  }
  exp.trials = trials;
  exp.master_seed = seed;
  exp.si_period = o.si_period;
  exp.restarts = o.restarts;
  if (!o.mb_nodes.empty()) exp.mb_nodes = node_list(*full, o.mb_nodes);
  if (!o.targets.empty()) exp = bs::prune_for_targets(exp, node_list(*full, o.targets));

  const auto report = bs::run_experiment(exp, std::nullopt, threads);
  if (!out.empty()) {
    std::ofstream f(out);
    if (!f) throw std::runtime_error("cannot write '" + out + "'");
    f << bs::format_report_csv(report);
  }
  switch (to_format(o.format)) {
    case bs::OutputFormat::table:
      std::cout << bs::format_report_table(report, trials);
      break;
    case bs::OutputFormat::csv:
      std::cout << bs::format_report_csv(report);
      break;
    case bs::OutputFormat::json:
      std::cout << bs::format_report_json(report);
      break;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Monte Carlo and exact inference on discrete belief networks"};
  app.require_subcommand(1);

  std::string validate_path;
  auto* validate = app.add_subcommand("validate", "check a network document");
  validate->add_option("network", validate_path, "network document")->required();

  CommonOptions exact_opts;
  std::string engine = "enum";
  std::uint64_t cap = bs::kDefaultEnumerationCap;
  auto* exact = app.add_subcommand("exact", "exact posterior marginals");
  exact->add_option("--network", exact_opts.network, "network document")->required();
  exact->add_option("--evidence", exact_opts.evidence, "evidence document");
  exact->add_option("--engine", engine, "enum or ve")->check(CLI::IsMember({"enum", "ve"}));
  exact->add_option("--format", exact_opts.format, "table, csv or json");
  exact->add_option("--cap", cap, "enumeration cap on joint configurations");

  CommonOptions run_opts;
  std::string algorithm;
  std::uint64_t run_iterations = 1000, run_seed = 0;
  bool compare_exact = false;
  auto* run = app.add_subcommand("run", "run one sampler and print its estimate");
  add_common(run, run_opts);
  run->add_option("--algorithm", algorithm, "sampler tag")->required();
  run->add_option("--iterations", run_iterations,
                  "base iterations (chains get this times the unobserved count)")
      ->check(CLI::PositiveNumber);
  run->add_option("--seed", run_seed, "RNG seed");
  run->add_option("--format", run_opts.format, "table, csv or json");
  run->add_flag("--compare-exact", compare_exact, "also report the error against exact marginals");

  CommonOptions bench_opts;
  std::string algorithms =
      "logic,basic,basic-mb,self-importance,heuristic-importance,pearl,pearl-mb,"
      "chavez,chavez-mb";
  std::string iterations = "250,1000";
  std::size_t trials = 25, threads = bs::default_thread_count();
  std::uint64_t bench_seed = 0;
  std::string out;
  auto* bench = app.add_subcommand("bench", "multi-trial comparison of samplers");
  add_common(bench, bench_opts);
  bench->add_option("--algorithms", algorithms, "comma-separated sampler tags");
  bench->add_option("--iterations", iterations, "comma-separated base iteration counts");
  bench->add_option("--trials", trials, "trials per cell")->check(CLI::PositiveNumber);
  bench->add_option("--seed", bench_seed, "master seed");
  bench->add_option("--out", out, "write the CSV report here");
  bench->add_option("--format", bench_opts.format, "stdout format: table, csv or json");
  bench->add_option("--threads", threads, "worker threads (default $BELIEF_SIM_THREADS or 1)")
      ->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*validate) return cmd_validate(validate_path);
    if (*exact) return cmd_exact(exact_opts, engine, cap);
    if (*run) return cmd_run(run_opts, algorithm, run_iterations, run_seed, compare_exact);
    if (*bench)
      return cmd_bench(bench_opts, algorithms, iterations, trials, bench_seed, out, threads);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const bs::NetworkError& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kExitInput;
  } catch (const bs::ImportanceError& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "aborted: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}
