#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "belief_sim/importance.hpp"
#include "belief_sim/sampler.hpp"
#include "support/brute_force.hpp"
#include "support/random_networks.hpp"

using namespace belief_sim;
using belief_sim::testing::binary_network;

namespace {

BeliefNetwork chain_ab() {
  return binary_network({{"A", {}, {{0.9, 0.1}}}, {"B", {"A"}, {{0.9, 0.1}, {0.1, 0.9}}}});
}

// Probability that P' draws the unobserved part of x.
double proposal_probability(const BeliefNetwork& net, const Evidence& ev,
                            const ImportanceDistribution& q, const std::vector<StateIndex>& x) {
  double p = 1.0;
  for (NodeId j = 0; j < net.size(); ++j)
    if (!ev.observed(j)) p *= q.prob(j, belief_sim::testing::row_of(net, j, x), x[j]);
  return p;
}

}  // namespace

TEST(ImportanceSampling, PriorProposalReproducesBasicAlgorithm) {
  std::mt19937_64 gen(4);
  belief_sim::testing::NetworkShape shape;
  shape.max_states = 3;
  const auto net = belief_sim::testing::random_network(gen, shape);
  const auto ev = belief_sim::testing::random_evidence(gen, net, 2);
  const auto q = ImportanceDistribution::from_network(net);
  Rng a(5), b(5);
  for (int i = 0; i < 500; ++i) {
    const auto x = importance_step(net, ev, q, a);
    const auto y = basic_step(net, ev, b);
    ASSERT_EQ(x.assignment, y.assignment);
    ASSERT_EQ(x.weight, y.weight);
  }
}

TEST(ImportanceSampling, ScoreIsPriorOverProposal) {
  const auto net = binary_network({{"X", {}, {{0.9, 0.1}}}});
  auto q = ImportanceDistribution::from_network(net);
  q.table(0) = {0.5, 0.5};
  Rng rng(1);
  bool seen[2] = {false, false};
  for (int i = 0; i < 100; ++i) {
    const auto s = importance_step(net, Evidence(1), q, rng);
    const StateIndex v = s.assignment.values[0];
    seen[v] = true;
    EXPECT_DOUBLE_EQ(s.weight, v == 0 ? 1.8 : 0.2);
  }
  EXPECT_TRUE(seen[0] && seen[1]);
}

TEST(SelfImportance, UpdateAddsScoresAndRenormalizes) {
  const auto net = binary_network({{"X", {}, {{0.9, 0.1}}}});
  auto q = ImportanceDistribution::from_network(net);
  q.table(0) = {0.5, 0.5};
  SampleScore s;
  s.weight = 1.0;
  s.assignment = Assignment::complete({0});
  const auto updated = self_importance_update(net, Evidence(1), q, std::vector<SampleScore>{s});
  EXPECT_DOUBLE_EQ(updated.prob(0, 0, 0), 0.75);
  EXPECT_DOUBLE_EQ(updated.prob(0, 0, 1), 0.25);
}

TEST(SelfImportance, ZeroScoreBatchLeavesProposalUnchanged) {
  const auto net = chain_ab();
  Evidence ev(2);
  ev.observe(1, 0);
  const auto q = ImportanceDistribution::from_network(net);
  SampleScore s;
  s.weight = 0.0;
  s.assignment = Assignment::complete({1, 0});
  EXPECT_EQ(self_importance_update(net, ev, q, std::vector<SampleScore>{s, s}), q);
  EXPECT_EQ(self_importance_update(net, ev, q, std::vector<SampleScore>{}), q);
}

TEST(SelfImportance, OnlyRealizedRowsChange) {
  const auto net = chain_ab();
  const auto q = ImportanceDistribution::from_network(net);
  SampleScore s;
  s.weight = 0.5;
  s.assignment = Assignment::complete({0, 1});
  const auto u = self_importance_update(net, Evidence(2), q, std::vector<SampleScore>{s});
  // B's row for A = false was not visited.
  EXPECT_EQ(u.prob(1, 1, 0), q.prob(1, 1, 0));
  EXPECT_NEAR(u.prob(1, 0, 1), (0.1 + 0.5) / 1.5, 1e-15);
  EXPECT_NEAR(u.prob(0, 0, 0), (0.9 + 0.5) / 1.5, 1e-15);
}

TEST(SelfImportance, UpdatesPreserveSupport) {
  std::mt19937_64 gen(31);
  for (int rep = 0; rep < 20; ++rep) {
    belief_sim::testing::NetworkShape shape;
    shape.nodes = 6;
    shape.deterministic_rows = 0.15;
    const auto net = belief_sim::testing::random_network(gen, shape);
    const auto ev = belief_sim::testing::random_evidence(gen, net, 2, 1e-3);
    SamplerConfig cfg;
    cfg.algorithm = Algorithm::self_importance;
    cfg.iterations = 1000;
    cfg.si_period = 50;
    cfg.seed = rep;
    const auto run = run_sampler(net, ev, cfg);
    EXPECT_EQ(run.stats().importance_updates, 20u);
    EXPECT_FALSE(check_support(net, ev, run.importance()).has_value());
  }
}

TEST(SelfImportance, ConvergesToExact) {
  const auto net = chain_ab();
  Evidence ev(2);
  ev.observe(1, 0);
  SamplerConfig cfg;
  cfg.algorithm = Algorithm::self_importance;
  cfg.iterations = 100000;
  cfg.seed = 9;
  const auto run = run_sampler(net, ev, cfg);
  EXPECT_NEAR(normalize(run.table()).probabilities[0][0], 0.81 / 0.82, 0.01);
  EXPECT_EQ(run.stats().importance_updates, 1000u);
}

TEST(SelfImportance, ScoresAccumulateAcrossUpdates) {
  // Two batches of one sample each: W(A) = (.9, .1) + (.5, 0) + (0, .5).
  const auto net = chain_ab();
  const Evidence none(2);
  const auto q = ImportanceDistribution::from_network(net);
  SelfImportanceAccumulator acc(net, q);
  auto updated = q;
  SampleScore s;
  s.weight = 0.5;
  s.assignment = Assignment::complete({0, 0});
  acc.add(net, none, s);
  acc.apply(net, none, updated);
  EXPECT_NEAR(updated.prob(0, 0, 0), 1.4 / 1.5, 1e-15);
  s.assignment = Assignment::complete({1, 0});
  acc.add(net, none, s);
  acc.apply(net, none, updated);
  EXPECT_NEAR(updated.prob(0, 0, 0), 1.4 / 2.0, 1e-15);
  EXPECT_NEAR(updated.prob(0, 0, 1), 0.6 / 2.0, 1e-15);
}

TEST(SelfImportance, ProposalApproachesPosterior) {
  // W(A) grows like n * P(A, e), so P'(A) tends to P(A | e).
  const auto net = chain_ab();
  Evidence ev(2);
  ev.observe(1, 0);
  SamplerConfig cfg;
  cfg.algorithm = Algorithm::self_importance;
  cfg.iterations = 50000;
  cfg.seed = 4;
  const auto run = run_sampler(net, ev, cfg);
  EXPECT_NEAR(run.importance().prob(0, 0, 0), 0.81 / 0.82, 0.005);
}

TEST(CheckSupport, RejectsBadProposals) {
  const auto net = chain_ab();
  const Evidence none(2);
  auto q = ImportanceDistribution::from_network(net);
  EXPECT_FALSE(check_support(net, none, q).has_value());

  auto zero = q;
  zero.table(0) = {1.0, 0.0};
  ASSERT_TRUE(check_support(net, none, zero).has_value());
  EXPECT_NE(check_support(net, none, zero)->find("'A'"), std::string::npos);
  EXPECT_THROW(require_support(net, none, zero), ImportanceError);

  auto unnormalized = q;
  unnormalized.table(0) = {0.5, 0.6};
  EXPECT_TRUE(check_support(net, none, unnormalized).has_value());

  auto out_of_range = q;
  out_of_range.table(1) = {1.5, -0.5, 0.1, 0.9};
  EXPECT_TRUE(check_support(net, none, out_of_range).has_value());

  auto nan = q;
  nan.table(1)[0] = std::nan("");
  EXPECT_TRUE(check_support(net, none, nan).has_value());

  auto shape = q;
  shape.table(1).pop_back();
  EXPECT_TRUE(check_support(net, none, shape).has_value());

  const auto other = binary_network({{"X", {}, {{0.5, 0.5}}}});
  EXPECT_TRUE(check_support(net, none, ImportanceDistribution::from_network(other)).has_value());
}

TEST(CheckSupport, ObservedRowsAreIgnoredAndZeroPriorStatesMayBeDropped) {
  const auto net = binary_network({{"A", {}, {{1.0, 0.0}}}, {"B", {"A"}, {{0.9, 0.1}, {0.1, 0.9}}}});
  Evidence ev(2);
  ev.observe(1, 0);
  auto q = ImportanceDistribution::from_network(net);
  q.table(1) = {1.0, 0.0, 0.0, 1.0};
  EXPECT_FALSE(check_support(net, ev, q).has_value());
  EXPECT_TRUE(check_support(net, Evidence(2), q).has_value());
}

TEST(CheckSupport, SamplingRunRejectsInvalidInitialProposal) {
  const auto net = chain_ab();
  auto q = ImportanceDistribution::from_network(net);
  q.table(0) = {1.0, 0.0};
  SamplerConfig cfg;
  cfg.algorithm = Algorithm::self_importance;
  cfg.initial_importance = q;
  EXPECT_THROW(SamplingRun(net, Evidence(2), cfg), ImportanceError);
  cfg.algorithm = Algorithm::basic;
  EXPECT_THROW(SamplingRun(net, Evidence(2), cfg), std::invalid_argument);
}

TEST(HeuristicImportance, NoEvidenceGivesPriorExactly) {
  std::mt19937_64 gen(6);
  belief_sim::testing::NetworkShape shape;
  shape.max_states = 3;
  const auto net = belief_sim::testing::random_network(gen, shape);
  const auto h = heuristic_importance_build(net, Evidence(net.size()));
  EXPECT_EQ(h.distribution, ImportanceDistribution::from_network(net));
  EXPECT_TRUE(h.fallback_rows.empty());
}

TEST(HeuristicImportance, ChainProposalIsExactPosterior) {
  const auto net = chain_ab();
  Evidence ev(2);
  ev.observe(1, 0);
  const auto h = heuristic_importance_build(net, ev);
  EXPECT_NEAR(h.distribution.prob(0, 0, 0), 0.81 / 0.82, 1e-15);
  EXPECT_NEAR(h.distribution.prob(0, 0, 1), 0.01 / 0.82, 1e-15);
  EXPECT_NEAR(h.lambda[0][0], 1.0, 1e-15);
  EXPECT_NEAR(h.lambda[0][1], 0.1 / 0.9, 1e-15);
  // With the exact posterior as proposal every sample scores P(e).
  Rng rng(2);
  for (int i = 0; i < 50; ++i)
    EXPECT_NEAR(importance_step(net, ev, h.distribution, rng).weight, 0.82, 1e-12);
}

TEST(HeuristicImportance, NodesWithoutObservedDescendantsKeepPrior) {
  const auto net = binary_network({{"A", {}, {{0.3, 0.7}}},
                                   {"B", {"A"}, {{0.6, 0.4}, {0.2, 0.8}}},
                                   {"C", {"A"}, {{0.9, 0.1}, {0.4, 0.6}}}});
  Evidence ev(3);
  ev.observe(1, 0);
  const auto h = heuristic_importance_build(net, ev);
  EXPECT_EQ(h.distribution.table(2), net.cpt(2).table());
  EXPECT_EQ(h.lambda[2], (std::vector<double>{1.0, 1.0}));
}

TEST(HeuristicImportance, FallbackRowUsesPrior) {
  // C copies B; B is forced true when A is true.
  const auto net = binary_network({{"A", {}, {{0.5, 0.5}}},
                                   {"B", {"A"}, {{1.0, 0.0}, {0.5, 0.5}}},
                                   {"C", {"B"}, {{1.0, 0.0}, {0.0, 1.0}}}});
  Evidence ev(3);
  ev.observe(2, 1);
  const auto h = heuristic_importance_build(net, ev);
  ASSERT_EQ(h.fallback_rows.size(), 1u);
  EXPECT_EQ(h.fallback_rows[0], (std::pair<NodeId, std::size_t>{1, 0}));
  EXPECT_EQ(h.distribution.prob(1, 0, 0), 1.0);
  EXPECT_EQ(h.distribution.prob(0, 0, 0), 0.0);
  EXPECT_FALSE(check_support(net, ev, h.distribution).has_value());

  SamplerConfig cfg;
  cfg.algorithm = Algorithm::heuristic_importance;
  cfg.iterations = 2000;
  const auto run = run_sampler(net, ev, cfg);
  const auto est = normalize(run.table());
  EXPECT_EQ(est.probabilities[0][1], 1.0);
  EXPECT_EQ(est.probabilities[1][1], 1.0);
}

TEST(HeuristicImportance, NeverDropsReachableMass) {
  // Every configuration with P(x, e) > 0 must remain reachable under P',
  // which makes the weighted estimator unbiased.
  std::mt19937_64 gen(40);
  for (int rep = 0; rep < 60; ++rep) {
    belief_sim::testing::NetworkShape shape;
    shape.nodes = 3 + rep % 6;
    shape.max_states = rep % 2 ? 3 : 2;
    shape.deterministic_rows = 0.25;
    const auto net = belief_sim::testing::random_network(gen, shape);
    const auto ev = belief_sim::testing::random_evidence(gen, net, 1 + rep % 3, 1e-9);
    const auto h = heuristic_importance_build(net, ev);
    ASSERT_FALSE(check_support(net, ev, h.distribution).has_value());
    const auto truth = belief_sim::testing::brute_posteriors(net, ev);
    double total = 0.0;
    belief_sim::testing::for_each_assignment(net, [&](const std::vector<StateIndex>& x) {
      for (auto [j, s] : ev.entries())
        if (x[j] != s) return;
      const double p = belief_sim::testing::brute_joint(net, x);
      const double q = proposal_probability(net, ev, h.distribution, x);
      if (p > 0.0) {
        EXPECT_GT(q, 0.0);
      }
      if (q == 0.0) return;
      total += q * (p / q);
    });
    EXPECT_NEAR(total, truth.evidence_probability, 1e-12);
  }
}
