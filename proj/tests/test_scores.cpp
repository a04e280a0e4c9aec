#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "belief_sim/sampler.hpp"
#include "belief_sim/scores.hpp"
#include "support/random_networks.hpp"

using namespace belief_sim;
using belief_sim::testing::binary_network;

namespace {

BeliefNetwork single(double p) { return binary_network({{"X", {}, {{p, 1.0 - p}}}}); }

MarginalTable exact_for(std::vector<std::vector<double>> m) {
  MarginalTable t;
  t.observed.assign(m.size(), false);
  t.marginals = std::move(m);
  t.evidence_probability = 1.0;
  return t;
}

PosteriorEstimate estimate_for(std::vector<std::vector<double>> m) {
  PosteriorEstimate e;
  e.all_zero.assign(m.size(), false);
  e.scored.assign(m.size(), true);
  e.probabilities = std::move(m);
  return e;
}

}  // namespace

TEST(Normalize, DividesByStateSum) {
  const auto net = single(0.5);
  ScoreTable t(net, Evidence(1));
  t.score_weights(0, std::vector<double>{0.75, 0.25}, 4.0);  // scores (3, 1)
  const auto est = normalize(t);
  EXPECT_DOUBLE_EQ(est.probabilities[0][0], 0.75);
  EXPECT_DOUBLE_EQ(est.probabilities[0][1], 0.25);
  EXPECT_FALSE(est.all_zero[0]);
}

TEST(Normalize, ZeroScoresAreUniformAndFlagged) {
  const auto net = single(0.5);
  ScoreTable t(net, Evidence(1));
  const auto est = normalize(t);
  EXPECT_TRUE(est.all_zero[0]);
  EXPECT_EQ(est.probabilities[0], (std::vector<double>{0.5, 0.5}));
}

TEST(Normalize, BasicAlgorithmRecoversBayesRule) {
  const auto net = binary_network({{"A", {}, {{0.9, 0.1}}}, {"B", {"A"}, {{0.9, 0.1}, {0.1, 0.9}}}});
  Evidence ev(2);
  ev.observe(1, 0);
  SamplerConfig cfg;
  cfg.algorithm = Algorithm::basic;
  cfg.iterations = 100000;
  cfg.seed = 11;
  const auto run = run_sampler(net, ev, cfg);
  EXPECT_NEAR(normalize(run.table()).probabilities[0][0], 0.81 / 0.82, 0.01);
}

TEST(Merge, IdentityCommutativityAssociativity) {
  std::mt19937_64 gen(5);
  belief_sim::testing::NetworkShape shape;
  shape.nodes = 5;
  const auto net = belief_sim::testing::random_network(gen, shape);
  const Evidence ev = belief_sim::testing::random_evidence(gen, net, 1);
  auto run_with = [&](std::uint64_t seed, Algorithm a) {
    SamplerConfig cfg;
    cfg.algorithm = a;
    cfg.iterations = 300;
    cfg.seed = seed;
    return run_sampler(net, ev, cfg).table();
  };
  // Integer-valued scores keep floating-point sums exact, so the algebraic
  // laws can be checked with ==.
  const auto a = run_with(1, Algorithm::pearl);
  const auto b = run_with(2, Algorithm::logic);
  const auto c = run_with(3, Algorithm::chavez);
  const ScoreTable empty(net, ev);
  EXPECT_EQ(merge(a, empty), a);
  EXPECT_EQ(merge(a, b), merge(b, a));
  EXPECT_EQ(merge(merge(a, b), c), merge(a, merge(b, c)));
  EXPECT_EQ(merge(a, b).samples(), a.samples() + b.samples());
}

TEST(Merge, SignatureMismatchThrows) {
  const auto net = single(0.5);
  Evidence ev(1);
  ev.observe(0, 1);
  EXPECT_THROW(merge(ScoreTable(net, Evidence(1)), ScoreTable(net, ev)), std::invalid_argument);
  const auto other = binary_network({{"X", {}, {{0.5, 0.5}}}, {"Y", {}, {{0.5, 0.5}}}});
  EXPECT_THROW(merge(ScoreTable(net, Evidence(1)), ScoreTable(other, Evidence(2))),
               std::invalid_argument);
}

TEST(FertigMannError, Examples) {
  const auto exact = exact_for({{0.5, 0.5}});
  EXPECT_EQ(fertig_mann_error(estimate_for({{0.5, 0.5}}), exact, Evidence(1)).value, 0.0);
  // sqrt(0.01 / 0.25)
  const auto r = fertig_mann_error(estimate_for({{0.6, 0.4}}), exact, Evidence(1));
  EXPECT_TRUE(r.defined);
  EXPECT_NEAR(r.value, 0.2, 1e-12);
}

TEST(FertigMannError, AveragesNodesAndSkipsObserved) {
  const auto exact = exact_for({{0.5, 0.5}, {0.2, 0.8}, {0.9, 0.1}});
  Evidence ev(3);
  ev.observe(2, 0);
  const auto est = estimate_for({{0.6, 0.4}, {0.3, 0.7}, {0.0, 1.0}});
  const double t0 = 0.01 / 0.25, t1 = 0.01 / 0.16;
  EXPECT_NEAR(fertig_mann_error(est, exact, ev).value, std::sqrt((t0 + t1) / 2.0), 1e-12);
  EXPECT_NEAR(fertig_mann_error(est, exact, ev, std::vector<NodeId>{1}).value, std::sqrt(t1), 1e-12);
}

TEST(FertigMannError, DegenerateExactValuesAreExcluded) {
  const auto exact = exact_for({{1.0, 0.0}, {0.5, 0.5}});
  const auto est = estimate_for({{0.9, 0.1}, {0.6, 0.4}});
  const auto r = fertig_mann_error(est, exact, Evidence(2));
  EXPECT_TRUE(r.defined);
  EXPECT_EQ(r.included_nodes, 1u);
  EXPECT_EQ(r.excluded_terms, 2u);
  EXPECT_NEAR(r.value, 0.2, 1e-12);

  const auto all_degenerate = exact_for({{1.0, 0.0}});
  EXPECT_FALSE(fertig_mann_error(estimate_for({{0.5, 0.5}}), all_degenerate, Evidence(1)).defined);
}

TEST(FertigMannError, MultiStateAveragesStates) {
  const auto exact = exact_for({{0.5, 0.25, 0.25}});
  const auto est = estimate_for({{0.4, 0.3, 0.3}});
  const double t = (0.01 / 0.25 + 0.0025 / 0.1875 + 0.0025 / 0.1875) / 3.0;
  EXPECT_NEAR(fertig_mann_error(est, exact, Evidence(1)).value, std::sqrt(t), 1e-12);
}

TEST(FertigMannError, PositiveUnlessExact) {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(0.05, 0.95);
  for (int i = 0; i < 200; ++i) {
    const double p = u(gen), q = u(gen);
    const auto r = fertig_mann_error(estimate_for({{q, 1 - q}}), exact_for({{p, 1 - p}}), Evidence(1));
    EXPECT_EQ(r.value > 0.0, p != q);
    EXPECT_GE(r.value, 0.0);
  }
}

TEST(StandardError, IdenticalSamplesHaveZeroError) {
  const auto net = single(0.5);
  ScoreTable t(net, Evidence(1));
  for (int i = 0; i < 10; ++i) t.score_state(0, 1, 0.3);
  const auto se = standard_error(t);
  EXPECT_FALSE(se.insufficient[0]);
  EXPECT_NEAR(se.values[0][0], 0.0, 1e-15);
  EXPECT_NEAR(se.values[0][1], 0.0, 1e-15);
}

TEST(StandardError, InsufficientSamplesFlagged) {
  const auto net = single(0.5);
  ScoreTable t(net, Evidence(1));
  t.score_state(0, 0, 1.0);
  EXPECT_TRUE(standard_error(t).insufficient[0]);
}

TEST(StandardError, UnitWeightsReduceToBinomial) {
  const auto net = single(0.3);
  SamplerConfig cfg;
  cfg.algorithm = Algorithm::basic;
  cfg.iterations = 5000;
  cfg.seed = 8;
  const auto run = run_sampler(net, Evidence(1), cfg);
  const auto est = normalize(run.table());
  const double p = est.probabilities[0][0];
  const double binomial = std::sqrt(p * (1 - p) / 5000.0);
  EXPECT_NEAR(est.standard_errors[0][0], binomial, 1e-12);
  EXPECT_NEAR(est.standard_errors[0][1], binomial, 1e-12);
}

TEST(StandardError, ShrinksWithSampleSize) {
  const auto net = binary_network({{"A", {}, {{0.3, 0.7}}}, {"B", {"A"}, {{0.8, 0.2}, {0.3, 0.7}}}});
  Evidence ev(2);
  ev.observe(1, 0);
  std::vector<double> xs, ys;
  for (std::uint64_t n : {100u, 1000u, 10000u, 100000u}) {
    double mean = 0.0;
    for (std::uint64_t rep = 0; rep < 10; ++rep) {
      SamplerConfig cfg;
      cfg.algorithm = Algorithm::basic;
      cfg.iterations = n;
      cfg.seed = 100 + rep;
      mean += standard_error(run_sampler(net, ev, cfg).table()).values[0][0] / 10.0;
    }
    xs.push_back(std::log(static_cast<double>(n)));
    ys.push_back(std::log(mean));
  }
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) mx += xs[i] / 4, my += ys[i] / 4;
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  EXPECT_NEAR(sxy / sxx, -0.5, 0.1);
}
