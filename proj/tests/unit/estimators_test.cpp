#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "smcev/error.hpp"
#include "smcev/estimators.hpp"

namespace {

using smcev::QuadratureRule;
using smcev::RuleKind;

TEST(AccumulateDirect, ConstantIncrementFactorsOut) {
  smcev::EvidenceAccumulator acc;
  const std::vector<double> lw{std::log(0.2), std::log(0.3), std::log(0.5)};
  const std::vector<double> inc(3, -4.25);
  smcev::accumulate_direct(acc, lw, inc);
  EXPECT_NEAR(acc.log_ratio, -4.25, 1e-15);
  ASSERT_EQ(acc.increments.size(), 1u);
}

TEST(AccumulateDirect, HandValueAndSum) {
  smcev::EvidenceAccumulator acc;
  const std::vector<double> lw(2, std::log(0.5));
  smcev::accumulate_direct(acc, lw, std::vector<double>{std::log(2.0), 0.0});
  EXPECT_NEAR(acc.increments[0], std::log(1.5), 1e-15);
  smcev::accumulate_direct(acc, lw, std::vector<double>{1.0, 1.0});
  EXPECT_NEAR(acc.log_ratio, std::log(1.5) + 1.0, 1e-15);
}

smcev::PathSampleTrace two_particle_trace() {
  smcev::PathSampleTrace tr;
  tr.alphas = {0.0, 1.0};
  tr.U = {-0.5, -0.3};
  tr.snapshots.push_back({{0.0, -1.0}, {std::log(0.5), std::log(0.5)}});
  return tr;
}

TEST(PathExpectation, KnotsReturnStoredValues) {
  const auto tr = two_particle_trace();
  EXPECT_EQ(smcev::path_expectation_at(tr, 0.0), -0.5);
  EXPECT_EQ(smcev::path_expectation_at(tr, 1.0), -0.3);
}

TEST(PathExpectation, ReweightedMidpoint) {
  const auto tr = two_particle_trace();
  const double e = std::exp(-0.5);
  EXPECT_NEAR(smcev::path_expectation_at(tr, 0.5), -e / (1.0 + e), 1e-14);
  EXPECT_NEAR(smcev::path_expectation_at(tr, 0.5), -0.37754, 1e-5);
}

TEST(PathExpectation, ConstantStatistic) {
  smcev::PathSampleTrace tr;
  tr.alphas = {0.0, 0.4, 1.0};
  tr.U = {-2.0, -2.0, -2.0};
  for (int k = 0; k < 2; ++k) tr.snapshots.push_back({{-2.0, -2.0, -2.0}, std::vector<double>(3, -std::log(3.0))});
  for (double a : {0.1, 0.55, 0.9}) EXPECT_NEAR(smcev::path_expectation_at(tr, a), -2.0, 1e-14);
}

TEST(PathExpectation, EmptyTraceIsAnError) {
  EXPECT_THROW(smcev::path_expectation_at(smcev::PathSampleTrace{}, 0.5), smcev::Error);
}

double integrate_fn(const std::vector<double>& alphas, double (*g)(double), QuadratureRule rule) {
  std::vector<double> knots;
  for (double a : alphas) knots.push_back(g(a));
  return smcev::integrate(alphas, knots, [g](std::size_t, double a) { return g(a); }, rule);
}

std::vector<double> uniform_grid(std::size_t T) {
  std::vector<double> a;
  for (std::size_t t = 0; t <= T; ++t) a.push_back(static_cast<double>(t) / static_cast<double>(T));
  return a;
}

TEST(Integrate, ConstantsExactForEveryRule) {
  const std::vector<double> alphas{0.0, 0.03, 0.2, 0.7, 1.0};
  for (auto k : {RuleKind::trapezoid, RuleKind::simpson, RuleKind::simpson38, RuleKind::boole}) {
    for (std::size_t r : {1u, 2u, 8u}) {
      EXPECT_NEAR(integrate_fn(alphas, [](double) { return -3.5; }, {k, r}), -3.5, 1e-14);
    }
  }
}

TEST(Integrate, TrapezoidExactOnLinear) {
  EXPECT_DOUBLE_EQ(integrate_fn({0.0, 0.25, 1.0}, [](double a) { return a; }, {}), 0.5);
}

TEST(Integrate, TrapezoidMatchesFormulaBitForBit) {
  const std::vector<double> alphas{0.0, 0.013, 0.08, 0.31, 0.77, 1.0};
  const std::vector<double> U{-40.0, -22.5, -9.1, -3.3, -1.2, -0.9};
  double expected = 0.0;
  for (std::size_t t = 1; t < alphas.size(); ++t) {
    expected += 0.5 * (alphas[t] - alphas[t - 1]) * (U[t] + U[t - 1]);
  }
  const double got = smcev::integrate(alphas, U, [](std::size_t, double) { return 0.0; }, {});
  EXPECT_EQ(got, expected);
  EXPECT_NEAR(got, oracle::trapezoid(alphas, U), 1e-13);
}

TEST(Integrate, NewtonCotesExactness) {
  const auto grid = uniform_grid(3);
  EXPECT_NEAR(integrate_fn(grid, [](double a) { return a * a * a; }, {RuleKind::simpson, 1}), 0.25, 1e-15);
  EXPECT_NEAR(integrate_fn(grid, [](double a) { return a * a * a; }, {RuleKind::simpson38, 1}), 0.25, 1e-15);
  const std::vector<double> uneven{0.0, 0.1, 0.45, 1.0};
  EXPECT_NEAR(integrate_fn(uneven, [](double a) { return std::pow(a, 5); }, {RuleKind::boole, 1}), 1.0 / 6.0,
              1e-15);
  EXPECT_NEAR(integrate_fn(uneven, [](double a) { return std::pow(a, 4); }, {RuleKind::boole, 3}), 0.2, 1e-15);
}

TEST(Integrate, TrapezoidErrorOnQuartic) {
  // Euler-Maclaurin terminates for a quartic: 0.2 + h^2/12 * 4 - h^4/720 * 24.
  const double h = 0.1;
  const double exact = 0.2 + h * h / 3.0 - h * h * h * h / 30.0;
  const double got = integrate_fn(uniform_grid(10), [](double a) { return std::pow(a, 4); }, {});
  EXPECT_NEAR(got, exact, 1e-14);
  EXPECT_NEAR(got, 0.20333, 1e-12);
  EXPECT_NEAR(integrate_fn(uniform_grid(10), [](double a) { return std::pow(a, 4); }, {RuleKind::boole, 1}), 0.2,
              1e-15);
}

TEST(Integrate, RefinementReducesTrapezoidError) {
  auto g = [](double a) { return std::exp(3.0 * a); };
  const double exact = (std::exp(3.0) - 1.0) / 3.0;
  const auto grid = uniform_grid(4);
  double prev = 1e300;
  for (std::size_t r : {1u, 2u, 4u, 8u}) {
    std::vector<double> knots;
    for (double a : grid) knots.push_back(g(a));
    const double err = std::abs(
        smcev::integrate(grid, knots, [&](std::size_t, double a) { return g(a); }, {RuleKind::trapezoid, r}) - exact);
    EXPECT_LT(err, prev);
    prev = err;
  }
}

TEST(IntegratePath, UsesReweightedInteriorNodes) {
  const auto tr = two_particle_trace();
  const double simpson = smcev::integrate_path(tr, {RuleKind::simpson, 1});
  const double mid = smcev::path_expectation_at(tr, 0.5);
  EXPECT_NEAR(simpson, (tr.U[0] + 4.0 * mid + tr.U[1]) / 6.0, 1e-15);
  EXPECT_DOUBLE_EQ(smcev::integrate_path(tr, {}), 0.5 * (tr.U[0] + tr.U[1]));
}

TEST(Rules, NamesRoundTrip) {
  for (auto k : {RuleKind::trapezoid, RuleKind::simpson, RuleKind::simpson38, RuleKind::boole}) {
    EXPECT_EQ(smcev::parse_rule(smcev::rule_name(k)), k);
  }
  EXPECT_THROW(smcev::parse_rule("gauss"), smcev::Error);
  EXPECT_EQ(QuadratureRule({RuleKind::boole, 8}).label(), "boole-x8");
  EXPECT_EQ(QuadratureRule({RuleKind::boole, 1}).panel_size(), 4u);
}

TEST(ModelPosteriors, Examples) {
  EXPECT_DOUBLE_EQ(smcev::model_posteriors({{3, -12.0}}, {{3, 0.0}}).at(3), 1.0);
  const auto eq = smcev::model_posteriors({{1, -5.0}, {2, -5.0}}, {{1, std::log(0.5)}, {2, std::log(0.5)}});
  EXPECT_DOUBLE_EQ(eq.at(1), 0.5);
  EXPECT_DOUBLE_EQ(eq.at(2), 0.5);
  const auto p = smcev::model_posteriors({{1, 0.0}, {2, -2.15}}, {{1, std::log(0.5)}, {2, std::log(0.5)}});
  EXPECT_NEAR(p.at(1), 1.0 / (1.0 + std::exp(-2.15)), 1e-15);
  EXPECT_NEAR(p.at(1), 0.89567, 1e-5);
  EXPECT_NEAR(p.at(1) + p.at(2), 1.0, 1e-15);
  EXPECT_THROW(smcev::model_posteriors({}, {}), smcev::Error);
}

TEST(BayesFactor, Examples) {
  EXPECT_EQ(smcev::bayes_factor(-7.0, -7.0), 0.0);
  EXPECT_NEAR(smcev::bayes_factor(-39.1, -40.7), 1.6, 1e-12);
  EXPECT_EQ(smcev::bayes_factor(-1.25, 2.5), -smcev::bayes_factor(2.5, -1.25));
}

}  // namespace
