#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "oracles.hpp"
#include "smcev/clt.hpp"
#include "smcev/error.hpp"
#include "smcev/rng.hpp"

namespace {

using smcev::FiniteStateFlow;
using smcev::Matrix;

FiniteStateFlow random_flow(std::size_t S, std::size_t T, std::uint64_t seed) {
  smcev::RngStream rng(seed, 3);
  FiniteStateFlow f;
  auto simplex = [&] {
    std::vector<double> p(S);
    for (auto& v : p) v = 0.1 + rng.uniform();
    const double s = std::accumulate(p.begin(), p.end(), 0.0);
    for (auto& v : p) v /= s;
    return p;
  };
  f.eta_hat0 = simplex();
  for (std::size_t t = 0; t < T; ++t) {
    Matrix M;
    for (std::size_t i = 0; i < S; ++i) M.push_back(simplex());
    f.M.push_back(M);
    std::vector<double> g(S);
    for (auto& v : g) v = 0.2 + 2.0 * rng.uniform();
    f.G.push_back(g);
  }
  for (std::size_t t = 0; t <= T; ++t) {
    std::vector<double> x(S);
    for (auto& v : x) v = 4.0 * rng.uniform() - 2.0;
    f.xi.push_back(x);
    f.beta.push_back(0.1 + rng.uniform());
  }
  return f;
}

TEST(ExactMarginals, UnitPotentialsArePlainMarkovMarginals) {
  auto f = random_flow(3, 3, 1);
  for (auto& g : f.G) g.assign(3, 1.0);
  const auto m = smcev::exact_marginals(f);
  std::vector<double> p = f.eta_hat0;
  for (std::size_t t = 0; t < 3; ++t) {
    std::vector<double> q(3, 0.0);
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 3; ++j) q[j] += p[i] * f.M[t][i][j];
    p = q;
    for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(m.eta_hat[t + 1][j], p[j], 1e-14);
  }
}

TEST(ExactMarginals, HandExample) {
  FiniteStateFlow f;
  f.eta_hat0 = {0.5, 0.5};
  f.M = {{{1.0, 0.0}, {0.0, 1.0}}};
  f.G = {{2.0, 1.0}};
  f.xi = {{0.0, 0.0}, {0.0, 0.0}};
  f.beta = {1.0, 1.0};
  const auto m = smcev::exact_marginals(f);
  EXPECT_NEAR(m.eta_hat[1][0], 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(m.eta_hat[1][1], 1.0 / 3.0, 1e-15);
  EXPECT_EQ(m.eta[0], f.eta_hat0);
}

TEST(ExactMarginals, ScaledPotentialsChangeNothing) {
  auto f = random_flow(3, 2, 2);
  const auto a = smcev::exact_marginals(f);
  for (auto& g : f.G)
    for (auto& v : g) v *= 7.5;
  const auto b = smcev::exact_marginals(f);
  for (std::size_t t = 0; t < a.eta_hat.size(); ++t)
    for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(a.eta_hat[t][j], b.eta_hat[t][j], 1e-15);
}

TEST(ExactMarginals, MatchPathEnumeration) {
  for (std::size_t S : {2u, 3u}) {
    for (std::size_t T : {1u, 2u, 4u}) {
      const auto f = random_flow(S, T, 10 * S + T);
      const auto m = smcev::exact_marginals(f);
      const auto e = oracle::enumerate_paths(f.eta_hat0, f.M, f.G);
      for (std::size_t t = 0; t <= T; ++t)
        for (std::size_t j = 0; j < S; ++j) EXPECT_NEAR(m.eta_hat[t][j], e.eta_hat[t][j], 1e-12);
    }
  }
}

TEST(ExactMarginals, InvalidFlowsAreRejected) {
  auto f = random_flow(2, 1, 3);
  f.M[0][0] = {0.7, 0.7};
  EXPECT_THROW(smcev::exact_marginals(f), smcev::Error);
  f = random_flow(2, 1, 3);
  f.G[0][1] = 0.0;
  EXPECT_THROW(smcev::exact_marginals(f), smcev::Error);
}

double var_under(const std::vector<double>& p, const std::vector<double>& f) {
  double m = 0.0, s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) m += p[i] * f[i];
  for (std::size_t i = 0; i < p.size(); ++i) s += p[i] * (f[i] - m) * (f[i] - m);
  return s;
}

TEST(VarianceRecursion, SingleTimeIsWeightedVariance) {
  FiniteStateFlow f;
  f.eta_hat0 = {0.25, 0.75};
  f.xi = {{1.0, 3.0}};
  f.beta = {0.4};
  EXPECT_NEAR(smcev::variance_recursion(f), 0.16 * 0.75, 1e-15);
}

TEST(VarianceRecursion, ConstantTestFunctionsGiveZero) {
  auto f = random_flow(3, 3, 4);
  for (std::size_t t = 0; t < f.xi.size(); ++t) f.xi[t].assign(3, 1.5 * t - 2.0);
  EXPECT_NEAR(smcev::variance_recursion(f), 0.0, 1e-14);
}

TEST(VarianceRecursion, TwoStateOneStepDeltaMethod) {
  // Independent expansion: V = Var_{eta_hat0}(b0 xi0 + b1 M h / eta1(G))
  //                          + b1^2 eta1(G^2 (xi1 - c)^2) / eta1(G)^2,
  // with eta1 = eta_hat0 M, c = eta_hat1(xi1), h = G (xi1 - c).
  FiniteStateFlow f;
  f.eta_hat0 = {0.3, 0.7};
  f.M = {{{0.6, 0.4}, {0.2, 0.8}}};
  f.G = {{1.5, 0.5}};
  f.xi = {{2.0, -1.0}, {0.5, 3.0}};
  f.beta = {0.25, 0.6};
  const double eta1[2] = {0.3 * 0.6 + 0.7 * 0.2, 0.3 * 0.4 + 0.7 * 0.8};
  const double eg = eta1[0] * 1.5 + eta1[1] * 0.5;
  const double c = (eta1[0] * 1.5 * 0.5 + eta1[1] * 0.5 * 3.0) / eg;
  const double h[2] = {1.5 * (0.5 - c), 0.5 * (3.0 - c)};
  std::vector<double> lifted(2);
  for (int i = 0; i < 2; ++i) {
    const double mh = f.M[0][i][0] * h[0] + f.M[0][i][1] * h[1];
    lifted[i] = 0.25 * f.xi[0][i] + 0.6 * mh / eg;
  }
  const double second =
      0.36 * (eta1[0] * h[0] * h[0] + eta1[1] * h[1] * h[1]) / (eg * eg);
  EXPECT_NEAR(smcev::variance_recursion(f), var_under(f.eta_hat0, lifted) + second, 1e-12);
}

TEST(VarianceRecursion, ShiftInvariantAndNonNegative) {
  for (std::uint64_t s = 0; s < 40; ++s) {
    auto f = random_flow(2 + s % 4, 1 + s % 5, 100 + s);
    const double v = smcev::variance_recursion(f);
    EXPECT_GE(v, 0.0);
    for (std::size_t t = 0; t < f.xi.size(); ++t)
      for (auto& x : f.xi[t]) x += 0.7 * static_cast<double>(t) - 3.0;
    EXPECT_NEAR(smcev::variance_recursion(f), v, 1e-10 * std::max(1.0, v));
  }
}

TEST(VarianceRecursion, ZeroInteriorBetaIsAnError) {
  auto f = random_flow(2, 2, 5);
  f.beta[1] = 0.0;
  EXPECT_THROW(smcev::variance_recursion(f), smcev::Error);
}

TEST(ParticleSum, ConstantTestFunctionIsExact) {
  auto f = random_flow(3, 2, 6);
  for (auto& x : f.xi) x.assign(3, 2.0);
  const double exact = smcev::exact_weighted_sum(f);
  EXPECT_NEAR(smcev::particle_weighted_sum(f, 50, 1, 0), exact, 1e-12);
  const auto c = smcev::empirical_clt_check(f, 50, 20, 1);
  EXPECT_NEAR(c.empirical_variance, 0.0, 1e-20);
  EXPECT_NEAR(c.predicted_variance, 0.0, 1e-20);
}

TEST(ParticleSum, ConvergesToExact) {
  const auto f = random_flow(3, 3, 7);
  const double exact = smcev::exact_weighted_sum(f);
  const double v = smcev::variance_recursion(f);
  const std::size_t N = 200000;
  EXPECT_NEAR(smcev::particle_weighted_sum(f, N, 3, 0), exact, 4.0 * std::sqrt(v / N));
}

TEST(PathSamplingFlow, WeightedSumIsTrapezoidOfExactMeans) {
  const std::vector<double> prior{0.2, 0.5, 0.3}, ll{-1.5, 0.4, -0.3}, alphas{0.0, 0.2, 0.5, 1.0};
  const auto f = smcev::path_sampling_flow(prior, ll, alphas);
  std::vector<double> U;
  for (double a : alphas) {
    double z = 0.0, s = 0.0;
    for (int j = 0; j < 3; ++j) {
      const double w = prior[j] * std::exp(a * ll[j]);
      z += w;
      s += w * ll[j];
    }
    U.push_back(s / z);
  }
  EXPECT_NEAR(smcev::exact_weighted_sum(f), oracle::trapezoid(alphas, U), 1e-13);
  // The kernel leaves the previous target invariant, so the marginals are the tempered laws.
  const auto m = smcev::exact_marginals(f);
  double z = 0.0;
  for (int j = 0; j < 3; ++j) z += prior[j] * std::exp(ll[j]);
  for (int j = 0; j < 3; ++j) EXPECT_NEAR(m.eta_hat[3][j], prior[j] * std::exp(ll[j]) / z, 1e-14);
}

}  // namespace
