#include "smcev/clt.hpp"

#include <tbb/parallel_for.h>

#include <cmath>
#include <numeric>

#include "smcev/error.hpp"
#include "smcev/particles.hpp"
#include "smcev/rng.hpp"

namespace smcev {
namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

std::vector<double> row_times(const std::vector<double>& v, const Matrix& m) {
  std::vector<double> out(m.front().size(), 0.0);
  for (std::size_t i = 0; i < v.size(); ++i) {
    for (std::size_t j = 0; j < out.size(); ++j) out[j] += v[i] * m[i][j];
  }
  return out;
}

std::vector<double> times_col(const Matrix& m, const std::vector<double>& f) {
  std::vector<double> out(m.size(), 0.0);
  for (std::size_t i = 0; i < m.size(); ++i) out[i] = dot(m[i], f);
  return out;
}

std::size_t draw_state(const std::vector<double>& p, RngStream& rng) {
  double u = rng.uniform();
  for (std::size_t j = 0; j + 1 < p.size(); ++j) {
    if (u < p[j]) return j;
    u -= p[j];
  }
  return p.size() - 1;
}

}  // namespace

void FiniteStateFlow::validate() const {
  const std::size_t S = states();
  const std::size_t T = steps();
  require(S >= 1, "flow needs at least one state");
  require(G.size() == T, "flow needs one potential per step");
  require(xi.size() == T + 1 && beta.size() == T + 1, "flow needs T + 1 test functions and coefficients");
  require(std::abs(std::accumulate(eta_hat0.begin(), eta_hat0.end(), 0.0) - 1.0) < 1e-10,
          "initial distribution must sum to one");
  for (double p : eta_hat0) require(p >= 0.0, "initial distribution must be non-negative");
  for (std::size_t t = 0; t < T; ++t) {
    require(M[t].size() == S && G[t].size() == S, "flow matrix or potential has the wrong size");
    for (const auto& row : M[t]) {
      require(row.size() == S, "flow matrix is not square");
      for (double p : row) require(p >= 0.0, "transition probabilities must be non-negative");
      require(std::abs(std::accumulate(row.begin(), row.end(), 0.0) - 1.0) < 1e-10,
              "transition rows must sum to one");
    }
    for (double g : G[t]) require(g > 0.0, "potentials must be positive");
  }
  for (const auto& x : xi) require(x.size() == S, "test function has the wrong size");
}

FlowMarginals exact_marginals(const FiniteStateFlow& flow) {
  flow.validate();
  FlowMarginals m;
  m.eta.push_back(flow.eta_hat0);
  m.eta_hat.push_back(flow.eta_hat0);
  for (std::size_t t = 1; t <= flow.steps(); ++t) {
    auto eta = row_times(m.eta_hat.back(), flow.M[t - 1]);
    std::vector<double> hat(eta.size());
    for (std::size_t j = 0; j < eta.size(); ++j) hat[j] = eta[j] * flow.G[t - 1][j];
    const double z = std::accumulate(hat.begin(), hat.end(), 0.0);
    for (auto& v : hat) v /= z;
    m.eta.push_back(std::move(eta));
    m.eta_hat.push_back(std::move(hat));
  }
  return m;
}

double exact_weighted_sum(const FiniteStateFlow& flow) {
  const auto m = exact_marginals(flow);
  double s = 0.0;
  for (std::size_t t = 0; t <= flow.steps(); ++t) s += flow.beta[t] * dot(m.eta_hat[t], flow.xi[t]);
  return s;
}

double variance_recursion(const FiniteStateFlow& flow) {
  const auto m = exact_marginals(flow);
  const std::size_t T = flow.steps();
  for (std::size_t t = 0; t < T; ++t) {
    require(flow.beta[t] != 0.0, "variance recursion needs non-zero beta before the last step");
  }
  // Walk backwards: fold each step's propagated fluctuation into the
  // previous test function, V_t(xi_{0:t}) = V_{t-1}(..., xi_{t-1} + ...) + ...
  std::vector<double> xi = flow.xi[T];
  double v = 0.0;
  for (std::size_t t = T; t >= 1; --t) {
    const auto& G = flow.G[t - 1];
    const auto& hat = m.eta_hat[t];
    const double eta_g = dot(m.eta[t], G);
    const double centre = dot(hat, xi);
    std::vector<double> gc(xi.size());
    double local = 0.0;
    for (std::size_t j = 0; j < xi.size(); ++j) {
      const double c = xi[j] - centre;
      gc[j] = G[j] * c;
      local += hat[j] * G[j] * c * c;
    }
    v += flow.beta[t] * flow.beta[t] * local / eta_g;
    const auto prop = times_col(flow.M[t - 1], gc);
    std::vector<double> prev = flow.xi[t - 1];
    const double ratio = flow.beta[t] / flow.beta[t - 1];
    for (std::size_t j = 0; j < prev.size(); ++j) prev[j] += ratio * prop[j] / eta_g;
    xi = std::move(prev);
  }
  const double c0 = dot(flow.eta_hat0, xi);
  double var0 = 0.0;
  for (std::size_t j = 0; j < xi.size(); ++j) var0 += flow.eta_hat0[j] * (xi[j] - c0) * (xi[j] - c0);
  return v + flow.beta[0] * flow.beta[0] * var0;
}

double particle_weighted_sum(const FiniteStateFlow& flow, std::size_t N, std::uint64_t seed, std::uint64_t replicate) {
  require(N >= 1, "need at least one particle");
  RngStream rng(seed, derive_stream({replicate, N, 0x636c74ULL}));
  std::vector<std::size_t> x(N), next(N);
  for (auto& s : x) s = draw_state(flow.eta_hat0, rng);
  std::vector<double> w(N, 1.0);
  auto estimate = [&](const std::vector<double>& f) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      num += w[i] * f[x[i]];
      den += w[i];
    }
    return num / den;
  };
  double total = flow.beta[0] * estimate(flow.xi[0]);
  for (std::size_t t = 1; t <= flow.steps(); ++t) {
    const auto anc = multinomial_ancestors(w, N, rng);
    for (std::size_t i = 0; i < N; ++i) next[i] = draw_state(flow.M[t - 1][x[anc[i]]], rng);
    x.swap(next);
    for (std::size_t i = 0; i < N; ++i) w[i] = flow.G[t - 1][x[i]];
    total += flow.beta[t] * estimate(flow.xi[t]);
  }
  return total;
}

CltCheck empirical_clt_check(const FiniteStateFlow& flow, std::size_t N, std::size_t R, std::uint64_t seed) {
  require(R >= 2, "need at least two replicates");
  const double exact = exact_weighted_sum(flow);
  std::vector<double> err(R);
  tbb::parallel_for(std::size_t{0}, R, [&](std::size_t r) {
    err[r] = std::sqrt(static_cast<double>(N)) * (particle_weighted_sum(flow, N, seed, r) - exact);
  });
  double mean = std::accumulate(err.begin(), err.end(), 0.0) / static_cast<double>(R);
  double ss = 0.0;
  for (double e : err) ss += (e - mean) * (e - mean);
  CltCheck c;
  c.N = N;
  c.empirical_variance = ss / static_cast<double>(R - 1);
  c.predicted_variance = variance_recursion(flow);
  c.ratio = c.predicted_variance > 0.0 ? c.empirical_variance / c.predicted_variance
                                       : (c.empirical_variance == 0.0 ? 1.0 : INFINITY);
  return c;
}

FiniteStateFlow path_sampling_flow(const std::vector<double>& prior, const std::vector<double>& loglik,
                                   const std::vector<double>& alphas) {
  const std::size_t S = prior.size();
  require(S >= 2 && loglik.size() == S, "prior and likelihood must cover the same states");
  require(alphas.size() >= 2 && alphas.front() == 0.0 && alphas.back() == 1.0, "alphas must run from 0 to 1");
  for (std::size_t t = 1; t < alphas.size(); ++t) require(alphas[t] > alphas[t - 1], "alphas must increase");
  const double psum = std::accumulate(prior.begin(), prior.end(), 0.0);
  const std::size_t T = alphas.size() - 1;

  FiniteStateFlow f;
  for (double p : prior) f.eta_hat0.push_back(p / psum);
  for (std::size_t t = 1; t <= T; ++t) {
    // Metropolis kernel invariant for pi_{t-1}.
    std::vector<double> target(S);
    for (std::size_t j = 0; j < S; ++j) target[j] = f.eta_hat0[j] * std::exp(alphas[t - 1] * loglik[j]);
    Matrix M(S, std::vector<double>(S, 0.0));
    for (std::size_t i = 0; i < S; ++i) {
      double stay = 1.0;
      for (std::size_t j = 0; j < S; ++j) {
        if (j == i) continue;
        M[i][j] = std::min(1.0, target[j] / target[i]) / static_cast<double>(S - 1);
        stay -= M[i][j];
      }
      M[i][i] = stay;
    }
    f.M.push_back(std::move(M));
    std::vector<double> g(S);
    for (std::size_t j = 0; j < S; ++j) g[j] = std::exp((alphas[t] - alphas[t - 1]) * loglik[j]);
    f.G.push_back(std::move(g));
  }
  for (std::size_t t = 0; t <= T; ++t) f.xi.push_back(loglik);
  f.beta.resize(T + 1);
  f.beta[0] = 0.5 * (alphas[1] - alphas[0]);
  f.beta[T] = 0.5 * (alphas[T] - alphas[T - 1]);
  for (std::size_t t = 1; t < T; ++t) f.beta[t] = 0.5 * (alphas[t + 1] - alphas[t - 1]);
  return f;
}

}  // namespace smcev
