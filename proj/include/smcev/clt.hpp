#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace smcev {

using Matrix = std::vector<std::vector<double>>;

/// Finite-state Feynman-Kac flow. Index t runs over 0..T: eta_hat0 is the
/// initial law, M[t - 1] and G[t - 1] the transition and potential of step t,
/// xi[t] the test function and beta[t] its coefficient.
struct FiniteStateFlow {
  std::vector<double> eta_hat0;
  std::vector<Matrix> M;
  std::vector<std::vector<double>> G;
  std::vector<std::vector<double>> xi;
  std::vector<double> beta;

  std::size_t states() const { return eta_hat0.size(); }
  std::size_t steps() const { return M.size(); }

  /// Throws invalid_argument on shape errors, non-stochastic rows or
  /// non-positive potentials.
  void validate() const;
};

struct FlowMarginals {
  Matrix eta;      // eta[t] = eta_hat[t - 1] M_t for t >= 1; eta[0] = eta_hat0
  Matrix eta_hat;  // eta_hat[t] proportional to G_t * eta[t]
};

FlowMarginals exact_marginals(const FiniteStateFlow& flow);

/// sum_t beta_t eta_hat_t(xi_t).
double exact_weighted_sum(const FiniteStateFlow& flow);

/// Asymptotic variance V_T of sqrt(N) times the error of the particle
/// estimate of the weighted sum under multinomial resampling every step.
double variance_recursion(const FiniteStateFlow& flow);

/// Particle estimate of the weighted sum for one replicate.
double particle_weighted_sum(const FiniteStateFlow& flow, std::size_t N, std::uint64_t seed, std::uint64_t replicate);

struct CltCheck {
  std::size_t N = 0;
  double empirical_variance = 0.0;  // of sqrt(N) (estimate - exact)
  double predicted_variance = 0.0;
  double ratio = 0.0;
};

CltCheck empirical_clt_check(const FiniteStateFlow& flow, std::size_t N, std::size_t R, std::uint64_t seed);

/// Flow whose weighted sum is the trapezoidal path-sampling estimate for the
/// geometric path prior * exp(alpha * loglik) on a finite space. M_t is a
/// Metropolis kernel with uniform proposals that leaves pi_{t-1} invariant.
FiniteStateFlow path_sampling_flow(const std::vector<double>& prior, const std::vector<double>& loglik,
                                   const std::vector<double>& alphas);

}  // namespace smcev
