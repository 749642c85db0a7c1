#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "smcev/rng.hpp"

namespace smcev {

struct Particle {
  std::vector<double> state;
  int model_id = 0;
};

/// Weighted particle population. Weights are kept in natural-log space and
/// are normalized (exp sums to one) between iterations.
struct ParticleSystem {
  std::vector<Particle> particles;
  std::vector<double> log_norm_weights;
  std::vector<double> last_log_inc_weights;

  std::size_t size() const noexcept { return particles.size(); }
  std::vector<double> weights() const;

  /// Equal weights 1/N and zero incremental weights.
  static ParticleSystem uniform(std::vector<Particle> particles);
};

struct NormalizedWeights {
  std::vector<double> log_weights;
  double log_sum = 0.0;  // log of the sum of exp(raw)
};

/// Max-shifted log-sum-exp normalization. Throws degenerate_weights when every
/// entry is -inf (or NaN).
NormalizedWeights normalize_log_weights(std::span<const double> raw);

/// log(sum(exp(v))) with the max shift; -inf for an all -inf input.
double log_sum_exp(std::span<const double> v);

// ESS/CESS of the reweighted system given normalized previous weights and
// unnormalized incremental weights (not logs).
double ess(std::span<const double> w_prev, std::span<const double> w_inc);
double cess(std::span<const double> w_prev, std::span<const double> w_inc);

// Same quantities from log-space inputs; shifts incremental weights by their
// maximum so large log-likelihood differences cannot overflow.
double ess_log(std::span<const double> log_w_prev, std::span<const double> log_w_inc);
double cess_log(std::span<const double> log_w_prev, std::span<const double> log_w_inc);

/// 1 / sum W^2 of a normalized log-weight vector.
double ess_of(std::span<const double> log_norm_weights);

enum class ResampleScheme { multinomial, systematic };

std::vector<std::size_t> multinomial_ancestors(std::span<const double> weights, std::size_t n, RngStream& rng);
std::vector<std::size_t> systematic_ancestors(std::span<const double> weights, std::size_t n, RngStream& rng);

ParticleSystem resample_multinomial(const ParticleSystem& sys, RngStream& rng);
ParticleSystem resample_systematic(const ParticleSystem& sys, RngStream& rng);
ParticleSystem resample(const ParticleSystem& sys, ResampleScheme scheme, RngStream& rng);

/// Coordinate transform applied to a block before moment estimation or a
/// random-walk step. logit_last maps a simplex (w_1..w_r) to log(w_j / w_r),
/// j < r.
enum class Transform { identity, log, logit_last };

std::size_t transformed_size(Transform t, std::size_t n);

/// Maps x into transformed coordinates; throws transform_domain when x lies
/// outside the transform's domain.
std::vector<double> to_transformed(std::span<const double> x, Transform t);
std::vector<double> from_transformed(std::span<const double> z, Transform t);

/// log |d x / d z| of the inverse map, evaluated at x.
double log_jacobian(std::span<const double> x, Transform t);

struct Moments {
  std::vector<double> mean;
  std::vector<double> variance;
};

inline constexpr double kDefaultVarianceFloor = 1e-12;

/// Self-normalized importance estimates of the mean and (population)
/// variance of the transformed coordinates `indices` of every particle.
Moments weighted_moments(const ParticleSystem& sys, std::span<const std::size_t> indices, Transform transform,
                         double variance_floor = kDefaultVarianceFloor);

}  // namespace smcev
