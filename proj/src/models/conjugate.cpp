#include <cmath>
#include <numbers>

#include "smcev/error.hpp"
#include "smcev/models.hpp"

namespace smcev {
namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

double log_normal(double x, double mean, double var) {
  const double d = x - mean;
  return -0.5 * (kLog2Pi + std::log(var) + d * d / var);
}

}  // namespace

double conj_gaussian_log_evidence(std::span<const double> y, double prior_mean, double prior_var, double noise_var) {
  if (!(prior_var > 0.0) || !(noise_var > 0.0)) fail(ErrorCode::invalid_argument, "variances must be positive");
  const auto n = static_cast<double>(y.size());
  if (y.empty()) return 0.0;
  double mean = 0.0;
  for (double v : y) mean += v;
  mean /= n;
  double ss = 0.0;
  for (double v : y) ss += (v - mean) * (v - mean);
  // Sample mean ~ N(m0, s0^2 + sigma^2/n), residuals independent of it.
  const double tot = noise_var + n * prior_var;
  return -0.5 * n * (kLog2Pi + std::log(noise_var)) - 0.5 * ss / noise_var + 0.5 * std::log(noise_var / tot) -
         0.5 * n * (mean - prior_mean) * (mean - prior_mean) / tot;
}

ConjugateGaussian::ConjugateGaussian(std::vector<double> y, double prior_mean, double prior_var, double noise_var)
    : n_(y.size()), m0_(prior_mean), s0sq_(prior_var), sigsq_(noise_var) {
  if (!(prior_var > 0.0) || !(noise_var > 0.0)) fail(ErrorCode::invalid_argument, "variances must be positive");
  if (n_ > 0) {
    for (double v : y) mean_ += v;
    mean_ /= static_cast<double>(n_);
    for (double v : y) ss_ += (v - mean_) * (v - mean_);
  }
}

std::vector<BlockSpec> ConjugateGaussian::blocks() const { return {BlockSpec{"mu", {0}, Transform::identity}}; }

double ConjugateGaussian::log_prior(std::span<const double> theta) const { return log_normal(theta[0], m0_, s0sq_); }

double ConjugateGaussian::log_likelihood(std::span<const double> theta) const {
  if (n_ == 0) return 0.0;
  const double n = static_cast<double>(n_);
  const double d = mean_ - theta[0];
  return -0.5 * n * (kLog2Pi + std::log(sigsq_)) - 0.5 * (ss_ + n * d * d) / sigsq_;
}

std::vector<double> ConjugateGaussian::sample_prior(RngStream& rng) const {
  return {m0_ + std::sqrt(s0sq_) * rng.normal()};
}

std::optional<double> ConjugateGaussian::log_evidence() const {
  if (n_ == 0) return 0.0;
  const double n = static_cast<double>(n_);
  const double tot = sigsq_ + n * s0sq_;
  return -0.5 * n * (kLog2Pi + std::log(sigsq_)) - 0.5 * ss_ / sigsq_ + 0.5 * std::log(sigsq_ / tot) -
         0.5 * n * (mean_ - m0_) * (mean_ - m0_) / tot;
}

double ConjugateGaussian::posterior_var() const {
  return 1.0 / (1.0 / s0sq_ + static_cast<double>(n_) / sigsq_);
}

double ConjugateGaussian::posterior_mean() const {
  return posterior_var() * (m0_ / s0sq_ + static_cast<double>(n_) * mean_ / sigsq_);
}

}  // namespace smcev
