#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "smcev/model.hpp"
#include "smcev/rng.hpp"

namespace smcev {

// --- Conjugate Gaussian -----------------------------------------------------

/// y_i ~ N(mu, noise_var), mu ~ N(prior_mean, prior_var). State: (mu).
class ConjugateGaussian final : public TargetModel {
 public:
  ConjugateGaussian(std::vector<double> y, double prior_mean, double prior_var, double noise_var);

  std::string name() const override { return "conjugate"; }
  std::size_t dimension() const override { return 1; }
  std::vector<BlockSpec> blocks() const override;
  double log_prior(std::span<const double> theta) const override;
  double log_likelihood(std::span<const double> theta) const override;
  std::vector<double> sample_prior(RngStream& rng) const override;
  std::optional<double> log_evidence() const override;

  double posterior_mean() const;
  double posterior_var() const;
  std::size_t size() const { return n_; }

 private:
  std::size_t n_;
  double mean_ = 0.0;  // sample mean
  double ss_ = 0.0;    // sum of squared deviations from the sample mean
  double m0_, s0sq_, sigsq_;
};

/// Closed-form log marginal likelihood of the conjugate Gaussian model.
double conj_gaussian_log_evidence(std::span<const double> y, double prior_mean, double prior_var, double noise_var);

// --- Gaussian mixture -------------------------------------------------------

struct GmmPrior {
  double xi = 0.0;     // mean of mu_j
  double kappa = 1.0;  // precision of mu_j
  double nu = 2.0;     // Gamma shape of lambda_j
  double chi = 1.0;    // Gamma scale of lambda_j
  double rho = 1.0;    // symmetric Dirichlet parameter

  static GmmPrior from_data(std::span<const double> y);
};

/// r-component univariate normal mixture. State layout:
/// (w_1..w_r, mu_1..mu_r, lambda_1..lambda_r), lambda being precisions.
class Gmm final : public TargetModel {
 public:
  Gmm(std::vector<double> y, std::size_t components, GmmPrior prior, bool ordered);

  std::string name() const override { return "gmm" + std::to_string(r_); }
  std::size_t dimension() const override { return 3 * r_; }
  std::vector<BlockSpec> blocks() const override;
  double log_prior(std::span<const double> theta) const override;
  double log_likelihood(std::span<const double> theta) const override;
  std::vector<double> sample_prior(RngStream& rng) const override;

  std::size_t components() const { return r_; }
  bool ordered() const { return ordered_; }
  const GmmPrior& prior() const { return prior_; }

 private:
  std::vector<double> y_;
  std::size_t r_;
  GmmPrior prior_;
  bool ordered_;
};

double gmm_log_likelihood(std::span<const double> y, std::span<const double> theta, std::size_t r);

/// n draws from the four-component benchmark mixture: means (-3, 0, 3, 6),
/// precisions 2, equal weights.
std::vector<double> gmm_generate_data(RngStream& rng, std::size_t n = 100);

struct MixtureComponent {
  double w = 0.0;
  double mu = 0.0;
  double lambda = 1.0;
};

struct SplitDraw {
  double u1 = 0.5;
  double u2 = 0.5;
  double u3 = 0.5;
};

/// Moment-matching split of one component into two (lower mean first).
std::pair<MixtureComponent, MixtureComponent> gmm_split(const MixtureComponent& c, const SplitDraw& u);
/// Inverse of gmm_split; also returns the implied auxiliary draws.
std::pair<MixtureComponent, SplitDraw> gmm_combine(const MixtureComponent& a, const MixtureComponent& b);
/// log |d(w1, mu1, s1, w2, mu2, s2) / d(w, mu, s, u1, u2, u3)| with s = 1/lambda.
double gmm_split_log_jacobian(const MixtureComponent& c, const MixtureComponent& a, const MixtureComponent& b,
                              const SplitDraw& u);

enum class GmmMoves { all, split_combine, birth_death };

/// Split/combine and birth/death moves between ordered mixtures whose model
/// ids equal their component counts.
class GmmJump final : public JumpMove {
 public:
  explicit GmmJump(GmmPrior prior, GmmMoves moves = GmmMoves::all) : prior_(prior), moves_(moves) {}

  std::optional<JumpProposal> propose(const Particle& current, int min_id, int max_id,
                                      RngStream& rng) const override;

  std::optional<JumpProposal> split(const Particle& current, std::size_t j, const SplitDraw& u) const;
  std::optional<JumpProposal> combine(const Particle& current, std::size_t j) const;
  std::optional<JumpProposal> birth(const Particle& current, const MixtureComponent& born) const;
  std::optional<JumpProposal> death(const Particle& current, std::size_t j) const;

 private:
  double log_birth_density(std::size_t r, const MixtureComponent& born) const;

  GmmPrior prior_;
  GmmMoves moves_;
};

/// Model space of ordered mixtures with ids lo..hi, a uniform prior over r and
/// the split/combine plus birth/death jump.
ModelSpace gmm_model_space(const std::vector<double>& y, int lo, int hi, bool ordered = true,
                           GmmMoves moves = GmmMoves::all);

// --- Goodwin oscillator ---------------------------------------------------------

struct GoodwinSpec {
  std::size_t m = 3;
  double rho = 10.0;
  double sigma = 0.2;
  double step = 0.05;           // RK4 internal step
  double dt = 0.5;              // observation grid spacing
  std::size_t grid = 121;       // points on [0, 60]
  std::size_t observed = 80;    // trailing grid points used for inference
  double prior_shape = 0.1;
  double prior_scale = 0.1;
  double overflow = 1e12;
};

struct GoodwinTrajectory {
  std::vector<double> times;
  std::vector<double> x1;
  std::vector<double> x2;
  bool ok = true;
};

/// RK4 solution from X(0) = 0 sampled on the full observation grid. Parameters
/// are (alpha, a1, a2, k_1..k_{m-1}); `ok` is false after an overflow.
GoodwinTrajectory goodwin_solve(const GoodwinSpec& spec, std::span<const double> params);

class Goodwin final : public TargetModel {
 public:
  /// `x1`, `x2`: observations on the trailing `spec.observed` grid points.
  Goodwin(GoodwinSpec spec, std::vector<double> x1, std::vector<double> x2);

  std::string name() const override { return "goodwin" + std::to_string(spec_.m); }
  std::size_t dimension() const override { return spec_.m + 2; }
  std::vector<BlockSpec> blocks() const override;
  double log_prior(std::span<const double> theta) const override;
  double log_likelihood(std::span<const double> theta) const override;
  std::vector<double> sample_prior(RngStream& rng) const override;

  const GoodwinSpec& spec() const { return spec_; }

 private:
  GoodwinSpec spec_;
  std::vector<double> x1_, x2_;
};

// --- PET compartmental model ----------------------------------------------------

/// Piecewise-linear plasma input function, held constant after its last knot.
struct InputFunction {
  std::vector<double> t;
  std::vector<double> c;

  /// The bundled synthetic curve: peak at one minute, slow decay to 90 minutes, 32 knots.
  static InputFunction synthetic();
  double at(double s) const;
};

/// Exact value of sum_i phi_i * int_0^t C_P(s) exp(-theta_i (t - s)) ds.
double pet_ct(const InputFunction& cp, std::span<const double> phi, std::span<const double> theta, double t);

double pet_vd(std::span<const double> phi, std::span<const double> theta);

struct PetPrior {
  double phi_lo = 1e-5, phi_hi = 1.0;
  double theta_lo = 1e-4, theta_hi = 1.0;
  double sigma2_lo = 1e-4, sigma2_hi = 1e2;
};

/// y_j ~ N(C_T(t_j), sigma^2). State: (phi_1..phi_m, theta_1..theta_m, sigma^2)
/// with independent log-uniform priors.
class Pet final : public TargetModel {
 public:
  Pet(InputFunction cp, std::vector<double> times, std::vector<double> y, std::size_t m, PetPrior prior = {});

  std::string name() const override { return "pet" + std::to_string(m_); }
  std::size_t dimension() const override { return 2 * m_ + 1; }
  std::vector<BlockSpec> blocks() const override;
  double log_prior(std::span<const double> theta) const override;
  double log_likelihood(std::span<const double> theta) const override;
  std::vector<double> sample_prior(RngStream& rng) const override;

 private:
  InputFunction cp_;
  std::vector<double> t_, y_;
  std::size_t m_;
  PetPrior prior_;
};

/// Sampling times of the simulated scan: 32 frames over 90 minutes.
std::vector<double> pet_default_times();

}  // namespace smcev
