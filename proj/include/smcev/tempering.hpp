#pragma once

#include <cstddef>
#include <span>

#include "smcev/model.hpp"
#include "smcev/particles.hpp"

namespace smcev {

// geometric:     log q_a = log pi(M) + log pi(theta|M) + a log p(y|theta,M)
// model_mixture: log q_a = log pi_a(M) + log pi(theta|M) + log p(y|theta,M),
//                with pi_a(upper) = a and pi_a(lower) = 1 - a.
enum class PathKind { geometric, model_mixture };

inline constexpr double kMixtureEpsilon = 1e-12;

/// Prior and likelihood of a particle at its current state.
struct Density {
  double log_prior = 0.0;
  double log_likelihood = 0.0;
};

/// log q_to(x) - log q_from(x) as a function of the per-particle statistic
/// (log-likelihood on a geometric path, upper-model indicator on a mixture).
double path_log_ratio(PathKind kind, double stat, double from, double to);

/// d log q_a / d a at the given statistic.
double path_derivative(PathKind kind, double stat, double alpha);

/// log pi_a(M) of the mixture path for a particle in the upper (or lower) model.
double mixture_log_mass(bool upper, double alpha);

class TemperedPath {
 public:
  /// Geometric likelihood path over every model of `space`, weighted by the
  /// model prior (a single-model space gives the per-model path).
  static TemperedPath geometric(const ModelSpace& space);
  /// Prior path between two models of `space`; requires lower != upper.
  static TemperedPath model_mixture(const ModelSpace& space, int lower, int upper);

  PathKind kind() const noexcept { return kind_; }
  const ModelSpace& space() const noexcept { return *space_; }
  int lower() const noexcept { return lower_; }
  int upper() const noexcept { return upper_; }

  Density evaluate(const Particle& p) const;
  double log_target(const Density& d, int model_id, double alpha) const;
  double stat(const Density& d, int model_id) const;

 private:
  TemperedPath() = default;

  const ModelSpace* space_ = nullptr;
  PathKind kind_ = PathKind::geometric;
  int lower_ = 0;
  int upper_ = 0;
};

/// log gamma_next(x) / gamma_prev(x) at the particle's current state.
double log_inc_weight(const TemperedPath& path, double alpha_prev, double alpha_next, const Particle& particle);

enum class ScheduleKind { linear, power, posterior, adaptive, adaptive_ess };

struct BisectionConfig {
  double target = 0.99;  // fraction of N
  double tolerance = 1e-8;
  int max_iters = 100;
};

struct Schedule {
  ScheduleKind kind = ScheduleKind::adaptive;
  double power = 2.0;
  std::size_t steps = 100;  // T for the fixed schedules
  BisectionConfig bisection;

  bool adaptive() const noexcept { return kind == ScheduleKind::adaptive || kind == ScheduleKind::adaptive_ess; }
};

/// Fixed schedules: linear t/T, power (t/T)^p, posterior 1 - (1 - t/T)^p.
double next_alpha_fixed(const Schedule& schedule, std::size_t t, std::size_t T);

struct NextAlpha {
  double alpha = 1.0;
  bool forced = false;  // bisection could not bracket; took a micro-step
};

/// Bisection for the next alpha. With `relative_ess` false the criterion is
/// cess / N = target; otherwise ess(W, w) / ess(W) = target. Works from the
/// cached statistics, so no model is evaluated.
NextAlpha find_next_alpha(std::span<const double> stats, std::span<const double> log_w_prev, PathKind kind,
                          double alpha_prev, const BisectionConfig& cfg, bool relative_ess = false);

}  // namespace smcev
