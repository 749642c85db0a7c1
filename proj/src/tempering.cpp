#include "smcev/tempering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "smcev/error.hpp"

namespace smcev {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double clamp_mass(double a) { return std::clamp(a, kMixtureEpsilon, 1.0 - kMixtureEpsilon); }

double criterion(std::span<const double> stats, std::span<const double> log_w_prev, PathKind kind, double from,
                 double to, bool relative_ess, double ess_prev) {
  std::vector<double> lw(stats.size());
  for (std::size_t i = 0; i < stats.size(); ++i) lw[i] = path_log_ratio(kind, stats[i], from, to);
  if (relative_ess) return ess_log(log_w_prev, lw) / ess_prev;
  return cess_log(log_w_prev, lw) / static_cast<double>(stats.size());
}

}  // namespace

double mixture_log_mass(bool upper, double alpha) {
  if (upper) {
    if (alpha <= 0.0) return kNegInf;
    if (alpha >= 1.0) return 0.0;
    return std::log(clamp_mass(alpha));
  }
  if (alpha >= 1.0) return kNegInf;
  if (alpha <= 0.0) return 0.0;
  return std::log(clamp_mass(1.0 - alpha));
}

double path_log_ratio(PathKind kind, double stat, double from, double to) {
  if (kind == PathKind::geometric) {
    if (stat == kNegInf) return kNegInf;
    return (to - from) * stat;
  }
  const bool upper = stat > 0.5;
  const double a = upper ? to : 1.0 - to;
  const double b = upper ? from : 1.0 - from;
  if (a <= 0.0) return kNegInf;
  return std::log(clamp_mass(a)) - std::log(clamp_mass(b));
}

double path_derivative(PathKind kind, double stat, double alpha) {
  if (kind == PathKind::geometric) return stat;
  return stat > 0.5 ? 1.0 / clamp_mass(alpha) : -1.0 / clamp_mass(1.0 - alpha);
}

TemperedPath TemperedPath::geometric(const ModelSpace& space) {
  TemperedPath p;
  p.space_ = &space;
  p.kind_ = PathKind::geometric;
  return p;
}

TemperedPath TemperedPath::model_mixture(const ModelSpace& space, int lower, int upper) {
  require(lower != upper, "mixture path needs two distinct model ids");
  require(space.contains(lower) && space.contains(upper), "mixture path models missing from space");
  TemperedPath p;
  p.space_ = &space;
  p.kind_ = PathKind::model_mixture;
  p.lower_ = lower;
  p.upper_ = upper;
  return p;
}

Density TemperedPath::evaluate(const Particle& p) const {
  const auto& m = space_->model(p.model_id);
  Density d;
  d.log_prior = m.log_prior(p.state);
  if (kind_ == PathKind::geometric) d.log_prior += space_->log_model_prior(p.model_id);
  if (d.log_prior == kNegInf) {
    d.log_likelihood = kNegInf;
    return d;
  }
  d.log_likelihood = m.log_likelihood(p.state);
  if (std::isnan(d.log_likelihood)) d.log_likelihood = kNegInf;
  return d;
}

double TemperedPath::log_target(const Density& d, int model_id, double alpha) const {
  if (d.log_prior == kNegInf || d.log_likelihood == kNegInf) return kNegInf;
  if (kind_ == PathKind::geometric) {
    return alpha == 0.0 ? d.log_prior : d.log_prior + alpha * d.log_likelihood;
  }
  if (model_id != lower_ && model_id != upper_) return kNegInf;
  return mixture_log_mass(model_id == upper_, alpha) + d.log_prior + d.log_likelihood;
}

double TemperedPath::stat(const Density& d, int model_id) const {
  if (kind_ == PathKind::geometric) return d.log_likelihood;
  return model_id == upper_ ? 1.0 : 0.0;
}

double log_inc_weight(const TemperedPath& path, double alpha_prev, double alpha_next, const Particle& particle) {
  require(alpha_prev >= 0.0 && alpha_prev < alpha_next && alpha_next <= 1.0, "need 0 <= alpha_prev < alpha_next <= 1");
  const Density d = path.evaluate(particle);
  return path_log_ratio(path.kind(), path.stat(d, particle.model_id), alpha_prev, alpha_next);
}

double next_alpha_fixed(const Schedule& schedule, std::size_t t, std::size_t T) {
  require(T >= 1 && t <= T, "need 0 <= t <= T");
  if (t == 0) return 0.0;
  if (t == T) return 1.0;
  const double s = static_cast<double>(t) / static_cast<double>(T);
  switch (schedule.kind) {
    case ScheduleKind::power:
      return std::pow(s, schedule.power);
    case ScheduleKind::posterior:
      return 1.0 - std::pow(1.0 - s, schedule.power);
    default:
      return s;
  }
}

NextAlpha find_next_alpha(std::span<const double> stats, std::span<const double> log_w_prev, PathKind kind,
                          double alpha_prev, const BisectionConfig& cfg, bool relative_ess) {
  require(alpha_prev < 1.0, "alpha_prev must be below 1");
  require(cfg.tolerance > 0.0 && cfg.max_iters >= 1, "invalid bisection config");
  require(stats.size() == log_w_prev.size() && !stats.empty(), "stats and weights differ in length");
  const double ess_prev = relative_ess ? ess_of(log_w_prev) : 1.0;
  auto value = [&](double a) { return criterion(stats, log_w_prev, kind, alpha_prev, a, relative_ess, ess_prev); };

  if (value(1.0) >= cfg.target) return {1.0, false};
  double lo = std::min(alpha_prev + cfg.tolerance, 1.0);
  if (lo >= 1.0) return {1.0, false};
  if (value(lo) < cfg.target) return {lo, true};
  double hi = 1.0;
  for (int it = 0; it < cfg.max_iters && hi - lo > cfg.tolerance; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (value(mid) >= cfg.target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return {lo, false};
}

}  // namespace smcev
