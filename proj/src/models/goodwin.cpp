#include <cmath>
#include <limits>
#include <numeric>

#include "smcev/error.hpp"
#include "smcev/models.hpp"

namespace smcev {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void derivative(const GoodwinSpec& spec, std::span<const double> p, const std::vector<double>& x,
                std::vector<double>& dx) {
  const std::size_t m = spec.m;
  const double alpha = p[0];
  const double a1 = p[1];
  const double a2 = p[2];
  const double xm = std::max(x[m - 1], 0.0);
  dx[0] = a1 / (1.0 + a2 * std::pow(xm, spec.rho)) - alpha * x[0];
  for (std::size_t i = 1; i < m; ++i) dx[i] = p[2 + i] * x[i - 1] - alpha * x[i];
}

}  // namespace

GoodwinTrajectory goodwin_solve(const GoodwinSpec& spec, std::span<const double> params) {
  require(spec.m >= 2, "Goodwin model needs at least two components");
  require(params.size() == spec.m + 2, "Goodwin parameter vector has the wrong length");
  const std::size_t m = spec.m;
  const auto per_obs = static_cast<std::size_t>(std::llround(spec.dt / spec.step));
  require(per_obs >= 1 && std::abs(static_cast<double>(per_obs) * spec.step - spec.dt) < 1e-12,
          "RK4 step must divide the observation spacing");

  GoodwinTrajectory out;
  out.times.reserve(spec.grid);
  out.x1.reserve(spec.grid);
  out.x2.reserve(spec.grid);
  std::vector<double> x(m, 0.0), k1(m), k2(m), k3(m), k4(m), tmp(m);
  const double h = spec.step;
  for (std::size_t g = 0; g < spec.grid; ++g) {
    if (g > 0) {
      for (std::size_t s = 0; s < per_obs; ++s) {
        derivative(spec, params, x, k1);
        for (std::size_t i = 0; i < m; ++i) tmp[i] = x[i] + 0.5 * h * k1[i];
        derivative(spec, params, tmp, k2);
        for (std::size_t i = 0; i < m; ++i) tmp[i] = x[i] + 0.5 * h * k2[i];
        derivative(spec, params, tmp, k3);
        for (std::size_t i = 0; i < m; ++i) tmp[i] = x[i] + h * k3[i];
        derivative(spec, params, tmp, k4);
        for (std::size_t i = 0; i < m; ++i) {
          x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
          if (!std::isfinite(x[i]) || std::abs(x[i]) > spec.overflow) {
            out.ok = false;
            return out;
          }
        }
      }
    }
    out.times.push_back(static_cast<double>(g) * spec.dt);
    out.x1.push_back(x[0]);
    out.x2.push_back(x[1]);
  }
  return out;
}

Goodwin::Goodwin(GoodwinSpec spec, std::vector<double> x1, std::vector<double> x2)
    : spec_(spec), x1_(std::move(x1)), x2_(std::move(x2)) {
  require(spec_.m >= 2, "Goodwin model needs at least two components");
  require(x1_.size() == spec_.observed && x2_.size() == spec_.observed, "Goodwin data length mismatch");
  require(spec_.observed <= spec_.grid, "more observations than grid points");
}

std::vector<BlockSpec> Goodwin::blocks() const {
  std::vector<std::size_t> idx(spec_.m + 2);
  std::iota(idx.begin(), idx.end(), 0);
  return {BlockSpec{"params", idx, Transform::log}};
}

double Goodwin::log_prior(std::span<const double> theta) const {
  const double a = spec_.prior_shape;
  const double b = spec_.prior_scale;
  double lp = 0.0;
  for (double v : theta) {
    if (!(v > 0.0) || !std::isfinite(v)) return kNegInf;
    lp += (a - 1.0) * std::log(v) - v / b - std::lgamma(a) - a * std::log(b);
  }
  return lp;
}

double Goodwin::log_likelihood(std::span<const double> theta) const {
  const auto traj = goodwin_solve(spec_, theta);
  if (!traj.ok) return kNegInf;
  const std::size_t first = spec_.grid - spec_.observed;
  const double s2 = spec_.sigma * spec_.sigma;
  double ss = 0.0;
  for (std::size_t k = 0; k < spec_.observed; ++k) {
    const double d1 = x1_[k] - traj.x1[first + k];
    const double d2 = x2_[k] - traj.x2[first + k];
    ss += d1 * d1 + d2 * d2;
  }
  const double n = 2.0 * static_cast<double>(spec_.observed);
  return -0.5 * n * std::log(2.0 * M_PI * s2) - 0.5 * ss / s2;
}

std::vector<double> Goodwin::sample_prior(RngStream& rng) const {
  std::vector<double> p(spec_.m + 2);
  for (auto& v : p) {
    // Shape 0.1 draws underflow to zero now and then; keep them positive.
    v = std::max(rng.gamma(spec_.prior_shape, spec_.prior_scale), std::numeric_limits<double>::min());
  }
  return p;
}

}  // namespace smcev
