#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "smcev/error.hpp"
#include "smcev/models.hpp"

namespace smcev {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// (x + exp(-x) - 1) / x^2, accurate for small x.
double second_order_kernel(double x) {
  if (std::abs(x) < 1e-3) return 0.5 - x / 6.0 + x * x / 24.0 - x * x * x / 120.0;
  return (x + std::expm1(-x)) / (x * x);
}

// -expm1(-x) / x, i.e. (1 - exp(-x)) / x.
double first_order_kernel(double x) {
  if (std::abs(x) < 1e-8) return 1.0 - 0.5 * x;
  return -std::expm1(-x) / x;
}

// int_{s0}^{s1} (c0 + g (s - s0)) exp(-theta (t - s)) ds for t >= s1.
double segment_integral(double s0, double s1, double c0, double g, double theta, double t) {
  const double d = s1 - s0;
  const double x = theta * d;
  const double e1 = std::exp(-theta * (t - s1));
  return e1 * d * (c0 * first_order_kernel(x) + g * d * second_order_kernel(x));
}

double log_uniform_density(double v, double lo, double hi) {
  if (!(v >= lo && v <= hi)) return kNegInf;
  return -std::log(v) - std::log(std::log(hi / lo));
}

double draw_log_uniform(RngStream& rng, double lo, double hi) {
  return std::exp(std::log(lo) + rng.uniform() * std::log(hi / lo));
}

}  // namespace

InputFunction InputFunction::synthetic() {
  // Linear rise to a peak at one minute, then a bi-exponential washout.
  InputFunction f;
  f.t = {0.0, 0.25, 0.5, 0.75, 1.0};
  const std::size_t knots = 32;
  const std::size_t tail = knots - f.t.size();
  for (std::size_t k = 1; k <= tail; ++k) {
    // Knots spread geometrically between 1 and 90 minutes.
    f.t.push_back(std::exp(std::log(90.0) * static_cast<double>(k) / static_cast<double>(tail)));
  }
  f.c.reserve(knots);
  for (double s : f.t) {
    if (s <= 1.0) {
      f.c.push_back(100.0 * s);
    } else {
      f.c.push_back(70.0 * std::exp(-1.2 * (s - 1.0)) + 30.0 * std::exp(-0.015 * (s - 1.0)));
    }
  }
  return f;
}

double InputFunction::at(double s) const {
  require(!t.empty() && t.size() == c.size(), "empty input function");
  if (s <= t.front()) return c.front();
  if (s >= t.back()) return c.back();
  auto it = std::upper_bound(t.begin(), t.end(), s);
  const std::size_t k = static_cast<std::size_t>(it - t.begin());
  const double f = (s - t[k - 1]) / (t[k] - t[k - 1]);
  return c[k - 1] + f * (c[k] - c[k - 1]);
}

double pet_ct(const InputFunction& cp, std::span<const double> phi, std::span<const double> theta, double t) {
  require(phi.size() == theta.size(), "phi and theta differ in length");
  require(cp.t.size() == cp.c.size() && !cp.t.empty(), "empty input function");
  double total = 0.0;
  for (std::size_t i = 0; i < phi.size(); ++i) {
    double acc = 0.0;
    double s0 = 0.0;
    double c0 = cp.at(0.0);
    // Segments of the interpolant up to t, then the constant extension.
    for (std::size_t k = 0; k < cp.t.size() && s0 < t; ++k) {
      if (cp.t[k] <= s0) continue;
      const double s1 = std::min(cp.t[k], t);
      const double c1 = cp.at(s1);
      const double g = (c1 - c0) / (s1 - s0);
      acc += segment_integral(s0, s1, c0, g, theta[i], t);
      s0 = s1;
      c0 = c1;
    }
    if (s0 < t) acc += segment_integral(s0, t, c0, 0.0, theta[i], t);
    total += phi[i] * acc;
  }
  return total;
}

double pet_vd(std::span<const double> phi, std::span<const double> theta) {
  require(phi.size() == theta.size(), "phi and theta differ in length");
  double v = 0.0;
  for (std::size_t i = 0; i < phi.size(); ++i) v += phi[i] / theta[i];
  return v;
}

std::vector<double> pet_default_times() {
  // Frame mid-times: short frames early, longer ones later.
  std::vector<double> t;
  double now = 0.0;
  auto frames = [&](int count, double len) {
    for (int i = 0; i < count; ++i) {
      t.push_back(now + 0.5 * len);
      now += len;
    }
  };
  frames(8, 0.25);
  frames(8, 1.0);
  frames(8, 3.0);
  frames(8, 7.5);
  return t;
}

Pet::Pet(InputFunction cp, std::vector<double> times, std::vector<double> y, std::size_t m, PetPrior prior)
    : cp_(std::move(cp)), t_(std::move(times)), y_(std::move(y)), m_(m), prior_(prior) {
  require(m_ >= 1, "PET model needs at least one compartment");
  require(t_.size() == y_.size() && !t_.empty(), "PET times and data differ in length");
}

std::vector<BlockSpec> Pet::blocks() const {
  std::vector<std::size_t> phi(m_), theta(m_);
  std::iota(phi.begin(), phi.end(), 0);
  std::iota(theta.begin(), theta.end(), m_);
  return {BlockSpec{"phi", phi, Transform::log}, BlockSpec{"theta", theta, Transform::log},
          BlockSpec{"sigma2", {2 * m_}, Transform::log}};
}

double Pet::log_prior(std::span<const double> s) const {
  double lp = 0.0;
  for (std::size_t i = 0; i < m_; ++i) {
    lp += log_uniform_density(s[i], prior_.phi_lo, prior_.phi_hi);
    lp += log_uniform_density(s[m_ + i], prior_.theta_lo, prior_.theta_hi);
  }
  lp += log_uniform_density(s[2 * m_], prior_.sigma2_lo, prior_.sigma2_hi);
  return std::isnan(lp) ? kNegInf : lp;
}

double Pet::log_likelihood(std::span<const double> s) const {
  const auto phi = s.subspan(0, m_);
  const auto theta = s.subspan(m_, m_);
  const double s2 = s[2 * m_];
  if (!(s2 > 0.0)) return kNegInf;
  double ss = 0.0;
  for (std::size_t j = 0; j < t_.size(); ++j) {
    const double d = y_[j] - pet_ct(cp_, phi, theta, t_[j]);
    ss += d * d;
  }
  const double n = static_cast<double>(t_.size());
  return -0.5 * n * std::log(2.0 * M_PI * s2) - 0.5 * ss / s2;
}

std::vector<double> Pet::sample_prior(RngStream& rng) const {
  std::vector<double> s(2 * m_ + 1);
  for (std::size_t i = 0; i < m_; ++i) s[i] = draw_log_uniform(rng, prior_.phi_lo, prior_.phi_hi);
  for (std::size_t i = 0; i < m_; ++i) s[m_ + i] = draw_log_uniform(rng, prior_.theta_lo, prior_.theta_hi);
  s[2 * m_] = draw_log_uniform(rng, prior_.sigma2_lo, prior_.sigma2_hi);
  return s;
}

}  // namespace smcev
