#include "smcev/particles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "smcev/error.hpp"

namespace smcev {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double max_finite(std::span<const double> v) {
  double m = kNegInf;
  for (double x : v) {
    if (!std::isnan(x) && x > m) m = x;
  }
  return m;
}

void check_sizes(std::size_t a, std::size_t b) {
  require(a == b, "weight vectors differ in length");
  require(a > 0, "empty weight vector");
}

std::vector<std::size_t> ancestors_from_uniforms(std::span<const double> weights,
                                                        std::span<const double> u) {
  std::vector<double> cum(weights.size());
  std::partial_sum(weights.begin(), weights.end(), cum.begin());
  const double total = cum.back();
  require(total > 0.0 && std::isfinite(total), "resampling weights must have a positive finite sum");
  std::vector<std::size_t> out;
  out.reserve(u.size());
  for (double x : u) {
    auto it = std::lower_bound(cum.begin(), cum.end(), x * total);
    std::size_t i = static_cast<std::size_t>(it - cum.begin());
    if (i >= cum.size()) {
      // Rounding pushed the target past the last cumulative sum.
      i = cum.size() - 1;
      while (i > 0 && weights[i] <= 0.0) --i;
    }
    out.push_back(i);
  }
  return out;
}

ParticleSystem from_ancestors(const ParticleSystem& sys, const std::vector<std::size_t>& anc) {
  std::vector<Particle> next;
  next.reserve(anc.size());
  for (auto i : anc) next.push_back(sys.particles[i]);
  auto out = ParticleSystem::uniform(std::move(next));
  return out;
}

}  // namespace

std::vector<double> ParticleSystem::weights() const {
  std::vector<double> w(log_norm_weights.size());
  std::transform(log_norm_weights.begin(), log_norm_weights.end(), w.begin(), [](double l) { return std::exp(l); });
  return w;
}

ParticleSystem ParticleSystem::uniform(std::vector<Particle> particles) {
  require(!particles.empty(), "particle system needs at least one particle");
  ParticleSystem sys;
  const double lw = -std::log(static_cast<double>(particles.size()));
  sys.log_norm_weights.assign(particles.size(), lw);
  sys.last_log_inc_weights.assign(particles.size(), 0.0);
  sys.particles = std::move(particles);
  return sys;
}

double log_sum_exp(std::span<const double> v) {
  const double m = max_finite(v);
  if (m == kNegInf) return kNegInf;
  if (std::isinf(m)) return m;
  double s = 0.0;
  for (double x : v) {
    if (!std::isnan(x)) s += std::exp(x - m);
  }
  return m + std::log(s);
}

NormalizedWeights normalize_log_weights(std::span<const double> raw) {
  require(!raw.empty(), "cannot normalize an empty weight vector");
  const double m = max_finite(raw);
  if (m == kNegInf || !std::isfinite(m)) fail(ErrorCode::degenerate_weights, "degenerate weights: no finite entry");
  double s = 0.0;
  for (double x : raw) {
    if (!std::isnan(x)) s += std::exp(x - m);
  }
  const double ls = std::log(s);
  NormalizedWeights out;
  out.log_sum = m + ls;
  out.log_weights.resize(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    out.log_weights[i] = std::isnan(raw[i]) ? kNegInf : raw[i] - m - ls;
  }
  return out;
}

double ess(std::span<const double> w_prev, std::span<const double> w_inc) {
  check_sizes(w_prev.size(), w_inc.size());
  double s1 = 0.0, s2 = 0.0;
  for (std::size_t i = 0; i < w_prev.size(); ++i) {
    const double p = w_prev[i] * w_inc[i];
    s1 += p;
    s2 += p * p;
  }
  if (!(s2 > 0.0)) fail(ErrorCode::degenerate_weights, "degenerate weights: all products are zero");
  return s1 * s1 / s2;
}

double cess(std::span<const double> w_prev, std::span<const double> w_inc) {
  check_sizes(w_prev.size(), w_inc.size());
  const double n = static_cast<double>(w_prev.size());
  double s1 = 0.0, s2 = 0.0;
  for (std::size_t i = 0; i < w_prev.size(); ++i) {
    s1 += w_prev[i] * w_inc[i];
    s2 += w_prev[i] * w_inc[i] * w_inc[i];
  }
  if (!(s2 > 0.0)) fail(ErrorCode::degenerate_weights, "degenerate weights: all products are zero");
  return n * s1 * s1 / s2;
}

double ess_log(std::span<const double> log_w_prev, std::span<const double> log_w_inc) {
  check_sizes(log_w_prev.size(), log_w_inc.size());
  std::vector<double> a(log_w_prev.size());
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = log_w_prev[i] + log_w_inc[i];
  const double m = max_finite(a);
  if (m == kNegInf || !std::isfinite(m)) fail(ErrorCode::degenerate_weights, "degenerate weights: all products are zero");
  double s1 = 0.0, s2 = 0.0;
  for (double x : a) {
    if (std::isnan(x)) continue;
    const double e = std::exp(x - m);
    s1 += e;
    s2 += e * e;
  }
  return s1 * s1 / s2;
}

double cess_log(std::span<const double> log_w_prev, std::span<const double> log_w_inc) {
  check_sizes(log_w_prev.size(), log_w_inc.size());
  const double n = static_cast<double>(log_w_prev.size());
  double m = kNegInf;
  for (std::size_t i = 0; i < log_w_inc.size(); ++i) {
    if (log_w_prev[i] > kNegInf && !std::isnan(log_w_inc[i]) && log_w_inc[i] > m) m = log_w_inc[i];
  }
  if (m == kNegInf || !std::isfinite(m)) fail(ErrorCode::degenerate_weights, "degenerate weights: all products are zero");
  double s1 = 0.0, s2 = 0.0;
  for (std::size_t i = 0; i < log_w_inc.size(); ++i) {
    if (std::isnan(log_w_inc[i])) continue;
    const double W = std::exp(log_w_prev[i]);
    const double e = std::exp(log_w_inc[i] - m);
    s1 += W * e;
    s2 += W * e * e;
  }
  return n * s1 * s1 / s2;
}

double ess_of(std::span<const double> log_norm_weights) {
  double s2 = 0.0;
  for (double l : log_norm_weights) s2 += std::exp(2.0 * l);
  if (!(s2 > 0.0)) fail(ErrorCode::degenerate_weights, "degenerate weights");
  return 1.0 / s2;
}

std::vector<std::size_t> multinomial_ancestors(std::span<const double> weights, std::size_t n, RngStream& rng) {
  require(!weights.empty(), "cannot resample an empty system");
  std::vector<double> u(n);
  for (auto& x : u) x = rng.uniform();
  return ancestors_from_uniforms(weights, u);
}

std::vector<std::size_t> systematic_ancestors(std::span<const double> weights, std::size_t n, RngStream& rng) {
  require(!weights.empty(), "cannot resample an empty system");
  const double u0 = rng.uniform();
  std::vector<double> u(n);
  for (std::size_t i = 0; i < n; ++i) u[i] = (static_cast<double>(i) + u0) / static_cast<double>(n);
  return ancestors_from_uniforms(weights, u);
}

ParticleSystem resample_multinomial(const ParticleSystem& sys, RngStream& rng) {
  return from_ancestors(sys, multinomial_ancestors(sys.weights(), sys.size(), rng));
}

ParticleSystem resample_systematic(const ParticleSystem& sys, RngStream& rng) {
  return from_ancestors(sys, systematic_ancestors(sys.weights(), sys.size(), rng));
}

ParticleSystem resample(const ParticleSystem& sys, ResampleScheme scheme, RngStream& rng) {
  return scheme == ResampleScheme::systematic ? resample_systematic(sys, rng) : resample_multinomial(sys, rng);
}

std::size_t transformed_size(Transform t, std::size_t n) {
  if (t == Transform::logit_last) {
    require(n >= 2, "logit_last needs a simplex of dimension >= 2");
    return n - 1;
  }
  return n;
}

std::vector<double> to_transformed(std::span<const double> x, Transform t) {
  std::vector<double> z;
  switch (t) {
    case Transform::identity:
      z.assign(x.begin(), x.end());
      break;
    case Transform::log:
      z.reserve(x.size());
      for (double v : x) {
        if (!(v > 0.0) || !std::isfinite(v)) fail(ErrorCode::transform_domain, "transform domain: log of nonpositive value");
        z.push_back(std::log(v));
      }
      break;
    case Transform::logit_last: {
      const std::size_t r = x.size();
      require(r >= 2, "logit_last needs a simplex of dimension >= 2");
      for (double v : x) {
        if (!(v > 0.0) || !std::isfinite(v)) fail(ErrorCode::transform_domain, "transform domain: simplex entry not positive");
      }
      const double last = std::log(x[r - 1]);
      z.reserve(r - 1);
      for (std::size_t j = 0; j + 1 < r; ++j) z.push_back(std::log(x[j]) - last);
      break;
    }
  }
  return z;
}

std::vector<double> from_transformed(std::span<const double> z, Transform t) {
  std::vector<double> x;
  switch (t) {
    case Transform::identity:
      x.assign(z.begin(), z.end());
      break;
    case Transform::log:
      x.reserve(z.size());
      for (double v : z) x.push_back(std::exp(v));
      break;
    case Transform::logit_last: {
      double m = 0.0;
      for (double v : z) m = std::max(m, v);
      double s = std::exp(-m);
      for (double v : z) s += std::exp(v - m);
      x.reserve(z.size() + 1);
      for (double v : z) x.push_back(std::exp(v - m) / s);
      x.push_back(std::exp(-m) / s);
      break;
    }
  }
  return x;
}

double log_jacobian(std::span<const double> x, Transform t) {
  // Densities w.r.t. x relate to z via p_z(z) = p_x(x) |dx/dz|.
  double s = 0.0;
  switch (t) {
    case Transform::identity:
      break;
    case Transform::log:
      for (double v : x) s += std::log(v);
      break;
    case Transform::logit_last:
      // Map (w_1..w_{r-1}) -> z; the simplex density is w.r.t. the first r-1 coordinates.
      for (double v : x) s += std::log(v);
      break;
  }
  return s;
}

Moments weighted_moments(const ParticleSystem& sys, std::span<const std::size_t> indices, Transform transform,
                         double variance_floor) {
  require(sys.size() > 0, "weighted_moments on an empty system");
  const std::size_t d = transformed_size(transform, indices.size());
  Moments m;
  m.mean.assign(d, 0.0);
  m.variance.assign(d, 0.0);
  std::vector<double> w = sys.weights();
  double wsum = std::accumulate(w.begin(), w.end(), 0.0);
  require(wsum > 0.0, "weighted_moments needs positive weights");

  std::vector<std::vector<double>> zs(sys.size());
  std::vector<double> block(indices.size());
  for (std::size_t i = 0; i < sys.size(); ++i) {
    if (w[i] == 0.0) continue;
    const auto& st = sys.particles[i].state;
    for (std::size_t k = 0; k < indices.size(); ++k) {
      require(indices[k] < st.size(), "block index outside particle state");
      block[k] = st[indices[k]];
    }
    zs[i] = to_transformed(block, transform);
    for (std::size_t k = 0; k < d; ++k) m.mean[k] += w[i] * zs[i][k];
  }
  for (auto& v : m.mean) v /= wsum;
  for (std::size_t i = 0; i < sys.size(); ++i) {
    if (w[i] == 0.0) continue;
    for (std::size_t k = 0; k < d; ++k) {
      const double e = zs[i][k] - m.mean[k];
      m.variance[k] += w[i] * e * e;
    }
  }
  for (auto& v : m.variance) v = std::max(v / wsum, variance_floor);
  return m;
}

}  // namespace smcev
