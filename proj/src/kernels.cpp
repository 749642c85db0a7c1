#include "smcev/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "smcev/error.hpp"

namespace smcev {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double block_manual_scale(const BlockSpec& b, const KernelConfig& cfg) {
  auto it = cfg.block_scale.find(b.name);
  return it != cfg.block_scale.end() ? it->second : cfg.manual_scale;
}

bool accept(double log_alpha, RngStream& rng) {
  if (std::isnan(log_alpha) || log_alpha == kNegInf) return false;
  if (log_alpha >= 0.0) return true;
  return std::log(rng.uniform()) < log_alpha;
}

}  // namespace

void KernelStats::resize(std::size_t blocks) {
  accepts.assign(blocks, 0);
  attempts.assign(blocks, 0);
  jump_accepts = jump_attempts = 0;
}

void KernelStats::merge(const KernelStats& other) {
  if (accepts.size() < other.accepts.size()) {
    accepts.resize(other.accepts.size(), 0);
    attempts.resize(other.attempts.size(), 0);
  }
  for (std::size_t b = 0; b < other.accepts.size(); ++b) {
    accepts[b] += other.accepts[b];
    attempts[b] += other.attempts[b];
  }
  jump_accepts += other.jump_accepts;
  jump_attempts += other.jump_attempts;
}

double KernelStats::rate(std::size_t block) const {
  if (block >= attempts.size() || attempts[block] == 0) return std::numeric_limits<double>::quiet_NaN();
  return static_cast<double>(accepts[block]) / static_cast<double>(attempts[block]);
}

double KernelStats::jump_rate() const {
  if (jump_attempts == 0) return std::numeric_limits<double>::quiet_NaN();
  return static_cast<double>(jump_accepts) / static_cast<double>(jump_attempts);
}

BlockScales manual_scales(const std::vector<BlockSpec>& blocks, const KernelConfig& cfg) {
  BlockScales s;
  for (const auto& b : blocks) {
    const double v = block_manual_scale(b, cfg);
    require(v > 0.0, "proposal scale must be positive for block " + b.name);
    s.variances.emplace_back(transformed_size(b.transform, b.indices.size()), v);
    s.clamp_factor.push_back(1.0);
  }
  return s;
}

BlockScales adapt_scales(const ParticleSystem& sys, int model_id, const std::vector<BlockSpec>& blocks,
                         const KernelConfig& cfg, const BlockScales* previous) {
  BlockScales out;
  ParticleSystem sub;
  for (std::size_t i = 0; i < sys.size(); ++i) {
    if (sys.particles[i].model_id != model_id || sys.log_norm_weights[i] == kNegInf) continue;
    sub.particles.push_back(sys.particles[i]);
    sub.log_norm_weights.push_back(sys.log_norm_weights[i]);
  }
  const bool manual = cfg.mode == ScaleMode::manual || sub.size() < 2;
  if (manual) {
    out = manual_scales(blocks, cfg);
  } else {
    for (const auto& b : blocks) {
      const Moments m = weighted_moments(sub, b.indices, b.transform, cfg.variance_floor);
      const double d = static_cast<double>(m.variance.size());
      const double mult = cfg.multiplier.value_or(2.38 * 2.38 / d);
      std::vector<double> v(m.variance.size());
      for (std::size_t k = 0; k < v.size(); ++k) v[k] = std::max(mult * m.variance[k], cfg.variance_floor);
      out.variances.push_back(std::move(v));
      out.clamp_factor.push_back(1.0);
    }
  }
  if (previous != nullptr && previous->clamp_factor.size() == blocks.size()) out.clamp_factor = previous->clamp_factor;
  return out;
}

void apply_acceptance_clamp(BlockScales& scales, const KernelStats& stats) {
  for (std::size_t b = 0; b < scales.clamp_factor.size(); ++b) {
    const double r = stats.rate(b);
    if (std::isnan(r)) continue;
    if (r > 0.5) scales.clamp_factor[b] *= 2.0;
    if (r < 0.2) scales.clamp_factor[b] *= 0.5;
  }
}

void mh_block_sweep(Particle& particle, Density& density, const TemperedPath& path, double alpha,
                    const std::vector<BlockSpec>& blocks, const BlockScales& scales, RngStream& rng,
                    KernelStats& stats) {
  if (stats.attempts.size() < blocks.size()) {
    stats.accepts.resize(blocks.size(), 0);
    stats.attempts.resize(blocks.size(), 0);
  }
  double current = path.log_target(density, particle.model_id, alpha);
  std::vector<double> x(blocks.empty() ? 0 : blocks.front().indices.size());

  for (std::size_t b = 0; b < blocks.size(); ++b) {
    const auto& blk = blocks[b];
    const auto& var = scales.variances.at(b);
    const double factor = scales.clamp_factor.empty() ? 1.0 : scales.clamp_factor[b];
    ++stats.attempts[b];

    x.resize(blk.indices.size());
    for (std::size_t k = 0; k < x.size(); ++k) x[k] = particle.state[blk.indices[k]];
    std::vector<double> z = to_transformed(x, blk.transform);
    for (std::size_t k = 0; k < z.size(); ++k) z[k] += std::sqrt(var[k] * factor) * rng.normal();
    const std::vector<double> xp = from_transformed(z, blk.transform);

    bool valid = true;
    for (double v : xp) valid = valid && std::isfinite(v);
    if (blk.transform != Transform::identity) {
      for (double v : xp) valid = valid && v > 0.0;
    }
    const double u = rng.uniform();
    if (!valid) continue;

    Particle prop = particle;
    for (std::size_t k = 0; k < xp.size(); ++k) prop.state[blk.indices[k]] = xp[k];
    const Density dp = path.evaluate(prop);
    const double proposed = path.log_target(dp, prop.model_id, alpha);
    const double log_a = proposed - current + log_jacobian(xp, blk.transform) - log_jacobian(x, blk.transform);
    if (std::isnan(log_a) || proposed == kNegInf) continue;
    if (log_a >= 0.0 || std::log(u) < log_a) {
      particle = std::move(prop);
      density = dp;
      current = proposed;
      ++stats.accepts[b];
    }
  }
}

bool rj_step(Particle& particle, Density& density, const TemperedPath& path, double alpha, int min_id, int max_id,
             RngStream& rng, KernelStats& stats) {
  const JumpMove* jump = path.space().jump();
  if (jump == nullptr) return false;
  ++stats.jump_attempts;
  auto prop = jump->propose(particle, min_id, max_id, rng);
  if (!prop) return false;
  const Density dp = path.evaluate(prop->proposed);
  const double proposed = path.log_target(dp, prop->proposed.model_id, alpha);
  const double current = path.log_target(density, particle.model_id, alpha);
  if (proposed == kNegInf) return false;
  if (!accept(proposed - current + prop->log_ratio, rng)) return false;
  particle = std::move(prop->proposed);
  density = dp;
  ++stats.jump_accepts;
  return true;
}

}  // namespace smcev
