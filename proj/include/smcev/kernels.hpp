#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "smcev/model.hpp"
#include "smcev/particles.hpp"
#include "smcev/rng.hpp"
#include "smcev/tempering.hpp"

namespace smcev {

enum class ScaleMode { manual, adaptive };

struct KernelConfig {
  ScaleMode mode = ScaleMode::adaptive;
  double manual_scale = 0.01;                   // proposal variance per coordinate
  std::map<std::string, double> block_scale;    // per-block manual override
  std::optional<double> multiplier;             // default 2.38^2 / d
  int sweeps = 1;
  bool acceptance_clamp = false;
  double variance_floor = kDefaultVarianceFloor;
};

/// Diagonal proposal variances in transformed coordinates, one vector per
/// block of a model, plus the running clamp factor of each block.
struct BlockScales {
  std::vector<std::vector<double>> variances;
  std::vector<double> clamp_factor;
};

struct KernelStats {
  std::vector<std::size_t> accepts;
  std::vector<std::size_t> attempts;
  std::size_t jump_accepts = 0;
  std::size_t jump_attempts = 0;

  void resize(std::size_t blocks);
  void merge(const KernelStats& other);
  double rate(std::size_t block) const;
  double jump_rate() const;
};

/// Manual proposal variances for `blocks`.
BlockScales manual_scales(const std::vector<BlockSpec>& blocks, const KernelConfig& cfg);

/// Adaptive proposal variances: multiplier times the weighted variance of the
/// transformed block coordinates over the particles with model id `model_id`.
/// Falls back to manual scales with fewer than two such particles. Carries the
/// clamp factors over from `previous` when given.
BlockScales adapt_scales(const ParticleSystem& sys, int model_id, const std::vector<BlockSpec>& blocks,
                         const KernelConfig& cfg, const BlockScales* previous = nullptr);

/// Doubles a block's factor above 0.5 acceptance and halves it below 0.2.
void apply_acceptance_clamp(BlockScales& scales, const KernelStats& stats);

/// One pass over every block: Gaussian random walk in transformed space with
/// Metropolis-Hastings acceptance against q_alpha. `density` caches the
/// particle's prior and likelihood and is updated on acceptance.
void mh_block_sweep(Particle& particle, Density& density, const TemperedPath& path, double alpha,
                    const std::vector<BlockSpec>& blocks, const BlockScales& scales, RngStream& rng,
                    KernelStats& stats);

/// One trans-dimensional move attempt against q_alpha, restricted to model ids
/// in [min_id, max_id].
bool rj_step(Particle& particle, Density& density, const TemperedPath& path, double alpha, int min_id, int max_id,
             RngStream& rng, KernelStats& stats);

}  // namespace smcev
