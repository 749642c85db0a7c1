#pragma once

#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "smcev/particles.hpp"
#include "smcev/rng.hpp"

namespace smcev {

/// A group of state coordinates updated together by one random-walk step.
struct BlockSpec {
  std::string name;
  std::vector<std::size_t> indices;
  Transform transform = Transform::identity;
};

/// Prior, likelihood and prior sampler of one model.
class TargetModel {
 public:
  virtual ~TargetModel() = default;

  virtual std::string name() const = 0;
  virtual std::size_t dimension() const = 0;
  virtual std::vector<BlockSpec> blocks() const = 0;
  virtual double log_prior(std::span<const double> theta) const = 0;
  virtual double log_likelihood(std::span<const double> theta) const = 0;
  virtual std::vector<double> sample_prior(RngStream& rng) const = 0;
  virtual std::optional<double> log_evidence() const { return std::nullopt; }
};

struct JumpProposal {
  Particle proposed;
  // Everything in the log acceptance ratio except the change in log target:
  // proposal densities, move probabilities and Jacobian terms.
  double log_ratio = 0.0;
};

/// Trans-dimensional proposal between models of a ModelSpace.
class JumpMove {
 public:
  virtual ~JumpMove() = default;

  /// Proposes a move of `current` to a model with id in [min_id, max_id].
  /// Returns nullopt when the drawn move is not available (auto-reject).
  virtual std::optional<JumpProposal> propose(const Particle& current, int min_id, int max_id,
                                              RngStream& rng) const = 0;
};

/// Indexed family of models with a prior over the index.
class ModelSpace {
 public:
  ModelSpace() = default;
  /// Single-model space; the model gets id `id` and prior mass one.
  ModelSpace(int id, std::shared_ptr<const TargetModel> model);

  void add(int id, std::shared_ptr<const TargetModel> model, double log_prior_mass);
  void set_jump(std::shared_ptr<const JumpMove> jump) { jump_ = std::move(jump); }

  const TargetModel& model(int id) const;
  std::shared_ptr<const TargetModel> model_ptr(int id) const;
  bool contains(int id) const { return models_.contains(id); }
  double log_model_prior(int id) const;
  std::vector<int> ids() const;
  int min_id() const;
  int max_id() const;
  const JumpMove* jump() const { return jump_.get(); }

  /// Draws a model id from the model prior, then its parameters.
  Particle sample_prior(RngStream& rng) const;

 private:
  struct Entry {
    std::shared_ptr<const TargetModel> model;
    double log_prior_mass = 0.0;
  };
  std::map<int, Entry> models_;
  std::shared_ptr<const JumpMove> jump_;
};

}  // namespace smcev
