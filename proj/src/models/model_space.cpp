#include <cmath>
#include <numeric>

#include "smcev/error.hpp"
#include "smcev/model.hpp"

namespace smcev {

ModelSpace::ModelSpace(int id, std::shared_ptr<const TargetModel> model) { add(id, std::move(model), 0.0); }

void ModelSpace::add(int id, std::shared_ptr<const TargetModel> model, double log_prior_mass) {
  require(model != nullptr, "null model");
  require(!models_.contains(id), "duplicate model id");
  models_[id] = Entry{std::move(model), log_prior_mass};
}

const TargetModel& ModelSpace::model(int id) const { return *model_ptr(id); }

std::shared_ptr<const TargetModel> ModelSpace::model_ptr(int id) const {
  auto it = models_.find(id);
  require(it != models_.end(), "unknown model id " + std::to_string(id));
  return it->second.model;
}

double ModelSpace::log_model_prior(int id) const {
  auto it = models_.find(id);
  require(it != models_.end(), "unknown model id " + std::to_string(id));
  return it->second.log_prior_mass;
}

std::vector<int> ModelSpace::ids() const {
  std::vector<int> out;
  for (const auto& [id, e] : models_) out.push_back(id);
  return out;
}

int ModelSpace::min_id() const {
  require(!models_.empty(), "empty model space");
  return models_.begin()->first;
}

int ModelSpace::max_id() const {
  require(!models_.empty(), "empty model space");
  return models_.rbegin()->first;
}

Particle ModelSpace::sample_prior(RngStream& rng) const {
  require(!models_.empty(), "empty model space");
  int id = models_.begin()->first;
  if (models_.size() > 1) {
    const double u = rng.uniform();
    double c = 0.0;
    for (const auto& [k, e] : models_) {
      id = k;
      c += std::exp(e.log_prior_mass);
      if (u < c) break;
    }
  }
  return Particle{model(id).sample_prior(rng), id};
}

}  // namespace smcev
