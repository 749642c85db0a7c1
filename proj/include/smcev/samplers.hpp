#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "smcev/estimators.hpp"
#include "smcev/kernels.hpp"
#include "smcev/model.hpp"
#include "smcev/particles.hpp"
#include "smcev/tempering.hpp"

namespace smcev {

enum class Algorithm { smc1, smc2, smc3, ais };

std::string algorithm_name(Algorithm a);

struct RunConfig {
  Algorithm algorithm = Algorithm::smc2;
  std::size_t particles = 1000;
  std::uint64_t seed = 1;
  std::uint64_t replicate = 0;
  double resample_threshold = 0.5;  // resample when ess < threshold * N
  ResampleScheme resampling = ResampleScheme::multinomial;
  Schedule schedule;
  KernelConfig kernel;
  bool direct = true;
  std::vector<QuadratureRule> path_rules{QuadratureRule{}};
  std::size_t max_micro_steps = 10000;

  // Model-mixture runs between consecutive models.
  Schedule smc3_schedule{ScheduleKind::power, 2.0, 100, {}};
  bool smc3_fresh = false;  // restart from a new single-model run for every pair
};

/// Validates cross-field constraints (AIS never resamples, SMC3 fixed
/// schedule, ...). Throws config errors.
void validate(const RunConfig& cfg);

struct IterationRecord {
  std::string model;
  std::size_t iteration = 0;
  double alpha = 0.0;
  double ess = 0.0;
  double cess = 0.0;
  bool resampled = false;
  std::map<std::string, double> acceptance;  // per block name, plus "jump"
  double log_increment = 0.0;
  double U = 0.0;
};

struct RunResult {
  std::vector<EvidenceEstimate> estimates;
  std::vector<IterationRecord> trace;
  std::vector<std::string> acceptance_columns;
  std::map<int, double> model_probabilities;  // weighted label frequencies (smc1)
  std::map<std::string, PathSampleTrace> path_traces;
  std::map<int, ParticleSystem> final_systems;
  /// Weighted means and variances per model and block of the final system.
  std::map<int, std::map<std::string, Moments>> summaries;
};

/// Per-model evidences along the geometric path; AIS when algorithm == ais.
RunResult run_smc2(const ModelSpace& space, const RunConfig& cfg);
RunResult run_smc2(std::shared_ptr<const TargetModel> model, const RunConfig& cfg);

/// One run on the joint (model, parameter) space with trans-dimensional moves.
RunResult run_smc1(const ModelSpace& space, const RunConfig& cfg);

/// Model-mixture path from `lower` to `upper` started from a weighted sample
/// of the lower posterior. The direct estimate is log B(upper, lower).
RunResult run_smc3(const ModelSpace& space, int lower, int upper, const ParticleSystem& start, const RunConfig& cfg);

/// Chains run_smc3 over consecutive model ids of the space, starting from a
/// single-model run of the smallest model.
RunResult run_smc3_chain(const ModelSpace& space, const RunConfig& cfg);

/// Dispatches on cfg.algorithm.
RunResult run(const ModelSpace& space, const RunConfig& cfg);

struct SummaryRow {
  std::string estimator;
  std::string model;
  double mean = 0.0;
  double sd = 0.0;
  std::size_t replicates = 0;
};

using ReplicateFn = std::function<std::vector<EvidenceEstimate>(std::uint64_t replicate)>;

/// Runs fn for replicate indices 0..R-1 (all 0 with fixed_seed), in parallel
/// across replicates. Results are ordered by replicate.
std::vector<std::vector<EvidenceEstimate>> run_replicates(std::size_t R, const ReplicateFn& fn,
                                                          bool fixed_seed = false);

/// Mean and sample SD per (estimator, model) in first-seen order. Adds log
/// Bayes factor rows model "a/b" for consecutive models of an estimator when
/// it covers at least two models.
std::vector<SummaryRow> summarize(const std::vector<std::vector<EvidenceEstimate>>& replicates);

}  // namespace smcev
