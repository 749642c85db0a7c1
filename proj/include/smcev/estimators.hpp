#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "smcev/tempering.hpp"

namespace smcev {

struct EvidenceAccumulator {
  double log_ratio = 0.0;
  std::vector<double> increments;
};

/// Appends log sum_i W_i exp(log_w_inc_i), max-shift stabilized.
void accumulate_direct(EvidenceAccumulator& acc, std::span<const double> log_w_prev,
                       std::span<const double> log_w_inc);

/// Per-particle statistic and normalized log-weight of the system that
/// anchors one panel, i.e. the population targeting the panel's lower end.
struct PanelSnapshot {
  std::vector<double> stats;
  std::vector<double> log_weights;
};

struct PathSampleTrace {
  PathKind kind = PathKind::geometric;
  std::vector<double> alphas;
  std::vector<double> U;
  // snapshots[t - 1] anchors the panel [alphas[t - 1], alphas[t]].
  std::vector<PanelSnapshot> snapshots;

  std::size_t panels() const { return alphas.empty() ? 0 : alphas.size() - 1; }
};

/// E_alpha[d log q / d alpha] from the stored particles: U_t exactly at a knot,
/// otherwise importance reweighting from the panel's lower anchor.
double path_expectation_at(const PathSampleTrace& trace, double alpha);

enum class RuleKind { trapezoid, simpson, simpson38, boole };

struct QuadratureRule {
  RuleKind kind = RuleKind::trapezoid;
  std::size_t refinement = 1;

  /// Sub-intervals spanned by one application of the rule.
  std::size_t panel_size() const;
  std::string label() const;
};

std::string rule_name(RuleKind kind);
RuleKind parse_rule(const std::string& name);

/// Integral over [alphas.front(), alphas.back()] of a curve known exactly at
/// the knots (knot_values) and through `f` elsewhere. Each sampled interval is
/// split into `refinement` equal sub-intervals and every sub-interval is
/// integrated with the rule using equally spaced interior nodes.
double integrate(std::span<const double> alphas, std::span<const double> knot_values,
                 const std::function<double(std::size_t panel, double alpha)>& f, const QuadratureRule& rule);

/// Path-sampling estimate of the log normalizing-constant ratio.
double integrate_path(const PathSampleTrace& trace, const QuadratureRule& rule);

/// Softmax of log evidence + log prior.
std::map<int, double> model_posteriors(const std::map<int, double>& log_evidences,
                                       const std::map<int, double>& log_priors);

double bayes_factor(double log_evidence_a, double log_evidence_b);

struct EvidenceEstimate {
  std::string estimator;
  std::string model;
  double log_evidence = 0.0;
  std::size_t realized_T = 0;
  double min_ess = 0.0;
  std::size_t resample_count = 0;
  std::size_t forced_micro_steps = 0;
};

}  // namespace smcev
