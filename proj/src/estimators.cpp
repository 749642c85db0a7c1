#include "smcev/estimators.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "smcev/error.hpp"
#include "smcev/particles.hpp"

namespace smcev {
namespace {

std::span<const double> rule_weights(RuleKind kind) {
  static constexpr std::array<double, 2> trap{0.5, 0.5};
  static constexpr std::array<double, 3> simp{1.0 / 6, 4.0 / 6, 1.0 / 6};
  static constexpr std::array<double, 4> simp38{1.0 / 8, 3.0 / 8, 3.0 / 8, 1.0 / 8};
  static constexpr std::array<double, 5> boole{7.0 / 90, 32.0 / 90, 12.0 / 90, 32.0 / 90, 7.0 / 90};
  switch (kind) {
    case RuleKind::simpson:
      return simp;
    case RuleKind::simpson38:
      return simp38;
    case RuleKind::boole:
      return boole;
    default:
      return trap;
  }
}

}  // namespace

void accumulate_direct(EvidenceAccumulator& acc, std::span<const double> log_w_prev,
                       std::span<const double> log_w_inc) {
  require(log_w_prev.size() == log_w_inc.size() && !log_w_prev.empty(), "weight vectors differ in length");
  std::vector<double> a(log_w_prev.size());
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = log_w_prev[i] + log_w_inc[i];
  const double inc = log_sum_exp(a);
  if (!std::isfinite(inc)) fail(ErrorCode::degenerate_weights, "degenerate weights in direct estimator");
  acc.increments.push_back(inc);
  acc.log_ratio += inc;
}

double path_expectation_at(const PathSampleTrace& trace, double alpha) {
  require(!trace.alphas.empty() && trace.alphas.size() == trace.U.size(), "empty path-sampling trace");
  require(alpha >= trace.alphas.front() && alpha <= trace.alphas.back(), "alpha outside the traced range");
  auto it = std::lower_bound(trace.alphas.begin(), trace.alphas.end(), alpha);
  const std::size_t t = static_cast<std::size_t>(it - trace.alphas.begin());
  if (*it == alpha) return trace.U[t];
  require(t >= 1 && t - 1 < trace.snapshots.size(), "path-sampling trace has no snapshot for this panel");

  const auto& snap = trace.snapshots[t - 1];
  const double from = trace.alphas[t - 1];
  std::vector<double> lw(snap.stats.size());
  for (std::size_t j = 0; j < lw.size(); ++j) {
    lw[j] = snap.log_weights[j] + path_log_ratio(trace.kind, snap.stats[j], from, alpha);
  }
  const auto nw = normalize_log_weights(lw);
  double s = 0.0;
  for (std::size_t j = 0; j < lw.size(); ++j) {
    if (nw.log_weights[j] == -std::numeric_limits<double>::infinity()) continue;
    s += std::exp(nw.log_weights[j]) * path_derivative(trace.kind, snap.stats[j], alpha);
  }
  return s;
}

std::size_t QuadratureRule::panel_size() const { return rule_weights(kind).size() - 1; }

std::string rule_name(RuleKind kind) {
  switch (kind) {
    case RuleKind::simpson:
      return "simpson";
    case RuleKind::simpson38:
      return "simpson38";
    case RuleKind::boole:
      return "boole";
    default:
      return "trapezoid";
  }
}

RuleKind parse_rule(const std::string& name) {
  if (name == "trapezoid") return RuleKind::trapezoid;
  if (name == "simpson") return RuleKind::simpson;
  if (name == "simpson38") return RuleKind::simpson38;
  if (name == "boole") return RuleKind::boole;
  fail(ErrorCode::config, "unknown quadrature rule '" + name + "'");
}

std::string QuadratureRule::label() const { return rule_name(kind) + "-x" + std::to_string(refinement); }

double integrate(std::span<const double> alphas, std::span<const double> knot_values,
                 const std::function<double(std::size_t panel, double alpha)>& f, const QuadratureRule& rule) {
  require(alphas.size() == knot_values.size() && alphas.size() >= 2, "need at least two knots");
  require(rule.refinement >= 1, "refinement must be at least one");
  const auto w = rule_weights(rule.kind);
  const std::size_t m = w.size() - 1;
  const std::size_t r = rule.refinement;

  if (rule.kind == RuleKind::trapezoid && r == 1) {
    double s = 0.0;
    for (std::size_t t = 1; t < alphas.size(); ++t) {
      s += 0.5 * (alphas[t] - alphas[t - 1]) * (knot_values[t] + knot_values[t - 1]);
    }
    return s;
  }

  double total = 0.0;
  for (std::size_t t = 1; t < alphas.size(); ++t) {
    const double a = alphas[t - 1];
    const double h = (alphas[t] - a) / static_cast<double>(r);
    const double step = h / static_cast<double>(m);
    // Values on the r*m + 1 equally spaced nodes of the panel.
    std::vector<double> v(r * m + 1);
    v.front() = knot_values[t - 1];
    v.back() = knot_values[t];
    for (std::size_t k = 1; k < v.size() - 1; ++k) v[k] = f(t - 1, a + static_cast<double>(k) * step);
    for (std::size_t s = 0; s < r; ++s) {
      double acc = 0.0;
      for (std::size_t k = 0; k <= m; ++k) acc += w[k] * v[s * m + k];
      total += h * acc;
    }
  }
  return total;
}

double integrate_path(const PathSampleTrace& trace, const QuadratureRule& rule) {
  require(trace.alphas.size() == trace.U.size() && trace.alphas.size() >= 2, "path-sampling trace too short");
  return integrate(trace.alphas, trace.U, [&](std::size_t, double a) { return path_expectation_at(trace, a); }, rule);
}

std::map<int, double> model_posteriors(const std::map<int, double>& log_evidences,
                                       const std::map<int, double>& log_priors) {
  require(!log_evidences.empty(), "model_posteriors needs at least one model");
  std::vector<double> v;
  std::vector<int> ids;
  for (const auto& [id, le] : log_evidences) {
    auto it = log_priors.find(id);
    require(it != log_priors.end(), "missing prior for model " + std::to_string(id));
    v.push_back(le + it->second);
    ids.push_back(id);
  }
  const auto nw = normalize_log_weights(v);
  std::map<int, double> out;
  for (std::size_t i = 0; i < ids.size(); ++i) out[ids[i]] = std::exp(nw.log_weights[i]);
  return out;
}

double bayes_factor(double log_evidence_a, double log_evidence_b) { return log_evidence_a - log_evidence_b; }

}  // namespace smcev
