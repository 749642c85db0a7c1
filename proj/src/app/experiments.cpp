#include <fmt/format.h>

#include <algorithm>
#include <cmath>

#include "smcev/app.hpp"
#include "smcev/error.hpp"

namespace smcev::app {
namespace {

Dataset load_or_generate(const ModelConfig& m) {
  return m.data.empty() ? generate_dataset(m.kind, m.data_seed) : read_dataset(m.data);
}

double log_uniform_mass(std::size_t count) { return -std::log(static_cast<double>(count)); }

}  // namespace

Problem build_problem(const ExperimentConfig& cfg) {
  const ModelConfig& m = cfg.model;
  Problem p;
  if (m.kind == "flow") fail(ErrorCode::config, "model.kind = flow is only valid for clt-check");
  const Dataset data = load_or_generate(m);
  if (m.kind == "conjugate") {
    auto model = std::make_shared<ConjugateGaussian>(data.column("y"), m.prior_mean, m.prior_var, m.noise_var);
    p.reference = model->log_evidence();
    p.space = ModelSpace(0, model);
    return p;
  }
  const double lp = log_uniform_mass(m.components.size());
  if (m.kind == "gmm") {
    const auto& y = data.column("y");
    const bool joint = cfg.run.algorithm == Algorithm::smc1 || cfg.run.algorithm == Algorithm::smc3;
    if (joint) {
      const auto [lo, hi] = std::minmax_element(m.components.begin(), m.components.end());
      if (static_cast<std::size_t>(*hi - *lo + 1) != m.components.size()) {
        fail(ErrorCode::config, "model.components must be a contiguous range for smc1 and smc3");
      }
      p.space = gmm_model_space(y, *lo, *hi, true, m.moves);
    } else {
      // Label switching leaves the evidence unchanged, so single-model runs
      // use the unordered prior.
      const GmmPrior prior = GmmPrior::from_data(y);
      for (int r : m.components) {
        p.space.add(r, std::make_shared<Gmm>(y, static_cast<std::size_t>(r), prior, false), lp);
      }
    }
    return p;
  }
  if (cfg.run.algorithm == Algorithm::smc1 || cfg.run.algorithm == Algorithm::smc3) {
    fail(ErrorCode::config, "smc1 and smc3 are only available for model.kind = gmm");
  }
  if (m.kind == "goodwin") {
    for (int order : m.components) {
      GoodwinSpec spec;
      spec.m = static_cast<std::size_t>(order);
      if (spec.m < 2) fail(ErrorCode::config, "Goodwin models need at least two components");
      p.space.add(order, std::make_shared<Goodwin>(spec, data.column("x1"), data.column("x2")), lp);
    }
    return p;
  }
  // pet
  for (int order : m.components) {
    p.space.add(order,
                std::make_shared<Pet>(InputFunction::synthetic(), data.column("t"), data.column("y"),
                                      static_cast<std::size_t>(order)),
                lp);
  }
  return p;
}

RunResult run_once(const ExperimentConfig& cfg, const Problem& problem, std::uint64_t replicate) {
  RunConfig rc = cfg.run;
  rc.replicate = replicate;
  return run(problem.space, rc);
}

RunResult run_experiment(const ExperimentConfig& cfg) { return run_once(cfg, build_problem(cfg), 0); }

std::vector<SummaryRow> replicate_experiment(const ExperimentConfig& cfg, std::size_t R) {
  if (R < 2) fail(ErrorCode::config, "replicate needs at least two replicates");
  const Problem problem = build_problem(cfg);
  const auto reps = run_replicates(
      R, [&](std::uint64_t r) { return run_once(cfg, problem, r).estimates; }, cfg.fixed_seed);
  return summarize(reps);
}

std::vector<BiasRow> bias_table(const ExperimentConfig& cfg) {
  if (cfg.run.algorithm != Algorithm::smc2 && cfg.run.algorithm != Algorithm::ais) {
    fail(ErrorCode::config, "bias-table needs sampler.algorithm = smc2 or ais");
  }
  if (cfg.bias.replicates < 2) fail(ErrorCode::config, "bias_table.replicates must be at least 2");
  const Problem problem = build_problem(cfg);
  if (problem.space.ids().size() != 1) fail(ErrorCode::config, "bias-table needs a single model");
  const std::optional<double> reference = cfg.bias.reference ? cfg.bias.reference : problem.reference;
  if (!reference) fail(ErrorCode::config, "bias_table.reference is required when no analytic evidence exists");

  std::vector<QuadratureRule> rules;
  for (auto kind : cfg.bias.rules) {
    for (auto refinement : cfg.bias.refinements) rules.push_back(QuadratureRule{kind, refinement});
  }
  ExperimentConfig local = cfg;
  local.run.path_rules = {QuadratureRule{}};
  const auto reps = run_replicates(
      cfg.bias.replicates,
      [&](std::uint64_t r) {
        const RunResult res = run_once(local, problem, r);
        const PathSampleTrace& trace = res.path_traces.begin()->second;
        std::vector<EvidenceEstimate> out;
        for (const auto& rule : rules) {
          EvidenceEstimate e;
          e.estimator = rule.label();
          e.log_evidence = integrate_path(trace, rule);
          out.push_back(e);
        }
        return out;
      },
      cfg.fixed_seed);

  std::vector<BiasRow> rows;
  for (std::size_t k = 0; k < rules.size(); ++k) {
    BiasRow row;
    row.rule = rules[k].kind;
    row.refinement = rules[k].refinement;
    row.replicates = reps.size();
    double s = 0.0;
    for (const auto& rep : reps) s += rep[k].log_evidence;
    row.mean = s / static_cast<double>(reps.size());
    double ss = 0.0;
    for (const auto& rep : reps) ss += (rep[k].log_evidence - row.mean) * (rep[k].log_evidence - row.mean);
    row.sd = std::sqrt(ss / static_cast<double>(reps.size() - 1));
    row.bias = row.mean - *reference;
    rows.push_back(row);
  }
  return rows;
}

std::vector<CltCheck> clt_experiment(const ExperimentConfig& cfg) {
  if (cfg.model.kind != "flow") fail(ErrorCode::config, "clt-check needs model.kind = flow");
  const auto flow = path_sampling_flow(cfg.flow.prior, cfg.flow.loglik, cfg.flow.alphas);
  std::vector<CltCheck> out;
  for (std::size_t n : cfg.clt.particles) out.push_back(empirical_clt_check(flow, n, cfg.clt.replicates, cfg.run.seed));
  return out;
}

}  // namespace smcev::app
