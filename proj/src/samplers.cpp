#include "smcev/samplers.hpp"

#include <tbb/blocked_range.h>
#include <tbb/parallel_for.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "smcev/error.hpp"

namespace smcev {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

enum StreamKind : std::uint64_t { kInit = 1, kMutate = 2, kResample = 3 };

struct DriverSetup {
  const TemperedPath* path = nullptr;
  const Schedule* schedule = nullptr;
  std::string label;
  std::uint64_t tag = 0;
  bool jumps = false;
  int min_id = 0;
  int max_id = 0;
};

struct DriverOutput {
  EvidenceAccumulator acc;
  PathSampleTrace path;
  std::vector<IterationRecord> trace;
  std::vector<std::string> columns;
  ParticleSystem sys;
  std::size_t resamples = 0;
  std::size_t forced = 0;
  double min_ess = std::numeric_limits<double>::infinity();
};

template <class F>
void for_each_particle(std::size_t n, F&& f) {
  tbb::parallel_for(tbb::blocked_range<std::size_t>(0, n), [&](const tbb::blocked_range<std::size_t>& r) {
    for (std::size_t i = r.begin(); i != r.end(); ++i) f(i);
  });
}

// One stream per (replicate, run tag, particle slot, purpose). Streams live for
// the whole run, so slot i draws the same numbers whichever thread serves it.
RngStream stream(const RunConfig& cfg, std::uint64_t tag, std::uint64_t index, StreamKind kind) {
  return RngStream(cfg.seed, derive_stream({cfg.replicate, tag, index, kind}));
}

double expected_derivative(PathKind kind, std::span<const double> stats, std::span<const double> log_w,
                           double alpha) {
  double s = 0.0;
  for (std::size_t i = 0; i < stats.size(); ++i) {
    if (log_w[i] == kNegInf) continue;
    s += std::exp(log_w[i]) * path_derivative(kind, stats[i], alpha);
  }
  return s;
}

DriverOutput drive(const DriverSetup& setup, ParticleSystem sys, const RunConfig& cfg) {
  const TemperedPath& path = *setup.path;
  const Schedule& schedule = *setup.schedule;
  const PathKind kind = path.kind();
  const std::size_t n = sys.size();
  require(n >= 1, "particle system is empty");
  const bool want_snapshots = !cfg.path_rules.empty();

  std::vector<Density> dens(n);
  std::vector<double> stats(n);
  for_each_particle(n, [&](std::size_t i) {
    dens[i] = path.evaluate(sys.particles[i]);
    stats[i] = path.stat(dens[i], sys.particles[i].model_id);
  });

  std::map<int, std::vector<BlockSpec>> blocks;
  std::vector<std::string> columns;
  auto blocks_of = [&](int id) -> const std::vector<BlockSpec>& {
    auto it = blocks.find(id);
    if (it == blocks.end()) it = blocks.emplace(id, path.space().model(id).blocks()).first;
    return it->second;
  };
  for (int id : path.space().ids()) {
    if (setup.jumps ? (id >= setup.min_id && id <= setup.max_id)
                    : std::any_of(sys.particles.begin(), sys.particles.end(),
                                  [&](const Particle& p) { return p.model_id == id; })) {
      for (const auto& b : blocks_of(id)) {
        if (std::find(columns.begin(), columns.end(), b.name) == columns.end()) columns.push_back(b.name);
      }
    }
  }
  if (setup.jumps) columns.push_back("jump");

  DriverOutput out;
  out.columns = columns;
  out.path.kind = kind;
  double alpha = 0.0;
  {
    IterationRecord rec;
    rec.model = setup.label;
    rec.alpha = 0.0;
    rec.ess = ess_of(sys.log_norm_weights);
    rec.cess = static_cast<double>(n);
    rec.U = expected_derivative(kind, stats, sys.log_norm_weights, 0.0);
    out.path.alphas.push_back(0.0);
    out.path.U.push_back(rec.U);
    out.trace.push_back(std::move(rec));
  }

  std::map<int, BlockScales> scales;
  std::vector<double> lw_inc(n);
  std::vector<KernelStats> pstats(n);
  RngStream resample_rng = stream(cfg, setup.tag, 0, kResample);
  std::vector<RngStream> movers;
  if (cfg.kernel.sweeps > 0) {
    movers.reserve(n);
    for (std::size_t i = 0; i < n; ++i) movers.push_back(stream(cfg, setup.tag, i, kMutate));
  }

  for (std::size_t t = 1;; ++t) {
    if (want_snapshots) out.path.snapshots.push_back(PanelSnapshot{stats, sys.log_norm_weights});

    double next;
    if (schedule.adaptive()) {
      const auto na = find_next_alpha(stats, sys.log_norm_weights, kind, alpha, schedule.bisection,
                                      schedule.kind == ScheduleKind::adaptive_ess);
      next = na.alpha;
      if (na.forced && ++out.forced > cfg.max_micro_steps) {
        fail(ErrorCode::micro_step_cap, "forced micro-step cap exceeded at alpha " + std::to_string(alpha));
      }
    } else {
      next = next_alpha_fixed(schedule, t, schedule.steps);
    }

    for (std::size_t i = 0; i < n; ++i) lw_inc[i] = path_log_ratio(kind, stats[i], alpha, next);
    IterationRecord rec;
    rec.model = setup.label;
    rec.iteration = t;
    rec.alpha = next;
    rec.ess = ess_log(sys.log_norm_weights, lw_inc);
    rec.cess = cess_log(sys.log_norm_weights, lw_inc);
    out.min_ess = std::min(out.min_ess, rec.ess);

    accumulate_direct(out.acc, sys.log_norm_weights, lw_inc);
    rec.log_increment = out.acc.increments.back();
    std::vector<double> raw(n);
    for (std::size_t i = 0; i < n; ++i) raw[i] = sys.log_norm_weights[i] + lw_inc[i];
    sys.log_norm_weights = normalize_log_weights(raw).log_weights;
    sys.last_log_inc_weights = lw_inc;
    alpha = next;

    rec.U = expected_derivative(kind, stats, sys.log_norm_weights, alpha);
    out.path.alphas.push_back(alpha);
    out.path.U.push_back(rec.U);

    if (rec.ess < cfg.resample_threshold * static_cast<double>(n)) {
      const auto anc = cfg.resampling == ResampleScheme::systematic
                           ? systematic_ancestors(sys.weights(), n, resample_rng)
                           : multinomial_ancestors(sys.weights(), n, resample_rng);
      ParticleSystem next_sys;
      next_sys.particles.reserve(n);
      std::vector<Density> next_dens(n);
      std::vector<double> next_stats(n);
      for (std::size_t i = 0; i < n; ++i) {
        next_sys.particles.push_back(sys.particles[anc[i]]);
        next_dens[i] = dens[anc[i]];
        next_stats[i] = stats[anc[i]];
      }
      next_sys.log_norm_weights.assign(n, -std::log(static_cast<double>(n)));
      next_sys.last_log_inc_weights = std::move(sys.last_log_inc_weights);
      sys = std::move(next_sys);
      dens = std::move(next_dens);
      stats = std::move(next_stats);
      rec.resampled = true;
      ++out.resamples;
    }

    if (cfg.kernel.sweeps > 0) {
      std::set<int> present;
      for (const auto& p : sys.particles) present.insert(p.model_id);
      if (setup.jumps) {
        for (int id = setup.min_id; id <= setup.max_id; ++id) {
          if (path.space().contains(id)) present.insert(id);
        }
      }
      for (int id : present) {
        auto prev = scales.find(id);
        scales[id] = adapt_scales(sys, id, blocks_of(id), cfg.kernel, prev == scales.end() ? nullptr : &prev->second);
      }

      for_each_particle(n, [&](std::size_t i) {
        RngStream& rng = movers[i];
        KernelStats& ks = pstats[i];
        ks = KernelStats{};
        Particle& p = sys.particles[i];
        if (setup.jumps) rj_step(p, dens[i], path, alpha, setup.min_id, setup.max_id, rng, ks);
        const auto& b = blocks.at(p.model_id);
        const auto& sc = scales.at(p.model_id);
        // Block indices are tracked per model; a jump changes which stats slot applies.
        KernelStats local;
        for (int s = 0; s < cfg.kernel.sweeps; ++s) mh_block_sweep(p, dens[i], path, alpha, b, sc, rng, local);
        ks.accepts = std::move(local.accepts);
        ks.attempts = std::move(local.attempts);
        stats[i] = path.stat(dens[i], p.model_id);
      });

      std::map<int, KernelStats> per_model;
      std::map<std::string, std::pair<std::size_t, std::size_t>> per_name;
      std::size_t ja = 0, jt = 0;
      for (std::size_t i = 0; i < n; ++i) {
        const int id = sys.particles[i].model_id;
        per_model[id].merge(pstats[i]);
        const auto& b = blocks.at(id);
        for (std::size_t k = 0; k < pstats[i].attempts.size() && k < b.size(); ++k) {
          per_name[b[k].name].first += pstats[i].accepts[k];
          per_name[b[k].name].second += pstats[i].attempts[k];
        }
        ja += pstats[i].jump_accepts;
        jt += pstats[i].jump_attempts;
      }
      for (const auto& [name, c] : per_name) {
        rec.acceptance[name] = c.second ? static_cast<double>(c.first) / static_cast<double>(c.second)
                                        : std::numeric_limits<double>::quiet_NaN();
      }
      if (setup.jumps) {
        rec.acceptance["jump"] = jt ? static_cast<double>(ja) / static_cast<double>(jt)
                                    : std::numeric_limits<double>::quiet_NaN();
      }
      if (cfg.kernel.acceptance_clamp) {
        for (auto& [id, ks] : per_model) {
          if (scales.contains(id)) apply_acceptance_clamp(scales[id], ks);
        }
      }
    }
    out.trace.push_back(std::move(rec));
    if (alpha >= 1.0) break;
  }
  out.sys = std::move(sys);
  return out;
}

ParticleSystem sample_initial(const ModelSpace& space, const RunConfig& cfg, std::uint64_t tag) {
  std::vector<Particle> ps(cfg.particles);
  for_each_particle(cfg.particles, [&](std::size_t i) {
    auto rng = stream(cfg, tag, i, kInit);
    ps[i] = space.sample_prior(rng);
  });
  return ParticleSystem::uniform(std::move(ps));
}

std::string ps_name(const std::string& prefix, const QuadratureRule& rule) {
  if (rule.kind == RuleKind::trapezoid && rule.refinement == 1) return prefix + "-ps";
  return prefix + "-ps-" + rule.label();
}

EvidenceEstimate make_estimate(const std::string& estimator, const std::string& model, double value,
                               const DriverOutput& d) {
  EvidenceEstimate e;
  e.estimator = estimator;
  e.model = model;
  e.log_evidence = value;
  e.realized_T = d.path.alphas.size() - 1;
  e.min_ess = d.min_ess;
  e.resample_count = d.resamples;
  e.forced_micro_steps = d.forced;
  return e;
}

void add_estimates(RunResult& res, const std::string& prefix, const std::string& model, const DriverOutput& d,
                   const RunConfig& cfg, bool with_path) {
  if (cfg.direct) res.estimates.push_back(make_estimate(prefix + "-ds", model, d.acc.log_ratio, d));
  if (with_path) {
    for (const auto& rule : cfg.path_rules) {
      res.estimates.push_back(make_estimate(ps_name(prefix, rule), model, integrate_path(d.path, rule), d));
    }
  }
}

void absorb_trace(RunResult& res, DriverOutput& d) {
  for (const auto& c : d.columns) {
    if (std::find(res.acceptance_columns.begin(), res.acceptance_columns.end(), c) == res.acceptance_columns.end()) {
      res.acceptance_columns.push_back(c);
    }
  }
  for (auto& r : d.trace) res.trace.push_back(std::move(r));
}

void summarize_system(RunResult& res, const ModelSpace& space, const ParticleSystem& sys) {
  std::set<int> present;
  for (const auto& p : sys.particles) present.insert(p.model_id);
  for (int id : present) {
    ParticleSystem sub;
    for (std::size_t i = 0; i < sys.size(); ++i) {
      if (sys.particles[i].model_id != id || sys.log_norm_weights[i] == kNegInf) continue;
      sub.particles.push_back(sys.particles[i]);
      sub.log_norm_weights.push_back(sys.log_norm_weights[i]);
    }
    if (sub.size() == 0) continue;
    for (const auto& b : space.model(id).blocks()) {
      res.summaries[id][b.name] = weighted_moments(sub, b.indices, Transform::identity, 0.0);
    }
  }
}

std::uint64_t algo_tag(Algorithm a, std::uint64_t k) { return (static_cast<std::uint64_t>(a) << 32) | k; }

}  // namespace

std::string algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::smc1:
      return "smc1";
    case Algorithm::smc3:
      return "smc3";
    case Algorithm::ais:
      return "ais";
    default:
      return "smc2";
  }
}

void validate(const RunConfig& cfg) {
  if (cfg.particles < 1) fail(ErrorCode::config, "sampler.particles must be at least 1");
  if (cfg.algorithm == Algorithm::ais && cfg.resample_threshold != 0.0) {
    fail(ErrorCode::config, "sampler.resample_threshold must be 0 for ais");
  }
  if (cfg.resample_threshold < 0.0 || cfg.resample_threshold > 1.0) {
    fail(ErrorCode::config, "sampler.resample_threshold must lie in [0, 1]");
  }
  if (cfg.kernel.sweeps < 0) fail(ErrorCode::config, "kernel.sweeps must be non-negative");
  const auto& b = cfg.schedule.bisection;
  if (cfg.schedule.adaptive() && !(b.target > 0.0 && b.target < 1.0)) {
    fail(ErrorCode::config, "schedule target must lie in (0, 1)");
  }
  if (!cfg.schedule.adaptive() && cfg.schedule.steps < 1) fail(ErrorCode::config, "schedule.steps must be >= 1");
  if (cfg.algorithm == Algorithm::smc3 && cfg.smc3_schedule.adaptive()) {
    fail(ErrorCode::config, "smc3.schedule must be a fixed schedule (linear, power or posterior)");
  }
  for (const auto& r : cfg.path_rules) {
    if (r.refinement < 1) fail(ErrorCode::config, "estimators.path refinement must be >= 1");
  }
}

RunResult run_smc2(const ModelSpace& space, const RunConfig& cfg) {
  validate(cfg);
  RunResult res;
  const std::string prefix = algorithm_name(cfg.algorithm == Algorithm::ais ? Algorithm::ais : Algorithm::smc2);
  for (int id : space.ids()) {
    ModelSpace single(id, space.model_ptr(id));
    const auto path = TemperedPath::geometric(single);
    const std::uint64_t tag = algo_tag(cfg.algorithm, static_cast<std::uint64_t>(id));
    DriverSetup setup{&path, &cfg.schedule, std::to_string(id), tag};
    auto d = drive(setup, sample_initial(single, cfg, tag), cfg);
    add_estimates(res, prefix, std::to_string(id), d, cfg, true);
    res.path_traces[std::to_string(id)] = d.path;
    summarize_system(res, single, d.sys);
    absorb_trace(res, d);
    res.final_systems[id] = std::move(d.sys);
  }
  return res;
}

RunResult run_smc2(std::shared_ptr<const TargetModel> model, const RunConfig& cfg) {
  ModelSpace space(0, std::move(model));
  return run_smc2(space, cfg);
}

RunResult run_smc1(const ModelSpace& space, const RunConfig& cfg) {
  validate(cfg);
  require(space.jump() != nullptr, "smc1 needs a model space with trans-dimensional moves");
  RunResult res;
  const auto path = TemperedPath::geometric(space);
  const std::uint64_t tag = algo_tag(Algorithm::smc1, 0);
  DriverSetup setup{&path, &cfg.schedule, "joint", tag, true, space.min_id(), space.max_id()};
  auto d = drive(setup, sample_initial(space, cfg, tag), cfg);
  if (cfg.direct) res.estimates.push_back(make_estimate("smc1-ds", "joint", d.acc.log_ratio, d));

  std::map<int, double> freq;
  for (std::size_t i = 0; i < d.sys.size(); ++i) freq[d.sys.particles[i].model_id] += std::exp(d.sys.log_norm_weights[i]);
  for (int id : space.ids()) {
    const double p = freq.contains(id) ? freq[id] : 0.0;
    res.model_probabilities[id] = p;
    if (p > 0.0) {
      // p(y|r) = p(y) P(r|y) / P(r)
      const double le = d.acc.log_ratio + std::log(p) - space.log_model_prior(id);
      res.estimates.push_back(make_estimate("smc1-freq", std::to_string(id), le, d));
    }
  }
  res.path_traces["joint"] = d.path;
  summarize_system(res, space, d.sys);
  absorb_trace(res, d);
  res.final_systems[0] = std::move(d.sys);
  return res;
}

RunResult run_smc3(const ModelSpace& space, int lower, int upper, const ParticleSystem& start, const RunConfig& cfg) {
  validate(cfg);
  require(space.jump() != nullptr, "smc3 needs a model space with trans-dimensional moves");
  RunResult res;
  const auto path = TemperedPath::model_mixture(space, lower, upper);
  const std::uint64_t tag = algo_tag(Algorithm::smc3, static_cast<std::uint64_t>(lower));
  const std::string label = std::to_string(lower) + "->" + std::to_string(upper);

  // Start from an equally weighted sample of the lower posterior. Zero-weight
  // leftovers of a previous pair are never selected.
  auto rng = stream(cfg, tag, 1, kResample);
  ParticleSystem sys = resample(start, cfg.resampling, rng);
  for (const auto& p : sys.particles) require(p.model_id == lower, "smc3 start particles must be in the lower model");

  DriverSetup setup{&path, &cfg.smc3_schedule, label, tag, true, std::min(lower, upper), std::max(lower, upper)};
  auto d = drive(setup, std::move(sys), cfg);
  add_estimates(res, "smc3", label, d, cfg, true);
  res.path_traces[label] = d.path;
  summarize_system(res, space, d.sys);
  absorb_trace(res, d);
  res.final_systems[upper] = std::move(d.sys);
  return res;
}

RunResult run_smc3_chain(const ModelSpace& space, const RunConfig& cfg) {
  validate(cfg);
  const auto ids = space.ids();
  require(ids.size() >= 2, "smc3 needs at least two models");
  RunResult res;
  RunConfig pre = cfg;
  pre.algorithm = Algorithm::smc2;
  pre.path_rules.clear();

  auto lower_posterior = [&](int id) {
    ModelSpace single(id, space.model_ptr(id));
    RunConfig c = pre;
    auto r = run_smc2(single, c);
    return r.final_systems.at(id);
  };

  ParticleSystem current = lower_posterior(ids[0]);
  for (std::size_t k = 0; k + 1 < ids.size(); ++k) {
    if (k > 0 && cfg.smc3_fresh) current = lower_posterior(ids[k]);
    auto r = run_smc3(space, ids[k], ids[k + 1], current, cfg);
    for (auto& e : r.estimates) res.estimates.push_back(std::move(e));
    for (auto& [key, tr] : r.path_traces) res.path_traces[key] = std::move(tr);
    for (auto& [id, s] : r.summaries) res.summaries[id] = std::move(s);
    for (const auto& c : r.acceptance_columns) {
      if (std::find(res.acceptance_columns.begin(), res.acceptance_columns.end(), c) == res.acceptance_columns.end()) {
        res.acceptance_columns.push_back(c);
      }
    }
    for (auto& rec : r.trace) res.trace.push_back(std::move(rec));
    current = r.final_systems.at(ids[k + 1]);
    res.final_systems[ids[k + 1]] = current;
  }
  return res;
}

RunResult run(const ModelSpace& space, const RunConfig& cfg) {
  switch (cfg.algorithm) {
    case Algorithm::smc1:
      return run_smc1(space, cfg);
    case Algorithm::smc3:
      return run_smc3_chain(space, cfg);
    default:
      return run_smc2(space, cfg);
  }
}

std::vector<std::vector<EvidenceEstimate>> run_replicates(std::size_t R, const ReplicateFn& fn, bool fixed_seed) {
  require(R >= 1, "need at least one replicate");
  std::vector<std::vector<EvidenceEstimate>> out(R);
  std::vector<std::exception_ptr> errors(R);
  tbb::parallel_for(std::size_t{0}, R, [&](std::size_t r) {
    try {
      out[r] = fn(fixed_seed ? 0 : r);
    } catch (...) {
      errors[r] = std::current_exception();
    }
  });
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

std::vector<SummaryRow> summarize(const std::vector<std::vector<EvidenceEstimate>>& replicates) {
  using Key = std::pair<std::string, std::string>;
  std::vector<Key> order;
  std::map<Key, std::vector<double>> values;
  for (const auto& rep : replicates) {
    for (const auto& e : rep) {
      Key k{e.estimator, e.model};
      if (!values.contains(k)) order.push_back(k);
      values[k].push_back(e.log_evidence);
    }
  }
  auto stats_of = [](const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m += x;
    m /= static_cast<double>(v.size());
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    const double sd = v.size() > 1 ? std::sqrt(s / static_cast<double>(v.size() - 1)) : 0.0;
    return std::pair{m, sd};
  };
  std::vector<SummaryRow> rows;
  for (const auto& k : order) {
    const auto& v = values[k];
    auto [m, sd] = stats_of(v);
    rows.push_back({k.first, k.second, m, sd, v.size()});
  }

  // Log Bayes factors between consecutive models of the same estimator.
  std::vector<std::string> estimators;
  std::map<std::string, std::vector<std::string>> models;
  for (const auto& k : order) {
    if (!models.contains(k.first)) estimators.push_back(k.first);
    models[k.first].push_back(k.second);
  }
  for (const auto& est : estimators) {
    const auto& ms = models[est];
    if (ms.size() < 2 || est == "smc1-ds" || ms.front().find("->") != std::string::npos) continue;
    for (std::size_t i = 0; i + 1 < ms.size(); ++i) {
      std::vector<double> diff;
      for (const auto& rep : replicates) {
        const EvidenceEstimate* a = nullptr;
        const EvidenceEstimate* b = nullptr;
        for (const auto& e : rep) {
          if (e.estimator != est) continue;
          if (e.model == ms[i]) a = &e;
          if (e.model == ms[i + 1]) b = &e;
        }
        if (a && b) diff.push_back(bayes_factor(a->log_evidence, b->log_evidence));
      }
      if (diff.empty()) continue;
      auto [m, sd] = stats_of(diff);
      rows.push_back({est, ms[i] + "/" + ms[i + 1], m, sd, diff.size()});
    }
  }
  return rows;
}

}  // namespace smcev
