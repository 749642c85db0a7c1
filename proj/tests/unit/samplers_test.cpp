#include <gtest/gtest.h>

#include <cmath>
#include <memory>

#include "oracles.hpp"
#include "smcev/error.hpp"
#include "smcev/models.hpp"
#include "smcev/samplers.hpp"

namespace {

using smcev::Algorithm;
using smcev::RunConfig;

/// Moves to a neighbouring model id with a fresh draw from that model's
/// prior. Models must share the state dimension.
class PriorSwap final : public smcev::JumpMove {
 public:
  explicit PriorSwap(const smcev::ModelSpace* space) : space_(space) {}

  std::optional<smcev::JumpProposal> propose(const smcev::Particle& cur, int min_id, int max_id,
                                             smcev::RngStream& rng) const override {
    const int to = cur.model_id + (rng.uniform() < 0.5 ? 1 : -1);
    if (to < min_id || to > max_id || !space_->contains(to)) return std::nullopt;
    const auto& from_m = space_->model(cur.model_id);
    const auto& to_m = space_->model(to);
    smcev::Particle next{to_m.sample_prior(rng), to};
    return smcev::JumpProposal{next, from_m.log_prior(cur.state) - to_m.log_prior(next.state)};
  }

 private:
  const smcev::ModelSpace* space_;
};

std::vector<double> sample_data() {
  smcev::RngStream rng(2024, 7);
  std::vector<double> y(20);
  for (auto& v : y) v = 0.8 + rng.normal();
  return y;
}

RunConfig small_config(std::size_t n = 300) {
  RunConfig cfg;
  cfg.particles = n;
  cfg.seed = 17;
  cfg.schedule.bisection.target = 0.95;
  return cfg;
}

double estimate(const smcev::RunResult& r, const std::string& est, const std::string& model) {
  for (const auto& e : r.estimates) {
    if (e.estimator == est && e.model == model) return e.log_evidence;
  }
  ADD_FAILURE() << "missing estimate " << est << " " << model;
  return 0.0;
}

/// Independence jump to a neighbouring conjugate model, proposing from that
/// model's exact posterior.
class PosteriorSwap final : public smcev::JumpMove {
 public:
  explicit PosteriorSwap(const smcev::ModelSpace* space) : space_(space) {}

  std::optional<smcev::JumpProposal> propose(const smcev::Particle& cur, int min_id, int max_id,
                                             smcev::RngStream& rng) const override {
    const int to = cur.model_id + (rng.uniform() < 0.5 ? 1 : -1);
    if (to < min_id || to > max_id || !space_->contains(to)) return std::nullopt;
    const auto& from_m = dynamic_cast<const smcev::ConjugateGaussian&>(space_->model(cur.model_id));
    const auto& to_m = dynamic_cast<const smcev::ConjugateGaussian&>(space_->model(to));
    smcev::Particle next{{to_m.posterior_mean() + std::sqrt(to_m.posterior_var()) * rng.normal()}, to};
    const double back = oracle::normal_log_pdf(cur.state[0], from_m.posterior_mean(), from_m.posterior_var());
    const double fwd = oracle::normal_log_pdf(next.state[0], to_m.posterior_mean(), to_m.posterior_var());
    return smcev::JumpProposal{next, back - fwd};
  }

 private:
  const smcev::ModelSpace* space_;
};

TEST(RunSmc2, ZeroDataGivesZeroInOneStep) {
  auto model = std::make_shared<smcev::ConjugateGaussian>(std::vector<double>{}, 0.0, 1.0, 1.0);
  const auto res = smcev::run_smc2(model, small_config());
  for (const auto& e : res.estimates) {
    EXPECT_EQ(e.log_evidence, 0.0) << e.estimator;
    EXPECT_EQ(e.realized_T, 1u);
  }
  EXPECT_EQ(res.trace.size(), 2u);
}

TEST(RunSmc2, TraceHasOneRowPerDistribution) {
  auto model = std::make_shared<smcev::ConjugateGaussian>(sample_data(), 0.0, 4.0, 1.0);
  const auto res = smcev::run_smc2(model, small_config());
  ASSERT_FALSE(res.estimates.empty());
  EXPECT_EQ(res.trace.size(), res.estimates.front().realized_T + 1);
  EXPECT_EQ(res.trace.front().alpha, 0.0);
  EXPECT_EQ(res.trace.back().alpha, 1.0);
  for (std::size_t t = 1; t < res.trace.size(); ++t) EXPECT_GT(res.trace[t].alpha, res.trace[t - 1].alpha);
  EXPECT_EQ(estimate(res, "smc2-ds", "0"), res.estimates[0].log_evidence);
  EXPECT_NEAR(estimate(res, "smc2-ps", "0"), *model->log_evidence(), 0.5);
}

TEST(RunSmc2, AisNeverResamples) {
  auto model = std::make_shared<smcev::ConjugateGaussian>(sample_data(), 0.0, 4.0, 1.0);
  auto cfg = small_config();
  cfg.algorithm = Algorithm::ais;
  cfg.resample_threshold = 0.0;
  cfg.schedule = {smcev::ScheduleKind::power, 4.0, 30, {}};
  const auto res = smcev::run_smc2(model, cfg);
  EXPECT_EQ(res.trace.size(), 31u);
  for (const auto& r : res.trace) EXPECT_FALSE(r.resampled);
  for (const auto& e : res.estimates) {
    EXPECT_EQ(e.resample_count, 0u);
    EXPECT_EQ(e.estimator.rfind("ais-", 0), 0u);
  }
}

TEST(RunSmc2, NoMutationOneStepIsImportanceSampling) {
  const auto y = sample_data();
  auto model = std::make_shared<smcev::ConjugateGaussian>(y, 0.0, 1.0, 1.0);
  auto cfg = small_config(2000);
  cfg.kernel.sweeps = 0;
  cfg.resample_threshold = 0.0;
  cfg.schedule = {smcev::ScheduleKind::linear, 1.0, 1, {}};
  const auto res = smcev::run_smc2(model, cfg);
  const auto& sys = res.final_systems.at(0);
  double m = -1e300;
  std::vector<double> ll;
  for (const auto& p : sys.particles) {
    ll.push_back(model->log_likelihood(p.state));
    m = std::max(m, ll.back());
  }
  double s = 0.0;
  for (double v : ll) s += std::exp(v - m);
  const double is = m + std::log(s / static_cast<double>(ll.size()));
  EXPECT_NEAR(estimate(res, "smc2-ds", "0"), is, 1e-12);
}

TEST(RunSmc2, BitReproducible) {
  auto model = std::make_shared<smcev::ConjugateGaussian>(sample_data(), 0.0, 4.0, 1.0);
  const auto a = smcev::run_smc2(model, small_config());
  const auto b = smcev::run_smc2(model, small_config());
  ASSERT_EQ(a.estimates.size(), b.estimates.size());
  for (std::size_t i = 0; i < a.estimates.size(); ++i) EXPECT_EQ(a.estimates[i].log_evidence, b.estimates[i].log_evidence);
  ASSERT_EQ(a.trace.size(), b.trace.size());
  for (std::size_t i = 0; i < a.trace.size(); ++i) EXPECT_EQ(a.trace[i].alpha, b.trace[i].alpha);
  auto other = small_config();
  other.replicate = 1;
  EXPECT_NE(smcev::run_smc2(model, other).estimates[0].log_evidence, a.estimates[0].log_evidence);
}

TEST(RunSmc2, StandardDeviationShrinksAtRootNRate) {
  auto model = std::make_shared<smcev::ConjugateGaussian>(sample_data(), 0.0, 1.0, 1.0);
  std::vector<double> logn, logsd;
  for (std::size_t n : {250u, 1000u, 4000u}) {
    auto cfg = small_config(n);
    cfg.schedule.bisection.target = 0.9;
    cfg.path_rules.clear();
    const auto reps = smcev::run_replicates(60, [&](std::uint64_t r) {
      auto c = cfg;
      c.replicate = r;
      return smcev::run_smc2(model, c).estimates;
    });
    const auto rows = smcev::summarize(reps);
    ASSERT_EQ(rows.size(), 1u);
    logn.push_back(std::log(static_cast<double>(n)));
    logsd.push_back(std::log(rows[0].sd));
  }
  const double mx = (logn[0] + logn[1] + logn[2]) / 3.0, my = (logsd[0] + logsd[1] + logsd[2]) / 3.0;
  double sxy = 0.0, sxx = 0.0;
  for (int i = 0; i < 3; ++i) {
    sxy += (logn[i] - mx) * (logsd[i] - my);
    sxx += (logn[i] - mx) * (logn[i] - mx);
  }
  EXPECT_NEAR(sxy / sxx, -0.5, 0.15);
}

TEST(RunReplicates, DeterministicStubHasZeroSd) {
  const auto reps = smcev::run_replicates(5, [](std::uint64_t) {
    smcev::EvidenceEstimate e;
    e.estimator = "stub";
    e.model = "m";
    e.log_evidence = -3.25;
    return std::vector<smcev::EvidenceEstimate>{e};
  });
  const auto rows = smcev::summarize(reps);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].mean, -3.25);
  EXPECT_EQ(rows[0].sd, 0.0);
  EXPECT_EQ(rows[0].replicates, 5u);
}

TEST(RunReplicates, BayesFactorRows) {
  const auto reps = smcev::run_replicates(3, [](std::uint64_t r) {
    std::vector<smcev::EvidenceEstimate> v(2);
    v[0] = {"x", "4", -10.0 + static_cast<double>(r), 0, 0, 0, 0};
    v[1] = {"x", "5", -12.0, 0, 0, 0, 0};
    return v;
  });
  const auto rows = smcev::summarize(reps);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[2].model, "4/5");
  EXPECT_DOUBLE_EQ(rows[2].mean, 3.0);
  EXPECT_DOUBLE_EQ(rows[2].sd, 1.0);
}

template <class Jump = PriorSwap>
smcev::ModelSpace* conjugate_family(const std::vector<double>& y, const std::vector<double>& prior_vars,
                                    const std::vector<double>& masses) {
  auto* space = new smcev::ModelSpace();
  for (std::size_t k = 0; k < prior_vars.size(); ++k) {
    space->add(static_cast<int>(k) + 1, std::make_shared<smcev::ConjugateGaussian>(y, 0.0, prior_vars[k], 1.0),
               std::log(masses[k]));
  }
  space->set_jump(std::make_shared<Jump>(space));
  return space;
}

TEST(RunSmc1, FlatLikelihoodReproducesModelPrior) {
  std::unique_ptr<smcev::ModelSpace> space(conjugate_family({}, {1.0, 2.0, 3.0}, {0.2, 0.3, 0.5}));
  auto cfg = small_config(4000);
  cfg.algorithm = Algorithm::smc1;
  const auto res = smcev::run_smc1(*space, cfg);
  const double masses[] = {0.2, 0.3, 0.5};
  for (int id = 1; id <= 3; ++id) {
    const double p = masses[id - 1];
    EXPECT_NEAR(res.model_probabilities.at(id), p, 3.0 * std::sqrt(p * (1 - p) / 4000.0)) << id;
  }
  EXPECT_EQ(estimate(res, "smc1-ds", "joint"), 0.0);
}

TEST(RunSmc1, LabelFrequenciesTrackAnalyticPosterior) {
  const auto y = sample_data();
  std::unique_ptr<smcev::ModelSpace> space(conjugate_family(y, {0.1, 1.0, 10.0}, {1.0 / 3, 1.0 / 3, 1.0 / 3}));
  std::map<int, double> le, lp;
  for (int id = 1; id <= 3; ++id) {
    le[id] = *space->model(id).log_evidence();
    lp[id] = space->log_model_prior(id);
  }
  const auto truth = smcev::model_posteriors(le, lp);
  auto cfg = small_config(2000);
  cfg.algorithm = Algorithm::smc1;
  cfg.kernel.sweeps = 2;
  const auto res = smcev::run_smc1(*space, cfg);
  for (int id = 1; id <= 3; ++id) EXPECT_NEAR(res.model_probabilities.at(id), truth.at(id), 0.06) << id;
}

TEST(RunSmc3, IdenticalPairGivesZero) {
  const auto y = sample_data();
  std::unique_ptr<smcev::ModelSpace> space(conjugate_family<PosteriorSwap>(y, {1.0, 1.0}, {0.5, 0.5}));
  auto cfg = small_config(400);
  cfg.algorithm = Algorithm::smc3;
  cfg.smc3_schedule = {smcev::ScheduleKind::power, 2.0, 50, {}};
  std::vector<double> v;
  for (std::uint64_t r = 0; r < 20; ++r) {
    cfg.replicate = r;
    const auto res = smcev::run_smc3_chain(*space, cfg);
    v.push_back(estimate(res, "smc3-ds", "1->2"));
  }
  double m = 0.0, s = 0.0;
  for (double x : v) m += x / 20.0;
  for (double x : v) s += (x - m) * (x - m) / 19.0;
  EXPECT_NEAR(m, 0.0, 3.0 * std::sqrt(s / 20.0) + 1e-12);
}

TEST(RunSmc3, ChainedFactorsMatchAnalyticRatios) {
  const auto y = sample_data();
  std::unique_ptr<smcev::ModelSpace> space(conjugate_family<PosteriorSwap>(y, {0.5, 2.0, 8.0}, {1.0 / 3, 1.0 / 3, 1.0 / 3}));
  const double l1 = *space->model(1).log_evidence(), l2 = *space->model(2).log_evidence(),
               l3 = *space->model(3).log_evidence();
  auto cfg = small_config(1000);
  cfg.algorithm = Algorithm::smc3;
  cfg.smc3_schedule = {smcev::ScheduleKind::power, 2.0, 50, {}};
  const auto res = smcev::run_smc3_chain(*space, cfg);
  const double b21 = estimate(res, "smc3-ds", "1->2"), b32 = estimate(res, "smc3-ds", "2->3");
  EXPECT_NEAR(b21, l2 - l1, 0.15);
  EXPECT_NEAR(b32, l3 - l2, 0.15);
  EXPECT_NEAR(b21 + b32, l3 - l1, 0.25);
  EXPECT_NEAR(estimate(res, "smc3-ps", "1->2"), l2 - l1, 0.15);
}

TEST(Validate, RejectsInconsistentConfigs) {
  RunConfig cfg;
  cfg.algorithm = Algorithm::ais;
  EXPECT_THROW(smcev::validate(cfg), smcev::Error);
  cfg.resample_threshold = 0.0;
  EXPECT_NO_THROW(smcev::validate(cfg));
  cfg = RunConfig{};
  cfg.algorithm = Algorithm::smc3;
  cfg.smc3_schedule.kind = smcev::ScheduleKind::adaptive;
  EXPECT_THROW(smcev::validate(cfg), smcev::Error);
  cfg = RunConfig{};
  cfg.resample_threshold = 1.5;
  EXPECT_THROW(smcev::validate(cfg), smcev::Error);
  cfg = RunConfig{};
  cfg.schedule.bisection.target = 1.0;
  EXPECT_THROW(smcev::validate(cfg), smcev::Error);
}

}  // namespace
