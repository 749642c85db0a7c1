#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "smcev/app.hpp"
#include "smcev/error.hpp"

namespace {

namespace fs = std::filesystem;
using smcev::app::parse_config_text;

std::string conjugate_text(const std::string& extra = "") {
  return "[model]\nkind = conjugate\ndata_seed = 3\n[sampler]\nparticles = 200\nseed = 5\n[schedule]\ntarget = "
         "0.9\n" +
         extra;
}

smcev::ErrorCode config_error_code(const std::string& text, std::string* message = nullptr) {
  try {
    parse_config_text(text);
  } catch (const smcev::Error& e) {
    if (message) *message = e.what();
    return e.code();
  }
  ADD_FAILURE() << "expected a config error";
  return smcev::ErrorCode::io;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch_dir(const std::string& name) {
  const auto d = fs::temp_directory_path() / ("smcev_app_test_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

TEST(Config, UnknownKeyIsNamed) {
  std::string msg;
  EXPECT_EQ(config_error_code(conjugate_text("[kernel]\nsweep = 2\n"), &msg), smcev::ErrorCode::config);
  EXPECT_NE(msg.find("kernel.sweep"), std::string::npos) << msg;
  EXPECT_EQ(config_error_code(conjugate_text("[mystery]\nx = 1\n"), &msg), smcev::ErrorCode::config);
}

TEST(Config, MissingModelSection) {
  std::string msg;
  EXPECT_EQ(config_error_code("[sampler]\nparticles = 10\n", &msg), smcev::ErrorCode::config);
  EXPECT_NE(msg.find("model"), std::string::npos) << msg;
}

TEST(Config, BadValuesAreConfigErrors) {
  EXPECT_EQ(config_error_code(conjugate_text("[kernel]\nsweeps = many\n")), smcev::ErrorCode::config);
  EXPECT_EQ(config_error_code("[model]\nkind = spline\n"), smcev::ErrorCode::config);
  EXPECT_EQ(config_error_code(conjugate_text("[estimators]\npath = gauss:2\n")), smcev::ErrorCode::config);
  EXPECT_EQ(config_error_code("[model]\nkind = conjugate\n[sampler]\nalgorithm = ais\nresample_threshold = 0.5\n"),
            smcev::ErrorCode::config);
}

TEST(Config, DefaultsAndResolvedSnapshot) {
  const auto cfg = parse_config_text(conjugate_text("[estimators]\npath = trapezoid:1, boole:8\n"));
  EXPECT_EQ(cfg.run.algorithm, smcev::Algorithm::smc2);
  EXPECT_EQ(cfg.run.particles, 200u);
  EXPECT_EQ(cfg.run.seed, 5u);
  EXPECT_DOUBLE_EQ(cfg.run.resample_threshold, 0.5);
  EXPECT_EQ(cfg.run.resampling, smcev::ResampleScheme::multinomial);
  ASSERT_EQ(cfg.run.path_rules.size(), 2u);
  EXPECT_EQ(cfg.run.path_rules[1].kind, smcev::RuleKind::boole);
  EXPECT_EQ(cfg.run.path_rules[1].refinement, 8u);
  EXPECT_EQ(cfg.resolved.get<std::string>("sampler.particles"), "200");
  EXPECT_TRUE(cfg.resolved.get_optional<std::string>("schedule.kind").has_value());
  EXPECT_TRUE(cfg.resolved.get_optional<std::string>("kernel.sweeps").has_value());

  // The snapshot parses back to the same configuration.
  const auto again = parse_config_text(smcev::app::write_ini_text(cfg.resolved));
  EXPECT_EQ(smcev::app::write_ini_text(again.resolved), smcev::app::write_ini_text(cfg.resolved));
}

TEST(Config, AisDefaultsToNoResampling) {
  const auto cfg = parse_config_text("[model]\nkind = conjugate\n[sampler]\nalgorithm = ais\n");
  EXPECT_EQ(cfg.run.resample_threshold, 0.0);
}

TEST(Config, SetValueOverrides) {
  auto tree = smcev::app::read_ini_text(conjugate_text());
  smcev::app::set_value(tree, "sampler.particles", "64");
  EXPECT_EQ(smcev::app::parse_config(tree).run.particles, 64u);
}

TEST(Datasets, RoundTripIsExact) {
  const auto dir = scratch_dir("data");
  for (const std::string kind : {"conjugate", "gmm", "goodwin", "pet"}) {
    const auto d = smcev::app::generate_dataset(kind, 42);
    const auto path = (dir / (kind + ".csv")).string();
    smcev::app::write_dataset(path, d);
    const auto back = smcev::app::read_dataset(path);
    ASSERT_EQ(back.columns, d.columns) << kind;
    for (std::size_t c = 0; c < d.columns.size(); ++c) EXPECT_EQ(back.values[c], d.values[c]) << kind;
  }
  EXPECT_EQ(smcev::app::generate_dataset("gmm", 42).values, smcev::app::generate_dataset("gmm", 42).values);
  EXPECT_EQ(smcev::app::generate_dataset("gmm", 42).column("y").size(), 100u);
  EXPECT_THROW(smcev::app::read_dataset((dir / "absent.csv").string()), smcev::Error);
}

TEST(Csv, HeadersAreFixed) {
  const auto dir = scratch_dir("csv");
  const auto cfg = parse_config_text(conjugate_text());
  const auto res = smcev::app::run_experiment(cfg);
  smcev::app::write_trace((dir / "trace.csv").string(), res);
  smcev::app::write_estimates((dir / "estimates.csv").string(), res);
  smcev::app::write_summary((dir / "summary.csv").string(), smcev::app::replicate_experiment(cfg, 2));
  smcev::app::write_bias_table((dir / "bias.csv").string(), {});
  smcev::app::write_clt((dir / "clt.csv").string(), {});
  auto first_line = [&](const std::string& f) {
    const auto s = read_file(dir / f);
    return s.substr(0, s.find('\n'));
  };
  EXPECT_EQ(first_line("trace.csv"), "model,iteration,alpha,ess,cess,resampled,acc_mu,log_increment,U");
  EXPECT_EQ(first_line("estimates.csv"),
            "estimator,model,log_evidence,realized_T,min_ess,resample_count,forced_micro_steps");
  EXPECT_EQ(first_line("summary.csv"), "estimator,model,mean,sd,R");
  EXPECT_EQ(first_line("bias.csv"), "rule,refinement,mean,sd,bias,R");
  EXPECT_EQ(first_line("clt.csv"), "N,empirical_variance,predicted_variance,ratio");
}

TEST(Csv, DoublesRoundTrip) {
  for (double v : {0.1, -27.514039078049656, 1e-300, 123456789.123456789}) {
    EXPECT_EQ(std::stod(smcev::app::format_double(v)), v);
  }
}

TEST(Experiments, SummaryHasOneRowPerEstimator) {
  const auto cfg = parse_config_text(conjugate_text("[estimators]\npath = trapezoid:1, simpson:2\n"));
  const auto rows = smcev::app::replicate_experiment(cfg, 3);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0].estimator, "smc2-ds");
  EXPECT_EQ(rows[1].estimator, "smc2-ps");
  EXPECT_EQ(rows[2].estimator, "smc2-ps-simpson-x2");
}

TEST(Experiments, FixedSeedGivesZeroSd) {
  const auto cfg = parse_config_text(conjugate_text("[replicate]\nfixed_seed = true\n"));
  for (const auto& r : smcev::app::replicate_experiment(cfg, 2)) EXPECT_EQ(r.sd, 0.0);
}

TEST(Experiments, BiasTableTrapezoidMatchesPathEstimate) {
  const auto cfg = parse_config_text(
      conjugate_text("[bias_table]\nreplicates = 4\nrules = trapezoid, boole\nrefinements = 1, 8\n"));
  const auto rows = smcev::app::bias_table(cfg);
  ASSERT_EQ(rows.size(), 4u);
  const auto summary = smcev::app::replicate_experiment(cfg, 4);
  EXPECT_EQ(rows[0].rule, smcev::RuleKind::trapezoid);
  EXPECT_EQ(rows[0].refinement, 1u);
  EXPECT_DOUBLE_EQ(rows[0].mean, summary[1].mean);
  const auto problem = smcev::app::build_problem(cfg);
  EXPECT_DOUBLE_EQ(rows[0].bias, rows[0].mean - *problem.reference);
}

TEST(Experiments, CltConstantFlowHasZeroVariance) {
  const auto cfg = parse_config_text(
      "[model]\nkind = flow\n[flow]\nloglik = 0.5, 0.5, 0.5\n[clt]\nparticles = 64\nreplicates = 20\n");
  const auto rows = smcev::app::clt_experiment(cfg);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_NEAR(rows[0].empirical_variance, 0.0, 1e-20);
  EXPECT_NEAR(rows[0].predicted_variance, 0.0, 1e-20);
}

TEST(Experiments, FlowKindIsOnlyForCltCheck) {
  const auto cfg = parse_config_text("[model]\nkind = flow\n");
  EXPECT_THROW(smcev::app::run_experiment(cfg), smcev::Error);
}

}  // namespace
