// Command-line front end over the C API.
#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <string>

#include "smcev/smcev.h"

namespace {

struct Options {
  std::string config;
  std::string out;
  long long seed = -1;
  int threads = 0;
  long long replicates = -1;
};

int exit_code(int status) {
  switch (status) {
    case SMCEV_OK: return 0;
    case SMCEV_ERR_CONFIG:
    case SMCEV_ERR_IO:
    case SMCEV_ERR_INVALID: return 1;
    case SMCEV_ERR_DEGENERATE: return 2;
    default: return 3;
  }
}

int report(int status) {
  if (status != SMCEV_OK) std::fprintf(stderr, "smcev: error: %s\n", smcev_last_error());
  return exit_code(status);
}

// Owns a loaded config with the command-line overrides applied.
class Config {
 public:
  ~Config() { smcev_config_free(cfg_); }

  int load(const Options& o) {
    if (int s = smcev_config_load(o.config.c_str(), &cfg_)) return s;
    if (o.seed >= 0) {
      if (int s = smcev_config_set(cfg_, "sampler.seed", std::to_string(o.seed).c_str())) return s;
    }
    if (o.replicates >= 0) {
      if (int s = smcev_config_set(cfg_, "replicate.count", std::to_string(o.replicates).c_str())) return s;
    }
    if (!o.out.empty()) {
      out_ = o.out;
    } else if (const char* env = std::getenv("SMCEV_OUTPUT_DIR"); env && *env) {
      out_ = env;
    } else {
      out_ = smcev_config_get(cfg_, "output.dir");
    }
    return SMCEV_OK;
  }

  smcev_config* get() const { return cfg_; }
  const std::string& out() const { return out_; }

  int snapshot() const { return smcev_config_write_resolved(cfg_, (out_ + "/config.resolved.ini").c_str()); }

 private:
  smcev_config* cfg_ = nullptr;
  std::string out_;
};

int cmd_run(const Options& o) {
  Config c;
  if (int s = c.load(o)) return report(s);
  smcev_result* res = nullptr;
  if (int s = smcev_run(c.get(), &res)) return report(s);
  int s = smcev_result_write(res, c.out().c_str());
  smcev_result_free(res);
  if (s == SMCEV_OK) s = c.snapshot();
  return report(s);
}

int cmd_replicate(const Options& o) {
  Config c;
  if (int s = c.load(o)) return report(s);
  const long long r = std::atoll(smcev_config_get(c.get(), "replicate.count"));
  int s = smcev_replicate(c.get(), static_cast<size_t>(r), c.out().c_str());
  if (s == SMCEV_OK) s = c.snapshot();
  return report(s);
}

int cmd_bias_table(const Options& o) {
  Config c;
  if (int s = c.load(o)) return report(s);
  int s = smcev_bias_table(c.get(), c.out().c_str());
  if (s == SMCEV_OK) s = c.snapshot();
  return report(s);
}

int cmd_clt_check(const Options& o) {
  Config c;
  if (int s = c.load(o)) return report(s);
  int s = smcev_clt_check(c.get(), c.out().c_str());
  if (s == SMCEV_OK) s = c.snapshot();
  return report(s);
}

int cmd_gen_data(const Options& o) {
  const std::string dir = o.out.empty() ? "data" : o.out;
  return report(smcev_gen_data(dir.c_str(), o.seed >= 0 ? static_cast<uint64_t>(o.seed) : 20240101u));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Evidence estimation with sequential Monte Carlo samplers"};
  app.require_subcommand(1);
  Options o;

  app.add_option("--threads", o.threads, "Worker threads (0 = all cores; 1 is bit-reproducible)")
      ->check(CLI::NonNegativeNumber);

  auto add_common = [&](CLI::App* sub, bool needs_config) {
    auto* opt = sub->add_option("--config", o.config, "Experiment configuration (INI)");
    if (needs_config) opt->required()->check(CLI::ExistingFile);
    sub->add_option("--out", o.out, "Output directory (overrides output.dir)");
    sub->add_option("--seed", o.seed, "Top-level seed (overrides sampler.seed)")->check(CLI::NonNegativeNumber);
    sub->add_option("--threads", o.threads, "Worker threads")->check(CLI::NonNegativeNumber);
  };

  auto* run = app.add_subcommand("run", "Run the configured sampler once");
  add_common(run, true);
  auto* rep = app.add_subcommand("replicate", "Replicate runs and summarise mean and SD per estimator");
  add_common(rep, true);
  rep->add_option("--replicates", o.replicates, "Replicate count (overrides replicate.count)")
      ->check(CLI::PositiveNumber);
  auto* bias = app.add_subcommand("bias-table", "Path-sampling bias by quadrature rule and refinement");
  add_common(bias, true);
  auto* clt = app.add_subcommand("clt-check", "Empirical against predicted variance on a finite-state flow");
  add_common(clt, true);
  auto* gen = app.add_subcommand("gen-data", "Write the benchmark datasets");
  gen->add_option("--out", o.out, "Output directory (default data)");
  gen->add_option("--seed", o.seed, "Dataset seed")->check(CLI::NonNegativeNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  if (int s = smcev_set_threads(o.threads)) return report(s);
  if (*run) return cmd_run(o);
  if (*rep) return cmd_replicate(o);
  if (*bias) return cmd_bias_table(o);
  if (*clt) return cmd_clt_check(o);
  return cmd_gen_data(o);
}
