#include "smcev/smcev.h"

#include <tbb/global_control.h>

#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <sstream>
#include <string>

#include "smcev/app.hpp"
#include "smcev/error.hpp"

struct smcev_config {
  smcev::app::Tree raw;
  std::string base_dir;
  smcev::app::ExperimentConfig parsed;
  mutable std::string scratch;
};

struct smcev_result {
  smcev::RunResult run;
};

namespace {

thread_local std::string last_error;

std::mutex threads_mutex;
std::unique_ptr<tbb::global_control> threads_control;

int status_of(smcev::ErrorCode code) {
  switch (code) {
    case smcev::ErrorCode::config: return SMCEV_ERR_CONFIG;
    case smcev::ErrorCode::degenerate_weights:
    case smcev::ErrorCode::micro_step_cap: return SMCEV_ERR_DEGENERATE;
    case smcev::ErrorCode::io: return SMCEV_ERR_IO;
    case smcev::ErrorCode::invalid_argument:
    case smcev::ErrorCode::transform_domain: return SMCEV_ERR_INVALID;
  }
  return SMCEV_ERR_INTERNAL;
}

template <class F>
int guarded(F&& f) {
  last_error.clear();
  try {
    f();
    return SMCEV_OK;
  } catch (const smcev::Error& e) {
    last_error = e.what();
    return status_of(e.code());
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
  } catch (const std::exception& e) {
    last_error = e.what();
  } catch (...) {
    last_error = "unknown error";
  }
  return SMCEV_ERR_INTERNAL;
}

int invalid(const char* what) {
  last_error = what;
  return SMCEV_ERR_INVALID;
}

std::string prepare_dir(const char* dir) {
  const std::string d = dir ? dir : ".";
  std::error_code ec;
  std::filesystem::create_directories(d, ec);
  if (ec) smcev::fail(smcev::ErrorCode::io, "cannot create output directory '" + d + "': " + ec.message());
  return d;
}

std::string in_dir(const std::string& dir, const char* name) { return (std::filesystem::path(dir) / name).string(); }

}  // namespace

extern "C" {

const char* smcev_version(void) { return "0.1.0"; }

const char* smcev_last_error(void) { return last_error.c_str(); }

int smcev_set_threads(int k) {
  if (k < 0) return invalid("thread count must be non-negative");
  return guarded([&] {
    std::lock_guard lock(threads_mutex);
    threads_control.reset();
    if (k > 0) {
      threads_control = std::make_unique<tbb::global_control>(tbb::global_control::max_allowed_parallelism,
                                                              static_cast<std::size_t>(k));
    }
  });
}

int smcev_config_load(const char* path, smcev_config** out) {
  if (!path || !out) return invalid("null argument");
  *out = nullptr;
  return guarded([&] {
    std::ifstream in(path);
    if (!in) smcev::fail(smcev::ErrorCode::io, std::string("cannot read config file '") + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    auto cfg = std::make_unique<smcev_config>();
    const auto dir = std::filesystem::path(path).parent_path();
    cfg->base_dir = dir.empty() ? "." : dir.string();
    cfg->raw = smcev::app::read_ini_text(ss.str());
    cfg->parsed = smcev::app::parse_config(cfg->raw, cfg->base_dir);
    *out = cfg.release();
  });
}

int smcev_config_parse(const char* text, const char* base_dir, smcev_config** out) {
  if (!text || !out) return invalid("null argument");
  *out = nullptr;
  return guarded([&] {
    auto cfg = std::make_unique<smcev_config>();
    cfg->base_dir = base_dir ? base_dir : ".";
    cfg->raw = smcev::app::read_ini_text(text);
    cfg->parsed = smcev::app::parse_config(cfg->raw, cfg->base_dir);
    *out = cfg.release();
  });
}

int smcev_config_set(smcev_config* cfg, const char* key, const char* value) {
  if (!cfg || !key || !value) return invalid("null argument");
  return guarded([&] {
    auto raw = cfg->raw;
    smcev::app::set_value(raw, key, value);
    auto parsed = smcev::app::parse_config(raw, cfg->base_dir);
    cfg->raw = std::move(raw);
    cfg->parsed = std::move(parsed);
  });
}

const char* smcev_config_get(const smcev_config* cfg, const char* key) {
  if (!cfg || !key) return nullptr;
  const auto v = cfg->parsed.resolved.get_optional<std::string>(smcev::app::Tree::path_type(key, '.'));
  if (!v) return nullptr;
  cfg->scratch = *v;
  return cfg->scratch.c_str();
}

int smcev_config_write_resolved(const smcev_config* cfg, const char* path) {
  if (!cfg || !path) return invalid("null argument");
  return guarded([&] { smcev::app::write_resolved(path, cfg->parsed); });
}

void smcev_config_free(smcev_config* cfg) { delete cfg; }

int smcev_run(const smcev_config* cfg, smcev_result** out) {
  if (!cfg || !out) return invalid("null argument");
  *out = nullptr;
  return guarded([&] {
    auto res = std::make_unique<smcev_result>();
    res->run = smcev::app::run_experiment(cfg->parsed);
    *out = res.release();
  });
}

size_t smcev_result_estimate_count(const smcev_result* res) { return res ? res->run.estimates.size() : 0; }

int smcev_result_estimate(const smcev_result* res, size_t i, const char** estimator, const char** model,
                          double* log_evidence) {
  if (!res) return invalid("null result");
  if (i >= res->run.estimates.size()) return invalid("estimate index out of range");
  const auto& e = res->run.estimates[i];
  if (estimator) *estimator = e.estimator.c_str();
  if (model) *model = e.model.c_str();
  if (log_evidence) *log_evidence = e.log_evidence;
  last_error.clear();
  return SMCEV_OK;
}

size_t smcev_result_trace_length(const smcev_result* res) { return res ? res->run.trace.size() : 0; }

int smcev_result_write(const smcev_result* res, const char* dir) {
  if (!res) return invalid("null result");
  return guarded([&] {
    const auto d = prepare_dir(dir);
    smcev::app::write_trace(in_dir(d, "trace.csv"), res->run);
    smcev::app::write_estimates(in_dir(d, "estimates.csv"), res->run);
  });
}

void smcev_result_free(smcev_result* res) { delete res; }

int smcev_replicate(const smcev_config* cfg, size_t replicates, const char* dir) {
  if (!cfg) return invalid("null config");
  return guarded([&] {
    const auto rows = smcev::app::replicate_experiment(cfg->parsed, replicates);
    const auto d = prepare_dir(dir);
    smcev::app::write_summary(in_dir(d, "summary.csv"), rows);
  });
}

int smcev_bias_table(const smcev_config* cfg, const char* dir) {
  if (!cfg) return invalid("null config");
  return guarded([&] {
    const auto rows = smcev::app::bias_table(cfg->parsed);
    const auto d = prepare_dir(dir);
    smcev::app::write_bias_table(in_dir(d, "bias_table.csv"), rows);
  });
}

int smcev_clt_check(const smcev_config* cfg, const char* dir) {
  if (!cfg) return invalid("null config");
  return guarded([&] {
    const auto rows = smcev::app::clt_experiment(cfg->parsed);
    const auto d = prepare_dir(dir);
    smcev::app::write_clt(in_dir(d, "clt_check.csv"), rows);
  });
}

int smcev_gen_data(const char* dir, uint64_t seed) {
  return guarded([&] { smcev::app::generate_all(dir ? dir : ".", seed); });
}

}  // extern "C"
