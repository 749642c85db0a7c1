#pragma once

#include <boost/property_tree/ptree.hpp>

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "smcev/clt.hpp"
#include "smcev/model.hpp"
#include "smcev/models.hpp"
#include "smcev/samplers.hpp"

namespace smcev::app {

using Tree = boost::property_tree::ptree;

// --- configuration --------------------------------------------------------------

struct ModelConfig {
  std::string kind;             // conjugate | gmm | goodwin | pet
  std::string data;             // dataset path; empty generates from data_seed
  std::uint64_t data_seed = 1;  // seed of the generated dataset
  // conjugate
  double prior_mean = 0.0;
  double prior_var = 1.0;
  double noise_var = 1.0;
  // gmm, goodwin, pet: model orders to compare
  std::vector<int> components;
  GmmMoves moves = GmmMoves::all;
};

struct BiasTableConfig {
  std::size_t replicates = 20;
  std::optional<double> reference;  // defaults to the analytic evidence
  std::vector<RuleKind> rules{RuleKind::trapezoid, RuleKind::simpson, RuleKind::simpson38, RuleKind::boole};
  std::vector<std::size_t> refinements{1, 2, 4, 8};
};

struct FlowConfig {
  std::vector<double> prior{0.2, 0.5, 0.3};
  std::vector<double> loglik{-1.5, 0.4, -0.3};
  std::vector<double> alphas{0.0, 0.2, 0.5, 1.0};
};

struct CltConfig {
  std::vector<std::size_t> particles{512, 1024};
  std::size_t replicates = 2000;
};

struct ExperimentConfig {
  ModelConfig model;
  RunConfig run;
  std::size_t replicates = 10;
  bool fixed_seed = false;
  BiasTableConfig bias;
  FlowConfig flow;
  CltConfig clt;
  std::string output_dir = "out";
  /// Every setting with its effective value, defaults included.
  Tree resolved;
};

/// Reads an INI configuration. Unknown sections or keys and malformed values
/// raise config errors naming the key. Relative data paths resolve against
/// `base_dir`.
ExperimentConfig parse_config(const Tree& tree, const std::string& base_dir = ".");
ExperimentConfig parse_config_text(const std::string& text, const std::string& base_dir = ".");
ExperimentConfig load_config(const std::string& path);
Tree read_ini_text(const std::string& text);
std::string write_ini_text(const Tree& tree);

/// Sets "section.key" to value in the raw tree.
void set_value(Tree& tree, const std::string& dotted_key, const std::string& value);

// --- datasets ---------------------------------------------------------------------

/// Columnar numeric table with a header row and a key=value sidecar.
struct Dataset {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> values;  // one vector per column
  std::map<std::string, std::string> meta;

  const std::vector<double>& column(const std::string& name) const;
};

Dataset read_dataset(const std::string& path);
/// Writes `path` and `path + ".meta"`.
void write_dataset(const std::string& path, const Dataset& data);

Dataset generate_dataset(const std::string& kind, std::uint64_t seed);
/// Writes conjugate.csv, gmm.csv, goodwin.csv and pet.csv into `dir`.
std::vector<std::string> generate_all(const std::string& dir, std::uint64_t seed);

/// True (phi_1..phi_m, theta_1..theta_m, sigma^2) of the simulated PET scan.
/// The Goodwin data use a prior draw, recorded in the sidecar.
std::vector<double> pet_true_params();

// --- experiments ------------------------------------------------------------------

struct Problem {
  ModelSpace space;
  std::optional<double> reference;  // analytic log evidence when known
};

/// Model space for the configured model and algorithm. SMC1 and SMC3 get the
/// ordered mixture with trans-dimensional moves.
Problem build_problem(const ExperimentConfig& cfg);

RunResult run_once(const ExperimentConfig& cfg, const Problem& problem, std::uint64_t replicate);
RunResult run_experiment(const ExperimentConfig& cfg);

std::vector<SummaryRow> replicate_experiment(const ExperimentConfig& cfg, std::size_t R);

struct BiasRow {
  RuleKind rule = RuleKind::trapezoid;
  std::size_t refinement = 1;
  double mean = 0.0;
  double sd = 0.0;
  double bias = 0.0;
  std::size_t replicates = 0;
};

std::vector<BiasRow> bias_table(const ExperimentConfig& cfg);

std::vector<CltCheck> clt_experiment(const ExperimentConfig& cfg);

// --- output -------------------------------------------------------------------------

std::string format_double(double v);

void write_trace(const std::string& path, const RunResult& result);
void write_estimates(const std::string& path, const RunResult& result);
void write_summary(const std::string& path, const std::vector<SummaryRow>& rows);
void write_bias_table(const std::string& path, const std::vector<BiasRow>& rows);
void write_clt(const std::string& path, const std::vector<CltCheck>& rows);
void write_resolved(const std::string& path, const ExperimentConfig& cfg);

}  // namespace smcev::app
