#include <fmt/format.h>

#include <fstream>

#include "smcev/app.hpp"
#include "smcev/error.hpp"

namespace smcev::app {
namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::io, "cannot write '" + path + "'");
  return out;
}

void close_out(std::ofstream& out, const std::string& path) {
  out.close();
  if (!out) fail(ErrorCode::io, "failed writing '" + path + "'");
}

}  // namespace

// 17 significant digits round-trip every double.
std::string format_double(double v) { return fmt::format("{:.17g}", v); }

void write_trace(const std::string& path, const RunResult& result) {
  auto out = open_out(path);
  out << "model,iteration,alpha,ess,cess,resampled";
  for (const auto& c : result.acceptance_columns) out << ",acc_" << c;
  out << ",log_increment,U\n";
  for (const auto& r : result.trace) {
    out << r.model << ',' << r.iteration << ',' << format_double(r.alpha) << ',' << format_double(r.ess) << ','
        << format_double(r.cess) << ',' << (r.resampled ? 1 : 0);
    for (const auto& c : result.acceptance_columns) {
      out << ',';
      const auto it = r.acceptance.find(c);
      if (it != r.acceptance.end()) out << format_double(it->second);
    }
    out << ',' << format_double(r.log_increment) << ',' << format_double(r.U) << '\n';
  }
  close_out(out, path);
}

void write_estimates(const std::string& path, const RunResult& result) {
  auto out = open_out(path);
  out << "estimator,model,log_evidence,realized_T,min_ess,resample_count,forced_micro_steps\n";
  for (const auto& e : result.estimates) {
    out << e.estimator << ',' << e.model << ',' << format_double(e.log_evidence) << ',' << e.realized_T << ','
        << format_double(e.min_ess) << ',' << e.resample_count << ',' << e.forced_micro_steps << '\n';
  }
  close_out(out, path);
}

void write_summary(const std::string& path, const std::vector<SummaryRow>& rows) {
  auto out = open_out(path);
  out << "estimator,model,mean,sd,R\n";
  for (const auto& r : rows) {
    out << r.estimator << ',' << r.model << ',' << format_double(r.mean) << ',' << format_double(r.sd) << ','
        << r.replicates << '\n';
  }
  close_out(out, path);
}

void write_bias_table(const std::string& path, const std::vector<BiasRow>& rows) {
  auto out = open_out(path);
  out << "rule,refinement,mean,sd,bias,R\n";
  for (const auto& r : rows) {
    out << rule_name(r.rule) << ',' << r.refinement << ',' << format_double(r.mean) << ',' << format_double(r.sd)
        << ',' << format_double(r.bias) << ',' << r.replicates << '\n';
  }
  close_out(out, path);
}

void write_clt(const std::string& path, const std::vector<CltCheck>& rows) {
  auto out = open_out(path);
  out << "N,empirical_variance,predicted_variance,ratio\n";
  for (const auto& r : rows) {
    out << r.N << ',' << format_double(r.empirical_variance) << ',' << format_double(r.predicted_variance) << ','
        << format_double(r.ratio) << '\n';
  }
  close_out(out, path);
}

void write_resolved(const std::string& path, const ExperimentConfig& cfg) {
  auto out = open_out(path);
  out << write_ini_text(cfg.resolved);
  close_out(out, path);
}

}  // namespace smcev::app
