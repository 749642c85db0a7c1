#include <boost/property_tree/ini_parser.hpp>
#include <fmt/format.h>

#include <charconv>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "smcev/app.hpp"
#include "smcev/error.hpp"

namespace smcev::app {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// Typed access to one INI tree. Every key read is recorded in `resolved`
// together with its effective value; finish() rejects anything not read.
class Reader {
 public:
  explicit Reader(const Tree& in) : in_(in) {}

  bool has_section(const std::string& section) const { return in_.get_child_optional(section).has_value(); }

  std::optional<std::string> raw(const std::string& section, const std::string& key) {
    used_.insert(section + "." + key);
    const auto v = in_.get_optional<std::string>(Tree::path_type(section + "." + key, '.'));
    if (!v) return std::nullopt;
    return trim(*v);
  }

  std::string str(const std::string& section, const std::string& key, const std::string& def) {
    const auto v = raw(section, key);
    const std::string out = v ? *v : def;
    put(section, key, out);
    return out;
  }

  double real(const std::string& section, const std::string& key, double def) {
    const auto v = raw(section, key);
    const double out = v ? to_double(section, key, *v) : def;
    put(section, key, format_double(out));
    return out;
  }

  std::optional<double> optional_real(const std::string& section, const std::string& key) {
    const auto v = raw(section, key);
    if (!v) return std::nullopt;
    const double out = to_double(section, key, *v);
    put(section, key, format_double(out));
    return out;
  }

  std::uint64_t count(const std::string& section, const std::string& key, std::uint64_t def) {
    const auto v = raw(section, key);
    const std::uint64_t out = v ? to_count(section, key, *v) : def;
    put(section, key, std::to_string(out));
    return out;
  }

  bool flag(const std::string& section, const std::string& key, bool def) {
    const auto v = raw(section, key);
    bool out = def;
    if (v) {
      if (*v == "true" || *v == "1" || *v == "yes") {
        out = true;
      } else if (*v == "false" || *v == "0" || *v == "no") {
        out = false;
      } else {
        bad(section, key, *v, "expected true or false");
      }
    }
    put(section, key, out ? "true" : "false");
    return out;
  }

  std::vector<double> reals(const std::string& section, const std::string& key, const std::vector<double>& def) {
    const auto v = raw(section, key);
    std::vector<double> out = def;
    if (v) {
      out.clear();
      for (const auto& item : split_list(*v)) out.push_back(to_double(section, key, item));
    }
    std::string text;
    for (std::size_t i = 0; i < out.size(); ++i) text += (i ? ", " : "") + format_double(out[i]);
    put(section, key, text);
    return out;
  }

  std::vector<std::uint64_t> counts(const std::string& section, const std::string& key,
                                    const std::vector<std::uint64_t>& def) {
    const auto v = raw(section, key);
    std::vector<std::uint64_t> out = def;
    if (v) {
      out.clear();
      for (const auto& item : split_list(*v)) out.push_back(to_count(section, key, item));
    }
    std::string text;
    for (std::size_t i = 0; i < out.size(); ++i) text += (i ? ", " : "") + std::to_string(out[i]);
    put(section, key, text);
    return out;
  }

  /// Keys of `section` starting with `prefix`, with the prefix removed.
  std::map<std::string, double> prefixed(const std::string& section, const std::string& prefix,
                                         const std::set<std::string>& skip) {
    std::map<std::string, double> out;
    const auto child = in_.get_child_optional(section);
    if (!child) return out;
    for (const auto& [key, node] : *child) {
      if (key.rfind(prefix, 0) != 0 || key.size() == prefix.size() || skip.contains(key)) continue;
      out[key.substr(prefix.size())] = real(section, key, 0.0);
    }
    return out;
  }

  [[noreturn]] void bad(const std::string& section, const std::string& key, const std::string& value,
                        const std::string& why) const {
    fail(ErrorCode::config, fmt::format("invalid value '{}' for {}.{}: {}", value, section, key, why));
  }

  void finish() const {
    for (const auto& [section, node] : in_) {
      if (node.empty()) fail(ErrorCode::config, fmt::format("unknown key '{}' outside any section", section));
      for (const auto& [key, leaf] : node) {
        if (!used_.contains(section + "." + key)) {
          fail(ErrorCode::config, fmt::format("unknown key '{}.{}'", section, key));
        }
      }
    }
  }

  const Tree& resolved() const { return out_; }

  /// Overrides the recorded effective value of a key.
  void record(const std::string& section, const std::string& key, const std::string& value) {
    put(section, key, value);
  }

 private:
  void put(const std::string& section, const std::string& key, const std::string& value) {
    out_.put(Tree::path_type(section + "." + key, '.'), value);
  }

  double to_double(const std::string& section, const std::string& key, const std::string& s) const {
    double v = 0.0;
    const auto* end = s.data() + s.size();
    const auto r = std::from_chars(s.data(), end, v);
    if (r.ec != std::errc() || r.ptr != end) bad(section, key, s, "expected a number");
    return v;
  }

  std::uint64_t to_count(const std::string& section, const std::string& key, const std::string& s) const {
    std::uint64_t v = 0;
    const auto* end = s.data() + s.size();
    const auto r = std::from_chars(s.data(), end, v);
    if (r.ec != std::errc() || r.ptr != end) bad(section, key, s, "expected a non-negative integer");
    return v;
  }

  const Tree& in_;
  std::set<std::string> used_;
  Tree out_;
};

const char* schedule_kind_name(ScheduleKind k) {
  switch (k) {
    case ScheduleKind::linear: return "linear";
    case ScheduleKind::power: return "power";
    case ScheduleKind::posterior: return "posterior";
    case ScheduleKind::adaptive: return "adaptive";
    case ScheduleKind::adaptive_ess: return "adaptive_ess";
  }
  return "adaptive";
}

Algorithm parse_algorithm(Reader& r, const std::string& s) {
  if (s == "smc1") return Algorithm::smc1;
  if (s == "smc2") return Algorithm::smc2;
  if (s == "smc3") return Algorithm::smc3;
  if (s == "ais") return Algorithm::ais;
  r.bad("sampler", "algorithm", s, "expected smc1, smc2, smc3 or ais");
}

ScheduleKind parse_schedule(Reader& r, const std::string& section, const std::string& s) {
  if (s == "linear") return ScheduleKind::linear;
  if (s == "power") return ScheduleKind::power;
  if (s == "posterior") return ScheduleKind::posterior;
  if (s == "adaptive") return ScheduleKind::adaptive;
  if (s == "adaptive_ess") return ScheduleKind::adaptive_ess;
  r.bad(section, "kind", s, "expected linear, power, posterior, adaptive or adaptive_ess");
}

RuleKind rule_of(Reader& r, const std::string& section, const std::string& key, const std::string& s) {
  try {
    return parse_rule(s);
  } catch (const Error&) {
    r.bad(section, key, s, "expected trapezoid, simpson, simpson38 or boole");
  }
}

void read_schedule(Reader& r, const std::string& section, Schedule& s, const Schedule& def) {
  s.kind = parse_schedule(r, section, r.str(section, "kind", schedule_kind_name(def.kind)));
  s.power = r.real(section, "power", def.power);
  s.steps = r.count(section, "steps", def.steps);
  s.bisection.target = r.real(section, "target", def.bisection.target);
  s.bisection.tolerance = r.real(section, "tolerance", def.bisection.tolerance);
  s.bisection.max_iters = static_cast<int>(r.count(section, "max_bisection", def.bisection.max_iters));
}

ModelConfig read_model(Reader& r, const std::string& base_dir) {
  if (!r.has_section("model")) fail(ErrorCode::config, "missing [model] section");
  ModelConfig m;
  m.kind = r.str("model", "kind", "");
  if (m.kind.empty()) fail(ErrorCode::config, "missing key 'model.kind'");
  if (m.kind != "conjugate" && m.kind != "gmm" && m.kind != "goodwin" && m.kind != "pet" && m.kind != "flow") {
    r.bad("model", "kind", m.kind, "expected conjugate, gmm, goodwin, pet or flow");
  }
  const std::string data = r.str("model", "data", "");
  if (!data.empty()) {
    const std::filesystem::path p(data);
    m.data = p.is_absolute() ? data : std::filesystem::absolute(std::filesystem::path(base_dir) / p).lexically_normal().string();
    r.record("model", "data", m.data);
  }
  m.data_seed = r.count("model", "data_seed", 1);
  if (m.kind == "conjugate") {
    m.prior_mean = r.real("model", "prior_mean", m.prior_mean);
    m.prior_var = r.real("model", "prior_var", m.prior_var);
    m.noise_var = r.real("model", "noise_var", m.noise_var);
    if (!(m.prior_var > 0.0)) r.bad("model", "prior_var", format_double(m.prior_var), "must be positive");
    if (!(m.noise_var > 0.0)) r.bad("model", "noise_var", format_double(m.noise_var), "must be positive");
  } else if (m.kind != "flow") {
    std::vector<std::uint64_t> def;
    if (m.kind == "gmm") def = {4, 5};
    if (m.kind == "goodwin") def = {3, 5};
    if (m.kind == "pet") def = {1, 2};
    const auto comps = r.counts("model", "components", def);
    if (comps.empty()) r.bad("model", "components", "", "needs at least one model order");
    for (auto c : comps) {
      if (c < 1 || c > 64) r.bad("model", "components", std::to_string(c), "model orders must be in 1..64");
      m.components.push_back(static_cast<int>(c));
    }
    if (m.kind == "gmm") {
      const std::string moves = r.str("model", "moves", "all");
      if (moves == "all") {
        m.moves = GmmMoves::all;
      } else if (moves == "split_combine") {
        m.moves = GmmMoves::split_combine;
      } else if (moves == "birth_death") {
        m.moves = GmmMoves::birth_death;
      } else {
        r.bad("model", "moves", moves, "expected all, split_combine or birth_death");
      }
    }
  }
  return m;
}

}  // namespace

Tree read_ini_text(const std::string& text) {
  Tree t;
  std::istringstream in(text);
  try {
    boost::property_tree::ini_parser::read_ini(in, t);
  } catch (const boost::property_tree::ini_parser_error& e) {
    fail(ErrorCode::config, std::string("malformed configuration: ") + e.message() + " at line " +
                                std::to_string(e.line()));
  }
  return t;
}

std::string write_ini_text(const Tree& tree) {
  std::ostringstream out;
  boost::property_tree::ini_parser::write_ini(out, tree);
  return out.str();
}

void set_value(Tree& tree, const std::string& dotted_key, const std::string& value) {
  const auto dot = dotted_key.find('.');
  if (dot == std::string::npos || dot == 0 || dot + 1 == dotted_key.size() ||
      dotted_key.find('.', dot + 1) != std::string::npos) {
    fail(ErrorCode::config, "expected a key of the form section.key, got '" + dotted_key + "'");
  }
  tree.put(Tree::path_type(dotted_key, '.'), value);
}

ExperimentConfig parse_config(const Tree& tree, const std::string& base_dir) {
  Reader r(tree);
  ExperimentConfig cfg;
  cfg.model = read_model(r, base_dir);
  RunConfig& run = cfg.run;

  run.algorithm = parse_algorithm(r, r.str("sampler", "algorithm", "smc2"));
  const bool ais = run.algorithm == Algorithm::ais;
  run.particles = r.count("sampler", "particles", run.particles);
  run.seed = r.count("sampler", "seed", run.seed);
  run.resample_threshold = r.real("sampler", "resample_threshold", ais ? 0.0 : run.resample_threshold);
  const std::string scheme = r.str("sampler", "resampling", "multinomial");
  if (scheme == "multinomial") {
    run.resampling = ResampleScheme::multinomial;
  } else if (scheme == "systematic") {
    run.resampling = ResampleScheme::systematic;
  } else {
    r.bad("sampler", "resampling", scheme, "expected multinomial or systematic");
  }
  run.max_micro_steps = r.count("sampler", "max_micro_steps", run.max_micro_steps);
  if (run.particles < 2) r.bad("sampler", "particles", std::to_string(run.particles), "need at least two");

  read_schedule(r, "schedule", run.schedule, Schedule{});

  const std::string mode = r.str("kernel", "scale_mode", "adaptive");
  if (mode == "adaptive") {
    run.kernel.mode = ScaleMode::adaptive;
  } else if (mode == "manual") {
    run.kernel.mode = ScaleMode::manual;
  } else {
    r.bad("kernel", "scale_mode", mode, "expected adaptive or manual");
  }
  run.kernel.manual_scale = r.real("kernel", "scale", run.kernel.manual_scale);
  run.kernel.block_scale = r.prefixed("kernel", "scale_", {"scale_mode"});
  run.kernel.multiplier = r.optional_real("kernel", "multiplier");
  run.kernel.sweeps = static_cast<int>(r.count("kernel", "sweeps", 1));
  run.kernel.acceptance_clamp = r.flag("kernel", "acceptance_clamp", false);
  run.kernel.variance_floor = r.real("kernel", "variance_floor", run.kernel.variance_floor);

  run.direct = r.flag("estimators", "direct", true);
  {
    const std::string path = r.str("estimators", "path", "trapezoid:1");
    run.path_rules.clear();
    if (path != "none") {
      for (const auto& item : split_list(path)) {
        const auto colon = item.find(':');
        QuadratureRule rule;
        rule.kind = rule_of(r, "estimators", "path", trim(item.substr(0, colon)));
        if (colon != std::string::npos) {
          const std::string ref = trim(item.substr(colon + 1));
          std::uint64_t v = 0;
          const auto res = std::from_chars(ref.data(), ref.data() + ref.size(), v);
          if (res.ec != std::errc() || res.ptr != ref.data() + ref.size() || v < 1) {
            r.bad("estimators", "path", item, "refinement must be a positive integer");
          }
          rule.refinement = v;
        }
        run.path_rules.push_back(rule);
      }
    }
  }

  read_schedule(r, "smc3", run.smc3_schedule, RunConfig{}.smc3_schedule);
  run.smc3_fresh = r.flag("smc3", "fresh", false);

  cfg.replicates = r.count("replicate", "count", cfg.replicates);
  cfg.fixed_seed = r.flag("replicate", "fixed_seed", false);

  cfg.bias.replicates = r.count("bias_table", "replicates", cfg.bias.replicates);
  cfg.bias.reference = r.optional_real("bias_table", "reference");
  {
    const auto names = r.str("bias_table", "rules", "trapezoid, simpson, simpson38, boole");
    cfg.bias.rules.clear();
    for (const auto& n : split_list(names)) cfg.bias.rules.push_back(rule_of(r, "bias_table", "rules", n));
    const auto refs = r.counts("bias_table", "refinements", {1, 2, 4, 8});
    cfg.bias.refinements.assign(refs.begin(), refs.end());
    for (auto v : refs) {
      if (v < 1) r.bad("bias_table", "refinements", "0", "refinements must be positive");
    }
  }

  cfg.flow.prior = r.reals("flow", "prior", cfg.flow.prior);
  cfg.flow.loglik = r.reals("flow", "loglik", cfg.flow.loglik);
  cfg.flow.alphas = r.reals("flow", "alphas", cfg.flow.alphas);
  {
    const auto ns = r.counts("clt", "particles", {512, 1024});
    cfg.clt.particles.assign(ns.begin(), ns.end());
    cfg.clt.replicates = r.count("clt", "replicates", cfg.clt.replicates);
  }

  cfg.output_dir = r.str("output", "dir", cfg.output_dir);

  r.finish();
  try {
    validate(run);
  } catch (const Error& e) {
    fail(ErrorCode::config, e.what());
  }
  cfg.resolved = r.resolved();
  return cfg;
}

ExperimentConfig parse_config_text(const std::string& text, const std::string& base_dir) {
  return parse_config(read_ini_text(text), base_dir);
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io, "cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  const auto dir = std::filesystem::path(path).parent_path();
  return parse_config_text(ss.str(), dir.empty() ? "." : dir.string());
}

}  // namespace smcev::app
