#include <fmt/format.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "smcev/app.hpp"
#include "smcev/error.hpp"

namespace smcev::app {
namespace {

constexpr std::uint64_t kConjugateStream = 101;
constexpr std::uint64_t kGmmStream = 102;
constexpr std::uint64_t kGoodwinStream = 103;
constexpr std::uint64_t kPetStream = 104;

std::string join(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + format_double(v[i]);
  return s;
}

Dataset conjugate_data(std::uint64_t seed) {
  RngStream rng(seed, derive_stream({kConjugateStream}));
  const double mu = 1.0;
  Dataset d;
  d.columns = {"y"};
  d.values.resize(1);
  for (int i = 0; i < 20; ++i) d.values[0].push_back(mu + rng.normal());
  d.meta = {{"generator", "conjugate"}, {"mu", format_double(mu)}, {"noise_var", "1"}};
  return d;
}

Dataset gmm_data(std::uint64_t seed) {
  RngStream rng(seed, derive_stream({kGmmStream}));
  Dataset d;
  d.columns = {"y"};
  d.values = {gmm_generate_data(rng, 100)};
  d.meta = {{"generator", "gmm"}, {"means", "-3 0 3 6"}, {"precision", "2"}, {"weights", "equal"}};
  return d;
}

Dataset goodwin_data(std::uint64_t seed) {
  RngStream rng(seed, derive_stream({kGoodwinStream}));
  GoodwinSpec spec;
  const std::size_t first = spec.grid - spec.observed;
  // Redraw parameters from the prior until the observed window oscillates
  // clearly and stays bounded.
  std::vector<double> p(spec.m + 2);
  GoodwinTrajectory traj;
  for (int attempt = 0;; ++attempt) {
    require(attempt < 100000, "no oscillating Goodwin trajectory found");
    for (auto& v : p) v = std::max(rng.gamma(spec.prior_shape, spec.prior_scale), 1e-300);
    traj = goodwin_solve(spec, p);
    if (!traj.ok) continue;
    const auto [lo, hi] = std::minmax_element(traj.x1.begin() + static_cast<std::ptrdiff_t>(first), traj.x1.end());
    const double top = std::max(*std::max_element(traj.x1.begin(), traj.x1.end()),
                                *std::max_element(traj.x2.begin(), traj.x2.end()));
    if (*hi - *lo > 0.5 && top < 5.0) break;
  }
  Dataset d;
  d.columns = {"t", "x1", "x2"};
  d.values.resize(3);
  for (std::size_t k = first; k < spec.grid; ++k) {
    d.values[0].push_back(traj.times[k]);
    d.values[1].push_back(traj.x1[k] + spec.sigma * rng.normal());
    d.values[2].push_back(traj.x2[k] + spec.sigma * rng.normal());
  }
  d.meta = {{"generator", "goodwin"}, {"m", std::to_string(spec.m)}, {"params", join(p)},
            {"sigma", format_double(spec.sigma)}};
  return d;
}

Dataset pet_data(std::uint64_t seed) {
  RngStream rng(seed, derive_stream({kPetStream}));
  const auto p = pet_true_params();
  const std::size_t m = (p.size() - 1) / 2;
  const auto cp = InputFunction::synthetic();
  const auto times = pet_default_times();
  const std::span<const double> all(p);
  Dataset d;
  d.columns = {"t", "y"};
  d.values.resize(2);
  for (double t : times) {
    d.values[0].push_back(t);
    d.values[1].push_back(pet_ct(cp, all.subspan(0, m), all.subspan(m, m), t) + std::sqrt(p[2 * m]) * rng.normal());
  }
  d.meta = {{"generator", "pet"}, {"m", std::to_string(m)}, {"params", join(p)}};
  return d;
}

}  // namespace

std::vector<double> pet_true_params() { return {0.05, 0.02, 0.3, 0.01, 1.0}; }

const std::vector<double>& Dataset::column(const std::string& name) const {
  const auto it = std::find(columns.begin(), columns.end(), name);
  if (it == columns.end()) fail(ErrorCode::io, "dataset has no column '" + name + "'");
  return values[static_cast<std::size_t>(it - columns.begin())];
}

Dataset read_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io, "cannot read dataset '" + path + "'");
  Dataset d;
  std::string line;
  if (!std::getline(in, line)) fail(ErrorCode::io, "dataset '" + path + "' is empty");
  {
    std::stringstream ss(line);
    std::string name;
    while (std::getline(ss, name, ',')) d.columns.push_back(name);
  }
  d.values.resize(d.columns.size());
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::size_t c = 0;
    while (std::getline(ss, cell, ',')) {
      if (c >= d.columns.size()) break;
      try {
        std::size_t used = 0;
        d.values[c].push_back(std::stod(cell, &used));
        if (used != cell.size()) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        fail(ErrorCode::io, fmt::format("{}:{}: not a number: '{}'", path, row, cell));
      }
      ++c;
    }
    if (c != d.columns.size()) fail(ErrorCode::io, fmt::format("{}:{}: expected {} fields", path, row, d.columns.size()));
  }
  std::ifstream meta(path + ".meta");
  while (meta && std::getline(meta, line)) {
    const auto eq = line.find('=');
    if (eq != std::string::npos) d.meta[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return d;
}

void write_dataset(const std::string& path, const Dataset& data) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::io, "cannot write dataset '" + path + "'");
  for (std::size_t c = 0; c < data.columns.size(); ++c) out << (c ? "," : "") << data.columns[c];
  out << '\n';
  const std::size_t rows = data.values.empty() ? 0 : data.values.front().size();
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < data.columns.size(); ++c) out << (c ? "," : "") << format_double(data.values[c][r]);
    out << '\n';
  }
  std::ofstream meta(path + ".meta");
  for (const auto& [k, v] : data.meta) meta << k << '=' << v << '\n';
  if (!out || !meta) fail(ErrorCode::io, "failed writing dataset '" + path + "'");
}

Dataset generate_dataset(const std::string& kind, std::uint64_t seed) {
  Dataset d;
  if (kind == "conjugate") {
    d = conjugate_data(seed);
  } else if (kind == "gmm") {
    d = gmm_data(seed);
  } else if (kind == "goodwin") {
    d = goodwin_data(seed);
  } else if (kind == "pet") {
    d = pet_data(seed);
  } else {
    fail(ErrorCode::config, "no generator for model kind '" + kind + "'");
  }
  d.meta["seed"] = std::to_string(seed);
  return d;
}

std::vector<std::string> generate_all(const std::string& dir, std::uint64_t seed) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(ErrorCode::io, "cannot create directory '" + dir + "'");
  std::vector<std::string> written;
  for (const char* kind : {"conjugate", "gmm", "goodwin", "pet"}) {
    const auto path = (std::filesystem::path(dir) / (std::string(kind) + ".csv")).string();
    write_dataset(path, generate_dataset(kind, seed));
    written.push_back(path);
  }
  return written;
}

}  // namespace smcev::app
