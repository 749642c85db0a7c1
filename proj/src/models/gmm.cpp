#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "smcev/error.hpp"
#include "smcev/models.hpp"

namespace smcev {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kLog2Pi = 1.8378770664093454835606594728112;

double log_beta_pdf(double x, double a, double b) {
  if (!(x > 0.0 && x < 1.0)) return kNegInf;
  return std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + (a - 1.0) * std::log(x) + (b - 1.0) * std::log1p(-x);
}

double log_normal_prec(double x, double mean, double prec) {
  const double d = x - mean;
  return 0.5 * (std::log(prec) - kLog2Pi) - 0.5 * prec * d * d;
}

double log_gamma_pdf(double x, double shape, double scale) {
  if (!(x > 0.0)) return kNegInf;
  return (shape - 1.0) * std::log(x) - x / scale - std::lgamma(shape) - shape * std::log(scale);
}

std::vector<MixtureComponent> unpack(std::span<const double> s) {
  const std::size_t r = s.size() / 3;
  std::vector<MixtureComponent> c(r);
  for (std::size_t j = 0; j < r; ++j) c[j] = {s[j], s[r + j], s[2 * r + j]};
  return c;
}

std::vector<double> pack(const std::vector<MixtureComponent>& c) {
  const std::size_t r = c.size();
  std::vector<double> s(3 * r);
  for (std::size_t j = 0; j < r; ++j) {
    s[j] = c[j].w;
    s[r + j] = c[j].mu;
    s[2 * r + j] = c[j].lambda;
  }
  return s;
}

}  // namespace

GmmPrior GmmPrior::from_data(std::span<const double> y) {
  require(y.size() >= 2, "mixture prior needs at least two observations");
  const auto [lo, hi] = std::minmax_element(y.begin(), y.end());
  require(*hi > *lo, "mixture prior needs a positive data range");
  GmmPrior p;
  p.xi = 0.5 * (*hi + *lo);
  p.kappa = 1.0 / ((*hi - *lo) * (*hi - *lo));
  p.nu = 2.0;
  p.chi = 50.0 * p.kappa;
  p.rho = 1.0;
  return p;
}

Gmm::Gmm(std::vector<double> y, std::size_t components, GmmPrior prior, bool ordered)
    : y_(std::move(y)), r_(components), prior_(prior), ordered_(ordered) {
  require(r_ >= 1, "mixture needs at least one component");
}

std::vector<BlockSpec> Gmm::blocks() const {
  std::vector<BlockSpec> b;
  auto range = [](std::size_t from, std::size_t n) {
    std::vector<std::size_t> v(n);
    std::iota(v.begin(), v.end(), from);
    return v;
  };
  b.push_back({"mu", range(r_, r_), Transform::identity});
  b.push_back({"lambda", range(2 * r_, r_), Transform::log});
  if (r_ >= 2) b.push_back({"omega", range(0, r_), Transform::logit_last});
  return b;
}

double Gmm::log_prior(std::span<const double> s) const {
  if (s.size() != 3 * r_) return kNegInf;
  double lp = 0.0;
  double wsum = 0.0;
  for (std::size_t j = 0; j < r_; ++j) {
    const double w = s[j];
    if (!(w > 0.0) || !std::isfinite(w)) return kNegInf;
    wsum += w;
    lp += (prior_.rho - 1.0) * std::log(w);
  }
  if (std::abs(wsum - 1.0) > 1e-9) return kNegInf;
  lp += std::lgamma(prior_.rho * static_cast<double>(r_)) - static_cast<double>(r_) * std::lgamma(prior_.rho);
  for (std::size_t j = 0; j < r_; ++j) {
    const double mu = s[r_ + j];
    if (!std::isfinite(mu)) return kNegInf;
    if (ordered_ && j > 0 && !(s[r_ + j - 1] < mu)) return kNegInf;
    lp += log_normal_prec(mu, prior_.xi, prior_.kappa);
    lp += log_gamma_pdf(s[2 * r_ + j], prior_.nu, prior_.chi);
  }
  if (ordered_) lp += std::lgamma(static_cast<double>(r_) + 1.0);
  return lp;
}

double gmm_log_likelihood(std::span<const double> y, std::span<const double> s, std::size_t r) {
  std::vector<double> a(r), b(r);
  for (std::size_t j = 0; j < r; ++j) {
    const double w = s[j];
    const double lam = s[2 * r + j];
    if (w < 0.0 || !(lam > 0.0)) return kNegInf;
    a[j] = (w > 0.0 ? std::log(w) : kNegInf) + 0.5 * (std::log(lam) - kLog2Pi);
    b[j] = 0.5 * lam;
  }
  double ll = 0.0;
  for (double yi : y) {
    double m = kNegInf;
    double terms[64];
    std::vector<double> big;
    double* t = terms;
    if (r > 64) {
      big.resize(r);
      t = big.data();
    }
    for (std::size_t j = 0; j < r; ++j) {
      const double d = yi - s[r + j];
      t[j] = a[j] - b[j] * d * d;
      m = std::max(m, t[j]);
    }
    if (m == kNegInf) return kNegInf;
    double acc = 0.0;
    for (std::size_t j = 0; j < r; ++j) acc += std::exp(t[j] - m);
    ll += m + std::log(acc);
  }
  return ll;
}

double Gmm::log_likelihood(std::span<const double> s) const { return gmm_log_likelihood(y_, s, r_); }

std::vector<double> Gmm::sample_prior(RngStream& rng) const {
  std::vector<MixtureComponent> c(r_);
  double g = 0.0;
  for (auto& x : c) {
    x.w = rng.gamma(prior_.rho, 1.0);
    g += x.w;
  }
  for (auto& x : c) {
    x.w /= g;
    x.mu = prior_.xi + rng.normal() / std::sqrt(prior_.kappa);
    x.lambda = rng.gamma(prior_.nu, prior_.chi);
  }
  if (ordered_) std::sort(c.begin(), c.end(), [](const auto& a, const auto& b) { return a.mu < b.mu; });
  return pack(c);
}

std::vector<double> gmm_generate_data(RngStream& rng, std::size_t n) {
  static constexpr double means[4] = {-3.0, 0.0, 3.0, 6.0};
  const double sd = 1.0 / std::sqrt(2.0);
  std::vector<double> y(n);
  for (auto& v : y) v = means[rng.index(4)] + sd * rng.normal();
  return y;
}

std::pair<MixtureComponent, MixtureComponent> gmm_split(const MixtureComponent& c, const SplitDraw& u) {
  const double s = 1.0 / c.lambda;
  const double sd = std::sqrt(s);
  MixtureComponent a, b;
  a.w = c.w * u.u1;
  b.w = c.w * (1.0 - u.u1);
  a.mu = c.mu - u.u2 * sd * std::sqrt(b.w / a.w);
  b.mu = c.mu + u.u2 * sd * std::sqrt(a.w / b.w);
  const double k = (1.0 - u.u2 * u.u2) * s * c.w;
  a.lambda = a.w / (u.u3 * k);
  b.lambda = b.w / ((1.0 - u.u3) * k);
  return {a, b};
}

std::pair<MixtureComponent, SplitDraw> gmm_combine(const MixtureComponent& a, const MixtureComponent& b) {
  MixtureComponent c;
  c.w = a.w + b.w;
  c.mu = (a.w * a.mu + b.w * b.mu) / c.w;
  const double sa = 1.0 / a.lambda;
  const double sb = 1.0 / b.lambda;
  const double s = (a.w * (a.mu * a.mu + sa) + b.w * (b.mu * b.mu + sb)) / c.w - c.mu * c.mu;
  c.lambda = 1.0 / s;
  SplitDraw u;
  u.u1 = a.w / c.w;
  u.u2 = (b.mu - a.mu) * std::sqrt(a.w * b.w) / (c.w * std::sqrt(s));
  u.u3 = sa * a.w / (s * c.w * (1.0 - u.u2 * u.u2));
  return {c, u};
}

double gmm_split_log_jacobian(const MixtureComponent& c, const MixtureComponent& a, const MixtureComponent& b,
                              const SplitDraw& u) {
  const double s = 1.0 / c.lambda;
  const double sa = 1.0 / a.lambda;
  const double sb = 1.0 / b.lambda;
  return std::log(c.w) + std::log(std::abs(a.mu - b.mu)) + std::log(sa) + std::log(sb) - std::log(u.u2) -
         std::log1p(-u.u2 * u.u2) - std::log(u.u3) - std::log1p(-u.u3) - std::log(s);
}

double GmmJump::log_birth_density(std::size_t r, const MixtureComponent& born) const {
  return log_beta_pdf(born.w, 1.0, static_cast<double>(r)) + log_normal_prec(born.mu, prior_.xi, prior_.kappa) +
         log_gamma_pdf(born.lambda, prior_.nu, prior_.chi);
}

// Split from r to r + 1 components. The pair choice of the reverse combine
// (one of r adjacent pairs) cancels the component choice here (one of r).
std::optional<JumpProposal> GmmJump::split(const Particle& current, std::size_t j, const SplitDraw& u) const {
  auto c = unpack(current.state);
  const std::size_t r = c.size();
  if (j >= r) return std::nullopt;
  const auto [a, b] = gmm_split(c[j], u);
  if (!(a.lambda > 0.0) || !(b.lambda > 0.0) || !std::isfinite(a.mu) || !std::isfinite(b.mu)) return std::nullopt;
  if (j > 0 && !(c[j - 1].mu < a.mu)) return std::nullopt;
  if (j + 1 < r && !(b.mu < c[j + 1].mu)) return std::nullopt;
  if (!(a.w > 0.0) || !(b.w > 0.0)) return std::nullopt;

  double lr = gmm_split_log_jacobian(c[j], a, b, u);
  lr -= log_beta_pdf(u.u1, 2.0, 2.0) + log_beta_pdf(u.u2, 2.0, 2.0) + log_beta_pdf(u.u3, 1.0, 1.0);
  // Targets are densities in lambda; the Jacobian is in variances.
  lr += 2.0 * (std::log(a.lambda) + std::log(b.lambda) - std::log(c[j].lambda));

  std::vector<MixtureComponent> next;
  next.reserve(r + 1);
  for (std::size_t k = 0; k < r; ++k) {
    if (k == j) {
      next.push_back(a);
      next.push_back(b);
    } else {
      next.push_back(c[k]);
    }
  }
  return JumpProposal{Particle{pack(next), current.model_id + 1}, lr};
}

std::optional<JumpProposal> GmmJump::combine(const Particle& current, std::size_t j) const {
  auto c = unpack(current.state);
  const std::size_t r1 = c.size();
  if (r1 < 2 || j + 1 >= r1) return std::nullopt;
  const auto& a = c[j];
  const auto& b = c[j + 1];
  if (!(a.mu < b.mu)) return std::nullopt;
  const auto [m, u] = gmm_combine(a, b);
  if (!(m.lambda > 0.0) || !(u.u2 > 0.0 && u.u2 < 1.0) || !(u.u3 > 0.0 && u.u3 < 1.0)) return std::nullopt;

  double lr = gmm_split_log_jacobian(m, a, b, u);
  lr -= log_beta_pdf(u.u1, 2.0, 2.0) + log_beta_pdf(u.u2, 2.0, 2.0) + log_beta_pdf(u.u3, 1.0, 1.0);
  lr += 2.0 * (std::log(a.lambda) + std::log(b.lambda) - std::log(m.lambda));

  std::vector<MixtureComponent> next;
  next.reserve(r1 - 1);
  for (std::size_t k = 0; k < r1; ++k) {
    if (k == j) {
      next.push_back(m);
      ++k;
    } else {
      next.push_back(c[k]);
    }
  }
  return JumpProposal{Particle{pack(next), current.model_id - 1}, -lr};
}

// Birth from r to r + 1; the reverse death picks one of r + 1 components.
std::optional<JumpProposal> GmmJump::birth(const Particle& current, const MixtureComponent& born) const {
  auto c = unpack(current.state);
  const std::size_t r = c.size();
  if (!(born.w > 0.0 && born.w < 1.0) || !(born.lambda > 0.0)) return std::nullopt;
  for (auto& x : c) x.w *= 1.0 - born.w;
  auto pos = std::find_if(c.begin(), c.end(), [&](const auto& x) { return born.mu < x.mu; });
  c.insert(pos, born);
  const double lr = -std::log(static_cast<double>(r + 1)) - log_birth_density(r, born) +
                    static_cast<double>(r - 1) * std::log1p(-born.w);
  return JumpProposal{Particle{pack(c), current.model_id + 1}, lr};
}

std::optional<JumpProposal> GmmJump::death(const Particle& current, std::size_t j) const {
  auto c = unpack(current.state);
  const std::size_t r1 = c.size();
  if (r1 < 2 || j >= r1) return std::nullopt;
  const MixtureComponent gone = c[j];
  c.erase(c.begin() + static_cast<std::ptrdiff_t>(j));
  for (auto& x : c) x.w /= 1.0 - gone.w;
  const std::size_t r = r1 - 1;
  const double lr = -std::log(static_cast<double>(r + 1)) - log_birth_density(r, gone) +
                    static_cast<double>(r - 1) * std::log1p(-gone.w);
  return JumpProposal{Particle{pack(c), current.model_id - 1}, -lr};
}

std::optional<JumpProposal> GmmJump::propose(const Particle& current, int min_id, int max_id, RngStream& rng) const {
  const std::size_t r = current.state.size() / 3;
  bool split_type = rng.uniform() < 0.5;
  if (moves_ == GmmMoves::split_combine) split_type = true;
  if (moves_ == GmmMoves::birth_death) split_type = false;
  const bool up = rng.uniform() < 0.5;
  const int target = current.model_id + (up ? 1 : -1);
  if (target < min_id || target > max_id) return std::nullopt;

  if (split_type) {
    if (up) {
      const std::size_t j = rng.index(r);
      SplitDraw u{rng.beta(2.0, 2.0), rng.beta(2.0, 2.0), rng.uniform()};
      return split(current, j, u);
    }
    if (r < 2) return std::nullopt;
    return combine(current, rng.index(r - 1));
  }
  if (up) {
    MixtureComponent born;
    born.w = rng.beta(1.0, static_cast<double>(r));
    born.mu = prior_.xi + rng.normal() / std::sqrt(prior_.kappa);
    born.lambda = rng.gamma(prior_.nu, prior_.chi);
    return birth(current, born);
  }
  if (r < 2) return std::nullopt;
  return death(current, rng.index(r));
}

ModelSpace gmm_model_space(const std::vector<double>& y, int lo, int hi, bool ordered, GmmMoves moves) {
  require(lo >= 1 && hi >= lo, "invalid component range");
  const GmmPrior prior = GmmPrior::from_data(y);
  ModelSpace space;
  const double lp = -std::log(static_cast<double>(hi - lo + 1));
  for (int r = lo; r <= hi; ++r) {
    space.add(r, std::make_shared<Gmm>(y, static_cast<std::size_t>(r), prior, ordered), lp);
  }
  if (ordered) space.set_jump(std::make_shared<GmmJump>(prior, moves));
  return space;
}

}  // namespace smcev
