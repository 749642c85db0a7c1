#pragma once

// Reference computations written independently of the library, used as test
// oracles.

#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <vector>

namespace oracle {

inline constexpr double kPi = 3.14159265358979323846;

/// log N(y; m0 1, sigma2 I + s02 1 1^T) through the matrix determinant lemma
/// and Sherman-Morrison, without sufficient statistics.
inline double conjugate_log_evidence(const std::vector<double>& y, double m0, double s02, double sigma2) {
  const double n = static_cast<double>(y.size());
  if (y.empty()) return 0.0;
  const double logdet = (n - 1.0) * std::log(sigma2) + std::log(sigma2 + n * s02);
  double quad = 0.0, sum = 0.0;
  for (double v : y) {
    quad += (v - m0) * (v - m0);
    sum += v - m0;
  }
  // (sigma2 I + s02 11')^{-1} = I / sigma2 - s02 11' / (sigma2 (sigma2 + n s02))
  const double q = quad / sigma2 - s02 * sum * sum / (sigma2 * (sigma2 + n * s02));
  return -0.5 * n * std::log(2.0 * kPi) - 0.5 * logdet - 0.5 * q;
}

inline double normal_log_pdf(double y, double mu, double var) {
  return -0.5 * std::log(2.0 * kPi * var) - 0.5 * (y - mu) * (y - mu) / var;
}

/// Composite Simpson on a fine grid.
inline double simpson(const std::function<double(double)>& f, double a, double b, std::size_t panels = 20000) {
  if (panels % 2) ++panels;
  const double h = (b - a) / static_cast<double>(panels);
  double s = f(a) + f(b);
  for (std::size_t i = 1; i < panels; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + h * static_cast<double>(i));
  return s * h / 3.0;
}

/// Plain 1 / sum W_i^2 after reweighting.
inline double naive_ess(const std::vector<double>& W, const std::vector<double>& w) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < W.size(); ++i) {
    num += W[i] * w[i];
    den += W[i] * W[i] * w[i] * w[i];
  }
  return num * num / den;
}

/// Finite-state flow marginals by summing over every path x_0..x_T.
struct PathSums {
  std::vector<std::vector<double>> eta_hat;  // normalized, t = 0..T
};

inline PathSums enumerate_paths(const std::vector<double>& eta0,
                                const std::vector<std::vector<std::vector<double>>>& M,
                                const std::vector<std::vector<double>>& G) {
  const std::size_t S = eta0.size();
  const std::size_t T = M.size();
  PathSums out;
  out.eta_hat.assign(T + 1, std::vector<double>(S, 0.0));
  std::vector<std::size_t> x(T + 1, 0);
  std::size_t total = 1;
  for (std::size_t t = 0; t <= T; ++t) total *= S;
  for (std::size_t code = 0; code < total; ++code) {
    std::size_t c = code;
    for (std::size_t t = 0; t <= T; ++t) {
      x[t] = c % S;
      c /= S;
    }
    // Weight of the path prefix up to t includes the potentials G_1..G_t.
    double w = eta0[x[0]];
    out.eta_hat[0][x[0]] += w / static_cast<double>(total / S);
    for (std::size_t t = 1; t <= T; ++t) {
      w *= M[t - 1][x[t - 1]][x[t]] * G[t - 1][x[t]];
      // Each prefix (x_0..x_t) is visited S^(T-t) times.
      std::size_t repeats = 1;
      for (std::size_t k = t; k < T; ++k) repeats *= S;
      out.eta_hat[t][x[t]] += w / static_cast<double>(repeats);
    }
  }
  for (auto& v : out.eta_hat) {
    const double z = std::accumulate(v.begin(), v.end(), 0.0);
    for (auto& e : v) e /= z;
  }
  return out;
}

/// Trapezoid on given nodes.
inline double trapezoid(const std::vector<double>& x, const std::vector<double>& y) {
  double s = 0.0;
  for (std::size_t i = 1; i < x.size(); ++i) s += 0.5 * (x[i] - x[i - 1]) * (y[i] + y[i - 1]);
  return s;
}

}  // namespace oracle
