#pragma once

#include <cstdint>
#include <initializer_list>
#include <limits>
#include <random>

namespace smcev {

/// Mixes a sequence of integers into one 64-bit stream identifier.
///
/// Used to derive one stream per (replicate, run, particle slot, purpose) from
/// a single seed so that results do not depend on scheduling or thread count.
std::uint64_t derive_stream(std::initializer_list<std::uint64_t> path);

/// A reproducible random stream identified by (seed, stream_id).
class RngStream {
 public:
  using result_type = std::uint64_t;

  RngStream(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_id() const noexcept { return stream_id_; }

  static constexpr result_type min() { return std::mt19937_64::min(); }
  static constexpr result_type max() { return std::mt19937_64::max(); }
  result_type operator()() { return engine_(); }

  /// Uniform draw on the open interval (0, 1).
  double uniform();
  double normal();
  /// Gamma draw with the given shape and scale.
  double gamma(double shape, double scale);
  double beta(double a, double b);
  std::size_t index(std::size_t n);

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_;
};

}  // namespace smcev
