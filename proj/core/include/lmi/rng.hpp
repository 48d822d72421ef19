#pragma once

#include <cstdint>
#include <vector>

namespace lmi {

/// Deterministic random source. All samplers are implemented on top of the
/// raw 64-bit stream so that a given seed produces the same draws on every
/// platform and standard library; std::*_distribution is never used.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed ? seed : 0x9e3779b97f4a7c15ULL) {}

  /// Raw 64-bit output (splitmix64).
  std::uint64_t next_u64();

  /// Uniform double in [0, 1).
  double uniform01();

  /// Uniform integer in [0, n).
  std::uint64_t uniform_below(std::uint64_t n);

  /// Standard normal via Box-Muller (one value per call, no caching).
  double normal();

  /// Gamma(shape, 1) via Marsaglia-Tsang, with the shape<1 boost.
  double gamma(double shape);

  /// Poisson(mean); exact for any mean (halving recursion above 60).
  long poisson(double mean);

  /// Symmetric Dirichlet(alpha) of dimension k, normalized to sum 1.
  std::vector<double> dirichlet(double alpha, int k);

  /// Sample an index from unnormalized nonnegative weights.
  int categorical(const std::vector<double>& weights);

 private:
  std::uint64_t state_;
};

}  // namespace lmi
