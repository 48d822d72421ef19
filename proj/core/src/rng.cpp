#include "lmi/rng.hpp"

#include <cmath>

#include "lmi/error.hpp"

namespace lmi {

std::uint64_t Rng::next_u64() {
  // splitmix64 (Steele, Lea, Flood 2014); public-domain reference constants.
  std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double Rng::uniform01() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::uint64_t Rng::uniform_below(std::uint64_t n) {
  if (n == 0) throw Error("uniform_below: n must be positive");
  // Rejection to avoid modulo bias.
  const std::uint64_t limit = n * ((~0ULL) / n);
  std::uint64_t x;
  do {
    x = next_u64();
  } while (x >= limit);
  return x % n;
}

double Rng::normal() {
  double u1, u2;
  do {
    u1 = uniform01();
  } while (u1 <= 0.0);
  u2 = uniform01();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

double Rng::gamma(double shape) {
  if (shape <= 0.0) throw Error("gamma: shape must be positive");
  if (shape < 1.0) {
    // Boost: Gamma(a) = Gamma(a+1) * U^(1/a).
    double u;
    do {
      u = uniform01();
    } while (u <= 0.0);
    return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = uniform01();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

long Rng::poisson(double mean) {
  if (mean < 0.0) throw Error("poisson: mean must be nonnegative");
  if (mean == 0.0) return 0;
  if (mean > 60.0) {
    // Poisson(a+b) = Poisson(a) + Poisson(b).
    const double half = mean / 2.0;
    return poisson(half) + poisson(mean - half);
  }
  // Knuth's product method.
  const double threshold = std::exp(-mean);
  long k = 0;
  double p = 1.0;
  do {
    ++k;
    p *= uniform01();
  } while (p > threshold);
  return k - 1;
}

std::vector<double> Rng::dirichlet(double alpha, int k) {
  if (k < 1) throw Error("dirichlet: dimension must be >= 1");
  std::vector<double> out(static_cast<size_t>(k));
  double total = 0.0;
  for (auto& x : out) {
    x = gamma(alpha);
    total += x;
  }
  if (total <= 0.0) {
    // All draws underflowed (tiny alpha): fall back to a single hot index.
    out.assign(out.size(), 0.0);
    out[static_cast<size_t>(uniform_below(static_cast<std::uint64_t>(k)))] = 1.0;
    return out;
  }
  for (auto& x : out) x /= total;
  return out;
}

int Rng::categorical(const std::vector<double>& weights) {
  double total = 0.0;
  for (double w : weights) {
    if (w < 0.0) throw Error("categorical: negative weight");
    total += w;
  }
  if (total <= 0.0) throw Error("categorical: all weights zero");
  const double u = uniform01() * total;
  double acc = 0.0;
  for (size_t i = 0; i + 1 < weights.size(); ++i) {
    acc += weights[i];
    if (u < acc) return static_cast<int>(i);
  }
  return static_cast<int>(weights.size()) - 1;
}

}  // namespace lmi
