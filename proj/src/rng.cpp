#include "smi/rng.hpp"

#include "smi/types.hpp"

#include <cmath>

namespace smi {

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
  std::uint64_t state = master;
  std::uint64_t out = splitmix64(state);
  for (std::uint64_t p : path) {
    state ^= p + 0x9e3779b97f4a7c15ULL + (state << 6) + (state >> 2);
    out = splitmix64(state);
  }
  return out;
}

double Rng::uniform() {
  // 53-bit mantissa, shifted into (0,1).
  return (double(gen_() >> 11) + 0.5) * 0x1p-53;
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double Rng::normal() {
  double u1 = uniform();
  double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

double Rng::gamma(double shape) {
  if (!(shape > 0.0)) throw InvalidInput("gamma: shape must be positive");
  if (shape < 1.0) {
    // Boost by one and correct with a uniform power.
    double u = uniform();
    return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x = normal();
    double v = 1.0 + c * x;
    if (v <= 0.0) continue;
    v = v * v * v;
    double u = uniform();
    double x2 = x * x;
    if (u < 1.0 - 0.0331 * x2 * x2) return d * v;
    if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v;
  }
}

double Rng::beta(double a, double b) {
  double x = gamma(a);
  double y = gamma(b);
  return x / (x + y);
}

long Rng::poisson(double mean) {
  if (mean < 0.0) throw InvalidInput("poisson: negative mean");
  if (mean == 0.0) return 0;
  if (mean < 30.0) {
    // Knuth multiplication.
    double limit = std::exp(-mean);
    double prod = uniform();
    long k = 0;
    while (prod > limit) {
      prod *= uniform();
      ++k;
    }
    return k;
  }
  // Split recursively: Poisson(m) = Poisson(m-f) + Gamma-race on the rest.
  // Use the classic gamma thinning: with g = floor(7m/8), if X~Gamma(g,1) and
  // X <= m then k = g + Poisson(m - X), else k ~ Binomial(g-1, m/X).
  double m = mean;
  long k = 0;
  while (m >= 30.0) {
    long g = long(m * 7.0 / 8.0);
    double x = gamma(double(g));
    if (x > m) return k + binomial(g - 1, m / x);
    k += g;
    m -= x;
  }
  return k + poisson(m);
}

long Rng::binomial(long n, double p) {
  if (n < 0 || p < 0.0 || p > 1.0) throw InvalidInput("binomial: bad arguments");
  if (n == 0 || p == 0.0) return 0;
  if (p == 1.0) return n;
  if (p > 0.5) return n - binomial(n, 1.0 - p);
  // Beta-splitting keeps the count of uniforms logarithmic in n.
  long count = 0;
  while (n > 32) {
    long a = (n + 1) / 2;
    double x = beta(double(a), double(n + 1 - a));
    if (x <= p) {
      count += a;
      n -= a;
      p = (p - x) / (1.0 - x);
    } else {
      n = a - 1;
      p = p / x;
    }
  }
  for (long i = 0; i < n; ++i)
    if (uniform() < p) ++count;
  return count;
}

std::uint64_t Rng::uniform_index(std::uint64_t n) {
  if (n == 0) throw InvalidInput("uniform_index: n must be positive");
  // Rejection to avoid modulo bias.
  std::uint64_t limit = ~std::uint64_t(0) - (~std::uint64_t(0) % n);
  std::uint64_t x;
  do {
    x = gen_();
  } while (x >= limit);
  return x % n;
}

const char* rng_identity() {
  return "mt19937_64; box-muller normal, marsaglia-tsang gamma; "
         "stream = splitmix64-fold(master_seed, path...)";
}

}  // namespace smi
