#ifndef SMI_RNG_HPP
#define SMI_RNG_HPP

#include <cstdint>
#include <initializer_list>
#include <random>

namespace smi {

/// One splitmix64 mixing step.
std::uint64_t splitmix64(std::uint64_t& state);

/// Stream derivation rule: fold each path element into the master seed with
/// splitmix64.  derive_seed(master, {i, r}) is the seed of replication r of
/// grid cell i; the rule is recorded in run metadata so output files can be
/// reproduced.
std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path);

/// Seeded generator owned by one sampler or one replication.  Wraps
/// mt19937_64; the distribution algorithms below are part of the recorded
/// generator identity.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  /// U(0,1), endpoints excluded.
  double uniform();
  double uniform(double lo, double hi);
  /// Standard normal (Box-Muller, no caching).
  double normal();
  double normal(double mean, double sd) { return mean + sd * normal(); }
  /// Gamma(shape, 1) by Marsaglia-Tsang.
  double gamma(double shape);
  double gamma(double shape, double rate_inv) { return gamma(shape) * rate_inv; }
  double inverse_gamma(double shape, double rate) { return rate / gamma(shape); }
  double beta(double a, double b);
  double chi_squared(double df) { return 2.0 * gamma(0.5 * df); }
  long poisson(double mean);
  long binomial(long n, double p);
  /// Uniform integer in [0, n).
  std::uint64_t uniform_index(std::uint64_t n);

 private:
  std::mt19937_64 gen_;
};

/// Human-readable identity of the generator and stream rule, written into
/// run_meta.json.
const char* rng_identity();

}  // namespace smi

#endif  // SMI_RNG_HPP
