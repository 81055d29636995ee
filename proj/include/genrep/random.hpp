#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string_view>

#include <Eigen/Dense>

namespace genrep {

/// Seeded, splittable random stream.
///
/// The engine is std::mt19937_64; a child stream is seeded with a
/// splitmix64 hash of (parent seed, stream key), so `split` is a pure
/// function of the parent's seed and never advances the parent. Two runs
/// with the same seed see the same draws, bit for bit.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t seed() const { return seed_; }

  /// Raw 64-bit output of the engine.
  std::uint64_t next_u64() { return engine_(); }

  Rng split(std::uint64_t stream) const;
  Rng split(std::string_view name) const;

  /// Used by standard_normal for its second polar-method variate.
  std::optional<double>& normal_cache() { return normal_cache_; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  std::optional<double> normal_cache_;
};

std::uint64_t splitmix64(std::uint64_t x);

/// Uniform on the open interval (0, 1); 53-bit resolution.
double uniform(Rng& rng);

double standard_normal(Rng& rng);

/// Gamma(shape, rate). Marsaglia-Tsang squeeze for shape >= 1; shape < 1 is
/// boosted through Gamma(shape + 1) * U^(1/shape).
double sample_gamma(double shape, double rate, Rng& rng);

/// log of a Gamma(shape, rate) variate, computed without forming the variate
/// so that tiny shapes do not underflow.
double sample_log_gamma(double shape, double rate, Rng& rng);

/// Beta(a, b) as G_a / (G_a + G_b), evaluated in log space. Result lies in
/// the open interval (0, 1).
double sample_beta(double a, double b, Rng& rng);

/// Dirichlet(alpha) via normalized gammas. Components are strictly positive.
Eigen::VectorXd sample_dirichlet(const Eigen::VectorXd& alpha, Rng& rng);

double sample_lognormal(double loc, double scale, Rng& rng);

/// Poisson(rate): multiplication method below rate 10, PTRS above.
std::int64_t sample_poisson(double rate, Rng& rng);

int sample_bernoulli(double p, Rng& rng);

}  // namespace genrep
