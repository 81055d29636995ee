#include "genrep/random.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "genrep/errors.hpp"
#include "genrep/specialfn.hpp"

namespace genrep {

namespace {

constexpr int kMaxEndpointRetries = 1000;

void require_positive_param(double v, const char* what) {
  if (!std::isfinite(v) || v <= 0.0) {
    throw DomainError(std::string(what) + " must be finite and positive, got " +
                      std::to_string(v));
  }
}

// Marsaglia & Tsang (2000), shape >= 1, unit rate. Returns log of the variate.
double log_gamma_mt(double shape, Rng& rng) {
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x = 0.0;
    double v = 0.0;
    do {
      x = standard_normal(rng);
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = uniform(rng);
    const double x2 = x * x;
    if (u < 1.0 - 0.0331 * x2 * x2) return std::log(d * v);
    if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return std::log(d * v);
  }
}

}  // namespace

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Rng::Rng(std::uint64_t seed) : seed_(seed), engine_(splitmix64(seed)) {}

Rng Rng::split(std::uint64_t stream) const {
  return Rng(splitmix64(seed_ ^ splitmix64(stream ^ 0x5851f42d4c957f2dULL)));
}

Rng Rng::split(std::string_view name) const {
  // FNV-1a
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : name) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return split(h);
}

double uniform(Rng& rng) {
  for (;;) {
    const double u = static_cast<double>(rng.next_u64() >> 11) * 0x1.0p-53;
    if (u > 0.0) return u;
  }
}

double standard_normal(Rng& rng) {
  auto& cache = rng.normal_cache();
  if (cache) {
    const double v = *cache;
    cache.reset();
    return v;
  }
  double x = 0.0;
  double y = 0.0;
  double s = 0.0;
  do {
    x = 2.0 * uniform(rng) - 1.0;
    y = 2.0 * uniform(rng) - 1.0;
    s = x * x + y * y;
  } while (s >= 1.0 || s == 0.0);
  const double scale = std::sqrt(-2.0 * std::log(s) / s);
  cache = y * scale;
  return x * scale;
}

double sample_log_gamma(double shape, double rate, Rng& rng) {
  require_positive_param(shape, "gamma shape");
  require_positive_param(rate, "gamma rate");
  if (shape >= 1.0) return log_gamma_mt(shape, rng) - std::log(rate);
  const double boosted = log_gamma_mt(shape + 1.0, rng);
  return boosted + std::log(uniform(rng)) / shape - std::log(rate);
}

double sample_gamma(double shape, double rate, Rng& rng) {
  for (int attempt = 0; attempt < kMaxEndpointRetries; ++attempt) {
    const double z = std::exp(sample_log_gamma(shape, rate, rng));
    if (z > 0.0 && std::isfinite(z)) return z;
  }
  throw NumericalError("sample_gamma: variate repeatedly outside (0, inf); shape=" +
                       std::to_string(shape) + " rate=" + std::to_string(rate));
}

double sample_beta(double a, double b, Rng& rng) {
  require_positive_param(a, "beta alpha");
  require_positive_param(b, "beta beta");
  for (int attempt = 0; attempt < kMaxEndpointRetries; ++attempt) {
    const double la = sample_log_gamma(a, 1.0, rng);
    const double lb = sample_log_gamma(b, 1.0, rng);
    // z = 1 / (1 + exp(lb - la)), 1 - z computed symmetrically
    const double d = lb - la;
    const double z = d > 0.0 ? std::exp(-d) / (1.0 + std::exp(-d)) : 1.0 / (1.0 + std::exp(d));
    if (z > 0.0 && z < 1.0) return z;
  }
  throw NumericalError("sample_beta: variate repeatedly on the unit-interval boundary");
}

Eigen::VectorXd sample_dirichlet(const Eigen::VectorXd& alpha, Rng& rng) {
  if (alpha.size() < 2) throw DomainError("sample_dirichlet: need at least two components");
  for (Eigen::Index k = 0; k < alpha.size(); ++k) require_positive_param(alpha[k], "dirichlet alpha");
  Eigen::VectorXd logs(alpha.size());
  for (int attempt = 0; attempt < kMaxEndpointRetries; ++attempt) {
    for (Eigen::Index k = 0; k < alpha.size(); ++k) logs[k] = sample_log_gamma(alpha[k], 1.0, rng);
    const double m = logs.maxCoeff();
    const double lse = m + std::log((logs.array() - m).exp().sum());
    Eigen::VectorXd z = (logs.array() - lse).exp();
    if ((z.array() > 0.0).all()) return z;
  }
  throw NumericalError("sample_dirichlet: component repeatedly underflowed to zero");
}

double sample_lognormal(double loc, double scale, Rng& rng) {
  require_positive_param(scale, "lognormal scale");
  if (!std::isfinite(loc)) throw DomainError("lognormal location must be finite");
  return std::exp(loc + scale * standard_normal(rng));
}

std::int64_t sample_poisson(double rate, Rng& rng) {
  if (!std::isfinite(rate) || rate < 0.0) {
    throw DomainError("sample_poisson: rate must be finite and non-negative, got " +
                      std::to_string(rate));
  }
  if (rate == 0.0) return 0;
  if (rate < 10.0) {
    const double limit = std::exp(-rate);
    std::int64_t k = 0;
    double prod = uniform(rng);
    while (prod > limit) {
      ++k;
      prod *= uniform(rng);
    }
    return k;
  }
  // Hormann (1993) transformed rejection with squeeze.
  const double slam = std::sqrt(rate);
  const double loglam = std::log(rate);
  const double b = 0.931 + 2.53 * slam;
  const double a = -0.059 + 0.02483 * b;
  const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
  const double vr = 0.9277 - 3.6224 / (b - 2.0);
  for (;;) {
    const double u = uniform(rng) - 0.5;
    const double v = uniform(rng);
    const double us = 0.5 - std::abs(u);
    const double k = std::floor((2.0 * a / us + b) * u + rate + 0.43);
    if (us >= 0.07 && v <= vr) return static_cast<std::int64_t>(k);
    if (k < 0.0 || (us < 0.013 && v > us)) continue;
    if (std::log(v) + std::log(inv_alpha) - std::log(a / (us * us) + b) <=
        -rate + k * loglam - specialfn::log_gamma(k + 1.0)) {
      return static_cast<std::int64_t>(k);
    }
  }
}

int sample_bernoulli(double p, Rng& rng) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw DomainError("sample_bernoulli: p must lie in [0, 1], got " + std::to_string(p));
  }
  return uniform(rng) < p ? 1 : 0;
}

}  // namespace genrep
