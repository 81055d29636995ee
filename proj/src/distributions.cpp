#include "genrep/distributions.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "genrep/errors.hpp"
#include "genrep/specialfn.hpp"

namespace genrep {

using specialfn::digamma;
using specialfn::log_gamma;
using specialfn::trigamma;

namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178;

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

void require_positive(double v, const char* what) {
  if (!std::isfinite(v) || v <= 0.0) {
    throw DomainError(std::string(what) + " must be finite and positive, got " +
                      std::to_string(v));
  }
}

void require_positive_support(double z) {
  if (!std::isfinite(z) || z <= 0.0) {
    throw DomainError("latent value outside (0, inf): " + std::to_string(z));
  }
}

void require_unit_support(double z) {
  if (!(z > 0.0 && z < 1.0)) {
    throw DomainError("latent value outside (0, 1): " + std::to_string(z));
  }
}

void check(const GammaParams& p) {
  require_positive(p.shape, "gamma shape");
  require_positive(p.rate, "gamma rate");
}

void check(const BetaParams& p) {
  require_positive(p.alpha, "beta alpha");
  require_positive(p.beta, "beta beta");
}

void check(const LogNormalParams& p) {
  if (!std::isfinite(p.loc)) throw DomainError("lognormal location must be finite");
  require_positive(p.scale, "lognormal scale");
}

void check(const DirichletParams& p) {
  if (p.alpha.size() < 2) throw DomainError("dirichlet needs at least two components");
  for (Eigen::Index k = 0; k < p.alpha.size(); ++k) require_positive(p.alpha[k], "dirichlet alpha");
}

void check_simplex_point(const DirichletParams& p, const Eigen::VectorXd& z) {
  if (z.size() != p.alpha.size()) {
    throw DomainError("dirichlet latent has " + std::to_string(z.size()) + " components, expected " +
                      std::to_string(p.alpha.size()));
  }
  for (Eigen::Index k = 0; k < z.size(); ++k) require_positive_support(z[k]);
}

Eigen::VectorXd as_vector(std::span<const double> z) {
  return Eigen::Map<const Eigen::VectorXd>(z.data(), static_cast<Eigen::Index>(z.size()));
}

double scalar(std::span<const double> z) {
  if (z.size() != 1) throw DomainError("scalar family expects a single latent value");
  return z[0];
}

}  // namespace

FamilyKind family_kind(const FamilyParams& params) {
  return static_cast<FamilyKind>(params.index());
}

std::string_view to_string(FamilyKind kind) {
  switch (kind) {
    case FamilyKind::Gamma: return "gamma";
    case FamilyKind::Beta: return "beta";
    case FamilyKind::LogNormal: return "lognormal";
    case FamilyKind::Dirichlet: return "dirichlet";
  }
  return "unknown";
}

FamilyKind parse_family_kind(std::string_view name) {
  if (name == "gamma") return FamilyKind::Gamma;
  if (name == "beta") return FamilyKind::Beta;
  if (name == "lognormal") return FamilyKind::LogNormal;
  if (name == "dirichlet") return FamilyKind::Dirichlet;
  throw ParseError("unknown variational family '" + std::string(name) + "'");
}

void validate(const FamilyParams& params) {
  std::visit([](const auto& p) { check(p); }, params);
}

Eigen::Index num_params(const FamilyParams& params) {
  if (const auto* d = std::get_if<DirichletParams>(&params)) return d->alpha.size();
  return 2;
}

Eigen::Index latent_dim(const FamilyParams& params) {
  if (const auto* d = std::get_if<DirichletParams>(&params)) return d->alpha.size();
  return 1;
}

Eigen::VectorXd to_vector(const FamilyParams& params) {
  return std::visit(overloaded{
                        [](const GammaParams& p) { return Eigen::VectorXd{{p.shape, p.rate}}; },
                        [](const BetaParams& p) { return Eigen::VectorXd{{p.alpha, p.beta}}; },
                        [](const LogNormalParams& p) { return Eigen::VectorXd{{p.loc, p.scale}}; },
                        [](const DirichletParams& p) { return p.alpha; },
                    },
                    params);
}

FamilyParams from_vector(FamilyKind kind, std::span<const double> v) {
  if (kind != FamilyKind::Dirichlet && v.size() != 2) {
    throw DomainError("scalar family expects two parameters");
  }
  switch (kind) {
    case FamilyKind::Gamma: return GammaParams{v[0], v[1]};
    case FamilyKind::Beta: return BetaParams{v[0], v[1]};
    case FamilyKind::LogNormal: return LogNormalParams{v[0], v[1]};
    case FamilyKind::Dirichlet: return DirichletParams{as_vector(v)};
  }
  throw DomainError("unknown family");
}

// ---------------------------------------------------------------- gamma

double log_density(const GammaParams& p, double z) {
  check(p);
  require_positive_support(z);
  return p.shape * std::log(p.rate) - log_gamma(p.shape) + (p.shape - 1.0) * std::log(z) -
         p.rate * z;
}

double dlogq_dz(const GammaParams& p, double z) {
  check(p);
  require_positive_support(z);
  return (p.shape - 1.0) / z - p.rate;
}

Eigen::Vector2d dlogq_dparams(const GammaParams& p, double z) {
  check(p);
  require_positive_support(z);
  return {std::log(p.rate) - digamma(p.shape) + std::log(z), p.shape / p.rate - z};
}

double entropy(const GammaParams& p) {
  check(p);
  return p.shape - std::log(p.rate) + log_gamma(p.shape) + (1.0 - p.shape) * digamma(p.shape);
}

Eigen::Vector2d dentropy_dparams(const GammaParams& p) {
  check(p);
  return {1.0 + (1.0 - p.shape) * trigamma(p.shape), -1.0 / p.rate};
}

// ---------------------------------------------------------------- beta

double log_density(const BetaParams& p, double z) {
  check(p);
  require_unit_support(z);
  const double log_b = log_gamma(p.alpha) + log_gamma(p.beta) - log_gamma(p.alpha + p.beta);
  return (p.alpha - 1.0) * std::log(z) + (p.beta - 1.0) * std::log1p(-z) - log_b;
}

double dlogq_dz(const BetaParams& p, double z) {
  check(p);
  require_unit_support(z);
  return (p.alpha - 1.0) / z - (p.beta - 1.0) / (1.0 - z);
}

Eigen::Vector2d dlogq_dparams(const BetaParams& p, double z) {
  check(p);
  require_unit_support(z);
  const double psi_sum = digamma(p.alpha + p.beta);
  return {psi_sum - digamma(p.alpha) + std::log(z), psi_sum - digamma(p.beta) + std::log1p(-z)};
}

double entropy(const BetaParams& p) {
  check(p);
  const double s = p.alpha + p.beta;
  const double log_b = log_gamma(p.alpha) + log_gamma(p.beta) - log_gamma(s);
  return log_b - (p.alpha - 1.0) * digamma(p.alpha) - (p.beta - 1.0) * digamma(p.beta) +
         (s - 2.0) * digamma(s);
}

Eigen::Vector2d dentropy_dparams(const BetaParams& p) {
  check(p);
  const double s = p.alpha + p.beta;
  const double common = (s - 2.0) * trigamma(s);
  return {common - (p.alpha - 1.0) * trigamma(p.alpha), common - (p.beta - 1.0) * trigamma(p.beta)};
}

// ---------------------------------------------------------------- log-normal

double log_density(const LogNormalParams& p, double z) {
  check(p);
  require_positive_support(z);
  const double t = (std::log(z) - p.loc) / p.scale;
  return -std::log(z) - std::log(p.scale) - kHalfLog2Pi - 0.5 * t * t;
}

double dlogq_dz(const LogNormalParams& p, double z) {
  check(p);
  require_positive_support(z);
  const double t = (std::log(z) - p.loc) / p.scale;
  return -(1.0 + t / p.scale) / z;
}

Eigen::Vector2d dlogq_dparams(const LogNormalParams& p, double z) {
  check(p);
  require_positive_support(z);
  const double t = (std::log(z) - p.loc) / p.scale;
  return {t / p.scale, (t * t - 1.0) / p.scale};
}

double entropy(const LogNormalParams& p) {
  check(p);
  return p.loc + 0.5 + std::log(p.scale) + kHalfLog2Pi;
}

Eigen::Vector2d dentropy_dparams(const LogNormalParams& p) {
  check(p);
  return {1.0, 1.0 / p.scale};
}

// ---------------------------------------------------------------- dirichlet
// Formulas are evaluated on the K-vector as given; no simplex chart.

double log_density(const DirichletParams& p, const Eigen::VectorXd& z) {
  check(p);
  check_simplex_point(p, z);
  double out = log_gamma(p.concentration());
  for (Eigen::Index k = 0; k < z.size(); ++k) {
    out += (p.alpha[k] - 1.0) * std::log(z[k]) - log_gamma(p.alpha[k]);
  }
  return out;
}

Eigen::VectorXd dlogq_dz(const DirichletParams& p, const Eigen::VectorXd& z) {
  check(p);
  check_simplex_point(p, z);
  return (p.alpha.array() - 1.0) / z.array();
}

Eigen::VectorXd dlogq_dparams(const DirichletParams& p, const Eigen::VectorXd& z) {
  check(p);
  check_simplex_point(p, z);
  const double psi0 = digamma(p.concentration());
  Eigen::VectorXd out(z.size());
  for (Eigen::Index k = 0; k < z.size(); ++k) out[k] = psi0 - digamma(p.alpha[k]) + std::log(z[k]);
  return out;
}

double entropy(const DirichletParams& p) {
  check(p);
  const double a0 = p.concentration();
  const auto k = static_cast<double>(p.alpha.size());
  double out = -log_gamma(a0) + (a0 - k) * digamma(a0);
  for (Eigen::Index i = 0; i < p.alpha.size(); ++i) {
    out += log_gamma(p.alpha[i]) - (p.alpha[i] - 1.0) * digamma(p.alpha[i]);
  }
  return out;
}

Eigen::VectorXd dentropy_dparams(const DirichletParams& p) {
  check(p);
  const double a0 = p.concentration();
  const double common = (a0 - static_cast<double>(p.alpha.size())) * trigamma(a0);
  Eigen::VectorXd out(p.alpha.size());
  for (Eigen::Index i = 0; i < p.alpha.size(); ++i) {
    out[i] = common - (p.alpha[i] - 1.0) * trigamma(p.alpha[i]);
  }
  return out;
}

// ---------------------------------------------------------------- erased

double log_density(const FamilyParams& params, std::span<const double> z) {
  return std::visit(overloaded{
                        [&](const DirichletParams& p) { return log_density(p, as_vector(z)); },
                        [&](const auto& p) { return log_density(p, scalar(z)); },
                    },
                    params);
}

Eigen::VectorXd dlogq_dz(const FamilyParams& params, std::span<const double> z) {
  return std::visit(overloaded{
                        [&](const DirichletParams& p) -> Eigen::VectorXd { return dlogq_dz(p, as_vector(z)); },
                        [&](const auto& p) -> Eigen::VectorXd { return Eigen::VectorXd::Constant(1, dlogq_dz(p, scalar(z))); },
                    },
                    params);
}

Eigen::VectorXd dlogq_dparams(const FamilyParams& params, std::span<const double> z) {
  return std::visit(overloaded{
                        [&](const DirichletParams& p) -> Eigen::VectorXd { return dlogq_dparams(p, as_vector(z)); },
                        [&](const auto& p) -> Eigen::VectorXd { return dlogq_dparams(p, scalar(z)); },
                    },
                    params);
}

double entropy(const FamilyParams& params) {
  return std::visit([](const auto& p) { return entropy(p); }, params);
}

Eigen::VectorXd dentropy_dparams(const FamilyParams& params) {
  return std::visit([](const auto& p) -> Eigen::VectorXd { return dentropy_dparams(p); }, params);
}

}  // namespace genrep
