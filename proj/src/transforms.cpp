#include "genrep/transforms.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "genrep/errors.hpp"
#include "genrep/linalg.hpp"
#include "genrep/specialfn.hpp"

namespace genrep {

using specialfn::digamma;
using specialfn::tetragamma;
using specialfn::trigamma;

namespace {

constexpr double kDegenerateCoef = 1e-12;

double log1pexp(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double logistic(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double checked_exp(double x) {
  const double z = std::exp(x);
  if (!std::isfinite(z)) throw RangeError("forward transform overflowed: exp(" + std::to_string(x) + ")");
  if (z == 0.0) throw RangeError("forward transform underflowed: exp(" + std::to_string(x) + ")");
  return z;
}

void require_compatible(TransformKind kind, const FamilyParams& params) {
  validate(params);
  if (!compatible(kind, family_kind(params))) {
    throw DomainError("transform '" + std::string(to_string(kind)) + "' cannot be used with family '" +
                      std::string(to_string(family_kind(params))) + "'");
  }
}

void require_positive_z(double z) {
  if (!std::isfinite(z) || z <= 0.0) throw DomainError("latent value outside (0, inf): " + std::to_string(z));
}

void require_unit_z(double z) {
  if (!(z > 0.0 && z < 1.0)) throw DomainError("latent value outside (0, 1): " + std::to_string(z));
}

void require_finite(double x, const char* what) {
  if (!std::isfinite(x)) throw DomainError(std::string(what) + " is not finite");
}

double logit(double z) { return std::log(z) - std::log1p(-z); }

// ---------------------------------------------------------------- gamma

ScalarTransformEval gamma_eval(const GammaParams& p, double z) {
  require_positive_z(z);
  const double psi = digamma(p.shape);
  const double psi1 = trigamma(p.shape);
  const double psi2 = tetragamma(p.shape);
  const double root = std::sqrt(psi1);
  ScalarTransformEval out;
  out.z = z;
  const double log_z = std::log(z);
  out.eps = (log_z - psi + std::log(p.rate)) / root;
  out.log_abs_det_jac = log_z + 0.5 * std::log(psi1);
  const double dlog_t = out.eps * psi2 / (2.0 * root) + psi1;
  out.h = {z * dlog_t, -z / p.rate};
  out.u = {dlog_t + psi2 / (2.0 * psi1), -1.0 / p.rate};
  return out;
}

double gamma_inverse(const GammaParams& p, double z) {
  require_positive_z(z);
  return (std::log(z) - digamma(p.shape) + std::log(p.rate)) / std::sqrt(trigamma(p.shape));
}

double gamma_log_forward(const GammaParams& p, double eps) {
  return eps * std::sqrt(trigamma(p.shape)) + digamma(p.shape) - std::log(p.rate);
}

// ---------------------------------------------------------------- log-normal

ScalarTransformEval lognormal_eval(const LogNormalParams& p, double z) {
  require_positive_z(z);
  ScalarTransformEval out;
  out.z = z;
  const double log_z = std::log(z);
  out.eps = (log_z - p.loc) / p.scale;
  out.log_abs_det_jac = log_z + std::log(p.scale);
  out.h = {z, out.eps * z};
  out.u = {1.0, out.eps + 1.0 / p.scale};
  return out;
}

// ---------------------------------------------------------------- beta

// h and u given the phi derivatives; r = eps * sigma, computed from z.
void beta_fill(const BetaParams& p, double z, double r, const PhiDerivatives& dphi, ScalarTransformEval& out) {
  const double psi1a = trigamma(p.alpha);
  const double psi1b = trigamma(p.beta);
  const double one_minus_z = 1.0 - z;
  const double ga = psi1a + r * dphi.d_alpha;
  const double gb = -psi1b + r * dphi.d_beta;
  const double s = z * one_minus_z;
  out.h = {s * ga, s * gb};
  const double c = one_minus_z - z;
  out.u = {c * ga + dphi.d_alpha, c * gb + dphi.d_beta};
}

ScalarTransformEval beta_eval(TransformKind kind, const BetaParams& p, double z) {
  require_unit_z(z);
  const double sigma = beta_stddev_scale(p);
  const double r = logit(z) - digamma(p.alpha) + digamma(p.beta);
  ScalarTransformEval out;
  out.z = z;
  out.eps = r / sigma;
  out.log_abs_det_jac = std::log(z) + std::log1p(-z) + std::log(sigma);
  PhiDerivatives dphi = beta_stddev_phi_derivs(p);
  if (kind == TransformKind::BetaLogitAdaptive) {
    if (auto solved = beta_phi_derivs(p, z)) {
      dphi = *solved;
    } else {
      out.fallback = true;
    }
  }
  beta_fill(p, z, r, dphi, out);
  return out;
}

double beta_inverse(const BetaParams& p, double z) {
  require_unit_z(z);
  return (logit(z) - digamma(p.alpha) + digamma(p.beta)) / beta_stddev_scale(p);
}

// logit of T(eps)
double beta_forward_logit(const BetaParams& p, double eps) {
  return eps * beta_stddev_scale(p) + digamma(p.alpha) - digamma(p.beta);
}

// ---------------------------------------------------------------- dirichlet

struct DirichletGeometry {
  Eigen::VectorXd mu;
  linalg::SqrtDecomposition root;

  Eigen::MatrixXd inverse_root() const {
    return root.vectors * root.root_values.cwiseInverse().asDiagonal() * root.vectors.transpose();
  }
};

DirichletGeometry dirichlet_geometry(const DirichletParams& p) {
  return {dirichlet_log_mean(p), linalg::sqrt_psd(dirichlet_cov(p))};
}

void require_simplex_point(const DirichletParams& p, std::span<const double> z) {
  if (static_cast<Eigen::Index>(z.size()) != p.alpha.size()) {
    throw DomainError("dirichlet latent has wrong dimension");
  }
  for (double zi : z) require_positive_z(zi);
}

Eigen::VectorXd dirichlet_inverse(const DirichletParams& p, const DirichletGeometry& g,
                                  std::span<const double> z) {
  require_simplex_point(p, z);
  const Eigen::Map<const Eigen::VectorXd> zv(z.data(), static_cast<Eigen::Index>(z.size()));
  for (double rv : g.root.root_values) {
    if (rv <= 0.0) throw NumericalError("dirichlet covariance is singular");
  }
  return g.inverse_root() * (zv.array().log().matrix() - g.mu);
}

TransformEval dirichlet_eval(const DirichletParams& p, std::span<const double> z) {
  const auto k = p.alpha.size();
  const DirichletGeometry g = dirichlet_geometry(p);
  TransformEval out;
  out.z = Eigen::Map<const Eigen::VectorXd>(z.data(), k);
  out.eps = dirichlet_inverse(p, g, z);
  out.log_abs_det_jac = g.root.root_values.array().log().sum() + out.z.array().log().sum();
  out.h.resize(k, k);
  out.u.resize(k);
  const double psi1_0 = trigamma(p.concentration());
  const double psi2_0 = tetragamma(p.concentration());
  for (Eigen::Index j = 0; j < k; ++j) {
    Eigen::MatrixXd dsigma = Eigen::MatrixXd::Constant(k, k, -psi2_0);
    dsigma(j, j) += tetragamma(p.alpha[j]);
    const Eigen::MatrixXd droot = linalg::solve_lyapunov(g.root.root_values, g.root.vectors, dsigma);
    Eigen::VectorXd dmu = Eigen::VectorXd::Constant(k, -psi1_0);
    dmu[j] += trigamma(p.alpha[j]);
    const Eigen::VectorXd w = droot * out.eps + dmu;
    out.h.col(j) = out.z.cwiseProduct(w);
    // d log det S / d alpha_j = tr(S^{-1} dS) evaluated in the eigenbasis
    const Eigen::MatrixXd rotated = g.root.vectors.transpose() * droot * g.root.vectors;
    const double dlogdet = (rotated.diagonal().array() / g.root.root_values.array()).sum();
    out.u[j] = dlogdet + w.sum();
  }
  return out;
}

TransformEval from_scalar(const ScalarTransformEval& s) {
  TransformEval out;
  out.z = Eigen::VectorXd::Constant(1, s.z);
  out.eps = Eigen::VectorXd::Constant(1, s.eps);
  out.log_abs_det_jac = s.log_abs_det_jac;
  out.h = s.h.transpose();
  out.u = s.u;
  out.fallback = s.fallback;
  return out;
}

double scalar_arg(std::span<const double> v) {
  if (v.size() != 1) throw DomainError("scalar family expects a single value");
  return v[0];
}

}  // namespace

std::string_view to_string(TransformKind kind) {
  switch (kind) {
    case TransformKind::GammaStd: return "gamma-std";
    case TransformKind::LogNormalStd: return "lognormal-std";
    case TransformKind::BetaLogitStdDev: return "beta-logit-stddev";
    case TransformKind::BetaLogitAdaptive: return "beta-logit-adaptive";
    case TransformKind::DirichletFullCov: return "dirichlet-fullcov";
    case TransformKind::Identity: return "identity";
  }
  return "unknown";
}

TransformKind parse_transform_kind(std::string_view name) {
  for (auto kind : {TransformKind::GammaStd, TransformKind::LogNormalStd, TransformKind::BetaLogitStdDev,
                    TransformKind::BetaLogitAdaptive, TransformKind::DirichletFullCov, TransformKind::Identity}) {
    if (name == to_string(kind)) return kind;
  }
  throw ParseError("unknown transform kind '" + std::string(name) + "'");
}

bool compatible(TransformKind kind, FamilyKind family) {
  switch (kind) {
    case TransformKind::GammaStd: return family == FamilyKind::Gamma;
    case TransformKind::LogNormalStd: return family == FamilyKind::LogNormal;
    case TransformKind::BetaLogitStdDev:
    case TransformKind::BetaLogitAdaptive: return family == FamilyKind::Beta;
    case TransformKind::DirichletFullCov: return family == FamilyKind::Dirichlet;
    case TransformKind::Identity: return true;
  }
  return false;
}

ScalarTransformEval evaluate_scalar(TransformKind kind, const FamilyParams& params, double z) {
  require_compatible(kind, params);
  if (kind == TransformKind::Identity) {
    if (latent_dim(params) != 1) throw DomainError("evaluate_scalar needs a scalar family");
    if (family_kind(params) == FamilyKind::Beta) require_unit_z(z); else require_positive_z(z);
    ScalarTransformEval out;
    out.z = z;
    out.eps = z;
    return out;
  }
  switch (kind) {
    case TransformKind::GammaStd: return gamma_eval(std::get<GammaParams>(params), z);
    case TransformKind::LogNormalStd: return lognormal_eval(std::get<LogNormalParams>(params), z);
    case TransformKind::BetaLogitStdDev:
    case TransformKind::BetaLogitAdaptive: return beta_eval(kind, std::get<BetaParams>(params), z);
    default: throw DomainError("evaluate_scalar needs a scalar family");
  }
}

TransformEval evaluate(TransformKind kind, const FamilyParams& params, std::span<const double> z) {
  require_compatible(kind, params);
  if (kind == TransformKind::DirichletFullCov) return dirichlet_eval(std::get<DirichletParams>(params), z);
  if (kind == TransformKind::Identity && family_kind(params) == FamilyKind::Dirichlet) {
    const auto& p = std::get<DirichletParams>(params);
    require_simplex_point(p, z);
    TransformEval out;
    out.z = Eigen::Map<const Eigen::VectorXd>(z.data(), p.alpha.size());
    out.eps = out.z;
    out.h = Eigen::MatrixXd::Zero(p.alpha.size(), p.alpha.size());
    out.u = Eigen::VectorXd::Zero(p.alpha.size());
    return out;
  }
  return from_scalar(evaluate_scalar(kind, params, scalar_arg(z)));
}

Eigen::VectorXd inverse(TransformKind kind, const FamilyParams& params, std::span<const double> z) {
  require_compatible(kind, params);
  if (kind == TransformKind::Identity) {
    const Eigen::Map<const Eigen::VectorXd> zv(z.data(), static_cast<Eigen::Index>(z.size()));
    if (static_cast<Eigen::Index>(z.size()) != latent_dim(params)) throw DomainError("latent has wrong dimension");
    return zv;
  }
  switch (kind) {
    case TransformKind::GammaStd:
      return Eigen::VectorXd::Constant(1, gamma_inverse(std::get<GammaParams>(params), scalar_arg(z)));
    case TransformKind::LogNormalStd: {
      const auto& p = std::get<LogNormalParams>(params);
      const double zz = scalar_arg(z);
      require_positive_z(zz);
      return Eigen::VectorXd::Constant(1, (std::log(zz) - p.loc) / p.scale);
    }
    case TransformKind::BetaLogitStdDev:
    case TransformKind::BetaLogitAdaptive:
      return Eigen::VectorXd::Constant(1, beta_inverse(std::get<BetaParams>(params), scalar_arg(z)));
    case TransformKind::DirichletFullCov: {
      const auto& p = std::get<DirichletParams>(params);
      return dirichlet_inverse(p, dirichlet_geometry(p), z);
    }
    case TransformKind::Identity: break;
  }
  throw DomainError("unsupported transform");
}

Eigen::VectorXd forward(TransformKind kind, const FamilyParams& params, std::span<const double> eps) {
  require_compatible(kind, params);
  for (double e : eps) require_finite(e, "eps");
  if (kind == TransformKind::Identity) {
    if (static_cast<Eigen::Index>(eps.size()) != latent_dim(params)) throw DomainError("eps has wrong dimension");
    return Eigen::Map<const Eigen::VectorXd>(eps.data(), static_cast<Eigen::Index>(eps.size()));
  }
  switch (kind) {
    case TransformKind::GammaStd:
      return Eigen::VectorXd::Constant(1, checked_exp(gamma_log_forward(std::get<GammaParams>(params), scalar_arg(eps))));
    case TransformKind::LogNormalStd: {
      const auto& p = std::get<LogNormalParams>(params);
      return Eigen::VectorXd::Constant(1, checked_exp(p.scale * scalar_arg(eps) + p.loc));
    }
    case TransformKind::BetaLogitStdDev:
    case TransformKind::BetaLogitAdaptive: {
      const double z = logistic(beta_forward_logit(std::get<BetaParams>(params), scalar_arg(eps)));
      if (!(z > 0.0 && z < 1.0)) throw RangeError("beta forward transform reached the unit-interval boundary");
      return Eigen::VectorXd::Constant(1, z);
    }
    case TransformKind::DirichletFullCov: {
      const auto& p = std::get<DirichletParams>(params);
      if (static_cast<Eigen::Index>(eps.size()) != p.alpha.size()) throw DomainError("eps has wrong dimension");
      const DirichletGeometry g = dirichlet_geometry(p);
      const Eigen::Map<const Eigen::VectorXd> e(eps.data(), p.alpha.size());
      const Eigen::VectorXd log_z = g.root.root * e + g.mu;
      Eigen::VectorXd z(log_z.size());
      for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = checked_exp(log_z[i]);
      return z;
    }
    case TransformKind::Identity: break;
  }
  throw DomainError("unsupported transform");
}

double log_abs_det_jacobian(TransformKind kind, const FamilyParams& params, std::span<const double> eps) {
  require_compatible(kind, params);
  for (double e : eps) require_finite(e, "eps");
  switch (kind) {
    case TransformKind::Identity: return 0.0;
    case TransformKind::GammaStd: {
      const auto& p = std::get<GammaParams>(params);
      return gamma_log_forward(p, scalar_arg(eps)) + 0.5 * std::log(trigamma(p.shape));
    }
    case TransformKind::LogNormalStd: {
      const auto& p = std::get<LogNormalParams>(params);
      return p.scale * scalar_arg(eps) + p.loc + std::log(p.scale);
    }
    case TransformKind::BetaLogitStdDev:
    case TransformKind::BetaLogitAdaptive: {
      const auto& p = std::get<BetaParams>(params);
      const double x = beta_forward_logit(p, scalar_arg(eps));
      // log T + log(1 - T) = -log1p(e^-x) - log1p(e^x)
      return -log1pexp(-x) - log1pexp(x) + std::log(beta_stddev_scale(p));
    }
    case TransformKind::DirichletFullCov: {
      const auto& p = std::get<DirichletParams>(params);
      if (static_cast<Eigen::Index>(eps.size()) != p.alpha.size()) throw DomainError("eps has wrong dimension");
      const DirichletGeometry g = dirichlet_geometry(p);
      const Eigen::Map<const Eigen::VectorXd> e(eps.data(), p.alpha.size());
      return g.root.root_values.array().log().sum() + (g.root.root * e + g.mu).sum();
    }
  }
  throw DomainError("unsupported transform");
}

Eigen::MatrixXd aux_h(TransformKind kind, const FamilyParams& params, std::span<const double> z) {
  return evaluate(kind, params, z).h;
}

Eigen::VectorXd aux_u(TransformKind kind, const FamilyParams& params, std::span<const double> z) {
  return evaluate(kind, params, z).u;
}

double beta_stddev_scale(const BetaParams& p) { return std::sqrt(trigamma(p.alpha) + trigamma(p.beta)); }

PhiDerivatives beta_stddev_phi_derivs(const BetaParams& p) {
  const double var = trigamma(p.alpha) + trigamma(p.beta);
  return {tetragamma(p.alpha) / (2.0 * var), tetragamma(p.beta) / (2.0 * var)};
}

std::optional<PhiDerivatives> beta_phi_derivs(const BetaParams& p, double z) {
  validate(p);
  require_unit_z(z);
  // With r = eps*sigma, a = dlogq/dz, s = z(1-z), c = 1-2z the alpha equation
  //   a s (psi1a + r x) + dlogq/dalpha + c (psi1a + r x) + x = 0
  // is linear in x = dphi/dalpha with coefficient (a s + c) r + 1, and
  // a s + c simplifies to alpha - (alpha + beta) z. Same for beta.
  const double r = logit(z) - digamma(p.alpha) + digamma(p.beta);
  const double slope = p.alpha - (p.alpha + p.beta) * z;
  const double coef = slope * r + 1.0;
  if (!(std::abs(coef) >= kDegenerateCoef)) return std::nullopt;
  const double psi_sum = digamma(p.alpha + p.beta);
  const double score_a = psi_sum - digamma(p.alpha) + std::log(z);
  const double score_b = psi_sum - digamma(p.beta) + std::log1p(-z);
  return PhiDerivatives{-(slope * trigamma(p.alpha) + score_a) / coef,
                        -(-slope * trigamma(p.beta) + score_b) / coef};
}

Eigen::VectorXd dirichlet_log_mean(const DirichletParams& p) {
  validate(p);
  const double psi0 = digamma(p.concentration());
  return p.alpha.unaryExpr([psi0](double a) { return digamma(a) - psi0; });
}

Eigen::MatrixXd dirichlet_cov(const DirichletParams& p) {
  validate(p);
  const auto k = p.alpha.size();
  Eigen::MatrixXd sigma = Eigen::MatrixXd::Constant(k, k, -trigamma(p.concentration()));
  for (Eigen::Index i = 0; i < k; ++i) sigma(i, i) += trigamma(p.alpha[i]);
  return sigma;
}

Eigen::MatrixXd dirichlet_cov_sqrt(const DirichletParams& p) { return linalg::sqrt_psd(dirichlet_cov(p)).root; }

Eigen::MatrixXd dirichlet_cov_deriv(const DirichletParams& p, Eigen::Index i) {
  validate(p);
  const auto k = p.alpha.size();
  if (i < 0 || i >= k) throw DomainError("dirichlet_cov_deriv: component index out of range");
  Eigen::MatrixXd d = Eigen::MatrixXd::Constant(k, k, -tetragamma(p.concentration()));
  d(i, i) += tetragamma(p.alpha[i]);
  return d;
}

Eigen::MatrixXd dirichlet_cov_sqrt_deriv(const DirichletParams& p, Eigen::Index i) {
  const Eigen::MatrixXd dsigma = dirichlet_cov_deriv(p, i);
  const auto root = linalg::sqrt_psd(dirichlet_cov(p));
  return linalg::solve_lyapunov(root.root_values, root.vectors, dsigma);
}

}  // namespace genrep
