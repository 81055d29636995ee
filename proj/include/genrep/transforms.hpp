#pragma once

#include <optional>
#include <span>
#include <string_view>

#include <Eigen/Dense>

#include "genrep/distributions.hpp"

namespace genrep {

/// Standardizing transformations z = T(eps; v).
///
/// GammaStd and LogNormalStd standardize log z; the beta kinds standardize
/// logit z and differ only in how the scale's parameter derivatives are
/// chosen; DirichletFullCov whitens log z with the full covariance; Identity
/// (z = eps) is valid for every family and reduces G-REP to the score
/// function estimator.
enum class TransformKind {
  GammaStd,
  LogNormalStd,
  BetaLogitStdDev,
  BetaLogitAdaptive,
  DirichletFullCov,
  Identity,
};

std::string_view to_string(TransformKind kind);

/// Accepts "gamma-std", "lognormal-std", "beta-logit-stddev",
/// "beta-logit-adaptive", "dirichlet-fullcov", "identity".
TransformKind parse_transform_kind(std::string_view name);

bool compatible(TransformKind kind, FamilyKind family);

/// The scale's parameter derivatives in the adaptive beta mode carry a
/// per-sample choice, which makes the resulting gradient biased.
inline bool is_biased(TransformKind kind) { return kind == TransformKind::BetaLogitAdaptive; }

/// One sample's complete transform evaluation. `h` has one row per latent
/// coordinate and one column per variational parameter: h(i, j) = dT_i/dv_j.
struct TransformEval {
  Eigen::VectorXd z;
  Eigen::VectorXd eps;
  double log_abs_det_jac = 0.0;
  Eigen::MatrixXd h;
  Eigen::VectorXd u;
  bool fallback = false;  // adaptive beta reverted to the stddev scale
};

/// Scalar-family version without heap allocation.
struct ScalarTransformEval {
  double z = 0.0;
  double eps = 0.0;
  double log_abs_det_jac = 0.0;
  Eigen::Vector2d h = Eigen::Vector2d::Zero();
  Eigen::Vector2d u = Eigen::Vector2d::Zero();
  bool fallback = false;
};

/// h and u evaluated at eps = inverse(z), the form used by the estimators.
TransformEval evaluate(TransformKind kind, const FamilyParams& params, std::span<const double> z);
ScalarTransformEval evaluate_scalar(TransformKind kind, const FamilyParams& params, double z);

Eigen::VectorXd inverse(TransformKind kind, const FamilyParams& params, std::span<const double> z);

/// Throws RangeError if the result leaves the representable support.
Eigen::VectorXd forward(TransformKind kind, const FamilyParams& params, std::span<const double> eps);

double log_abs_det_jacobian(TransformKind kind, const FamilyParams& params, std::span<const double> eps);

Eigen::MatrixXd aux_h(TransformKind kind, const FamilyParams& params, std::span<const double> z);
Eigen::VectorXd aux_u(TransformKind kind, const FamilyParams& params, std::span<const double> z);

// ---------------------------------------------------------------- beta

/// sqrt(psi_1(alpha) + psi_1(beta)), the standard deviation of logit z.
/// Also the nominal scale used by forward/inverse in the adaptive mode.
double beta_stddev_scale(const BetaParams& p);

/// d phi / d alpha and d phi / d beta with phi = log sigma.
struct PhiDerivatives {
  double d_alpha;
  double d_beta;
};

PhiDerivatives beta_stddev_phi_derivs(const BetaParams& p);

/// Solves for the phi derivatives that make both per-sample correction
/// integrands vanish at z. Returns nullopt when the shared linear
/// coefficient is below 1e-12 in magnitude.
std::optional<PhiDerivatives> beta_phi_derivs(const BetaParams& p, double z);

// ---------------------------------------------------------------- dirichlet

/// E[log z] under Dirichlet(alpha).
Eigen::VectorXd dirichlet_log_mean(const DirichletParams& p);

/// Cov(log z) = diag(psi_1(alpha)) - psi_1(alpha_0) 1 1^T.
Eigen::MatrixXd dirichlet_cov(const DirichletParams& p);

Eigen::MatrixXd dirichlet_cov_sqrt(const DirichletParams& p);

/// d Sigma / d alpha_i.
Eigen::MatrixXd dirichlet_cov_deriv(const DirichletParams& p, Eigen::Index i);

/// d Sigma^{1/2} / d alpha_i, the solution X of X S + S X = dSigma/dalpha_i.
Eigen::MatrixXd dirichlet_cov_sqrt_deriv(const DirichletParams& p, Eigen::Index i);

}  // namespace genrep
