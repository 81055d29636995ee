#pragma once

#include <span>
#include <string_view>
#include <variant>

#include <Eigen/Dense>

namespace genrep {

/// Gamma with shape/rate parameterization.
struct GammaParams {
  double shape;
  double rate;
};

struct BetaParams {
  double alpha;
  double beta;
};

/// log z ~ Normal(loc, scale^2).
struct LogNormalParams {
  double loc;
  double scale;
};

struct DirichletParams {
  Eigen::VectorXd alpha;

  double concentration() const { return alpha.sum(); }
};

using FamilyParams = std::variant<GammaParams, BetaParams, LogNormalParams, DirichletParams>;

enum class FamilyKind { Gamma, Beta, LogNormal, Dirichlet };

FamilyKind family_kind(const FamilyParams& params);
std::string_view to_string(FamilyKind kind);
FamilyKind parse_family_kind(std::string_view name);

/// Throws DomainError unless every parameter is finite and in range.
void validate(const FamilyParams& params);

/// Number of variational parameters (2 for scalar families, K for Dirichlet).
Eigen::Index num_params(const FamilyParams& params);

/// Latent dimension of one draw (1 for scalar families, K for Dirichlet).
Eigen::Index latent_dim(const FamilyParams& params);

/// Parameters as a flat vector in declaration order, and back.
Eigen::VectorXd to_vector(const FamilyParams& params);
FamilyParams from_vector(FamilyKind kind, std::span<const double> values);

// Scalar families. `z` must lie strictly inside the support in floating
// point (z > 0, and z < 1 for beta); anything else is a DomainError.

double log_density(const GammaParams& p, double z);
double log_density(const BetaParams& p, double z);
double log_density(const LogNormalParams& p, double z);
double log_density(const DirichletParams& p, const Eigen::VectorXd& z);

double dlogq_dz(const GammaParams& p, double z);
double dlogq_dz(const BetaParams& p, double z);
double dlogq_dz(const LogNormalParams& p, double z);
Eigen::VectorXd dlogq_dz(const DirichletParams& p, const Eigen::VectorXd& z);

/// Score vector d log q / d(params) in parameter declaration order.
Eigen::Vector2d dlogq_dparams(const GammaParams& p, double z);
Eigen::Vector2d dlogq_dparams(const BetaParams& p, double z);
Eigen::Vector2d dlogq_dparams(const LogNormalParams& p, double z);
Eigen::VectorXd dlogq_dparams(const DirichletParams& p, const Eigen::VectorXd& z);

double entropy(const GammaParams& p);
double entropy(const BetaParams& p);
double entropy(const LogNormalParams& p);
double entropy(const DirichletParams& p);

Eigen::Vector2d dentropy_dparams(const GammaParams& p);
Eigen::Vector2d dentropy_dparams(const BetaParams& p);
Eigen::Vector2d dentropy_dparams(const LogNormalParams& p);
Eigen::VectorXd dentropy_dparams(const DirichletParams& p);

// Family-erased forms used by the estimators; z has latent_dim(params)
// entries.
double log_density(const FamilyParams& p, std::span<const double> z);
Eigen::VectorXd dlogq_dz(const FamilyParams& p, std::span<const double> z);
Eigen::VectorXd dlogq_dparams(const FamilyParams& p, std::span<const double> z);
double entropy(const FamilyParams& p);
Eigen::VectorXd dentropy_dparams(const FamilyParams& p);

}  // namespace genrep
