#pragma once

#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "genrep/distributions.hpp"
#include "genrep/models.hpp"
#include "genrep/random.hpp"
#include "genrep/transforms.hpp"

namespace genrep {

/// One latent block's factors: `num_factors` independent draws of a single
/// family, each of dimension `factor_dim`, with one row of parameters each.
struct FactorBlock {
  std::string name;
  FamilyKind family = FamilyKind::Gamma;
  TransformKind transform = TransformKind::GammaStd;
  Eigen::Index latent_offset = 0;
  Eigen::Index num_factors = 0;
  Eigen::Index factor_dim = 1;
  Eigen::MatrixXd params;  // num_factors x params per factor

  Eigen::Index params_per_factor() const { return params.cols(); }
  FamilyParams factor(Eigen::Index i) const;
  void set_factor(Eigen::Index i, const FamilyParams& p);
};

struct FamilyChoice {
  FamilyKind family;
  TransformKind transform;
};

/// Default family and transform for each support: gamma/gamma-std,
/// beta/beta-logit-stddev, dirichlet/dirichlet-fullcov.
FamilyChoice default_choice(Support support);

/// Fully factorized q(z) over a model's latent layout.
class MeanField {
 public:
  MeanField() = default;

  /// Builds one block per layout block. `overrides` maps block names to a
  /// family/transform choice; other blocks take `default_choice`. Parameters
  /// are initialized from the model's prior means: gamma shape 1 with the
  /// mean matched, log-normal scale 1 with the mean matched, beta (1, 1),
  /// dirichlet all ones.
  static MeanField for_model(const Model& model, const std::map<std::string, FamilyChoice>& overrides = {});

  /// Throws DomainError if the block is incompatible with the layout so far.
  void add_block(FactorBlock block);

  const std::vector<FactorBlock>& blocks() const { return blocks_; }
  std::vector<FactorBlock>& blocks() { return blocks_; }
  Eigen::Index latent_size() const { return latent_size_; }
  Eigen::Index num_params() const;

  /// Parameters of every factor in block order, row-major within a block.
  Eigen::VectorXd flat_params() const;
  void set_flat_params(const Eigen::VectorXd& v);

  /// Component labels matching flat_params, e.g. "w0[3].shape".
  std::vector<std::string> param_names() const;

  Eigen::VectorXd sample(Rng& rng) const;
  double log_density(const Eigen::VectorXd& z) const;
  double entropy() const;
  Eigen::VectorXd entropy_grad() const;
  Eigen::VectorXd mean() const;

  /// A single-factor family, as used by the toy models.
  static MeanField single(const FamilyParams& params, TransformKind transform, std::string name = "z");

 private:
  std::vector<FactorBlock> blocks_;
  Eigen::Index latent_size_ = 0;
};

}  // namespace genrep
