#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "genrep/distributions.hpp"
#include "genrep/random.hpp"

namespace genrep {

enum class Support { Positive, UnitInterval, Simplex };

std::string_view to_string(Support s);

/// A named rows x cols block of latent variables, stored row-major inside
/// the flat latent vector. Simplex blocks hold one simplex vector per row.
struct LatentBlock {
  std::string name;
  Eigen::Index rows = 1;
  Eigen::Index cols = 1;
  Support support = Support::Positive;

  Eigen::Index size() const { return rows * cols; }
  Eigen::Index factor_dim() const { return support == Support::Simplex ? cols : 1; }
  Eigen::Index num_factors() const { return support == Support::Simplex ? rows : rows * cols; }
};

class LatentLayout {
 public:
  /// Throws DomainError on a duplicate name or an empty block.
  void add(LatentBlock block);

  const std::vector<LatentBlock>& blocks() const { return blocks_; }
  Eigen::Index offset(std::size_t block) const { return offsets_.at(block); }
  Eigen::Index total_size() const { return total_; }
  std::optional<std::size_t> find(std::string_view name) const;

 private:
  std::vector<LatentBlock> blocks_;
  std::vector<Eigen::Index> offsets_;
  Eigen::Index total_ = 0;
};

using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstBlockMap = Eigen::Map<const RowMajorMatrix>;
using BlockMap = Eigen::Map<RowMajorMatrix>;

/// Log-joint f(z) = log p(x, z) of a model with fixed data.
class Model {
 public:
  virtual ~Model() = default;

  virtual std::string_view name() const = 0;
  virtual const LatentLayout& layout() const = 0;

  virtual double log_joint(const Eigen::VectorXd& z) const = 0;

  /// Returns f(z) and overwrites `grad` with its gradient.
  virtual double log_joint_grad(const Eigen::VectorXd& z, Eigen::VectorXd& grad) const = 0;

  /// Prior mean of every latent coordinate (used to initialize the
  /// variational family).
  virtual Eigen::VectorXd prior_mean() const = 0;

  /// log p(x_rc = value | z) for held-out evaluation. Models without a
  /// matrix of observations throw.
  virtual double entry_log_likelihood(const Eigen::VectorXd& z, Eigen::Index row, Eigen::Index col,
                                      double value) const;

  ConstBlockMap block(const Eigen::VectorXd& z, std::size_t b) const;
  BlockMap block(Eigen::VectorXd& z, std::size_t b) const;
};

double log_gamma_pdf(double z, double shape, double rate);
double log_poisson_pmf(double x, double rate);

// ------------------------------------------------------------------ toys

/// z ~ Gamma(a, b), x_i | z ~ Poisson(z).
class GammaPoissonToy final : public Model {
 public:
  GammaPoissonToy(std::vector<std::int64_t> data, GammaParams prior);

  std::string_view name() const override { return "gamma_poisson_toy"; }
  const LatentLayout& layout() const override { return layout_; }
  double log_joint(const Eigen::VectorXd& z) const override;
  double log_joint_grad(const Eigen::VectorXd& z, Eigen::VectorXd& grad) const override;
  Eigen::VectorXd prior_mean() const override;
  double entry_log_likelihood(const Eigen::VectorXd& z, Eigen::Index row, Eigen::Index col,
                              double value) const override;

  GammaParams prior() const { return prior_; }
  const std::vector<std::int64_t>& data() const { return data_; }
  GammaParams posterior() const;
  double log_marginal_likelihood() const;

  /// Closed-form ELBO and its gradient for a gamma or log-normal q.
  double analytic_elbo(const FamilyParams& q) const;
  Eigen::Vector2d analytic_elbo_grad(const FamilyParams& q) const;

 private:
  std::vector<std::int64_t> data_;
  GammaParams prior_;
  double sum_ = 0.0;
  double log_factorials_ = 0.0;
  LatentLayout layout_;
};

/// z ~ Beta(a, b), x_i | z ~ Bernoulli(z).
class BetaBernoulliToy final : public Model {
 public:
  BetaBernoulliToy(std::vector<int> data, BetaParams prior);

  std::string_view name() const override { return "beta_bernoulli_toy"; }
  const LatentLayout& layout() const override { return layout_; }
  double log_joint(const Eigen::VectorXd& z) const override;
  double log_joint_grad(const Eigen::VectorXd& z, Eigen::VectorXd& grad) const override;
  Eigen::VectorXd prior_mean() const override;
  double entry_log_likelihood(const Eigen::VectorXd& z, Eigen::Index row, Eigen::Index col,
                              double value) const override;

  BetaParams prior() const { return prior_; }
  BetaParams posterior() const;
  double log_marginal_likelihood() const;
  double analytic_elbo(const BetaParams& q) const;
  Eigen::Vector2d analytic_elbo_grad(const BetaParams& q) const;

 private:
  std::vector<int> data_;
  BetaParams prior_;
  double ones_ = 0.0;
  double zeros_ = 0.0;
  LatentLayout layout_;
};

// ------------------------------------------------------------------ sparse gamma DEF

struct SparseGammaDefConfig {
  /// Latent factors per layer, bottom (closest to the data) first.
  std::vector<Eigen::Index> layers{10, 5, 3};
  double alpha_z = 0.1;
  GammaParams weight_prior{0.1, 0.3};
  GammaParams top_prior{0.1, 0.1};

  void validate() const;
};

/// Deep exponential family with gamma layers and Poisson observations:
///   z^(L)_nk ~ Gamma(top_shape, top_rate)
///   z^(l)_nk ~ Gamma(alpha_z, alpha_z / sum_k' z^(l+1)_nk' w^(l)_k'k)
///   x_nd     ~ Poisson(sum_k z^(1)_nk w^(0)_kd)
/// with every weight matrix w^(0..L-1) under the same gamma prior.
/// Latent blocks: z1..zL (N x K_l) then w0 (K_1 x D), w1 (K_2 x K_1), ...
class SparseGammaDef final : public Model {
 public:
  /// `mask` (optional, same shape as data) weights each Poisson term; zero
  /// entries are excluded from the likelihood.
  SparseGammaDef(SparseGammaDefConfig config, Eigen::MatrixXd counts,
                 std::optional<Eigen::MatrixXd> mask = std::nullopt);

  std::string_view name() const override { return "sparse_gamma_def"; }
  const LatentLayout& layout() const override { return layout_; }
  double log_joint(const Eigen::VectorXd& z) const override;
  double log_joint_grad(const Eigen::VectorXd& z, Eigen::VectorXd& grad) const override;
  Eigen::VectorXd prior_mean() const override;
  double entry_log_likelihood(const Eigen::VectorXd& z, Eigen::Index row, Eigen::Index col,
                              double value) const override;

  /// Poisson rate matrix z^(1) w^(0).
  Eigen::MatrixXd rates(const Eigen::VectorXd& z) const;

  const SparseGammaDefConfig& config() const { return config_; }
  const Eigen::MatrixXd& data() const { return counts_; }

 private:
  double evaluate(const Eigen::VectorXd& z, Eigen::VectorXd* grad) const;
  std::size_t z_block(std::size_t layer) const { return layer; }
  std::size_t w_block(std::size_t layer) const { return config_.layers.size() + layer; }

  SparseGammaDefConfig config_;
  Eigen::MatrixXd counts_;
  Eigen::MatrixXd mask_;
  double log_factorials_ = 0.0;
  LatentLayout layout_;
};

struct DefSample {
  Eigen::MatrixXd data;
  Eigen::VectorXd latents;
};

/// Ancestral draw of latents and counts from the DEF prior.
DefSample synthesize_def(const SparseGammaDefConfig& config, Eigen::Index rows, Eigen::Index cols, Rng& rng);

// ------------------------------------------------------------------ beta-gamma MF

struct BetaGammaMfConfig {
  Eigen::Index latent_dim = 5;
  GammaParams weight_prior{0.1, 0.3};

  void validate() const;
};

/// x_nd ~ Bernoulli(sigmoid(sum_k logit(z_nk) w_kd)), z_nk ~ Uniform(0, 1),
/// w_kd ~ Gamma. Latent blocks: z (N x K, unit interval), w (K x D).
class BetaGammaMf final : public Model {
 public:
  BetaGammaMf(BetaGammaMfConfig config, Eigen::MatrixXd bits, std::optional<Eigen::MatrixXd> mask = std::nullopt);

  std::string_view name() const override { return "beta_gamma_mf"; }
  const LatentLayout& layout() const override { return layout_; }
  double log_joint(const Eigen::VectorXd& z) const override;
  double log_joint_grad(const Eigen::VectorXd& z, Eigen::VectorXd& grad) const override;
  Eigen::VectorXd prior_mean() const override;
  double entry_log_likelihood(const Eigen::VectorXd& z, Eigen::Index row, Eigen::Index col,
                              double value) const override;

  /// Link matrix logit(z) w.
  Eigen::MatrixXd link(const Eigen::VectorXd& z) const;

  const BetaGammaMfConfig& config() const { return config_; }
  const Eigen::MatrixXd& data() const { return bits_; }

 private:
  double evaluate(const Eigen::VectorXd& z, Eigen::VectorXd* grad) const;

  BetaGammaMfConfig config_;
  Eigen::MatrixXd bits_;
  Eigen::MatrixXd mask_;
  LatentLayout layout_;
};

struct MfSample {
  Eigen::MatrixXd data;
  Eigen::VectorXd latents;
};

MfSample synthesize_mf(const BetaGammaMfConfig& config, Eigen::Index rows, Eigen::Index cols, Rng& rng);

}  // namespace genrep
