#include "genrep/models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>

#include "genrep/errors.hpp"
#include "genrep/specialfn.hpp"

namespace genrep {

namespace sf = specialfn;

namespace {

double log1pexp(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double log_beta_fn(double a, double b) { return sf::log_gamma(a) + sf::log_gamma(b) - sf::log_gamma(a + b); }

void require_size(const Eigen::VectorXd& z, Eigen::Index n, std::string_view who) {
  if (z.size() != n) {
    throw DomainError(std::string(who) + ": latent vector has size " + std::to_string(z.size()) + ", expected " +
                      std::to_string(n));
  }
}

void require_positive(const Eigen::Ref<const RowMajorMatrix>& m, std::string_view who) {
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    const double v = m.data()[i];
    if (!(v > 0.0) || !std::isfinite(v)) throw DomainError(std::string(who) + ": latent outside (0, inf)");
  }
}

void require_unit(const Eigen::Ref<const RowMajorMatrix>& m, std::string_view who) {
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    const double v = m.data()[i];
    if (!(v > 0.0 && v < 1.0)) throw DomainError(std::string(who) + ": latent outside (0, 1)");
  }
}

void require_gamma(const GammaParams& p, std::string_view what) {
  if (!(p.shape > 0.0 && p.rate > 0.0) || !std::isfinite(p.shape) || !std::isfinite(p.rate)) {
    throw DomainError(std::string(what) + ": gamma parameters must be positive and finite");
  }
}

Eigen::MatrixXd make_mask(const std::optional<Eigen::MatrixXd>& mask, const Eigen::MatrixXd& data) {
  if (!mask) return Eigen::MatrixXd::Ones(data.rows(), data.cols());
  if (mask->rows() != data.rows() || mask->cols() != data.cols()) {
    throw DomainError("observation mask shape does not match the data");
  }
  for (Eigen::Index i = 0; i < mask->size(); ++i) {
    const double v = mask->data()[i];
    if (v != 0.0 && v != 1.0) throw DomainError("observation mask entries must be 0 or 1");
  }
  return *mask;
}

void check_entry(const Eigen::MatrixXd& data, Eigen::Index row, Eigen::Index col) {
  if (row < 0 || row >= data.rows() || col < 0 || col >= data.cols()) {
    throw DomainError("entry (" + std::to_string(row) + ", " + std::to_string(col) + ") is outside the data");
  }
}

}  // namespace

std::string_view to_string(Support s) {
  switch (s) {
    case Support::Positive: return "positive";
    case Support::UnitInterval: return "unit_interval";
    case Support::Simplex: return "simplex";
  }
  return "?";
}

void LatentLayout::add(LatentBlock block) {
  if (block.rows <= 0 || block.cols <= 0) throw DomainError("latent block '" + block.name + "' is empty");
  if (find(block.name)) throw DomainError("duplicate latent block '" + block.name + "'");
  offsets_.push_back(total_);
  total_ += block.size();
  blocks_.push_back(std::move(block));
}

std::optional<std::size_t> LatentLayout::find(std::string_view name) const {
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    if (blocks_[i].name == name) return i;
  }
  return std::nullopt;
}

double Model::entry_log_likelihood(const Eigen::VectorXd&, Eigen::Index, Eigen::Index, double) const {
  throw DomainError(std::string(name()) + " has no per-entry likelihood");
}

ConstBlockMap Model::block(const Eigen::VectorXd& z, std::size_t b) const {
  const auto& blk = layout().blocks().at(b);
  return {z.data() + layout().offset(b), blk.rows, blk.cols};
}

BlockMap Model::block(Eigen::VectorXd& z, std::size_t b) const {
  const auto& blk = layout().blocks().at(b);
  return {z.data() + layout().offset(b), blk.rows, blk.cols};
}

double log_gamma_pdf(double z, double shape, double rate) {
  return shape * std::log(rate) - sf::log_gamma(shape) + (shape - 1.0) * std::log(z) - rate * z;
}

double log_poisson_pmf(double x, double rate) {
  if (x == 0.0) return -rate;
  return x * std::log(rate) - rate - sf::log_gamma(x + 1.0);
}

// ------------------------------------------------------------------ gamma-Poisson

GammaPoissonToy::GammaPoissonToy(std::vector<std::int64_t> data, GammaParams prior)
    : data_(std::move(data)), prior_(prior) {
  require_gamma(prior_, "gamma_poisson_toy prior");
  for (auto x : data_) {
    if (x < 0) throw DomainError("gamma_poisson_toy: counts must be non-negative");
    sum_ += static_cast<double>(x);
    log_factorials_ += sf::log_gamma(static_cast<double>(x) + 1.0);
  }
  layout_.add({"z", 1, 1, Support::Positive});
}

double GammaPoissonToy::log_joint(const Eigen::VectorXd& z) const {
  require_size(z, 1, name());
  const double v = z[0];
  if (!(v > 0.0) || !std::isfinite(v)) throw DomainError("gamma_poisson_toy: z must be positive");
  const double n = static_cast<double>(data_.size());
  return log_gamma_pdf(v, prior_.shape, prior_.rate) + sum_ * std::log(v) - n * v - log_factorials_;
}

double GammaPoissonToy::log_joint_grad(const Eigen::VectorXd& z, Eigen::VectorXd& grad) const {
  const double f = log_joint(z);
  const double n = static_cast<double>(data_.size());
  grad.resize(1);
  grad[0] = (prior_.shape - 1.0 + sum_) / z[0] - (prior_.rate + n);
  return f;
}

Eigen::VectorXd GammaPoissonToy::prior_mean() const {
  return Eigen::VectorXd::Constant(1, prior_.shape / prior_.rate);
}

double GammaPoissonToy::entry_log_likelihood(const Eigen::VectorXd& z, Eigen::Index row, Eigen::Index col,
                                             double value) const {
  if (row < 0 || row >= static_cast<Eigen::Index>(data_.size()) || col != 0) {
    throw DomainError("gamma_poisson_toy: entry index out of range");
  }
  return log_poisson_pmf(value, z[0]);
}

GammaParams GammaPoissonToy::posterior() const {
  return {prior_.shape + sum_, prior_.rate + static_cast<double>(data_.size())};
}

double GammaPoissonToy::log_marginal_likelihood() const {
  const auto post = posterior();
  return prior_.shape * std::log(prior_.rate) - sf::log_gamma(prior_.shape) + sf::log_gamma(post.shape) -
         post.shape * std::log(post.rate) - log_factorials_;
}

double GammaPoissonToy::analytic_elbo(const FamilyParams& q) const {
  validate(q);
  const double n = static_cast<double>(data_.size());
  double e_log = 0.0;
  double e_z = 0.0;
  if (const auto* g = std::get_if<GammaParams>(&q)) {
    e_log = sf::digamma(g->shape) - std::log(g->rate);
    e_z = g->shape / g->rate;
  } else if (const auto* l = std::get_if<LogNormalParams>(&q)) {
    e_log = l->loc;
    e_z = std::exp(l->loc + 0.5 * l->scale * l->scale);
  } else {
    throw DomainError("gamma_poisson_toy: analytic ELBO needs a gamma or log-normal q");
  }
  return prior_.shape * std::log(prior_.rate) - sf::log_gamma(prior_.shape) +
         (prior_.shape - 1.0 + sum_) * e_log - (prior_.rate + n) * e_z - log_factorials_ + entropy(q);
}

Eigen::Vector2d GammaPoissonToy::analytic_elbo_grad(const FamilyParams& q) const {
  validate(q);
  const double n = static_cast<double>(data_.size());
  const double c_log = prior_.shape - 1.0 + sum_;
  const double c_z = prior_.rate + n;
  Eigen::Vector2d g;
  if (const auto* p = std::get_if<GammaParams>(&q)) {
    g[0] = c_log * sf::trigamma(p->shape) - c_z / p->rate;
    g[1] = -c_log / p->rate + c_z * p->shape / (p->rate * p->rate);
    return g + dentropy_dparams(*p);
  }
  if (const auto* l = std::get_if<LogNormalParams>(&q)) {
    const double e_z = std::exp(l->loc + 0.5 * l->scale * l->scale);
    g[0] = c_log - c_z * e_z;
    g[1] = -c_z * l->scale * e_z;
    return g + dentropy_dparams(*l);
  }
  throw DomainError("gamma_poisson_toy: analytic ELBO needs a gamma or log-normal q");
}

// ------------------------------------------------------------------ beta-Bernoulli

BetaBernoulliToy::BetaBernoulliToy(std::vector<int> data, BetaParams prior) : data_(std::move(data)), prior_(prior) {
  validate(FamilyParams{prior_});
  for (int x : data_) {
    if (x != 0 && x != 1) throw DomainError("beta_bernoulli_toy: observations must be 0 or 1");
    (x == 1 ? ones_ : zeros_) += 1.0;
  }
  layout_.add({"z", 1, 1, Support::UnitInterval});
}

double BetaBernoulliToy::log_joint(const Eigen::VectorXd& z) const {
  require_size(z, 1, name());
  const double v = z[0];
  if (!(v > 0.0 && v < 1.0)) throw DomainError("beta_bernoulli_toy: z must lie in (0, 1)");
  return (prior_.alpha - 1.0 + ones_) * std::log(v) + (prior_.beta - 1.0 + zeros_) * std::log1p(-v) -
         log_beta_fn(prior_.alpha, prior_.beta);
}

double BetaBernoulliToy::log_joint_grad(const Eigen::VectorXd& z, Eigen::VectorXd& grad) const {
  const double f = log_joint(z);
  const double v = z[0];
  grad.resize(1);
  grad[0] = (prior_.alpha - 1.0 + ones_) / v - (prior_.beta - 1.0 + zeros_) / (1.0 - v);
  return f;
}

Eigen::VectorXd BetaBernoulliToy::prior_mean() const {
  return Eigen::VectorXd::Constant(1, prior_.alpha / (prior_.alpha + prior_.beta));
}

double BetaBernoulliToy::entry_log_likelihood(const Eigen::VectorXd& z, Eigen::Index row, Eigen::Index col,
                                              double value) const {
  if (row < 0 || row >= static_cast<Eigen::Index>(data_.size()) || col != 0) {
    throw DomainError("beta_bernoulli_toy: entry index out of range");
  }
  return value != 0.0 ? std::log(z[0]) : std::log1p(-z[0]);
}

BetaParams BetaBernoulliToy::posterior() const { return {prior_.alpha + ones_, prior_.beta + zeros_}; }

double BetaBernoulliToy::log_marginal_likelihood() const {
  const auto post = posterior();
  return log_beta_fn(post.alpha, post.beta) - log_beta_fn(prior_.alpha, prior_.beta);
}

double BetaBernoulliToy::analytic_elbo(const BetaParams& q) const {
  validate(FamilyParams{q});
  const double ps = sf::digamma(q.alpha + q.beta);
  return (prior_.alpha - 1.0 + ones_) * (sf::digamma(q.alpha) - ps) +
         (prior_.beta - 1.0 + zeros_) * (sf::digamma(q.beta) - ps) - log_beta_fn(prior_.alpha, prior_.beta) +
         entropy(q);
}

Eigen::Vector2d BetaBernoulliToy::analytic_elbo_grad(const BetaParams& q) const {
  validate(FamilyParams{q});
  const double c1 = prior_.alpha - 1.0 + ones_;
  const double c0 = prior_.beta - 1.0 + zeros_;
  const double t = sf::trigamma(q.alpha + q.beta);
  Eigen::Vector2d g(c1 * (sf::trigamma(q.alpha) - t) - c0 * t, -c1 * t + c0 * (sf::trigamma(q.beta) - t));
  return g + dentropy_dparams(q);
}

// ------------------------------------------------------------------ sparse gamma DEF

void SparseGammaDefConfig::validate() const {
  if (layers.empty()) throw DomainError("sparse_gamma_def: at least one layer is required");
  for (auto k : layers) {
    if (k <= 0) throw DomainError("sparse_gamma_def: layer sizes must be positive");
  }
  if (!(alpha_z > 0.0) || !std::isfinite(alpha_z)) throw DomainError("sparse_gamma_def: alpha_z must be positive");
  require_gamma(weight_prior, "sparse_gamma_def weight prior");
  require_gamma(top_prior, "sparse_gamma_def top prior");
}

SparseGammaDef::SparseGammaDef(SparseGammaDefConfig config, Eigen::MatrixXd counts,
                               std::optional<Eigen::MatrixXd> mask)
    : config_(std::move(config)), counts_(std::move(counts)) {
  config_.validate();
  if (counts_.size() == 0) throw DomainError("sparse_gamma_def: empty data");
  for (Eigen::Index i = 0; i < counts_.size(); ++i) {
    const double x = counts_.data()[i];
    if (!(x >= 0.0) || x != std::floor(x) || !std::isfinite(x)) {
      throw DomainError("sparse_gamma_def: counts must be non-negative integers");
    }
  }
  mask_ = make_mask(mask, counts_);
  for (Eigen::Index i = 0; i < counts_.size(); ++i) {
    if (mask_.data()[i] != 0.0) log_factorials_ += sf::log_gamma(counts_.data()[i] + 1.0);
  }

  const auto n = counts_.rows();
  const auto& k = config_.layers;
  for (std::size_t l = 0; l < k.size(); ++l) {
    layout_.add({"z" + std::to_string(l + 1), n, k[l], Support::Positive});
  }
  layout_.add({"w0", k[0], counts_.cols(), Support::Positive});
  for (std::size_t l = 1; l < k.size(); ++l) {
    layout_.add({"w" + std::to_string(l), k[l], k[l - 1], Support::Positive});
  }
}

double SparseGammaDef::log_joint(const Eigen::VectorXd& z) const { return evaluate(z, nullptr); }

double SparseGammaDef::log_joint_grad(const Eigen::VectorXd& z, Eigen::VectorXd& grad) const {
  grad = Eigen::VectorXd::Zero(layout_.total_size());
  return evaluate(z, &grad);
}

double SparseGammaDef::evaluate(const Eigen::VectorXd& z, Eigen::VectorXd* grad) const {
  require_size(z, layout_.total_size(), name());
  const std::size_t depth = config_.layers.size();
  for (std::size_t b = 0; b < layout_.blocks().size(); ++b) require_positive(block(z, b), name());

  const double az = config_.alpha_z;
  const auto top = config_.top_prior;
  const auto wp = config_.weight_prior;
  const double lg_az = sf::log_gamma(az);
  const double lg_top = sf::log_gamma(top.shape);
  const double lg_w = sf::log_gamma(wp.shape);
  double f = 0.0;

  {
    const auto zt = block(z, z_block(depth - 1));
    f += static_cast<double>(zt.size()) * (top.shape * std::log(top.rate) - lg_top) +
         ((top.shape - 1.0) * zt.array().log() - top.rate * zt.array()).sum();
    if (grad) block(*grad, z_block(depth - 1)).array() += (top.shape - 1.0) / zt.array() - top.rate;
  }

  for (std::size_t l = 0; l + 1 < depth; ++l) {
    const auto zl = block(z, z_block(l));
    const auto zup = block(z, z_block(l + 1));
    const auto w = block(z, w_block(l + 1));
    const Eigen::ArrayXXd m = (zup * w).array();
    const Eigen::ArrayXXd zla = zl.array();
    f += static_cast<double>(zl.size()) * (az * std::log(az) - lg_az) +
         (-az * m.log() + (az - 1.0) * zla.log() - az * zla / m).sum();
    if (grad) {
      block(*grad, z_block(l)).array() += (az - 1.0) / zla - az / m;
      const Eigen::MatrixXd g = (-az / m + az * zla / m.square()).matrix();
      block(*grad, z_block(l + 1)) += g * w.transpose();
      block(*grad, w_block(l + 1)) += zup.transpose() * g;
    }
  }

  for (std::size_t l = 0; l < depth; ++l) {
    const auto w = block(z, w_block(l));
    f += static_cast<double>(w.size()) * (wp.shape * std::log(wp.rate) - lg_w) +
         ((wp.shape - 1.0) * w.array().log() - wp.rate * w.array()).sum();
    if (grad) block(*grad, w_block(l)).array() += (wp.shape - 1.0) / w.array() - wp.rate;
  }

  const auto z1 = block(z, z_block(0));
  const auto w0 = block(z, w_block(0));
  const Eigen::ArrayXXd lambda = (z1 * w0).array();
  const Eigen::ArrayXXd x = counts_.array();
  const Eigen::ArrayXXd mk = mask_.array();
  f += (mk * (x * lambda.log() - lambda)).sum() - log_factorials_;
  if (grad) {
    const Eigen::MatrixXd p = (mk * (x / lambda - 1.0)).matrix();
    block(*grad, z_block(0)) += p * w0.transpose();
    block(*grad, w_block(0)) += z1.transpose() * p;
  }
  if (!std::isfinite(f)) throw NumericalError("sparse_gamma_def: log joint is not finite");
  return f;
}

Eigen::VectorXd SparseGammaDef::prior_mean() const {
  const std::size_t depth = config_.layers.size();
  Eigen::VectorXd mean(layout_.total_size());
  const double w_mean = config_.weight_prior.shape / config_.weight_prior.rate;
  for (std::size_t l = 0; l < depth; ++l) block(mean, w_block(l)).setConstant(w_mean);
  // E[z^(l)] = E[z^(l+1)] E[w^(l)] summed over K_{l+1} parents.
  double z_mean = config_.top_prior.shape / config_.top_prior.rate;
  block(mean, z_block(depth - 1)).setConstant(z_mean);
  for (std::size_t l = depth - 1; l-- > 0;) {
    z_mean *= static_cast<double>(config_.layers[l + 1]) * w_mean;
    block(mean, z_block(l)).setConstant(z_mean);
  }
  return mean;
}

Eigen::MatrixXd SparseGammaDef::rates(const Eigen::VectorXd& z) const {
  require_size(z, layout_.total_size(), name());
  return block(z, z_block(0)) * block(z, w_block(0));
}

double SparseGammaDef::entry_log_likelihood(const Eigen::VectorXd& z, Eigen::Index row, Eigen::Index col,
                                            double value) const {
  check_entry(counts_, row, col);
  require_size(z, layout_.total_size(), name());
  const double rate = block(z, z_block(0)).row(row).dot(block(z, w_block(0)).col(col));
  return log_poisson_pmf(value, rate);
}

DefSample synthesize_def(const SparseGammaDefConfig& config, Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  config.validate();
  if (rows <= 0 || cols <= 0) throw DomainError("synthesize_def: rows and cols must be positive");
  const auto& k = config.layers;
  const std::size_t depth = k.size();
  const double tiny = std::numeric_limits<double>::min();

  std::vector<RowMajorMatrix> w(depth);
  w[0].resize(k[0], cols);
  for (std::size_t l = 1; l < depth; ++l) w[l].resize(k[l], k[l - 1]);
  for (auto& m : w) {
    for (Eigen::Index i = 0; i < m.size(); ++i) {
      m.data()[i] = std::max(sample_gamma(config.weight_prior.shape, config.weight_prior.rate, rng), tiny);
    }
  }

  // Layers are drawn top-down in log space; rates alpha_z / m can be huge.
  std::vector<RowMajorMatrix> zs(depth);
  zs[depth - 1].resize(rows, k[depth - 1]);
  for (Eigen::Index i = 0; i < zs[depth - 1].size(); ++i) {
    zs[depth - 1].data()[i] =
        std::max(std::exp(sample_log_gamma(config.top_prior.shape, config.top_prior.rate, rng)), tiny);
  }
  for (std::size_t l = depth - 1; l-- > 0;) {
    const RowMajorMatrix m = zs[l + 1] * w[l + 1];
    zs[l].resize(rows, k[l]);
    for (Eigen::Index i = 0; i < m.size(); ++i) {
      const double lz = sample_log_gamma(config.alpha_z, 1.0, rng) - std::log(config.alpha_z) + std::log(m.data()[i]);
      zs[l].data()[i] = std::max(std::exp(lz), tiny);
    }
  }

  DefSample out;
  const RowMajorMatrix lambda = zs[0] * w[0];
  out.data.resize(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      out.data(r, c) = static_cast<double>(sample_poisson(lambda(r, c), rng));
    }
  }
  Eigen::Index total = 0;
  for (const auto& m : zs) total += m.size();
  for (const auto& m : w) total += m.size();
  out.latents.resize(total);
  Eigen::Index at = 0;
  for (const auto& m : zs) {
    out.latents.segment(at, m.size()) = Eigen::Map<const Eigen::VectorXd>(m.data(), m.size());
    at += m.size();
  }
  for (const auto& m : w) {
    out.latents.segment(at, m.size()) = Eigen::Map<const Eigen::VectorXd>(m.data(), m.size());
    at += m.size();
  }
  return out;
}

// ------------------------------------------------------------------ beta-gamma MF

void BetaGammaMfConfig::validate() const {
  if (latent_dim <= 0) throw DomainError("beta_gamma_mf: latent_dim must be positive");
  require_gamma(weight_prior, "beta_gamma_mf weight prior");
}

BetaGammaMf::BetaGammaMf(BetaGammaMfConfig config, Eigen::MatrixXd bits, std::optional<Eigen::MatrixXd> mask)
    : config_(config), bits_(std::move(bits)) {
  config_.validate();
  if (bits_.size() == 0) throw DomainError("beta_gamma_mf: empty data");
  for (Eigen::Index i = 0; i < bits_.size(); ++i) {
    const double x = bits_.data()[i];
    if (x != 0.0 && x != 1.0) throw DomainError("beta_gamma_mf: observations must be 0 or 1");
  }
  mask_ = make_mask(mask, bits_);
  layout_.add({"z", bits_.rows(), config_.latent_dim, Support::UnitInterval});
  layout_.add({"w", config_.latent_dim, bits_.cols(), Support::Positive});
}

double BetaGammaMf::log_joint(const Eigen::VectorXd& z) const { return evaluate(z, nullptr); }

double BetaGammaMf::log_joint_grad(const Eigen::VectorXd& z, Eigen::VectorXd& grad) const {
  grad = Eigen::VectorXd::Zero(layout_.total_size());
  return evaluate(z, &grad);
}

Eigen::MatrixXd BetaGammaMf::link(const Eigen::VectorXd& z) const {
  require_size(z, layout_.total_size(), name());
  const Eigen::ArrayXXd zz = block(z, 0).array();
  const Eigen::MatrixXd logit = (zz.log() - (1.0 - zz).log()).matrix();
  return logit * block(z, 1);
}

double BetaGammaMf::evaluate(const Eigen::VectorXd& z, Eigen::VectorXd* grad) const {
  require_size(z, layout_.total_size(), name());
  const auto zb = block(z, 0);
  const auto w = block(z, 1);
  require_unit(zb, name());
  require_positive(w, name());

  const auto wp = config_.weight_prior;
  double f = static_cast<double>(w.size()) * (wp.shape * std::log(wp.rate) - sf::log_gamma(wp.shape)) +
             ((wp.shape - 1.0) * w.array().log() - wp.rate * w.array()).sum();

  const Eigen::ArrayXXd zz = zb.array();
  const Eigen::MatrixXd logit = (zz.log() - (1.0 - zz).log()).matrix();
  const Eigen::MatrixXd eta = logit * w;
  Eigen::MatrixXd resid(eta.rows(), eta.cols());
  for (Eigen::Index c = 0; c < eta.cols(); ++c) {
    for (Eigen::Index r = 0; r < eta.rows(); ++r) {
      const double m = mask_(r, c);
      if (m == 0.0) {
        resid(r, c) = 0.0;
        continue;
      }
      const double e = eta(r, c);
      f += bits_(r, c) * e - log1pexp(e);
      resid(r, c) = bits_(r, c) - sigmoid(e);
    }
  }
  if (grad) {
    block(*grad, 0) = ((resid * w.transpose()).array() / (zz * (1.0 - zz))).matrix();
    block(*grad, 1) = ((wp.shape - 1.0) / w.array() - wp.rate).matrix() + logit.transpose() * resid;
  }
  if (!std::isfinite(f)) throw NumericalError("beta_gamma_mf: log joint is not finite");
  return f;
}

Eigen::VectorXd BetaGammaMf::prior_mean() const {
  Eigen::VectorXd mean(layout_.total_size());
  block(mean, 0).setConstant(0.5);
  block(mean, 1).setConstant(config_.weight_prior.shape / config_.weight_prior.rate);
  return mean;
}

double BetaGammaMf::entry_log_likelihood(const Eigen::VectorXd& z, Eigen::Index row, Eigen::Index col,
                                         double value) const {
  check_entry(bits_, row, col);
  require_size(z, layout_.total_size(), name());
  const auto zb = block(z, 0);
  double eta = 0.0;
  for (Eigen::Index k = 0; k < zb.cols(); ++k) {
    const double v = zb(row, k);
    eta += (std::log(v) - std::log1p(-v)) * block(z, 1)(k, col);
  }
  return value != 0.0 ? -log1pexp(-eta) : -log1pexp(eta);
}

MfSample synthesize_mf(const BetaGammaMfConfig& config, Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  config.validate();
  if (rows <= 0 || cols <= 0) throw DomainError("synthesize_mf: rows and cols must be positive");
  const auto k = config.latent_dim;
  RowMajorMatrix zb(rows, k);
  RowMajorMatrix w(k, cols);
  for (Eigen::Index i = 0; i < zb.size(); ++i) zb.data()[i] = uniform(rng);
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    w.data()[i] = std::max(sample_gamma(config.weight_prior.shape, config.weight_prior.rate, rng),
                           std::numeric_limits<double>::min());
  }
  const Eigen::ArrayXXd zz = zb.array();
  const Eigen::MatrixXd eta = (zz.log() - (1.0 - zz).log()).matrix() * w;
  MfSample out;
  out.data.resize(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) out.data(r, c) = sample_bernoulli(sigmoid(eta(r, c)), rng);
  }
  out.latents.resize(zb.size() + w.size());
  out.latents.head(zb.size()) = Eigen::Map<const Eigen::VectorXd>(zb.data(), zb.size());
  out.latents.tail(w.size()) = Eigen::Map<const Eigen::VectorXd>(w.data(), w.size());
  return out;
}

}  // namespace genrep
