#include "genrep/variational.hpp"

#include <cmath>
#include <span>
#include <string>
#include <utility>

#include "genrep/errors.hpp"

namespace genrep {

namespace {

Eigen::Index params_for(FamilyKind family, Eigen::Index dim) { return family == FamilyKind::Dirichlet ? dim : 2; }

std::vector<std::string> param_labels(FamilyKind family, Eigen::Index dim) {
  switch (family) {
    case FamilyKind::Gamma: return {"shape", "rate"};
    case FamilyKind::Beta: return {"alpha", "beta"};
    case FamilyKind::LogNormal: return {"loc", "scale"};
    case FamilyKind::Dirichlet: {
      std::vector<std::string> out;
      for (Eigen::Index k = 0; k < dim; ++k) out.push_back("alpha" + std::to_string(k));
      return out;
    }
  }
  return {};
}

std::span<const double> factor_span(const Eigen::VectorXd& z, const FactorBlock& b, Eigen::Index i) {
  return {z.data() + b.latent_offset + i * b.factor_dim, static_cast<std::size_t>(b.factor_dim)};
}

}  // namespace

FamilyParams FactorBlock::factor(Eigen::Index i) const {
  const Eigen::VectorXd row = params.row(i).transpose();
  return from_vector(family, {row.data(), static_cast<std::size_t>(row.size())});
}

void FactorBlock::set_factor(Eigen::Index i, const FamilyParams& p) {
  if (family_kind(p) != family) throw DomainError("set_factor: family mismatch in block '" + name + "'");
  const Eigen::VectorXd v = to_vector(p);
  if (v.size() != params.cols()) throw DomainError("set_factor: parameter count mismatch in block '" + name + "'");
  params.row(i) = v.transpose();
}

FamilyChoice default_choice(Support support) {
  switch (support) {
    case Support::Positive: return {FamilyKind::Gamma, TransformKind::GammaStd};
    case Support::UnitInterval: return {FamilyKind::Beta, TransformKind::BetaLogitStdDev};
    case Support::Simplex: return {FamilyKind::Dirichlet, TransformKind::DirichletFullCov};
  }
  throw DomainError("unknown support");
}

namespace {

bool family_fits(FamilyKind family, Support support) {
  switch (support) {
    case Support::Positive: return family == FamilyKind::Gamma || family == FamilyKind::LogNormal;
    case Support::UnitInterval: return family == FamilyKind::Beta;
    case Support::Simplex: return family == FamilyKind::Dirichlet;
  }
  return false;
}

}  // namespace

MeanField MeanField::for_model(const Model& model, const std::map<std::string, FamilyChoice>& overrides) {
  const auto& layout = model.layout();
  for (const auto& [name, choice] : overrides) {
    if (!layout.find(name)) throw DomainError("no latent block named '" + name + "'");
  }
  const Eigen::VectorXd prior = model.prior_mean();
  MeanField q;
  for (std::size_t b = 0; b < layout.blocks().size(); ++b) {
    const auto& lb = layout.blocks()[b];
    const auto it = overrides.find(lb.name);
    const FamilyChoice choice = it != overrides.end() ? it->second : default_choice(lb.support);
    if (!family_fits(choice.family, lb.support)) {
      throw DomainError("family '" + std::string(to_string(choice.family)) + "' does not match the support of block '" +
                        lb.name + "'");
    }
    FactorBlock fb;
    fb.name = lb.name;
    fb.family = choice.family;
    fb.transform = choice.transform;
    fb.latent_offset = layout.offset(b);
    fb.num_factors = lb.num_factors();
    fb.factor_dim = lb.factor_dim();
    fb.params.resize(fb.num_factors, params_for(fb.family, fb.factor_dim));
    for (Eigen::Index i = 0; i < fb.num_factors; ++i) {
      const double m = prior[fb.latent_offset + i * fb.factor_dim];
      switch (fb.family) {
        case FamilyKind::Gamma: fb.params.row(i) << 1.0, 1.0 / m; break;
        case FamilyKind::LogNormal: fb.params.row(i) << std::log(m) - 0.5, 1.0; break;
        case FamilyKind::Beta: fb.params.row(i) << 1.0, 1.0; break;
        case FamilyKind::Dirichlet: fb.params.row(i).setOnes(); break;
      }
    }
    q.add_block(std::move(fb));
  }
  return q;
}

MeanField MeanField::single(const FamilyParams& params, TransformKind transform, std::string name) {
  FactorBlock fb;
  fb.name = std::move(name);
  fb.family = family_kind(params);
  fb.transform = transform;
  fb.num_factors = 1;
  fb.factor_dim = latent_dim(params);
  fb.params = to_vector(params).transpose();
  MeanField q;
  q.add_block(std::move(fb));
  return q;
}

void MeanField::add_block(FactorBlock block) {
  if (block.latent_offset != latent_size_) {
    throw DomainError("block '" + block.name + "' does not start where the previous block ends");
  }
  if (!compatible(block.transform, block.family)) {
    throw DomainError("transform '" + std::string(to_string(block.transform)) + "' cannot be used with family '" +
                      std::string(to_string(block.family)) + "'");
  }
  if (block.params.rows() != block.num_factors ||
      block.params.cols() != params_for(block.family, block.factor_dim)) {
    throw DomainError("block '" + block.name + "' has a parameter matrix of the wrong shape");
  }
  if (block.family != FamilyKind::Dirichlet && block.factor_dim != 1) {
    throw DomainError("scalar family block '" + block.name + "' must have factor_dim 1");
  }
  for (Eigen::Index i = 0; i < block.num_factors; ++i) validate(block.factor(i));
  latent_size_ += block.num_factors * block.factor_dim;
  blocks_.push_back(std::move(block));
}

Eigen::Index MeanField::num_params() const {
  Eigen::Index n = 0;
  for (const auto& b : blocks_) n += b.params.size();
  return n;
}

Eigen::VectorXd MeanField::flat_params() const {
  Eigen::VectorXd out(num_params());
  Eigen::Index at = 0;
  for (const auto& b : blocks_) {
    for (Eigen::Index i = 0; i < b.num_factors; ++i) {
      out.segment(at, b.params.cols()) = b.params.row(i).transpose();
      at += b.params.cols();
    }
  }
  return out;
}

void MeanField::set_flat_params(const Eigen::VectorXd& v) {
  if (v.size() != num_params()) {
    throw DomainError("set_flat_params: expected " + std::to_string(num_params()) + " values, got " +
                      std::to_string(v.size()));
  }
  // Validate everything before touching the stored parameters.
  std::vector<Eigen::MatrixXd> next;
  next.reserve(blocks_.size());
  Eigen::Index at = 0;
  for (const auto& b : blocks_) {
    Eigen::MatrixXd m(b.params.rows(), b.params.cols());
    for (Eigen::Index i = 0; i < b.num_factors; ++i) {
      const Eigen::VectorXd row = v.segment(at, m.cols());
      validate(from_vector(b.family, {row.data(), static_cast<std::size_t>(row.size())}));
      m.row(i) = row.transpose();
      at += m.cols();
    }
    next.push_back(std::move(m));
  }
  for (std::size_t b = 0; b < blocks_.size(); ++b) blocks_[b].params = std::move(next[b]);
}

std::vector<std::string> MeanField::param_names() const {
  std::vector<std::string> out;
  out.reserve(static_cast<std::size_t>(num_params()));
  for (const auto& b : blocks_) {
    const auto labels = param_labels(b.family, b.factor_dim);
    for (Eigen::Index i = 0; i < b.num_factors; ++i) {
      for (const auto& l : labels) out.push_back(b.name + "[" + std::to_string(i) + "]." + l);
    }
  }
  return out;
}

Eigen::VectorXd MeanField::sample(Rng& rng) const {
  Eigen::VectorXd z(latent_size_);
  for (const auto& b : blocks_) {
    for (Eigen::Index i = 0; i < b.num_factors; ++i) {
      const auto at = b.latent_offset + i * b.factor_dim;
      const auto& row = b.params.row(i);
      switch (b.family) {
        case FamilyKind::Gamma: z[at] = sample_gamma(row[0], row[1], rng); break;
        case FamilyKind::Beta: z[at] = sample_beta(row[0], row[1], rng); break;
        case FamilyKind::LogNormal: z[at] = sample_lognormal(row[0], row[1], rng); break;
        case FamilyKind::Dirichlet: z.segment(at, b.factor_dim) = sample_dirichlet(row.transpose(), rng); break;
      }
    }
  }
  return z;
}

double MeanField::log_density(const Eigen::VectorXd& z) const {
  if (z.size() != latent_size_) throw DomainError("log_density: latent vector has the wrong size");
  double s = 0.0;
  for (const auto& b : blocks_) {
    for (Eigen::Index i = 0; i < b.num_factors; ++i) s += genrep::log_density(b.factor(i), factor_span(z, b, i));
  }
  return s;
}

double MeanField::entropy() const {
  double s = 0.0;
  for (const auto& b : blocks_) {
    for (Eigen::Index i = 0; i < b.num_factors; ++i) s += genrep::entropy(b.factor(i));
  }
  return s;
}

Eigen::VectorXd MeanField::entropy_grad() const {
  Eigen::VectorXd out(num_params());
  Eigen::Index at = 0;
  for (const auto& b : blocks_) {
    for (Eigen::Index i = 0; i < b.num_factors; ++i) {
      out.segment(at, b.params.cols()) = dentropy_dparams(b.factor(i));
      at += b.params.cols();
    }
  }
  return out;
}

Eigen::VectorXd MeanField::mean() const {
  Eigen::VectorXd m(latent_size_);
  for (const auto& b : blocks_) {
    for (Eigen::Index i = 0; i < b.num_factors; ++i) {
      const auto at = b.latent_offset + i * b.factor_dim;
      const auto& row = b.params.row(i);
      switch (b.family) {
        case FamilyKind::Gamma: m[at] = row[0] / row[1]; break;
        case FamilyKind::Beta: m[at] = row[0] / (row[0] + row[1]); break;
        case FamilyKind::LogNormal: m[at] = std::exp(row[0] + 0.5 * row[1] * row[1]); break;
        case FamilyKind::Dirichlet: m.segment(at, b.factor_dim) = row.transpose() / row.sum(); break;
      }
    }
  }
  return m;
}

}  // namespace genrep
