#include "genrep/trainer.hpp"

#include <chrono>
#include <cmath>
#include <string>
#include <utility>

namespace genrep {

// ---------------------------------------------------------------- step sizes

void StepSizeConfig::validate() const {
  auto positive = [](double v) { return v > 0.0 && std::isfinite(v); };
  if (!positive(eta)) throw DomainError("step size: eta must be positive");
  if (!positive(kappa)) throw DomainError("step size: kappa must be positive");
  if (!positive(tau)) throw DomainError("step size: tau must be positive");
  if (!(gamma > 0.0 && gamma <= 1.0)) throw DomainError("step size: gamma must lie in (0, 1]");
}

StepSizeSchedule::StepSizeSchedule(StepSizeConfig config) : config_(config) { config_.validate(); }

Eigen::VectorXd StepSizeSchedule::step(const Eigen::VectorXd& grad) {
  if (!grad.allFinite()) throw NumericalError("step size: non-finite gradient component");
  const Eigen::ArrayXd g2 = grad.array().square();
  if (iteration_ == 0) {
    s_ = g2.matrix();
  } else if (s_.size() != grad.size()) {
    throw DomainError("step size: gradient dimension changed between iterations");
  }
  ++iteration_;
  s_ = (config_.gamma * g2 + (1.0 - config_.gamma) * s_.array()).matrix();
  const double decay = std::pow(static_cast<double>(iteration_), -0.5 + config_.kappa);
  return (config_.eta * decay / (config_.tau + s_.array().sqrt())).matrix();
}

// ---------------------------------------------------------------- constraints

double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double inverse_softplus(double v) {
  if (!(v > 0.0) || !std::isfinite(v)) throw DomainError("inverse_softplus: value must be positive and finite");
  // log(exp(v) - 1) = v + log(1 - exp(-v))
  return v + std::log(-std::expm1(-v));
}

double logistic(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

namespace {

void require_size(const Eigen::VectorXd& v, Eigen::Index n, const char* who) {
  if (v.size() != n) {
    throw DomainError(std::string(who) + ": expected " + std::to_string(n) + " values, got " +
                      std::to_string(v.size()));
  }
}

}  // namespace

Eigen::VectorXd ParamMap::constrain(const Eigen::VectorXd& raw) const {
  require_size(raw, size(), "constrain");
  Eigen::VectorXd v(raw.size());
  for (Eigen::Index k = 0; k < raw.size(); ++k) {
    v[k] = coords_[static_cast<std::size_t>(k)] == Coordinate::Positive ? softplus(raw[k]) : raw[k];
  }
  return v;
}

Eigen::VectorXd ParamMap::unconstrain(const Eigen::VectorXd& v) const {
  require_size(v, size(), "unconstrain");
  Eigen::VectorXd raw(v.size());
  for (Eigen::Index k = 0; k < v.size(); ++k) {
    raw[k] = coords_[static_cast<std::size_t>(k)] == Coordinate::Positive ? inverse_softplus(v[k]) : v[k];
  }
  return raw;
}

Eigen::VectorXd ParamMap::chain_grad(const Eigen::VectorXd& grad_v, const Eigen::VectorXd& raw) const {
  require_size(grad_v, size(), "chain_grad");
  require_size(raw, size(), "chain_grad");
  Eigen::VectorXd out(raw.size());
  for (Eigen::Index k = 0; k < raw.size(); ++k) {
    out[k] = coords_[static_cast<std::size_t>(k)] == Coordinate::Positive ? grad_v[k] * logistic(raw[k]) : grad_v[k];
  }
  return out;
}

Eigen::Vector2d gamma_shape_mean_chain(double shape, double mean, const Eigen::Vector2d& grad_shape_rate) {
  if (!(mean > 0.0) || !std::isfinite(mean)) throw DomainError("gamma_shape_mean_chain: mean must be positive");
  const double d_rate = grad_shape_rate[1];
  return {grad_shape_rate[0] + d_rate / mean, -d_rate * shape / (mean * mean)};
}

Parameterization::Parameterization(const MeanField& q) {
  std::vector<Coordinate> coords;
  for (const auto& b : q.blocks()) {
    for (Eigen::Index i = 0; i < b.num_factors; ++i) {
      switch (b.family) {
        case FamilyKind::Gamma:
          coords.insert(coords.end(), {Coordinate::Positive, Coordinate::Positive});
          shape_mean_.insert(shape_mean_.end(), {true, false});
          break;
        case FamilyKind::LogNormal:
          coords.insert(coords.end(), {Coordinate::Unconstrained, Coordinate::Positive});
          shape_mean_.insert(shape_mean_.end(), {false, false});
          break;
        case FamilyKind::Beta:
        case FamilyKind::Dirichlet:
          for (Eigen::Index k = 0; k < b.params_per_factor(); ++k) {
            coords.push_back(Coordinate::Positive);
            shape_mean_.push_back(false);
          }
          break;
      }
    }
  }
  map_ = ParamMap(std::move(coords));
}

Eigen::VectorXd Parameterization::raw_from(const MeanField& q) const {
  Eigen::VectorXd v = q.flat_params();
  require_size(v, map_.size(), "raw_from");
  for (Eigen::Index k = 0; k < v.size(); ++k) {
    if (shape_mean_[static_cast<std::size_t>(k)]) v[k + 1] = v[k] / v[k + 1];
  }
  return map_.unconstrain(v);
}

void Parameterization::apply(const Eigen::VectorXd& raw, MeanField& q) const {
  Eigen::VectorXd v = map_.constrain(raw);
  for (Eigen::Index k = 0; k < v.size(); ++k) {
    if (shape_mean_[static_cast<std::size_t>(k)]) v[k + 1] = v[k] / v[k + 1];
  }
  q.set_flat_params(v);
}

Eigen::VectorXd Parameterization::raw_gradient(const Eigen::VectorXd& raw, const MeanField& q,
                                               const Eigen::VectorXd& grad) const {
  require_size(grad, map_.size(), "raw_gradient");
  const Eigen::VectorXd natural = q.flat_params();
  Eigen::VectorXd g = grad;
  for (Eigen::Index k = 0; k < g.size(); ++k) {
    if (!shape_mean_[static_cast<std::size_t>(k)]) continue;
    const double shape = natural[k];
    const double mean = shape / natural[k + 1];
    g.segment<2>(k) = gamma_shape_mean_chain(shape, mean, grad.segment<2>(k));
  }
  return map_.chain_grad(g, raw);
}

// ---------------------------------------------------------------- fit

FitResult fit(const Model& model, MeanField q, const TrainOptions& options, Rng& rng) {
  if (options.iterations < 0) throw DomainError("fit: iterations must be non-negative");
  if (q.latent_size() != model.layout().total_size()) {
    throw DomainError("fit: variational family does not cover the model's latent layout");
  }
  StepSizeSchedule schedule(options.step);
  const Parameterization param(q);
  Eigen::VectorXd raw = param.raw_from(q);

  FitResult result;
  result.trace.reserve(static_cast<std::size_t>(options.iterations));
  const auto start = std::chrono::steady_clock::now();

  for (long it = 1; it <= options.iterations; ++it) {
    TraceRow row;
    row.iteration = it;
    try {
      const GradientEstimate est = estimate_gradient(model, q, options.estimator, rng);
      double f_mean = 0.0;
      for (double f : est.f_values) f_mean += f;
      f_mean /= static_cast<double>(est.f_values.size());
      row.elbo = f_mean + q.entropy();

      const Eigen::VectorXd g = param.raw_gradient(raw, q, est.total);
      if (!g.allFinite()) throw NumericalError("non-finite gradient");
      row.grad_norm = g.norm();
      const Eigen::VectorXd rho = schedule.step(g);
      const Eigen::VectorXd next = raw + (rho.array() * g.array()).matrix();
      if (!next.allFinite()) throw NumericalError("non-finite parameters");
      param.apply(next, q);
      raw = next;
      result.fallbacks += est.fallbacks;
    } catch (const std::runtime_error& e) {
      result.q = q;
      throw FitAborted("fit aborted at iteration " + std::to_string(it) + ": " + e.what(), std::move(result));
    } catch (const std::domain_error& e) {
      result.q = q;
      throw FitAborted("fit aborted at iteration " + std::to_string(it) + ": " + e.what(), std::move(result));
    }
    if (options.record_wall_time) {
      row.elapsed_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
    result.trace.push_back(row);
    if (options.on_iteration) options.on_iteration(row);
  }
  result.q = std::move(q);
  return result;
}

}  // namespace genrep
