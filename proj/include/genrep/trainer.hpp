#pragma once

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "genrep/errors.hpp"
#include "genrep/estimators.hpp"
#include "genrep/models.hpp"
#include "genrep/random.hpp"
#include "genrep/variational.hpp"

namespace genrep {

// ---------------------------------------------------------------- step sizes

struct StepSizeConfig {
  double eta = 1.0;
  double kappa = 1e-16;
  double tau = 1.0;
  double gamma = 0.1;

  void validate() const;
};

/// rho_k = eta * i^(-1/2 + kappa) / (tau + sqrt(s_k)) with
/// s_k = gamma g_k^2 + (1 - gamma) s_k(previous). Before the first step s is
/// set to the first gradient squared.
class StepSizeSchedule {
 public:
  explicit StepSizeSchedule(StepSizeConfig config = {});

  /// Advances the iteration counter and returns the per-component step.
  /// Throws NumericalError on a non-finite gradient component.
  Eigen::VectorXd step(const Eigen::VectorXd& grad);

  long iteration() const { return iteration_; }
  const Eigen::VectorXd& second_moment() const { return s_; }
  const StepSizeConfig& config() const { return config_; }

 private:
  StepSizeConfig config_;
  long iteration_ = 0;
  Eigen::VectorXd s_;
};

// ---------------------------------------------------------------- constraints

double softplus(double x);

/// Inverse of softplus; DomainError unless v > 0.
double inverse_softplus(double v);

double logistic(double x);

enum class Coordinate { Positive, Unconstrained };

/// Positive components are stored as v' with v = softplus(v').
class ParamMap {
 public:
  ParamMap() = default;
  explicit ParamMap(std::vector<Coordinate> coords) : coords_(std::move(coords)) {}

  Eigen::Index size() const { return static_cast<Eigen::Index>(coords_.size()); }
  const std::vector<Coordinate>& coords() const { return coords_; }

  Eigen::VectorXd constrain(const Eigen::VectorXd& raw) const;
  Eigen::VectorXd unconstrain(const Eigen::VectorXd& v) const;

  /// Gradient with respect to raw coordinates given the gradient with
  /// respect to constrained ones.
  Eigen::VectorXd chain_grad(const Eigen::VectorXd& grad_v, const Eigen::VectorXd& raw) const;

 private:
  std::vector<Coordinate> coords_;
};

/// Converts (d/d shape at fixed rate, d/d rate) into (d/d shape at fixed
/// mean, d/d mean) under rate = shape / mean. DomainError unless mean > 0.
Eigen::Vector2d gamma_shape_mean_chain(double shape, double mean, const Eigen::Vector2d& grad_shape_rate);

/// The coordinates the optimizer works in. Gamma factors are optimized in
/// (shape, mean); every positive quantity goes through softplus; the
/// log-normal location is left unconstrained.
class Parameterization {
 public:
  explicit Parameterization(const MeanField& q);

  const ParamMap& map() const { return map_; }

  /// Optimization coordinates before the softplus map.
  Eigen::VectorXd raw_from(const MeanField& q) const;
  void apply(const Eigen::VectorXd& raw, MeanField& q) const;

  /// Gradient in raw coordinates from the gradient in q's own parameters.
  Eigen::VectorXd raw_gradient(const Eigen::VectorXd& raw, const MeanField& q, const Eigen::VectorXd& grad) const;

 private:
  std::vector<bool> shape_mean_;  // flags the first entry of each gamma pair
  ParamMap map_;
};

// ---------------------------------------------------------------- fit

struct TraceRow {
  long iteration = 0;
  double elbo = 0.0;
  double grad_norm = 0.0;
  double elapsed_seconds = 0.0;
};

struct TrainOptions {
  long iterations = 1000;
  StepSizeConfig step;
  EstimatorConfig estimator;
  /// Wall time makes traces differ between runs, so it is opt-in; when off
  /// the elapsed column is 0.
  bool record_wall_time = false;
  std::function<void(const TraceRow&)> on_iteration;
};

struct FitResult {
  MeanField q;
  std::vector<TraceRow> trace;
  long fallbacks = 0;
};

/// Raised when a gradient or parameter becomes non-finite or invalid. Holds
/// everything recorded up to the failing iteration.
class FitAborted : public NumericalError {
 public:
  FitAborted(const std::string& what, FitResult partial)
      : NumericalError(what), partial_(std::move(partial)) {}
  const FitResult& partial() const { return partial_; }

 private:
  FitResult partial_;
};

/// Stochastic gradient ascent on the ELBO. Each iteration draws the
/// configured gradient estimate, records the ELBO from the same samples
/// (mean f plus the analytic entropy), sets the step sizes and adds
/// rho * gradient to the raw coordinates.
FitResult fit(const Model& model, MeanField q, const TrainOptions& options, Rng& rng);

}  // namespace genrep
