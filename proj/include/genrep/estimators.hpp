#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "genrep/models.hpp"
#include "genrep/random.hpp"
#include "genrep/variational.hpp"

namespace genrep {

enum class EstimatorKind { GRep, ScoreFunction, ScoreFunctionCV };

std::string_view to_string(EstimatorKind kind);

/// Accepts "grep", "score", "score_cv".
EstimatorKind parse_estimator_kind(std::string_view name);

struct GradientBreakdown {
  Eigen::VectorXd g_rep;
  Eigen::VectorXd g_corr;
  Eigen::VectorXd entropy;
};

/// Gradient of the ELBO with respect to q's flat parameters.
struct GradientEstimate {
  EstimatorKind kind = EstimatorKind::GRep;
  int n_samples = 0;
  Eigen::VectorXd total;
  std::optional<GradientBreakdown> breakdown;
  std::vector<double> f_values;  // f(z) at each main-batch sample
  bool biased = false;
  int fallbacks = 0;  // adaptive beta samples that reverted to the stddev scale
};

/// Per-sample G-REP integrands at a fixed z (entropy excluded).
struct GrepTerms {
  double f = 0.0;
  Eigen::VectorXd g_rep;
  Eigen::VectorXd g_corr;
  int fallbacks = 0;
};

GrepTerms grep_terms(const Model& model, const MeanField& q, const Eigen::VectorXd& z);

/// d log q(z) / d v for every flat parameter.
Eigen::VectorXd score(const MeanField& q, const Eigen::VectorXd& z);

/// Draws z ~ q, redrawing up to 16 times when the model or transform rejects
/// a boundary value; then NumericalError.
GrepTerms sample_grep_terms(const Model& model, const MeanField& q, Rng& rng, Eigen::VectorXd* z_out = nullptr);

GradientEstimate grad_grep(const Model& model, const MeanField& q, int n_samples, Rng& rng);

/// Score-function gradient. cv_samples = 0 gives the plain estimator;
/// cv_samples >= 2 fits per-component control-variate coefficients on a
/// separate batch of that size.
GradientEstimate grad_score_function(const Model& model, const MeanField& q, int n_samples, int cv_samples,
                                     Rng& rng);

struct EstimatorConfig {
  EstimatorKind kind = EstimatorKind::GRep;
  int n_samples = 1;
  int cv_samples = 30;
};

GradientEstimate estimate_gradient(const Model& model, const MeanField& q, const EstimatorConfig& config,
                                   Rng& rng);

enum class EntropyMode { MonteCarlo, Analytic };

struct ElboEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  int n_samples = 0;
};

/// Mean of f(z) - log q(z) (MonteCarlo) or of f(z) plus the closed-form
/// entropy (Analytic).
ElboEstimate elbo_estimate(const Model& model, const MeanField& q, int n_samples, Rng& rng,
                           EntropyMode mode = EntropyMode::MonteCarlo);

struct VarianceReport {
  EstimatorKind kind = EstimatorKind::GRep;
  int n_samples = 0;
  int trials = 0;
  std::string model;
  std::string config;
  std::vector<std::string> components;
  Eigen::VectorXd mean;
  Eigen::VectorXd variance;
};

/// Runs `trials` independent estimates, trial t drawing from rng.split(t).
/// With `repeat_stream` every trial reuses substream 0, so the estimates are
/// identical and the variance is zero.
VarianceReport estimator_variance(const Model& model, const MeanField& q, const EstimatorConfig& config,
                                  int trials, const Rng& rng, bool repeat_stream = false);

}  // namespace genrep
