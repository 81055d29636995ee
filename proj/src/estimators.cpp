#include "genrep/estimators.hpp"

#include <cmath>
#include <span>
#include <string>
#include <type_traits>
#include <variant>

#include "genrep/errors.hpp"
#include "genrep/transforms.hpp"

namespace genrep {

namespace {

constexpr int kBoundaryRetries = 16;
constexpr double kMinScoreVariance = 1e-30;

double scalar_dlogq_dz(const FamilyParams& params, double z) {
  return std::visit(
      [z](const auto& p) -> double {
        if constexpr (std::is_same_v<std::decay_t<decltype(p)>, DirichletParams>) {
          throw DomainError("scalar evaluation of a dirichlet factor");
        } else {
          return dlogq_dz(p, z);
        }
      },
      params);
}

Eigen::Vector2d scalar_score(const FamilyParams& params, double z) {
  return std::visit(
      [z](const auto& p) -> Eigen::Vector2d {
        if constexpr (std::is_same_v<std::decay_t<decltype(p)>, DirichletParams>) {
          throw DomainError("scalar evaluation of a dirichlet factor");
        } else {
          return dlogq_dparams(p, z);
        }
      },
      params);
}

std::span<const double> factor_span(const Eigen::VectorXd& z, const FactorBlock& b, Eigen::Index i) {
  return {z.data() + b.latent_offset + i * b.factor_dim, static_cast<std::size_t>(b.factor_dim)};
}

void require_finite(const Eigen::VectorXd& v, const char* what) {
  if (!v.allFinite()) throw NumericalError(std::string(what) + " is not finite");
}

// Overflow in a per-sample integrand happens only for draws at the edge of
// the floating-point support (subnormal gamma draws); it counts as a
// boundary hit and the sample is redrawn.
void require_finite_integrand(const Eigen::VectorXd& v, const char* what) {
  if (!v.allFinite()) throw RangeError(std::string(what) + " overflowed at this sample");
}

/// Draws z ~ q and hands it to `use`, redrawing when the draw lands on a
/// boundary that the model or a transform rejects.
template <typename Fn>
auto with_interior_sample(const MeanField& q, Rng& rng, Fn&& use) {
  std::string last;
  for (int attempt = 0; attempt <= kBoundaryRetries; ++attempt) {
    Eigen::VectorXd z = q.sample(rng);
    try {
      return use(z);
    } catch (const DomainError& e) {
      last = e.what();
    } catch (const RangeError& e) {
      last = e.what();
    }
  }
  throw NumericalError("sample rejected " + std::to_string(kBoundaryRetries + 1) + " times: " + last);
}

struct ScoreSample {
  double f;
  Eigen::VectorXd s;
};

ScoreSample score_sample(const Model& model, const MeanField& q, Rng& rng) {
  return with_interior_sample(q, rng, [&](const Eigen::VectorXd& z) {
    const double f = model.log_joint(z);
    return ScoreSample{f, score(q, z)};
  });
}

bool any_biased(const MeanField& q) {
  for (const auto& b : q.blocks()) {
    if (is_biased(b.transform)) return true;
  }
  return false;
}

}  // namespace

std::string_view to_string(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::GRep: return "grep";
    case EstimatorKind::ScoreFunction: return "score";
    case EstimatorKind::ScoreFunctionCV: return "score_cv";
  }
  return "?";
}

EstimatorKind parse_estimator_kind(std::string_view name) {
  if (name == "grep") return EstimatorKind::GRep;
  if (name == "score") return EstimatorKind::ScoreFunction;
  if (name == "score_cv") return EstimatorKind::ScoreFunctionCV;
  throw DomainError("unknown estimator '" + std::string(name) + "' (expected grep, score or score_cv)");
}

Eigen::VectorXd score(const MeanField& q, const Eigen::VectorXd& z) {
  if (z.size() != q.latent_size()) throw DomainError("score: latent vector has the wrong size");
  Eigen::VectorXd out(q.num_params());
  Eigen::Index at = 0;
  for (const auto& b : q.blocks()) {
    const auto np = b.params_per_factor();
    for (Eigen::Index i = 0; i < b.num_factors; ++i) {
      const FamilyParams p = b.factor(i);
      if (b.factor_dim == 1) {
        out.segment<2>(at) = scalar_score(p, z[b.latent_offset + i]);
      } else {
        out.segment(at, np) = dlogq_dparams(p, factor_span(z, b, i));
      }
      at += np;
    }
  }
  return out;
}

GrepTerms grep_terms(const Model& model, const MeanField& q, const Eigen::VectorXd& z) {
  if (z.size() != q.latent_size()) throw DomainError("grep_terms: latent vector has the wrong size");
  GrepTerms out;
  Eigen::VectorXd grad_f;
  out.f = model.log_joint_grad(z, grad_f);
  out.g_rep.resize(q.num_params());
  out.g_corr.resize(q.num_params());
  const double f = out.f;

  Eigen::Index at = 0;
  for (const auto& b : q.blocks()) {
    const auto np = b.params_per_factor();
    for (Eigen::Index i = 0; i < b.num_factors; ++i) {
      const FamilyParams p = b.factor(i);
      if (b.factor_dim == 1) {
        const auto idx = b.latent_offset + i;
        const double zi = z[idx];
        const ScalarTransformEval t = evaluate_scalar(b.transform, p, zi);
        out.g_rep.segment<2>(at) = grad_f[idx] * t.h;
        out.g_corr.segment<2>(at) = f * (scalar_dlogq_dz(p, zi) * t.h + scalar_score(p, zi) + t.u);
        out.fallbacks += t.fallback ? 1 : 0;
      } else {
        const auto zs = factor_span(z, b, i);
        const TransformEval t = evaluate(b.transform, p, zs);
        const auto gf = grad_f.segment(b.latent_offset + i * b.factor_dim, b.factor_dim);
        out.g_rep.segment(at, np) = t.h.transpose() * gf;
        out.g_corr.segment(at, np) = f * (t.h.transpose() * dlogq_dz(p, zs) + dlogq_dparams(p, zs) + t.u);
        out.fallbacks += t.fallback ? 1 : 0;
      }
      at += np;
    }
  }
  require_finite_integrand(out.g_rep, "g_rep");
  require_finite_integrand(out.g_corr, "g_corr");
  return out;
}

GrepTerms sample_grep_terms(const Model& model, const MeanField& q, Rng& rng, Eigen::VectorXd* z_out) {
  return with_interior_sample(q, rng, [&](const Eigen::VectorXd& z) {
    GrepTerms t = grep_terms(model, q, z);
    if (z_out) *z_out = z;
    return t;
  });
}

GradientEstimate grad_grep(const Model& model, const MeanField& q, int n_samples, Rng& rng) {
  if (n_samples < 1) throw DomainError("grad_grep: n_samples must be at least 1");
  const auto n = q.num_params();
  GradientBreakdown br{Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n), q.entropy_grad()};
  GradientEstimate est;
  est.kind = EstimatorKind::GRep;
  est.n_samples = n_samples;
  est.biased = any_biased(q);
  for (int s = 0; s < n_samples; ++s) {
    const GrepTerms t = sample_grep_terms(model, q, rng);
    br.g_rep += t.g_rep;
    br.g_corr += t.g_corr;
    est.f_values.push_back(t.f);
    est.fallbacks += t.fallbacks;
  }
  br.g_rep /= n_samples;
  br.g_corr /= n_samples;
  est.total = br.g_rep + br.g_corr + br.entropy;
  require_finite(est.total, "G-REP gradient");
  est.breakdown = std::move(br);
  return est;
}

GradientEstimate grad_score_function(const Model& model, const MeanField& q, int n_samples, int cv_samples,
                                     Rng& rng) {
  if (n_samples < 1) throw DomainError("grad_score_function: n_samples must be at least 1");
  if (cv_samples == 1 || cv_samples < 0) {
    throw DomainError("grad_score_function: cv_samples must be 0 or at least 2");
  }
  const auto n = q.num_params();
  Eigen::VectorXd coef = Eigen::VectorXd::Zero(n);
  if (cv_samples > 0) {
    // a_k = Cov(f s_k, s_k) / Var(s_k) on a batch independent of the main one.
    Eigen::MatrixXd s(cv_samples, n);
    Eigen::VectorXd f(cv_samples);
    for (int j = 0; j < cv_samples; ++j) {
      ScoreSample ss = score_sample(model, q, rng);
      f[j] = ss.f;
      s.row(j) = ss.s.transpose();
    }
    const Eigen::MatrixXd fs = s.array().colwise() * f.array();
    const Eigen::RowVectorXd mean_s = s.colwise().mean();
    const Eigen::RowVectorXd mean_fs = fs.colwise().mean();
    const double denom = static_cast<double>(cv_samples - 1);
    for (Eigen::Index k = 0; k < n; ++k) {
      const double var = (s.col(k).array() - mean_s[k]).square().sum() / denom;
      const double cov = ((fs.col(k).array() - mean_fs[k]) * (s.col(k).array() - mean_s[k])).sum() / denom;
      coef[k] = var < kMinScoreVariance ? 0.0 : cov / var;
    }
  }

  GradientEstimate est;
  est.kind = cv_samples > 0 ? EstimatorKind::ScoreFunctionCV : EstimatorKind::ScoreFunction;
  est.n_samples = n_samples;
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(n);
  for (int j = 0; j < n_samples; ++j) {
    const ScoreSample ss = score_sample(model, q, rng);
    acc += (ss.f * ss.s.array() - coef.array() * ss.s.array()).matrix();
    est.f_values.push_back(ss.f);
  }
  acc /= n_samples;
  GradientBreakdown br{Eigen::VectorXd::Zero(n), acc, q.entropy_grad()};
  est.total = br.g_rep + br.g_corr + br.entropy;
  require_finite(est.total, "score-function gradient");
  est.breakdown = std::move(br);
  return est;
}

GradientEstimate estimate_gradient(const Model& model, const MeanField& q, const EstimatorConfig& config,
                                   Rng& rng) {
  switch (config.kind) {
    case EstimatorKind::GRep: return grad_grep(model, q, config.n_samples, rng);
    case EstimatorKind::ScoreFunction: return grad_score_function(model, q, config.n_samples, 0, rng);
    case EstimatorKind::ScoreFunctionCV: return grad_score_function(model, q, config.n_samples, config.cv_samples, rng);
  }
  throw DomainError("unknown estimator kind");
}

ElboEstimate elbo_estimate(const Model& model, const MeanField& q, int n_samples, Rng& rng, EntropyMode mode) {
  if (n_samples < 1) throw DomainError("elbo_estimate: n_samples must be at least 1");
  const double h = mode == EntropyMode::Analytic ? q.entropy() : 0.0;
  double mean = 0.0;
  double m2 = 0.0;
  for (int s = 0; s < n_samples; ++s) {
    const double v = with_interior_sample(q, rng, [&](const Eigen::VectorXd& z) {
      const double f = model.log_joint(z);
      return mode == EntropyMode::Analytic ? f + h : f - q.log_density(z);
    });
    const double delta = v - mean;
    mean += delta / (s + 1);
    m2 += delta * (v - mean);
  }
  ElboEstimate out;
  out.mean = mean;
  out.n_samples = n_samples;
  out.std_error = n_samples > 1 ? std::sqrt(m2 / (n_samples - 1) / n_samples) : 0.0;
  if (!std::isfinite(out.mean)) throw NumericalError("ELBO estimate is not finite");
  return out;
}

VarianceReport estimator_variance(const Model& model, const MeanField& q, const EstimatorConfig& config,
                                  int trials, const Rng& rng, bool repeat_stream) {
  if (trials < 100) throw DomainError("estimator_variance: at least 100 trials are required");
  const auto n = q.num_params();
  VarianceReport rep;
  rep.kind = config.kind;
  rep.n_samples = config.n_samples;
  rep.trials = trials;
  rep.model = std::string(model.name());
  rep.config = std::string(to_string(config.kind)) + ":n=" + std::to_string(config.n_samples);
  rep.components = q.param_names();
  rep.mean = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd m2 = Eigen::VectorXd::Zero(n);
  // Welford updates: identical estimates leave m2 exactly zero.
  for (int t = 0; t < trials; ++t) {
    Rng sub = rng.split(static_cast<std::uint64_t>(repeat_stream ? 0 : t));
    const Eigen::VectorXd g = estimate_gradient(model, q, config, sub).total;
    const Eigen::VectorXd delta = g - rep.mean;
    rep.mean += delta / static_cast<double>(t + 1);
    m2 += (delta.array() * (g - rep.mean).array()).matrix();
  }
  rep.variance = m2 / static_cast<double>(trials - 1);
  return rep;
}

}  // namespace genrep
