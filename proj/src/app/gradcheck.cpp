#include "genrep/app/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <span>

#include "genrep/distributions.hpp"
#include "genrep/trainer.hpp"
#include "genrep/transforms.hpp"

namespace genrep::app {

namespace {

constexpr double kRelStep = 1e-3;

Eigen::Index pick(Eigen::Index n, Rng& rng) {
  return std::min<Eigen::Index>(static_cast<Eigen::Index>(uniform(rng) * static_cast<double>(n)), n - 1);
}

std::span<const double> view(const Eigen::VectorXd& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

/// Step for a strictly positive coordinate.
double positive_step(double v) { return kRelStep * v; }

/// Step for a coordinate that must stay in (0, 1).
double unit_step(double v) { return kRelStep * std::min(v, 1.0 - v); }

double free_step(double v) { return kRelStep * std::max(std::abs(v), 1.0); }

/// Step for component j of a family's parameter vector; every parameter is
/// positive except the log-normal location.
double param_step(FamilyKind family, Eigen::Index j, double v) {
  return family == FamilyKind::LogNormal && j == 0 ? free_step(v) : positive_step(v);
}

class Tracker {
 public:
  Tracker(std::string name, double tolerance) { result_.name = std::move(name), result_.tolerance = tolerance; }

  void compare(double analytic, double numeric) {
    const double e = relative_error(analytic, numeric);
    result_.max_rel_error = std::isnan(e) ? INFINITY : std::max(result_.max_rel_error, e);
  }
  void point() { ++result_.points; }

  CheckResult finish() {
    result_.pass = result_.max_rel_error < result_.tolerance;
    return result_;
  }

 private:
  CheckResult result_;
};

void transform_checks(const MeanField& q, int points, double tol, Rng& rng, std::vector<CheckResult>& out) {
  for (const auto& b : q.blocks()) {
    if (b.transform == TransformKind::BetaLogitAdaptive) {
      Tracker t("transform-solve-residual:" + b.name + ":" + std::string(to_string(b.transform)), tol);
      for (int n = 0; n < points; ++n) {
        const Eigen::VectorXd z = q.sample(rng);
        const Eigen::Index i = pick(b.num_factors, rng);
        const auto p = std::get<BetaParams>(b.factor(i));
        const double zi = z[b.latent_offset + i];
        const auto ev = evaluate_scalar(b.transform, p, zi);
        const double a = dlogq_dz(p, zi);
        const Eigen::Vector2d s = dlogq_dparams(p, zi);
        for (int j = 0; j < 2; ++j) {
          const double residual = a * ev.h[j] + s[j] + ev.u[j];
          const double scale = std::max({std::abs(a * ev.h[j]), std::abs(s[j]), std::abs(ev.u[j]), 1.0});
          // A fallback sample uses the stddev scale and is not expected to zero the residual.
          if (!ev.fallback) t.compare(residual / scale, 0.0);
        }
        t.point();
      }
      out.push_back(t.finish());
      continue;
    }
    Tracker th("transform-h:" + b.name + ":" + std::string(to_string(b.transform)), tol);
    Tracker tu("transform-u:" + b.name + ":" + std::string(to_string(b.transform)), tol);
    for (int n = 0; n < points; ++n) {
      const Eigen::VectorXd z = q.sample(rng);
      const Eigen::Index i = pick(b.num_factors, rng);
      const FamilyParams p = b.factor(i);
      const Eigen::VectorXd zi = z.segment(b.latent_offset + i * b.factor_dim, b.factor_dim);
      const TransformEval ev = evaluate(b.transform, p, view(zi));
      const Eigen::VectorXd v = to_vector(p);
      for (Eigen::Index j = 0; j < v.size(); ++j) {
        auto with = [&](double x) {
          Eigen::VectorXd w = v;
          w[j] = x;
          return from_vector(b.family, view(w));
        };
        const double h = param_step(b.family, j, v[j]);
        for (Eigen::Index k = 0; k < zi.size(); ++k) {
          const double fd = central_difference(
              [&](double x) { return forward(b.transform, with(x), view(ev.eps))[k]; }, v[j], h);
          th.compare(ev.h(k, j), fd);
        }
        const double fd = central_difference(
            [&](double x) { return log_abs_det_jacobian(b.transform, with(x), view(ev.eps)); }, v[j], h);
        tu.compare(ev.u[j], fd);
      }
      th.point();
      tu.point();
    }
    out.push_back(th.finish());
    out.push_back(tu.finish());
  }
}

void model_check(const Model& model, const MeanField& q, int points, double tol, Rng& rng,
                 std::vector<CheckResult>& out) {
  Tracker t("model-gradient:" + std::string(model.name()), tol);
  const auto& layout = model.layout();
  Eigen::VectorXd grad;
  for (int n = 0; n < points; ++n) {
    Eigen::VectorXd z = q.sample(rng);
    const std::size_t b = static_cast<std::size_t>(pick(static_cast<Eigen::Index>(layout.blocks().size()), rng));
    const Eigen::Index c = layout.offset(b) + pick(layout.blocks()[b].size(), rng);
    model.log_joint_grad(z, grad);
    const double z0 = z[c];
    const double h = layout.blocks()[b].support == Support::UnitInterval ? unit_step(z0) : positive_step(z0);
    const double fd = central_difference(
        [&](double x) {
          Eigen::VectorXd zz = z;
          zz[c] = x;
          return model.log_joint(zz);
        },
        z0, h);
    t.compare(grad[c], fd);
    t.point();
  }
  out.push_back(t.finish());
}

void family_checks(const MeanField& q, int points, double tol, Rng& rng, std::vector<CheckResult>& out) {
  for (const auto& b : q.blocks()) {
    const std::string suffix = b.name + ":" + std::string(to_string(b.family));
    Tracker ts("score:" + suffix, tol);
    Tracker tz("dlogq-dz:" + suffix, tol);
    for (int n = 0; n < points; ++n) {
      const Eigen::VectorXd z = q.sample(rng);
      const Eigen::Index i = pick(b.num_factors, rng);
      const FamilyParams p = b.factor(i);
      const Eigen::VectorXd zi = z.segment(b.latent_offset + i * b.factor_dim, b.factor_dim);
      const Eigen::VectorXd v = to_vector(p);
      const Eigen::VectorXd s = dlogq_dparams(p, view(zi));
      for (Eigen::Index j = 0; j < v.size(); ++j) {
        const double fd = central_difference(
            [&](double x) {
              Eigen::VectorXd w = v;
              w[j] = x;
              return log_density(from_vector(b.family, view(w)), view(zi));
            },
            v[j], param_step(b.family, j, v[j]));
        ts.compare(s[j], fd);
      }
      const Eigen::VectorXd dz = dlogq_dz(p, view(zi));
      for (Eigen::Index k = 0; k < zi.size(); ++k) {
        const double h = b.family == FamilyKind::Beta ? unit_step(zi[k]) : positive_step(zi[k]);
        const double fd = central_difference(
            [&](double x) {
              Eigen::VectorXd zz = zi;
              zz[k] = x;
              return log_density(p, view(zz));
            },
            zi[k], h);
        tz.compare(dz[k], fd);
      }
      ts.point();
      tz.point();
    }
    out.push_back(ts.finish());
    out.push_back(tz.finish());
  }
}

struct FlatIndex {
  std::size_t block;
  Eigen::Index factor;
  Eigen::Index param;
};

void entropy_checks(const MeanField& q, int points, double tol, Rng& rng, std::vector<CheckResult>& out) {
  const Eigen::VectorXd v = q.flat_params();
  const Eigen::VectorXd grad = q.entropy_grad();
  std::vector<FlatIndex> where;
  for (std::size_t b = 0; b < q.blocks().size(); ++b) {
    const auto& blk = q.blocks()[b];
    for (Eigen::Index i = 0; i < blk.num_factors; ++i) {
      for (Eigen::Index j = 0; j < blk.params_per_factor(); ++j) where.push_back({b, i, j});
    }
  }
  // Entropy is a sum over factors, so only the factor owning the perturbed
  // coordinate is differenced; the full sum would bury small components in
  // rounding error.
  MeanField probe = q;
  auto factor_entropy = [&](const FlatIndex& at) { return entropy(probe.blocks()[at.block].factor(at.factor)); };

  Tracker te("entropy-gradient", tol);
  for (int n = 0; n < points; ++n) {
    const Eigen::Index c = pick(v.size(), rng);
    const FlatIndex at = where[static_cast<std::size_t>(c)];
    const double fd = central_difference(
        [&](double x) {
          Eigen::VectorXd w = v;
          w[c] = x;
          probe.set_flat_params(w);
          return factor_entropy(at);
        },
        v[c], param_step(q.blocks()[at.block].family, at.param, v[c]));
    te.compare(grad[c], fd);
    te.point();
  }
  out.push_back(te.finish());

  Tracker tc("chain-rule:entropy", tol);
  const Parameterization param(q);
  const Eigen::VectorXd raw = param.raw_from(q);
  const Eigen::VectorXd raw_grad = param.raw_gradient(raw, q, grad);
  for (int n = 0; n < points; ++n) {
    const Eigen::Index c = pick(raw.size(), rng);
    const FlatIndex at = where[static_cast<std::size_t>(c)];
    const double fd = central_difference(
        [&](double x) {
          Eigen::VectorXd r = raw;
          r[c] = x;
          param.apply(r, probe);
          return factor_entropy(at);
        },
        raw[c], free_step(raw[c]));
    tc.compare(raw_grad[c], fd);
    tc.point();
  }
  out.push_back(tc.finish());
}

void toy_checks(const Model& model, const MeanField& q, double tol, std::vector<CheckResult>& out) {
  const auto& b = q.blocks().front();
  const Eigen::VectorXd v = to_vector(b.factor(0));
  Tracker t("analytic-elbo-gradient:" + std::string(model.name()), tol);
  std::function<double(const Eigen::VectorXd&)> elbo;
  Eigen::Vector2d grad;
  if (const auto* gp = dynamic_cast<const GammaPoissonToy*>(&model);
      gp && (b.family == FamilyKind::Gamma || b.family == FamilyKind::LogNormal)) {
    grad = gp->analytic_elbo_grad(b.factor(0));
    elbo = [gp, &b](const Eigen::VectorXd& w) { return gp->analytic_elbo(from_vector(b.family, view(w))); };
  } else if (const auto* bb = dynamic_cast<const BetaBernoulliToy*>(&model); bb && b.family == FamilyKind::Beta) {
    grad = bb->analytic_elbo_grad(std::get<BetaParams>(b.factor(0)));
    elbo = [bb](const Eigen::VectorXd& w) { return bb->analytic_elbo(BetaParams{w[0], w[1]}); };
  } else {
    return;
  }
  for (Eigen::Index j = 0; j < 2; ++j) {
    const double fd = central_difference(
        [&](double x) {
          Eigen::VectorXd w = v;
          w[j] = x;
          return elbo(w);
        },
        v[j], param_step(b.family, j, v[j]));
    t.compare(grad[j], fd);
  }
  t.point();
  out.push_back(t.finish());
}

}  // namespace

double relative_error(double a, double b, double floor) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

double central_difference(const std::function<double(double)>& f, double x, double h) {
  return (f(x - 2 * h) - 8 * f(x - h) + 8 * f(x + h) - f(x + 2 * h)) / (12 * h);
}

std::vector<CheckResult> run_gradchecks(const Model& model, const MeanField& q, int points, double tolerance,
                                        Rng& rng) {
  std::vector<CheckResult> out;
  transform_checks(q, points, tolerance, rng, out);
  model_check(model, q, points, tolerance, rng, out);
  family_checks(q, points, tolerance, rng, out);
  entropy_checks(q, points, tolerance, rng, out);
  toy_checks(model, q, tolerance, out);
  return out;
}

}  // namespace genrep::app
