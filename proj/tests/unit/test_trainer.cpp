#include <cmath>

#include <doctest.h>

#include "genrep/errors.hpp"
#include "genrep/trainer.hpp"
#include "support.hpp"

using namespace genrep;
using testing::five_point;
using testing::rel_err;

namespace {

/// Gamma-Poisson toy whose gradient turns NaN after `healthy` evaluations.
class FailingModel final : public Model {
 public:
  explicit FailingModel(int healthy) : toy_({1, 2}, {1, 1}), healthy_(healthy) {}
  std::string_view name() const override { return "failing"; }
  const LatentLayout& layout() const override { return toy_.layout(); }
  double log_joint(const Eigen::VectorXd& z) const override { return toy_.log_joint(z); }
  double log_joint_grad(const Eigen::VectorXd& z, Eigen::VectorXd& grad) const override {
    const double f = toy_.log_joint_grad(z, grad);
    if (++calls_ > healthy_) grad.setConstant(std::nan(""));
    return f;
  }
  Eigen::VectorXd prior_mean() const override { return toy_.prior_mean(); }

 private:
  GammaPoissonToy toy_;
  int healthy_;
  mutable int calls_ = 0;
};

double smoothed(const std::vector<TraceRow>& t, std::size_t from, std::size_t window) {
  double s = 0.0;
  for (std::size_t i = from; i < from + window; ++i) s += t[i].elbo;
  return s / static_cast<double>(window);
}

}  // namespace

TEST_SUITE("trainer") {
  TEST_CASE("first step with unit gradient") {
    StepSizeSchedule s({1.0, 1e-16, 1.0, 0.1});
    const Eigen::VectorXd rho = s.step(Eigen::VectorXd::Ones(1));
    CHECK(rho[0] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(s.second_moment()[0] == 1.0);
    CHECK(s.iteration() == 1);
  }

  TEST_CASE("second moment decays geometrically under zero gradients") {
    StepSizeSchedule s;
    s.step(Eigen::Vector2d(2.0, -3.0));
    Eigen::Vector2d expected(4.0, 9.0);
    for (int i = 2; i <= 30; ++i) {
      const Eigen::VectorXd rho = s.step(Eigen::Vector2d::Zero());
      expected *= 0.9;
      CHECK(s.second_moment()[0] == doctest::Approx(expected[0]).epsilon(1e-13));
      CHECK(s.second_moment()[1] == doctest::Approx(expected[1]).epsilon(1e-13));
      const double ref = std::pow(static_cast<double>(i), -0.5 + 1e-16) / (1.0 + std::sqrt(expected[0]));
      CHECK(rho[0] == doctest::Approx(ref).epsilon(1e-13));
    }
  }

  TEST_CASE("step size is linear in eta") {
    StepSizeSchedule a({1.0, 1e-16, 1.0, 0.1}), b({2.0, 1e-16, 1.0, 0.1});
    Rng rng(90);
    for (int i = 0; i < 100; ++i) {
      Eigen::VectorXd g(3);
      for (int j = 0; j < 3; ++j) g[j] = standard_normal(rng) * 10;
      CHECK(b.step(g) == 2.0 * a.step(g));
    }
  }

  TEST_CASE("step size rejects bad input") {
    StepSizeSchedule s;
    CHECK_THROWS_AS(s.step(Eigen::VectorXd::Constant(2, INFINITY)), NumericalError);
    CHECK_THROWS_AS(s.step(Eigen::VectorXd::Constant(1, std::nan(""))), NumericalError);
    for (StepSizeConfig c : {StepSizeConfig{0, 1e-16, 1, 0.1}, StepSizeConfig{1, -1, 1, 0.1},
                             StepSizeConfig{1, 1e-16, 0, 0.1}, StepSizeConfig{1, 1e-16, 1, 0},
                             StepSizeConfig{1, 1e-16, 1, 1.5}}) {
      CHECK_THROWS_AS(c.validate(), DomainError);
    }
  }

  TEST_CASE("softplus pair") {
    CHECK(std::abs(inverse_softplus(std::log(2.0))) < 1e-15);
    for (double v : {1e-4, 1.0, 1e3}) CHECK(rel_err(softplus(inverse_softplus(v)), v) < 1e-12);
    for (double x : {-700.0, -30.0, 0.0, 30.0, 800.0}) {
      CHECK(softplus(x) > 0.0);
      CHECK(std::isfinite(softplus(x)));
    }
    CHECK(softplus(800.0) == 800.0);
    CHECK_THROWS_AS(inverse_softplus(0.0), DomainError);
    CHECK_THROWS_AS(inverse_softplus(-1.0), DomainError);
    CHECK(logistic(0.0) == 0.5);
    for (double x : {-5.0, -0.3, 2.0}) CHECK(rel_err(logistic(x), five_point(softplus, x, 1e-3)) < 1e-10);
  }

  TEST_CASE("ParamMap chain rule matches finite differences of the toy ELBO") {
    const GammaPoissonToy toy({1, 2, 0, 3}, {1.5, 0.5});
    const ParamMap map({Coordinate::Positive, Coordinate::Positive});
    auto elbo = [&](const Eigen::VectorXd& raw) {
      const Eigen::VectorXd v = map.constrain(raw);
      return toy.analytic_elbo(GammaParams{v[0], v[1]});
    };
    Rng rng(91);
    for (int i = 0; i < 20; ++i) {
      const Eigen::Vector2d raw(4 * uniform(rng) - 2, 4 * uniform(rng) - 2);
      const Eigen::VectorXd v = map.constrain(raw);
      const Eigen::VectorXd g = map.chain_grad(toy.analytic_elbo_grad(GammaParams{v[0], v[1]}), raw);
      for (int j = 0; j < 2; ++j) {
        const double fd = five_point([&](double t) {
          Eigen::VectorXd r = raw;
          r[j] = t;
          return elbo(r);
        }, raw[j], 1e-4);
        CHECK(rel_err(g[j], fd, 1e-6) < 1e-4);
      }
    }
    const ParamMap mixed({Coordinate::Unconstrained, Coordinate::Positive});
    const Eigen::Vector2d v(-1.5, 2.0);
    CHECK(mixed.constrain(mixed.unconstrain(v)).isApprox(v, 1e-14));
    CHECK(mixed.unconstrain(v)[0] == -1.5);
  }

  TEST_CASE("shape-mean chain rule") {
    const Eigen::Vector2d g = gamma_shape_mean_chain(2.0, 0.5, Eigen::Vector2d(0.0, 1.0));
    CHECK(g[0] == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(g[1] == doctest::Approx(-8.0).epsilon(1e-15));
    CHECK(gamma_shape_mean_chain(1.3, 2.1, Eigen::Vector2d(0.7, 0.0))[1] == 0.0);
    CHECK_THROWS_AS(gamma_shape_mean_chain(1.0, 0.0, Eigen::Vector2d::Ones()), DomainError);

    const GammaPoissonToy toy({4, 1}, {0.5, 1});
    Rng rng(92);
    for (int i = 0; i < 20; ++i) {
      const double a = 0.2 + 4 * uniform(rng), m = 0.2 + 4 * uniform(rng);
      const Eigen::Vector2d c = gamma_shape_mean_chain(a, m, toy.analytic_elbo_grad(GammaParams{a, a / m}));
      const double da = five_point([&](double t) { return toy.analytic_elbo(GammaParams{t, t / m}); }, a, 1e-4);
      const double dm = five_point([&](double t) { return toy.analytic_elbo(GammaParams{a, a / t}); }, m, 1e-4);
      CHECK(rel_err(c[0], da, 1e-6) < 1e-4);
      CHECK(rel_err(c[1], dm, 1e-6) < 1e-4);
    }
  }

  TEST_CASE("Parameterization gradient through apply") {
    const GammaPoissonToy toy({2, 0, 1}, {1, 1});
    for (const FamilyParams& start : {FamilyParams{GammaParams{1.7, 0.8}}, FamilyParams{LogNormalParams{-0.4, 0.6}}}) {
      MeanField q = MeanField::single(start, std::holds_alternative<GammaParams>(start) ? TransformKind::GammaStd
                                                                                     : TransformKind::LogNormalStd);
      const Parameterization p(q);
      const Eigen::VectorXd raw = p.raw_from(q);
      MeanField probe = q;
      p.apply(raw, probe);
      CHECK((probe.flat_params() - q.flat_params()).cwiseAbs().maxCoeff() < 1e-14);
      const Eigen::VectorXd g = p.raw_gradient(raw, q, toy.analytic_elbo_grad(q.blocks()[0].factor(0)));
      for (Eigen::Index j = 0; j < raw.size(); ++j) {
        const double fd = five_point([&](double t) {
          Eigen::VectorXd r = raw;
          r[j] = t;
          p.apply(r, probe);
          return toy.analytic_elbo(probe.blocks()[0].factor(0));
        }, raw[j], 1e-4);
        CHECK(rel_err(g[j], fd, 1e-6) < 1e-4);
      }
    }
    const auto lq = MeanField::single(LogNormalParams{-0.4, 0.6}, TransformKind::LogNormalStd);
    CHECK(Parameterization(lq).map().coords()[0] == Coordinate::Unconstrained);
    CHECK(Parameterization(lq).map().coords()[1] == Coordinate::Positive);
  }

  TEST_CASE("fit recovers the gamma-Poisson posterior") {
    const GammaPoissonToy toy({1}, {1, 1});
    TrainOptions opt;
    opt.iterations = 2000;
    opt.step.eta = 0.5;
    Rng rng(Rng(2024).split("training"));
    const FitResult r = fit(toy, MeanField::for_model(toy), opt, rng);
    const auto post = toy.posterior();
    const auto got = std::get<GammaParams>(r.q.blocks()[0].factor(0));
    CHECK(rel_err(got.shape, post.shape) < 0.1);
    CHECK(rel_err(got.rate, post.rate) < 0.1);
    CHECK(r.trace.size() == 2000);
  }

  TEST_CASE("fit improves the smoothed ELBO on the beta toy") {
    const BetaBernoulliToy toy({1, 0, 1}, {1, 1});
    TrainOptions opt;
    opt.iterations = 2000;
    Rng rng(7);
    const FitResult r = fit(toy, MeanField::for_model(toy), opt, rng);
    CHECK(smoothed(r.trace, 1950, 50) > smoothed(r.trace, 0, 50));
    const auto got = std::get<BetaParams>(r.q.blocks()[0].factor(0));
    CHECK(got.alpha > got.beta);
  }

  TEST_CASE("zero iterations leave the parameters alone") {
    SparseGammaDefConfig c;
    c.layers = {3, 2};
    const SparseGammaDef m(c, Eigen::MatrixXd::Ones(4, 5));
    const MeanField q = MeanField::for_model(m);
    TrainOptions opt;
    opt.iterations = 0;
    Rng rng(93);
    const FitResult r = fit(m, q, opt, rng);
    CHECK(r.trace.empty());
    CHECK(r.q.flat_params() == q.flat_params());
  }

  TEST_CASE("fit is deterministic and keeps parameters positive") {
    SparseGammaDefConfig c;
    c.layers = {3, 2};
    Rng data_rng(94);
    const DefSample s = synthesize_def(c, 6, 8, data_rng);
    const SparseGammaDef m(c, s.data);
    TrainOptions opt;
    opt.iterations = 200;
    long seen = 0;
    bool increasing = true;
    opt.on_iteration = [&](const TraceRow& row) {
      increasing = increasing && row.iteration == seen + 1;
      seen = row.iteration;
    };
    Rng a(95), b(95);
    const FitResult ra = fit(m, MeanField::for_model(m), opt, a);
    CHECK(increasing);
    CHECK(seen == 200);
    opt.on_iteration = nullptr;
    const FitResult rb = fit(m, MeanField::for_model(m), opt, b);
    REQUIRE(ra.trace.size() == rb.trace.size());
    for (std::size_t i = 0; i < ra.trace.size(); ++i) {
      CHECK(ra.trace[i].elbo == rb.trace[i].elbo);
      CHECK(ra.trace[i].grad_norm == rb.trace[i].grad_norm);
      CHECK(ra.trace[i].elapsed_seconds == 0.0);
    }
    CHECK(ra.q.flat_params() == rb.q.flat_params());
    CHECK(ra.q.flat_params().minCoeff() > 0.0);
  }

  TEST_CASE("non-finite gradients abort with the partial trace") {
    const FailingModel m(25);
    TrainOptions opt;
    opt.iterations = 100;
    Rng rng(96);
    try {
      fit(m, MeanField::for_model(m), opt, rng);
      FAIL("expected FitAborted");
    } catch (const FitAborted& e) {
      const auto& t = e.partial().trace;
      CHECK(t.size() > 0);
      CHECK(t.size() < 100);
      for (std::size_t i = 0; i < t.size(); ++i) CHECK(t[i].iteration == static_cast<long>(i) + 1);
    }
  }
}
