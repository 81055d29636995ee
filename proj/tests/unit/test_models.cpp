#include <cmath>
#include <thread>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <doctest.h>

#include "genrep/errors.hpp"
#include "genrep/estimators.hpp"
#include "genrep/models.hpp"
#include "support.hpp"

using namespace genrep;

namespace {

double ref_log_gamma_pdf(double z, double a, double b) {
  return a * std::log(b) - std::lgamma(a) + (a - 1) * std::log(z) - b * z;
}

double ref_log_poisson(double x, double r) { return x * std::log(r) - r - std::lgamma(x + 1); }

/// Loop-level DEF log joint, independent of the matrix implementation.
double ref_def_log_joint(const SparseGammaDefConfig& c, const Eigen::MatrixXd& x, const Eigen::VectorXd& z) {
  const auto L = c.layers.size();
  const Eigen::Index N = x.rows(), D = x.cols();
  std::vector<const double*> zs(L), ws(L);
  Eigen::Index off = 0;
  for (std::size_t l = 0; l < L; ++l) {
    zs[l] = z.data() + off;
    off += N * c.layers[l];
  }
  for (std::size_t l = 0; l < L; ++l) {
    ws[l] = z.data() + off;
    off += c.layers[l] * (l == 0 ? D : c.layers[l - 1]);
  }
  double f = 0.0;
  for (std::size_t l = 0; l < L; ++l) {
    const Eigen::Index K = c.layers[l];
    const Eigen::Index cols = l == 0 ? D : c.layers[l - 1];
    for (Eigen::Index i = 0; i < K * cols; ++i) f += ref_log_gamma_pdf(ws[l][i], c.weight_prior.shape, c.weight_prior.rate);
    for (Eigen::Index n = 0; n < N; ++n) {
      for (Eigen::Index k = 0; k < K; ++k) {
        const double v = zs[l][n * K + k];
        if (l + 1 == L) {
          f += ref_log_gamma_pdf(v, c.top_prior.shape, c.top_prior.rate);
        } else {
          const Eigen::Index Ku = c.layers[l + 1];
          double mean = 0.0;
          for (Eigen::Index j = 0; j < Ku; ++j) mean += zs[l + 1][n * Ku + j] * ws[l + 1][j * K + k];
          f += ref_log_gamma_pdf(v, c.alpha_z, c.alpha_z / mean);
        }
      }
    }
  }
  const Eigen::Index K1 = c.layers[0];
  for (Eigen::Index n = 0; n < N; ++n) {
    for (Eigen::Index d = 0; d < D; ++d) {
      double rate = 0.0;
      for (Eigen::Index k = 0; k < K1; ++k) rate += zs[0][n * K1 + k] * ws[0][k * D + d];
      f += ref_log_poisson(x(n, d), rate);
    }
  }
  return f;
}

double ref_mf_log_joint(const BetaGammaMfConfig& c, const Eigen::MatrixXd& x, const Eigen::VectorXd& v) {
  const Eigen::Index N = x.rows(), D = x.cols(), K = c.latent_dim;
  const double* z = v.data();
  const double* w = v.data() + N * K;
  double f = 0.0;
  for (Eigen::Index i = 0; i < K * D; ++i) f += ref_log_gamma_pdf(w[i], c.weight_prior.shape, c.weight_prior.rate);
  for (Eigen::Index n = 0; n < N; ++n) {
    for (Eigen::Index d = 0; d < D; ++d) {
      double eta = 0.0;
      for (Eigen::Index k = 0; k < K; ++k) eta += std::log(z[n * K + k] / (1 - z[n * K + k])) * w[k * D + d];
      const double p = 1.0 / (1.0 + std::exp(-eta));
      f += x(n, d) == 1.0 ? std::log(p) : std::log1p(-p);
    }
  }
  return f;
}

/// Random interior point: positive blocks in [0.3, 3], unit blocks in [0.05, 0.95].
Eigen::VectorXd interior_point(const Model& m, Rng& rng) {
  Eigen::VectorXd z(m.layout().total_size());
  for (std::size_t b = 0; b < m.layout().blocks().size(); ++b) {
    const auto& blk = m.layout().blocks()[b];
    for (Eigen::Index i = 0; i < blk.size(); ++i) {
      const double u = uniform(rng);
      z[m.layout().offset(b) + i] = blk.support == Support::UnitInterval ? 0.05 + 0.9 * u : 0.3 * std::pow(10.0, u);
    }
  }
  return z;
}

/// Max relative error of grad_log_joint against a 5-point stencil over every coordinate.
double fd_check(const Model& m, int points, std::uint64_t seed) {
  Rng rng(seed);
  double worst = 0.0;
  for (int p = 0; p < points; ++p) {
    const Eigen::VectorXd z = interior_point(m, rng);
    Eigen::VectorXd g;
    m.log_joint_grad(z, g);
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      auto f = [&](double t) {
        Eigen::VectorXd y = z;
        y[i] = t;
        return m.log_joint(y);
      };
      const double fd = testing::five_point(f, z[i], 1e-4 * z[i]);
      worst = std::max(worst, testing::rel_err(g[i], fd, 1e-3));
    }
  }
  return worst;
}

Eigen::MatrixXd def_data(Eigen::Index n, Eigen::Index d, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd x(n, d);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = static_cast<double>(sample_poisson(2.0, rng));
  return x;
}

Eigen::MatrixXd mf_data(Eigen::Index n, Eigen::Index d, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd x(n, d);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = sample_bernoulli(0.4, rng);
  return x;
}

}  // namespace

TEST_SUITE("models") {
  TEST_CASE("layout bookkeeping") {
    LatentLayout l;
    l.add({"a", 2, 3, Support::Positive});
    l.add({"b", 4, 2, Support::Simplex});
    CHECK(l.total_size() == 14);
    CHECK(l.offset(1) == 6);
    CHECK(l.find("b") == std::optional<std::size_t>(1));
    CHECK_FALSE(l.find("c"));
    CHECK(l.blocks()[1].num_factors() == 4);
    CHECK(l.blocks()[1].factor_dim() == 2);
    CHECK(l.blocks()[0].num_factors() == 6);
    CHECK_THROWS_AS(l.add({"a", 1, 1, Support::Positive}), DomainError);
    CHECK_THROWS_AS(l.add({"e", 0, 1, Support::Positive}), DomainError);
  }

  TEST_CASE("gamma-Poisson toy conjugacy and marginal") {
    const GammaPoissonToy m({1, 2, 0}, {1, 1});
    CHECK(m.posterior().shape == 4.0);
    CHECK(m.posterior().rate == 4.0);
    CHECK(m.analytic_elbo_grad(m.posterior()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(std::abs(m.analytic_elbo(m.posterior()) - m.log_marginal_likelihood()) < 1e-12);
    CHECK(GammaPoissonToy({0}, {1, 1}).log_marginal_likelihood() == doctest::Approx(std::log(0.5)).epsilon(1e-14));

    // Marginal by quadrature over z.
    boost::math::quadrature::exp_sinh<double> integrator;
    const double marg = integrator.integrate([&](double z) {
      Eigen::VectorXd v(1);
      v[0] = z;
      return z > 0 ? std::exp(m.log_joint(v)) : 0.0;
    });
    CHECK(std::log(marg) == doctest::Approx(m.log_marginal_likelihood()).epsilon(1e-9));
  }

  TEST_CASE("beta-Bernoulli toy conjugacy and marginal") {
    const BetaBernoulliToy m({1, 0, 1}, {1, 1});
    CHECK(m.posterior().alpha == 3.0);
    CHECK(m.posterior().beta == 2.0);
    CHECK(m.analytic_elbo_grad(m.posterior()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(std::exp(BetaBernoulliToy({1}, {1, 1}).log_marginal_likelihood()) == doctest::Approx(0.5).epsilon(1e-14));
    boost::math::quadrature::tanh_sinh<double> integrator;
    const double marg = integrator.integrate([&](double z) {
      Eigen::VectorXd v(1);
      v[0] = z;
      return std::exp(m.log_joint(v));
    }, 0.0, 1.0);
    CHECK(std::log(marg) == doctest::Approx(m.log_marginal_likelihood()).epsilon(1e-9));
  }

  TEST_CASE("toy analytic ELBO gradient matches finite differences") {
    const GammaPoissonToy gp({3, 0, 5, 1}, {0.5, 2});
    const BetaBernoulliToy bb({1, 1, 0, 1, 0, 0, 1}, {0.7, 1.3});
    Rng rng(61);
    for (int i = 0; i < 20; ++i) {
      const double a = 0.3 + 5 * uniform(rng), b = 0.3 + 5 * uniform(rng);
      const Eigen::Vector2d g = gp.analytic_elbo_grad(GammaParams{a, b});
      const Eigen::Vector2d h = bb.analytic_elbo_grad(BetaParams{a, b});
      CHECK(testing::rel_err(g[0], testing::five_point([&](double t) { return gp.analytic_elbo(GammaParams{t, b}); }, a, 1e-4), 1e-6) < 1e-6);
      CHECK(testing::rel_err(g[1], testing::five_point([&](double t) { return gp.analytic_elbo(GammaParams{a, t}); }, b, 1e-4), 1e-6) < 1e-6);
      CHECK(testing::rel_err(h[0], testing::five_point([&](double t) { return bb.analytic_elbo(BetaParams{t, b}); }, a, 1e-4), 1e-6) < 1e-6);
      CHECK(testing::rel_err(h[1], testing::five_point([&](double t) { return bb.analytic_elbo(BetaParams{a, t}); }, b, 1e-4), 1e-6) < 1e-6);
    }
  }

  TEST_CASE("toy posterior maximizes the estimated ELBO") {
    const GammaPoissonToy gp({1, 2, 0}, {1, 1});
    const BetaBernoulliToy bb({1, 0, 1}, {1, 1});
    Rng rng(62);
    const auto gq = MeanField::single(gp.posterior(), TransformKind::GammaStd);
    const auto bq = MeanField::single(bb.posterior(), TransformKind::BetaLogitStdDev);
    const double g_best = elbo_estimate(gp, gq, 10000, rng, EntropyMode::Analytic).mean;
    const double b_best = elbo_estimate(bb, bq, 10000, rng, EntropyMode::Analytic).mean;
    for (int i = 0; i < 10; ++i) {
      const double s1 = std::exp(uniform(rng) - 0.5) * (uniform(rng) < 0.5 ? 0.5 : 2.0);
      const double s2 = std::exp(uniform(rng) - 0.5);
      const GammaParams gp_p{gp.posterior().shape * s1, gp.posterior().rate * s2};
      const BetaParams bb_p{bb.posterior().alpha * s1, bb.posterior().beta * s2};
      CHECK(elbo_estimate(gp, MeanField::single(gp_p, TransformKind::GammaStd), 10000, rng, EntropyMode::Analytic).mean <
            g_best);
      CHECK(elbo_estimate(bb, MeanField::single(bb_p, TransformKind::BetaLogitStdDev), 10000, rng,
                          EntropyMode::Analytic)
                .mean < b_best);
    }
  }

  TEST_CASE("DEF single-layer composition") {
    SparseGammaDefConfig c;
    c.layers = {1};
    for (double x : {0.0, 1.0, 4.0}) {
      const SparseGammaDef m(c, Eigen::MatrixXd::Constant(1, 1, x));
      const double expected = log_gamma_pdf(1, 0.1, 0.1) + log_gamma_pdf(1, 0.1, 0.3) + log_poisson_pmf(x, 1);
      CHECK(m.log_joint(Eigen::VectorXd::Ones(2)) == doctest::Approx(expected).epsilon(1e-14));
      CHECK(expected == doctest::Approx(ref_def_log_joint(c, m.data(), Eigen::VectorXd::Ones(2))).epsilon(1e-13));
    }
  }

  TEST_CASE("DEF log joint matches the loop oracle") {
    SparseGammaDefConfig c;
    const Eigen::MatrixXd x = def_data(7, 9, 63);
    const SparseGammaDef m(c, x);
    CHECK(m.layout().blocks().size() == 6);
    CHECK(m.layout().blocks()[3].name == "w0");
    CHECK(m.layout().blocks()[4].rows == 5);
    CHECK(m.layout().blocks()[4].cols == 10);
    Rng rng(64);
    for (int i = 0; i < 20; ++i) {
      const Eigen::VectorXd z = interior_point(m, rng);
      CHECK(testing::rel_err(m.log_joint(z), ref_def_log_joint(c, x, z)) < 1e-12);
    }
  }

  TEST_CASE("DEF gradient matches finite differences") {
    SparseGammaDefConfig c;
    const SparseGammaDef m(c, def_data(20, 30, 65));
    CHECK(fd_check(m, 20, 66) < 1e-5);
    SparseGammaDefConfig deep;
    deep.layers = {4, 3, 2, 2};
    deep.alpha_z = 0.7;
    CHECK(fd_check(SparseGammaDef(deep, def_data(5, 6, 67)), 20, 68) < 1e-5);
  }

  TEST_CASE("DEF data enters only through the Poisson term") {
    SparseGammaDefConfig c;
    c.layers = {3, 2};
    Eigen::MatrixXd x = def_data(4, 5, 69);
    const SparseGammaDef a(c, x);
    x(2, 3) += 3;
    const SparseGammaDef b(c, x);
    Rng rng(70);
    const Eigen::VectorXd z = interior_point(a, rng);
    const double r = a.rates(z)(2, 3);
    const double expected = log_poisson_pmf(x(2, 3), r) - log_poisson_pmf(x(2, 3) - 3, r);
    CHECK(b.log_joint(z) - a.log_joint(z) == doctest::Approx(expected).epsilon(1e-10));
  }

  TEST_CASE("DEF mask removes likelihood terms") {
    SparseGammaDefConfig c;
    c.layers = {3, 2};
    const Eigen::MatrixXd x = def_data(4, 5, 71);
    Eigen::MatrixXd mask = Eigen::MatrixXd::Ones(4, 5);
    mask(1, 2) = 0;
    const SparseGammaDef full(c, x), masked(c, x, mask);
    Rng rng(72);
    const Eigen::VectorXd z = interior_point(full, rng);
    CHECK(full.log_joint(z) - masked.log_joint(z) ==
          doctest::Approx(log_poisson_pmf(x(1, 2), full.rates(z)(1, 2))).epsilon(1e-10));
    CHECK(full.entry_log_likelihood(z, 1, 2, x(1, 2)) ==
          doctest::Approx(log_poisson_pmf(x(1, 2), full.rates(z)(1, 2))).epsilon(1e-14));
    CHECK(fd_check(masked, 5, 73) < 1e-5);
  }

  TEST_CASE("DEF errors") {
    SparseGammaDefConfig c;
    c.layers = {2};
    const SparseGammaDef m(c, Eigen::MatrixXd::Ones(2, 2));
    Eigen::VectorXd z = Eigen::VectorXd::Ones(m.layout().total_size());
    z[1] = 0.0;
    CHECK_THROWS_AS(m.log_joint(z), DomainError);
    z[1] = -1.0;
    Eigen::VectorXd g;
    CHECK_THROWS_AS(m.log_joint_grad(z, g), DomainError);
    CHECK_THROWS_AS(m.log_joint(Eigen::VectorXd::Ones(3)), DomainError);
    CHECK_THROWS_AS(SparseGammaDef(c, Eigen::MatrixXd::Constant(1, 1, 1.5)), DomainError);
    CHECK_THROWS_AS(SparseGammaDef(c, Eigen::MatrixXd::Constant(1, 1, -1)), DomainError);
    c.layers = {};
    CHECK_THROWS_AS(c.validate(), DomainError);
    c.layers = {2};
    c.alpha_z = 0;
    CHECK_THROWS_AS(c.validate(), DomainError);
  }

  TEST_CASE("MF log joint and gradient") {
    BetaGammaMfConfig c;
    const Eigen::MatrixXd x = mf_data(30, 20, 74);
    const BetaGammaMf m(c, x);
    Rng rng(75);
    for (int i = 0; i < 20; ++i) {
      const Eigen::VectorXd z = interior_point(m, rng);
      CHECK(testing::rel_err(m.log_joint(z), ref_mf_log_joint(c, x, z)) < 1e-12);
    }
    CHECK(fd_check(m, 20, 76) < 1e-5);
  }

  TEST_CASE("MF at z = 1/2 every probability is 1/2") {
    BetaGammaMfConfig c;
    c.latent_dim = 3;
    const Eigen::MatrixXd x = mf_data(4, 6, 77);
    const BetaGammaMf m(c, x);
    Rng rng(78);
    Eigen::VectorXd z = interior_point(m, rng);
    z.head(12).setConstant(0.5);
    CHECK(m.link(z).cwiseAbs().maxCoeff() == 0.0);
    double weights = 0.0;
    for (Eigen::Index i = 12; i < z.size(); ++i) weights += log_gamma_pdf(z[i], 0.1, 0.3);
    CHECK(m.log_joint(z) == doctest::Approx(weights + 24 * std::log(0.5)).epsilon(1e-13));
    for (Eigen::Index d = 0; d < 6; ++d) CHECK(m.entry_log_likelihood(z, 1, d, 1.0) == doctest::Approx(std::log(0.5)));
  }

  TEST_CASE("MF flipping one bit shifts f by the log-odds") {
    BetaGammaMfConfig c;
    c.latent_dim = 3;
    Eigen::MatrixXd x = mf_data(4, 6, 79);
    x(2, 1) = 0;
    const BetaGammaMf a(c, x);
    x(2, 1) = 1;
    const BetaGammaMf b(c, x);
    Rng rng(80);
    const Eigen::VectorXd z = interior_point(a, rng);
    const double eta = a.link(z)(2, 1);
    const double p = 1 / (1 + std::exp(-eta));
    CHECK(b.log_joint(z) - a.log_joint(z) == doctest::Approx(std::log(p / (1 - p))).epsilon(1e-10));
  }

  TEST_CASE("MF errors") {
    BetaGammaMfConfig c;
    c.latent_dim = 1;
    const BetaGammaMf m(c, Eigen::MatrixXd::Ones(1, 1));
    CHECK_THROWS_AS(m.log_joint(Eigen::Vector2d(1.0, 1.0)), DomainError);
    CHECK_THROWS_AS(m.log_joint(Eigen::Vector2d(0.0, 1.0)), DomainError);
    CHECK_THROWS_AS(m.log_joint(Eigen::Vector2d(0.5, 0.0)), DomainError);
    CHECK_THROWS_AS(BetaGammaMf(c, Eigen::MatrixXd::Constant(1, 1, 2)), DomainError);
    c.latent_dim = 0;
    CHECK_THROWS_AS(c.validate(), DomainError);
  }

  TEST_CASE("synthetic data from the priors") {
    SparseGammaDefConfig dc;
    Rng r1(81), r2(81);
    const DefSample a = synthesize_def(dc, 20, 30, r1);
    const DefSample b = synthesize_def(dc, 20, 30, r2);
    CHECK(a.data == b.data);
    CHECK(a.latents == b.latents);
    for (Eigen::Index i = 0; i < a.data.size(); ++i) {
      CHECK(a.data.data()[i] >= 0);
      CHECK(a.data.data()[i] == std::floor(a.data.data()[i]));
    }
    const SparseGammaDef m(dc, a.data);
    CHECK(a.latents.size() == m.layout().total_size());
    CHECK(std::isfinite(m.log_joint(a.latents)));

    const MfSample s = synthesize_mf(BetaGammaMfConfig{}, 30, 20, r1);
    for (Eigen::Index i = 0; i < s.data.size(); ++i) CHECK((s.data.data()[i] == 0 || s.data.data()[i] == 1));
    CHECK(std::isfinite(BetaGammaMf(BetaGammaMfConfig{}, s.data).log_joint(s.latents)));
    CHECK_THROWS_AS(synthesize_def(dc, 0, 3, r1), DomainError);
  }

  TEST_CASE("evaluations are safe across threads") {
    SparseGammaDefConfig c;
    const SparseGammaDef m(c, def_data(10, 12, 82));
    Rng rng(83);
    std::vector<Eigen::VectorXd> zs;
    for (int i = 0; i < 8; ++i) zs.push_back(interior_point(m, rng));
    std::vector<double> serial, parallel(zs.size());
    for (const auto& z : zs) serial.push_back(m.log_joint(z));
    std::vector<std::thread> threads;
    for (std::size_t i = 0; i < zs.size(); ++i) {
      threads.emplace_back([&, i] {
        Eigen::VectorXd g;
        parallel[i] = m.log_joint_grad(zs[i], g);
      });
    }
    for (auto& t : threads) t.join();
    CHECK(serial == parallel);
  }
}
