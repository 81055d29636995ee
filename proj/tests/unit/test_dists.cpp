#include <cmath>
#include <random>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <doctest.h>

#include "genrep/distributions.hpp"
#include "genrep/errors.hpp"
#include "genrep/random.hpp"
#include "support.hpp"

using namespace genrep;
using testing::five_point;
using testing::rel_err;

namespace {

std::span<const double> view(const Eigen::VectorXd& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

struct Point {
  FamilyParams params;
  Eigen::VectorXd z;
};

/// Random interior parameters and a point drawn from the distribution.
Point random_point(FamilyKind kind, std::mt19937_64& gen, Rng& rng) {
  std::uniform_real_distribution<double> pos(0.3, 5.0), loc(-2.0, 2.0);
  switch (kind) {
    case FamilyKind::Gamma: {
      GammaParams p{pos(gen), pos(gen)};
      return {p, Eigen::VectorXd::Constant(1, sample_gamma(p.shape, p.rate, rng))};
    }
    case FamilyKind::Beta: {
      BetaParams p{pos(gen), pos(gen)};
      return {p, Eigen::VectorXd::Constant(1, sample_beta(p.alpha, p.beta, rng))};
    }
    case FamilyKind::LogNormal: {
      LogNormalParams p{loc(gen), pos(gen) / 3};
      return {p, Eigen::VectorXd::Constant(1, sample_lognormal(p.loc, p.scale, rng))};
    }
    case FamilyKind::Dirichlet: {
      DirichletParams p{Eigen::Vector3d(pos(gen), pos(gen), pos(gen))};
      return {p, sample_dirichlet(p.alpha, rng)};
    }
  }
  return {};
}

const FamilyKind kAll[] = {FamilyKind::Gamma, FamilyKind::Beta, FamilyKind::LogNormal, FamilyKind::Dirichlet};

double step_for(FamilyKind kind, Eigen::Index j, double v) {
  return kind == FamilyKind::LogNormal && j == 0 ? 1e-3 : 1e-3 * v;
}

}  // namespace

TEST_SUITE("dists") {
  TEST_CASE("log density at known points") {
    CHECK(log_density(GammaParams{1, 1}, 1.0) == doctest::Approx(-1.0).epsilon(1e-15));
    CHECK(std::abs(log_density(BetaParams{1, 1}, 0.42)) < 1e-15);
    CHECK(log_density(LogNormalParams{0, 1}, 1.0) == doctest::Approx(-0.5 * std::log(2 * M_PI)).epsilon(1e-15));
  }

  TEST_CASE("dlogq/dz examples") {
    CHECK(dlogq_dz(GammaParams{2, 3}, 0.5) == doctest::Approx(-1.0).epsilon(1e-15));
    for (double z : {0.1, 0.5, 0.9}) CHECK(dlogq_dz(BetaParams{1, 1}, z) == 0.0);
    const auto f = [](double z) { return log_density(GammaParams{0.1, 0.3}, z); };
    CHECK(rel_err(dlogq_dz(GammaParams{0.1, 0.3}, 2.0), five_point(f, 2.0, 1e-3)) < 1e-6);
  }

  TEST_CASE("score examples") {
    CHECK(std::abs(dlogq_dparams(GammaParams{2, 4}, 0.5)[1]) < 1e-15);
    const BetaParams p{2, 3};
    const Eigen::Vector2d s = dlogq_dparams(p, 0.5);
    const auto fa = [](double a) { return log_density(BetaParams{a, 3}, 0.5); };
    const auto fb = [](double b) { return log_density(BetaParams{2, b}, 0.5); };
    CHECK(rel_err(s[0], five_point(fa, 2.0, 1e-3)) < 1e-6);
    CHECK(rel_err(s[1], five_point(fb, 3.0, 1e-3)) < 1e-6);
  }

  TEST_CASE("all derivatives match finite differences at random points") {
    std::mt19937_64 gen(11);
    Rng rng(11);
    for (FamilyKind kind : kAll) {
      CAPTURE(to_string(kind));
      double worst_score = 0.0, worst_dz = 0.0, worst_entropy = 0.0;
      for (int n = 0; n < 20; ++n) {
        const auto [p, z] = random_point(kind, gen, rng);
        const Eigen::VectorXd v = to_vector(p);
        const Eigen::VectorXd s = dlogq_dparams(p, view(z));
        const Eigen::VectorXd dh = dentropy_dparams(p);
        for (Eigen::Index j = 0; j < v.size(); ++j) {
          auto at = [&](double x) {
            Eigen::VectorXd w = v;
            w[j] = x;
            return from_vector(kind, view(w));
          };
          const double h = step_for(kind, j, v[j]);
          worst_score = std::max(
              worst_score, rel_err(s[j], five_point([&](double x) { return log_density(at(x), view(z)); }, v[j], h)));
          worst_entropy =
              std::max(worst_entropy, rel_err(dh[j], five_point([&](double x) { return entropy(at(x)); }, v[j], h)));
        }
        const Eigen::VectorXd dz = dlogq_dz(p, view(z));
        for (Eigen::Index k = 0; k < z.size(); ++k) {
          const double h = kind == FamilyKind::Beta ? 1e-4 * std::min(z[k], 1.0 - z[k]) : 1e-4 * z[k];
          const auto f = [&](double x) {
            Eigen::VectorXd zz = z;
            zz[k] = x;
            return log_density(p, view(zz));
          };
          worst_dz = std::max(worst_dz, rel_err(dz[k], five_point(f, z[k], h)));
        }
      }
      CHECK(worst_score < 1e-5);
      CHECK(worst_dz < 1e-5);
      CHECK(worst_entropy < 1e-5);
    }
  }

  TEST_CASE("score has zero expectation") {
    Rng rng(12);
    const GammaParams g{0.7, 1.3};
    const BetaParams b{2.0, 0.5};
    const LogNormalParams l{0.3, 0.8};
    const DirichletParams d{Eigen::Vector3d(0.8, 1.5, 3.0)};
    testing::VectorMoments mg, mb, ml, md;
    for (int i = 0; i < 1000000; ++i) {
      mg.add(dlogq_dparams(g, sample_gamma(g.shape, g.rate, rng)));
      mb.add(dlogq_dparams(b, sample_beta(b.alpha, b.beta, rng)));
      ml.add(dlogq_dparams(l, sample_lognormal(l.loc, l.scale, rng)));
      if (i < 200000) md.add(dlogq_dparams(d, sample_dirichlet(d.alpha, rng)));
    }
    for (auto* m : {&mg, &mb, &ml, &md}) {
      const Eigen::VectorXd se = m->std_error();
      for (Eigen::Index j = 0; j < m->mean.size(); ++j) CHECK(std::abs(m->mean[j]) < 3 * se[j]);
    }
  }

  TEST_CASE("entropy examples") {
    CHECK(std::abs(entropy(BetaParams{1, 1})) < 1e-15);
    Rng rng(13);
    const GammaParams p{0.1, 0.3};
    testing::Moments m;
    for (int i = 0; i < 1000000; ++i) {
      // log z directly: z itself underflows for a sizable fraction of draws.
      const double lz = sample_log_gamma(p.shape, p.rate, rng);
      m.add(-(p.shape * std::log(p.rate) - std::lgamma(p.shape) + (p.shape - 1) * lz - p.rate * std::exp(lz)));
    }
    CHECK(std::abs(m.mean - entropy(p)) < 3 * m.std_error());
  }

  TEST_CASE("one-dimensional densities integrate to one") {
    std::mt19937_64 gen(14);
    Rng rng(14);
    boost::math::quadrature::tanh_sinh<double> unit;
    boost::math::quadrature::exp_sinh<double> tail;
    for (int n = 0; n < 10; ++n) {
      for (FamilyKind kind : {FamilyKind::Gamma, FamilyKind::Beta, FamilyKind::LogNormal}) {
        const FamilyParams p = random_point(kind, gen, rng).params;
        const auto pdf = [&](double z) {
          if (z <= 0.0 || (kind == FamilyKind::Beta && z >= 1.0)) return 0.0;
          return std::exp(log_density(p, std::span<const double>(&z, 1)));
        };
        double total = unit.integrate(pdf, 0.0, 1.0);
        if (kind != FamilyKind::Beta) total += tail.integrate(pdf, 1.0, std::numeric_limits<double>::infinity());
        CHECK(std::abs(total - 1.0) < 1e-6);
      }
    }
  }

  TEST_CASE("parameter vectors round trip and validate") {
    const FamilyParams p = DirichletParams{Eigen::Vector3d(1, 2, 3)};
    CHECK(to_vector(from_vector(FamilyKind::Dirichlet, view(to_vector(p)))) == to_vector(p));
    CHECK(num_params(GammaParams{1, 1}) == 2);
    CHECK(latent_dim(p) == 3);
    CHECK(parse_family_kind("lognormal") == FamilyKind::LogNormal);
    CHECK_THROWS(parse_family_kind("cauchy"));
    CHECK_THROWS_AS(validate(FamilyParams{GammaParams{-1, 1}}), DomainError);
    CHECK_THROWS_AS(validate(FamilyParams{DirichletParams{Eigen::VectorXd::Ones(1)}}), DomainError);
  }

  TEST_CASE("support boundary is a domain error") {
    CHECK_THROWS_AS(log_density(GammaParams{1, 1}, 0.0), DomainError);
    CHECK_THROWS_AS(log_density(BetaParams{1, 1}, 1.0), DomainError);
    CHECK_THROWS_AS(dlogq_dz(LogNormalParams{0, 1}, -1.0), DomainError);
    CHECK_THROWS_AS(log_density(DirichletParams{Eigen::Vector2d(1, 1)}, Eigen::VectorXd(Eigen::Vector2d(0, 1))),
                    DomainError);
  }
}
