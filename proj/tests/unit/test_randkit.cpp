#include <algorithm>
#include <cmath>
#include <unordered_set>

#include <doctest.h>

#include "genrep/errors.hpp"
#include "genrep/random.hpp"
#include "genrep/specialfn.hpp"
#include "support.hpp"

using namespace genrep;
using testing::Moments;

TEST_SUITE("randkit") {
  TEST_CASE("same seed gives the same stream") {
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) CHECK(uniform(a) == uniform(b));
    Rng c(42), d(43);
    int same = 0;
    for (int i = 0; i < 100; ++i) same += uniform(c) == uniform(d);
    CHECK(same == 0);
  }

  TEST_CASE("split is a pure function of the parent seed") {
    Rng parent(5);
    const Rng child1 = parent.split("training");
    uniform(parent);
    Rng child2 = parent.split("training");
    Rng c1 = child1;
    for (int i = 0; i < 10; ++i) CHECK(c1.next_u64() == child2.next_u64());
    CHECK(parent.split(std::uint64_t{0}).seed() != parent.split(std::uint64_t{1}).seed());
    CHECK(parent.split("a").seed() != parent.split("b").seed());
  }

  TEST_CASE("split streams do not overlap in their first 1e6 outputs") {
    Rng root(9);
    Rng a = root.split(std::uint64_t{0});
    Rng b = root.split(std::uint64_t{1});
    std::vector<std::uint64_t> xs;
    xs.reserve(2000000);
    for (int i = 0; i < 1000000; ++i) xs.push_back(a.next_u64());
    for (int i = 0; i < 1000000; ++i) xs.push_back(b.next_u64());
    std::sort(xs.begin(), xs.end());
    CHECK(std::adjacent_find(xs.begin(), xs.end()) == xs.end());
  }

  TEST_CASE("uniform moments and open interval") {
    Rng rng(1);
    Moments m;
    bool open = true;
    for (int i = 0; i < 1000000; ++i) {
      const double u = uniform(rng);
      open = open && u > 0.0 && u < 1.0;
      m.add(u);
    }
    CHECK(open);
    CHECK(std::abs(m.mean - 0.5) < 0.002);
    CHECK(std::abs(m.variance() - 1.0 / 12) < 0.001);
  }

  TEST_CASE("standard normal moments") {
    Rng rng(2);
    Moments m;
    double m3 = 0.0;
    const int n = 1000000;
    std::vector<double> xs(n);
    for (auto& x : xs) m.add(x = standard_normal(rng));
    for (double x : xs) m3 += std::pow(x - m.mean, 3);
    const double skew = m3 / n / std::pow(m.variance(), 1.5);
    CHECK(std::abs(m.mean) < 0.004);
    CHECK(std::abs(m.variance() - 1.0) < 0.01);
    CHECK(std::abs(skew) < 0.01);
  }

  TEST_CASE("gamma moments") {
    Rng rng(3);
    Moments a, b, c, d;
    for (int i = 0; i < 1000000; ++i) {
      a.add(sample_gamma(2.0, 3.0, rng));
      b.add(std::log(sample_gamma(0.1, 1.0, rng)));
      c.add(sample_gamma(5.0, 1.0, rng));
      d.add(sample_gamma(0.05, 2.0, rng));
    }
    CHECK(std::abs(a.mean - 2.0 / 3) < 0.01);
    CHECK(std::abs(b.mean - specialfn::digamma(0.1)) < 3 * b.std_error());
    CHECK(std::abs(c.variance() - 5.0) < 0.1);
    CHECK(std::abs(d.mean - 0.025) < 3 * d.std_error());
  }

  TEST_CASE("log-gamma sampler matches log of gamma draws in distribution") {
    Rng r1(4), r2(5);
    std::vector<double> a, b;
    for (int i = 0; i < 20000; ++i) {
      a.push_back(sample_log_gamma(0.1, 0.3, r1));
      b.push_back(std::log(sample_gamma(0.1, 0.3, r2)));
    }
    CHECK(testing::ks_statistic(a, b) < testing::ks_critical_1pct(a.size(), b.size()));
  }

  TEST_CASE("beta moments and uniform case") {
    Rng rng(6);
    Moments a, c;
    for (int i = 0; i < 1000000; ++i) {
      a.add(sample_beta(2.0, 2.0, rng));
      c.add(sample_beta(0.1, 0.3, rng));
    }
    CHECK(std::abs(a.mean - 0.5) < 0.002);
    CHECK(std::abs(c.mean - 0.25) < 0.01);

    std::vector<double> beta, unif;
    for (int i = 0; i < 100000; ++i) {
      beta.push_back(sample_beta(1.0, 1.0, rng));
      unif.push_back(uniform(rng));
    }
    CHECK(testing::ks_statistic(beta, unif) < testing::ks_critical_1pct(beta.size(), unif.size()));
  }

  TEST_CASE("dirichlet means and normalization") {
    Rng rng(7);
    Eigen::Vector3d flat(1, 1, 1), skew(2, 3, 5);
    Eigen::Vector3d m1 = Eigen::Vector3d::Zero(), m2 = Eigen::Vector3d::Zero();
    double worst_sum = 0.0;
    const int n = 1000000;
    for (int i = 0; i < n; ++i) {
      const Eigen::VectorXd a = sample_dirichlet(flat, rng);
      const Eigen::VectorXd b = sample_dirichlet(skew, rng);
      m1 += a;
      m2 += b;
      worst_sum = std::max({worst_sum, std::abs(a.sum() - 1.0), std::abs(b.sum() - 1.0)});
    }
    m1 /= n;
    m2 /= n;
    for (int k = 0; k < 3; ++k) CHECK(std::abs(m1[k] - 1.0 / 3) < 0.002);
    CHECK(std::abs(m2[0] - 0.2) < 0.005);
    CHECK(std::abs(m2[1] - 0.3) < 0.005);
    CHECK(std::abs(m2[2] - 0.5) < 0.005);
    CHECK(worst_sum < 1e-12);
  }

  TEST_CASE("poisson and bernoulli") {
    Rng rng(8);
    Moments m;
    bool zero = true, one = true;
    for (int i = 0; i < 1000000; ++i) m.add(static_cast<double>(sample_poisson(4.0, rng)));
    for (int i = 0; i < 1000; ++i) {
      zero = zero && sample_poisson(0.0, rng) == 0;
      one = one && sample_bernoulli(1.0, rng) == 1;
    }
    CHECK(std::abs(m.mean - 4.0) < 0.01);
    CHECK(zero);
    CHECK(one);
  }

  TEST_CASE("invalid sampler arguments") {
    Rng rng(1);
    CHECK_THROWS_AS(sample_gamma(0.0, 1.0, rng), DomainError);
    CHECK_THROWS_AS(sample_gamma(1.0, -1.0, rng), DomainError);
    CHECK_THROWS_AS(sample_beta(1.0, 0.0, rng), DomainError);
    CHECK_THROWS_AS(sample_poisson(-1.0, rng), DomainError);
    CHECK_THROWS_AS(sample_bernoulli(1.5, rng), DomainError);
  }
}
