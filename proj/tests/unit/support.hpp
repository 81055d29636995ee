#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace testing {

/// Running mean and variance (Welford).
struct Moments {
  long n = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    ++n;
    const double d = x - mean;
    mean += d / static_cast<double>(n);
    m2 += d * (x - mean);
  }
  double variance() const { return m2 / static_cast<double>(n - 1); }
  double std_error() const { return std::sqrt(variance() / static_cast<double>(n)); }
};

/// Per-component version for gradient vectors.
struct VectorMoments {
  long n = 0;
  Eigen::VectorXd mean;
  Eigen::VectorXd m2;

  void add(const Eigen::VectorXd& x) {
    if (n == 0) {
      mean = Eigen::VectorXd::Zero(x.size());
      m2 = Eigen::VectorXd::Zero(x.size());
    }
    ++n;
    const Eigen::VectorXd d = x - mean;
    mean += d / static_cast<double>(n);
    m2 += d.cwiseProduct(x - mean);
  }
  Eigen::VectorXd variance() const { return m2 / static_cast<double>(n - 1); }
  Eigen::VectorXd std_error() const { return (variance() / static_cast<double>(n)).cwiseSqrt(); }
};

inline double five_point(const std::function<double(double)>& f, double x, double h) {
  return ((f(x - 2 * h) - f(x + 2 * h)) + 8 * (f(x + h) - f(x - h))) / (12 * h);
}

inline double rel_err(double a, double b, double floor = 1e-8) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

/// Two-sample Kolmogorov-Smirnov statistic.
inline double ks_statistic(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / a.size() - static_cast<double>(j) / b.size()));
  }
  return d;
}

/// Critical value of the two-sample KS statistic at the 1% level.
inline double ks_critical_1pct(std::size_t n, std::size_t m) {
  return 1.628 * std::sqrt(static_cast<double>(n + m) / (static_cast<double>(n) * static_cast<double>(m)));
}

}  // namespace testing
