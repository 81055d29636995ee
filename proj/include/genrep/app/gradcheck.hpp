#pragma once

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "genrep/models.hpp"
#include "genrep/random.hpp"
#include "genrep/variational.hpp"

namespace genrep::app {

struct CheckResult {
  std::string name;
  double max_rel_error = 0.0;
  int points = 0;
  double tolerance = 0.0;
  bool pass = true;
};

/// |a - b| / max(|a|, |b|, floor).
double relative_error(double a, double b, double floor = 1e-6);

/// Five-point central difference of f at x with step h.
double central_difference(const std::function<double(double)>& f, double x, double h);

/// Runs every finite-difference check that applies to (model, q): transform
/// h and u per block, the adaptive beta solve residual, the model gradient,
/// q's score and dlogq/dz, the entropy gradient and the optimizer's chain
/// rule. Points are drawn from q.
std::vector<CheckResult> run_gradchecks(const Model& model, const MeanField& q, int points, double tolerance,
                                        Rng& rng);

}  // namespace genrep::app
