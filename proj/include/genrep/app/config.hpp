#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "genrep/errors.hpp"
#include "genrep/estimators.hpp"
#include "genrep/models.hpp"
#include "genrep/variational.hpp"

namespace genrep::app {

enum class ModelKind { GammaPoissonToy, BetaBernoulliToy, SparseGammaDef, BetaGammaMf };

std::string_view to_string(ModelKind kind);

struct ModelSpec {
  ModelKind kind = ModelKind::GammaPoissonToy;
  GammaParams gamma_prior{1.0, 1.0};
  BetaParams beta_prior{1.0, 1.0};
  std::optional<std::vector<double>> observations;  // toys only
  SparseGammaDefConfig def;
  BetaGammaMfConfig mf;

  bool is_toy() const { return kind == ModelKind::GammaPoissonToy || kind == ModelKind::BetaBernoulliToy; }
};

struct DataSpec {
  std::optional<std::filesystem::path> train;
  std::optional<std::filesystem::path> heldout;
  std::optional<std::filesystem::path> heldout_shape;
};

struct SynthSpec {
  Eigen::Index rows = 20;
  Eigen::Index cols = 30;
  double heldout_fraction = 0.25;
};

struct TrainSpec {
  long iterations = 1000;
  std::vector<double> etas{0.1, 0.5, 1.0, 5.0};
  double kappa = 1e-16;
  double tau = 1.0;
  double gamma = 0.1;
  bool record_wall_time = false;
};

struct VarianceSpec {
  std::vector<EstimatorKind> estimators{EstimatorKind::GRep, EstimatorKind::ScoreFunction};
  std::vector<int> n_samples{1};
  int trials = 1000;
};

struct EvalSpec {
  std::optional<std::filesystem::path> params;
  int posterior_samples = 100;
};

struct GradcheckSpec {
  int points = 20;
  double tolerance = 1e-4;
};

struct RunConfig {
  std::uint64_t seed = 0;
  ModelSpec model;
  std::map<std::string, FamilyChoice> variational;
  EstimatorConfig estimator;
  DataSpec data;
  SynthSpec synth;
  TrainSpec train;
  VarianceSpec variance;
  EvalSpec eval;
  GradcheckSpec gradcheck;
};

/// Every problem found in a configuration, one line each.
class ConfigError : public ParseError {
 public:
  explicit ConfigError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  std::vector<std::string> problems_;
};

/// Parses a JSON configuration. Relative paths resolve against `base_dir`.
/// Unknown keys, wrong types and out-of-range values are all collected
/// before a single ConfigError is thrown.
RunConfig parse_config(std::string_view json_text, const std::filesystem::path& base_dir);
RunConfig load_config(const std::filesystem::path& path);

enum class Command { Synth, Train, Gradcheck, Variance, Eval };

std::string_view to_string(Command c);

/// Requirements that depend on the subcommand (input files present, the
/// model supports the operation). Throws ConfigError listing all of them.
void check_for(Command command, const RunConfig& config);

}  // namespace genrep::app
