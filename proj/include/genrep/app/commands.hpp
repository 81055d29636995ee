#pragma once

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>

#include <Eigen/Dense>

#include "genrep/app/config.hpp"
#include "genrep/models.hpp"
#include "genrep/variational.hpp"

namespace genrep::app {

enum ExitCode : int {
  kOk = 0,
  kCheckFailed = 1,   // gradcheck found a mismatch
  kInvalidInput = 2,  // configuration, data or parameter file rejected
  kFitAborted = 3,    // at least one training run became non-finite
};

/// Builds the configured model from its data. `mask` marks observed cells
/// for the matrix models.
std::unique_ptr<Model> build_model(const RunConfig& config, const std::optional<Eigen::MatrixXd>& mask = std::nullopt);

/// Variational family in the layout produced by a params JSON file written
/// by `train`.
MeanField load_params(const Model& model, const std::filesystem::path& path);
std::string params_json(const Model& model, const MeanField& q, double eta, long iterations,
                        const std::string& status);

/// Runs one subcommand, writing its files to `out_dir` and a summary to
/// `log`. Inputs are fully validated before anything is written.
int run_command(Command command, const RunConfig& config, const std::filesystem::path& out_dir, std::ostream& log);

}  // namespace genrep::app
