#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "genrep/app/commands.hpp"
#include "genrep/app/config.hpp"

namespace {

struct Args {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App& sub, Args& args) {
  sub.add_option("--config", args.config, "JSON run configuration")->required()->check(CLI::ExistingFile);
  sub.add_option("--out", args.out, "Output directory (created if missing)")->required();
  sub.add_option("--seed", args.seed, "Overrides the configuration seed");
}

}  // namespace

int main(int argc, char** argv) {
  using genrep::app::Command;

  CLI::App app{"Variational inference with generalized reparameterization gradients"};
  app.require_subcommand(1);
  Args args;
  const std::pair<Command, const char*> commands[] = {
      {Command::Synth, "Draw a synthetic dataset and its latent variables from the model"},
      {Command::Train, "Fit the variational family, one run per step-size scale eta"},
      {Command::Gradcheck, "Compare every analytic derivative with finite differences"},
      {Command::Variance, "Per-component variance of the gradient estimators"},
      {Command::Eval, "Held-out predictive log-likelihood and perplexity"},
  };
  for (const auto& [cmd, help] : commands) {
    add_common(*app.add_subcommand(std::string(genrep::app::to_string(cmd)), help), args);
  }
  CLI11_PARSE(app, argc, argv);

  Command command = Command::Train;
  for (const auto& [cmd, help] : commands) {
    if (app.got_subcommand(std::string(genrep::app::to_string(cmd)))) command = cmd;
  }

  try {
    auto config = genrep::app::load_config(args.config);
    if (args.seed) config.seed = *args.seed;
    return genrep::app::run_command(command, config, args.out, std::cout);
  } catch (const genrep::app::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return genrep::app::kInvalidInput;
  } catch (const genrep::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return genrep::app::kInvalidInput;
  } catch (const std::domain_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return genrep::app::kInvalidInput;
  } catch (const genrep::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return genrep::app::kFitAborted;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
}
