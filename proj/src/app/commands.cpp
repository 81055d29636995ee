#include "genrep/app/commands.hpp"

#include <cmath>
#include <functional>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "genrep/app/gradcheck.hpp"
#include "genrep/app/io.hpp"
#include "genrep/estimators.hpp"
#include "genrep/metrics.hpp"
#include "genrep/trainer.hpp"

namespace genrep::app {

using nlohmann::json;

namespace {

/// One file to write once every input has been validated.
struct Output {
  std::string name;
  std::string contents;
};

std::vector<double> toy_observations(const RunConfig& cfg) {
  if (cfg.model.observations) return *cfg.model.observations;
  const Dataset d = load_dense_csv(*cfg.data.train);
  return {d.values.data(), d.values.data() + d.values.size()};
}

Eigen::MatrixXd load_matrix(const RunConfig& cfg, DType want) {
  const Dataset d = load_dense_csv(*cfg.data.train);
  const bool ok = want == DType::Binary ? d.dtype == DType::Binary : d.dtype != DType::Real;
  if (!ok) {
    throw ParseError(cfg.data.train->string() + ": expected " + std::string(to_string(want)) + " data, found " +
                     std::string(to_string(d.dtype)));
  }
  return d.values;
}

std::optional<Dataset> load_heldout(const RunConfig& cfg) {
  if (!cfg.data.heldout) return std::nullopt;
  return load_sparse_triplets(*cfg.data.heldout, *cfg.data.heldout_shape);
}

/// Observed-cell mask for the factorization model: held-out cells are hidden
/// at training and evaluation time.
std::optional<Eigen::MatrixXd> mf_mask(const RunConfig& cfg, const std::optional<Dataset>& heldout) {
  if (cfg.model.kind != ModelKind::BetaGammaMf || !heldout) return std::nullopt;
  Eigen::MatrixXd mask = Eigen::MatrixXd::Ones(heldout->values.rows(), heldout->values.cols());
  for (const auto& e : heldout->entries) mask(e.row, e.col) = 0.0;
  return mask;
}

json block_json(const FactorBlock& b) {
  json params = json::array();
  for (Eigen::Index i = 0; i < b.num_factors; ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < b.params.cols(); ++j) row.push_back(b.params(i, j));
    params.push_back(std::move(row));
  }
  return {{"name", b.name},
          {"family", std::string(to_string(b.family))},
          {"transform", std::string(to_string(b.transform))},
          {"num_factors", b.num_factors},
          {"factor_dim", b.factor_dim},
          {"params", std::move(params)}};
}

json matrix_json(const Eigen::Ref<const Eigen::MatrixXd>& m) {
  json out = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    out.push_back(std::move(row));
  }
  return out;
}

std::string report_json(const EvalReport& r) {
  json j = {{"metric", r.metric},
            {"value", r.value},
            {"stddev", r.stddev},
            {"n_samples", r.n_samples},
            {"convention", r.convention}};
  return j.dump(2) + "\n";
}

std::string trace_csv(const std::vector<TraceRow>& trace) {
  std::string out = "iteration,elbo,grad_norm,elapsed_seconds\n";
  for (const auto& row : trace) {
    out += std::to_string(row.iteration) + ',' + format_double(row.elbo) + ',' + format_double(row.grad_norm) + ',' +
           format_double(row.elapsed_seconds) + '\n';
  }
  return out;
}

// ---------------------------------------------------------------- subcommands

struct Plan {
  std::vector<Output> outputs;
  int exit_code = kOk;
  std::string summary;
};

Plan plan_synth(const RunConfig& cfg) {
  Rng rng = Rng(cfg.seed).split("data");
  const auto rows = cfg.synth.rows;
  const auto cols = cfg.synth.cols;
  Plan plan;
  json truth = {{"model", std::string(to_string(cfg.model.kind))}, {"seed", cfg.seed}};

  if (cfg.model.is_toy()) {
    Eigen::MatrixXd data(rows, 1);
    double z = 0.0;
    if (cfg.model.kind == ModelKind::GammaPoissonToy) {
      z = sample_gamma(cfg.model.gamma_prior.shape, cfg.model.gamma_prior.rate, rng);
      for (Eigen::Index i = 0; i < rows; ++i) data(i, 0) = static_cast<double>(sample_poisson(z, rng));
    } else {
      z = sample_beta(cfg.model.beta_prior.alpha, cfg.model.beta_prior.beta, rng);
      for (Eigen::Index i = 0; i < rows; ++i) data(i, 0) = sample_bernoulli(z, rng);
    }
    truth["latents"] = {{"z", z}};
    plan.outputs.push_back({"train.csv", dense_csv(data)});
    plan.outputs.push_back({"truth.json", truth.dump(2) + "\n"});
    plan.summary = "synth: " + std::to_string(rows) + " observations";
    return plan;
  }

  Eigen::MatrixXd data;
  Eigen::VectorXd latents;
  std::unique_ptr<Model> model;
  if (cfg.model.kind == ModelKind::SparseGammaDef) {
    auto s = synthesize_def(cfg.model.def, rows, cols, rng);
    data = std::move(s.data);
    latents = std::move(s.latents);
    model = std::make_unique<SparseGammaDef>(cfg.model.def, data);
  } else {
    auto s = synthesize_mf(cfg.model.mf, rows, cols, rng);
    data = std::move(s.data);
    latents = std::move(s.latents);
    model = std::make_unique<BetaGammaMf>(cfg.model.mf, data);
  }
  json blocks = json::object();
  for (std::size_t b = 0; b < model->layout().blocks().size(); ++b) {
    blocks[model->layout().blocks()[b].name] = matrix_json(model->block(latents, b));
  }
  truth["latents"] = std::move(blocks);

  Rng split_rng = rng.split("heldout");
  Eigen::MatrixXd train = data;
  std::vector<HeldoutEntry> heldout;
  if (cfg.model.kind == ModelKind::SparseGammaDef) {
    auto s = split_tokens(data, cfg.synth.heldout_fraction, split_rng);
    train = std::move(s.train);
    heldout = std::move(s.heldout);
  } else {
    heldout = split_entries(data, cfg.synth.heldout_fraction, split_rng).heldout;
  }
  const json shape = {{"rows", rows}, {"cols", cols}};
  plan.outputs.push_back({"train.csv", dense_csv(train)});
  plan.outputs.push_back({"heldout.csv", triplets_csv(heldout)});
  plan.outputs.push_back({"heldout.shape.json", shape.dump(2) + "\n"});
  plan.outputs.push_back({"truth.json", truth.dump(2) + "\n"});
  plan.summary = "synth: " + std::to_string(rows) + "x" + std::to_string(cols) + " " +
                 std::string(to_string(cfg.model.kind)) + ", " + std::to_string(heldout.size()) + " held-out entries";
  return plan;
}

Plan plan_train(const RunConfig& cfg) {
  const auto heldout = load_heldout(cfg);
  const auto model = build_model(cfg, mf_mask(cfg, heldout));
  const MeanField q0 = MeanField::for_model(*model, cfg.variational);
  const Rng root = Rng(cfg.seed).split("training");

  Plan plan;
  std::ostringstream summary;
  for (std::size_t k = 0; k < cfg.train.etas.size(); ++k) {
    const double eta = cfg.train.etas[k];
    TrainOptions opts;
    opts.iterations = cfg.train.iterations;
    opts.step = {eta, cfg.train.kappa, cfg.train.tau, cfg.train.gamma};
    opts.estimator = cfg.estimator;
    opts.record_wall_time = cfg.train.record_wall_time;
    Rng rng = root.split(k);

    FitResult result;
    std::string status = "completed";
    try {
      result = fit(*model, q0, opts, rng);
    } catch (const FitAborted& e) {
      result = e.partial();
      status = std::string("aborted: ") + e.what();
      plan.exit_code = kFitAborted;
    }
    const std::string tag = "eta" + format_double(eta);
    plan.outputs.push_back({"trace_" + tag + ".csv", trace_csv(result.trace)});
    plan.outputs.push_back(
        {"params_" + tag + ".json", params_json(*model, result.q, eta, static_cast<long>(result.trace.size()), status)});
    summary << "train eta=" << format_double(eta) << ": " << result.trace.size() << " iterations, ";
    if (!result.trace.empty()) summary << "final elbo " << format_double(result.trace.back().elbo) << ", ";
    summary << status << "\n";
  }
  plan.summary = summary.str();
  return plan;
}

Plan plan_gradcheck(const RunConfig& cfg) {
  const auto model = build_model(cfg);
  const MeanField q = MeanField::for_model(*model, cfg.variational);
  Rng rng = Rng(cfg.seed).split("gradcheck");
  const auto results = run_gradchecks(*model, q, cfg.gradcheck.points, cfg.gradcheck.tolerance, rng);

  Plan plan;
  std::string csv = "check,max_rel_error,points,tolerance,pass\n";
  std::ostringstream summary;
  for (const auto& r : results) {
    csv += r.name + ',' + format_double(r.max_rel_error) + ',' + std::to_string(r.points) + ',' +
           format_double(r.tolerance) + ',' + (r.pass ? "true" : "false") + '\n';
    summary << (r.pass ? "PASS " : "FAIL ") << r.name << " max_rel_error=" << format_double(r.max_rel_error) << "\n";
    if (!r.pass) plan.exit_code = kCheckFailed;
  }
  plan.outputs.push_back({"gradcheck.csv", csv});
  plan.summary = summary.str();
  return plan;
}

Plan plan_variance(const RunConfig& cfg) {
  const auto model = build_model(cfg);
  const MeanField q = MeanField::for_model(*model, cfg.variational);
  const Rng rng = Rng(cfg.seed).split("variance");

  Plan plan;
  std::string csv = "estimator,n_samples,component,mean,variance,trials\n";
  std::ostringstream summary;
  for (const auto kind : cfg.variance.estimators) {
    for (const int n : cfg.variance.n_samples) {
      EstimatorConfig ec = cfg.estimator;
      ec.kind = kind;
      ec.n_samples = n;
      const auto report = estimator_variance(*model, q, ec, cfg.variance.trials, rng);
      for (std::size_t c = 0; c < report.components.size(); ++c) {
        const auto i = static_cast<Eigen::Index>(c);
        csv += std::string(to_string(kind)) + ',' + std::to_string(n) + ',' + report.components[c] + ',' +
               format_double(report.mean[i]) + ',' + format_double(report.variance[i]) + ',' +
               std::to_string(report.trials) + '\n';
      }
      summary << "variance " << to_string(kind) << " n=" << n << ": mean component variance "
              << format_double(report.variance.mean()) << "\n";
    }
  }
  plan.outputs.push_back({"variance.csv", csv});
  plan.summary = summary.str();
  return plan;
}

Plan plan_eval(const RunConfig& cfg) {
  const auto heldout = load_heldout(cfg);
  const auto model = build_model(cfg, mf_mask(cfg, heldout));
  if (heldout->values.rows() != model->layout().blocks().front().rows) {
    throw ParseError(cfg.data.heldout_shape->string() + ": held-out rows do not match the training data");
  }
  if (heldout->entries.empty()) throw ParseError(cfg.data.heldout->string() + ": no held-out entries");
  const MeanField q = load_params(*model, *cfg.eval.params);
  const Rng root = Rng(cfg.seed).split("eval");

  Plan plan;
  Rng ll_rng = root.split("predictive_ll");
  auto ll = predictive_log_likelihood(*model, q, heldout->entries, cfg.eval.posterior_samples, ll_rng);
  plan.outputs.push_back({"eval_predictive_ll.json", report_json(ll)});
  plan.summary = "eval predictive_ll: " + format_double(ll.value) + " (sd " + format_double(ll.stddev) + ")\n";
  if (const auto* def = dynamic_cast<const SparseGammaDef*>(model.get())) {
    Rng p_rng = root.split("perplexity");
    const auto p = perplexity(*def, q, heldout->entries, p_rng);
    plan.outputs.push_back({"eval_perplexity.json", report_json(p)});
    plan.summary += "eval perplexity: " + format_double(p.value) + "\n";
  }
  return plan;
}

}  // namespace

std::unique_ptr<Model> build_model(const RunConfig& cfg, const std::optional<Eigen::MatrixXd>& mask) {
  switch (cfg.model.kind) {
    case ModelKind::GammaPoissonToy: {
      std::vector<std::int64_t> data;
      for (double x : toy_observations(cfg)) {
        if (!(x >= 0.0) || x != std::floor(x)) throw ParseError("gamma_poisson_toy: observations must be counts");
        data.push_back(static_cast<std::int64_t>(x));
      }
      return std::make_unique<GammaPoissonToy>(std::move(data), cfg.model.gamma_prior);
    }
    case ModelKind::BetaBernoulliToy: {
      std::vector<int> data;
      for (double x : toy_observations(cfg)) {
        if (x != 0.0 && x != 1.0) throw ParseError("beta_bernoulli_toy: observations must be 0 or 1");
        data.push_back(static_cast<int>(x));
      }
      return std::make_unique<BetaBernoulliToy>(std::move(data), cfg.model.beta_prior);
    }
    case ModelKind::SparseGammaDef:
      return std::make_unique<SparseGammaDef>(cfg.model.def, load_matrix(cfg, DType::Count), mask);
    case ModelKind::BetaGammaMf:
      return std::make_unique<BetaGammaMf>(cfg.model.mf, load_matrix(cfg, DType::Binary), mask);
  }
  throw DomainError("unknown model kind");
}

std::string params_json(const Model& model, const MeanField& q, double eta, long iterations,
                        const std::string& status) {
  json blocks = json::array();
  for (const auto& b : q.blocks()) blocks.push_back(block_json(b));
  const json j = {{"model", std::string(model.name())},
                  {"eta", eta},
                  {"iterations", iterations},
                  {"status", status},
                  {"blocks", std::move(blocks)}};
  return j.dump(2) + "\n";
}

MeanField load_params(const Model& model, const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  const auto fail = [&](const std::string& msg) -> ParseError { return ParseError(path.string() + ": " + msg); };
  if (!j.is_object() || !j.contains("blocks") || !j["blocks"].is_array()) throw fail("expected an object with 'blocks'");
  if (j.value("model", std::string()) != model.name()) {
    throw fail("parameters are for model '" + j.value("model", std::string("?")) + "', not '" +
               std::string(model.name()) + "'");
  }
  const auto& layout = model.layout();
  const auto& blocks = j["blocks"];
  if (blocks.size() != layout.blocks().size()) throw fail("block count does not match the model");

  std::map<std::string, FamilyChoice> choices;
  try {
    for (const auto& b : blocks) {
      choices[b.at("name").get<std::string>()] = {parse_family_kind(b.at("family").get<std::string>()),
                                                  parse_transform_kind(b.at("transform").get<std::string>())};
    }
  } catch (const std::exception& e) {
    throw fail(std::string("malformed block: ") + e.what());
  }
  MeanField q = MeanField::for_model(model, choices);
  std::vector<double> flat;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const auto& fb = q.blocks()[i];
    const auto& b = blocks[i];
    if (b.at("name").get<std::string>() != fb.name) throw fail("block " + std::to_string(i) + " should be " + fb.name);
    const auto& rows = b.at("params");
    if (!rows.is_array() || static_cast<Eigen::Index>(rows.size()) != fb.num_factors) {
      throw fail(fb.name + ": expected " + std::to_string(fb.num_factors) + " parameter rows");
    }
    for (const auto& row : rows) {
      if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != fb.params_per_factor()) {
        throw fail(fb.name + ": expected " + std::to_string(fb.params_per_factor()) + " parameters per row");
      }
      for (const auto& v : row) {
        if (!v.is_number()) throw fail(fb.name + ": parameters must be numbers");
        flat.push_back(v.get<double>());
      }
    }
  }
  try {
    q.set_flat_params(Eigen::Map<const Eigen::VectorXd>(flat.data(), static_cast<Eigen::Index>(flat.size())));
  } catch (const std::domain_error& e) {
    throw fail(e.what());
  }
  return q;
}

int run_command(Command command, const RunConfig& cfg, const std::filesystem::path& out_dir, std::ostream& log) {
  check_for(command, cfg);
  Plan plan;
  switch (command) {
    case Command::Synth: plan = plan_synth(cfg); break;
    case Command::Train: plan = plan_train(cfg); break;
    case Command::Gradcheck: plan = plan_gradcheck(cfg); break;
    case Command::Variance: plan = plan_variance(cfg); break;
    case Command::Eval: plan = plan_eval(cfg); break;
  }
  std::filesystem::create_directories(out_dir);
  for (const auto& o : plan.outputs) write_file_atomic(out_dir / o.name, o.contents);
  log << plan.summary;
  if (!plan.summary.empty() && plan.summary.back() != '\n') log << '\n';
  return plan.exit_code;
}

}  // namespace genrep::app
