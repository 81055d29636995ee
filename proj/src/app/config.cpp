#include "genrep/app/config.hpp"

#include <cmath>
#include <functional>
#include <set>

#include <json.hpp>

#include "genrep/app/io.hpp"
#include "genrep/transforms.hpp"

namespace genrep::app {

using nlohmann::json;

namespace {

std::string join(const std::vector<std::string>& lines) {
  std::string out = "invalid configuration:";
  for (const auto& l : lines) out += "\n  - " + l;
  return out;
}

/// Reads typed fields out of JSON objects, recording every problem instead
/// of stopping at the first.
class Reader {
 public:
  std::vector<std::string> errors;

  /// Returns the object at obj[key] (or null if absent) after checking that
  /// it only has `allowed` keys.
  const json* object(const json& parent, const std::string& key, const std::string& path,
                     std::initializer_list<std::string_view> allowed) {
    if (!parent.contains(key)) return nullptr;
    const json& obj = parent.at(key);
    const std::string here = path.empty() ? key : path + "." + key;
    if (!obj.is_object()) {
      errors.push_back(here + ": expected an object");
      return nullptr;
    }
    only(obj, here, allowed);
    return &obj;
  }

  void only(const json& obj, const std::string& path, std::initializer_list<std::string_view> allowed) {
    for (const auto& [k, v] : obj.items()) {
      bool ok = false;
      for (auto a : allowed) ok = ok || k == a;
      if (!ok) errors.push_back((path.empty() ? k : path + "." + k) + ": unknown key");
    }
  }

  void number(const json* obj, const std::string& path, const std::string& key, double& out,
              const std::function<bool(double)>& valid, const char* requirement) {
    if (!obj || !obj->contains(key)) return;
    const json& v = obj->at(key);
    if (!v.is_number()) {
      errors.push_back(path + "." + key + ": expected a number");
      return;
    }
    const double d = v.get<double>();
    if (!std::isfinite(d) || !valid(d)) {
      errors.push_back(path + "." + key + ": " + requirement);
      return;
    }
    out = d;
  }

  template <typename Int>
  void integer(const json* obj, const std::string& path, const std::string& key, Int& out, long long min,
               const char* requirement) {
    if (!obj || !obj->contains(key)) return;
    const json& v = obj->at(key);
    if (!v.is_number_integer()) {
      errors.push_back(path + "." + key + ": expected an integer");
      return;
    }
    const auto i = v.get<long long>();
    if (i < min) {
      errors.push_back(path + "." + key + ": " + requirement);
      return;
    }
    out = static_cast<Int>(i);
  }

  void boolean(const json* obj, const std::string& path, const std::string& key, bool& out) {
    if (!obj || !obj->contains(key)) return;
    const json& v = obj->at(key);
    if (!v.is_boolean()) {
      errors.push_back(path + "." + key + ": expected true or false");
      return;
    }
    out = v.get<bool>();
  }

  std::optional<std::string> string(const json* obj, const std::string& path, const std::string& key) {
    if (!obj || !obj->contains(key)) return std::nullopt;
    const json& v = obj->at(key);
    if (!v.is_string()) {
      errors.push_back(path + "." + key + ": expected a string");
      return std::nullopt;
    }
    return v.get<std::string>();
  }

  void gamma_params(const json* parent, const std::string& path, const std::string& key, GammaParams& out) {
    if (!parent) return;
    const json* o = object(*parent, key, path, {"shape", "rate"});
    const std::string here = path + "." + key;
    auto positive = [](double d) { return d > 0.0; };
    number(o, here, "shape", out.shape, positive, "must be positive");
    number(o, here, "rate", out.rate, positive, "must be positive");
  }
};

auto positive = [](double d) { return d > 0.0; };

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

void parse_model(Reader& rd, const json& root, ModelSpec& m) {
  if (!root.contains("model")) {
    rd.errors.push_back("model: required");
    return;
  }
  const json& obj = root.at("model");
  if (!obj.is_object()) {
    rd.errors.push_back("model: expected an object");
    return;
  }
  const auto kind = rd.string(&obj, "model", "kind");
  if (!kind) {
    if (!obj.contains("kind")) rd.errors.push_back("model.kind: required");
    return;
  }
  if (*kind == "gamma_poisson_toy") {
    m.kind = ModelKind::GammaPoissonToy;
    rd.only(obj, "model", {"kind", "prior", "observations"});
    rd.gamma_params(&obj, "model", "prior", m.gamma_prior);
  } else if (*kind == "beta_bernoulli_toy") {
    m.kind = ModelKind::BetaBernoulliToy;
    rd.only(obj, "model", {"kind", "prior", "observations"});
    const json* p = rd.object(obj, "prior", "model", {"alpha", "beta"});
    rd.number(p, "model.prior", "alpha", m.beta_prior.alpha, positive, "must be positive");
    rd.number(p, "model.prior", "beta", m.beta_prior.beta, positive, "must be positive");
  } else if (*kind == "sparse_gamma_def") {
    m.kind = ModelKind::SparseGammaDef;
    rd.only(obj, "model", {"kind", "layers", "alpha_z", "weight_prior", "top_prior"});
    if (obj.contains("layers")) {
      const json& l = obj.at("layers");
      bool ok = l.is_array() && !l.empty();
      if (ok) {
        for (const auto& v : l) ok = ok && v.is_number_integer() && v.get<long long>() > 0;
      }
      if (ok) {
        m.def.layers.clear();
        for (const auto& v : l) m.def.layers.push_back(v.get<Eigen::Index>());
      } else {
        rd.errors.push_back("model.layers: expected a non-empty array of positive integers");
      }
    }
    rd.number(&obj, "model", "alpha_z", m.def.alpha_z, positive, "must be positive");
    rd.gamma_params(&obj, "model", "weight_prior", m.def.weight_prior);
    rd.gamma_params(&obj, "model", "top_prior", m.def.top_prior);
  } else if (*kind == "beta_gamma_mf") {
    m.kind = ModelKind::BetaGammaMf;
    rd.only(obj, "model", {"kind", "latent_dim", "weight_prior"});
    rd.integer(&obj, "model", "latent_dim", m.mf.latent_dim, 1, "must be at least 1");
    rd.gamma_params(&obj, "model", "weight_prior", m.mf.weight_prior);
  } else {
    rd.errors.push_back("model.kind: unknown model '" + *kind +
                        "' (expected gamma_poisson_toy, beta_bernoulli_toy, sparse_gamma_def or beta_gamma_mf)");
    return;
  }

  if (m.is_toy() && obj.contains("observations")) {
    const json& o = obj.at("observations");
    bool ok = o.is_array() && !o.empty();
    std::vector<double> values;
    if (ok) {
      for (const auto& v : o) {
        if (!v.is_number_integer()) {
          ok = false;
          break;
        }
        const auto x = v.get<long long>();
        ok = ok && x >= 0 && (m.kind != ModelKind::BetaBernoulliToy || x <= 1);
        values.push_back(static_cast<double>(x));
      }
    }
    if (ok) {
      m.observations = std::move(values);
    } else {
      rd.errors.push_back(m.kind == ModelKind::BetaBernoulliToy
                              ? "model.observations: expected a non-empty array of 0/1 values"
                              : "model.observations: expected a non-empty array of non-negative integers");
    }
  }
}

void parse_variational(Reader& rd, const json& root, std::map<std::string, FamilyChoice>& out) {
  if (!root.contains("variational")) return;
  const json& obj = root.at("variational");
  if (!obj.is_object()) {
    rd.errors.push_back("variational: expected an object mapping block names to {family, transform}");
    return;
  }
  for (const auto& [name, spec] : obj.items()) {
    const std::string path = "variational." + name;
    if (!spec.is_object()) {
      rd.errors.push_back(path + ": expected an object");
      continue;
    }
    rd.only(spec, path, {"family", "transform"});
    const auto family = rd.string(&spec, path, "family");
    const auto transform = rd.string(&spec, path, "transform");
    if (!family) rd.errors.push_back(path + ".family: required");
    if (!transform) rd.errors.push_back(path + ".transform: required");
    if (!family || !transform) continue;
    std::optional<FamilyKind> fk;
    std::optional<TransformKind> tk;
    try {
      fk = parse_family_kind(*family);
    } catch (const std::exception&) {
      rd.errors.push_back(path + ".family: unknown family '" + *family + "'");
    }
    try {
      tk = parse_transform_kind(*transform);
    } catch (const std::exception&) {
      rd.errors.push_back(path + ".transform: unknown transform '" + *transform + "'");
    }
    if (fk && tk) {
      if (!compatible(*tk, *fk)) {
        rd.errors.push_back(path + ": transform '" + *transform + "' cannot be used with family '" + *family + "'");
      } else {
        out[name] = {*fk, *tk};
      }
    }
  }
}

void parse_estimator(Reader& rd, const json& root, EstimatorConfig& e) {
  const json* o = rd.object(root, "estimator", "", {"kind", "n_samples", "cv_samples"});
  if (auto k = rd.string(o, "estimator", "kind")) {
    try {
      e.kind = parse_estimator_kind(*k);
    } catch (const std::exception&) {
      rd.errors.push_back("estimator.kind: unknown estimator '" + *k + "' (expected grep, score or score_cv)");
    }
  }
  rd.integer(o, "estimator", "n_samples", e.n_samples, 1, "must be at least 1");
  rd.integer(o, "estimator", "cv_samples", e.cv_samples, 2, "must be at least 2");
}

std::vector<EstimatorKind> parse_estimator_list(Reader& rd, const json& v, const std::string& path) {
  std::vector<EstimatorKind> out;
  if (!v.is_array() || v.empty()) {
    rd.errors.push_back(path + ": expected a non-empty array of estimator names");
    return out;
  }
  for (const auto& s : v) {
    try {
      if (!s.is_string()) throw DomainError("");
      out.push_back(parse_estimator_kind(s.get<std::string>()));
    } catch (const std::exception&) {
      rd.errors.push_back(path + ": entries must be one of grep, score, score_cv");
      return {};
    }
  }
  return out;
}

}  // namespace

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::GammaPoissonToy: return "gamma_poisson_toy";
    case ModelKind::BetaBernoulliToy: return "beta_bernoulli_toy";
    case ModelKind::SparseGammaDef: return "sparse_gamma_def";
    case ModelKind::BetaGammaMf: return "beta_gamma_mf";
  }
  return "?";
}

std::string_view to_string(Command c) {
  switch (c) {
    case Command::Synth: return "synth";
    case Command::Train: return "train";
    case Command::Gradcheck: return "gradcheck";
    case Command::Variance: return "variance";
    case Command::Eval: return "eval";
  }
  return "?";
}

ConfigError::ConfigError(std::vector<std::string> problems)
    : ParseError(join(problems)), problems_(std::move(problems)) {}

RunConfig parse_config(std::string_view json_text, const std::filesystem::path& base_dir) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError({std::string("not valid JSON: ") + e.what()});
  }
  if (!root.is_object()) throw ConfigError({"top level: expected a JSON object"});

  Reader rd;
  RunConfig cfg;
  rd.only(root, "",
          {"seed", "model", "variational", "estimator", "data", "synth", "train", "variance", "eval", "gradcheck"});

  if (root.contains("seed")) {
    const json& s = root.at("seed");
    if (s.is_number_unsigned()) {
      cfg.seed = s.get<std::uint64_t>();
    } else if (s.is_number_integer() && s.get<long long>() >= 0) {
      cfg.seed = static_cast<std::uint64_t>(s.get<long long>());
    } else {
      rd.errors.push_back("seed: expected a non-negative integer");
    }
  }

  parse_model(rd, root, cfg.model);
  parse_variational(rd, root, cfg.variational);
  parse_estimator(rd, root, cfg.estimator);

  if (const json* d = rd.object(root, "data", "", {"train", "heldout", "heldout_shape"})) {
    if (auto s = rd.string(d, "data", "train")) cfg.data.train = resolve(base_dir, *s);
    if (auto s = rd.string(d, "data", "heldout")) cfg.data.heldout = resolve(base_dir, *s);
    if (auto s = rd.string(d, "data", "heldout_shape")) cfg.data.heldout_shape = resolve(base_dir, *s);
  }
  if (cfg.data.heldout && !cfg.data.heldout_shape) {
    auto p = *cfg.data.heldout;
    p.replace_extension(".shape.json");
    cfg.data.heldout_shape = p;
  }

  if (const json* s = rd.object(root, "synth", "", {"rows", "cols", "heldout_fraction"})) {
    rd.integer(s, "synth", "rows", cfg.synth.rows, 1, "must be at least 1");
    rd.integer(s, "synth", "cols", cfg.synth.cols, 1, "must be at least 1");
    rd.number(s, "synth", "heldout_fraction", cfg.synth.heldout_fraction,
              [](double f) { return f >= 0.0 && f < 1.0; }, "must lie in [0, 1)");
  }

  if (const json* t =
          rd.object(root, "train", "", {"iterations", "eta", "kappa", "tau", "gamma", "record_wall_time"})) {
    rd.integer(t, "train", "iterations", cfg.train.iterations, 0, "must be non-negative");
    if (t->contains("eta")) {
      const json& e = t->at("eta");
      std::vector<double> etas;
      bool ok = true;
      if (e.is_number()) {
        etas.push_back(e.get<double>());
      } else if (e.is_array() && !e.empty()) {
        for (const auto& v : e) {
          if (!v.is_number()) ok = false;
          else etas.push_back(v.get<double>());
        }
      } else {
        ok = false;
      }
      std::set<double> distinct(etas.begin(), etas.end());
      for (double v : etas) ok = ok && std::isfinite(v) && v > 0.0;
      if (!ok || distinct.size() != etas.size()) {
        rd.errors.push_back("train.eta: expected a positive number or a non-empty array of distinct positive numbers");
      } else {
        cfg.train.etas = etas;
      }
    }
    rd.number(t, "train", "kappa", cfg.train.kappa, positive, "must be positive");
    rd.number(t, "train", "tau", cfg.train.tau, positive, "must be positive");
    rd.number(t, "train", "gamma", cfg.train.gamma, [](double g) { return g > 0.0 && g <= 1.0; },
              "must lie in (0, 1]");
    rd.boolean(t, "train", "record_wall_time", cfg.train.record_wall_time);
  }

  if (const json* v = rd.object(root, "variance", "", {"estimators", "n_samples", "trials"})) {
    if (v->contains("estimators")) {
      auto kinds = parse_estimator_list(rd, v->at("estimators"), "variance.estimators");
      if (!kinds.empty()) cfg.variance.estimators = kinds;
    }
    if (v->contains("n_samples")) {
      const json& n = v->at("n_samples");
      bool ok = n.is_array() && !n.empty();
      std::vector<int> counts;
      if (ok) {
        for (const auto& x : n) {
          ok = ok && x.is_number_integer() && x.get<long long>() >= 1;
          if (ok) counts.push_back(x.get<int>());
        }
      }
      if (ok) cfg.variance.n_samples = counts;
      else rd.errors.push_back("variance.n_samples: expected a non-empty array of positive integers");
    }
    rd.integer(v, "variance", "trials", cfg.variance.trials, 100, "must be at least 100");
  }

  if (const json* e = rd.object(root, "eval", "", {"params", "posterior_samples"})) {
    if (auto s = rd.string(e, "eval", "params")) cfg.eval.params = resolve(base_dir, *s);
    rd.integer(e, "eval", "posterior_samples", cfg.eval.posterior_samples, 1, "must be at least 1");
  }

  if (const json* g = rd.object(root, "gradcheck", "", {"points", "tolerance"})) {
    rd.integer(g, "gradcheck", "points", cfg.gradcheck.points, 1, "must be at least 1");
    rd.number(g, "gradcheck", "tolerance", cfg.gradcheck.tolerance, positive, "must be positive");
  }

  if (!rd.errors.empty()) throw ConfigError(rd.errors);
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const ParseError& e) {
    throw ConfigError({e.what()});
  }
  return parse_config(text, path.parent_path());
}

void check_for(Command command, const RunConfig& cfg) {
  std::vector<std::string> errors;
  auto need_file = [&](const std::optional<std::filesystem::path>& p, const char* key) {
    if (!p) {
      errors.push_back(std::string(key) + ": required by '" + std::string(to_string(command)) + "'");
    } else if (!std::filesystem::is_regular_file(*p)) {
      errors.push_back(std::string(key) + ": file not found: " + p->string());
    }
  };
  const bool needs_data = command != Command::Synth;
  if (needs_data) {
    if (cfg.model.is_toy()) {
      if (!cfg.model.observations) need_file(cfg.data.train, "data.train");
    } else {
      need_file(cfg.data.train, "data.train");
    }
  }
  if (command == Command::Eval) {
    if (cfg.model.is_toy()) errors.push_back("model.kind: eval needs a matrix model (sparse_gamma_def or beta_gamma_mf)");
    need_file(cfg.data.heldout, "data.heldout");
    if (cfg.data.heldout) need_file(cfg.data.heldout_shape, "data.heldout_shape");
    need_file(cfg.eval.params, "eval.params");
  }
  if (!errors.empty()) throw ConfigError(errors);
}

}  // namespace genrep::app
