#include <optional>
#include <sstream>
#include <string>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "genrep/app/commands.hpp"
#include "genrep/app/config.hpp"
#include "genrep/errors.hpp"
#include "genrep/estimators.hpp"
#include "genrep/specialfn.hpp"
#include "genrep/trainer.hpp"
#include "genrep/transforms.hpp"

namespace py = pybind11;
using namespace genrep;

namespace {

std::span<const double> view(const Eigen::VectorXd& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

FamilyParams family_params(const std::string& family, const Eigen::VectorXd& params) {
  return from_vector(parse_family_kind(family), view(params));
}

MeanField single(const std::string& family, const Eigen::VectorXd& params, const std::string& transform) {
  return MeanField::single(family_params(family, params), parse_transform_kind(transform));
}

py::dict transform_eval(const std::string& kind, const std::string& family, const Eigen::VectorXd& params,
                        const Eigen::VectorXd& z) {
  const TransformEval ev = evaluate(parse_transform_kind(kind), family_params(family, params), view(z));
  py::dict d;
  d["z"] = ev.z;
  d["eps"] = ev.eps;
  d["log_abs_det_jac"] = ev.log_abs_det_jac;
  d["h"] = ev.h;
  d["u"] = ev.u;
  d["fallback"] = ev.fallback;
  return d;
}

py::dict fit_single(const Model& model, const std::string& family, const Eigen::VectorXd& params,
                    const std::string& transform, long iterations, double eta, const std::string& estimator,
                    int n_samples, std::uint64_t seed) {
  TrainOptions opt;
  opt.iterations = iterations;
  opt.step.eta = eta;
  opt.estimator = {parse_estimator_kind(estimator), n_samples, 30};
  Rng rng = Rng(seed).split("training");
  const FitResult r = fit(model, single(family, params, transform), opt, rng);
  Eigen::VectorXd elbo(static_cast<Eigen::Index>(r.trace.size()));
  Eigen::VectorXd norm(elbo.size());
  for (std::size_t i = 0; i < r.trace.size(); ++i) {
    elbo[static_cast<Eigen::Index>(i)] = r.trace[i].elbo;
    norm[static_cast<Eigen::Index>(i)] = r.trace[i].grad_norm;
  }
  py::dict d;
  d["params"] = r.q.flat_params();
  d["elbo"] = elbo;
  d["grad_norm"] = norm;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Generalized reparameterization gradients for variational inference";

  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);
  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<RangeError>(m, "RangeError", PyExc_ValueError);
  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);

  m.def("log_gamma", &specialfn::log_gamma, py::arg("x"));
  m.def("digamma", &specialfn::digamma, py::arg("x"));
  m.def("trigamma", &specialfn::trigamma, py::arg("x"));
  m.def("tetragamma", &specialfn::tetragamma, py::arg("x"));

  m.def(
      "transform_forward",
      [](const std::string& kind, const std::string& family, const Eigen::VectorXd& params, const Eigen::VectorXd& eps) {
        return forward(parse_transform_kind(kind), family_params(family, params), view(eps));
      },
      py::arg("kind"), py::arg("family"), py::arg("params"), py::arg("eps"));
  m.def(
      "transform_inverse",
      [](const std::string& kind, const std::string& family, const Eigen::VectorXd& params, const Eigen::VectorXd& z) {
        return inverse(parse_transform_kind(kind), family_params(family, params), view(z));
      },
      py::arg("kind"), py::arg("family"), py::arg("params"), py::arg("z"));
  m.def("transform_evaluate", &transform_eval, py::arg("kind"), py::arg("family"), py::arg("params"), py::arg("z"),
        "T, log|J|, h = dT/dv and u = d log|J|/dv at eps = T^-1(z)");

  py::class_<Model>(m, "Model")
      .def_property_readonly("name", [](const Model& self) { return std::string(self.name()); })
      .def("log_joint", &Model::log_joint, py::arg("z"))
      .def(
          "log_joint_grad",
          [](const Model& self, const Eigen::VectorXd& z) {
            Eigen::VectorXd g;
            const double f = self.log_joint_grad(z, g);
            return py::make_tuple(f, g);
          },
          py::arg("z"));

  py::class_<GammaPoissonToy, Model>(m, "GammaPoissonToy")
      .def(py::init([](std::vector<std::int64_t> data, double shape, double rate) {
             return GammaPoissonToy(std::move(data), {shape, rate});
           }),
           py::arg("data"), py::arg("shape") = 1.0, py::arg("rate") = 1.0)
      .def("posterior", [](const GammaPoissonToy& s) { return py::make_tuple(s.posterior().shape, s.posterior().rate); })
      .def("log_marginal_likelihood", &GammaPoissonToy::log_marginal_likelihood)
      .def(
          "analytic_elbo",
          [](const GammaPoissonToy& s, const std::string& family, const Eigen::VectorXd& p) {
            return s.analytic_elbo(family_params(family, p));
          },
          py::arg("family"), py::arg("params"))
      .def(
          "analytic_elbo_grad",
          [](const GammaPoissonToy& s, const std::string& family, const Eigen::VectorXd& p) {
            return Eigen::VectorXd(s.analytic_elbo_grad(family_params(family, p)));
          },
          py::arg("family"), py::arg("params"));

  py::class_<BetaBernoulliToy, Model>(m, "BetaBernoulliToy")
      .def(py::init([](std::vector<int> data, double alpha, double beta) {
             return BetaBernoulliToy(std::move(data), {alpha, beta});
           }),
           py::arg("data"), py::arg("alpha") = 1.0, py::arg("beta") = 1.0)
      .def("posterior", [](const BetaBernoulliToy& s) { return py::make_tuple(s.posterior().alpha, s.posterior().beta); })
      .def("log_marginal_likelihood", &BetaBernoulliToy::log_marginal_likelihood)
      .def(
          "analytic_elbo",
          [](const BetaBernoulliToy& s, double a, double b) { return s.analytic_elbo({a, b}); }, py::arg("alpha"),
          py::arg("beta"))
      .def(
          "analytic_elbo_grad",
          [](const BetaBernoulliToy& s, double a, double b) { return Eigen::VectorXd(s.analytic_elbo_grad({a, b})); },
          py::arg("alpha"), py::arg("beta"));

  m.def(
      "estimate_gradient",
      [](const Model& model, const std::string& family, const Eigen::VectorXd& params, const std::string& transform,
         const std::string& estimator, int n_samples, int cv_samples, std::uint64_t seed) {
        Rng rng(seed);
        return estimate_gradient(model, single(family, params, transform),
                                 {parse_estimator_kind(estimator), n_samples, cv_samples}, rng)
            .total;
      },
      py::arg("model"), py::arg("family"), py::arg("params"), py::arg("transform"), py::arg("estimator") = "grep",
      py::arg("n_samples") = 1, py::arg("cv_samples") = 30, py::arg("seed") = 0,
      "One ELBO gradient estimate for a single-block model");

  m.def(
      "estimator_variance",
      [](const Model& model, const std::string& family, const Eigen::VectorXd& params, const std::string& transform,
         const std::string& estimator, int n_samples, int trials, std::uint64_t seed) {
        const VarianceReport r = estimator_variance(model, single(family, params, transform),
                                                    {parse_estimator_kind(estimator), n_samples, 30}, trials,
                                                    Rng(seed).split("variance"));
        return py::make_tuple(r.mean, r.variance);
      },
      py::arg("model"), py::arg("family"), py::arg("params"), py::arg("transform"), py::arg("estimator") = "grep",
      py::arg("n_samples") = 1, py::arg("trials") = 1000, py::arg("seed") = 0,
      "(mean, variance) per component over independent estimates");

  m.def("fit", &fit_single, py::arg("model"), py::arg("family"), py::arg("params"), py::arg("transform"),
        py::arg("iterations") = 1000, py::arg("eta") = 1.0, py::arg("estimator") = "grep", py::arg("n_samples") = 1,
        py::arg("seed") = 0, "Stochastic gradient ascent on the ELBO of a single-block model");

  m.def(
      "step_sizes",
      [](const std::vector<double>& grads, double eta, double kappa, double tau, double gamma) {
        StepSizeSchedule s({eta, kappa, tau, gamma});
        std::vector<double> out;
        for (double g : grads) out.push_back(s.step(Eigen::VectorXd::Constant(1, g))[0]);
        return out;
      },
      py::arg("grads"), py::arg("eta") = 1.0, py::arg("kappa") = 1e-16, py::arg("tau") = 1.0, py::arg("gamma") = 0.1,
      "Step sizes for a scalar gradient sequence");

  m.def(
      "run",
      [](const std::string& command, const std::string& config_path, const std::string& out_dir,
         std::optional<std::uint64_t> seed) {
        app::Command cmd = app::Command::Train;
        bool found = false;
        for (auto c : {app::Command::Synth, app::Command::Train, app::Command::Gradcheck, app::Command::Variance,
                       app::Command::Eval}) {
          if (app::to_string(c) == command) {
            cmd = c;
            found = true;
          }
        }
        if (!found) throw DomainError("unknown command '" + command + "'");
        auto cfg = app::load_config(config_path);
        if (seed) cfg.seed = *seed;
        std::ostringstream log;
        return app::run_command(cmd, cfg, out_dir, log);
      },
      py::arg("command"), py::arg("config"), py::arg("out"), py::arg("seed") = py::none(),
      "Runs a CLI subcommand in-process and returns its exit code");
}
