import json
import math

import numpy as np
import pytest
from scipy import special

import genrep


def test_special_functions_match_scipy():
    xs = np.exp(np.linspace(np.log(1e-3), np.log(1e3), 200))
    for x in xs:
        assert genrep.digamma(x) == pytest.approx(special.digamma(x), rel=1e-12)
        assert genrep.trigamma(x) == pytest.approx(special.polygamma(1, x), rel=1e-12)
        assert genrep.tetragamma(x) == pytest.approx(special.polygamma(2, x), rel=1e-12)
        assert genrep.log_gamma(x) == pytest.approx(special.gammaln(x), rel=1e-12, abs=1e-14)
    with pytest.raises(ValueError):
        genrep.digamma(0.0)


@pytest.mark.parametrize(
    "kind,family,params,z",
    [
        ("gamma-std", "gamma", [2.0, 3.0], [0.4]),
        ("lognormal-std", "lognormal", [0.3, 0.7], [1.9]),
        ("beta-logit-stddev", "beta", [2.0, 5.0], [0.3]),
        ("dirichlet-fullcov", "dirichlet", [1.0, 2.0, 3.0], [0.2, 0.3, 0.5]),
    ],
)
def test_transform_round_trip_and_shapes(kind, family, params, z):
    eps = genrep.transform_inverse(kind, family, params, z)
    back = genrep.transform_forward(kind, family, params, eps)
    np.testing.assert_allclose(back, z, rtol=1e-12)
    ev = genrep.transform_evaluate(kind, family, params, z)
    assert ev["h"].shape == (len(z), len(params))
    assert ev["u"].shape == (len(params),)


def test_gamma_h_by_finite_differences():
    params = np.array([2.0, 3.0])
    ev = genrep.transform_evaluate("gamma-std", "gamma", params, [0.4])
    for j in range(2):
        step = 1e-5 * params[j]
        up, down = params.copy(), params.copy()
        up[j] += step
        down[j] -= step
        fd = (
            genrep.transform_forward("gamma-std", "gamma", up, ev["eps"])[0]
            - genrep.transform_forward("gamma-std", "gamma", down, ev["eps"])[0]
        ) / (2 * step)
        assert ev["h"][0, j] == pytest.approx(fd, rel=1e-6)


def test_toy_models():
    gp = genrep.GammaPoissonToy([1, 2, 0], 1.0, 1.0)
    assert gp.posterior() == (4.0, 4.0)
    np.testing.assert_allclose(gp.analytic_elbo_grad("gamma", [4.0, 4.0]), 0.0, atol=1e-12)
    assert genrep.GammaPoissonToy([0]).log_marginal_likelihood() == pytest.approx(math.log(0.5))
    bb = genrep.BetaBernoulliToy([1, 0, 1])
    assert bb.posterior() == (3.0, 2.0)
    f, g = gp.log_joint_grad(np.array([1.3]))
    assert f == pytest.approx(gp.log_joint(np.array([1.3])))
    assert g.shape == (1,)


def test_estimators_are_unbiased_and_grep_has_lower_variance():
    gp = genrep.GammaPoissonToy([1, 2, 0, 4], 1.5, 1.0)
    truth = gp.analytic_elbo_grad("gamma", [2.0, 3.0])
    trials = 20000
    for estimator in ("grep", "score"):
        mean, var = genrep.estimator_variance(gp, "gamma", [2.0, 3.0], "gamma-std", estimator, 1, trials, seed=3)
        assert np.all(np.abs(mean - truth) < 4 * np.sqrt(var / trials))
    _, v_grep = genrep.estimator_variance(gp, "gamma", [2.0, 3.0], "gamma-std", "grep", 1, 2000, seed=4)
    _, v_score = genrep.estimator_variance(gp, "gamma", [2.0, 3.0], "gamma-std", "score", 1, 2000, seed=4)
    assert np.all(v_grep < v_score)
    g = genrep.estimate_gradient(gp, "gamma", [2.0, 3.0], "gamma-std", seed=1)
    assert np.array_equal(g, genrep.estimate_gradient(gp, "gamma", [2.0, 3.0], "gamma-std", seed=1))


def test_fit_and_step_sizes():
    toy = genrep.GammaPoissonToy([1])
    r = genrep.fit(toy, "gamma", [1.0, 1.0], "gamma-std", iterations=2000, eta=0.5, seed=2024)
    assert r["elbo"].shape == (2000,)
    np.testing.assert_allclose(r["params"], [2.0, 2.0], rtol=0.1)
    assert genrep.step_sizes([1.0])[0] == pytest.approx(0.5)
    with pytest.raises(ArithmeticError):
        genrep.step_sizes([float("nan")])


def test_run_subcommands(tmp_path):
    config = {
        "seed": 3,
        "model": {"kind": "gamma_poisson_toy", "observations": [1, 2, 0]},
        "train": {"iterations": 20, "eta": [1]},
        "variance": {"trials": 200},
    }
    path = tmp_path / "toy.json"
    path.write_text(json.dumps(config))
    assert genrep.run("gradcheck", str(path), str(tmp_path / "gc")) == 0
    assert (tmp_path / "gc" / "gradcheck.csv").exists()
    assert genrep.run("train", str(path), str(tmp_path / "tr")) == 0
    header = (tmp_path / "tr" / "trace_eta1.csv").read_text().splitlines()[0]
    assert header == "iteration,elbo,grad_norm,elapsed_seconds"
    bad = tmp_path / "bad.json"
    bad.write_text('{"seed": "x"}')
    with pytest.raises(ValueError):
        genrep.run("train", str(bad), str(tmp_path / "bad"))
    assert not (tmp_path / "bad").exists()
