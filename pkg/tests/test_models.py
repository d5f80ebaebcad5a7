"""Models: densities, ratios, MLEs, samplers and CSV round-trips."""

import math

import numpy as np
import pytest

from dualdiv import (MeanOutsideRange, Sample, make_model)
from dualdiv.models import MODEL_REGISTRY, ExponentialFamily
from dualdiv.numerics import QuadratureSpec, integrate_wrt

EXP_FAMILIES = ["gaussian", "poisson", "exponential", "bernoulli"]
ALL_MODELS = EXP_FAMILIES + ["cauchy"]

# a parameter in the interior of each family's domain
THETA0 = {"gaussian": 0.7, "poisson": math.log(2.0), "exponential": 1.3,
          "bernoulli": 0.4, "cauchy": -0.2}


@pytest.fixture(params=ALL_MODELS)
def model(request):
    return make_model(request.param)


def theta_of(model):
    return np.array([THETA0[model.label]])


# -- densities ---------------------------------------------------------------

def test_registry_contents():
    assert set(MODEL_REGISTRY) == set(ALL_MODELS)


def test_density_normalizes(model):
    theta = theta_of(model)
    total = integrate_wrt(model, theta, lambda x: np.ones_like(x),
                          QuadratureSpec())
    assert total == pytest.approx(1.0, abs=1e-6)


def test_identifiability_spot_check(model):
    theta = theta_of(model)
    other = theta + 0.5
    x = model.draw_sample(theta, 8, seed=3).observations
    ld1 = np.atleast_1d(model.log_density(theta, x))
    ld2 = np.atleast_1d(model.log_density(other, x))
    assert np.max(np.abs(ld1 - ld2)) > 1e-6


@pytest.mark.parametrize("name,theta,alpha,x,expected", [
    ("gaussian", 0.0, 1.0, 0.0, math.exp(0.5)),
    ("exponential", 1.0, 2.0, 0.0, 0.5),
])
def test_density_ratio_spots(name, theta, alpha, x, expected):
    model = make_model(name)
    assert model.density_ratio(np.array([theta]), np.array([alpha]),
                               x) == pytest.approx(expected, rel=1e-12)


def test_density_ratio_is_one_at_equal_parameters(model):
    theta = theta_of(model)
    x = model.draw_sample(theta, 5, seed=1).observations
    np.testing.assert_allclose(model.density_ratio(theta, theta, x), 1.0,
                               rtol=1e-14)


def test_ratio_two_code_paths_agree(model):
    """exp(A(theta, alpha, x)) vs exp(log p_theta - log p_alpha)."""
    if not isinstance(model, ExponentialFamily):
        pytest.skip("fast path is exponential-family only")
    theta, alpha = theta_of(model), theta_of(model) + 0.3
    x = model.draw_sample(theta, 20, seed=2).observations
    via_a = model.density_ratio(theta, alpha, x)
    direct = np.exp(np.atleast_1d(model.log_density(theta, x))
                    - np.atleast_1d(model.log_density(alpha, x)))
    np.testing.assert_allclose(via_a, direct, rtol=1e-12)


# -- exponential-family structure --------------------------------------------

def test_cumulant_grad_matches_finite_differences(model):
    if not isinstance(model, ExponentialFamily):
        pytest.skip("no cumulant")
    theta = theta_of(model)
    h = 1e-6
    fd = (model.cumulant(theta + h) - model.cumulant(theta - h)) / (2 * h)
    assert model.cumulant_grad(theta)[0] == pytest.approx(fd, rel=1e-5)
    fd2 = (model.cumulant_grad(theta + h)[0]
           - model.cumulant_grad(theta - h)[0]) / (2 * h)
    assert model.cumulant_hess(theta)[0, 0] == pytest.approx(fd2, rel=1e-5)


def test_fullness_hessian_positive_definite(model):
    if not isinstance(model, ExponentialFamily):
        pytest.skip("no cumulant")
    for off in (-0.3, 0.0, 0.4):
        theta = model.clip_to_domain(theta_of(model) + off)
        np.linalg.cholesky(model.cumulant_hess(theta))


@pytest.mark.parametrize("name,obs,expected", [
    ("gaussian", [0.0, 2.0], 1.0),
    ("poisson", [2.0, 4.0], math.log(3.0)),
    ("exponential", [1.0, 3.0], 0.5),
])
def test_mle_spots(name, obs, expected):
    model = make_model(name)
    theta_hat = model.mle(Sample(np.asarray(obs, dtype=float)))
    assert theta_hat[0] == pytest.approx(expected, abs=1e-10)


def test_mle_reproduces_t_mean(model):
    if not isinstance(model, ExponentialFamily):
        pytest.skip("no MLE solver")
    sample = model.draw_sample(theta_of(model), 200, seed=9)
    theta_hat = model.mle(sample)
    t_mean = np.atleast_2d(model.suff_stat(sample.observations)).reshape(
        sample.n, -1).mean(axis=0)
    np.testing.assert_allclose(model.cumulant_grad(theta_hat), t_mean,
                               atol=1e-10)


def test_mle_mean_outside_range():
    poisson = make_model("poisson")
    with pytest.raises(MeanOutsideRange):
        poisson.mle(Sample(np.zeros(4)))  # e^theta = 0 has no solution


# -- samplers ----------------------------------------------------------------

def test_sampler_deterministic(model):
    theta = theta_of(model)
    a = model.draw_sample(theta, 50, seed=13).observations
    b = model.draw_sample(theta, 50, seed=13).observations
    np.testing.assert_array_equal(a, b)
    c = model.draw_sample(theta, 50, seed=14).observations
    assert not np.array_equal(a, c)


def test_sampler_respects_support(model):
    obs = model.draw_sample(theta_of(model), 100, seed=5).observations
    assert np.all(model.support.contains(obs))
    if model.support.kind == "lattice":
        np.testing.assert_array_equal(obs, np.round(obs))


def test_gaussian_sample_mean_clt_bound():
    model = make_model("gaussian")
    obs = model.draw_sample(np.array([0.0]), 10_000, seed=7).observations
    assert abs(obs.mean()) <= 4 / math.sqrt(10_000)


def test_sampler_t_mean_matches_cumulant_grad(model):
    if not isinstance(model, ExponentialFamily):
        pytest.skip("no cumulant")
    theta = theta_of(model)
    n = 100_000
    obs = model.draw_sample(theta, n, seed=21).observations
    t = np.atleast_2d(model.suff_stat(obs)).reshape(n, -1)
    se = t.std(axis=0, ddof=1) / math.sqrt(n)
    gap = np.abs(t.mean(axis=0) - model.cumulant_grad(theta))
    assert np.all(gap <= 5 * se)


def test_sample_provenance_records_seed(model):
    sample = model.draw_sample(theta_of(model), 10, seed=42)
    assert sample.provenance["seed"] == 42
    assert sample.provenance["model"] == model.label


# -- CSV ---------------------------------------------------------------------

def test_csv_round_trip(tmp_path):
    path = tmp_path / "obs.csv"
    original = Sample(np.array([0.25, -1.0, 1e-17, 3.5]))
    original.to_csv(path)
    loaded = Sample.from_csv(path)
    np.testing.assert_array_equal(loaded.observations, original.observations)
    assert loaded.provenance["source"] == str(path)


def test_csv_header_detected(tmp_path):
    path = tmp_path / "obs.csv"
    path.write_text("x\n1.5\n2.5\n", encoding="utf-8")
    loaded = Sample.from_csv(path)
    np.testing.assert_array_equal(loaded.observations, [1.5, 2.5])


def test_csv_rejects_garbage(tmp_path):
    path = tmp_path / "obs.csv"
    path.write_text("x\n1.5\nnot-a-number\n", encoding="utf-8")
    with pytest.raises(ValueError):
        Sample.from_csv(path)
