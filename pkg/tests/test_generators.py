"""Power-family generators: frozen spot values and grid properties."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dualdiv import PowerGenerator, phi_prime, phi_sharp, phi_value

GAMMAS = [-1.0, 0.0, 0.5, 1.0, 2.0]
LOG_GRID = np.logspace(-3, 3, 121)


@pytest.fixture(params=GAMMAS, ids=lambda g: f"gamma={g}")
def gen(request):
    return PowerGenerator(request.param)


# -- frozen spot values ------------------------------------------------------

@pytest.mark.parametrize("gamma,x,expected", [
    (1.0, 1.0, 0.0),
    (2.0, 3.0, 2.0),           # (x-1)^2/2
    (0.5, 4.0, 2.0),           # 2(sqrt(x)-1)^2
    (0.0, 0.0, math.inf),
])
def test_phi_value_spots(gamma, x, expected):
    assert phi_value(PowerGenerator(gamma), x) == pytest.approx(expected)


@pytest.mark.parametrize("gamma,x,expected", [
    (-1.0, 1.0, 0.0),
    (0.5, 1.0, 0.0),
    (2.0, 3.0, 2.0),           # x - 1
    (1.0, math.e, 1.0),        # log x
])
def test_phi_prime_spots(gamma, x, expected):
    assert phi_prime(PowerGenerator(gamma), x) == pytest.approx(
        expected, abs=1e-12)


@pytest.mark.parametrize("gamma,x,expected", [
    (0.0, 1.0, 0.0),
    (1.0, 2.0, 1.0),           # x - 1
    (2.0, 3.0, 4.0),           # (x^2 - 1)/2
])
def test_phi_sharp_spots(gamma, x, expected):
    assert phi_sharp(PowerGenerator(gamma), x) == pytest.approx(
        expected, abs=1e-12)


def test_hellinger_cross_check_against_generic_formula():
    g = 0.5
    generic = (LOG_GRID ** g - g * LOG_GRID + g - 1) / (g * (g - 1))
    np.testing.assert_allclose(phi_value(PowerGenerator(0.5), LOG_GRID),
                               generic, rtol=1e-12)


# -- grid properties ---------------------------------------------------------

def test_all_three_vanish_at_one_exactly(gen):
    assert phi_value(gen, 1.0) == 0.0
    assert phi_prime(gen, 1.0) == 0.0
    assert phi_sharp(gen, 1.0) == 0.0


def test_prime_matches_central_difference(gen):
    h = 1e-6 * LOG_GRID
    fd = (phi_value(gen, LOG_GRID + h) - phi_value(gen, LOG_GRID - h)) / (2 * h)
    np.testing.assert_allclose(phi_prime(gen, LOG_GRID), fd,
                               rtol=1e-6, atol=1e-9)


def test_sharp_identity_on_grid(gen):
    lhs = phi_sharp(gen, LOG_GRID)
    rhs = LOG_GRID * phi_prime(gen, LOG_GRID) - phi_value(gen, LOG_GRID)
    scale = 1.0 + np.abs(lhs)
    np.testing.assert_allclose(lhs / scale, rhs / scale, atol=1e-12)


def test_curvature_at_one(gen):
    h = 1e-3
    fd = (phi_value(gen, 1 + h) - 2 * phi_value(gen, 1.0)
          + phi_value(gen, 1 - h)) / h ** 2
    assert gen.second_deriv_at_one == 1.0
    assert fd == pytest.approx(1.0, rel=1e-4)
    assert gen.third_deriv_at_one == gen.gamma - 2.0


def test_nonnegative_and_convex_on_grid(gen):
    vals = phi_value(gen, LOG_GRID)
    assert np.all(vals >= 0)
    deriv = phi_prime(gen, LOG_GRID)
    assert np.all(np.diff(deriv) >= -1e-12)


def test_domain_endpoints(gen):
    assert gen.domain_lo < 1.0 < gen.domain_hi
    if gen.gamma == 2.0:
        # chi-square extends to the whole real line
        assert gen.domain_lo == -math.inf
        assert phi_value(gen, -2.0) == pytest.approx(4.5)
    else:
        assert phi_value(gen, -2.0) == math.inf


def test_gamma_snapping_near_special_points():
    assert PowerGenerator(1e-9).gamma == 0.0
    assert PowerGenerator(1.0 - 1e-9).gamma == 1.0
    # outside the snap window the generic formula is used
    assert PowerGenerator(1e-4).gamma == 1e-4


def test_near_special_gamma_is_continuous():
    g_eps = PowerGenerator(1e-5)  # not snapped
    g_zero = PowerGenerator(0.0)
    x = np.array([0.2, 0.9, 1.5, 7.0])
    np.testing.assert_allclose(phi_value(g_eps, x), phi_value(g_zero, x),
                               rtol=1e-4)


@given(x=st.floats(min_value=1e-3, max_value=1e3),
       gamma=st.sampled_from(GAMMAS))
@settings(max_examples=60, deadline=None)
def test_sharp_identity_pointwise(x, gamma):
    gen = PowerGenerator(gamma)
    lhs = phi_sharp(gen, x)
    rhs = x * phi_prime(gen, x) - phi_value(gen, x)
    assert lhs == pytest.approx(rhs, abs=1e-12 * (1 + abs(lhs)))


@given(t=st.floats(min_value=-20.0, max_value=20.0),
       gamma=st.sampled_from(GAMMAS))
@settings(max_examples=60, deadline=None)
def test_exp_composition_matches_direct(t, gamma):
    gen = PowerGenerator(gamma)
    x = math.exp(t)
    assert gen.phi_sharp_of_exp(t) == pytest.approx(
        phi_sharp(gen, x), rel=1e-10, abs=1e-12)
    assert gen.phi_prime_of_exp(t) == pytest.approx(
        phi_prime(gen, x), rel=1e-10, abs=1e-12)
