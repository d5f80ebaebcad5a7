"""Parity between the compiled kernels and the numpy fallback."""

import numpy as np
import pytest

from dualdiv import _kernels_np
from dualdiv import kernels

try:
    from dualdiv import _kernels as _compiled
except ImportError:
    _compiled = None

needs_compiled = pytest.mark.skipif(
    _compiled is None, reason="compiled extension not built")

GAMMAS = [-1.0, 0.0, 0.5, 1.0, 2.0, 1.7, -0.3]
X_GRID = np.array([1e-12, 1e-3, 0.1, 0.5, 1.0, 2.0, 10.0, 1e6])
T_GRID = np.array([-700.0, -30.0, -2.0, -1e-9, 0.0, 1e-9, 2.0, 30.0])


def both(fn_name, gamma, x):
    a = getattr(_compiled, fn_name)(gamma, np.ascontiguousarray(x))
    b = getattr(_kernels_np, fn_name)(gamma, np.ascontiguousarray(x))
    return np.asarray(a), np.asarray(b)


@needs_compiled
@pytest.mark.parametrize("gamma", GAMMAS)
@pytest.mark.parametrize("fn", ["phi", "phi_prime", "phi_sharp"])
def test_backends_agree_on_positive_axis(fn, gamma):
    a, b = both(fn, gamma, X_GRID)
    np.testing.assert_allclose(a, b, rtol=1e-13, atol=1e-13)


@needs_compiled
@pytest.mark.parametrize("gamma", GAMMAS)
@pytest.mark.parametrize("fn", ["phi_exp", "phi_prime_exp", "phi_sharp_exp"])
def test_backends_agree_on_log_scale(fn, gamma):
    a, b = both(fn, gamma, T_GRID)
    # values can be huge (e^{gamma t}); compare relatively, with a small
    # absolute floor for the near-zero points where expm1 vs exp-then-
    # subtract differ in the last ulp
    np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-15)


@needs_compiled
@pytest.mark.parametrize("gamma", GAMMAS)
def test_backends_agree_outside_positive_axis(gamma):
    x = np.array([-3.0, -1.0, 0.0])
    for fn in ("phi", "phi_prime", "phi_sharp"):
        a, b = both(fn, gamma, x)
        # compare NaN/inf patterns too, not just finite values
        np.testing.assert_array_equal(np.isnan(a), np.isnan(b))
        finite = np.isfinite(a)
        np.testing.assert_array_equal(finite, np.isfinite(b))
        np.testing.assert_allclose(a[finite], b[finite], rtol=1e-13)
        np.testing.assert_array_equal(a[~finite & ~np.isnan(a)],
                                      b[~finite & ~np.isnan(b)])


def test_exp_composition_consistent_with_direct():
    mod = kernels.backend_module()
    t = np.linspace(-5, 5, 41)
    for gamma in GAMMAS:
        direct = mod.phi_sharp(gamma, np.exp(t))
        composed = mod.phi_sharp_exp(gamma, t)
        np.testing.assert_allclose(composed, direct, rtol=1e-10, atol=1e-12)


def test_backend_selector_reports_a_known_backend():
    assert kernels.BACKEND in ("cython", "numpy")
