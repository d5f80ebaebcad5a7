"""Divergence generators: the convex functions defining each divergence.

A generator bundles the convex function ``phi`` with its derivative,
its domain endpoints, the curvature constants at 1, and the sharp
transform ``phi#(x) = x*phi'(x) - phi(x)``.  The shipped family is the
power (Cressie-Read) family indexed by ``gamma``; arbitrary
user-supplied generators are accepted through the base class but are
not validated beyond the basic shape of the interface.

Conventions:

* ``+inf`` is an ordinary value: evaluation outside the domain returns
  ``+inf`` (for ``phi``) or an extended/NaN value (for the derivative),
  never raises.
* ``*_exp`` variants evaluate the same function at ``exp(t)`` directly
  from ``t = log x``, which is the numerically safe path when ``x`` is
  a likelihood ratio built from log densities.
* Generators are immutable after construction and safe to share across
  threads.
"""

from __future__ import annotations

import math

import numpy as np

from . import kernels

#: indices within this distance of 0 or 1 are snapped onto the exact
#: limit branch to avoid catastrophic cancellation in the generic formula
GAMMA_SNAP_TOL = 1e-6

_NAMED_GAMMAS = {
    -1.0: "modified-chi2",
    0.0: "modified-KL",
    0.5: "hellinger",
    1.0: "KL",
    2.0: "chi2",
}


def _eval(fn, x):
    """Apply an array kernel to a scalar or array, preserving shape."""
    arr = np.ascontiguousarray(x, dtype=np.float64)
    out = fn(arr.ravel()).reshape(arr.shape)
    if np.isscalar(x) or arr.ndim == 0:
        return float(out.reshape(()))
    return out


class DivergenceGenerator:
    """A differentiable convex generator with phi(1) = 0.

    Parameters
    ----------
    value, derivative : callable
        Vectorized maps ndarray -> ndarray evaluating phi and phi'.
    domain_lo, domain_hi : float
        Endpoints of dom(phi); must straddle 1.
    second_deriv_at_one, third_deriv_at_one : float
        phi''(1) and phi'''(1), used by the saddle-curvature checks.
    """

    def __init__(self, value, derivative, domain_lo, domain_hi,
                 second_deriv_at_one, third_deriv_at_one, label):
        if not domain_lo < 1.0 < domain_hi:
            raise ValueError("generator domain must contain 1 in its interior")
        self._value = value
        self._derivative = derivative
        self.domain_lo = float(domain_lo)
        self.domain_hi = float(domain_hi)
        self.second_deriv_at_one = float(second_deriv_at_one)
        self.third_deriv_at_one = float(third_deriv_at_one)
        self.label = label

    def phi(self, x):
        return _eval(self._value, x)

    def phi_prime(self, x):
        return _eval(self._derivative, x)

    def phi_sharp(self, x):
        return _eval(lambda a: a * self._derivative(a) - self._value(a), x)

    def phi_of_exp(self, t):
        return _eval(lambda a: self._value(np.exp(a)), t)

    def phi_prime_of_exp(self, t):
        return _eval(lambda a: self._derivative(np.exp(a)), t)

    def phi_sharp_of_exp(self, t):
        def f(a):
            e = np.exp(a)
            return e * self._derivative(e) - self._value(e)

        return _eval(f, t)

    # log-weighted variants: kernel(e^t) * e^lw, used by the quadrature
    # so the weighted integrand is formed before either factor can
    # over/underflow

    def _eval_w(self, fn, t, lw):
        t_arr = np.ascontiguousarray(t, dtype=np.float64)
        # broadcast_to yields a read-only view; copy for the memoryview API
        lw_arr = np.array(np.broadcast_to(lw, t_arr.shape),
                          dtype=np.float64, order="C")
        out = fn(t_arr.ravel(), lw_arr.ravel()).reshape(t_arr.shape)
        if np.isscalar(t) or t_arr.ndim == 0:
            return float(out.reshape(()))
        return out

    def phi_of_exp_w(self, t, lw):
        return self._eval_w(
            lambda a, w: np.exp(w) * self._value(np.exp(a)), t, lw)

    def phi_prime_of_exp_w(self, t, lw):
        return self._eval_w(
            lambda a, w: np.exp(w) * self._derivative(np.exp(a)), t, lw)

    def phi_sharp_of_exp_w(self, t, lw):
        def f(a, w):
            e = np.exp(a)
            return np.exp(w) * (e * self._derivative(e) - self._value(e))

        return self._eval_w(f, t, lw)

    def __repr__(self):
        return f"{type(self).__name__}({self.label!r})"


class PowerGenerator(DivergenceGenerator):
    """Power divergence generator with index ``gamma``.

    ``gamma`` values within :data:`GAMMA_SNAP_TOL` of 0 or 1 are snapped
    onto the exact limit branches (modified KL and KL respectively).
    ``gamma = 2`` is the one member defined and finite on all of the
    real line; every other member is ``+inf`` on the negatives.
    """

    def __init__(self, gamma):
        g = float(gamma)
        if abs(g) < GAMMA_SNAP_TOL:
            g = 0.0
        elif abs(g - 1.0) < GAMMA_SNAP_TOL:
            g = 1.0
        name = _NAMED_GAMMAS.get(g)
        label = f"power(gamma={g:g})" if name is None else name
        lo = -math.inf if g == 2.0 else 0.0
        super().__init__(
            value=lambda a: kernels.phi(g, a),
            derivative=lambda a: kernels.phi_prime(g, a),
            domain_lo=lo,
            domain_hi=math.inf,
            second_deriv_at_one=1.0,
            third_deriv_at_one=g - 2.0,
            label=label,
        )
        self.gamma = g

    def phi_sharp(self, x):
        return _eval(lambda a: kernels.phi_sharp(self.gamma, a), x)

    def phi_of_exp(self, t):
        return _eval(lambda a: kernels.phi_exp(self.gamma, a), t)

    def phi_prime_of_exp(self, t):
        return _eval(lambda a: kernels.phi_prime_exp(self.gamma, a), t)

    def phi_sharp_of_exp(self, t):
        return _eval(lambda a: kernels.phi_sharp_exp(self.gamma, a), t)

    def phi_of_exp_w(self, t, lw):
        return self._eval_w(
            lambda a, w: kernels.phi_exp_w(self.gamma, a, w), t, lw)

    def phi_prime_of_exp_w(self, t, lw):
        return self._eval_w(
            lambda a, w: kernels.phi_prime_exp_w(self.gamma, a, w), t, lw)

    def phi_sharp_of_exp_w(self, t, lw):
        return self._eval_w(
            lambda a, w: kernels.phi_sharp_exp_w(self.gamma, a, w), t, lw)


def power_generator(gamma):
    return PowerGenerator(gamma)


def phi_value(gen, x):
    return gen.phi(x)


def phi_prime(gen, x):
    return gen.phi_prime(x)


def phi_sharp(gen, x):
    return gen.phi_sharp(x)
