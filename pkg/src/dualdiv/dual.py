"""The dual criterion: h, the population and empirical criteria, and
the direct-quadrature divergence used as an oracle.

A :class:`DualCriterion` pairs one generator with one model.  The two
terms of the dual expression are

* the *integral term*  -- the integral of phi'(dP_theta/dP_alpha)
  against dP_theta, computed by quadrature/summation and cached per
  (theta, alpha) since ``h`` is evaluated per observation inside sums;
* the *outer term* -- the integral of phi#(dP_theta/dP_alpha) against
  dP_{theta_T} (population) or its sample mean (empirical).

Infeasibility (alpha outside the finite-divergence set) is never
enumerated analytically: it is discovered as a divergent integral and
encoded as a ``-inf`` criterion total with ``feasible=False``, which
is what the optimizers consume.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass

import numpy as np

from .numerics import DivergentIntegral, QuadratureSpec, integrate_wrt

_CACHE_CAP = 8192


@dataclass
class CriterionValue:
    """One evaluation of the dual criterion (total = integral - outer)."""

    total: float
    integral_term: float
    outer_term: float
    feasible: bool
    bad_indices: list | None = None


class DualCriterion:
    """Evaluator bundling (generator, model, quadrature spec)."""

    def __init__(self, generator, model, quad=None):
        self.generator = generator
        self.model = model
        self.quad = quad or QuadratureSpec()
        self._cache = {}
        self._lock = threading.Lock()

    # -- building blocks -------------------------------------------------

    def log_ratio(self, theta, alpha, x):
        return self.model.log_ratio(theta, alpha, x)

    def integral_term(self, theta, alpha):
        """Integral of phi'(dP_theta/dP_alpha) dP_theta; +inf when the
        quadrature detects a non-integrable integrand."""
        theta = self.model.require_param(theta)
        alpha = self.model.require_param(alpha)
        key = (theta.tobytes(), alpha.tobytes())
        with self._lock:
            if key in self._cache:
                return self._cache[key]
        gen = self.generator

        def f(x, lw):
            return gen.phi_prime_of_exp_w(self.log_ratio(theta, alpha, x), lw)

        try:
            value = integrate_wrt(self.model, theta, f, self.quad,
                                  weighted=True)
        except DivergentIntegral:
            value = math.inf
        with self._lock:
            if len(self._cache) >= _CACHE_CAP:
                self._cache.clear()
            self._cache[key] = value
        return value

    def _outer_population(self, theta, alpha, theta_t):
        gen = self.generator

        def f(x, lw):
            return gen.phi_sharp_of_exp_w(self.log_ratio(theta, alpha, x), lw)

        return integrate_wrt(self.model, theta_t, f, self.quad, weighted=True)

    # -- the spec surface ------------------------------------------------

    def h(self, theta, alpha, x):
        """h(theta, alpha, x); -inf when the integral term diverges."""
        it = self.integral_term(theta, alpha)
        sharp = self.generator.phi_sharp_of_exp(self.log_ratio(theta, alpha, x))
        if not math.isfinite(it):
            return np.full_like(np.asarray(sharp, dtype=np.float64), -np.inf) \
                if np.ndim(sharp) else -math.inf
        return it - sharp

    def empirical(self, theta, alpha, sample):
        """M_n(theta, alpha): integral term minus the sample mean of
        phi# at the observed ratios."""
        it = self.integral_term(theta, alpha)
        if not math.isfinite(it):
            return CriterionValue(-math.inf, it, math.nan, feasible=False)
        sharp = np.atleast_1d(self.generator.phi_sharp_of_exp(
            self.log_ratio(theta, alpha, sample.observations)))
        bad = np.flatnonzero(~np.isfinite(sharp))
        if bad.size:
            return CriterionValue(-math.inf, it, math.nan, feasible=False,
                                  bad_indices=bad.tolist())
        outer = float(sharp.mean())
        return CriterionValue(it - outer, it, outer, feasible=True)

    def population(self, theta, alpha, theta_t):
        """Population criterion: both terms by quadrature."""
        it = self.integral_term(theta, alpha)
        if not math.isfinite(it):
            return CriterionValue(-math.inf, it, math.nan, feasible=False)
        try:
            outer = self._outer_population(theta, alpha, theta_t)
        except DivergentIntegral:
            # either sign of blow-up leaves the dual expression outside
            # the feasible set
            return CriterionValue(-math.inf, it, math.inf, feasible=False)
        return CriterionValue(it - outer, it, outer, feasible=True)

    def divergence_direct(self, theta, theta_t):
        """Direct quadrature of phi(dP_theta/dP_theta_t) dP_theta_t."""
        theta = self.model.require_param(theta)
        theta_t = self.model.require_param(theta_t)
        gen = self.generator

        def f(x, lw):
            return gen.phi_of_exp_w(self.log_ratio(theta, theta_t, x), lw)

        try:
            return integrate_wrt(self.model, theta_t, f, self.quad,
                                 weighted=True)
        except DivergentIntegral:
            return math.inf

    def cressie_read(self, theta, alpha, theta_t):
        """Power-family form of the dual criterion (gamma outside {0,1});
        must agree with :meth:`population` wherever both are finite."""
        g = getattr(self.generator, "gamma", None)
        if g is None or g in (0.0, 1.0):
            raise ValueError("cressie_read requires a power generator "
                             "with gamma outside {0, 1}")
        model = self.model

        def pow_gm1(x, lw):
            return np.exp((g - 1.0) * self.log_ratio(theta, alpha, x) + lw)

        def pow_g(x, lw):
            return np.exp(g * self.log_ratio(theta, alpha, x) + lw)

        try:
            i1 = integrate_wrt(model, theta, pow_gm1, self.quad,
                               weighted=True)
            i2 = integrate_wrt(model, theta_t, pow_g, self.quad,
                               weighted=True)
        except DivergentIntegral:
            return -math.inf
        return i1 / (g - 1.0) - i2 / g - 1.0 / (g * (g - 1.0))


# Functional aliases matching the operation names used elsewhere.

def h_eval(criterion, theta, alpha, x):
    return criterion.h(theta, alpha, x)


def empirical_criterion(criterion, theta, alpha, sample):
    return criterion.empirical(theta, alpha, sample)


def population_criterion(criterion, theta, alpha, theta_t):
    return criterion.population(theta, alpha, theta_t)


def divergence_direct(criterion, theta, theta_t):
    return criterion.divergence_direct(theta, theta_t)


def cressie_read_criterion(criterion, theta, alpha, theta_t):
    return criterion.cressie_read(theta, alpha, theta_t)
