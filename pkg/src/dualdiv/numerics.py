"""Quadrature against model measures, finite differences, optimizers.

The integrator is a batched adaptive Gauss-Kronrod (G7/K15) rule over a
finite reference interval; unbounded supports are mapped onto it by a
rational change of variables.  Divergent integrals are a *legal,
meaningful* outcome here (they delimit the feasible set of the inner
supremum), so the integrator distinguishes three exits:

* converged value,
* :class:`DivergentIntegral` -- the estimate blew past the divergence
  threshold, or the subdivision budget ran out with a non-shrinking
  error (a pinned singularity),
* :class:`SubdivisionCap` -- the budget ran out while the error was
  still shrinking (accuracy, not divergence).

All routines are pure functions of their inputs; nothing caches across
calls.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, replace

import numpy as np
from scipy import optimize as sp_optimize

_EPS = np.finfo(float).eps

#: past this magnitude an integral estimate is declared divergent
DIVERGENT_THRESHOLD = 1e12


class NumericsError(Exception):
    pass


class DivergentIntegral(NumericsError):
    """Non-integrable integrand detected; ``sign`` carries the direction
    of the blow-up of the partial estimate."""

    def __init__(self, msg, sign=1.0):
        super().__init__(msg)
        self.sign = sign


class SubdivisionCap(NumericsError):
    """Subdivision budget exhausted before reaching tolerance."""


class StencilOutOfDomain(NumericsError):
    """A finite-difference stencil point evaluated to a non-finite value."""


class NoFiniteValue(NumericsError):
    """The objective is not finite at the starting point."""


@dataclass(frozen=True)
class QuadratureSpec:
    abs_tol: float = 1e-9
    rel_tol: float = 1e-8
    max_subdivisions: int = 2000
    tail_mass_tol: float = 1e-12
    infinite_map: str = "rational"

    def __post_init__(self):
        if self.abs_tol <= 0 or self.rel_tol <= 0 or self.tail_mass_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be >= 1")
        if self.infinite_map not in ("rational", "tanh-sinh"):
            raise ValueError(f"unknown infinite_map {self.infinite_map!r}")


@dataclass(frozen=True)
class OptimizerSpec:
    method: str = "auto"
    x_tol: float = 1e-7
    f_tol: float = 1e-10
    max_iters: int = 500
    restarts: int = 2

    def __post_init__(self):
        if self.x_tol <= 0 or self.f_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.method not in ("auto", "nelder-mead", "projected-quasi-newton"):
            raise ValueError(f"unknown optimizer method {self.method!r}")


# --------------------------------------------------------------------------
# Gauss-Kronrod 15 point rule (7 point Gauss embedded)
# --------------------------------------------------------------------------

_GK_NODES = np.array([
    -0.991455371120813, -0.949107912342759, -0.864864423359769,
    -0.741531185599394, -0.586087235467691, -0.405845151377397,
    -0.207784955007898, 0.0,
    0.207784955007898, 0.405845151377397, 0.586087235467691,
    0.741531185599394, 0.864864423359769, 0.949107912342759,
    0.991455371120813,
])
_GK_WK = np.array([
    0.022935322010529, 0.063092092629979, 0.104790010322250,
    0.140653259715525, 0.169004726639267, 0.190350578064785,
    0.204432940075298, 0.209482141084728,
    0.204432940075298, 0.190350578064785, 0.169004726639267,
    0.140653259715525, 0.104790010322250, 0.063092092629979,
    0.022935322010529,
])
_GK_WG = np.array([
    0.0, 0.129484966168870, 0.0, 0.279705391489277, 0.0,
    0.381830050505119, 0.0, 0.417959183673469, 0.0,
    0.381830050505119, 0.0, 0.279705391489277, 0.0,
    0.129484966168870, 0.0,
])


def _gk_panels(g, a, b):
    """Evaluate the G7/K15 rule on panels [a_i, b_i] (vectorized).

    Returns (k15, err) arrays; panels whose nodes produce non-finite
    values get err = +inf (or k15 = +-inf when the value itself blew
    up, which the adaptive driver turns into divergence detection).
    """
    a = np.asarray(a)
    b = np.asarray(b)
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    nodes = mid[:, None] + half[:, None] * _GK_NODES[None, :]
    vals = np.asarray(g(nodes.ravel()), dtype=np.float64).reshape(nodes.shape)
    finite = np.isfinite(vals)
    safe = np.where(finite, vals, 0.0)
    k15 = (safe @ _GK_WK) * half
    g7 = (safe @ _GK_WG) * half
    diff = np.abs(k15 - g7)
    with np.errstate(over="ignore", invalid="ignore"):
        err = np.where(diff < 200.0**-3, (200.0 * diff) ** 1.5, diff)
    bad = ~finite.all(axis=1)
    if bad.any():
        # carry the sign of the blow-up through the panel estimate
        posinf = (vals == np.inf).any(axis=1)
        neginf = (vals == -np.inf).any(axis=1)
        k15 = k15.copy()
        k15[bad & posinf] = np.inf
        k15[bad & neginf & ~posinf] = -np.inf
        err = err.copy()
        err[bad] = np.inf
    return k15, err


#: worst panels refined together per adaptive round (one vectorized
#: integrand call covers all their children)
_SPLIT_BATCH = 8


def _adaptive_gk(g, a, b, spec):
    """Adaptive G7/K15 on the finite interval [a, b]."""
    m0 = 8
    edges = np.linspace(a, b, m0 + 1)
    k15, err = _gk_panels(g, edges[:-1], edges[1:])
    heap = []
    for i in range(m0):
        heapq.heappush(heap, (-err[i], edges[i], edges[i + 1], k15[i], err[i]))
    total = float(k15.sum())
    toterr = float(err.sum())
    min_width = 1e-14 * (b - a)
    err_history = [toterr]
    splits = m0
    while True:
        if not math.isfinite(total) or abs(total) > DIVERGENT_THRESHOLD:
            raise DivergentIntegral(
                f"integral estimate {total:.3g} exceeds divergence threshold",
                sign=math.copysign(1.0, total))
        if toterr <= max(spec.abs_tol, spec.rel_tol * abs(total)):
            return total, toterr
        if splits >= spec.max_subdivisions:
            # non-shrinking error over the second half of the budget
            # signals a genuine singularity rather than slow refinement
            half_ago = err_history[len(err_history) // 2]
            if not math.isfinite(toterr) or toterr > 0.5 * half_ago:
                raise DivergentIntegral(
                    "subdivision cap with non-shrinking error",
                    sign=math.copysign(1.0, total if total else 1.0))
            raise SubdivisionCap(
                f"error {toterr:.3g} above tolerance after "
                f"{spec.max_subdivisions} subdivisions")
        # refine the worst panels together: one integrand call for the
        # whole batch keeps per-call overhead off the critical path
        batch = []
        while heap and len(batch) < _SPLIT_BATCH:
            neg_e, lo, hi, est, e = heapq.heappop(heap)
            if hi - lo <= min_width:
                if not math.isfinite(e) or e > spec.abs_tol:
                    raise DivergentIntegral(
                        "singularity pinned at panel width limit",
                        sign=math.copysign(1.0, est if est else 1.0))
                # cannot refine further; accept the panel as-is
                heapq.heappush(heap, (0.0, lo, hi, est, e))
                splits += 1
                continue
            batch.append((lo, hi, est, e))
            if e <= 0.0:
                break
        if not batch:
            err_history.append(toterr)
            splits += 1
            continue
        los = np.array([p[0] for p in batch])
        his = np.array([p[1] for p in batch])
        mids = 0.5 * (los + his)
        k2, e2 = _gk_panels(g, np.concatenate([los, mids]),
                            np.concatenate([mids, his]))
        n = len(batch)
        for i, (lo, hi, est, e) in enumerate(batch):
            total += float(k2[i] + k2[n + i]) - (est if math.isfinite(est) else 0.0)
            toterr += float(e2[i] + e2[n + i]) - (e if math.isfinite(e) else 0.0)
            heapq.heappush(heap, (-e2[i], lo, mids[i], k2[i], e2[i]))
            heapq.heappush(heap, (-e2[n + i], mids[i], hi, k2[n + i], e2[n + i]))
        if not math.isfinite(toterr) and np.isfinite(e2).all():
            toterr = float(sum(item[4] for item in heap))
        err_history.append(toterr)
        splits += n


def _map_interval(lo, hi, infinite_map):
    """Return (t_lo, t_hi, x_of_t, jac_of_t) mapping a finite reference
    interval onto (lo, hi)."""
    if math.isfinite(lo) and math.isfinite(hi):
        return lo, hi, (lambda t: t), (lambda t: np.ones_like(t))
    if infinite_map == "tanh-sinh":
        # mild double-exponential map; one layer is enough here since
        # the integrands already carry the model density
        if not math.isfinite(lo) and not math.isfinite(hi):
            return (-1.0, 1.0,
                    lambda t: np.sinh(3.0 * np.arctanh(t)),
                    lambda t: 3.0 * np.cosh(3.0 * np.arctanh(t)) / (1.0 - t**2))
    if not math.isfinite(lo) and not math.isfinite(hi):
        # x = t / (1 - t^2) on (-1, 1)
        return (-1.0, 1.0,
                lambda t: t / (1.0 - t**2),
                lambda t: (1.0 + t**2) / (1.0 - t**2) ** 2)
    if math.isfinite(lo):
        # x = lo + t / (1 - t) on [0, 1)
        return (0.0, 1.0,
                lambda t: lo + t / (1.0 - t),
                lambda t: 1.0 / (1.0 - t) ** 2)
    # x = hi - t / (1 - t), reversed so the integral keeps its sign
    return (0.0, 1.0,
            lambda t: hi - t / (1.0 - t),
            lambda t: 1.0 / (1.0 - t) ** 2)


def _lattice_sum(model, theta, f, spec, weighted=False):
    sup = model.support
    step = sup.lattice_step
    block = 64
    total = 0.0
    mass = 0.0
    k = sup.lo
    max_blocks = 4096
    for _ in range(max_blocks):
        if k > sup.hi:
            return total
        pts = k + step * np.arange(block, dtype=np.float64)
        if math.isfinite(sup.hi):
            pts = pts[pts <= sup.hi + 1e-12]
            if pts.size == 0:
                return total
        logp = model.log_density(theta, pts)
        w = np.exp(logp)
        if weighted:
            contrib = np.asarray(f(pts, logp), dtype=np.float64)
        else:
            fv = np.asarray(f(pts), dtype=np.float64)
            contrib = np.where(w > 0.0, fv * w, 0.0)
        if not np.isfinite(contrib).all():
            s = 1.0 if (contrib == np.inf).any() else -1.0
            raise DivergentIntegral("infinite lattice term", sign=s)
        total += float(contrib.sum())
        mass += float(w.sum())
        if abs(total) > DIVERGENT_THRESHOLD:
            raise DivergentIntegral(
                f"lattice sum {total:.3g} exceeds divergence threshold",
                sign=math.copysign(1.0, total))
        k = pts[-1] + step
        tail_small = (1.0 - mass) < spec.tail_mass_tol
        contrib_small = abs(contrib.sum()) < spec.tail_mass_tol * max(1.0, abs(total))
        if (math.isfinite(sup.hi) and k > sup.hi) or (tail_small and contrib_small):
            return total
    raise SubdivisionCap("lattice truncation budget exhausted")


def integrate_wrt(model, theta, f, spec=None, weighted=False):
    """Integral of f against dP_theta over the model support.

    ``f`` maps an ndarray of support points to an ndarray of values;
    points where the density underflows to zero contribute zero
    regardless of ``f`` (they carry no mass).

    With ``weighted=True`` the callback signature is ``f(x, logw)`` and
    must return the *fully weighted* integrand (the measure density --
    and, on continuous supports, the change-of-variables Jacobian -- is
    already folded into ``logw``).  This is the stable path when f and
    the weight over/underflow separately but their product does not.
    """
    spec = spec or QuadratureSpec()
    theta = model.require_param(theta)
    if model.support.kind == "lattice":
        return _lattice_sum(model, theta, f, spec, weighted=weighted)
    t_lo, t_hi, x_of_t, jac = _map_interval(
        model.support.lo, model.support.hi, spec.infinite_map)

    def g(t):
        x = x_of_t(t)
        logp = model.log_density(theta, x)
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            if weighted:
                return np.asarray(f(x, logp + np.log(jac(t))),
                                  dtype=np.float64)
            w = np.exp(logp) * jac(t)
            fv = np.asarray(f(x), dtype=np.float64)
            out = np.where(w > 0.0, fv * w, 0.0)
        return out

    value, _err = _adaptive_gk(g, t_lo, t_hi, spec)
    return value


# --------------------------------------------------------------------------
# finite differences
# --------------------------------------------------------------------------


def _default_step(x, order):
    exponent = 1.0 / 3.0 if order == 1 else 0.25
    return _EPS**exponent * np.maximum(1.0, np.abs(x))


def _checked(f, x):
    v = float(f(x))
    if not math.isfinite(v):
        raise StencilOutOfDomain(f"f({x}) = {v} on a finite-difference stencil")
    return v


def finite_diff_grad(f, x, h=None):
    """Central-difference gradient of a scalar function on R^d."""
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    h = np.broadcast_to(h if h is not None else _default_step(x, 1), x.shape)
    grad = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h[i]
        grad[i] = (_checked(f, x + e) - _checked(f, x - e)) / (2.0 * h[i])
    return grad


def finite_diff_hess(f, x, h=None):
    """Central-difference Hessian, symmetrized as (H + H') / 2."""
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    h = np.broadcast_to(h if h is not None else _default_step(x, 2), x.shape)
    d = x.size
    hess = np.empty((d, d))
    f0 = _checked(f, x)
    for i in range(d):
        ei = np.zeros_like(x)
        ei[i] = h[i]
        hess[i, i] = (_checked(f, x + ei) - 2.0 * f0 + _checked(f, x - ei)) / h[i] ** 2
        for j in range(i + 1, d):
            ej = np.zeros_like(x)
            ej[j] = h[j]
            hess[i, j] = hess[j, i] = (
                _checked(f, x + ei + ej) - _checked(f, x + ei - ej)
                - _checked(f, x - ei + ej) + _checked(f, x - ei - ej)
            ) / (4.0 * h[i] * h[j])
    return 0.5 * (hess + hess.T)


# --------------------------------------------------------------------------
# bounded maximization over a box
# --------------------------------------------------------------------------

_PENALTY = 1e300


@dataclass
class OptimizeDiagnostics:
    nfev: int = 0
    iterations: int = 0
    restarts: int = 0
    converged: bool = True
    restart_values: list = None
    boundary: bool = False


@dataclass
class MaximizeResult:
    x: np.ndarray
    value: float
    diagnostics: OptimizeDiagnostics


class _Recorder:
    """Wraps an extended-real objective; tracks the best finite point so
    the driver can never return an infeasible argmax."""

    def __init__(self, f):
        self.f = f
        self.nfev = 0
        self.best_x = None
        self.best_v = -math.inf

    def __call__(self, x):
        self.nfev += 1
        v = float(self.f(np.atleast_1d(x)))
        if math.isnan(v):
            v = -math.inf
        if v > self.best_v:
            self.best_v = v
            self.best_x = np.atleast_1d(np.asarray(x, dtype=np.float64)).copy()
        return v


def _bracket_1d(rec, x0, lo, hi, x_tol):
    """Expand around x0 until the maximum is bracketed (value falls off
    on both sides) or a bound / infeasible region is hit."""
    v0 = rec(x0)
    if not math.isfinite(v0):
        raise NoFiniteValue(f"objective is {v0} at init {x0}")
    step = 0.25 * max(1.0, abs(x0))
    sides = []
    for direction in (-1.0, 1.0):
        x_edge = x0
        v_edge = v0
        s = step
        for _ in range(60):
            cand = x_edge + direction * s
            bound = lo if direction < 0 else hi
            if direction * (cand - bound) >= 0:
                cand = bound
            v = rec(cand)
            if not math.isfinite(v):
                # stepped into infeasible territory: bisect back toward
                # the last good point so the bracket stays (just barely)
                # inside the feasible region
                good = x_edge
                for _ in range(40):
                    mid = 0.5 * (good + cand)
                    if mid == good or mid == cand:
                        break
                    if math.isfinite(rec(mid)):
                        good = mid
                    else:
                        cand = mid
                x_edge = good
                break
            if v <= v_edge:
                x_edge = cand
                break
            x_edge, v_edge = cand, v
            if cand == bound:
                break
            s *= 2.0
        sides.append(x_edge)
    a, b = sides
    if a > b:
        a, b = b, a
    if b - a < 4.0 * x_tol:
        a, b = a - 2.0 * x_tol, b + 2.0 * x_tol
        a, b = max(a, lo), min(b, hi)
    return a, b


def _neg_clipped(rec):
    def g(x):
        v = rec(x)
        return -v if math.isfinite(v) else _PENALTY

    return g


def maximize(f, lo, hi, init, spec=None):
    """Maximize an extended-real function over the box [lo, hi].

    Multi-start: ``spec.restarts`` additional runs from deterministically
    perturbed inits; ties within ``f_tol`` broken toward the smallest
    parameter norm for determinism.
    """
    spec = spec or OptimizerSpec()
    init = np.atleast_1d(np.asarray(init, dtype=np.float64))
    lo = np.broadcast_to(np.asarray(lo, dtype=np.float64), init.shape)
    hi = np.broadcast_to(np.asarray(hi, dtype=np.float64), init.shape)
    d = init.size

    rec_probe = _Recorder(f)
    if not math.isfinite(rec_probe(init)):
        raise NoFiniteValue(f"objective not finite at init {init}")

    offsets = [0.0, 0.35, -0.35, 0.8, -0.8, 1.6, -1.6, 2.5, -2.5]
    candidates = []
    total_nfev = 0
    iterations = 0
    converged = True
    for k in range(spec.restarts + 1):
        off = offsets[k % len(offsets)] * np.maximum(1.0, np.abs(init))
        start = np.clip(init + off, lo, hi)
        rec = _Recorder(f)
        if not math.isfinite(rec(start)):
            continue
        try:
            if d == 1 and spec.method == "auto":
                a, b = _bracket_1d(rec, float(start[0]), float(lo[0]),
                                   float(hi[0]), spec.x_tol)
                neg = _neg_clipped(rec)
                res = sp_optimize.minimize_scalar(
                    lambda x: neg(np.array([x])), bounds=(a, b),
                    method="bounded",
                    options={"xatol": spec.x_tol, "maxiter": spec.max_iters})
                iterations += int(res.nit)
                converged &= bool(res.success)
            elif spec.method == "projected-quasi-newton":
                res = sp_optimize.minimize(
                    _neg_clipped(rec), start, method="L-BFGS-B",
                    bounds=list(zip(lo, hi)),
                    options={"maxiter": spec.max_iters, "ftol": spec.f_tol,
                             "gtol": 1e-12})
                iterations += int(res.nit)
                converged &= bool(res.success)
            else:
                res = sp_optimize.minimize(
                    _neg_clipped(rec), start, method="Nelder-Mead",
                    bounds=list(zip(lo, hi)),
                    options={"xatol": spec.x_tol, "fatol": spec.f_tol,
                             "maxiter": spec.max_iters * max(1, d)})
                iterations += int(res.nit)
                converged &= bool(res.success)
        except NoFiniteValue:
            continue
        total_nfev += rec.nfev
        if rec.best_x is not None:
            candidates.append((rec.best_x, rec.best_v))

    if not candidates:
        raise NoFiniteValue("no finite objective value found from any start")
    best_v = max(v for _, v in candidates)
    near = [(x, v) for x, v in candidates if v >= best_v - spec.f_tol]
    x_star, v_star = min(near, key=lambda c: np.linalg.norm(c[0]))
    diag = OptimizeDiagnostics(
        nfev=total_nfev + rec_probe.nfev,
        iterations=iterations,
        restarts=len(candidates) - 1,
        converged=converged,
        restart_values=[float(v) for _, v in candidates],
        boundary=bool(np.any(x_star <= lo + 10 * spec.x_tol)
                      or np.any(x_star >= hi - 10 * spec.x_tol)),
    )
    return MaximizeResult(x=x_star, value=v_star, diagnostics=diag)


def with_tolerances(spec, **overrides):
    """Copy a spec dataclass with field overrides (CLI plumbing)."""
    return replace(spec, **overrides)
