"""Parametric models: densities, supports, samplers and exact MLEs.

Shipped families are all scalar-observation (``obs_dim == 1``):

* ``GaussianMean`` -- N(theta, 1), canonical exponential family with
  T(x) = x, C(theta) = theta**2 / 2.
* ``PoissonFamily`` -- canonical parameter theta = log(rate), T(x) = x,
  C(theta) = exp(theta).
* ``ExponentialRate`` -- density theta * exp(-theta x) on [0, inf),
  T(x) = -x, C(theta) = -log(theta), Theta = (0, inf).
* ``BernoulliFamily`` -- theta = logit(p), T(x) = x,
  C(theta) = log(1 + exp(theta)).
* ``CauchyLocation`` -- non-exponential contrast model, density
  (1/pi) / (1 + (x - theta)**2).

Parameters are always 1-D float arrays of length ``param_dim``; the
shipped families have ``param_dim == 1`` but nothing in the interfaces
assumes it.  Models are immutable; samplers take the seed explicitly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

#: margin keeping optimizers strictly inside open parameter bounds
INTERIOR_MARGIN = 1e-8

_LOG_2PI = math.log(2.0 * math.pi)


class ModelError(Exception):
    pass


class NonConvergence(ModelError):
    """Newton iteration cap exceeded while solving the moment equation."""


class MeanOutsideRange(ModelError):
    """The sufficient-statistic mean is outside the range of the cumulant
    gradient, so the moment equation has no solution."""


@dataclass(frozen=True)
class SupportDescriptor:
    """Common support of all members of a model.

    ``kind`` is ``"continuous"`` (interval, endpoints possibly infinite)
    or ``"lattice"`` (arithmetic progression from ``lo``, step
    ``lattice_step``, up to ``hi`` which may be infinite).
    """

    kind: str
    lo: float
    hi: float
    lattice_step: float = 1.0

    def __post_init__(self):
        if self.kind not in ("continuous", "lattice"):
            raise ValueError(f"unknown support kind {self.kind!r}")
        if not self.lo < self.hi:
            raise ValueError("support requires lo < hi")
        if self.kind == "lattice" and not self.lattice_step > 0:
            raise ValueError("lattice_step must be positive")

    def contains(self, x):
        x = np.asarray(x, dtype=np.float64)
        ok = (x >= self.lo) & (x <= self.hi)
        if self.kind == "lattice":
            k = (x - self.lo) / self.lattice_step
            ok &= np.isclose(k, np.round(k), atol=1e-9)
        return ok


@dataclass
class Sample:
    """Ordered i.i.d. observations plus where they came from."""

    observations: np.ndarray
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        obs = np.asarray(self.observations, dtype=np.float64)
        if obs.ndim != 1:
            obs = obs.reshape(-1)
        if obs.size < 1:
            raise ValueError("a sample needs at least one observation")
        self.observations = obs

    @property
    def n(self):
        return self.observations.size

    @classmethod
    def from_csv(cls, path):
        """Read one observation per row; a non-numeric first row is
        treated as a header."""
        with open(path, encoding="utf-8") as fh:
            lines = [ln.strip() for ln in fh if ln.strip()]
        if not lines:
            raise ValueError(f"no observations in {path}")
        try:
            float(lines[0].split(",")[0])
        except ValueError:
            lines = lines[1:]
        if not lines:
            raise ValueError(f"no observations in {path}")
        obs = np.array([float(ln.split(",")[0]) for ln in lines])
        return cls(obs, provenance={"source": str(path)})

    def to_csv(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            for x in self.observations:
                fh.write(f"{x:.17g}\n")


def _as_param(theta, d):
    theta = np.atleast_1d(np.asarray(theta, dtype=np.float64))
    if theta.shape != (d,):
        raise ValueError(f"parameter must have shape ({d},), got {theta.shape}")
    return theta


class ParametricModel:
    """Base class: a family of equivalent probability measures sharing
    one support, with a box parameter domain (open where bounds are
    finite, enforced through an interior margin)."""

    label = "model"
    param_dim = 1
    obs_dim = 1
    support: SupportDescriptor
    param_lo: np.ndarray
    param_hi: np.ndarray

    def log_density(self, theta, x):
        raise NotImplementedError

    def sample(self, theta, n, rng):
        raise NotImplementedError

    def moment_init(self, sample):
        """Method-of-moments style starting value for optimization."""
        raise NotImplementedError

    # -- derived helpers -------------------------------------------------

    def contains_param(self, theta, margin=0.0):
        theta = _as_param(theta, self.param_dim)
        return bool(
            np.all(theta >= self.param_lo + margin)
            and np.all(theta <= self.param_hi - margin)
        )

    def require_param(self, theta):
        theta = _as_param(theta, self.param_dim)
        if not self.contains_param(theta):
            raise ValueError(f"{theta} outside parameter domain of {self.label}")
        return theta

    def density(self, theta, x):
        return np.exp(self.log_density(theta, x))

    def log_ratio(self, theta, alpha, x):
        """log of dP_theta/dP_alpha at x."""
        x = np.asarray(x, dtype=np.float64)
        return self.log_density(theta, x) - self.log_density(alpha, x)

    def density_ratio(self, theta, alpha, x):
        self.require_param(theta)
        self.require_param(alpha)
        return np.exp(self.log_ratio(theta, alpha, x))

    def draw_sample(self, theta, n, seed):
        theta = self.require_param(theta)
        if n < 1:
            raise ValueError("n must be >= 1")
        rng = np.random.default_rng(seed)
        obs = np.asarray(self.sample(theta, int(n), rng), dtype=np.float64)
        return Sample(obs, provenance={
            "model": self.label,
            "theta": [float(t) for t in theta],
            "n": int(n),
            "seed": int(seed),
        })

    def opt_bounds(self):
        """Box handed to optimizers: open bounds pulled inward by the
        interior margin so boundary evaluations stay in the domain."""
        return (self.param_lo + INTERIOR_MARGIN,
                self.param_hi - INTERIOR_MARGIN)

    def clip_to_domain(self, theta):
        theta = _as_param(theta, self.param_dim)
        return np.clip(theta, self.param_lo + INTERIOR_MARGIN,
                       self.param_hi - INTERIOR_MARGIN)

    def __repr__(self):
        return f"{type(self).__name__}()"


class ExponentialFamily(ParametricModel):
    """Canonical exponential family p_theta = exp(T(x)'theta - C(theta))
    against its dominating measure; ``log_base`` is the log density of
    that dominating measure against Lebesgue/counting measure."""

    #: open range of the mean of T, used to reject unsolvable moment
    #: equations before Newton; None disables the check
    t_mean_range = None

    def suff_stat(self, x):
        raise NotImplementedError

    def cumulant(self, theta):
        raise NotImplementedError

    def cumulant_grad(self, theta):
        raise NotImplementedError

    def cumulant_hess(self, theta):
        raise NotImplementedError

    def log_base(self, x):
        raise NotImplementedError

    def log_density(self, theta, x):
        theta = _as_param(theta, self.param_dim)
        x = np.asarray(x, dtype=np.float64)
        t = np.atleast_2d(self.suff_stat(x))
        out = t @ theta - self.cumulant(theta) + self.log_base(x).reshape(-1)
        return float(out[0]) if x.ndim == 0 else out

    def log_ratio(self, theta, alpha, x):
        # A(theta, alpha, x): the base measure cancels exactly.
        theta = _as_param(theta, self.param_dim)
        alpha = _as_param(alpha, self.param_dim)
        x = np.asarray(x, dtype=np.float64)
        t = np.atleast_2d(self.suff_stat(x))
        out = t @ (theta - alpha) + self.cumulant(alpha) - self.cumulant(theta)
        return float(out[0]) if x.ndim == 0 else out

    def mle(self, sample, max_iter=100, tol=1e-10):
        """Solve grad C(theta) = mean of T(X_i) by damped Newton."""
        t_bar = np.atleast_2d(self.suff_stat(sample.observations)).mean(axis=0)
        if self.t_mean_range is not None:
            lo, hi = self.t_mean_range
            if not (np.all(t_bar > lo) and np.all(t_bar < hi)):
                raise MeanOutsideRange(
                    f"T-mean {t_bar} outside open range of grad C for {self.label}")
        theta = self.clip_to_domain(self.moment_init(sample))

        def residual(th):
            return self.cumulant_grad(th) - t_bar

        r = residual(theta)
        for _ in range(max_iter):
            if np.linalg.norm(r) <= tol:
                return theta
            step = np.linalg.solve(self.cumulant_hess(theta), r)
            scale = 1.0
            for _ in range(30):
                cand = self.clip_to_domain(theta - scale * step)
                r_new = residual(cand)
                if np.linalg.norm(r_new) < np.linalg.norm(r):
                    theta, r = cand, r_new
                    break
                scale *= 0.5
            else:
                raise NonConvergence(
                    f"Newton line search stalled for {self.label} at {theta}")
        if np.linalg.norm(r) <= tol:
            return theta
        raise NonConvergence(
            f"MLE Newton did not reach residual {tol} in {max_iter} iterations")


class GaussianMean(ExponentialFamily):
    """Gaussian with unit variance and unknown mean."""

    label = "gaussian"
    support = SupportDescriptor("continuous", -math.inf, math.inf)
    param_lo = np.array([-math.inf])
    param_hi = np.array([math.inf])

    def suff_stat(self, x):
        return np.asarray(x, dtype=np.float64).reshape(-1, 1)

    def cumulant(self, theta):
        return 0.5 * float(theta[0]) ** 2

    def cumulant_grad(self, theta):
        return np.array([float(theta[0])])

    def cumulant_hess(self, theta):
        return np.array([[1.0]])

    def log_base(self, x):
        x = np.asarray(x, dtype=np.float64)
        return -0.5 * x**2 - 0.5 * _LOG_2PI

    def sample(self, theta, n, rng):
        return rng.normal(theta[0], 1.0, size=n)

    def moment_init(self, sample):
        return np.array([sample.observations.mean()])


class PoissonFamily(ExponentialFamily):
    """Poisson counts, canonical parameter log(rate)."""

    label = "poisson"
    support = SupportDescriptor("lattice", 0.0, math.inf)
    param_lo = np.array([-math.inf])
    param_hi = np.array([math.inf])
    t_mean_range = (np.array([0.0]), np.array([math.inf]))

    def suff_stat(self, x):
        return np.asarray(x, dtype=np.float64).reshape(-1, 1)

    def cumulant(self, theta):
        return math.exp(float(theta[0]))

    def cumulant_grad(self, theta):
        return np.array([math.exp(float(theta[0]))])

    def cumulant_hess(self, theta):
        return np.array([[math.exp(float(theta[0]))]])

    def log_base(self, x):
        from scipy.special import gammaln

        x = np.asarray(x, dtype=np.float64)
        return -gammaln(x + 1.0)

    def sample(self, theta, n, rng):
        return rng.poisson(math.exp(theta[0]), size=n).astype(np.float64)

    def moment_init(self, sample):
        m = max(sample.observations.mean(), 1e-8)
        return np.array([math.log(m)])


class ExponentialRate(ExponentialFamily):
    """Exponential lifetimes with the rate as canonical parameter
    (T(x) = -x, C(theta) = -log theta)."""

    label = "exponential"
    support = SupportDescriptor("continuous", 0.0, math.inf)
    param_lo = np.array([0.0])
    param_hi = np.array([math.inf])
    t_mean_range = (np.array([-math.inf]), np.array([0.0]))

    def suff_stat(self, x):
        return -np.asarray(x, dtype=np.float64).reshape(-1, 1)

    def cumulant(self, theta):
        return -math.log(float(theta[0]))

    def cumulant_grad(self, theta):
        return np.array([-1.0 / float(theta[0])])

    def cumulant_hess(self, theta):
        return np.array([[1.0 / float(theta[0]) ** 2]])

    def log_base(self, x):
        return np.zeros(np.asarray(x, dtype=np.float64).shape)

    def sample(self, theta, n, rng):
        return rng.exponential(1.0 / theta[0], size=n)

    def moment_init(self, sample):
        m = max(sample.observations.mean(), 1e-8)
        return np.array([1.0 / m])


class BernoulliFamily(ExponentialFamily):
    """Bernoulli trials, canonical parameter logit(p)."""

    label = "bernoulli"
    support = SupportDescriptor("lattice", 0.0, 1.0)
    param_lo = np.array([-math.inf])
    param_hi = np.array([math.inf])
    t_mean_range = (np.array([0.0]), np.array([1.0]))

    def suff_stat(self, x):
        return np.asarray(x, dtype=np.float64).reshape(-1, 1)

    def cumulant(self, theta):
        return math.log1p(math.exp(float(theta[0])))

    def cumulant_grad(self, theta):
        t = float(theta[0])
        return np.array([1.0 / (1.0 + math.exp(-t))])

    def cumulant_hess(self, theta):
        p = float(self.cumulant_grad(theta)[0])
        return np.array([[p * (1.0 - p)]])

    def log_base(self, x):
        return np.zeros(np.asarray(x, dtype=np.float64).shape)

    def sample(self, theta, n, rng):
        p = self.cumulant_grad(theta)[0]
        return rng.binomial(1, p, size=n).astype(np.float64)

    def moment_init(self, sample):
        n = sample.n
        p = np.clip(sample.observations.mean(), 1.0 / (n + 1), n / (n + 1.0))
        return np.array([math.log(p / (1.0 - p))])


class CauchyLocation(ParametricModel):
    """Cauchy location family; deliberately not exponential, shipped as
    the contrast model where different divergences give genuinely
    different estimators."""

    label = "cauchy"
    support = SupportDescriptor("continuous", -math.inf, math.inf)
    param_lo = np.array([-math.inf])
    param_hi = np.array([math.inf])

    def log_density(self, theta, x):
        theta = _as_param(theta, 1)
        x = np.asarray(x, dtype=np.float64)
        return -np.log(math.pi) - np.log1p((x - theta[0]) ** 2)

    def sample(self, theta, n, rng):
        return theta[0] + rng.standard_cauchy(size=n)

    def moment_init(self, sample):
        return np.array([float(np.median(sample.observations))])


MODEL_REGISTRY = {
    "gaussian": GaussianMean,
    "poisson": PoissonFamily,
    "exponential": ExponentialRate,
    "bernoulli": BernoulliFamily,
    "cauchy": CauchyLocation,
}


def make_model(name, **hyper):
    try:
        cls = MODEL_REGISTRY[name]
    except KeyError:
        raise ValueError(f"unknown model {name!r}; "
                         f"choose from {sorted(MODEL_REGISTRY)}") from None
    return cls(**hyper)
