"""Pure-numpy fallback for the power divergence kernels.

Mirrors the API and semantics of the compiled ``_kernels`` extension;
see that module for the conventions.  Selected by ``kernels`` when the
extension is unavailable or ``DUALDIV_PURE_PYTHON`` is set.
"""

import numpy as np

BACKEND = "numpy"

_INF = np.inf


def phi(gamma, x):
    x = np.asarray(x, dtype=np.float64)
    if gamma == 2.0:
        return 0.5 * (x - 1.0) ** 2
    out = np.full(x.shape, _INF)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        pos = x > 0.0
        xp = np.where(pos, x, 1.0)
        if gamma == 0.0:
            out[pos] = (xp - 1.0 - np.log(xp))[pos]
        elif gamma == 1.0:
            out[pos] = (xp * np.log(xp) - xp + 1.0)[pos]
            out[x == 0.0] = 1.0
        else:
            g = gamma
            out[pos] = ((xp**g - g * xp + g - 1.0) / (g * (g - 1.0)))[pos]
            out[x == 0.0] = _INF if g < 0.0 else 1.0 / g
    return out


def phi_prime(gamma, x):
    x = np.asarray(x, dtype=np.float64)
    if gamma == 2.0:
        return x - 1.0
    out = np.full(x.shape, np.nan)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        pos = x > 0.0
        xp = np.where(pos, x, 1.0)
        if gamma == 0.0:
            out[pos] = (1.0 - 1.0 / xp)[pos]
            out[x == 0.0] = -_INF
        elif gamma == 1.0:
            out[pos] = np.log(xp)[pos]
            out[x == 0.0] = -_INF
        else:
            g = gamma
            out[pos] = ((xp ** (g - 1.0) - 1.0) / (g - 1.0))[pos]
            out[x == 0.0] = 1.0 / (1.0 - g) if g > 1.0 else -_INF
    return out


def phi_sharp(gamma, x):
    x = np.asarray(x, dtype=np.float64)
    if gamma == 2.0:
        return 0.5 * (x * x - 1.0)
    out = np.full(x.shape, np.nan)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        pos = x > 0.0
        xp = np.where(pos, x, 1.0)
        if gamma == 0.0:
            out[pos] = np.log(xp)[pos]
            out[x == 0.0] = -_INF
        else:
            g = gamma
            out[pos] = ((xp**g - 1.0) / g)[pos]
            out[x == 0.0] = -_INF if g < 0.0 else -1.0 / g
    return out


def phi_exp(gamma, t):
    t = np.asarray(t, dtype=np.float64)
    with np.errstate(over="ignore"):
        if gamma == 0.0:
            return np.exp(t) - 1.0 - t
        if gamma == 1.0:
            with np.errstate(invalid="ignore"):
                out = np.exp(t) * (t - 1.0) + 1.0
            return np.where(t == -np.inf, 1.0, out)
        g = gamma
        return (np.exp(g * t) - g * np.exp(t) + g - 1.0) / (g * (g - 1.0))


def phi_prime_exp(gamma, t):
    t = np.asarray(t, dtype=np.float64)
    with np.errstate(over="ignore"):
        if gamma == 0.0:
            return 1.0 - np.exp(-t)
        if gamma == 1.0:
            return t.copy()
        g = gamma
        return (np.exp((g - 1.0) * t) - 1.0) / (g - 1.0)


def phi_sharp_exp(gamma, t):
    t = np.asarray(t, dtype=np.float64)
    with np.errstate(over="ignore"):
        if gamma == 0.0:
            return t.copy()
        g = gamma
        return (np.exp(g * t) - 1.0) / g


# Log-weighted variants: kernel(e^t) * e^lw evaluated in log space so
# the product stays representable when the factors over/underflow (near
# the feasibility boundary the ratio e^t blows up exactly where the
# measure weight e^lw dies).

def _shifted_expm1(a, lw):
    """exp(a + lw) - exp(lw), stable across factor over/underflow."""
    with np.errstate(over="ignore", invalid="ignore"):
        small = np.abs(a) < 50.0
        a_safe = np.where(small, a, 0.0)
        out = np.where(small, np.exp(lw) * np.expm1(a_safe),
                       np.exp(a + lw) - np.exp(lw))
    return np.where(lw == -np.inf, 0.0, out)


def phi_exp_w(gamma, t, lw):
    t = np.asarray(t, dtype=np.float64)
    lw = np.asarray(lw, dtype=np.float64)
    with np.errstate(over="ignore", invalid="ignore"):
        if gamma == 0.0:
            out = _shifted_expm1(t, lw) - t * np.exp(lw)
        elif gamma == 1.0:
            etlw = np.exp(t + lw)
            out = np.where(etlw == 0.0, 0.0, t * etlw) - _shifted_expm1(t, lw)
        else:
            g = gamma
            out = (_shifted_expm1(g * t, lw)
                   - g * _shifted_expm1(t, lw)) / (g * (g - 1.0))
    return np.where(lw == -np.inf, 0.0, out)


def phi_prime_exp_w(gamma, t, lw):
    t = np.asarray(t, dtype=np.float64)
    lw = np.asarray(lw, dtype=np.float64)
    with np.errstate(over="ignore", invalid="ignore"):
        if gamma == 0.0:
            out = -_shifted_expm1(-t, lw)
        elif gamma == 1.0:
            out = t * np.exp(lw)
        else:
            out = _shifted_expm1((gamma - 1.0) * t, lw) / (gamma - 1.0)
    return np.where(lw == -np.inf, 0.0, out)


def phi_sharp_exp_w(gamma, t, lw):
    t = np.asarray(t, dtype=np.float64)
    lw = np.asarray(lw, dtype=np.float64)
    with np.errstate(over="ignore", invalid="ignore"):
        if gamma == 0.0:
            out = t * np.exp(lw)
        else:
            out = _shifted_expm1(gamma * t, lw) / gamma
    return np.where(lw == -np.inf, 0.0, out)
