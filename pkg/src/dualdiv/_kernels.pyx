# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels for the power divergence family.

Each function evaluates one of phi, phi', phi# (or the same composed
with exp) elementwise over a contiguous float64 array.  These sit in
the innermost loop of every quadrature and every per-observation sum,
which is why they are compiled; ``_kernels_np`` is the drop-in numpy
fallback selected at import time by ``kernels``.

The caller is responsible for canonicalising ``gamma`` (snapping values
within 1e-6 of 0 or 1 onto the exact limit branch).
"""

from libc.math cimport (exp as c_exp, expm1, log as c_log, pow as c_pow,
                        INFINITY, NAN)

import numpy as np

cimport numpy as cnp

cnp.import_array()


cdef inline double _phi(double g, double x) nogil:
    if g == 2.0:
        return 0.5 * (x - 1.0) * (x - 1.0)
    if x < 0.0:
        return INFINITY
    if g == 0.0:
        if x <= 0.0:
            return INFINITY
        return x - 1.0 - c_log(x)
    if g == 1.0:
        if x == 0.0:
            return 1.0
        return x * c_log(x) - x + 1.0
    if x == 0.0:
        return INFINITY if g < 0.0 else 1.0 / g
    return (c_pow(x, g) - g * x + g - 1.0) / (g * (g - 1.0))


cdef inline double _phi_prime(double g, double x) nogil:
    if g == 2.0:
        return x - 1.0
    if x < 0.0:
        return NAN
    if g == 0.0:
        if x == 0.0:
            return -INFINITY
        return 1.0 - 1.0 / x
    if g == 1.0:
        if x == 0.0:
            return -INFINITY
        return c_log(x)
    if x == 0.0:
        return 1.0 / (1.0 - g) if g > 1.0 else -INFINITY
    return (c_pow(x, g - 1.0) - 1.0) / (g - 1.0)


cdef inline double _phi_sharp(double g, double x) nogil:
    # x*phi'(x) - phi(x) collapses to (x**g - 1)/g for every power index.
    if g == 2.0:
        return 0.5 * (x * x - 1.0)
    if x < 0.0:
        return NAN
    if g == 0.0:
        if x == 0.0:
            return -INFINITY
        return c_log(x)
    if x == 0.0:
        return -INFINITY if g < 0.0 else -1.0 / g
    return (c_pow(x, g) - 1.0) / g


cdef inline double _phi_exp(double g, double t) nogil:
    if g == 0.0:
        return c_exp(t) - 1.0 - t
    if g == 1.0:
        if t == -INFINITY:
            return 1.0
        return c_exp(t) * (t - 1.0) + 1.0
    return (c_exp(g * t) - g * c_exp(t) + g - 1.0) / (g * (g - 1.0))


cdef inline double _phi_prime_exp(double g, double t) nogil:
    if g == 0.0:
        return 1.0 - c_exp(-t)
    if g == 1.0:
        return t
    return (c_exp((g - 1.0) * t) - 1.0) / (g - 1.0)


cdef inline double _phi_sharp_exp(double g, double t) nogil:
    if g == 0.0:
        return t
    return (c_exp(g * t) - 1.0) / g


# Log-weighted variants: evaluate kernel(e^t) * e^lw entirely in log
# space.  Needed near the feasibility boundary, where the ratio e^t
# overflows and the measure weight e^lw underflows while their product
# (the actual integrand) stays moderate.

cdef inline double _shifted_expm1(double a, double lw) nogil:
    # exp(a + lw) - exp(lw), stable across over/underflow of the factors
    if lw == -INFINITY:
        return 0.0
    if a > -50.0 and a < 50.0:
        return c_exp(lw) * expm1(a)
    return c_exp(a + lw) - c_exp(lw)


cdef inline double _phi_exp_w(double g, double t, double lw) nogil:
    cdef double first
    if lw == -INFINITY:
        return 0.0
    if g == 0.0:
        return _shifted_expm1(t, lw) - t * c_exp(lw)
    if g == 1.0:
        first = 0.0 if c_exp(t + lw) == 0.0 else t * c_exp(t + lw)
        return first - _shifted_expm1(t, lw)
    return (_shifted_expm1(g * t, lw) - g * _shifted_expm1(t, lw)) \
        / (g * (g - 1.0))


cdef inline double _phi_prime_exp_w(double g, double t, double lw) nogil:
    if lw == -INFINITY:
        return 0.0
    if g == 0.0:
        return -_shifted_expm1(-t, lw)
    if g == 1.0:
        return t * c_exp(lw)
    return _shifted_expm1((g - 1.0) * t, lw) / (g - 1.0)


cdef inline double _phi_sharp_exp_w(double g, double t, double lw) nogil:
    if lw == -INFINITY:
        return 0.0
    if g == 0.0:
        return t * c_exp(lw)
    return _shifted_expm1(g * t, lw) / g


ctypedef double (*wkernel_t)(double, double, double) nogil


cdef cnp.ndarray _apply_w(wkernel_t k, double g, double[::1] t,
                          double[::1] lw):
    cdef Py_ssize_t i, n = t.shape[0]
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    with nogil:
        for i in range(n):
            out[i] = k(g, t[i], lw[i])
    return out_arr


ctypedef double (*kernel_t)(double, double) nogil


cdef cnp.ndarray _apply(kernel_t k, double g, double[::1] x):
    cdef Py_ssize_t i, n = x.shape[0]
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    with nogil:
        for i in range(n):
            out[i] = k(g, x[i])
    return out_arr


def phi(double gamma, double[::1] x):
    return _apply(_phi, gamma, x)


def phi_prime(double gamma, double[::1] x):
    return _apply(_phi_prime, gamma, x)


def phi_sharp(double gamma, double[::1] x):
    return _apply(_phi_sharp, gamma, x)


def phi_exp(double gamma, double[::1] t):
    return _apply(_phi_exp, gamma, t)


def phi_prime_exp(double gamma, double[::1] t):
    return _apply(_phi_prime_exp, gamma, t)


def phi_sharp_exp(double gamma, double[::1] t):
    return _apply(_phi_sharp_exp, gamma, t)


def phi_exp_w(double gamma, double[::1] t, double[::1] lw):
    return _apply_w(_phi_exp_w, gamma, t, lw)


def phi_prime_exp_w(double gamma, double[::1] t, double[::1] lw):
    return _apply_w(_phi_prime_exp_w, gamma, t, lw)


def phi_sharp_exp_w(double gamma, double[::1] t, double[::1] lw):
    return _apply_w(_phi_sharp_exp_w, gamma, t, lw)


BACKEND = "cython"
