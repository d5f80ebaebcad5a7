"""Backend selection for the power-family hot kernels.

Prefers the compiled extension; falls back to the numpy implementation
when the extension is missing or ``DUALDIV_PURE_PYTHON`` is set to a
truthy value.  Both backends expose the same six elementwise functions
(phi, phi_prime, phi_sharp and their exp-composed variants) over
contiguous float64 arrays.
"""

import os

if os.environ.get("DUALDIV_PURE_PYTHON", "").strip() not in ("", "0"):
    from . import _kernels_np as _impl
else:
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]
    except ImportError:
        from . import _kernels_np as _impl  # type: ignore[no-redef]

BACKEND = _impl.BACKEND

def backend_module():
    """The module actually providing the kernels (for tests/benchmarks)."""
    return _impl


phi = _impl.phi
phi_prime = _impl.phi_prime
phi_sharp = _impl.phi_sharp
phi_exp = _impl.phi_exp
phi_prime_exp = _impl.phi_prime_exp
phi_sharp_exp = _impl.phi_sharp_exp
phi_exp_w = _impl.phi_exp_w
phi_prime_exp_w = _impl.phi_prime_exp_w
phi_sharp_exp_w = _impl.phi_sharp_exp_w
