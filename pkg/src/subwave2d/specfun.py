"""Bessel and Hankel functions of integer order for complex arguments.

Thin validated wrappers around scipy.special (AMOS) plus the derivative
recurrences used by the circle symbol formulas.  All Helmholtz kernel
evaluations in this package reduce to J_n and H_n^(1) at complex arguments
with small negative imaginary part (resonances sit just below the real
axis), which AMOS handles at close to machine precision for the |z| <= 50
range this solver operates in.

All routines accept scalars or numpy arrays and are pure (no state), so
they are safe to call concurrently.
"""

import numpy as np
from scipy import special as _sp

__all__ = [
    "bessel_j",
    "bessel_j_prime",
    "hankel1",
    "hankel1_prime",
]


def _check_finite(z):
    if not np.all(np.isfinite(z)):
        raise ValueError("non-finite argument passed to Bessel evaluation")


def bessel_j(n, z):
    """Bessel function of the first kind J_n(z), integer n, complex z."""
    z = np.asarray(z, dtype=complex)
    _check_finite(z)
    out = _sp.jv(n, z)
    return out if out.ndim else complex(out)


def bessel_j_prime(n, z):
    """Derivative J_n'(z) via the recurrence (J_{n-1} - J_{n+1})/2."""
    z = np.asarray(z, dtype=complex)
    _check_finite(z)
    out = 0.5 * (_sp.jv(n - 1, z) - _sp.jv(n + 1, z))
    return out if out.ndim else complex(out)


def hankel1(n, z):
    """Hankel function of the first kind H_n^(1)(z).

    Raises ValueError at z == 0 where H_n^(1) has a logarithmic (n = 0)
    or algebraic (n != 0) singularity.
    """
    z = np.asarray(z, dtype=complex)
    _check_finite(z)
    if np.any(z == 0):
        raise ValueError("hankel1 is singular at z = 0")
    out = _sp.hankel1(n, z)
    return out if out.ndim else complex(out)


def hankel1_prime(n, z):
    """Derivative H_n^(1)'(z) via the recurrence (H_{n-1} - H_{n+1})/2."""
    z = np.asarray(z, dtype=complex)
    _check_finite(z)
    if np.any(z == 0):
        raise ValueError("hankel1_prime is singular at z = 0")
    out = 0.5 * (_sp.hankel1(n - 1, z) - _sp.hankel1(n + 1, z))
    return out if out.ndim else complex(out)
