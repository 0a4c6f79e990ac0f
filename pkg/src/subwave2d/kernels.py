"""Helmholtz layer-potential kernels and their low-frequency expansion terms.

The 2D outgoing fundamental solution is

    Phi_w(x, y) = (i/4) H_0^(1)(w |x - y|),

and its small-argument expansion splits into a frequency-only scalar plus
static kernels:

    Phi_w = tau(w) + G0 + w^2 log(w) G1 + w^2 G2 + O(w^4 log w),

    G0 = -log|x-y| / (2 pi),
    G1 = |x-y|^2 / (8 pi),
    G2 = G1 log(|x-y|/2) + c_sl |x-y|^2,
    tau(w) = -log(w)/(2 pi) + i/4 - (gamma - log 2)/(2 pi).

The corresponding normal-derivative kernels (derivative at x, outward unit
normal nu_x) are

    dnu G0 = -(x-y).nu_x / (2 pi |x-y|^2),
    dnu G1 =  (x-y).nu_x / (4 pi),
    dnu G2 =  (x-y).nu_x / (4 pi) log(|x-y|/2) + c_gamma (x-y).nu_x,

with c_gamma = (gamma - 1/2)/(4 pi) - i/8 and, forced by the expansion
identity (checked numerically in the test suite by slope-fitting the
residual), c_sl = (gamma - 1)/(8 pi) - i/16.

All logs of complex frequency use the principal branch, which is
continuous across the fourth quadrant where the resonances live.  All
functions are pure and vectorized over trailing point axes.
"""

import numpy as np

from .specfun import hankel1

__all__ = [
    "EULER_GAMMA",
    "C_GAMMA",
    "C_SL",
    "tau",
    "phi_omega",
    "dnu_phi_omega",
    "g_k",
    "dnu_g_k",
]

EULER_GAMMA = np.euler_gamma
C_GAMMA = (EULER_GAMMA - 0.5) / (4 * np.pi) - 0.125j
C_SL = (EULER_GAMMA - 1.0) / (8 * np.pi) - 0.0625j


def tau(omega):
    """Frequency scalar tau(w) = -log(w)/(2 pi) + i/4 - (gamma - log 2)/(2 pi)."""
    if omega == 0:
        raise ValueError("tau is singular at omega = 0")
    return (-np.log(complex(omega)) / (2 * np.pi) + 0.25j
            - (EULER_GAMMA - np.log(2)) / (2 * np.pi))


def _diff(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    d = x - y
    r = np.linalg.norm(d, axis=-1)
    return d, r


def phi_omega(omega, x, y):
    """Fundamental solution (i/4) H_0^(1)(w |x-y|); x != y, w != 0."""
    if omega == 0:
        raise ValueError("phi_omega requires omega != 0")
    _, r = _diff(x, y)
    if np.any(r == 0):
        raise ValueError("phi_omega is singular at coincident points")
    return 0.25j * hankel1(0, omega * r)


def dnu_phi_omega(omega, x, y, nu_x):
    """Normal derivative at x of the fundamental solution.

    d/dnu_x Phi_w(x,y) = -(i w / 4) H_1^(1)(w r) (x-y).nu_x / r.
    """
    if omega == 0:
        raise ValueError("dnu_phi_omega requires omega != 0")
    d, r = _diff(x, y)
    if np.any(r == 0):
        raise ValueError("dnu_phi_omega is singular at coincident points")
    w = np.sum(d * np.asarray(nu_x, dtype=float), axis=-1)
    return -0.25j * omega * hankel1(1, omega * r) * w / r


def g_k(k, x, y):
    """Static expansion kernels G0, G1, G2 of the fundamental solution."""
    _, r = _diff(x, y)
    if k == 0:
        if np.any(r == 0):
            raise ValueError("G0 is singular at coincident points")
        return -np.log(r) / (2 * np.pi) + 0j
    if k == 1:
        return r**2 / (8 * np.pi) + 0j
    if k == 2:
        if np.any(r == 0):
            raise ValueError("G2 contains log|x-y| and is singular at coincident points")
        return r**2 / (8 * np.pi) * np.log(r / 2) + C_SL * r**2
    raise ValueError(f"kernel index k must be 0, 1 or 2, got {k}")


def dnu_g_k(k, x, y, nu_x):
    """Normal derivatives at x of the static kernels G0, G1, G2.

    For k in {1, 2} the parametric diagonal limit along a smooth curve is 0
    (tangent-normal orthogonality makes (x-y).nu_x vanish quadratically);
    callers that hit x == y exactly are expected to substitute that limit.
    """
    d, r = _diff(x, y)
    w = np.sum(d * np.asarray(nu_x, dtype=float), axis=-1)
    if k == 0:
        if np.any(r == 0):
            raise ValueError("dnu G0 is singular at coincident points")
        return -w / (2 * np.pi * r**2) + 0j
    if k == 1:
        return w / (4 * np.pi) + 0j
    if k == 2:
        if np.any(r == 0):
            raise ValueError("dnu G2 contains log|x-y|; substitute the diagonal limit 0")
        return w / (4 * np.pi) * np.log(r / 2) + C_GAMMA * w
    raise ValueError(f"kernel index k must be 0, 1 or 2, got {k}")
