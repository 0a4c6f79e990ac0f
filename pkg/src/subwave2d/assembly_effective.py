"""Reduced N(2F+1)-dimensional Galerkin matrices and the composed pencil.

With phi = psi (single shared density), the transmission resonance
condition reduces to ker R_F(omega, delta) != 0 with

    R_F(omega, delta) = (1 - delta) C0 - delta G
                        - omega^2 log(omega) K1 - omega^2 K2,

where, in the normalized basis eta_{j,n} = e^{in theta}/sqrt(|bd D_j|),

* ``C0`` is the Galerkin matrix of -1/2 I + K0' with the adjoint
  double-layer kernel oriented as +(x-y).nu_x / (2 pi |x-y|^2), the sign
  under which constant densities are annihilated (every (j, 0) test row of
  C0 vanishes identically, by the Gauss integral identity);
* ``K1``, ``K2`` are the Galerkin matrices of the normal-derivative
  expansion kernels dnu G1, dnu G2 exactly as defined in
  :mod:`subwave2d.kernels` -- the sign fixed by direct quadrature, under
  which the F = 0 block of K1 is the positive rank-one matrix
  (K1_0)_ij = |D_i|/(2 pi) sqrt(|bd D_j|/|bd D_i|);
* ``G`` is the Gram matrix of the basis (the identity for circles, where
  the parametrization speed is constant).

The minus signs on the omega^2 terms are the companions of that
quadrature-fixed kernel orientation; they are what make the N = 1 circle
root of det R_F = 0 reproduce the separation-of-variables resonance
condition delta J_0(z) H_0'(z) = J_0'(z) H_0(z).

Circle diagonal blocks are circulant and filled from closed-form symbols;
general smooth curves use the FFT trapezoid rule (C0, K1 kernels are
smooth on the diagonal) and Kussmaul-Martensen or truncated-Fourier
filtering for the log-singular K2 diagonal.  All three matrices are
omega-independent and assembled once per system; composing the pencil is a
cheap per-iteration operation.
"""

from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .geometry import Circle
from .kernels import C_GAMMA, EULER_GAMMA
from .quadrature import (PeriodicGrid, fourier_modes, galerkin_from_samples,
                         km_log_diagonal, smooth_block_galerkin, tff_diagonal)

__all__ = [
    "EffectiveMatrices",
    "assemble_effective",
    "compose_RF",
    "capacitance_F0",
    "c0_circle_symbol",
    "k1_circle_symbol",
    "k2_circle_symbol",
    "gram_matrix",
]


# -- closed-form circle symbols (quadrature-consistent orientation) ----------

def c0_circle_symbol(m):
    """Diagonal symbol of C0 on a circle: 0 for m = 0, -1/2 otherwise."""
    return 0.0 if m == 0 else -0.5


def k1_circle_symbol(m, a):
    """Diagonal symbol of K1 on a circle of radius a."""
    if m == 0:
        return a**2 / 2
    if abs(m) == 1:
        return -a**2 / 4
    return 0.0


def k2_circle_symbol(m, a):
    """Diagonal symbol of K2 on a circle of radius a."""
    lam = np.log(a / 2) + EULER_GAMMA - 1j * np.pi / 2
    if m == 0:
        return a**2 / 2 * lam
    if abs(m) == 1:
        return -(a**2 / 4 * lam) - a**2 / 16
    return a**2 / (4 * abs(m) * (m**2 - 1))


def gram_matrix(curve, F, Q):
    """Normalized Gram matrix <eta_m, eta_n> of the Fourier basis on a curve.

    Identity for constant-speed parametrizations (circles); Toeplitz in
    m - n in general.
    """
    if isinstance(curve, Circle):
        return np.eye(2 * F + 1, dtype=complex)
    t = PeriodicGrid(Q).nodes
    jhat = np.fft.fft(curve.speed(t)) / Q
    m = fourier_modes(F)
    diffs = np.mod(m[:, None] - m[None, :], Q)
    return 2 * np.pi * jhat[diffs] / curve.perimeter()


# -- kernel factories ---------------------------------------------------------

def _pair_kernel(curve_i, curve_j, which):
    """Smooth inter-curve kernels for C0 / K1 / K2 (Jacobians applied later)."""
    def kern(T, S):
        X = curve_i.point(T)
        Y = curve_j.point(S)
        NU = curve_i.normal(T)
        d = X - Y
        w = (d * NU).sum(-1)
        if which == "C0":
            r2 = (d**2).sum(-1)
            return w / (2 * np.pi * r2) + 0j
        if which == "K1":
            return w / (4 * np.pi) + 0j
        r = np.sqrt((d**2).sum(-1))
        return w / (4 * np.pi) * np.log(r / 2) + C_GAMMA * w
    return kern


def _w_jac(curve):
    """(x(theta)-x(phi)).nu(theta) times both Jacobians."""
    def f(T, S):
        X = curve.point(T)
        Y = curve.point(S)
        NU = curve.normal(T)
        return ((X - Y) * NU).sum(-1) * curve.speed(T) * curve.speed(S)
    return f


def _c0_diag_samples(curve, t):
    """Parametric kernel of K0' on the diagonal block (smooth; continuous limit)."""
    T, S = np.meshgrid(t, t, indexing="ij")
    X = curve.point(t)
    d = X[:, None, :] - X[None, :, :]
    r2 = (d**2).sum(-1)
    nu = curve.normal(t)
    w = (d * nu[:, None, :]).sum(-1)
    idx = np.arange(len(t))
    r2[idx, idx] = 1.0
    K = w / (2 * np.pi * r2)
    xpp = curve.second_derivative(t)
    K[idx, idx] = -(xpp * nu).sum(-1) / (4 * np.pi) / curve.speed(t) ** 2
    J = curve.speed(t)
    return K * J[:, None] * J[None, :]


def k2_diagonal_block(curve, F, Q, method="km", tff_filter=None):
    """Unnormalized K2 Galerkin block of a single curve (log-singular diagonal)."""
    wjac = _w_jac(curve)

    if method == "km":
        log_coef = lambda T, S: wjac(T, S) / (4 * np.pi) + 0j
        smooth = lambda T, S: C_GAMMA * wjac(T, S)
        zero = lambda t: np.zeros_like(t, dtype=complex)
        return km_log_diagonal(log_coef, curve, F, Q, smooth, zero)

    if method == "tff":
        F_n = tff_filter if tff_filter is not None else Q // 2
        f = lambda T, S: wjac(T, S) / (4 * np.pi) + 0j

        def g(T, S):
            r = np.sqrt(((curve.point(T) - curve.point(S)) ** 2).sum(-1))
            return np.log(r / 2) + 0j

        out = tff_diagonal(f, g, F, F_n, Q)
        t = PeriodicGrid(Q).nodes
        T, S = np.meshgrid(t, t, indexing="ij")
        return out + galerkin_from_samples(C_GAMMA * wjac(T, S), F)

    raise ValueError(f"unknown diagonal method {method!r}")


class EffectiveMatrices:
    """Omega-independent Galerkin matrices C0, K1, K2 plus the basis Gram matrix.

    Shapes are (N(2F+1), N(2F+1)) in the normalized Fourier basis with modes
    ordered -F..F within each resonator block.
    """

    def __init__(self, system, C0, K1, K2, gram):
        self.system = system
        self.C0 = C0
        self.K1 = K1
        self.K2 = K2
        self.gram = gram
        self.F = system.F
        self.N = system.n_resonators


def assemble_effective(system, diag_method="km", threads=1):
    """Assemble C0, K1, K2 for a resonator system.

    Circle diagonal blocks come from closed-form circulant symbols; all
    other blocks are quadrature.  ``diag_method`` selects the singular
    quadrature for non-circular K2 diagonals ('km' or 'tff').
    """
    N, F, Q = system.n_resonators, system.F, system.Q
    M = 2 * F + 1
    size = N * M
    C0 = np.zeros((size, size), dtype=complex)
    K1 = np.zeros((size, size), dtype=complex)
    K2 = np.zeros((size, size), dtype=complex)
    gram = np.zeros((size, size), dtype=complex)
    per = system.perimeters

    def diag_block(i):
        ci = system.curves[i]
        sl = slice(i * M, (i + 1) * M)
        G = gram_matrix(ci, F, Q)
        if isinstance(ci, Circle):
            a = ci.radius
            ms = fourier_modes(F)
            c0 = np.diag([c0_circle_symbol(m) + 0j for m in ms])
            k1 = np.diag([k1_circle_symbol(m, a) + 0j for m in ms])
            k2 = np.diag([k2_circle_symbol(m, a) for m in ms])
        else:
            t = PeriodicGrid(Q).nodes
            k0 = galerkin_from_samples(_c0_diag_samples(ci, t), F) / per[i]
            c0 = -0.5 * G + k0
            T, S = np.meshgrid(t, t, indexing="ij")
            wj = _w_jac(ci)(T, S)
            k1 = galerkin_from_samples(wj / (4 * np.pi) + 0j, F) / per[i]
            k2 = k2_diagonal_block(ci, F, Q, method=diag_method) / per[i]
        return i, sl, G, c0, k1, k2

    def off_block(i, j):
        ci, cj = system.curves[i], system.curves[j]
        norm = np.sqrt(per[i] * per[j])
        b0 = smooth_block_galerkin(_pair_kernel(ci, cj, "C0"), ci, cj, F, Q) / norm
        b1 = smooth_block_galerkin(_pair_kernel(ci, cj, "K1"), ci, cj, F, Q) / norm
        b2 = smooth_block_galerkin(_pair_kernel(ci, cj, "K2"), ci, cj, F, Q) / norm
        return i, j, b0, b1, b2

    pairs = [(i, j) for i in range(N) for j in range(N) if i != j]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            diag_results = list(ex.map(lambda i: diag_block(i), range(N)))
            off_results = list(ex.map(lambda p: off_block(*p), pairs))
    else:
        diag_results = [diag_block(i) for i in range(N)]
        off_results = [off_block(*p) for p in pairs]

    for i, sl, G, c0, k1, k2 in diag_results:
        gram[sl, sl] = G
        C0[sl, sl] = c0
        K1[sl, sl] = k1
        K2[sl, sl] = k2
    for i, j, b0, b1, b2 in off_results:
        sli, slj = slice(i * M, (i + 1) * M), slice(j * M, (j + 1) * M)
        C0[sli, slj] = b0
        K1[sli, slj] = b1
        K2[sli, slj] = b2

    return EffectiveMatrices(system, C0, K1, K2, gram)


def compose_RF(eff, omega, delta):
    """Evaluate the reduced pencil R_F(omega, delta); principal-branch log."""
    omega = complex(omega)
    if omega == 0:
        raise ValueError("compose_RF requires omega != 0")
    w2 = omega**2
    return ((1 - delta) * eff.C0 - delta * eff.gram
            - w2 * np.log(omega) * eff.K1 - w2 * eff.K2)


def capacitance_F0(system, Q=None, diag_method="km"):
    """N x N constant-mode matrices (K1_0, K2_0).

    K1_0 uses the closed area/perimeter form; K2_0 integrates the dnu G2
    kernel (Kussmaul-Martensen on the diagonal, trapezoid off-diagonal).
    """
    N = system.n_resonators
    per, area = system.perimeters, system.areas
    K1_0 = (area[:, None] / (2 * np.pi)) * np.sqrt(per[None, :] / per[:, None]) + 0j

    if Q is None:
        Q = max(system.Q, 64)
    K2_0 = np.zeros((N, N), dtype=complex)
    for i in range(N):
        for j in range(N):
            if i == j:
                blk = k2_diagonal_block(system.curves[i], 0, Q, method=diag_method)
                K2_0[i, i] = blk[0, 0] / per[i]
            else:
                ci, cj = system.curves[i], system.curves[j]
                blk = smooth_block_galerkin(_pair_kernel(ci, cj, "K2"), ci, cj, 0, Q)
                K2_0[i, j] = blk[0, 0] / np.sqrt(per[i] * per[j])
    return K1_0, K2_0
