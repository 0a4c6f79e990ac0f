"""Full 2N(2F+1) x 2N(2F+1) Fourier-Galerkin transmission matrix A_F(omega).

Block layout (phi = interior density block, psi = exterior density block):

    A(omega, delta) = [ S          -S               ]
                      [ -G/2 + K'  -delta (G/2 + K') ]

with S the single-layer Galerkin matrix of Phi_w, G the basis Gram matrix
and K' the adjoint double-layer matrix oriented so that -G/2 + K'
annihilates constant densities in the static limit, i.e. with kernel
+(i w / 4) H_1^(1)(w r) (x-y).nu_x / r (the negative of the classical
normal-derivative kernel; the orientation is fixed by the same quadrature
oracle as the effective matrices).  Under this orientation the N = 1
circle block reproduces the separation-of-variables resonance condition
delta J_m(z) H_m'(z) = J_m'(z) H_m(z) exactly, mode by mode.

All entries use the normalized basis eta_{j,n} = e^{in theta}/sqrt(|bd D_j|),
so a unit-circle S diagonal entry equals (i pi a / 2) J_m(w a) H_m^(1)(w a).
Diagonal blocks of circles are filled from closed-form symbols; general
curves use Kussmaul-Martensen splitting for both the S_w log singularity
and the K'_w one.  Inter-curve blocks are smooth and handled by the 2D FFT
trapezoid rule.  For all-circle systems ``FastCircleApplier`` performs
matrix-vector products without materializing the inter-curve blocks, using
Graf-addition Toeplitz structure and FFT convolution.
"""

from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .geometry import Circle
from .kernels import EULER_GAMMA
from .quadrature import (PeriodicGrid, fourier_modes, km_log_diagonal,
                         smooth_block_galerkin)
from .assembly_effective import gram_matrix
from .specfun import bessel_j, bessel_j_prime, hankel1, hankel1_prime

__all__ = [
    "FullSystemMatrix",
    "assemble_A",
    "smallest_singular",
    "FastCircleApplier",
    "apply_A_fast",
    "s_circle_symbol",
    "kprime_circle_symbol",
    "FastPathError",
]


class FastPathError(ValueError):
    """Fast matrix-vector path requested for an unsupported geometry."""


def s_circle_symbol(m, omega, a):
    """Single-layer circle symbol (i pi a / 2) J_m(w a) H_m^(1)(w a)."""
    z = omega * a
    return 0.5j * np.pi * a * bessel_j(m, z) * hankel1(m, z)


def kprime_circle_symbol(m, omega, a):
    """Classical adjoint double-layer circle symbol, jump term excluded:

        (i pi w a / 4) (J_m'(w a) H_m(w a) + J_m(w a) H_m'(w a)).

    The assembled K' block uses the negative of this symbol (see module
    docstring for the orientation convention).
    """
    z = omega * a
    return 0.25j * np.pi * omega * a * (
        bessel_j_prime(m, z) * hankel1(m, z) + bessel_j(m, z) * hankel1_prime(m, z))


# -- generic-curve diagonal blocks -------------------------------------------

def _geom_tables(curve, t):
    X = curve.point(t)
    d = X[:, None, :] - X[None, :, :]
    r = np.sqrt((d**2).sum(-1))
    nu = curve.normal(t)
    w = (d * nu[:, None, :]).sum(-1)
    J = curve.speed(t)
    return r, w, J


def s_diagonal_block(curve, omega, F, Q):
    """Unnormalized single-layer Galerkin block on one curve (KM splitting).

    Splitting of (i/4) H_0(w r):  log coefficient -(1/2 pi) J_0(w r) against
    log(r/2), smooth remainder with diagonal limit
    (i/4 - (gamma + log w)/(2 pi)) J^2.
    """
    t = PeriodicGrid(Q).nodes
    r, _, J = _geom_tables(curve, t)
    idx = np.arange(Q)
    r_safe = r.copy()
    r_safe[idx, idx] = 1.0
    JJ = J[:, None] * J[None, :]

    A = -bessel_j(0, omega * r_safe) / (2 * np.pi) * JJ
    A[idx, idx] = -J**2 / (2 * np.pi)
    log_r2 = np.log(r_safe / 2)
    B = 0.25j * hankel1(0, omega * r_safe) * JJ - A * log_r2
    B[idx, idx] = 0.0

    def log_coef(T, S):
        return A

    def smooth(Toff, Soff):
        off = ~np.eye(Q, dtype=bool)
        return B[off]

    def smooth_diag(tv):
        return (0.25j - (EULER_GAMMA + np.log(omega)) / (2 * np.pi)) * J**2

    return km_log_diagonal(log_coef, curve, F, Q, smooth, smooth_diag)


def kprime_diagonal_block(curve, omega, F, Q):
    """Unnormalized K' Galerkin block on one curve, jump term excluded.

    Kernel +(i w/4) H_1(w r) w_x / r; log coefficient
    -(w^2/(2 pi)) w_x J_1(w r)/(w r), smooth remainder with diagonal limit
    -x''(t).nu(t)/(4 pi).
    """
    t = PeriodicGrid(Q).nodes
    r, wdot, J = _geom_tables(curve, t)
    idx = np.arange(Q)
    r_safe = r.copy()
    r_safe[idx, idx] = 1.0
    JJ = J[:, None] * J[None, :]

    z = omega * r_safe
    A = -(omega**2 / (2 * np.pi)) * wdot * (bessel_j(1, z) / z) * JJ
    A[idx, idx] = 0.0
    kern = 0.25j * omega * hankel1(1, z) * (wdot / r_safe) * JJ
    B = kern - A * np.log(r_safe / 2)
    B[idx, idx] = 0.0

    xpp = curve.second_derivative(t)
    nu = curve.normal(t)
    diag = -(xpp * nu).sum(-1) / (4 * np.pi) + 0j

    def log_coef(T, S):
        return A

    def smooth(Toff, Soff):
        off = ~np.eye(Q, dtype=bool)
        return B[off]

    def smooth_diag(tv):
        return diag

    return km_log_diagonal(log_coef, curve, F, Q, smooth, smooth_diag)


# -- inter-curve kernels -------------------------------------------------------

def _s_pair_kernel(curve_i, curve_j, omega):
    def kern(T, S):
        d = curve_i.point(T) - curve_j.point(S)
        r = np.sqrt((d**2).sum(-1))
        return 0.25j * hankel1(0, omega * r)
    return kern


def _kprime_pair_kernel(curve_i, curve_j, omega):
    def kern(T, S):
        d = curve_i.point(T) - curve_j.point(S)
        r = np.sqrt((d**2).sum(-1))
        w = (d * curve_i.normal(T)).sum(-1)
        return 0.25j * omega * hankel1(1, omega * r) * w / r
    return kern


class FullSystemMatrix:
    """Assembled dense transmission matrix with block index bookkeeping."""

    def __init__(self, system, omega, matrix, S, K):
        self.system = system
        self.omega = omega
        self.delta = system.delta
        self.matrix = matrix
        self.S = S
        self.K = K

    @property
    def size(self):
        return self.matrix.shape[0]

    def block(self, ell, r):
        """One of the four operator blocks, each N(2F+1) square."""
        n = self.size // 2
        return self.matrix[ell * n:(ell + 1) * n, r * n:(r + 1) * n]


def assemble_A(system, omega, threads=1):
    """Assemble the dense transmission matrix A_F(omega) for a system."""
    omega = complex(omega)
    if omega == 0:
        raise ValueError("assemble_A requires omega != 0")
    N, F, Q = system.n_resonators, system.F, system.Q
    M = 2 * F + 1
    size = N * M
    per = system.perimeters
    S = np.zeros((size, size), dtype=complex)
    K = np.zeros((size, size), dtype=complex)
    G = np.zeros((size, size), dtype=complex)

    def diag_block(i):
        ci = system.curves[i]
        Gi = gram_matrix(ci, F, Q)
        if isinstance(ci, Circle):
            a = ci.radius
            ms = fourier_modes(F)
            s = np.diag([s_circle_symbol(m, omega, a) for m in ms])
            k = np.diag([-kprime_circle_symbol(m, omega, a) for m in ms])
        else:
            s = s_diagonal_block(ci, omega, F, Q) / per[i]
            k = kprime_diagonal_block(ci, omega, F, Q) / per[i]
        return i, Gi, s, k

    def off_block(i, j):
        ci, cj = system.curves[i], system.curves[j]
        norm = np.sqrt(per[i] * per[j])
        s = smooth_block_galerkin(_s_pair_kernel(ci, cj, omega), ci, cj, F, Q) / norm
        k = smooth_block_galerkin(_kprime_pair_kernel(ci, cj, omega), ci, cj, F, Q) / norm
        return i, j, s, k

    pairs = [(i, j) for i in range(N) for j in range(N) if i != j]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            diags = list(ex.map(lambda i: diag_block(i), range(N)))
            offs = list(ex.map(lambda p: off_block(*p), pairs))
    else:
        diags = [diag_block(i) for i in range(N)]
        offs = [off_block(*p) for p in pairs]

    for i, Gi, s, k in diags:
        sl = slice(i * M, (i + 1) * M)
        G[sl, sl] = Gi
        S[sl, sl] = s
        K[sl, sl] = k
    for i, j, s, k in offs:
        sli, slj = slice(i * M, (i + 1) * M), slice(j * M, (j + 1) * M)
        S[sli, slj] = s
        K[sli, slj] = k

    delta = system.delta
    A = np.block([[S, -S],
                  [-0.5 * G + K, -delta * (0.5 * G + K)]])
    return FullSystemMatrix(system, omega, A, S, K)


def smallest_singular(A):
    """Smallest singular triplet (sigma_min, u, v) of an assembled matrix."""
    mat = A.matrix if isinstance(A, FullSystemMatrix) else np.asarray(A)
    try:
        U, s, Vh = np.linalg.svd(mat)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(
            f"SVD failed for matrix of shape {mat.shape}: {exc}") from exc
    return s[-1], U[:, -1], Vh[-1].conj()


# -- fast all-circle matrix-vector path ---------------------------------------

class FastCircleApplier:
    """Matrix-vector products with A_F(omega) for all-circle systems.

    Diagonal blocks act as mode-wise scalings; inter-circle blocks are
    Toeplitz in the mode difference (Graf's addition theorem):

        S[i,m; j,n]  = (i pi/2) sqrt(a_i a_j) J_m(w a_i) J_n(w a_j) T^{ij}_{n-m},
        K'[i,m; j,n] = -(i pi w/2) sqrt(a_i a_j) J_m'(w a_i) J_n(w a_j) T^{ij}_{n-m},
        T^{ij}_k     = H_k^(1)(w d_ij) e^{i k alpha_ij},  alpha_ij = arg(c_i - c_j),

    applied as band convolutions without forming the blocks.  In the
    subwavelength regime |T_k| spans many orders of magnitude
    (|H_k(w d)| grows factorially in k at small argument), so a single
    length-L FFT convolution would smear absolute rounding error of size
    max_k |T_k| * eps across all outputs and destroy the small entries.
    The convolution is therefore evaluated output-by-output (np.convolve),
    which keeps every row's intermediates at that row's own scale; an FFT
    pass is used only when the band is numerically tame.  At the band
    widths relevant here (2F+1 <= a few hundred) the direct path is also
    the faster one.
    """

    _FFT_RANGE_LIMIT = 1e8

    def __init__(self, system, omega):
        if not system.all_circles():
            raise FastPathError("fast apply path supports circle resonators only")
        self.system = system
        self.omega = complex(omega)
        N, F = system.n_resonators, system.F
        self.N, self.F = N, F
        M = 2 * F + 1
        self.M = M
        ms = fourier_modes(F)
        radii = np.array([c.radius for c in system.curves])
        z = self.omega * radii
        self.sdiag = np.empty((N, M), dtype=complex)
        self.kdiag = np.empty((N, M), dtype=complex)
        self.jrow = np.empty((N, M), dtype=complex)
        self.jprow = np.empty((N, M), dtype=complex)
        self.jcol = np.empty((N, M), dtype=complex)
        for j in range(N):
            self.sdiag[j] = [s_circle_symbol(m, self.omega, radii[j]) for m in ms]
            self.kdiag[j] = [-kprime_circle_symbol(m, self.omega, radii[j]) for m in ms]
            self.jrow[j] = bessel_j(ms, z[j])
            self.jprow[j] = bessel_j_prime(ms, z[j])
            self.jcol[j] = self.jrow[j]
        self.radii = radii

        # Convolution kernels d_k = T_{-k}; FFT form only for tame bands.
        self.L = 1 << (6 * F + 2).bit_length()
        self.dkern = {}
        self.dhat = {}
        ks = np.arange(-2 * F, 2 * F + 1)
        centers = np.array([c.center for c in system.curves])
        for i in range(N):
            for j in range(N):
                if i == j:
                    continue
                dvec = centers[i] - centers[j]
                d = np.hypot(*dvec)
                alpha = np.arctan2(dvec[1], dvec[0])
                T = hankel1(ks, self.omega * d) * np.exp(1j * ks * alpha)
                dk = T[::-1]  # d_k = T_{-k}
                self.dkern[(i, j)] = dk
                mags = np.abs(T)
                if mags.max() < self._FFT_RANGE_LIMIT * max(mags.min(), 1e-300):
                    pad = np.zeros(self.L, dtype=complex)
                    pad[:len(dk)] = dk
                    self.dhat[(i, j)] = np.fft.fft(pad)

    def _toeplitz_apply(self, i, j, c):
        """y_m = sum_n T^{ij}_{n-m} c_n for m = -F..F (band convolution)."""
        F = self.F
        dhat = self.dhat.get((i, j))
        if dhat is not None:
            pad = np.zeros(self.L, dtype=complex)
            pad[:len(c)] = c
            full = np.fft.ifft(dhat * np.fft.fft(pad))
        else:
            full = np.convolve(self.dkern[(i, j)], c)
        return full[2 * F:4 * F + 1]

    def _apply_S(self, v):
        N, M, F = self.N, self.M, self.F
        out = np.empty(N * M, dtype=complex)
        scaled = [(self.jcol[j] * v[j * M:(j + 1) * M]) for j in range(N)]
        for i in range(N):
            acc = self.sdiag[i] * v[i * M:(i + 1) * M]
            for j in range(N):
                if j == i:
                    continue
                conv = self._toeplitz_apply(i, j, scaled[j])
                pref = 0.5j * np.pi * np.sqrt(self.radii[i] * self.radii[j])
                acc = acc + pref * self.jrow[i] * conv
            out[i * M:(i + 1) * M] = acc
        return out

    def _apply_K(self, v):
        N, M = self.N, self.M
        out = np.empty(N * M, dtype=complex)
        scaled = [(self.jcol[j] * v[j * M:(j + 1) * M]) for j in range(N)]
        for i in range(N):
            acc = self.kdiag[i] * v[i * M:(i + 1) * M]
            for j in range(N):
                if j == i:
                    continue
                conv = self._toeplitz_apply(i, j, scaled[j])
                pref = -0.5j * np.pi * self.omega * np.sqrt(self.radii[i] * self.radii[j])
                acc = acc + pref * self.jprow[i] * conv
            out[i * M:(i + 1) * M] = acc
        return out

    def apply(self, x):
        """A_F(omega) @ x for x = (phi coefficients, psi coefficients)."""
        x = np.asarray(x, dtype=complex)
        n = self.N * self.M
        if x.shape != (2 * n,):
            raise ValueError(f"expected vector of length {2 * n}, got {x.shape}")
        phi, psi = x[:n], x[n:]
        delta = self.system.delta
        row1 = self._apply_S(phi - psi)
        row2 = self._apply_K(phi - delta * psi) - 0.5 * (phi + delta * psi)
        return np.concatenate([row1, row2])


def apply_A_fast(system, omega, x):
    """One-shot fast product A_F(omega) @ x for all-circle systems."""
    return FastCircleApplier(system, omega).apply(x)
