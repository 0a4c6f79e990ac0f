"""Spectral quadrature for the double boundary integrals behind Galerkin entries.

Every entry produced here follows one convention:

    entry(m, n) = int int e^{-im theta} K(theta, phi) e^{+in phi}
                          |x_i'(theta)| |x_j'(phi)| d theta d phi,

returned as a (2F+1) x (2F+1) array indexed [m+F, n+F].  Basis functions
are the *unnormalized* exponentials e^{im theta}; assembly modules apply
the 1/sqrt(perimeter) normalization so that scaling lives in exactly one
place.

Three routines cover the three kernel classes:

* ``smooth_block_galerkin`` -- smooth biperiodic kernels (all inter-curve
  blocks): one Q x Q tabulation and one 2D FFT read off all entries at
  spectral accuracy.  DFT bins map to signed modes with negative modes in
  the upper half of the spectrum (standard FFT layout).
* ``km_log_diagonal`` -- same-curve blocks whose kernel is
  ``log_coef(theta,phi) * log(|x(theta)-x(phi)|/2) + smooth_part``:
  Kussmaul-Martensen splitting.  The kernel minus its logarithmic model is
  integrated by the trapezoid rule, while the log|2 sin((phi-theta)/2)|
  factor is convolved exactly against its Fourier coefficients
  g_k = -1/(2|k|), truncated at the available bins (|k| <= Q/2).
* ``tff_diagonal`` -- same-curve blocks f * g with f smooth and g merely
  L^2: truncated Fourier filtering.  g is sampled on a staggered grid
  (offset by half a spacing, so the diagonal singularity is never
  evaluated), truncated to |k| <= F_n per row, and the filtered product is
  integrated by the plain trapezoid rule.  No analytic knowledge of the
  singularity is used.
"""

import numpy as np

__all__ = [
    "PeriodicGrid",
    "fourier_modes",
    "galerkin_from_samples",
    "smooth_block_galerkin",
    "km_log_diagonal",
    "tff_diagonal",
]


class PeriodicGrid:
    """Equispaced periodic quadrature grid: theta_q = 2 pi q / Q, weight 2 pi / Q."""

    def __init__(self, Q):
        if Q % 2:
            raise ValueError(f"grid size Q must be even, got {Q}")
        self.Q = int(Q)
        self.nodes = 2 * np.pi * np.arange(Q) / Q
        self.weight = 2 * np.pi / Q


def fourier_modes(F):
    """Signed mode indices -F..F in storage order."""
    return np.arange(-F, F + 1)


def _check_aliasing(F, Q):
    if F > Q / 4 - 4:
        raise ValueError(f"truncation F={F} requires Q >= 4(F+4), got Q={Q}")


def galerkin_from_samples(K, F, weight_i=None, weight_j=None):
    """Read all (2F+1)^2 Galerkin entries from one 2D FFT of kernel samples.

    K holds kernel values on the tensor grid theta_r x phi_s (equispaced,
    Q x Q).  Optional weights multiply rows/columns (arclength Jacobians).
    """
    Q = K.shape[0]
    if K.shape != (Q, Q):
        raise ValueError("kernel sample array must be square")
    _check_aliasing(F, Q)
    if weight_i is not None:
        K = K * weight_i[:, None]
    if weight_j is not None:
        K = K * weight_j[None, :]
    Fhat = np.fft.fft2(K) * (2 * np.pi / Q) ** 2
    m = fourier_modes(F)
    rows = np.mod(m, Q)
    cols = np.mod(-m, Q)
    return Fhat[np.ix_(rows, cols)]


def smooth_block_galerkin(kernel, curve_i, curve_j, F, Q):
    """Galerkin block of a smooth biperiodic kernel between two curves.

    ``kernel(T, S)`` receives meshgrid angle arrays (theta on curve_i, phi
    on curve_j) and returns complex values; arclength Jacobians are applied
    here.  Spectrally accurate for disjoint curves, where the restricted
    kernel is analytic.
    """
    _check_aliasing(F, Q)
    grid = PeriodicGrid(Q)
    t = grid.nodes
    T, S = np.meshgrid(t, t, indexing="ij")
    K = np.asarray(kernel(T, S), dtype=complex)
    return galerkin_from_samples(K, F, curve_i.speed(t), curve_j.speed(t))


def _log_sin_ratio(curve, t):
    """log( r / (4 |sin(u/2)|) ) with r = |x(theta)-x(phi)|, u = phi - theta.

    Equals log(r/2) - log|2 sin(u/2)|; smooth on the torus, diagonal limit
    log(speed/2).
    """
    T, S = np.meshgrid(t, t, indexing="ij")
    X = curve.point(t)
    diff = X[:, None, :] - X[None, :, :]
    r = np.sqrt((diff**2).sum(-1))
    s = 4 * np.abs(np.sin((S - T) / 2))
    Q = len(t)
    idx = np.arange(Q)
    r[idx, idx] = 1.0
    s[idx, idx] = 1.0
    out = np.log(r / s)
    out[idx, idx] = np.log(curve.speed(t) / 2)
    return out


def km_log_diagonal(log_coef, curve, F, Q, smooth_part=None, smooth_part_diag=None):
    """Kussmaul-Martensen Galerkin block for a log-singular diagonal kernel.

    Target kernel (Jacobians included by the caller in both factors):

        K(theta, phi) = log_coef(theta, phi) * log(|x(theta) - x(phi)| / 2)
                        + smooth_part(theta, phi)

    ``log_coef`` must be smooth, biperiodic and finite on the diagonal.
    ``smooth_part`` is evaluated off-diagonal only; ``smooth_part_diag``
    supplies its diagonal limit (default 0).  The returned entries follow
    the module-wide convention and converge spectrally in Q.
    """
    if Q < 4 * F + 16:
        raise ValueError(f"Kussmaul-Martensen splitting needs Q >= 4F+16, got Q={Q}, F={F}")
    grid = PeriodicGrid(Q)
    t = grid.nodes
    T, S = np.meshgrid(t, t, indexing="ij")
    idx = np.arange(Q)

    A = np.asarray(log_coef(T, S), dtype=complex)

    # Trapezoid piece: A*(log(r/2) - log|2 sin|) + smooth_part, diagonal patched.
    R = A * _log_sin_ratio(curve, t)
    R[idx, idx] = A[idx, idx] * np.log(curve.speed(t) / 2)
    if smooth_part is not None:
        B = np.zeros((Q, Q), dtype=complex)
        off = ~np.eye(Q, dtype=bool)
        B[off] = np.asarray(smooth_part(T[off], S[off]), dtype=complex)
        if smooth_part_diag is not None:
            B[idx, idx] = smooth_part_diag(t)
        R = R + B
    out = galerkin_from_samples(R, F)

    # Exact convolution piece: log|2 sin(u/2)| = -sum_{k!=0} e^{iku}/(2|k|).
    Ahat = np.fft.fft2(A) / Q**2
    kmax = Q // 2 - F - 1
    k = np.concatenate([np.arange(-kmax, 0), np.arange(1, kmax + 1)])
    gk = -1.0 / (2 * np.abs(k))
    modes = fourier_modes(F)
    conv = np.empty((2 * F + 1, 2 * F + 1), dtype=complex)
    for im, m in enumerate(modes):
        rows = np.mod(m + k, Q)
        cols = np.mod(-(modes[None, :] + k[:, None]), Q)
        conv[im, :] = (2 * np.pi) ** 2 * np.sum(gk[:, None] * Ahat[rows[:, None], cols], axis=0)
    return out + conv


def tff_diagonal(f, g, F, F_n, q, oversample=8):
    """Truncated-Fourier-filtered Galerkin block for a kernel f * g.

    ``f(T, S)`` is smooth and biperiodic; ``g(T, S)`` may be singular along
    the diagonal but lies in L^2 per row.  Requires q > F_n (filter shorter
    than the quadrature rule).  g is sampled on a staggered phi grid
    (never touching phi = theta) at ``oversample``-fold resolution to form
    its row-wise Fourier truncation g_{F_n}; the filtered product is then
    integrated by the q-point trapezoid rule in both variables.
    """
    if F_n >= q:
        raise ValueError(f"TFF needs q = b*F_n with b > 1, got F_n={F_n}, q={q}")
    if F >= q // 2:
        raise ValueError(f"test/trial order F={F} too large for q={q}")
    theta = 2 * np.pi * np.arange(q) / q
    phi = 2 * np.pi * (np.arange(q) + 0.5) / q

    # Row-wise Fourier coefficients of g from oversampled staggered samples.
    qg = oversample * q
    phig = 2 * np.pi * (np.arange(qg) + 0.5) / qg
    Tg, Sg = np.meshgrid(theta, phig, indexing="ij")
    G = np.asarray(g(Tg, Sg), dtype=complex)
    raw = np.fft.fft(G, axis=1) / qg
    kf = np.arange(-F_n, F_n + 1)
    ghat = raw[:, np.mod(kf, qg)] * np.exp(-1j * kf * np.pi / qg)[None, :]

    # Filtered g on the staggered quadrature nodes, then the double trapezoid.
    E = np.exp(1j * np.outer(kf, phi))
    gF = ghat @ E
    T, S = np.meshgrid(theta, phi, indexing="ij")
    P = np.asarray(f(T, S), dtype=complex) * gF

    inner = np.fft.fft(P, axis=1) / 1.0
    modes = fourier_modes(F)
    cols = np.mod(-modes, q)
    stag = np.exp(1j * modes * np.pi / q)
    inner_n = inner[:, cols] * stag[None, :] * (2 * np.pi / q)

    outer = np.fft.fft(inner_n, axis=0) * (2 * np.pi / q)
    return outer[np.mod(modes, q), :]
