"""Closed-form asymptotic resonance seeds from the constant-mode matrices.

For small contrast delta the N x N pencil

    delta I + w^2 log(w) K1_0 + w^2 K2_0

(the F = 0 reduction, with the quadrature-fixed kernel orientation of
:mod:`subwave2d.assembly_effective`) has exactly one branch governed by the
rank-one K1_0 = (1/2 pi) v1 w1^T and N-1 branches living in its kernel.
Writing mu1 = (1/2 pi) sum |D_i| for the single nonzero eigenvalue of K1_0,
u1 = v1/||v1||, and splitting K2_0 against span{u1} and its orthogonal
complement (alpha = u1* K2_0 u1, B the complement block), the seeds are

    w_log^2 = -2 delta / (mu1 log d - mu1 log(-mu1 log(d)/2) + 2 alpha),
    w_j^2   = -delta / nu_j,     nu_j eigenvalues of B,

with the principal square root (Re w >= 0).  The leading minus signs pair
with the positive-mu1 kernel orientation; they place every seed just below
the positive real axis, in the Newton basin of the true resonances (the
N = 1 circle case reproduces the separation-of-variables balance
delta = -(w^2 a^2/2)(log(w a/2) + gamma - i pi/2) at leading order).

Scalings: |w_log|^2 ~ 2 delta/(mu1 |log delta|) and |w_j|^2 = delta/|nu_j|,
so the logarithmic branch is asymptotically the smallest.
"""

import warnings

import numpy as np

__all__ = ["BranchSeeds", "seeds", "BranchDegeneracyError"]

DELTA_ASYMPTOTIC_MAX = 1e-2


class BranchDegeneracyError(ValueError):
    """The complement block B is numerically singular; branch counts unreliable."""


class BranchSeeds:
    """Asymptotic seeds: one logarithmic branch plus N-1 regular branches.

    ``null_vectors`` holds one unit vector in C^N per branch (column order:
    log branch first, then regular branches sorted by |w_j| ascending).
    """

    def __init__(self, mu1, alpha, B_eigs, omega_log, omega_reg, null_vectors):
        self.mu1 = mu1
        self.alpha = alpha
        self.B_eigs = B_eigs
        self.omega_log = omega_log
        self.omega_reg = omega_reg
        self.null_vectors = null_vectors

    @property
    def n_branches(self):
        return 1 + len(self.omega_reg)

    @property
    def omegas(self):
        return np.concatenate([[self.omega_log], self.omega_reg])

    @property
    def branch_classes(self):
        return ["logarithmic"] + ["regular"] * len(self.omega_reg)

    def embed(self, system):
        """Lift the C^N constant-mode vectors into the N(2F+1) Galerkin space."""
        N, F = system.n_resonators, system.F
        M = 2 * F + 1
        out = np.zeros((N * M, self.n_branches), dtype=complex)
        for b in range(self.n_branches):
            for j in range(N):
                out[j * M + F, b] = self.null_vectors[j, b]
        return out


def _principal_sqrt(w2):
    """Square root with Re >= 0 (right-half-plane representative)."""
    w = np.sqrt(complex(w2))
    return -w if w.real < 0 else w


def seeds(K1_0, K2_0, delta, perimeters, areas):
    """Asymptotic branch seeds from the constant-mode matrices.

    ``perimeters`` and ``areas`` fix the rank-one vectors v1, w1 of K1_0.
    Raises BranchDegeneracyError when the complement block B is singular;
    warns (but still computes) when delta is above the asymptotic regime.
    """
    if delta <= 0:
        raise ValueError(f"contrast delta must be positive, got {delta}")
    if delta > DELTA_ASYMPTOTIC_MAX:
        warnings.warn(
            f"delta = {delta} is above the asymptotic regime (<= {DELTA_ASYMPTOTIC_MAX}); "
            "seeds are basin estimates only", stacklevel=2)

    per = np.asarray(perimeters, dtype=float)
    area = np.asarray(areas, dtype=float)
    N = len(per)
    mu1 = float(np.sum(area)) / (2 * np.pi)

    v1 = area / np.sqrt(per)
    u1 = v1 / np.linalg.norm(v1)

    # Orthonormal completion of u1 by QR of [u1 | I].
    q, _ = np.linalg.qr(np.column_stack([u1, np.eye(N)]), mode="reduced")
    if np.dot(q[:, 0].real, u1) < 0:
        q = -q
    U_perp = q[:, 1:N]

    alpha = complex(u1 @ K2_0 @ u1)

    null_vectors = np.zeros((N, N), dtype=complex)
    null_vectors[:, 0] = u1

    log_d = np.log(delta)
    denom = mu1 * log_d - mu1 * np.log(-0.5 * mu1 * log_d) + 2 * alpha
    omega_log = _principal_sqrt(-2 * delta / denom)

    if N == 1:
        return BranchSeeds(mu1, alpha, np.array([], dtype=complex),
                           omega_log, np.array([], dtype=complex), null_vectors)

    B = U_perp.conj().T @ K2_0 @ U_perp
    sing = np.linalg.svd(B, compute_uv=False)
    if sing[-1] <= 1e-12 * sing[0]:
        raise BranchDegeneracyError(
            "complement block B of K2_0 is numerically singular "
            f"(sigma_min/sigma_max = {sing[-1] / sing[0]:.2e})")

    nu, vecs = np.linalg.eig(B)
    omega_reg = np.array([_principal_sqrt(-delta / nu_j) for nu_j in nu])

    # Stable branch ordering: |w_j| ascending, ties broken by argument.
    order = sorted(range(N - 1),
                   key=lambda j: (abs(omega_reg[j]), np.angle(omega_reg[j])))
    nu = nu[order]
    omega_reg = omega_reg[order]
    vecs = vecs[:, order]
    lifted = U_perp @ vecs
    lifted /= np.linalg.norm(lifted, axis=0, keepdims=True)
    null_vectors[:, 1:] = lifted

    return BranchSeeds(mu1, alpha, nu, omega_log, omega_reg, null_vectors)
