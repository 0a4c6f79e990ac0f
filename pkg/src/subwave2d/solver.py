"""Three-level resonance solver: asymptotic seeds, effective-pencil fixed
point, Newton refinement on the smallest singular value of the full
transmission matrix, and spurious/duplicate filtering.

Stage 1 evaluates the closed-form seeds (:mod:`subwave2d.asymptotics`).

Stage 2 freezes log(omega) at a reference value so the reduced pencil
becomes linear in lambda = omega^2 and solves the generalized eigenvalue
problem

    [(1-delta) C0 - delta G] v = lambda [log(omega_0) K1 + K2] v,

keeping the N eigenpairs matched to the seed null vectors by maximum
overlap.  The joint loop updates omega_0 = mean |omega_j| until relative
convergence; a per-branch polish then re-freezes the (complex) log at each
branch's own omega, which converges the branch to the true root of
det R_F = 0 (the shared real omega_0 alone leaves the logarithmic branch
with an O(log|log delta| / |log delta|) relative bias, visible in the
error-scaling diagnostics).

Stage 3 is a capped Newton iteration on g(omega) = u* A_F(omega) v with
(u, v) refreshed from the smallest singular triplet of A_F each step and
A_F' formed by centered finite differences.

Everything is deterministic: no randomized initialization anywhere, and
filtering orders candidates by |omega| rather than arrival order.
"""

import time
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg as sla

from .assembly_effective import assemble_effective, capacitance_F0
from .assembly_full import assemble_A, smallest_singular
from .asymptotics import seeds as make_seeds

__all__ = [
    "SolverSettings",
    "ResonanceBranch",
    "SolverReport",
    "effective_stage",
    "newton_refine",
    "accept_filter",
    "solve",
]


@dataclass
class SolverSettings:
    """Tolerances and caps for the pipeline.

    ``eps_rel`` stops both the fixed point and Newton; ``eps_sigma`` (scaled
    by the max matrix entry) accepts a refined root; ``eps_dist`` separates
    distinct branches (if None, ``eps_dist_rel`` times the candidate omega
    scale is used).
    """

    eps_rel: float = 1e-10
    eps_sigma: float = 1e-8
    eps_dist: float | None = None
    eps_dist_rel: float = 1e-6
    max_newton: int = 40
    max_fixed_point: int = 60
    fd_step: float = 1e-6

    def validate(self):
        for name in ("eps_rel", "eps_sigma", "eps_dist_rel", "fd_step"):
            if getattr(self, name) <= 0:
                raise ValueError(f"solver setting {name} must be positive")
        if self.max_newton < 1 or self.max_fixed_point < 1:
            raise ValueError("iteration caps must be at least 1")
        return self


@dataclass
class ResonanceBranch:
    """One resonance branch with its provenance through the pipeline."""

    omega: complex
    branch_class: str            # "logarithmic" | "regular"
    stage: str                   # "seed" | "effective" | "refined"
    mode_coeffs: np.ndarray | None = None
    sigma_min: float = np.nan
    iterations: int = 0
    omega_by_stage: dict = field(default_factory=dict)
    converged: bool = True
    failure: str | None = None
    accepted: bool | None = None
    rejection_reason: str | None = None
    matrix_scale: float = np.nan


@dataclass
class SolverReport:
    """Full pipeline output: branches, filter verdicts, counts, timings."""

    branches: list
    accepted: list
    rejected_spurious: list
    rejected_duplicate: list
    fixed_point_iterations: int = 0
    omega0: float = np.nan
    timings: dict = field(default_factory=dict)
    stage: str = "refined"

    @property
    def accepted_count(self):
        return len(self.accepted)

    def branch_count_by_class(self):
        out = {"logarithmic": 0, "regular": 0}
        for b in self.accepted:
            out[b.branch_class] += 1
        return out


def _match_eigenpairs(targets, eigvals, eigvecs, target_omegas):
    """Greedy overlap matching of target vectors against eigenpairs.

    Overlap is |<t, v>| of unit vectors; near-ties (within 10 percent) are
    resolved by proximity of |omega| to the target scale.  Returns the list
    of matched column indices, one per target.
    """
    nev = eigvecs.shape[1]
    norms = np.linalg.norm(eigvecs, axis=0)
    good = np.isfinite(eigvals) & (norms > 0) & (np.abs(eigvals) > 0)
    V = eigvecs.copy()
    V[:, norms > 0] /= norms[norms > 0]
    omegas = np.sqrt(eigvals, dtype=complex)

    used = set()
    picks = []
    for t, target_om in zip(targets.T, target_omegas):
        ov = np.abs(t.conj() @ V)
        ov[~good] = -1.0
        for u in used:
            ov[u] = -1.0
        best = int(np.argmax(ov))
        near = [l for l in range(nev) if l not in used and good[l]
                and ov[l] >= 0.9 * ov[best]]
        if len(near) > 1:
            best = min(near, key=lambda l: abs(abs(omegas[l]) - abs(target_om)))
        used.add(best)
        picks.append(best)
    return picks


def _principal_sqrt(lam):
    w = np.sqrt(complex(lam))
    return -w if w.real < 0 else w


def effective_stage(eff, branch_seeds, delta, settings):
    """Fixed-point solution of the frozen-log reduced pencil for all branches.

    Returns one ResonanceBranch per seed (stage='effective'); on fixed-point
    failure the affected branches fall back to their seed values with the
    failure recorded.
    """
    system = eff.system
    seed_vecs = branch_seeds.embed(system)
    seed_omegas = branch_seeds.omegas
    classes = branch_seeds.branch_classes
    n_br = branch_seeds.n_branches

    M0 = (1 - delta) * eff.C0 - delta * eff.gram

    def solve_frozen(log_omega, targets, target_omegas):
        M1 = log_omega * eff.K1 + eff.K2
        lam, vecs = sla.eig(M0, M1)
        picks = _match_eigenpairs(targets, lam, vecs, target_omegas)
        oms = np.array([_principal_sqrt(lam[p]) for p in picks])
        V = vecs[:, picks]
        V = V / np.linalg.norm(V, axis=0, keepdims=True)
        return oms, V

    # Joint loop: shared omega_0 = mean |omega_j| (real log).
    omega0 = float(np.mean(np.abs(seed_omegas)))
    omegas, vecs = seed_omegas.copy(), seed_vecs
    it_joint = 0
    joint_ok = False
    for it_joint in range(1, settings.max_fixed_point + 1):
        omegas, vecs = solve_frozen(np.log(omega0), vecs, omegas)
        omega0_new = float(np.mean(np.abs(omegas)))
        done = abs(omega0_new - omega0) < settings.eps_rel * abs(omega0)
        omega0 = omega0_new
        if done:
            joint_ok = True
            break

    # Per-branch polish: freeze the complex log at each branch's own omega,
    # which removes the shared-scale bias and converges to det R_F = 0.
    branches = []
    for b in range(n_br):
        om = omegas[b]
        vec = vecs[:, b:b + 1]
        its = it_joint
        ok = joint_ok
        for _ in range(settings.max_fixed_point):
            oms_b, vec_b = solve_frozen(np.log(om), vec, np.array([om]))
            om_new, vec = oms_b[0], vec_b
            its += 1
            if abs(om_new - om) < settings.eps_rel * abs(om_new):
                om = om_new
                ok = joint_ok and True
                break
            om = om_new
        else:
            ok = False
        br = ResonanceBranch(
            omega=om, branch_class=classes[b], stage="effective",
            mode_coeffs=vec[:, 0], iterations=its, converged=ok,
            failure=None if ok else "fixed point did not converge",
            omega_by_stage={"seed": seed_omegas[b], "effective": om})
        if not ok:
            br.omega = seed_omegas[b]
            br.omega_by_stage["effective"] = om
            br.mode_coeffs = seed_vecs[:, b]
        branches.append(br)
    return branches, it_joint, omega0


def newton_refine(system, omega_start, settings, branch_class="regular",
                  seed_omega=None, effective_omega=None, threads=1):
    """Newton iteration on the smallest singular triplet of A_F(omega)."""
    omega = complex(omega_start)
    if omega == 0:
        raise ValueError("newton_refine requires a nonzero starting omega")
    history = {}
    if seed_omega is not None:
        history["seed"] = seed_omega
    if effective_omega is not None:
        history["effective"] = effective_omega

    converged = False
    failure = None
    it = 0
    A = assemble_A(system, omega, threads=threads)
    sigma, u, v = smallest_singular(A)
    for it in range(1, settings.max_newton + 1):
        g = u.conj() @ (A.matrix @ v)
        h = settings.fd_step * abs(omega)
        Ap = assemble_A(system, omega + h, threads=threads).matrix
        Am = assemble_A(system, omega - h, threads=threads).matrix
        gp = u.conj() @ (((Ap - Am) / (2 * h)) @ v)
        if abs(gp) < 1e-300 or not np.isfinite(gp):
            failure = "stagnation: derivative of u* A v vanished"
            break
        step = -g / gp
        if abs(step) > 0.5 * abs(omega):
            step *= 0.5 * abs(omega) / abs(step)
        omega = omega + step
        A = assemble_A(system, omega, threads=threads)
        sigma, u, v = smallest_singular(A)
        if abs(step) < settings.eps_rel * abs(omega):
            converged = True
            break
    else:
        failure = f"Newton did not converge in {settings.max_newton} iterations"

    n = A.size // 2
    phi = v[:n]
    if np.linalg.norm(phi) < 1e-8 * np.linalg.norm(v):
        phi = v[n:]
    phi = phi / np.linalg.norm(phi)
    history["refined"] = omega
    return ResonanceBranch(
        omega=omega, branch_class=branch_class, stage="refined",
        mode_coeffs=phi, sigma_min=float(sigma), iterations=it,
        omega_by_stage=history, converged=converged, failure=failure,
        matrix_scale=float(np.abs(A.matrix).max()))


def accept_filter(candidates, settings):
    """Residual and pairwise-distance filtering of refined branches.

    Candidates are processed in ascending |omega| order (deterministic
    independent of refinement order).  A branch is accepted when it
    converged, its sigma_min is below eps_sigma times the matrix scale, and
    it is farther than eps_dist from every previously accepted branch.
    """
    order = sorted(range(len(candidates)), key=lambda k: abs(candidates[k].omega))
    scale = np.mean([abs(candidates[k].omega) for k in order]) if order else 1.0
    eps_dist = settings.eps_dist if settings.eps_dist is not None \
        else settings.eps_dist_rel * scale

    accepted, spurious, duplicate = [], [], []
    for k in order:
        br = candidates[k]
        mat_scale = br.matrix_scale if np.isfinite(br.matrix_scale) else 1.0
        tol_sigma = settings.eps_sigma * max(1.0, mat_scale)
        if not br.converged:
            br.accepted = False
            br.rejection_reason = br.failure or "did not converge"
            spurious.append(br)
            continue
        if not np.isfinite(br.sigma_min) or br.sigma_min > tol_sigma:
            br.accepted = False
            br.rejection_reason = (f"sigma_min {br.sigma_min:.3e} above "
                                   f"threshold {tol_sigma:.3e}")
            spurious.append(br)
            continue
        dists = [abs(br.omega - a.omega) for a in accepted]
        if dists and min(dists) <= eps_dist:
            br.accepted = False
            br.rejection_reason = f"duplicate of branch at {accepted[int(np.argmin(dists))].omega}"
            duplicate.append(br)
            continue
        br.accepted = True
        accepted.append(br)
    return accepted, spurious, duplicate


def solve(system, settings=None, stage="refined", diag_method="km", threads=1,
          eff=None):
    """Run the full pipeline on a resonator system.

    ``stage`` stops early: 'seed' (closed forms only), 'effective'
    (fixed-point pencil), or 'refined' (full Newton + filtering).  A
    preassembled EffectiveMatrices can be passed to amortize sweeps.
    """
    settings = (settings or SolverSettings()).validate()
    delta = system.delta
    timings = {}

    t0 = time.perf_counter()
    K1_0, K2_0 = capacitance_F0(system, diag_method=diag_method)
    branch_seeds = make_seeds(K1_0, K2_0, delta, system.perimeters, system.areas)
    timings["seeds"] = time.perf_counter() - t0

    if stage == "seed":
        branches = [
            ResonanceBranch(
                omega=branch_seeds.omegas[b], branch_class=branch_seeds.branch_classes[b],
                stage="seed", mode_coeffs=branch_seeds.embed(system)[:, b],
                omega_by_stage={"seed": branch_seeds.omegas[b]})
            for b in range(branch_seeds.n_branches)]
        return SolverReport(branches, branches, [], [], stage="seed",
                            timings=timings)

    t0 = time.perf_counter()
    if eff is None:
        eff = assemble_effective(system, diag_method=diag_method, threads=threads)
    timings["assemble_effective"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    eff_branches, fp_iters, omega0 = effective_stage(eff, branch_seeds, delta, settings)
    timings["effective_stage"] = time.perf_counter() - t0

    if stage == "effective":
        acc = [b for b in eff_branches if b.converged]
        rej = [b for b in eff_branches if not b.converged]
        return SolverReport(eff_branches, acc, rej, [], fixed_point_iterations=fp_iters,
                            omega0=omega0, timings=timings, stage="effective")

    t0 = time.perf_counter()
    refined = []
    for b in eff_branches:
        refined.append(newton_refine(
            system, b.omega, settings, branch_class=b.branch_class,
            seed_omega=b.omega_by_stage.get("seed"),
            effective_omega=b.omega_by_stage.get("effective"),
            threads=threads))
    timings["refine"] = time.perf_counter() - t0

    accepted, spurious, duplicate = accept_filter(refined, settings)
    timings["total"] = sum(timings.values())
    return SolverReport(refined, accepted, spurious, duplicate,
                        fixed_point_iterations=fp_iters, omega0=omega0,
                        timings=timings, stage="refined")
