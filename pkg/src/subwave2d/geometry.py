"""Parametrized smooth closed curves and multi-resonator configurations.

Every resonator boundary is a C-infinity simple closed curve with a
2pi-periodic counterclockwise parametrization x(theta).  Three families are
supported:

* ``Circle``     -- center c, radius a:      x = c + a (cos t, sin t)
* ``Ellipse``    -- semi-axes (p, q), optional rotation phi0
* ``StarSmooth`` -- polar radius rho(t) = r0 (1 + eps cos(k t)), |eps| < 1

Curves expose positions, tangents, outward unit normals, speeds |x'(t)| and
second derivatives (needed for the diagonal limits of the adjoint
double-layer kernels), plus perimeter (spectral trapezoid on |x'|) and
enclosed area (Green's theorem).  All objects are immutable after
construction and freely shareable across threads.
"""

import numpy as np

__all__ = [
    "BoundaryCurve",
    "Circle",
    "Ellipse",
    "StarSmooth",
    "ResonatorSystem",
    "ConfigurationError",
    "min_separation",
]

_PERIM_SAMPLES = 4096


class ConfigurationError(ValueError):
    """Invalid resonator configuration (overlap, bad parameters)."""


class BoundaryCurve:
    """Base class for smooth closed counterclockwise-parametrized curves."""

    kind = "abstract"

    def point(self, theta):
        raise NotImplementedError

    def derivative(self, theta):
        raise NotImplementedError

    def second_derivative(self, theta):
        raise NotImplementedError

    def contains(self, points):
        """Boolean mask: which points lie strictly inside the curve."""
        raise NotImplementedError

    # -- derived quantities -------------------------------------------------

    def speed(self, theta):
        return np.linalg.norm(self.derivative(theta), axis=-1)

    def normal(self, theta):
        """Outward unit normal: tangent rotated by -pi/2 (ccw orientation)."""
        d = self.derivative(theta)
        s = np.linalg.norm(d, axis=-1, keepdims=True)
        t = d / s
        return np.stack([t[..., 1], -t[..., 0]], axis=-1)

    def eval(self, theta):
        """Return (point, tangent, outward unit normal, speed) at theta."""
        theta = np.asarray(theta, dtype=float)
        x = self.point(theta)
        d = self.derivative(theta)
        s = np.linalg.norm(d, axis=-1)
        t = d / s[..., None]
        nu = np.stack([t[..., 1], -t[..., 0]], axis=-1)
        return x, d, nu, s

    def perimeter(self):
        t = 2 * np.pi * np.arange(_PERIM_SAMPLES) / _PERIM_SAMPLES
        return float(np.sum(self.speed(t)) * 2 * np.pi / _PERIM_SAMPLES)

    def area(self):
        t = 2 * np.pi * np.arange(_PERIM_SAMPLES) / _PERIM_SAMPLES
        x = self.point(t)
        d = self.derivative(t)
        integrand = x[:, 0] * d[:, 1] - x[:, 1] * d[:, 0]
        return float(0.5 * np.sum(integrand) * 2 * np.pi / _PERIM_SAMPLES)

    def diameter(self):
        t = 2 * np.pi * np.arange(256) / 256
        x = self.point(t)
        lo, hi = x.min(axis=0), x.max(axis=0)
        return float(np.linalg.norm(hi - lo))


class Circle(BoundaryCurve):
    kind = "circle"

    def __init__(self, center=(0.0, 0.0), radius=1.0):
        if radius <= 0:
            raise ConfigurationError(f"circle radius must be positive, got {radius}")
        self.center = np.asarray(center, dtype=float)
        self.radius = float(radius)

    def point(self, theta):
        theta = np.asarray(theta, dtype=float)
        e = np.stack([np.cos(theta), np.sin(theta)], axis=-1)
        return self.center + self.radius * e

    def derivative(self, theta):
        theta = np.asarray(theta, dtype=float)
        return self.radius * np.stack([-np.sin(theta), np.cos(theta)], axis=-1)

    def second_derivative(self, theta):
        theta = np.asarray(theta, dtype=float)
        return -self.radius * np.stack([np.cos(theta), np.sin(theta)], axis=-1)

    def perimeter(self):
        return 2 * np.pi * self.radius

    def area(self):
        return np.pi * self.radius**2

    def diameter(self):
        return 2 * self.radius

    def contains(self, points):
        points = np.asarray(points, dtype=float)
        return np.linalg.norm(points - self.center, axis=-1) < self.radius

    def __repr__(self):
        return f"Circle(center={tuple(self.center)}, radius={self.radius})"


class Ellipse(BoundaryCurve):
    kind = "ellipse"

    def __init__(self, center=(0.0, 0.0), semi_axes=(1.0, 1.0), rotation=0.0):
        p, q = semi_axes
        if p <= 0 or q <= 0:
            raise ConfigurationError(f"ellipse semi-axes must be positive, got {semi_axes}")
        self.center = np.asarray(center, dtype=float)
        self.semi_axes = (float(p), float(q))
        self.rotation = float(rotation)
        c, s = np.cos(self.rotation), np.sin(self.rotation)
        self._rot = np.array([[c, -s], [s, c]])

    def _body(self, theta):
        p, q = self.semi_axes
        return np.stack([p * np.cos(theta), q * np.sin(theta)], axis=-1)

    def point(self, theta):
        theta = np.asarray(theta, dtype=float)
        return self.center + self._body(theta) @ self._rot.T

    def derivative(self, theta):
        theta = np.asarray(theta, dtype=float)
        p, q = self.semi_axes
        d = np.stack([-p * np.sin(theta), q * np.cos(theta)], axis=-1)
        return d @ self._rot.T

    def second_derivative(self, theta):
        theta = np.asarray(theta, dtype=float)
        return -self._body(theta) @ self._rot.T

    def area(self):
        p, q = self.semi_axes
        return np.pi * p * q

    def contains(self, points):
        points = np.asarray(points, dtype=float)
        body = (points - self.center) @ self._rot
        p, q = self.semi_axes
        return (body[..., 0] / p) ** 2 + (body[..., 1] / q) ** 2 < 1.0

    def __repr__(self):
        return (f"Ellipse(center={tuple(self.center)}, semi_axes={self.semi_axes}, "
                f"rotation={self.rotation})")


class StarSmooth(BoundaryCurve):
    """Smoothly perturbed circle rho(t) = r0 (1 + eps cos(k t)).

    With |eps| < 1 the radius stays positive, so the curve is simple,
    closed and smooth; it models ring-like lobed resonators.
    """

    kind = "star"

    def __init__(self, center=(0.0, 0.0), base_radius=1.0, amplitude=0.1, lobes=3):
        if base_radius <= 0:
            raise ConfigurationError(f"star base radius must be positive, got {base_radius}")
        if abs(amplitude) >= 1:
            raise ConfigurationError(f"star amplitude must satisfy |eps| < 1, got {amplitude}")
        self.center = np.asarray(center, dtype=float)
        self.base_radius = float(base_radius)
        self.amplitude = float(amplitude)
        self.lobes = int(lobes)

    def _rho(self, theta):
        return self.base_radius * (1 + self.amplitude * np.cos(self.lobes * theta))

    def _rho_p(self, theta):
        return -self.base_radius * self.amplitude * self.lobes * np.sin(self.lobes * theta)

    def _rho_pp(self, theta):
        return -self.base_radius * self.amplitude * self.lobes**2 * np.cos(self.lobes * theta)

    def point(self, theta):
        theta = np.asarray(theta, dtype=float)
        e = np.stack([np.cos(theta), np.sin(theta)], axis=-1)
        return self.center + self._rho(theta)[..., None] * e

    def derivative(self, theta):
        theta = np.asarray(theta, dtype=float)
        e = np.stack([np.cos(theta), np.sin(theta)], axis=-1)
        ep = np.stack([-np.sin(theta), np.cos(theta)], axis=-1)
        return self._rho_p(theta)[..., None] * e + self._rho(theta)[..., None] * ep

    def second_derivative(self, theta):
        theta = np.asarray(theta, dtype=float)
        e = np.stack([np.cos(theta), np.sin(theta)], axis=-1)
        ep = np.stack([-np.sin(theta), np.cos(theta)], axis=-1)
        rho, rp, rpp = self._rho(theta), self._rho_p(theta), self._rho_pp(theta)
        return (rpp - rho)[..., None] * e + (2 * rp)[..., None] * ep

    def area(self):
        # polar: area = 1/2 int rho^2 = pi r0^2 (1 + eps^2/2)
        return np.pi * self.base_radius**2 * (1 + self.amplitude**2 / 2)

    def contains(self, points):
        points = np.asarray(points, dtype=float)
        rel = points - self.center
        r = np.linalg.norm(rel, axis=-1)
        ang = np.arctan2(rel[..., 1], rel[..., 0])
        return r < self._rho(ang)

    def __repr__(self):
        return (f"StarSmooth(center={tuple(self.center)}, base_radius={self.base_radius}, "
                f"amplitude={self.amplitude}, lobes={self.lobes})")


def min_separation(curves, samples=1024):
    """Minimum distance between any two distinct curves (dense sampling)."""
    if len(curves) < 2:
        raise ValueError("min_separation needs at least two curves")
    t = 2 * np.pi * np.arange(samples) / samples
    pts = [c.point(t) for c in curves]
    best = np.inf
    pair = (0, 1)
    for i in range(len(curves)):
        for j in range(i + 1, len(curves)):
            diff = pts[i][:, None, :] - pts[j][None, :, :]
            d = np.sqrt((diff**2).sum(-1)).min()
            if d < best:
                best, pair = d, (i, j)
    return float(best), pair


class ResonatorSystem:
    """N disjoint boundary curves plus contrast delta and discretization (F, Q).

    Q defaults to the smallest even integer >= 4 (F + 4), the aliasing-safe
    quadrature size for truncation order F.  Construction validates
    pairwise disjointness; overlapping curves raise ConfigurationError
    naming the offending pair.
    """

    def __init__(self, curves, delta, F=3, Q=None):
        curves = list(curves)
        if not curves:
            raise ConfigurationError("system needs at least one resonator")
        if not (0 < delta < 1):
            raise ConfigurationError(f"contrast delta must lie in (0, 1), got {delta}")
        if F < 0:
            raise ConfigurationError(f"truncation order F must be >= 0, got {F}")
        q_min = 4 * (F + 4)
        if Q is None:
            Q = q_min + (q_min % 2)
        if Q % 2 or Q < q_min:
            raise ConfigurationError(f"Q must be even and >= 4(F+4) = {q_min}, got {Q}")
        self.curves = curves
        self.delta = float(delta)
        self.F = int(F)
        self.Q = int(Q)
        if len(curves) > 1:
            sep, pair = min_separation(curves)
            scale = max(c.diameter() for c in curves)
            if sep < 1e-6 * scale:
                raise ConfigurationError(
                    f"resonators {pair[0]} and {pair[1]} overlap or nearly touch "
                    f"(separation {sep:.3e})")
            self.separation = sep
        else:
            self.separation = np.inf
        self.perimeters = np.array([c.perimeter() for c in curves])
        self.areas = np.array([c.area() for c in curves])

    @property
    def n_resonators(self):
        return len(self.curves)

    @property
    def n_modes(self):
        return 2 * self.F + 1

    @property
    def size(self):
        """Dimension of the one-density Galerkin space, N (2F+1)."""
        return self.n_resonators * self.n_modes

    def mode_index(self, j, n):
        """Flat index of Fourier mode n on resonator j (modes ordered -F..F)."""
        return j * self.n_modes + (n + self.F)

    def all_circles(self):
        return all(isinstance(c, Circle) for c in self.curves)

    def __repr__(self):
        return (f"ResonatorSystem(N={self.n_resonators}, delta={self.delta}, "
                f"F={self.F}, Q={self.Q})")
