"""S^2, S^3 = SU(2), the double cover G: S^3 -> M0 and the contact forms.

Conventions
-----------
* A point of S^2 is written (t, z) with t real and z complex, stored ambiently
  as the unit 3-vector (t, Re z, Im z). Geodesic polar coordinates are
  t = cos r, z = sin r e^{i phi}; the symmetry axis is therefore e1.
* A point of S^3 is a pair (w1, w2) of complex numbers, standing for the
  matrix [[w1, w2], [-conj(w2), conj(w1)]].
* lambda0 at A is xi -> Re <iA, xi> with the real part of the Hermitian
  product; omega1^0 at (x, v) is dx -> <v, dx>.

Functions on S^3 (the h of the lift) are vectorised callables h(w1, w2).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import qmc

from .config import DEFAULTS
from .errors import ChartPoleError, DomainError
from .numerics import central_difference

E1 = np.array([1.0, 0.0, 0.0])


@dataclass(frozen=True)
class SpherePoint:
    t: float
    z: complex

    def __post_init__(self):
        if abs(self.t ** 2 + abs(self.z) ** 2 - 1.0) > DEFAULTS.unit_tol * 10:
            raise DomainError("SpherePoint must satisfy t^2 + |z|^2 = 1")

    def ambient(self) -> np.ndarray:
        return np.array([self.t, self.z.real, self.z.imag])

    @classmethod
    def from_ambient(cls, x) -> "SpherePoint":
        x = np.asarray(x, dtype=float)
        return cls(float(x[0]), complex(x[1], x[2]))


@dataclass(frozen=True)
class SU2Element:
    w1: complex
    w2: complex

    def __post_init__(self):
        if abs(abs(self.w1) ** 2 + abs(self.w2) ** 2 - 1.0) > DEFAULTS.unit_tol * 10:
            raise DomainError("SU2Element must satisfy |w1|^2 + |w2|^2 = 1")

    def __neg__(self) -> "SU2Element":
        return SU2Element(-self.w1, -self.w2)

    def matrix(self) -> np.ndarray:
        return np.array([[self.w1, self.w2], [-np.conj(self.w2), np.conj(self.w1)]])


@dataclass(frozen=True)
class PolarChartPoint:
    r: float
    phi: float
    margin: float = 1e-6

    def __post_init__(self):
        if not (self.margin < self.r < np.pi - self.margin):
            raise ChartPoleError(f"r={self.r} within {self.margin} of a chart pole")

    def ambient(self) -> np.ndarray:
        return polar_to_ambient(self.r, self.phi)


@dataclass(frozen=True)
class UnitTangentPair:
    x: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        v = np.asarray(self.v, dtype=float)
        tol = DEFAULTS.unit_tol * 10
        if abs(x @ x - 1) > tol or abs(v @ v - 1) > tol or abs(x @ v) > tol:
            raise DomainError("(x, v) is not a unit tangent pair")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "v", v)


# ---------------------------------------------------------------- S^2 charts

def polar_to_ambient(r, phi) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    phi = np.asarray(phi, dtype=float)
    return np.stack([np.cos(r), np.sin(r) * np.cos(phi), np.sin(r) * np.sin(phi)], axis=-1)


def ambient_to_polar(x) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(x, dtype=float)
    rho = np.hypot(x[..., 1], x[..., 2])
    r = np.arctan2(rho, x[..., 0])
    phi = np.mod(np.arctan2(x[..., 2], x[..., 1]), 2 * np.pi)
    return r, phi


def polar_frame(x, margin: float = 1e-9) -> tuple[np.ndarray, np.ndarray]:
    """Unit vectors (e_r, e_phi) at ambient points away from the poles."""
    x = np.asarray(x, dtype=float)
    rho = np.hypot(x[..., 1], x[..., 2])
    if np.any(rho < margin):
        raise ChartPoleError("polar frame requested at a chart pole")
    c = x[..., 1] / rho
    s = x[..., 2] / rho
    e_phi = np.stack([np.zeros_like(c), -s, c], axis=-1)
    e_r = np.stack([-rho, x[..., 0] * c, x[..., 0] * s], axis=-1)
    return e_r, e_phi


def tangent_frame(x) -> tuple[np.ndarray, np.ndarray]:
    """Smooth-enough orthonormal frame (a, b) of T_x S^2 valid everywhere.

    Uses the polar frame (b = east) away from the axis and a fixed frame near it.
    """
    x = np.asarray(x, dtype=float)
    if np.hypot(x[1], x[2]) > 1e-6:
        e_r, e_phi = polar_frame(x)
        return e_r, e_phi
    ref = np.array([0.0, 0.0, 1.0])
    b = ref - (ref @ x) * x
    b /= np.linalg.norm(b)
    a = np.cross(b, x)
    return a, b


def covector_from_polar(r, phi, p_r, p_phi) -> tuple[np.ndarray, np.ndarray]:
    """Ambient point and ambient covector (tangent representative) from chart data."""
    x = polar_to_ambient(r, phi)
    e_r, e_phi = polar_frame(x)
    sr = np.sin(np.asarray(r, dtype=float))[..., None]
    p = np.asarray(p_r, dtype=float)[..., None] * e_r + (np.asarray(p_phi, dtype=float)[..., None] / sr) * e_phi
    return x, p


def covector_to_polar(x, p) -> tuple[np.ndarray, ...]:
    """(r, phi, p_r, p_phi) from ambient data; p_phi = e1 . (x cross p)."""
    x = np.asarray(x, dtype=float)
    p = np.asarray(p, dtype=float)
    r, phi = ambient_to_polar(x)
    e_r, _ = polar_frame(x)
    p_r = np.sum(p * e_r, axis=-1)
    p_phi = np.cross(x, p)[..., 0]
    return r, phi, p_r, p_phi


def project_tangent(x, v) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    return v - np.sum(x * v, axis=-1, keepdims=True) * x


# ------------------------------------------------------------------- S^3 and G

def random_s3(n: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    g = rng.standard_normal((n, 4))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    return g[:, 0] + 1j * g[:, 1], g[:, 2] + 1j * g[:, 3]


def quasi_random_s3(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic low-discrepancy points on S^3 (Halton, Gaussian map)."""
    from scipy.special import ndtri

    u = qmc.Halton(d=4, scramble=False).random(n + 1)[1:]
    g = ndtri(np.clip(u, 1e-12, 1 - 1e-12))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    return g[:, 0] + 1j * g[:, 1], g[:, 2] + 1j * g[:, 3]


def random_tangent_s3(w1, w2, rng: np.random.Generator):
    """Random tangent vectors at (w1, w2), stored ambiently in C^2."""
    w1 = np.asarray(w1, dtype=complex)
    w2 = np.asarray(w2, dtype=complex)
    g = rng.standard_normal((w1.size, 4))
    x1 = g[:, 0] + 1j * g[:, 1]
    x2 = g[:, 2] + 1j * g[:, 3]
    radial = np.real(np.conj(w1) * x1 + np.conj(w2) * x2)
    return x1 - radial * w1, x2 - radial * w2


def gmap(w1, w2) -> tuple[np.ndarray, np.ndarray]:
    """G(A) = (A^-1 j A, A^-1 k A) in closed form; returns ambient (x, v)."""
    w1 = np.asarray(w1, dtype=complex)
    w2 = np.asarray(w2, dtype=complex)
    prod = w1 * w2
    t = 2.0 * prod.imag
    z = np.conj(w1) ** 2 + w2 ** 2
    b = -2.0 * prod.real
    eta = 1j * (np.conj(w1) ** 2 - w2 ** 2)
    x = np.stack([t, z.real, z.imag], axis=-1)
    v = np.stack([b, eta.real, eta.imag], axis=-1)
    return x, v


def gmap_point(a: SU2Element) -> UnitTangentPair:
    x, v = gmap(a.w1, a.w2)
    return UnitTangentPair(x, v)


def gmap_by_conjugation(a: SU2Element) -> tuple[np.ndarray, np.ndarray]:
    """Independent evaluation of G through explicit 2x2 matrix products."""
    m = a.matrix()
    minv = np.conj(m.T)
    j = np.array([[0, 1], [-1, 0]], dtype=complex)
    k = np.array([[0, 1j], [1j, 0]], dtype=complex)

    def to_r3(y):
        return np.array([y[0, 0].imag, y[0, 1].real, y[0, 1].imag])

    return to_r3(minv @ j @ m), to_r3(minv @ k @ m)


def gmap_inverse(x, v) -> tuple[np.ndarray, np.ndarray]:
    """One of the two preimages of (x, v) in M0 under G."""
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    t = x[..., 0]
    z = x[..., 1] + 1j * x[..., 2]
    b = v[..., 0]
    eta = v[..., 1] + 1j * v[..., 2]
    prod = 0.5 * (-b + 1j * t)
    a1 = np.sqrt(0.5 * (z - 1j * eta))       # conj(w1)
    a2 = np.sqrt(0.5 * (z + 1j * eta))       # w2
    use1 = np.abs(a1) >= np.abs(a2)
    with np.errstate(divide="ignore", invalid="ignore"):
        w1_a = np.conj(a1)
        w2_a = prod / np.where(use1, w1_a, 1.0)
        w2_b = a2
        w1_b = prod / np.where(use1, 1.0, w2_b)
    w1 = np.where(use1, w1_a, w1_b)
    w2 = np.where(use1, w2_a, w2_b)
    return w1, w2


def lambda0(w1, w2, xi1, xi2) -> np.ndarray:
    """Standard contact form on S^3: Re <i A, xi>."""
    return np.real(np.conj(1j * np.asarray(w1)) * xi1 + np.conj(1j * np.asarray(w2)) * xi2)


def _s3_curve(w1, w2, xi1, xi2):
    def curve(s):
        a1 = w1 + s * xi1
        a2 = w2 + s * xi2
        nrm = np.sqrt(np.abs(a1) ** 2 + np.abs(a2) ** 2)
        return a1 / nrm, a2 / nrm
    return curve


def pushforward_gmap(w1, w2, xi1, xi2, h: float | None = None):
    """(x, v, dx, dv) with dx, dv the derivative of G along xi (Richardson FD)."""
    curve = _s3_curve(w1, w2, xi1, xi2)

    def xv(s):
        x, v = gmap(*curve(s))
        return np.concatenate([x, v], axis=-1)

    d = central_difference(xv, 0.0, h)
    x, v = gmap(w1, w2)
    return x, v, d[..., :3], d[..., 3:]


def pullback_omega1(w1, w2, xi1, xi2, h: float | None = None) -> np.ndarray:
    """(G^* omega1^0)(xi) = <v, dx(xi)>."""
    x, v, dx, _ = pushforward_gmap(w1, w2, xi1, xi2, h)
    return np.sum(v * dx, axis=-1)


def gmap_pullback_check(a: SU2Element, tangent, threshold: float = 1e-3) -> np.ndarray:
    """Ratios (G^* omega1^0)(xi) / lambda0(xi) for a batch of tangent vectors at A.

    ``tangent`` is an iterable of (xi1, xi2) pairs. Samples with
    |lambda0(xi)| < threshold * |xi| are rejected (DomainError).
    """
    out = []
    for xi1, xi2 in tangent:
        xi1 = complex(xi1)
        xi2 = complex(xi2)
        radial = np.real(np.conj(a.w1) * xi1 + np.conj(a.w2) * xi2)
        xi1 -= radial * a.w1
        xi2 -= radial * a.w2
        nrm = np.sqrt(abs(xi1) ** 2 + abs(xi2) ** 2)
        lam = float(lambda0(a.w1, a.w2, xi1, xi2))
        if abs(lam) < threshold * nrm:
            raise DomainError("tangent vector (nearly) in ker lambda0; resample")
        out.append(float(pullback_omega1(a.w1, a.w2, xi1, xi2)) / lam)
    return np.asarray(out)


def pullback_ratio_samples(n: int, seed: int = 0, threshold: float = 1e-3):
    """Ratios on ``n`` random non-kernel samples (rejection sampling)."""
    rng = np.random.default_rng(seed)
    ratios = []
    while len(ratios) < n:
        w1, w2 = random_s3(1, rng)
        xi1, xi2 = random_tangent_s3(w1, w2, rng)
        try:
            r = gmap_pullback_check(SU2Element(complex(w1[0]), complex(w2[0])),
                                    [(xi1[0], xi2[0])], threshold)
        except DomainError:
            continue
        ratios.append(float(r[0]))
    return np.asarray(ratios)


def antipodal_h_check(h, n: int = 2048, tol: float | None = None) -> bool:
    """True iff h(A) = h(-A) on a deterministic quasi-random sample of S^3."""
    tol = DEFAULTS.antipodal_tol if tol is None else tol
    w1, w2 = quasi_random_s3(n)
    return bool(np.max(np.abs(np.asarray(h(w1, w2)) - np.asarray(h(-w1, -w2)))) < tol)


def p_phi_of_gmap(w1, w2) -> np.ndarray:
    """p_phi of G(A), i.e. e1 . (x cross v)."""
    x, v = gmap(w1, w2)
    return np.cross(x, v)[..., 0]
