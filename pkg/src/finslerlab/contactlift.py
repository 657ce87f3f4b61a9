"""Starshaped hypersurfaces of T*S^2 versus functions h on S^3, and ellipsoids.

A co-metric F* is written F*(x, p) = g(x, p)|p| with g homogeneous of degree
zero. With f = 1/(g o l0) on the round unit bundle, the lift is h = 2 f o G,
i.e. h(A) = 2 / g(G(A)); conversely g(x, p) = 2 / h(A) for either preimage A
of (x, p/|p|). Ellipsoids E_{p,q} correspond to h = 1/(p|w1|^2 + q|w2|^2).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np

from .config import DEFAULTS, is_resonant
from .errors import DomainError
from .finsler import MetricModel, katok, metric_from_config
from .geometry import (SU2Element, antipodal_h_check, gmap, gmap_inverse, lambda0,
                       polar_frame, pushforward_gmap, quasi_random_s3, random_s3,
                       random_tangent_s3)

HFunction = Callable[[np.ndarray, np.ndarray], np.ndarray]
GFunction = Callable[[np.ndarray, np.ndarray], np.ndarray]


# ---------------------------------------------------------------- ellipsoids

@dataclass(frozen=True)
class EllipsoidParams:
    p: float
    q: float

    def __post_init__(self):
        if not (self.p > 0 and self.q > 0):
            raise DomainError("ellipsoid parameters must be positive")

    @property
    def rational(self) -> bool:
        return is_resonant(self.p / self.q)

    @classmethod
    def from_katok(cls, eps: float) -> "EllipsoidParams":
        return cls((1 + eps) / 2, (1 - eps) / 2)

    def h(self, w1, w2) -> np.ndarray:
        return 1.0 / (self.p * np.abs(w1) ** 2 + self.q * np.abs(w2) ** 2)

    def to_ellipsoid(self, w1, w2):
        """phi(A) = sqrt(h(A)) A, from S^3 onto E_{p,q}."""
        s = np.sqrt(self.h(w1, w2))
        return s * w1, s * w2

    def on_ellipsoid(self, w1, w2, tol: float = 1e-12) -> bool:
        return bool(np.all(np.abs(self.p * np.abs(w1) ** 2 + self.q * np.abs(w2) ** 2 - 1) < tol))

    def orbit_periods(self) -> tuple[float, float]:
        """Periods of the orbits w2 = 0 and w1 = 0."""
        return 2 * np.pi / self.p, 2 * np.pi / self.q

    def common_period(self) -> float | None:
        """Smallest t > 0 with every orbit closed, for rational p/q; None otherwise."""
        if not self.rational:
            return None
        fr = Fraction(self.p / self.q).limit_denominator(DEFAULTS.resonance_max_denominator)
        return 2 * np.pi * fr.numerator / self.p


def ellipsoid_reeb_flow(params: EllipsoidParams, w0, t):
    """(w1 e^{ipt}, w2 e^{iqt}); w0 = (w1, w2) must lie on E_{p,q}."""
    w1, w2 = (w0.w1, w0.w2) if isinstance(w0, SU2Element) else w0
    if not params.on_ellipsoid(w1, w2, 1e-9):
        raise DomainError("initial point is not on the ellipsoid")
    t = np.asarray(t, dtype=float)
    return w1 * np.exp(1j * params.p * t), w2 * np.exp(1j * params.q * t)


def reeb_return_gap(params: EllipsoidParams, w0, t_min: float = 1.0, t_max: float = 100.0,
                    dt: float = 1e-3) -> float:
    """Smallest |phi_t(w0) - w0| over the sampled grid t in [t_min, t_max]."""
    w1, w2 = w0
    ts = np.arange(t_min, t_max + dt / 2, dt)
    a1, a2 = ellipsoid_reeb_flow(params, (w1, w2), ts)
    return float(np.sqrt(np.abs(a1 - w1) ** 2 + np.abs(a2 - w2) ** 2).min())


# --------------------------------------------------------- h <-> g transfer

def g_from_metric(metric: MetricModel) -> GFunction:
    """g(x, p) = F*(x, p) / |p|."""
    def g(x, p):
        return metric.cometric(x, p) / np.linalg.norm(p, axis=-1)
    return g


def g_to_h(g: GFunction) -> HFunction:
    """h(A) = 2 f(G(A)) with f = 1 / (g o l0); l0 is the identity on tangent representatives."""
    def h(w1, w2):
        x, v = gmap(w1, w2)
        return 2.0 / g(x, v)
    return h


def h_to_g(h: HFunction, check: bool = True) -> GFunction:
    """Inverse of ``g_to_h``: g(x, p) = 2 / h(G^-1(x, p/|p|))."""
    if check:
        if not antipodal_h_check(h):
            raise DomainError("h is not invariant under A -> -A")
        w1, w2 = quasi_random_s3(512)
        if np.any(np.asarray(h(w1, w2)) <= 0):
            raise DomainError("h must be positive")

    def g(x, p):
        x = np.asarray(x, dtype=float)
        p = np.asarray(p, dtype=float)
        u = p / np.linalg.norm(p, axis=-1, keepdims=True)
        w1, w2 = gmap_inverse(x, u)
        return 2.0 / np.asarray(h(w1, w2))
    return g


def h_from_metric(metric: MetricModel) -> HFunction:
    return g_to_h(g_from_metric(metric))


def cometric_from_g(g: GFunction):
    def fstar(x, p):
        return g(x, p) * np.linalg.norm(p, axis=-1)
    return fstar


def _rp3_features(w1, w2) -> np.ndarray:
    # A -> A (x) A is injective on RP^3, so h(A) = h(-A) becomes a plain function
    a = np.stack([np.real(w1), np.imag(w1), np.real(w2), np.imag(w2)], axis=-1)
    iu = np.triu_indices(4)
    return (a[..., :, None] * a[..., None, :])[..., iu[0], iu[1]]


def h_from_table(samples) -> HFunction:
    """Radial-basis interpolant of tabulated rows (Re w1, Im w1, Re w2, Im w2, h)."""
    from scipy.interpolate import RBFInterpolator

    s = np.asarray(samples, dtype=float)
    if s.ndim != 2 or s.shape[1] != 5 or s.shape[0] < 16:
        raise DomainError("table h needs at least 16 rows of (Re w1, Im w1, Re w2, Im w2, h)")
    if np.any(s[:, 4] <= 0):
        raise DomainError("h must be positive")
    nrm = np.linalg.norm(s[:, :4], axis=1)
    feats = _rp3_features((s[:, 0] + 1j * s[:, 1]) / nrm, (s[:, 2] + 1j * s[:, 3]) / nrm)
    interp = RBFInterpolator(feats, s[:, 4], kernel="thin_plate_spline", degree=1)

    def h(w1, w2):
        w1 = np.asarray(w1, dtype=complex)
        f = _rp3_features(w1.ravel(), np.asarray(w2, dtype=complex).ravel())
        return interp(f).reshape(w1.shape)
    return h


def h_from_descriptor(desc: dict) -> HFunction:
    kind = desc.get("kind")
    if kind == "ellipsoid":
        return EllipsoidParams(float(desc["p"]), float(desc["q"])).h
    if kind == "from-metric":
        return h_from_metric(metric_from_config(desc["metric"]))
    if kind == "table":
        return h_from_table(desc["samples"])
    raise DomainError(f"unknown h descriptor kind {kind!r}")


@dataclass
class LiftBundle:
    """(h, g, f) for one starshaped hypersurface."""

    h: HFunction
    g: GFunction

    @classmethod
    def from_metric(cls, metric: MetricModel) -> "LiftBundle":
        g = g_from_metric(metric)
        return cls(g_to_h(g), g)

    @classmethod
    def from_h(cls, h: HFunction) -> "LiftBundle":
        return cls(h, h_to_g(h))

    def f(self, x, v):
        return 1.0 / self.g(x, v)

    def invariant_errors(self, n: int = 1000, seed: int = 0) -> dict:
        rng = np.random.default_rng(seed)
        w1, w2 = random_s3(n, rng)
        hv = np.asarray(self.h(w1, w2))
        x, v = gmap(w1, w2)
        g1 = self.g(x, v)
        homog = max(float(np.abs(self.g(x, s * v) - g1).max()) for s in (0.5, 2.0, 10.0))
        return {
            "h_min": float(hv.min()),
            "g_min": float(g1.min()),
            "antipodal": float(np.abs(np.asarray(self.h(-w1, -w2)) - hv).max()),
            "homogeneity": homog,
        }


# ------------------------------------------------------------- identities

def katok_ellipsoid_identity(eps: float, n: int = 1000, seed: int = 0) -> dict:
    """Both directions of the Katok / ellipsoid correspondence on random samples.

    forward: h lifted from katok(eps) against 1/(p|w1|^2 + q|w2|^2), and the
    lifted g against p + q + (p - q) p_phi on the round unit co-sphere bundle;
    backward: F* = g|p| rebuilt from the ellipsoid h against the polar formula.
    """
    from .finsler import katok_cometric
    from .geometry import covector_to_polar

    params = EllipsoidParams.from_katok(eps)
    metric = katok(eps)
    rng = np.random.default_rng(seed)
    w1, w2 = random_s3(n, rng)
    h_lift = h_from_metric(metric)
    err_h = float(np.abs(h_lift(w1, w2) - params.h(w1, w2)).max())
    # points of M*_0: p unit for the round metric
    x, v = gmap(*random_s3(n, rng))
    g_round_trip = h_to_g(h_lift)
    pphi = np.cross(x, v)[:, 0]
    err_g = float(np.abs(g_round_trip(x, v) - (params.p + params.q + (params.p - params.q) * pphi)).max())
    # backward: arbitrary covectors (not unit), polar formula as oracle
    x2, v2 = gmap(*random_s3(n, rng))
    scale = rng.uniform(0.3, 3.0, n)[:, None]
    p2 = scale * v2
    fstar = cometric_from_g(h_to_g(params.h))(x2, p2)
    r, phi, p_r, p_phi = covector_to_polar(x2, p2)
    err_back = float(np.abs(fstar - katok_cometric(r, phi, p_r, p_phi, params.p - params.q)).max())
    return {"p": params.p, "q": params.q, "h_error": err_h, "g_error": err_g,
            "backward_error": err_back}


def lift_conjugacy_check(metric: MetricModel | None = None, n_samples: int = 100, seed: int = 0,
                         h: HFunction | None = None, threshold: float = 1e-3) -> dict:
    """Both sides of G^* l0^* r^*(lambda|M*) = 2 (f o G) lambda0 on random (A, xi).

    Left side: the Liouville form at r(l0(G(A))) = (x, v/g) applied to dx(xi),
    with dx from Richardson finite differences. Right side: (2/g(x, v)) lambda0(xi).
    Returns the raw maximal relative discrepancy, the observed sign of the
    ratio, and the discrepancy after that sign is divided out.
    """
    if (metric is None) == (h is None):
        raise DomainError("pass exactly one of metric or h")
    g = g_from_metric(metric) if metric is not None else h_to_g(h)
    rng = np.random.default_rng(seed)
    lhs, rhs = [], []
    while len(lhs) < n_samples:
        w1, w2 = random_s3(1, rng)
        xi1, xi2 = random_tangent_s3(w1, w2, rng)
        nrm = np.sqrt(np.abs(xi1) ** 2 + np.abs(xi2) ** 2)
        lam = lambda0(w1, w2, xi1, xi2)
        if abs(lam[0]) < threshold * nrm[0]:
            continue  # degenerate sample, resampled
        x, v, dx, _ = pushforward_gmap(w1, w2, xi1, xi2)
        gv = g(x, v)
        lhs.append(float(np.sum(v / gv[:, None] * dx, axis=-1)[0]))
        rhs.append(float(2.0 / gv[0] * lam[0]))
    lhs, rhs = np.array(lhs), np.array(rhs)
    ratio = lhs / rhs
    sign = float(np.sign(np.median(ratio)))
    return {
        "raw_discrepancy": float(np.max(np.abs(lhs - rhs) / np.abs(rhs))),
        "sign": sign,
        "sign_corrected_discrepancy": float(np.max(np.abs(lhs - sign * rhs) / np.abs(rhs))),
        "n_samples": n_samples,
    }


def geodesic_via_ellipsoid(eps: float, x, p, t) -> tuple[np.ndarray, np.ndarray]:
    """katok(eps) co-geodesic flow at time t, computed through the ellipsoid Reeb flow.

    (x, p) on M* is pulled to the round bundle, lifted to S^3, moved by
    (w1 e^{-ipt}, w2 e^{-iqt}) and mapped back; the minus sign is the
    orientation found for G (see ``lift_conjugacy_check``).
    """
    params = EllipsoidParams.from_katok(eps)
    x = np.asarray(x, dtype=float)
    p = np.asarray(p, dtype=float)
    w1, w2 = gmap_inverse(x, p / np.linalg.norm(p, axis=-1, keepdims=True))
    t = np.asarray(t, dtype=float)
    x_t, v_t = gmap(w1 * np.exp(-1j * params.p * t), w2 * np.exp(-1j * params.q * t))
    g = 1.0 + eps * np.cross(x_t, v_t)[..., 0]
    return x_t, v_t / g[..., None]


# ----------------------------------------------------------- convexity

def _radial_curvature_sign(rho: np.ndarray) -> np.ndarray:
    """rho^2 + 2 rho'^2 - rho rho'' on a uniform periodic grid (spectral derivatives)."""
    n = rho.shape[-1]
    k = np.fft.rfftfreq(n, d=1.0 / n)
    fr = np.fft.rfft(rho, axis=-1)
    d1 = np.fft.irfft(1j * k * fr, n, axis=-1)
    d2 = np.fft.irfft(-(k ** 2) * fr, n, axis=-1)
    return rho ** 2 + 2 * d1 ** 2 - rho * d2


def starshaped_convexity_check(g: GFunction, points=None, n_fibre: int = 512,
                               n_points: int = 64) -> dict:
    """Starshapedness (g > 0) and fibrewise convexity of F*(x, .) = 1.

    The fibre curve at x is the polar graph rho(psi) = 1/g(x, u(psi)) in a
    tangent frame; it is convex iff rho^2 + 2 rho'^2 - rho rho'' > 0.
    """
    if points is None:
        w1, w2 = quasi_random_s3(n_points)
        points, _ = gmap(w1, w2)
    pts = np.asarray(points, dtype=float)
    psi = 2 * np.pi * np.arange(n_fibre) / n_fibre
    worst = np.inf
    gmin = np.inf
    for x in pts:
        x = x / np.linalg.norm(x)
        ea, eb = polar_frame(x) if abs(x[0]) < 1 - 1e-6 else _axis_frame(x)
        u = np.cos(psi)[:, None] * ea + np.sin(psi)[:, None] * eb
        gv = np.asarray(g(np.broadcast_to(x, u.shape), u), dtype=float)
        if not np.all(np.isfinite(gv)):
            raise DomainError("g evaluation failed on a fibre")
        gmin = min(gmin, float(gv.min()))
        if gv.min() <= 0:
            continue
        rho = 1.0 / gv
        worst = min(worst, float((_radial_curvature_sign(rho) / rho.max() ** 2).min()))
    return {"starshaped": bool(gmin > 0), "fibrewise_convex": bool(gmin > 0 and worst > 1e-9),
            "min_curvature_indicator": worst, "g_min": gmin}


def _axis_frame(x):
    from .geometry import tangent_frame
    return tangent_frame(x)


def dimple_g(depth: float = 0.9, lobes: int = 4) -> GFunction:
    """Test fixture g = 2/h with h = 1 + depth cos(lobes psi), psi the fibre angle in (e_r, e_phi)."""
    if not 0 <= depth < 1:
        raise DomainError("depth must lie in [0, 1) to keep h positive")

    def g(x, p):
        x = np.asarray(x, dtype=float)
        p = np.asarray(p, dtype=float)
        er, ephi = polar_frame(x)
        psi = np.arctan2(np.sum(p * ephi, -1), np.sum(p * er, -1))
        return 2.0 / (1.0 + depth * np.cos(lobes * psi))
    return g
