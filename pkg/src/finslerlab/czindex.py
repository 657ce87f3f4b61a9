"""Linearized flow, the winding-labelled spectrum of L_A and the index mu.

L_A v = -J v' - A(t) v on T-periodic v: R -> R^2, with J = (0 -1; 1 0) and
A = diag(1, K(t)). In the identification v = v1 + i v2, J is multiplication
by i, and the angle of an eigenfunction turns by 2 pi Delta(tau) over a
period. Labels follow Delta(tau_k) = floor(k/2), two eigenvalues per winding,
and mu = max{k : tau_k < 0}.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .config import DEFAULTS
from .errors import DomainError, IntegrationError, LabelingError, WindingError
from .numerics import (IntegratorConfig, PeriodicTridiagonal, PlanarPath, integrate_ode,
                       symmetric_eigen, unwrap_angle, winding_number)

J = np.array([[0.0, -1.0], [1.0, 0.0]])


# ----------------------------------------------------------- linearization

@dataclass
class LinearizedPath:
    """A(t) = diag(a11, K(t)) on [0, T] and its fundamental solution Phi."""

    T: float
    k_fun: Callable[[np.ndarray], np.ndarray]
    a11: float = 1.0
    orbit: object | None = None
    label: str = ""
    times: np.ndarray | None = field(default=None, repr=False)
    Phi: np.ndarray | None = field(default=None, repr=False)
    det_drift: float | None = None

    def __post_init__(self):
        if not self.T > 0:
            raise DomainError("period must be positive")

    @classmethod
    def constant(cls, K: float, T: float, **kw) -> "LinearizedPath":
        return cls(T, lambda t: np.full(np.shape(t), float(K)), **kw)

    @classmethod
    def from_orbit(cls, orbit) -> "LinearizedPath":
        return cls(orbit.length, lambda t: orbit.curvature_at(t).reshape(np.shape(t)),
                   orbit=orbit, label=orbit.label)

    def K(self, t) -> np.ndarray:
        return np.asarray(self.k_fun(np.asarray(t, dtype=float)), dtype=float)

    def A(self, t) -> np.ndarray:
        t = np.atleast_1d(np.asarray(t, dtype=float))
        out = np.zeros(t.shape + (2, 2))
        out[..., 0, 0] = self.a11
        out[..., 1, 1] = self.K(t)
        return out

    def k_range(self, n: int = 2048) -> tuple[float, float]:
        k = self.K(np.linspace(0.0, self.T, n, endpoint=False))
        return float(k.min()), float(k.max())

    def rescaled(self, delta: float) -> "LinearizedPath":
        """Metric scaled so that K >= delta becomes K >= 1: T -> sqrt(delta) T."""
        if not delta > 0:
            raise DomainError("delta must be positive")
        sd = np.sqrt(delta)
        kf = self.k_fun
        return LinearizedPath(sd * self.T, lambda s: kf(np.asarray(s) / sd) / delta,
                              self.a11, self.orbit, self.label)


def jacobi_flow(source, n_samples: int = 257, cfg: IntegratorConfig | None = None,
                det_tol: float | None = None) -> LinearizedPath:
    """Integrate Phi' = J A Phi, Phi(0) = I, along an orbit or a LinearizedPath."""
    path = source if isinstance(source, LinearizedPath) else LinearizedPath.from_orbit(source)
    cfg = cfg or IntegratorConfig(atol=1e-12, rtol=1e-12)
    det_tol = DEFAULTS.det_tol if det_tol is None else det_tol
    a11 = path.a11

    def f(t, y):
        u = y.reshape(2, 2)
        k = float(path.K(np.array([t]))[0])
        return np.stack([-k * u[1], a11 * u[0]]).ravel()

    times = np.linspace(0.0, path.T, n_samples)
    traj = integrate_ode(f, np.eye(2).ravel(), (0.0, path.T), cfg, t_eval=times)
    phi = traj(times).T.reshape(n_samples, 2, 2)
    det = np.linalg.det(phi)
    drift = float(np.abs(det - 1.0).max())
    if drift > det_tol:
        raise IntegrationError(f"symplecticity lost: |det Phi - 1| = {drift:.2e}")
    path.times, path.Phi, path.det_drift = times, phi, drift
    return path


def constant_k_monodromy(K: float, t) -> np.ndarray:
    """Closed-form Phi(t) for constant K > 0 and a11 = 1."""
    w = np.sqrt(K)
    c, s = np.cos(w * t), np.sin(w * t)
    return np.array([[c, -w * s], [s / w, c]])


def monodromy_defect(path: LinearizedPath, tau: float, cfg: IntegratorConfig | None = None) -> float:
    """2 - tr Phi_tau(T) for v' = J (A + tau) v; zero iff tau is a periodic eigenvalue."""
    cfg = cfg or IntegratorConfig(atol=1e-12, rtol=1e-12)
    a = path.a11 + tau

    def f(t, y):
        u = y.reshape(2, 2)
        k = float(path.K(np.array([t]))[0]) + tau
        return np.stack([-k * u[1], a * u[0]]).ravel()

    end = integrate_ode(f, np.eye(2).ravel(), (0.0, path.T), cfg).y_end.reshape(2, 2)
    return float(2.0 - np.trace(end))


# ---------------------------------------------------------------- spectrum

def discretize(path: LinearizedPath, N: int) -> PeriodicTridiagonal:
    """Staggered second-order discretization of L_A as a cyclic tridiagonal matrix.

    Unknowns are interleaved: u[2j] = v1(t_j), u[2j+1] = v2(t_{j+1/2}).
    """
    if N < 8:
        raise DomainError("grid too small")
    h = path.T / N
    d = np.empty(2 * N)
    d[0::2] = -path.a11
    d[1::2] = -path.K((np.arange(N) + 0.5) * h)
    e = np.empty(2 * N)
    e[0::2] = 1.0 / h
    e[1::2] = -1.0 / h
    return PeriodicTridiagonal(d, e)


def _node_samples(vec: np.ndarray) -> np.ndarray:
    v1 = vec[0::2]
    v2h = vec[1::2]
    v2 = 0.5 * (v2h + np.roll(v2h, 1))
    return np.column_stack([v1, v2])


def _winding(vec: np.ndarray, T: float) -> int:
    s = _node_samples(vec)
    closed = np.vstack([s, s[:1]])
    return int(winding_number(PlanarPath(closed, T)))


@dataclass(frozen=True)
class CZSpectrum:
    T: float
    N: int
    labels: np.ndarray        # k
    tau: np.ndarray
    winding: np.ndarray
    vectors: np.ndarray       # (m, N, 2) node samples
    error: np.ndarray         # Richardson estimate per eigenvalue
    threshold: float
    mu: int | None
    marginal: bool
    contractible: bool | None = None
    orbit_id: str = ""
    route: str = "structured"

    def tau_k(self, k: int) -> float:
        idx = np.nonzero(self.labels == k)[0]
        if idx.size == 0:
            raise KeyError(f"label {k} outside the computed window")
        return float(self.tau[idx[0]])

    @property
    def tau3(self) -> float:
        return self.tau_k(3)

    @property
    def marginal_tau3(self) -> bool:
        return abs(self.tau3) <= self.threshold

    def taui_ok(self) -> bool:
        return inequality_taui_check(self, self.T)

    def to_dict(self) -> dict:
        return {
            "orbit_id": self.orbit_id,
            "T": self.T,
            "contractible": self.contractible,
            "tau": [float(x) for x in self.tau],
            "winding": [int(w) for w in self.winding],
            "mu": self.mu if (self.contractible is None or self.contractible) else None,
            "taui_ok": self.taui_ok(),
            "marginal": self.marginal,
        }


def _raw_spectrum(path: LinearizedPath, N: int, w_lo: int, w_hi: int, route: str):
    op = discretize(path, N)
    kmin, kmax = path.k_range()
    lam_lo, lam_hi = min(path.a11, kmin), max(path.a11, kmax)
    step = 2 * np.pi / path.T
    pad = 0.25 * step
    lo = step * w_lo - lam_hi - pad
    hi = step * w_hi - lam_lo + pad
    if route == "structured":
        vals, vecs, _ = op.eigenpairs_in(lo, hi)
    elif route == "dense":
        w, v = symmetric_eigen(op.dense())
        sel = (w >= lo) & (w < hi)
        vals, vecs = w[sel], v[:, sel]
    else:
        raise DomainError(f"unknown eigen route {route!r}")
    wind = np.array([_winding(vecs[:, i], path.T) for i in range(vals.size)], dtype=int)
    keep = (wind >= w_lo) & (wind <= w_hi)
    vals, vecs, wind = vals[keep], vecs[:, keep], wind[keep]
    order = np.lexsort((vals, wind))
    return vals[order], vecs[:, order], wind[order]


def _label(vals, wind, w_lo, w_hi, tol):
    counts = {w: int(np.sum(wind == w)) for w in range(w_lo, w_hi + 1)}
    bad = {w: c for w, c in counts.items() if c != 2}
    if bad:
        raise LabelingError(f"two-per-winding rule violated {bad}; grid too coarse")
    if np.any(np.diff(vals) < -tol):
        raise LabelingError("winding labels not monotone in tau")
    return np.arange(2 * w_lo, 2 * w_hi + 2)


def cz_spectrum(path: LinearizedPath, k_max: int = 4, N: int = 1024, route: str = "structured",
                contractible: bool | None = None, error_estimate: bool = True) -> CZSpectrum:
    """Winding-labelled eigenvalues of L_A for labels k in [-2, 2*floor(k_max/2)+1]."""
    if N < 64:
        raise DomainError("N must be at least 64")
    if k_max < 4:
        raise DomainError("window must be at least 4")
    w_lo, w_hi = -1, k_max // 2
    vals, vecs, wind = _raw_spectrum(path, N, w_lo, w_hi, route)
    labels = _label(vals, wind, w_lo, w_hi, 1e-8 * max(1.0, np.abs(vals).max(initial=1)))
    if error_estimate:
        v2, _, w2 = _raw_spectrum(path, N // 2, w_lo, w_hi, route)
        _label(v2, w2, w_lo, w_hi, 1e-6)
        err = np.abs(vals - v2) / 3.0
    else:
        err = np.zeros_like(vals)
    thr = max(DEFAULTS.sign_factor * float(err.max(initial=0.0)), DEFAULTS.sign_floor)
    negative = labels[vals < -thr]
    if not np.any(vals > thr):
        raise LabelingError("window contains no positive eigenvalue; increase k_max")
    mu = int(negative.max()) if negative.size else None
    if mu is None:
        raise LabelingError("window contains no negative eigenvalue")
    marginal = bool(np.any(np.abs(vals) <= thr))
    node = np.stack([_node_samples(vecs[:, i]) for i in range(vals.size)])
    return CZSpectrum(path.T, N, labels, vals, wind, node, err, thr, mu, marginal,
                      contractible, path.label, route)


def inequality_taui_check(spectrum: CZSpectrum, T: float | None = None,
                          slack: float | None = None) -> bool:
    """(T / 2pi)(1 + tau_3) <= 1 + slack."""
    T = spectrum.T if T is None else T
    slack = DEFAULTS.taui_slack if slack is None else slack
    return bool(T / (2 * np.pi) * (1 + spectrum.tau3) <= 1 + slack)


def analytic_constant_spectrum(T: float, windings) -> np.ndarray:
    """tau = 2 pi m / T - 1 for A = I."""
    return 2 * np.pi * np.asarray(windings, dtype=float) / T - 1.0


def analytic_mu(T: float) -> int:
    """mu for A = I: largest k with 2 pi floor(k/2) / T < 1."""
    m = int(np.ceil(T / (2 * np.pi))) - 1
    return 2 * m + 1


def angular_velocity_check(path: LinearizedPath, spectrum: CZSpectrum, k: int) -> float:
    """max |phi'(t) - <(A + tau) w, w>| along the k-th eigenfunction (radians)."""
    i = int(np.nonzero(spectrum.labels == k)[0][0])
    s = spectrum.vectors[i]
    N = s.shape[0]
    h = path.T / N
    ang = unwrap_angle(np.vstack([s, s[:1]]))
    phidot = np.diff(ang) / h
    mid = 0.5 * (s + np.roll(s, -1, axis=0))
    w = mid / np.linalg.norm(mid, axis=1)[:, None]
    tmid = (np.arange(N) + 0.5) * h
    tau = spectrum.tau[i]
    rhs = (path.a11 + tau) * w[:, 0] ** 2 + (path.K(tmid) + tau) * w[:, 1] ** 2
    return float(np.abs(phidot - rhs).max())


# ---------------------------------------------------------------- certifier

@dataclass
class OrbitIndexRow:
    label: str
    period: float
    iterate: int
    length: float
    contractible: bool
    tau3: float
    mu: int | None
    taui_ok: bool | None
    marginal: bool

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class ConvexityReport:
    metric_id: dict
    delta: float
    ell: float
    verdict_by_theorem: bool
    verdict_by_inspection: bool
    rows: list[OrbitIndexRow]
    spectra: list[CZSpectrum] = field(default_factory=list, repr=False)

    @property
    def verdict(self) -> bool:
        return self.verdict_by_theorem

    def to_dict(self) -> dict:
        return {
            "metric": self.metric_id,
            "delta": self.delta,
            "ell": self.ell,
            "hypothesis_threshold": float(np.pi / np.sqrt(self.delta)),
            "verdict_by_theorem": self.verdict_by_theorem,
            "verdict_by_inspection": self.verdict_by_inspection,
            "orbits": [r.to_dict() for r in self.rows],
            "spectra": [s.to_dict() for s in self.spectra],
        }


def _window_for(path: LinearizedPath) -> int:
    kmax = max(path.k_range()[1], path.a11)
    w = int(np.ceil(path.T * kmax / (2 * np.pi))) + 1
    return max(4, 2 * w + 1)


def orbit_spectrum(orbit, delta: float = 1.0, N: int = 1024) -> tuple[CZSpectrum, LinearizedPath]:
    from .geodesics import contractibility

    path = jacobi_flow(orbit).rescaled(delta)
    c = contractibility(orbit)
    spec = cz_spectrum(path, _window_for(path), N, contractible=c)
    return spec, path


def certify_dynamical_convexity(metric, delta: float | None = None, length_cap: float = 10.0,
                                grid_density: int = 32, N: int = 1024,
                                loop_report=None, orbits=None,
                                margin: float = 1e-6) -> ConvexityReport:
    from .geodesics import contractibility, find_closed_geodesics, shortest_loop

    bounds = metric.curvature_bounds()
    if bounds is None:
        raise DomainError("no curvature guarantee for this metric family; refusing to certify")
    delta = bounds[0] if delta is None else float(delta)
    if not 0 < delta <= bounds[0] + 1e-12:
        raise DomainError("delta must lie in (0, K_min]")
    loops = loop_report if loop_report is not None else shortest_loop(metric, grid_density)
    ell = loops.ell
    # strict inequality, resolved only beyond the loop search accuracy
    by_theorem = bool(ell > np.pi / np.sqrt(delta) + margin)
    if orbits is None:
        orbits = find_closed_geodesics(metric, length_cap, max(grid_density, 32))
    rows, spectra = [], []
    for orb in orbits:
        m_first = None
        for m in (1, 2):
            if contractibility(orb.iterated(m)):
                m_first = m
                break
        if m_first is None:
            raise WindingError("orbit classification failed for iterates 1 and 2")
        ms = [m for m in range(1, int(length_cap / orb.period) + 1)]
        if m_first not in ms:
            ms.append(m_first)
        for m in ms:
            it = orb.iterated(m)
            spec, path = orbit_spectrum(it, delta, N)
            ok = None
            if path.k_range()[0] >= 1 - 1e-9:
                ok = inequality_taui_check(spec)
            spectra.append(spec)
            rows.append(OrbitIndexRow(orb.label, orb.period, m, it.length, bool(spec.contractible),
                                      spec.tau3, spec.mu if spec.contractible else None, ok,
                                      spec.marginal))
    contr = [r for r in rows if r.contractible]
    by_inspection = bool(all(r.mu is not None and r.mu >= 3 for r in contr))
    return ConvexityReport(metric.describe(), delta, ell, by_theorem, by_inspection, rows, spectra)


@dataclass
class PinchingReport:
    kmin: float
    kmax: float
    reversible: bool
    pinched: bool | None
    ell: float
    reversibility: float
    rademacher_bound: float | None
    rademacher_gap: float | None
    pinch_bound: float | None

    @property
    def passed(self) -> bool:
        ok = True
        if self.pinched:
            ok &= self.ell > self.pinch_bound - 1e-9 and self.pinch_bound > np.pi / np.sqrt(self.kmin)
        if self.rademacher_gap is not None:
            ok &= self.rademacher_gap >= -1e-6
        return bool(ok)

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d["passed"] = self.passed
        return d


def pinching_corollary_check(metric, k_range: tuple[float, float] | None = None,
                             loop_report=None, require_reversible: bool = False) -> PinchingReport:
    """Quarter-pinching branch (reversible metrics) and the bound l >= pi (1 + 1/r)."""
    from .finsler import reversibility
    from .geodesics import shortest_loop

    k_range = k_range or metric.curvature_bounds()
    if k_range is None:
        raise DomainError("curvature range unknown")
    kmin, kmax = map(float, k_range)
    if require_reversible and not metric.reversible:
        raise DomainError("the quarter-pinching branch needs a reversible metric")
    loops = loop_report if loop_report is not None else shortest_loop(metric)
    ell = loops.ell
    r = reversibility(metric)
    pinched = bool(kmin > kmax / 4) if metric.reversible else None
    pinch_bound = 2 * np.pi / np.sqrt(kmax) if pinched else None
    rb = gap = None
    if kmax <= 1 + 1e-12:
        rb = np.pi * (1 + 1 / r)
        gap = ell - rb
    return PinchingReport(kmin, kmax, metric.reversible, pinched, ell, r, rb, gap, pinch_bound)
