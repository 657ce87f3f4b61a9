"""Co-geodesic flow, closed geodesics, geodesic loops, focusing, contractibility."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .config import DEFAULTS
from .errors import ConvergenceError, DomainError
from .finsler import MetricModel
from .geometry import covector_to_polar, gmap_inverse, polar_to_ambient, tangent_frame
from .numerics import FLOW_CONFIG, IntegratorConfig, Trajectory, integrate_ode

log = logging.getLogger(__name__)


# ------------------------------------------------------------------- flows

@dataclass
class FlowResult:
    trajectory: Trajectory
    fstar_drift: float
    pphi_drift: float | None

    def state(self, t) -> np.ndarray:
        return self.trajectory(t)


def _check_unit(metric: MetricModel, states: np.ndarray, tol: float = 1e-9):
    h = metric.cometric(states[..., :3], states[..., 3:])
    if np.abs(h - 1.0).max() > tol:
        raise DomainError("initial state is not on the unit co-sphere bundle (F* != 1)")


def cogeodesic_flow(metric: MetricModel, state0, T: float,
                    cfg: IntegratorConfig = FLOW_CONFIG, n_check: int = 200) -> FlowResult:
    """Hamiltonian flow of F* from one or several stacked states (shape (6,) or (m, 6))."""
    s0 = np.atleast_2d(np.asarray(state0, dtype=float))
    _check_unit(metric, s0)
    traj = integrate_ode(metric.ode_field(), s0.ravel(), (0.0, float(T)), cfg)
    ts = np.linspace(0.0, T, n_check)
    ys = traj(ts).T.reshape(n_check, -1, 6)
    h = metric.cometric(ys[..., :3], ys[..., 3:])
    fdrift = float(np.abs(h - 1.0).max())
    pdrift = None
    if metric.axisymmetric:
        pp = metric.p_phi(ys[..., :3], ys[..., 3:])
        pdrift = float(np.abs(pp - pp[0]).max())
    return FlowResult(traj, fdrift, pdrift)


def shoot_state(metric: MetricModel, x, theta) -> np.ndarray:
    """Unit co-sphere state at x moving in tangent direction angle theta.

    theta = 0 points along the first frame vector of ``tangent_frame`` rotated
    so that, away from the axis, 0 is east (d/dphi) and pi/2 is d/dr.
    """
    x = np.asarray(x, dtype=float)
    ea, eb = tangent_frame(x)
    v = np.cos(theta) * eb + np.sin(theta) * ea
    p = metric.unit_covector(x, v)
    return np.concatenate([x, p])


def trajectory_table(metric: MetricModel, traj: Trajectory, ts) -> np.ndarray:
    """Rows (t, r, phi, p_r, p_phi, Fstar_residual) for CSV dumps."""
    ts = np.asarray(ts, dtype=float)
    ys = traj(ts).T.reshape(ts.size, -1, 6)[:, 0, :]
    r, phi, p_r, p_phi = covector_to_polar(ys[:, :3], ys[:, 3:])
    res = metric.cometric(ys[:, :3], ys[:, 3:]) - 1.0
    return np.column_stack([ts, r, phi, p_r, p_phi, res])


# ------------------------------------------------------------------ orbits

@dataclass
class GeodesicOrbit:
    """Closed orbit of the co-geodesic flow with minimal period ``period``."""

    metric: MetricModel
    state0: np.ndarray
    period: float
    closure_residual: float
    iterate: int = 1
    trajectory: Trajectory | None = field(default=None, repr=False)
    label: str = ""

    def __post_init__(self):
        if not self.period > 0:
            raise DomainError("orbit period must be positive")
        if self.trajectory is None:
            self.trajectory = integrate_ode(self.metric.ode_field(), self.state0,
                                            (0.0, self.period), FLOW_CONFIG)

    @property
    def length(self) -> float:
        return self.iterate * self.period

    def iterated(self, m: int) -> "GeodesicOrbit":
        return GeodesicOrbit(self.metric, self.state0, self.period, self.closure_residual,
                             m, self.trajectory, self.label)

    def state(self, t) -> np.ndarray:
        """State at times t (any real), using periodicity; shape (n, 6)."""
        t = np.mod(np.atleast_1d(np.asarray(t, dtype=float)), self.period)
        return self.trajectory(t).T.reshape(t.size, 6)

    def samples(self, n: int = 512):
        ts = np.linspace(0.0, self.length, n + 1)
        return ts, self.state(ts)

    def curvature_profile(self, n: int = 512):
        ts, ys = self.samples(n)
        return ts, self.metric.curvature(ys[:, :3])

    def curvature_at(self, t) -> np.ndarray:
        return self.metric.curvature(self.state(t)[:, :3])

    def velocity(self, t) -> np.ndarray:
        ys = self.state(t)
        return self.metric.hamiltonian_field(ys)[:, :3]

    def p_phi(self) -> float:
        return float(self.metric.p_phi(self.state0[:3], self.state0[3:]))

    def fstar_drift(self, n: int = 400) -> float:
        _, ys = self.samples(n)
        return float(np.abs(self.metric.cometric(ys[:, :3], ys[:, 3:]) - 1).max())

    def contractible(self) -> bool:
        return contractibility(self)

    def summary(self) -> dict:
        return {
            "label": self.label,
            "period": self.period,
            "iterate": self.iterate,
            "length": self.length,
            "closure_residual": self.closure_residual,
            "p_phi": self.p_phi(),
        }


def equator_orbit(metric: MetricModel, direction: int = +1) -> GeodesicOrbit:
    """Equator traversed eastward (+1) or westward (-1), for axisymmetric metrics.

    The period is located by a root solve on the azimuth; closure is checked.
    """
    if not metric.axisymmetric:
        raise DomainError("equator orbits need an axisymmetric metric")
    x0 = np.array([0.0, 1.0, 0.0])
    s0 = shoot_state(metric, x0, 0.0 if direction > 0 else np.pi)
    # angular speed is constant on the equator: omega_eff = |x'|
    speed = np.linalg.norm(metric.hamiltonian_field(s0)[:3])
    T = 2 * np.pi / speed
    traj = integrate_ode(metric.ode_field(), s0, (0.0, T), FLOW_CONFIG)
    res = float(np.linalg.norm(traj.y_end - s0))
    if res > DEFAULTS.closure_tol:
        raise ConvergenceError(f"equator orbit does not close (residual {res:.2e})")
    name = "short-equator" if direction > 0 else "long-equator"
    if metric.reversible:
        name = "equator" if direction > 0 else "equator-reversed"
    elif metric.omega[0] < 0:
        name = "long-equator" if direction > 0 else "short-equator"
    return GeodesicOrbit(metric, s0, T, res, 1, traj, name)


# ------------------------------------------------------- closed-orbit search

def _batch_samples(metric: MetricModel, states: np.ndarray, T: float, dt: float):
    traj = integrate_ode(metric.ode_field(), states.ravel(), (0.0, T),
                         IntegratorConfig(atol=1e-9, rtol=1e-9))
    ts = np.arange(0.0, T + 1e-12, dt)
    ys = traj(ts).T.reshape(ts.size, states.shape[0], 6)
    return ts, ys


def _local_minima(d: np.ndarray, ts: np.ndarray, s_min: float, thresh: float):
    out = []
    for i in range(1, d.size - 1):
        if ts[i] < s_min:
            continue
        if d[i] <= d[i - 1] and d[i] <= d[i + 1] and d[i] < thresh:
            out.append(i)
    if d.size > 1 and d[-1] < d[-2] and d[-1] < thresh and ts[-1] >= s_min:
        out.append(d.size - 1)
    return out


def _flow_end(metric: MetricModel, s0: np.ndarray, s: float) -> np.ndarray:
    if s <= 0:
        return s0.copy()
    return integrate_ode(metric.ode_field(), s0, (0.0, s), FLOW_CONFIG).y_end


def _newton_shoot(metric: MetricModel, make_state, z0, target=None, pos_only: bool = False,
                  h: float = 1e-7, max_iter: int = 20):
    """Damped Gauss-Newton on z = (params..., s).

    Solves flow_s(make_state(params)) = target (or = start when target is None),
    on positions only if ``pos_only``. The base shot and its parameter
    perturbations are integrated as one batch so they share step control.
    Returns (z, residual norm).
    """
    sl = slice(0, 3) if pos_only else slice(0, 6)
    field = metric.ode_field()

    def evaluate(z):
        params, s = z[:-1], z[-1]
        states = [make_state(params)]
        for k in range(params.size):
            dp = params.copy()
            dp[k] += h
            states.append(make_state(dp))
        states = np.array(states)
        ends = integrate_ode(field, states.ravel(), (0.0, s), FLOW_CONFIG).y_end.reshape(-1, 6)
        tg = states if target is None else np.broadcast_to(np.asarray(target, float), states.shape)
        res = ends[:, sl] - tg[:, sl]
        jac = np.empty((res.shape[1], z.size))
        jac[:, :-1] = ((res[1:] - res[0]) / h).T
        jac[:, -1] = metric.hamiltonian_field(ends[0])[sl]
        return res[0], jac

    z = np.asarray(z0, dtype=float).copy()
    r, jac = evaluate(z)
    rn = float(np.linalg.norm(r))
    for _ in range(max_iter):
        if rn < 1e-12:
            break
        dz = np.linalg.lstsq(jac, -r, rcond=None)[0]
        lam, moved = 1.0, False
        while lam > 0.06:
            zt = z + lam * dz
            if zt[-1] > 0:
                rt, jt = evaluate(zt)
                rtn = float(np.linalg.norm(rt))
                if rtn < rn:
                    # stagnation at the integrator noise floor
                    moved = rtn < 0.5 * rn or rtn > 1e-9
                    z, r, jac, rn = zt, rt, jt, rtn
                    break
            lam *= 0.5
        if not moved:
            break
    return z, rn


def _orbit_distance(orbit: GeodesicOrbit, state: np.ndarray, n: int = 400) -> float:
    """Distance from ``state`` to the orbit, modulo the metric's isometries."""
    inv_c = orbit.metric.invariants(state)
    if inv_c.size == 0:
        return 0.0
    ts = np.linspace(0.0, orbit.period, n, endpoint=False)
    ys = orbit.state(ts)
    inv = orbit.metric.invariants(ys)
    dist = np.linalg.norm(inv - inv_c, axis=1)
    k = int(np.argmin(dist))
    # local refinement on the dense output
    lo, hi = ts[k] - orbit.period / n, ts[k] + orbit.period / n
    fine = np.linspace(lo, hi, 201)
    dist_f = np.linalg.norm(orbit.metric.invariants(orbit.state(fine)) - inv_c, axis=1)
    return float(min(dist.min(), dist_f.min()))


def _same_orbit(orbit: GeodesicOrbit, state: np.ndarray, T: float, tol: float) -> bool:
    k = T / orbit.period
    if k < 0.5 or abs(k - round(k)) > 1e-6 * max(1.0, k):
        return False
    if _orbit_distance(orbit, state) < tol:
        return True
    # reversible metrics: a geodesic and its reversal are the same curve
    if orbit.metric.reversible:
        rev = np.concatenate([state[:3], -state[3:]])
        return _orbit_distance(orbit, rev) < tol
    return False


def _minimal_period(metric: MetricModel, s0: np.ndarray, T: float, shortest: float) -> float:
    kmax = int(T / max(shortest, 1e-3)) + 1
    best = T
    for k in range(2, kmax + 1):
        Tk = T / k
        if Tk < shortest * 0.999:
            break
        if np.linalg.norm(_flow_end(metric, s0, Tk) - s0) < 1e-6:
            best = Tk
    return best


def find_closed_geodesics(metric: MetricModel, length_cap: float, grid_density: int = 64,
                          n_base: int | None = None, detect_tol: float = 0.2,
                          s_min: float = 0.3) -> list[GeodesicOrbit]:
    """Shoot from a section at the equator, refine near-returns, deduplicate.

    Returns orbits with minimal periods, sorted by period.
    """
    if not length_cap > 0:
        raise DomainError("length_cap must be positive")
    sym = metric.symmetry
    if n_base is None:
        n_base = 1 if sym in ("so3", "so2") else 8
    phis = np.linspace(0.0, 2 * np.pi, n_base, endpoint=False)
    thetas = 2 * np.pi * np.arange(grid_density) / grid_density
    bases = polar_to_ambient(np.full(n_base, np.pi / 2), phis)
    starts = np.array([shoot_state(metric, bases[b], th) for b in range(n_base) for th in thetas])
    meta = [(b, th) for b in range(n_base) for th in thetas]
    ts, ys = _batch_samples(metric, starts, length_cap, dt=0.02)
    cands = []
    for j in range(starts.shape[0]):
        d = np.linalg.norm(ys[:, j, :] - starts[j], axis=1)
        for i in _local_minima(d, ts, s_min, detect_tol):
            cands.append((ts[i], d[i], j))
    cands.sort()
    accepted: list[GeodesicOrbit] = []
    free_phi = sym == "none"
    for s_guess, _, j in cands:
        b, th = meta[j]
        phi0 = phis[b]
        # cheap pre-screen against accepted orbits
        if any(abs(s_guess / o.period - round(s_guess / o.period)) < 0.02 * s_guess / o.period
               and _orbit_distance(o, starts[j]) < 0.05 for o in accepted):
            continue

        def make_state(z):
            ph = z[1] if free_phi else phi0
            x = polar_to_ambient(np.pi / 2, ph)
            return shoot_state(metric, x, z[0])

        z0 = [th] + ([phi0] if free_phi else []) + [s_guess]
        try:
            z, rn = _newton_shoot(metric, make_state, z0)
        except Exception as exc:  # pragma: no cover - logged and dropped
            log.info("candidate dropped: %s", exc)
            continue
        if not (rn < DEFAULTS.closure_tol and s_min * 0.5 < z[-1] <= length_cap * 1.001):
            log.info("candidate at s=%.4f dropped (residual %.2e)", s_guess, rn)
            continue
        s0 = make_state(z)
        T = _minimal_period(metric, s0, float(z[-1]), s_min * 0.5)
        if any(_same_orbit(o, s0, T, DEFAULTS.orbit_dedup) for o in accepted):
            continue
        orbit = GeodesicOrbit(metric, s0, T, rn)
        # a previously accepted orbit may be an iterate of the new one
        accepted = [o for o in accepted if not _same_orbit(orbit, o.state0, o.period, DEFAULTS.orbit_dedup)]
        accepted.append(orbit)
    accepted.sort(key=lambda o: o.period)
    for k, o in enumerate(accepted):
        o.label = o.label or f"orbit-{k}"
    return accepted


# ------------------------------------------------------------------- loops

@dataclass
class LoopCandidate:
    length: float
    base_index: int
    base_point: tuple
    theta: float
    residual: float


@dataclass
class LoopSearchReport:
    ell: float
    candidates: list[LoopCandidate]
    resolution: dict
    k1_bound_ok: bool | None = None

    def summary(self) -> dict:
        return {
            "ell": self.ell,
            "resolution": self.resolution,
            "k1_bound_ok": self.k1_bound_ok,
            "candidates": [c.__dict__ for c in self.candidates[:20]],
        }


def shortest_loop(metric: MetricModel, grid_density: int = 32, n_colatitude: int = 12,
                  length_cap: float | None = None, detect_tol: float = 0.25,
                  s_min: float = 0.3, max_refine: int = 24) -> LoopSearchReport:
    """Shortest geodesic loop by brute-force shooting and (theta, s) refinement."""
    if length_cap is None:
        length_cap = 2 * np.pi / max(1e-3, 1 - metric.wind_bound()) + 0.5
    n_col = n_colatitude + (n_colatitude % 2)
    if metric.symmetry == "so3":
        rs, phis = np.array([np.pi / 2]), np.array([0.0])
    elif metric.symmetry == "so2":
        rs, phis = np.pi * np.arange(n_col + 1) / n_col, np.array([0.0])
    else:
        rs, phis = np.pi * np.arange(n_col + 1) / n_col, np.linspace(0, 2 * np.pi, 6, endpoint=False)
    bases = [polar_to_ambient(r, ph) for r in rs for ph in phis]
    thetas = 2 * np.pi * np.arange(grid_density) / grid_density
    starts = np.array([shoot_state(metric, x, th) for x in bases for th in thetas])
    meta = [(b, th) for b in range(len(bases)) for th in thetas]
    ts, ys = _batch_samples(metric, starts, length_cap, dt=0.02)
    cands = []
    for j in range(starts.shape[0]):
        d = np.linalg.norm(ys[:, j, :3] - starts[j, :3], axis=1)
        mins = _local_minima(d, ts, s_min, detect_tol)
        if mins:
            i = mins[0]
            cands.append((ts[i], meta[j][0], j))
    cands.sort()
    found: list[LoopCandidate] = []
    best = np.inf
    for s_guess, b, j in cands[:max_refine]:
        if s_guess > best + 0.3:
            break
        x0 = bases[b]

        try:
            z, rn = _newton_shoot(metric, lambda q: shoot_state(metric, x0, q[0]),
                                  [meta[j][1], s_guess], target=np.concatenate([x0, x0]),
                                  pos_only=True)
        except Exception as exc:  # pragma: no cover
            log.info("loop candidate dropped: %s", exc)
            continue
        if rn < DEFAULTS.closure_tol and z[1] > s_min * 0.5:
            found.append(LoopCandidate(float(z[1]), b, tuple(map(float, x0)),
                                       float(np.mod(z[0], 2 * np.pi)), rn))
            best = min(best, float(z[1]))
    found.sort(key=lambda c: (round(c.length, 9), c.base_index))
    ell = found[0].length if found else float("inf")
    kb = metric.curvature_bounds()
    k1 = None
    if kb is not None and kb == (1.0, 1.0):
        k1 = bool(ell <= 2 * np.pi + 1e-6)
    return LoopSearchReport(ell, found, {"n_base": len(bases), "n_directions": grid_density,
                                          "length_cap": length_cap, "max_refine": max_refine,
                                          "n_coarse_candidates": len(cands)}, k1)


# --------------------------------------------------------------- focusing

def focusing_check(metric: MetricModel, base_point, n_directions: int = 64,
                   arclength: float = np.pi) -> dict:
    """Endpoint spread of ``n_directions`` unit geodesics at the given arclength."""
    x0 = np.asarray(base_point, dtype=float)
    x0 = x0 / np.linalg.norm(x0)
    thetas = 2 * np.pi * np.arange(n_directions) / n_directions
    starts = np.array([shoot_state(metric, x0, th) for th in thetas])
    fl = cogeodesic_flow(metric, starts, arclength)
    ends = fl.trajectory.y_end.reshape(-1, 6)[:, :3]
    pts = metric.profile.embed(ends / np.linalg.norm(ends, axis=1)[:, None])
    diff = pts[:, None, :] - pts[None, :, :]
    spread = float(np.sqrt((diff ** 2).sum(-1)).max())
    kb = metric.curvature_bounds()
    return {
        "spread": spread,
        "passed": spread < 1e-5,
        "claims_k1": kb == (1.0, 1.0),
        "focal_point": pts.mean(axis=0).tolist(),
        "fstar_drift": fl.fstar_drift,
    }


def quasi_antipode(metric: MetricModel, x, n_directions: int = 8) -> np.ndarray:
    """A(x): common endpoint of unit geodesics from x at arclength pi (K = 1 metrics)."""
    res = focusing_check(metric, x, n_directions)
    return np.asarray(res["focal_point"])


# --------------------------------------------------------- contractibility

def contractibility(orbit: GeodesicOrbit, samples_per_period: int = 2000) -> bool:
    """Class of the m-fold orbit in pi_1(unit bundle) = Z/2, via its lift to S^3.

    The direction field (x, x'/|x'|) is lifted continuously through the double
    cover G: S^3 -> M0; the loop is contractible iff the lift closes up.
    """
    m = orbit.iterate
    n = samples_per_period * m
    ts = np.linspace(0.0, orbit.length, n + 1)
    ys = orbit.state(ts)
    x = ys[:, :3] / np.linalg.norm(ys[:, :3], axis=1)[:, None]
    vel = orbit.metric.hamiltonian_field(ys)[:, :3]
    vel = vel - np.sum(vel * x, axis=1)[:, None] * x
    u = vel / np.linalg.norm(vel, axis=1)[:, None]
    w1, w2 = gmap_inverse(x, u)
    A = np.stack([w1, w2], axis=1)
    prev = A[0]
    for i in range(1, n + 1):
        a = A[i]
        if np.real(np.vdot(prev, a)) < 0:
            a = -a
        if np.linalg.norm(a - prev) > 0.5:
            raise ConvergenceError("lift jumps; orbit too degenerate to classify at this sampling")
        prev = a
    return bool(np.real(np.vdot(A[0], prev)) > 0)


# ---------------------------------------------------------------- distance

def finsler_distance(metric: MetricModel, p, q, grid_density: int = 128,
                     s_max: float | None = None) -> float:
    """d(p, q) as the shortest geodesic from p reaching q (shooting + refinement)."""
    p = np.asarray(p, dtype=float) / np.linalg.norm(p)
    q = np.asarray(q, dtype=float) / np.linalg.norm(q)
    if np.linalg.norm(p - q) < 1e-14:
        return 0.0
    if s_max is None:
        s_max = 2 * np.pi / max(1e-3, 1 - metric.wind_bound())
    thetas = 2 * np.pi * np.arange(grid_density) / grid_density
    starts = np.array([shoot_state(metric, p, th) for th in thetas])
    ts, ys = _batch_samples(metric, starts, s_max, dt=0.01)
    d = np.linalg.norm(ys[:, :, :3] - q, axis=2)
    cands = []
    for j in range(grid_density):
        for i in _local_minima(d[:, j], ts, 0.0, 0.3):
            cands.append((ts[i], j))
    cands.sort()
    best = np.inf
    for s_guess, j in cands:
        if s_guess > best + 0.3:
            break

        z, rn = _newton_shoot(metric, lambda a: shoot_state(metric, p, a[0]),
                              [thetas[j], s_guess], target=np.concatenate([q, q]),
                              pos_only=True)
        if rn < 1e-9 and z[1] > 0:
            best = min(best, float(z[1]))
    if not np.isfinite(best):
        raise ConvergenceError("no geodesic from p to q found below s_max")
    return best


def antipodal_distance_check(eps: float, base_point=(0.0, 1.0, 0.0)) -> dict:
    """Katok equators versus d(p, A^2 p), with A located numerically by focusing.

    Route 1: 2*pi - l_plus from the refined short equator.
    Route 2: shortest geodesic from p to A(A(p)), A found as the focal point.
    """
    from .finsler import katok

    metric = katok(eps)
    short = equator_orbit(metric, +1 if eps >= 0 else -1)
    long = equator_orbit(metric, -1 if eps >= 0 else +1)
    p = np.asarray(base_point, dtype=float)
    a1 = quasi_antipode(metric, p)
    a2 = quasi_antipode(metric, a1)
    d_lengths = 2 * np.pi - short.period
    d_shoot = finsler_distance(metric, p, a2)
    return {
        "l_plus": short.period,
        "l_minus": long.period,
        "sum_identity_error": abs(short.period + long.period - 4 * np.pi / (1 - eps ** 2)),
        "d_from_lengths": d_lengths,
        "d_from_shooting": d_shoot,
        "agreement": abs(d_lengths - d_shoot),
    }
