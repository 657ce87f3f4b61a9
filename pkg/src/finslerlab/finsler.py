"""Metric families on S^2.

Every family here is a navigation (Randers) structure written in the sphere
chart: a Riemannian metric of revolution about the e1 axis, described by a
``Profile``, plus a Killing wind W(x) = omega x x. The co-metric is

    F*(x, p) = alpha*(x, p) + p(W(x)),

which covers the round metric (a = 1, omega = 0), the Katok family
(a = 1, omega = eps e1), Riemannian ellipsoids of revolution (omega = 0) and
Killing perturbations of any of them.

Points are unit 3-vectors; covectors are stored by their tangent
representative p, acting as w -> p . w. The Hamiltonian is extended to
R^3 x R^3 through L = x cross p and u = x1/|x|, which makes it invariant under
(x, p) -> (c x, p / c) and p -> p + s x, so the flow stays on T*S^2.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy import optimize

from .config import DEFAULTS, is_resonant
from .errors import ChartPoleError, ConvergenceError, DomainError
from .geometry import E1, polar_frame, polar_to_ambient, tangent_frame


def _cross(a, b):
    # np.cross is slow on small batches; the flow calls this in its inner loop
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    a0, a1, a2 = a[..., 0], a[..., 1], a[..., 2]
    b0, b1, b2 = b[..., 0], b[..., 1], b[..., 2]
    return np.stack([a1 * b2 - a2 * b1, a2 * b0 - a0 * b2, a0 * b1 - a1 * b0], axis=-1)


# ------------------------------------------------------------------ profiles

@dataclass(frozen=True)
class EllipsoidProfile:
    """Ellipsoid of revolution (rho/a)^2 + z^2 = 1 around the e1 axis.

    The chart point (cos r, sin r cos phi, sin r sin phi) corresponds to the
    surface point (cos r, a sin r cos phi, a sin r sin phi). Coefficients are
    functions of u = cos r:

    * E(u) = g_rr = 1 - (1 - a^2) u^2
    * cotangent twist c(u): F*^2 = |L|^2 / E + c L1^2, with c = (a^-2 - 1)/E
    * tangent twist c2: alpha^2 = E |v|^2 + c2 M1^2, with c2 = a^2 - 1
    * Gaussian curvature K = 1 / E^2
    """

    a: float = 1.0

    def __post_init__(self):
        if not self.a > 0:
            raise DomainError("ellipsoid semi-axis a must be positive")

    @property
    def is_round(self) -> bool:
        return self.a == 1.0

    def E(self, u):
        return 1.0 - (1.0 - self.a ** 2) * np.asarray(u) ** 2

    def dE(self, u):
        return -2.0 * (1.0 - self.a ** 2) * np.asarray(u)

    def cot_twist(self, u):
        return (self.a ** -2 - 1.0) / self.E(u)

    def dcot_twist(self, u):
        e = self.E(u)
        return -(self.a ** -2 - 1.0) * self.dE(u) / e ** 2

    def tan_twist(self, u):
        return np.full_like(np.asarray(u, dtype=float), self.a ** 2 - 1.0)

    def curvature(self, u):
        return 1.0 / self.E(u) ** 2

    def curvature_bounds(self) -> tuple[float, float]:
        k_pole = self.a ** -4
        return (min(1.0, k_pole), max(1.0, k_pole))

    def rho_max(self) -> float:
        return self.a

    def embed(self, y):
        y = np.asarray(y, dtype=float)
        return np.stack([y[..., 0], self.a * y[..., 1], self.a * y[..., 2]], axis=-1)

    def describe(self) -> dict:
        return {"kind": "ellipsoid", "a": self.a}


ROUND = EllipsoidProfile(1.0)


# ------------------------------------------------------------------- metrics

@dataclass(frozen=True)
class MetricModel:
    """Finsler metric on S^2 of navigation type (see module docstring).

    ``family`` is one of ``round``, ``katok``, ``revolution``, ``killing``.
    """

    family: str
    profile: EllipsoidProfile = ROUND
    omega: np.ndarray = field(default_factory=lambda: np.zeros(3))
    params: dict = field(default_factory=dict)
    base: Any = None

    def __post_init__(self):
        om = np.asarray(self.omega, dtype=float).reshape(3)
        object.__setattr__(self, "omega", om)
        if not self.profile.is_round and np.hypot(om[1], om[2]) > 0:
            raise DomainError("only rotations about the symmetry axis are Killing for this profile")
        if self.wind_bound() >= 1.0:
            raise DomainError("co-metric not positive: wind too strong for the base metric")

    # ---- descriptors
    @property
    def reversible(self) -> bool:
        return not np.any(self.omega)

    @property
    def axisymmetric(self) -> bool:
        return bool(np.hypot(self.omega[1], self.omega[2]) == 0.0)

    @property
    def symmetry(self) -> str:
        if self.profile.is_round and not np.any(self.omega):
            return "so3"
        return "so2" if self.axisymmetric else "none"

    @property
    def epsilon(self) -> float:
        return float(self.params.get("epsilon", 0.0))

    def wind_bound(self) -> float:
        """sup_x alpha(W(x)); the co-metric is positive iff this is < 1."""
        w = np.linalg.norm(self.omega)
        if w == 0:
            return 0.0
        if self.axisymmetric:
            return w * self.profile.rho_max()
        return w  # round profile: alpha(omega x x) <= |omega|

    def curvature_bounds(self) -> tuple[float, float] | None:
        """Analytic (K_min, K_max) or None if the family has no curvature provider."""
        if not np.any(self.omega):
            return self.profile.curvature_bounds()
        if self.profile.is_round:
            return (1.0, 1.0)
        return None

    def curvature(self, x) -> np.ndarray:
        """Curvature along geodesics at ambient points x."""
        x = np.asarray(x, dtype=float)
        if self.curvature_bounds() is None:
            raise DomainError(f"no curvature provider for family {self.family}")
        u = x[..., 0] / np.linalg.norm(x, axis=-1)
        if np.any(self.omega):
            return np.ones_like(u)
        return self.profile.curvature(u)

    def describe(self) -> dict:
        out = {"family": self.family, **{k: v for k, v in self.params.items()}}
        if self.family == "revolution":
            out["profile"] = self.profile.describe()
        return out

    def resonant(self) -> bool:
        return is_resonant(self.epsilon)

    # ---- pointwise evaluations
    def _pieces(self, x, p):
        x = np.asarray(x, dtype=float)
        p = np.asarray(p, dtype=float)
        L = _cross(x, p)
        nx = np.linalg.norm(x, axis=-1)
        u = x[..., 0] / nx
        E = self.profile.E(u)
        c = self.profile.cot_twist(u)
        Q = np.sum(L * L, axis=-1) / E + c * L[..., 0] ** 2
        return L, u, E, c, Q

    def alpha_star(self, x, p):
        return np.sqrt(self._pieces(x, p)[4])

    def cometric(self, x, p):
        """F*(x, p)."""
        L, _, _, _, Q = self._pieces(x, p)
        return np.sqrt(Q) + L @ self.omega

    def wind(self, x):
        return _cross(self.omega, np.asarray(x, dtype=float))

    def tensor_apply(self, x, v):
        """G v as an ambient vector, for tangent v at unit x."""
        x = np.asarray(x, dtype=float)
        v = np.asarray(v, dtype=float)
        u = x[..., 0]
        k = _cross(E1, x)
        m1 = np.sum(k * v, axis=-1)
        return self.profile.E(u)[..., None] * v + (self.profile.tan_twist(u) * m1)[..., None] * k

    def inner(self, x, v, w):
        return np.sum(self.tensor_apply(x, v) * np.asarray(w), axis=-1)

    def metric(self, x, v):
        """F(x, v) by the navigation formula."""
        W = self.wind(x)
        aw2 = self.inner(x, W, W)
        gvw = self.inner(x, v, W)
        av2 = self.inner(x, v, v)
        return (-gvw + np.sqrt(gvw ** 2 + (1.0 - aw2) * av2)) / (1.0 - aw2)

    def legendre(self, x, v):
        """l_F(x, v) = d_v(F^2 / 2), returned as an ambient tangent covector."""
        x = np.asarray(x, dtype=float)
        v = np.asarray(v, dtype=float)
        if np.any(np.linalg.norm(v, axis=-1) == 0):
            raise DomainError("Legendre transform undefined at v = 0")
        W = self.wind(x)
        aw2 = self.inner(x, W, W)
        gvw = self.inner(x, v, W)
        F = self.metric(x, v)
        denom = F * (1.0 - aw2) + gvw
        return F[..., None] * self.tensor_apply(x, v - F[..., None] * W) / denom[..., None]

    def cometric_gradient(self, x, p):
        """Derivative of F* in p (a tangent vector): a x x, see ``hamiltonian_field``."""
        a = self._dh_dl(x, p)[0]
        return _cross(a, np.asarray(x, dtype=float))

    def legendre_inverse_closed(self, x, p):
        """l_F^{-1}(x, p) = F*(x, p) grad_p F*(x, p)."""
        return self.cometric(x, p)[..., None] * self.cometric_gradient(x, p)

    def legendre_inverse(self, x, p, tol: float = 1e-13, max_iter: int = 50):
        """Solve l_F(x, v) = p for v by damped Newton in a tangent frame."""
        x = np.asarray(x, dtype=float)
        p = np.asarray(p, dtype=float)
        ea, eb = tangent_frame(x)
        basis = np.stack([ea, eb])

        def resid(c):
            return basis @ (self.legendre(x, c @ basis) - p)

        c = basis @ p
        if np.linalg.norm(c) == 0:
            raise DomainError("Legendre inverse undefined at p = 0")
        r = resid(c)
        for _ in range(max_iter):
            if np.linalg.norm(r) <= tol * max(1.0, np.linalg.norm(p)):
                return c @ basis
            h = 1e-7 * max(1.0, np.linalg.norm(c))
            jac = np.empty((2, 2))
            for k in range(2):
                dc = np.zeros(2)
                dc[k] = h
                jac[:, k] = (resid(c + dc) - resid(c - dc)) / (2 * h)
            try:
                step = np.linalg.solve(jac, -r)
            except np.linalg.LinAlgError as exc:
                raise ConvergenceError("singular fibre Hessian (non-convex fibre)") from exc
            lam = 1.0
            while lam > 1e-6:
                c_new = c + lam * step
                r_new = resid(c_new)
                if np.linalg.norm(r_new) < np.linalg.norm(r):
                    break
                lam *= 0.5
            else:
                raise ConvergenceError("Newton inversion stalled (non-convex fibre)")
            c, r = c_new, r_new
        if np.linalg.norm(r) <= 1e3 * tol * max(1.0, np.linalg.norm(p)):
            return c @ basis
        raise ConvergenceError("Newton inversion did not converge")

    # ---- Hamiltonian flow
    def _dh_dl(self, x, p):
        L, u, E, c, Q = self._pieces(x, p)
        sq = np.sqrt(Q)
        a = (L / E[..., None] + (c * L[..., 0])[..., None] * E1) / sq[..., None] + self.omega
        dE = self.profile.dE(u)
        dc = self.profile.dcot_twist(u)
        hu = (-np.sum(L * L, axis=-1) * dE / E ** 2 + L[..., 0] ** 2 * dc) / (2.0 * sq)
        return a, hu, u

    def hamiltonian_field(self, states: np.ndarray) -> np.ndarray:
        """Time derivative of states of shape (..., 6) = (x, p)."""
        x = states[..., :3]
        p = states[..., 3:]
        a, hu, u = self._dh_dl(x, p)
        nx = np.linalg.norm(x, axis=-1)
        du = (E1 - (u / nx)[..., None] * x) / nx[..., None]
        xdot = _cross(a, x)
        pdot = _cross(a, p) - hu[..., None] * du
        return np.concatenate([xdot, pdot], axis=-1)

    def ode_field(self):
        """Flattened batch field suitable for ``integrate_ode``."""
        def f(t, y):
            return self.hamiltonian_field(y.reshape(-1, 6)).ravel()
        return f

    def unit_covector(self, x, v):
        """Unit covector (F* = 1) whose geodesic moves in direction v at x."""
        v = np.asarray(v, dtype=float)
        vn = v / self.metric(x, v)[..., None]
        return self.legendre(x, vn)

    def p_phi(self, x, p):
        return _cross(np.asarray(x, dtype=float), np.asarray(p, dtype=float))[..., 0]

    def invariants(self, states: np.ndarray) -> np.ndarray:
        """Coordinates of (x, p) invariant under the metric's isometry group."""
        x = states[..., :3]
        p = states[..., 3:]
        if self.symmetry == "so3":
            return np.zeros(states.shape[:-1] + (0,))
        if self.symmetry == "so2":
            xp = x[..., 1:]
            pp = p[..., 1:]
            return np.stack([x[..., 0], p[..., 0], np.sum(xp * pp, -1),
                             xp[..., 0] * pp[..., 1] - xp[..., 1] * pp[..., 0],
                             np.sum(pp * pp, -1)], axis=-1)
        return states


# -------------------------------------------------------------- constructors

def round_metric() -> MetricModel:
    return MetricModel("round", ROUND, np.zeros(3), {})


def katok(epsilon: float) -> MetricModel:
    """Katok co-metric sqrt(p_r^2 + p_phi^2 / sin^2 r) + eps p_phi."""
    eps = float(epsilon)
    if not abs(eps) < 1:
        raise DomainError("Katok parameter must satisfy |eps| < 1")
    if abs(eps) > DEFAULTS.max_epsilon:
        raise DomainError(f"|eps| > {DEFAULTS.max_epsilon} refused: fibre convexity margin collapses")
    return MetricModel("katok", ROUND, eps * E1, {"epsilon": eps})


def revolution(a: float = 0.5) -> MetricModel:
    """Riemannian ellipsoid of revolution (x^2 + y^2)/a^2 + z^2 = 1."""
    return MetricModel("revolution", EllipsoidProfile(float(a)), np.zeros(3), {"a": float(a)})


def killing_perturbation(base: MetricModel, epsilon: float, axis) -> MetricModel:
    """G*_eps(x, p) = F*(x, p) + eps p(V(x)) with V(x) = axis x x.

    ``axis`` = e1 gives V = d/dphi. V = 0 or eps = 0 return ``base``.
    """
    axis = np.asarray(axis, dtype=float).reshape(3)
    eps = float(epsilon)
    if eps == 0.0 or not np.any(axis):
        return base
    if abs(eps) * np.linalg.norm(axis) > DEFAULTS.max_epsilon:
        raise DomainError(f"|eps| |V| > {DEFAULTS.max_epsilon} refused")
    omega = base.omega + eps * axis
    params = {"epsilon": eps, "axis": axis.tolist(), "base": base.describe()}
    return MetricModel("killing", base.profile, omega, params, base)


def katok_cometric(r, phi, p_r, p_phi, eps: float):
    """Polar-chart formula for the Katok co-metric."""
    r = np.asarray(r, dtype=float)
    if np.any((r <= 0) | (r >= np.pi)):
        raise ChartPoleError("Katok chart formula evaluated at a pole")
    if not abs(eps) < 1:
        raise DomainError("|eps| < 1 required")
    return np.sqrt(np.asarray(p_r) ** 2 + np.asarray(p_phi) ** 2 / np.sin(r) ** 2) + eps * np.asarray(p_phi)


def revolution_curvature(profile: EllipsoidProfile, point) -> float:
    """Gaussian curvature at a chart point (ambient unit vector)."""
    x = np.asarray(point, dtype=float)
    return float(profile.curvature(x[0] / np.linalg.norm(x)))


def metric_from_config(cfg: dict) -> MetricModel:
    """Build a metric from a config record {family, epsilon?, a?, axis?, base?}."""
    fam = cfg.get("family")
    if fam == "round":
        return round_metric()
    if fam == "katok":
        return katok(cfg.get("epsilon", 0.0))
    if fam == "revolution":
        return revolution(cfg.get("a", 0.5))
    if fam == "killing":
        base = metric_from_config(cfg.get("base", {"family": "round"}))
        return killing_perturbation(base, cfg.get("epsilon", 0.0), cfg.get("axis", [1.0, 0.0, 0.0]))
    raise DomainError(f"unknown metric family {fam!r}")


# ------------------------------------------------------------ reversibility

def _unit_sphere_pair(theta, u, phi):
    x = polar_to_ambient(np.arccos(np.clip(u, -1 + 1e-12, 1 - 1e-12)), phi)
    e_r, e_phi = polar_frame(x)
    theta = np.asarray(theta, dtype=float)[..., None]
    return x, np.cos(theta) * e_phi + np.sin(theta) * e_r


def reversibility(metric: MetricModel, n_base: int = 41, n_dir: int = 72) -> float:
    """r = max F(x, -v) over F(x, v) = 1: grid search plus local refinement."""
    if metric.reversible:
        return 1.0

    def ratio(theta, u, phi):
        x, v = _unit_sphere_pair(theta, u, phi)
        return metric.metric(x, -v) / metric.metric(x, v)

    us = np.linspace(-0.999, 0.999, n_base)
    phis = [0.0] if metric.axisymmetric else np.linspace(0, 2 * np.pi, n_base, endpoint=False)
    thetas = np.linspace(0, 2 * np.pi, n_dir, endpoint=False)
    best = (-np.inf, None)
    for phi in phis:
        T, U = np.meshgrid(thetas, us)
        vals = ratio(T.ravel(), U.ravel(), np.full(T.size, phi))
        k = int(np.argmax(vals))
        if vals[k] > best[0]:
            best = (vals[k], (T.ravel()[k], U.ravel()[k], phi))
    t0, u0, p0 = best[1]
    if metric.axisymmetric:
        res = optimize.minimize(lambda z: -ratio(z[0], np.clip(z[1], -0.999999, 0.999999), 0.0),
                                [t0, u0], method="Nelder-Mead",
                                options={"xatol": 1e-12, "fatol": 1e-15, "maxiter": 4000})
    else:
        res = optimize.minimize(lambda z: -ratio(z[0], np.clip(z[1], -0.999999, 0.999999), z[2]),
                                [t0, u0, p0], method="Nelder-Mead",
                                options={"xatol": 1e-12, "fatol": 1e-15, "maxiter": 8000})
    val = max(-res.fun, best[0])
    return float(val)
