"""Finite-energy cylinders of charge n near an orbit with irrational return rotation.

Sector data: on Q_k = {2 pi k/n < arg z < 2 pi (k+1)/n}, with arg taken in
(0, 2 pi) (Log cut along the positive real axis),

    F_k(z) = alpha^k z^{-nc} f(z),   alpha = exp(2 pi i c),

so F_{k+1} = alpha F_k on every shared ray (and F_0 = alpha F_{n-1} across
the cut). The model tube carries lambda_hat = dt + Re(omega_hat) with
omega_hat = eta_hat(|w|^2) i w dw_bar = i dbar Phi(|w|^2). The cylinder is
u = t + i a with t = arg(z^n)/2pi and a = -log|z|^n / 2pi - Phi(|F|^2).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from .config import DEFAULTS, is_resonant
from .errors import DomainError
from .numerics import central_difference, quadrature

TWO_PI = 2 * np.pi


# ------------------------------------------------------------------- data

@dataclass(frozen=True)
class SectorGerm:
    """n, c and f(z) = sum_j coeffs[j] z^j with ord_0(f) > n."""

    n: int
    c: float
    coeffs: tuple
    disc_radius: float = 1.0

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise DomainError("charge n must be a positive integer")
        if not 0 < self.c < 1 or is_resonant(self.c):
            raise DomainError("rotation must be irrational")
        co = np.asarray(self.coeffs, dtype=complex)
        nz = np.nonzero(co)[0]
        if nz.size == 0 or nz[0] <= self.n:
            raise DomainError("germ must satisfy ord_0(f) > n")
        if not self.disc_radius > 0:
            raise DomainError("disc radius must be positive")
        object.__setattr__(self, "coeffs", tuple(complex(x) for x in co))

    @classmethod
    def monomial(cls, n: int, c: float, degree: int, disc_radius: float = 1.0) -> "SectorGerm":
        co = [0.0] * degree + [1.0]
        return cls(n, c, tuple(co), disc_radius)

    @property
    def order(self) -> int:
        return int(np.nonzero(np.asarray(self.coeffs))[0][0])

    @property
    def alpha(self) -> complex:
        return complex(np.exp(2j * np.pi * self.c))

    def f(self, z):
        return np.polynomial.polynomial.polyval(z, np.asarray(self.coeffs))

    def df(self, z):
        co = np.asarray(self.coeffs)
        return np.polynomial.polynomial.polyval(z, np.polynomial.polynomial.polyder(co))

    # sector-wise evaluation with explicit branch constants
    def sector_of(self, theta) -> np.ndarray:
        th = np.mod(theta, TWO_PI)
        return np.minimum((th * self.n // TWO_PI).astype(int), self.n - 1)

    def _power(self, r, theta):
        # z^{-nc} with arg z = theta in [0, 2 pi]
        return np.exp(-self.n * self.c * (np.log(r) + 1j * theta))

    def F(self, r, theta, k=None):
        """F_k at z = r e^{i theta}; theta is read as an argument inside the closure of Q_k."""
        r = np.asarray(r, dtype=float)
        theta = np.asarray(theta, dtype=float)
        k = self.sector_of(theta) if k is None else np.asarray(k)
        z = r * np.exp(1j * theta)
        return self.alpha ** k * self._power(r, theta) * self.f(z)

    def dF(self, r, theta, k=None):
        """Complex derivative F_k'(z)."""
        r = np.asarray(r, dtype=float)
        theta = np.asarray(theta, dtype=float)
        k = self.sector_of(theta) if k is None else np.asarray(k)
        z = r * np.exp(1j * theta)
        return self.alpha ** k * self._power(r, theta) * (self.df(z) - self.n * self.c * self.f(z) / z)


@dataclass(frozen=True)
class ModelTube:
    """Rotationally symmetric tube: eta_hat on [0, rho_max^2] and Phi(s) = int_0^s eta_hat."""

    eta_hat: Callable[[np.ndarray], np.ndarray]
    Phi: Callable[[np.ndarray], np.ndarray] | None = None
    rho_max: float = 1.5
    label: str = ""

    def __post_init__(self):
        e0 = float(np.asarray(self.eta_hat(np.array([0.0])))[0])
        if abs(e0) > 1e-14:
            raise DomainError("eta_hat(0) must vanish")
        if self.Phi is None:
            object.__setattr__(self, "Phi", _tabulate_primitive(self.eta_hat, self.rho_max ** 2))
        if abs(float(np.asarray(self.Phi(np.array([0.0])))[0])) > 1e-14:
            raise DomainError("Phi(0) must vanish")

    @classmethod
    def flat(cls) -> "ModelTube":
        return cls(lambda s: np.zeros_like(np.asarray(s, dtype=float)),
                   lambda s: np.zeros_like(np.asarray(s, dtype=float)), label="flat")

    @classmethod
    def polynomial(cls, coeffs: Sequence[float], rho_max: float = 1.5) -> "ModelTube":
        """eta_hat(s) = sum_j coeffs[j] s^j with coeffs[0] = 0; Phi is the exact primitive."""
        P = np.polynomial.Polynomial(coeffs)
        Q = P.integ()
        return cls(lambda s: P(np.asarray(s, dtype=float)), lambda s: Q(np.asarray(s, dtype=float)),
                   rho_max, label=f"poly{tuple(coeffs)}")

    def omega_hat(self, w):
        """dw_bar coefficient of omega_hat: eta_hat(|w|^2) i w."""
        w = np.asarray(w, dtype=complex)
        return self.eta_hat(np.abs(w) ** 2) * 1j * w

    def phi_monotone(self, n: int = 257) -> bool:
        s = np.linspace(0, self.rho_max ** 2, n)
        e = self.eta_hat(s)
        if np.all(e >= 0) or np.all(e <= 0):
            d = np.diff(self.Phi(s))
            return bool(np.all(d * np.sign(e.sum() or 1.0) >= -1e-14))
        return True


def _tabulate_primitive(eta_hat, s_max: float, n: int = 4097):
    """Hermite interpolant of int_0^s eta_hat from 8-point Gauss-Legendre panels."""
    s = np.linspace(0.0, s_max, n)
    xg, wg = np.polynomial.legendre.leggauss(8)
    a, b = s[:-1], s[1:]
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    nodes = mid[:, None] + half[:, None] * xg[None, :]
    panel = half * (np.asarray(eta_hat(nodes)) * wg).sum(axis=1)
    vals = np.concatenate([[0.0], np.cumsum(panel)])
    return CubicHermiteSpline(s, vals, np.asarray(eta_hat(s), dtype=float))


def gauge_correction(eta: Callable, zeta: Callable, rho_max: float = 1.5, n_check: int = 64,
                     seed: int = 0) -> tuple[ModelTube, dict]:
    """Split Re(omega) = eta(rho)(x dy - y dx) + zeta(rho) d rho into tube + exact part.

    Returns the tube (eta_hat(s) = eta(sqrt s)) and checks: f(rho) = int zeta,
    df has no angular component, d(lambda - df) = d(lambda), and
    omega_hat = i dbar Phi(|w|^2) by finite differences.
    """
    if abs(float(eta(0.0))) > 1e-14:
        raise DomainError("eta(0) must vanish")

    def eta_hat(s):
        return np.asarray(eta(np.sqrt(np.maximum(np.asarray(s, dtype=float), 0.0))), dtype=float)

    tube = ModelTube(eta_hat, None, rho_max, label="gauge-corrected")

    def f_gauge(rho):
        return quadrature(lambda r: float(zeta(r)), 0.0, float(rho), 1e-12)

    rng = np.random.default_rng(seed)
    pts = rng.uniform(0.1, 0.8 * rho_max, n_check) * np.exp(1j * rng.uniform(0, TWO_PI, n_check))

    def one_forms(w, with_df: bool):
        # (P, Q) with lambda = dt + P dx + Q dy
        x, y = w.real, w.imag
        rho = abs(w)
        P = -eta(rho) * y + zeta(rho) * x / rho
        Q = eta(rho) * x + zeta(rho) * y / rho
        if with_df:
            P -= zeta(rho) * x / rho
            Q -= zeta(rho) * y / rho
        return np.array([P, Q])

    h = DEFAULTS.fd_step
    exact_err = ang_err = omega_err = 0.0
    for w in pts:
        curls = []
        for corrected in (False, True):
            dQdx = central_difference(lambda e: one_forms(w + e, corrected)[1], 0.0, h)
            dPdy = central_difference(lambda e: one_forms(w + 1j * e, corrected)[0], 0.0, h)
            curls.append(dQdx - dPdy)
        exact_err = max(exact_err, abs(curls[0] - curls[1]))
        # angular derivative of f(|w|) along the rotation w -> e^{i s} w
        rot = central_difference(lambda s: f_gauge(abs(w * np.exp(1j * s))), 0.0, 1e-3)
        ang_err = max(ang_err, abs(rot))
        # omega_hat = i dbar Phi(|w|^2), dbar = (d/dx + i d/dy)/2
        dx = central_difference(lambda e: tube.Phi(abs(w + e) ** 2), 0.0, h)
        dy = central_difference(lambda e: tube.Phi(abs(w + 1j * e) ** 2), 0.0, h)
        omega_err = max(omega_err, abs(1j * 0.5 * (dx + 1j * dy) - tube.omega_hat(w)))
    checks = {
        "exactness_error": float(exact_err),
        "angular_component": float(ang_err),
        "omega_dbar_error": float(omega_err),
        "gauge_at_half": f_gauge(0.5),
    }
    return tube, checks


# --------------------------------------------------------------- sampling

@dataclass(frozen=True)
class CylinderSample:
    germ: SectorGerm
    tube: ModelTube
    disc_radius: float
    radii: np.ndarray          # descending, geometric
    thetas: np.ndarray         # 2 pi (j + 1/2)/M
    sector: np.ndarray         # (M,)
    F: np.ndarray              # (nr, M)
    t: np.ndarray
    a: np.ndarray
    a_perturbation: Callable | None = field(default=None, repr=False)

    @property
    def z(self) -> np.ndarray:
        return self.radii[:, None] * np.exp(1j * self.thetas[None, :])

    def csv_rows(self) -> np.ndarray:
        """Rows (Re z, Im z, sector k, Re F, Im F, t, a)."""
        z = self.z
        k = np.broadcast_to(self.sector[None, :], z.shape)
        return np.column_stack([z.real.ravel(), z.imag.ravel(), k.ravel(), self.F.real.ravel(),
                                self.F.imag.ravel(), self.t.ravel(), self.a.ravel()])


def _a_component(germ, tube, r, theta, pert=None):
    F = germ.F(r, theta)
    a = -germ.n * np.log(r) / TWO_PI - tube.Phi(np.abs(F) ** 2)
    if pert is not None:
        a = a + pert(r * np.exp(1j * theta))
    return a


def build_cylinder(germ: SectorGerm, tube: ModelTube, r_min: float = 1e-3,
                   ratio: float = 2 ** (-1 / 8), n_theta: int | None = None,
                   shrink: bool = True, a_perturbation: Callable | None = None) -> CylinderSample:
    """Sector-wise F, t and a on a log-polar grid of D minus a small disc."""
    if not 0 < r_min < germ.disc_radius:
        raise DomainError("need 0 < r_min < disc radius")
    if not 0 < ratio < 1:
        raise DomainError("radial ratio must lie in (0, 1)")
    n = germ.n
    M = n_theta or 64 * n
    if M % n:
        raise DomainError("number of angles must be a multiple of n")
    R = germ.disc_radius
    probe = np.linspace(0, TWO_PI, 8 * M, endpoint=False)
    while np.abs(germ.F(R, probe)).max() > tube.rho_max:
        if not shrink:
            raise DomainError("|F| exceeds the tube radius; shrink the disc")
        R *= 2 ** -0.5
        if R <= r_min:
            raise DomainError("disc shrunk below r_min while fitting the tube")
    nr = int(np.floor(np.log(r_min / R) / np.log(ratio))) + 1
    radii = R * ratio ** np.arange(nr)
    thetas = TWO_PI * (np.arange(M) + 0.5) / M
    rr, tt = np.meshgrid(radii, thetas, indexing="ij")
    F = germ.F(rr, tt)
    t = n * tt / TWO_PI
    a = _a_component(germ, tube, rr, tt, a_perturbation)
    return CylinderSample(germ, tube, R, radii, thetas, germ.sector_of(thetas), F, t, a,
                          a_perturbation)


# -------------------------------------------------------------- diagnostics

def sector_matching(germ: SectorGerm, radii=None) -> dict:
    """max |F_{k+1} - alpha F_k| on shared rays, |F| jump, and F_0 = alpha F_{n-1} across the cut."""
    radii = np.geomspace(1e-3, germ.disc_radius, 41) if radii is None else np.asarray(radii)
    n, al = germ.n, germ.alpha
    err = jump = 0.0
    for k in range(n - 1):
        th = np.full_like(radii, TWO_PI * (k + 1) / n)
        fk = germ.F(radii, th, k)
        fk1 = germ.F(radii, th, k + 1)
        err = max(err, float(np.abs(fk1 - al * fk).max() / max(1.0, np.abs(fk).max())))
        jump = max(jump, float(np.abs(np.abs(fk1) - np.abs(fk)).max()))
    last = germ.F(radii, np.full_like(radii, TWO_PI), n - 1)
    first = germ.F(radii, np.zeros_like(radii), 0)
    wrap = float(np.abs(first - al * last).max() / max(1.0, np.abs(first).max()))
    jump = max(jump, float(np.abs(np.abs(first) - np.abs(last)).max()))
    return {"matching": max(err, wrap), "modulus_jump": jump, "full_turn": wrap}


def _dbar(values: np.ndarray, radii: np.ndarray, thetas: np.ndarray, ds: float, dth: float):
    """Central-difference dbar = e^{i theta}/(2r) (d_s + i d_theta) at interior nodes."""
    d_s = (values[2:, :] - values[:-2, :]) / (2 * ds)              # radii descending: s decreases
    d_s = -d_s
    d_t = (values[:, 2:] - values[:, :-2]) / (2 * dth)
    core_s = d_s[:, 1:-1]
    core_t = d_t[1:-1, :]
    r = radii[1:-1, None]
    th = thetas[None, 1:-1]
    return np.exp(1j * th) / (2 * r) * (core_s + 1j * core_t)


def cr_residual(sample: CylinderSample, tube: ModelTube | None = None) -> dict:
    """Transverse |dbar F_k| and axial |dbar u + G|, G = i dbar Phi(|F|^2), at interior nodes.

    Nodes whose angular stencil crosses a sector ray are excluded.
    """
    tube = tube or sample.tube
    g = sample.germ
    ds = -np.log(sample.radii[1] / sample.radii[0])
    dth = sample.thetas[1] - sample.thetas[0]
    k = sample.sector
    ok = (k[:-2] == k[1:-1]) & (k[2:] == k[1:-1])   # stencil inside one sector
    u = sample.t + 1j * sample.a
    trans = np.abs(_dbar(sample.F, sample.radii, sample.thetas, ds, dth))[:, ok]
    dbar_u = _dbar(u, sample.radii, sample.thetas, ds, dth)
    rr, tt = np.meshgrid(sample.radii[1:-1], sample.thetas[1:-1], indexing="ij")
    Fi = g.F(rr, tt)
    G = 1j * tube.eta_hat(np.abs(Fi) ** 2) * Fi * np.conj(g.dF(rr, tt))
    axial = np.abs(dbar_u + G)[:, ok]
    axial_plus = np.abs(dbar_u - G)[:, ok]
    return {"transverse": float(trans.max()), "axial": float(axial.max()),
            "axial_against_plus_G": float(axial_plus.max()),
            "h_s": float(ds), "h_theta": float(dth)}


def cr_convergence(germ: SectorGerm, tube: ModelTube, r_min: float = 1e-2, levels: int = 3,
                   base_ratio: float = 2 ** (-1 / 16), base_m: int | None = None) -> dict:
    """Residuals on grids refined by 2 in both directions; observed orders log2(e_i / e_{i+1})."""
    base_m = base_m or 64 * germ.n
    res = []
    for lev in range(levels + 1):
        s = build_cylinder(germ, tube, r_min, base_ratio ** (1 / 2 ** lev), base_m * 2 ** lev)
        res.append(cr_residual(s))
    ax = np.array([r["axial"] for r in res])
    tr = np.array([r["transverse"] for r in res])
    return {"axial": ax.tolist(), "transverse": tr.tolist(),
            "axial_orders": np.log2(ax[:-1] / ax[1:]).tolist(),
            "transverse_orders": np.log2(tr[:-1] / tr[1:]).tolist()}


def _circle_form(germ: SectorGerm, tube: ModelTube, r: float, m: int):
    """theta nodes and the d theta coefficient of Psi^* lambda_hat on |z| = r."""
    th = TWO_PI * (np.arange(m) + 0.5) / m
    F = germ.F(r, th)
    dth_F = 1j * r * np.exp(1j * th) * germ.dF(r, th)
    coef = germ.n / TWO_PI + tube.eta_hat(np.abs(F) ** 2) * np.imag(np.conj(F) * dth_F)
    return th, F, coef


def charge_integral(sample: CylinderSample, tube: ModelTube | None = None,
                    radii: Sequence[float] = (1e-1, 1e-2, 1e-3), m: int | None = None) -> dict:
    """Circle integrals of Psi^* lambda_hat = dt + Re(F^* omega_hat).

    On |z| = r the integrand is n/2pi + eta_hat(|F|^2) Im(conj(F) d_theta F).
    """
    tube = tube or sample.tube
    g = sample.germ
    m = m or 64 * g.n * 16
    radii = [float(c) for c in radii]
    if any(b >= a for a, b in zip(radii, radii[1:])):
        raise DomainError("radii must be strictly descending")
    vals, flags = [], []
    for c in radii:
        _, _, coef = _circle_form(g, tube, c, m)
        vals.append(float(coef.sum() * TWO_PI / m))
        inside = sample.radii[-1] <= c <= sample.radii[0]
        on_ring = bool(np.any(np.abs(sample.radii / c - 1) < 1e-12))
        flags.append({"in_grid_range": bool(inside), "on_ring": on_ring})
    dev = np.abs(np.array(vals) - g.n)
    return {"radii": radii, "values": vals, "deviation": dev.tolist(),
            "monotone": bool(np.all(np.diff(dev) <= 1e-15)), "flags": flags}


def sigmoid_family(n_members: int = 20, lo: float = -2.0, hi: float = 2.0, width: float = 0.25):
    """Monotone cutoffs h(a) = 1/(1 + exp(-(a - c)/width)) with centers spaced on [lo, hi]."""
    centers = np.linspace(lo, hi, n_members)

    def make(c):
        return lambda a: 0.5 * (1 + np.tanh((np.asarray(a, dtype=float) - c) / (2 * width)))
    return [make(c) for c in centers]


def _check_cutoff(h, grid=np.linspace(-50, 50, 2001)):
    v = np.asarray(h(grid), dtype=float)
    if np.any(v < -1e-15) or np.any(v > 1 + 1e-15) or np.any(np.diff(v) < -1e-15):
        raise DomainError("cutoff must be nondecreasing with values in [0, 1]")


def energy_estimate(sample: CylinderSample, family, tube: ModelTube | None = None,
                    m: int | None = None) -> dict:
    """sup_h ( int_{|z|=R} h(a) Psi^* lambda_hat - n h(+inf) ) over a finite cutoff family."""
    tube = tube or sample.tube
    g = sample.germ
    m = m or 64 * g.n * 16
    R = sample.disc_radius
    th, F, coef = _circle_form(g, tube, R, m)
    a = -g.n * np.log(R) / TWO_PI - tube.Phi(np.abs(F) ** 2)
    boundary = float(coef.sum() * TWO_PI / m)
    contrib = []
    for h in family:
        _check_cutoff(h)
        h_inf = float(np.asarray(h(np.array([1e6])))[0])
        contrib.append(float((np.asarray(h(a)) * coef).sum() * TWO_PI / m - g.n * h_inf))
    sup = max(contrib) if contrib else 0.0
    return {"energy": sup, "boundary_integral": boundary, "contributions": contrib,
            "finite": bool(np.isfinite(sup) and sup <= boundary + g.n)}


def diagnostics(germ: SectorGerm, tube: ModelTube, r_min: float = 1e-3) -> dict:
    s = build_cylinder(germ, tube, r_min)
    ch = charge_integral(s, radii=[10.0 ** -k for k in range(1, 4) if 10.0 ** -k < s.disc_radius])
    return {
        "n": germ.n,
        "c": germ.c,
        "disc_radius": s.disc_radius,
        "sector_matching": sector_matching(germ)["matching"],
        "max_cr_residual": cr_residual(s),
        "charge_trend": ch,
        "energy": energy_estimate(s, sigmoid_family())["energy"],
    }
