"""Acceptance checks 1-9 as plain functions.

Each check returns a ``CheckResult``; the test suite and the
``reproduce-paper`` subcommand both call these, so the tolerances live in
one place.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .contactlift import katok_ellipsoid_identity
from .cylinder import (ModelTube, SectorGerm, build_cylinder, charge_integral, cr_convergence,
                       energy_estimate, sector_matching, sigmoid_family)
from .czindex import (LinearizedPath, _window_for, analytic_constant_spectrum, analytic_mu,
                      certify_dynamical_convexity, cz_spectrum, jacobi_flow, orbit_spectrum,
                      pinching_corollary_check)
from .errors import FinslerLabError
from .finsler import katok, killing_perturbation, revolution, round_metric
from .geodesics import (cogeodesic_flow, equator_orbit, find_closed_geodesics, focusing_check,
                        shoot_state, shortest_loop)
from .geometry import gmap, pullback_ratio_samples, random_s3

GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


@dataclass
class CheckResult:
    id: int
    name: str
    passed: bool
    runtime: float = 0.0
    budget: float | None = None
    details: dict = field(default_factory=dict)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"criterion {self.id} [{status}] {self.name} ({self.runtime:.1f}s)"

    def to_dict(self) -> dict:
        return {"id": self.id, "name": self.name, "passed": bool(self.passed),
                "budget_s": self.budget, "details": self.details}


def _timed(cid: int, name: str, budget: float | None, fn: Callable[[], tuple[bool, dict]]):
    t0 = time.perf_counter()
    try:
        ok, details = fn()
    except FinslerLabError as exc:
        ok, details = False, {"error": type(exc).__name__, "message": str(exc)}
    dt = time.perf_counter() - t0
    if budget is not None and dt > budget:
        details["over_budget"] = True
        ok = False
    return CheckResult(cid, name, bool(ok), dt, budget, details)


# ---------------------------------------------------------------- checks

def _ellipsoid_sharpness():
    orb = equator_orbit(revolution(0.5), +1).iterated(2)
    spec, _ = orbit_spectrum(orb, 1.0, 1024)
    d = {"T": spec.T, "tau3": spec.tau3, "mu": spec.mu, "marginal": spec.marginal,
         "contractible": spec.contractible}
    ok = (abs(spec.T - 2 * np.pi) < 1e-8 and abs(spec.tau3) <= 5e-3 and spec.mu == 1
          and spec.marginal and bool(spec.contractible))
    return ok, d


def constant_spectrum_errors(T: float, Ns=(256, 512, 1024)) -> dict:
    """Max deviation from 2 pi m / T - 1 on each grid and the observed order."""
    path = LinearizedPath.constant(1.0, T)
    kmax = _window_for(path)
    errs, mus = [], []
    for N in Ns:
        spec = cz_spectrum(path, kmax, N)
        exact = analytic_constant_spectrum(T, spec.winding)
        errs.append(float(np.abs(spec.tau - exact).max()))
        mus.append(spec.mu)
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:])).tolist()
    return {"T": T, "N": list(Ns), "errors": errs, "orders": orders, "mu": mus,
            "mu_expected": analytic_mu(T)}


def _constant_oracle():
    rows = [constant_spectrum_errors(T) for T in (2 * np.pi, 4 * np.pi, 6 * np.pi)]
    ok = True
    for r, mu in zip(rows, (1, 3, 5)):
        ok &= r["errors"][-1] < 1e-3
        ok &= all(1.8 <= o <= 2.2 for o in r["orders"])
        ok &= r["mu"][-1] == mu
    return ok, {"rows": rows}


def _katok_identity():
    d = katok_ellipsoid_identity(0.3, n=1000)
    ok = (abs(d["p"] - 0.65) < 1e-12 and abs(d["q"] - 0.35) < 1e-12 and d["h_error"] < 1e-9
          and d["g_error"] < 1e-9 and d["backward_error"] < 1e-9)
    return ok, d


def _pullback():
    r = pullback_ratio_samples(100, seed=0)
    dev = float(np.abs(r - 2.0).max())
    return dev < 1e-5, {"max_abs_deviation_from_2": dev, "ratio_min": float(r.min()),
                        "ratio_max": float(r.max()), "n_samples": int(r.size)}


def _theorem_b():
    metric = katok(0.3)
    orbits = find_closed_geodesics(metric, 10.0)
    lengths = sorted(o.period for o in orbits)
    expected = [2 * np.pi / 1.3, 2 * np.pi / 0.7]
    loops = shortest_loop(metric)
    rep = certify_dynamical_convexity(metric, length_cap=10.0, loop_report=loops, orbits=orbits)
    contr = [r for r in rep.rows if r.contractible]
    ok = len(orbits) == 2
    ok &= ok and all(abs(a - b) < 1e-5 for a, b in zip(lengths, expected))
    ok &= abs(loops.ell - expected[0]) < 1e-5 and loops.ell > np.pi
    ok &= bool(contr) and all(r.mu is not None and r.mu >= 3 for r in contr)
    ok &= all(s.taui_ok() for s in rep.spectra)
    return ok, {"lengths": lengths, "expected": expected, "ell": loops.ell,
                "verdict_by_theorem": rep.verdict_by_theorem,
                "verdict_by_inspection": rep.verdict_by_inspection,
                "orbits": [r.to_dict() for r in rep.rows],
                "taui": [s.taui_ok() for s in rep.spectra]}


def _focusing():
    base = np.array([0.3, 0.8, 0.5])
    pos = focusing_check(katok(0.4), base / np.linalg.norm(base), 64)
    neg = focusing_check(revolution(0.5), (0.0, 0.0, 1.0), 64)
    ok = pos["spread"] < 1e-5 and neg["spread"] > 1e-3
    return ok, {"katok_spread": pos["spread"], "ellipsoid_spread": neg["spread"]}


def _cylinder():
    germ = SectorGerm.monomial(2, GOLDEN, 3)
    tube = ModelTube.polynomial([0.0, 1.0])
    match = sector_matching(germ)["matching"]
    conv = cr_convergence(germ, tube)
    sample = build_cylinder(germ, tube, 1e-3)
    ch = charge_integral(sample, radii=(1e-1, 1e-2, 1e-3))
    e20 = energy_estimate(sample, sigmoid_family(20))
    e40 = energy_estimate(sample, sigmoid_family(40))
    ok = match < 1e-12
    ok &= all(abs(o - 2.0) <= 0.2 for o in conv["axial_orders"])
    ok &= abs(ch["values"][-1] - 2.0) < 1e-2 and ch["monotone"]
    ok &= e20["finite"] and e40["finite"] and abs(e20["energy"] - e40["energy"]) <= 1e-6
    return ok, {"sector_matching": match, "cr_orders": conv["axial_orders"],
                "cr_residuals": conv["axial"], "charge": ch["values"],
                "charge_monotone": ch["monotone"], "energy_20": e20["energy"],
                "energy_40": e40["energy"]}


def _rademacher():
    k = pinching_corollary_check(katok(0.2))
    r = pinching_corollary_check(round_metric())
    ok = abs(k.reversibility - 1.5) < 1e-5 and 0 <= k.rademacher_gap + 1e-6 and k.rademacher_gap < 1e-4
    ok &= abs(r.ell - 2 * np.pi) < 1e-9 and abs(r.rademacher_bound - 2 * np.pi) < 1e-9
    return ok, {"katok_reversibility": k.reversibility, "katok_ell": k.ell,
                "katok_bound": k.rademacher_bound, "katok_gap": k.rademacher_gap,
                "round_ell": r.ell, "round_bound": r.rademacher_bound}


def property_metrics():
    """Metrics exercised by the property suite."""
    return [round_metric(), katok(0.3), katok(-0.45), revolution(0.5), revolution(0.8),
            killing_perturbation(round_metric(), 0.25, [0.0, 0.6, 0.8])]


def _properties():
    det, cons, label_ok = [], [], True
    # det Phi on orbit-based and constant paths
    paths = [LinearizedPath.constant(K, T) for K, T in ((1.0, 2 * np.pi), (4.0, 3.0), (0.5, 9.0))]
    for m in (round_metric(), katok(0.3), revolution(0.5)):
        for d in (+1, -1):
            paths.append(LinearizedPath.from_orbit(equator_orbit(m, d).iterated(2)))
    for p in paths:
        jacobi_flow(p)
        det.append(p.det_drift)
        try:
            spec = cz_spectrum(p, _window_for(p), 512)
            for w in np.unique(spec.winding):
                label_ok &= int(np.sum(spec.winding == w)) == 2
            label_ok &= bool(np.all(spec.winding == spec.labels // 2))
        except FinslerLabError:
            label_ok = False
    # F* and p_phi along flows from several directions
    rng = np.random.default_rng(7)
    for m in property_metrics():
        x = rng.normal(size=3)
        x /= np.linalg.norm(x)
        starts = np.array([shoot_state(m, x, th) for th in np.linspace(0, 2 * np.pi, 6, endpoint=False)])
        T = 12.0
        fl = cogeodesic_flow(m, starts, T)
        cons.append({"metric": m.describe(), "fstar": fl.fstar_drift, "pphi": fl.pphi_drift,
                     "bound": 1e-8 * T})
    w1, w2 = random_s3(10_000, np.random.default_rng(11))
    xa, va = gmap(w1, w2)
    xb, vb = gmap(-w1, -w2)
    gm = float(max(np.abs(xa - xb).max(), np.abs(va - vb).max()))
    ok = max(det) < 1e-7 and label_ok and gm < 1e-14
    ok &= all(c["fstar"] < c["bound"] and (c["pphi"] is None or c["pphi"] < c["bound"]) for c in cons)
    return ok, {"max_det_drift": max(det), "labeling_ok": label_ok, "flows": cons,
                "gmap_double_cover": gm}


CRITERIA = [
    (1, "ellipsoid sharpness: doubled equator tau3 = 0, mu = 1", 30.0, _ellipsoid_sharpness),
    (2, "constant-curvature spectral oracle", 60.0, _constant_oracle),
    (3, "katok / ellipsoid identity", None, _katok_identity),
    (4, "pullback identity ratio = 2", None, _pullback),
    (5, "katok(0.3) closed geodesics and dynamical convexity", 300.0, _theorem_b),
    (6, "focusing at arclength pi", None, _focusing),
    (7, "charge-2 cylinder diagnostics", 120.0, _cylinder),
    (8, "reversibility and the loop-length bound", None, _rademacher),
    (9, "property suites", None, _properties),
]


def run_criterion(cid: int) -> CheckResult:
    for i, name, budget, fn in CRITERIA:
        if i == cid:
            return _timed(i, name, budget, fn)
    raise KeyError(cid)


def run_all(ids=None) -> list[CheckResult]:
    ids = [c[0] for c in CRITERIA] if ids is None else list(ids)
    return [run_criterion(i) for i in ids]
