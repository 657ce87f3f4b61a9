"""Command-line front end.

    finslerlab <subcommand> [--config run.json] [flags]

A run is described by one JSON config (validated against
``schema/run_config.schema.json``, unknown keys rejected); command-line flags
override config values. The full report goes to stdout as JSON and,
optionally, to ``--json-out``; tables go to ``--csv-out`` and plot data to
``--svg-out``.

Exit codes: 0 when every check of the run passes, 1 when a check fails or a
computation breaks down, 2 for configuration errors. Errors are reported as
one JSON object on stderr.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from .errors import ConfigError, DomainError, FinslerLabError

THREADS_ENV = "FINSLERLAB_THREADS"
GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0

# flag dest -> (config section, key); section None means top level
FLAG_MAP = {
    "seed": (None, "seed"),
    "threads": (None, "threads"),
    "json_out": ("output", "json"),
    "csv_out": ("output", "csv"),
    "svg_out": ("output", "svg"),
}
SECTION_FLAGS = {
    "geodesics": ["length_cap", "grid_density", "n_base", "detect_tol", "s_min", "table_samples"],
    "loops": ["grid_density", "n_colatitude", "length_cap", "detect_tol", "s_min", "max_refine"],
    "cz": ["orbit", "iterates", "grid", "k_max", "delta", "route", "length_cap"],
    "convexity": ["delta", "length_cap", "grid_density", "grid", "margin"],
    "lift": ["katok_epsilon", "n_samples"],
    "cylinder": ["n", "c", "degree", "coeffs", "tube_coeffs", "rho_max", "r_min", "ratio",
                 "radii", "n_cutoffs", "levels"],
    "reproduce": ["criteria"],
}
SECTION_OF = {"reproduce-paper": "reproduce"}


# ------------------------------------------------------------------ config

def load_schema() -> dict:
    text = resources.files("finslerlab").joinpath("schema/run_config.schema.json").read_text()
    return json.loads(text)


def validate_config(cfg: dict) -> None:
    import jsonschema

    try:
        jsonschema.validate(cfg, load_schema(), cls=jsonschema.Draft202012Validator)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"{where}: {exc.message}") from None


@dataclass
class RunConfig:
    subcommand: str
    metric: dict | None
    params: dict
    output: dict = field(default_factory=dict)
    seed: int = 0
    threads: int = 1

    @classmethod
    def from_dict(cls, subcommand: str, cfg: dict) -> "RunConfig":
        validate_config(cfg)
        section = SECTION_OF.get(subcommand, subcommand)
        threads = cfg.get("threads")
        if threads is None:
            env = os.environ.get(THREADS_ENV, "1")
            try:
                threads = int(env)
            except ValueError:
                raise ConfigError(f"{THREADS_ENV} must be a positive integer, got {env!r}") from None
            if threads < 1:
                raise ConfigError(f"{THREADS_ENV} must be a positive integer, got {env!r}")
        return cls(subcommand, cfg.get("metric"), dict(cfg.get(section, {})),
                   dict(cfg.get("output", {})), int(cfg.get("seed", 0)), int(threads))


def merge_flags(cfg: dict, args: argparse.Namespace, subcommand: str) -> dict:
    """Config overridden by every flag that was given on the command line."""
    out = json.loads(json.dumps(cfg))
    for dest, (sec, key) in FLAG_MAP.items():
        val = getattr(args, dest, None)
        if val is not None:
            (out if sec is None else out.setdefault(sec, {}))[key] = val
    section = SECTION_OF.get(subcommand, subcommand)
    for key in SECTION_FLAGS.get(section, []):
        val = getattr(args, key, None)
        if val is not None:
            out.setdefault(section, {})[key] = val
    if getattr(args, "metric", None) is not None:
        out["metric"] = {"family": args.metric}
    for key in ("epsilon", "a", "axis"):
        val = getattr(args, key, None)
        if val is not None:
            if "metric" not in out:
                raise ConfigError(f"--{key} needs --metric (or a config metric)")
            out["metric"][key] = val
    sweep = [getattr(args, k, None) for k in ("sweep_start", "sweep_stop", "sweep_step")]
    if any(v is not None for v in sweep):
        if any(v is None for v in sweep):
            raise ConfigError("--sweep-start, --sweep-stop and --sweep-step go together")
        out.setdefault("convexity", {})["sweep"] = dict(zip(("start", "stop", "step"), sweep))
    return out


def _metric(rc: RunConfig, default: dict | None = None):
    from .finsler import metric_from_config

    desc = rc.metric or default
    if desc is None:
        raise ConfigError("this subcommand needs a metric (--metric or config 'metric')")
    try:
        return metric_from_config(desc)
    except DomainError as exc:
        raise ConfigError(f"metric: {exc}") from None


def _pool_map(fn, items, threads: int) -> list:
    """Ordered map; worker processes when threads > 1."""
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=min(threads, len(items))) as ex:
        return list(ex.map(fn, items))


# ----------------------------------------------------------------- results

@dataclass
class Results:
    """Everything a run produces; ``emit_report`` serialises it."""

    subcommand: str
    config: dict
    checks: dict
    data: dict
    table_columns: list = field(default_factory=list)
    table_rows: list = field(default_factory=list)
    plot: dict | None = None

    @property
    def passed(self) -> bool:
        return all(bool(v) for v in self.checks.values())

    def to_dict(self) -> dict:
        return {"subcommand": self.subcommand, "config": self.config, "passed": self.passed,
                "checks": self.checks, "data": self.data}


def _plain(obj):
    """Recursively convert numpy scalars/arrays to JSON-native values."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if np.isfinite(v) else str(v)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def dumps_json(obj) -> str:
    return json.dumps(_plain(obj), sort_keys=True, indent=2) + "\n"


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def table_csv(columns, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_cell(v) for v in r])
    return buf.getvalue()


def plot_svg(plot: dict | None, width: int = 640, height: int = 400) -> str:
    """Line plot of ``plot['series']`` as plain SVG; the data also sits in a <desc> element."""
    plot = plot or {"title": "", "xlabel": "", "ylabel": "", "series": []}
    pad = 50
    xs = [x for s in plot["series"] for x in s["x"]]
    ys = [y for s in plot["series"] for y in s["y"]]
    if xs:
        x0, x1 = min(xs), max(xs)
        y0, y1 = min(ys), max(ys)
    else:
        x0 = y0 = 0.0
        x1 = y1 = 1.0
    x1 = x1 if x1 > x0 else x0 + 1.0
    y1 = y1 if y1 > y0 else y0 + 1.0

    def sx(x):
        return pad + (x - x0) / (x1 - x0) * (width - 2 * pad)

    def sy(y):
        return height - pad - (y - y0) / (y1 - y0) * (height - 2 * pad)

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}">',
           f"<title>{plot['title']}</title>",
           f"<desc>{json.dumps(_plain(plot), sort_keys=True)}</desc>",
           f'<rect x="{pad}" y="{pad}" width="{width - 2 * pad}" height="{height - 2 * pad}" '
           'fill="none" stroke="black"/>',
           f'<text x="{width / 2:g}" y="{height - 10}" text-anchor="middle">{plot["xlabel"]}</text>',
           f'<text x="12" y="{height / 2:g}" transform="rotate(-90 12 {height / 2:g})" '
           f'text-anchor="middle">{plot["ylabel"]}</text>',
           f'<text x="{pad}" y="{height - pad + 15}">{x0:.6g}</text>',
           f'<text x="{width - pad}" y="{height - pad + 15}" text-anchor="end">{x1:.6g}</text>',
           f'<text x="{pad - 4}" y="{height - pad}" text-anchor="end">{y0:.6g}</text>',
           f'<text x="{pad - 4}" y="{pad + 10}" text-anchor="end">{y1:.6g}</text>']
    for s in plot["series"]:
        pts = " ".join(f"{sx(x):.3f},{sy(y):.3f}" for x, y in zip(s["x"], s["y"]))
        out.append(f'<polyline fill="none" stroke="black" points="{pts}">'
                   f"<title>{s.get('label', '')}</title></polyline>")
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_report(results: Results, output: dict | None = None) -> dict:
    """Write the JSON report, CSV table and SVG plot data; returns {kind: path}.

    Output is a pure function of ``results``: identical runs give identical bytes.
    """
    output = output or {}
    written = {}
    payloads = {
        "json": lambda: dumps_json(results.to_dict()),
        "csv": lambda: table_csv(results.table_columns, results.table_rows),
        "svg": lambda: plot_svg(results.plot),
    }
    for kind, make in payloads.items():
        path = output.get(kind)
        if not path:
            continue
        try:
            with open(path, "w", encoding="utf-8", newline="") as fh:
                fh.write(make())
        except OSError as exc:
            raise ConfigError(f"cannot write {kind} output {path!r}: {exc.strerror}") from None
        written[kind] = path
    return written


# ------------------------------------------------------------- subcommands

def run_geodesics(rc: RunConfig) -> Results:
    from .geodesics import find_closed_geodesics, trajectory_table

    metric = _metric(rc)
    p = rc.params
    cap = float(p.get("length_cap", 10.0))
    orbits = find_closed_geodesics(metric, cap, p.get("grid_density", 64), p.get("n_base"),
                                   p.get("detect_tol", 0.2), p.get("s_min", 0.3))
    rows, info = [], []
    for o in orbits:
        drift = o.fstar_drift()
        c1 = o.contractible()
        rows.append([o.label, o.period, o.closure_residual, o.p_phi(), drift, c1])
        info.append({**o.summary(), "fstar_drift": drift, "contractible": c1})
    checks = {
        "closure": all(o.closure_residual < 1e-7 for o in orbits),
        "fstar_conservation": all(r["fstar_drift"] < 1e-8 * r["period"] for r in info),
    }
    plot = None
    data = {"metric": metric.describe(), "length_cap": cap, "orbits": info}
    if orbits:
        n = int(p.get("table_samples", 201))
        ts = np.linspace(0.0, orbits[0].period, n)
        tab = trajectory_table(metric, orbits[0].trajectory, ts)
        data["first_orbit_table"] = {"columns": ["t", "r", "phi", "p_r", "p_phi", "Fstar_residual"],
                                     "rows": tab}
        plot = {"title": f"colatitude along {orbits[0].label}", "xlabel": "t", "ylabel": "r",
                "series": [{"label": orbits[0].label, "x": tab[:, 0], "y": tab[:, 1]}]}
    return Results("geodesics", {}, checks, data,
                   ["label", "period", "closure_residual", "p_phi", "fstar_drift", "contractible"],
                   rows, plot)


def run_loops(rc: RunConfig) -> Results:
    from .geodesics import shortest_loop

    metric = _metric(rc)
    p = rc.params
    rep = shortest_loop(metric, p.get("grid_density", 32), p.get("n_colatitude", 12),
                        p.get("length_cap"), p.get("detect_tol", 0.25), p.get("s_min", 0.3),
                        p.get("max_refine", 24))
    checks = {"loop_found": bool(np.isfinite(rep.ell))}
    if rep.k1_bound_ok is not None:
        checks["k1_loop_bound"] = rep.k1_bound_ok
    rows = [[c.length, c.base_index, *c.base_point, c.theta, c.residual] for c in rep.candidates]
    return Results("loops", {}, checks, {"metric": metric.describe(), **rep.summary()},
                   ["length", "base_index", "x0", "x1", "x2", "theta", "residual"], rows, None)


def _select_orbit(metric, name: str, cap: float):
    from .geodesics import equator_orbit, find_closed_geodesics

    if name.startswith("orbit-"):
        idx = int(name.split("-")[1])
        orbits = find_closed_geodesics(metric, cap)
        if idx >= len(orbits):
            raise ConfigError(f"only {len(orbits)} closed orbits below length {cap}")
        return orbits[idx]
    if not metric.axisymmetric:
        raise ConfigError("equator orbits need an axisymmetric metric; use orbit-<i>")
    for d in (+1, -1):
        o = equator_orbit(metric, d)
        if o.label == name:
            return o
    alias = {"equator": "short-equator", "equator-reversed": "long-equator",
             "short-equator": "equator", "long-equator": "equator-reversed"}
    for d in (+1, -1):
        o = equator_orbit(metric, d)
        if o.label == alias[name]:
            return o
    raise ConfigError(f"orbit {name!r} not available for this metric")


def run_cz(rc: RunConfig) -> Results:
    from .czindex import _window_for, cz_spectrum, inequality_taui_check, jacobi_flow
    from .geodesics import contractibility

    metric = _metric(rc)
    p = rc.params
    orbit = _select_orbit(metric, p.get("orbit", "short-equator"), float(p.get("length_cap", 10.0)))
    it = orbit.iterated(int(p.get("iterates", 1)))
    base = jacobi_flow(it)
    path = base.rescaled(float(p.get("delta", 1.0)))
    path.label = f"{orbit.label}^{it.iterate}"
    contr = contractibility(it)
    kmax = int(p.get("k_max", _window_for(path)))
    spec = cz_spectrum(path, kmax, int(p.get("grid", 1024)), p.get("route", "structured"),
                       contractible=contr)
    checks = {"symplectic": base.det_drift < 1e-7}
    if path.k_range()[0] >= 1 - 1e-9:
        checks["taui"] = inequality_taui_check(spec)
    d = spec.to_dict()
    d.update({"label": path.label, "N": spec.N, "iterates": it.iterate, "length": it.length,
              "labels": spec.labels, "error": spec.error, "threshold": spec.threshold,
              "tau3": spec.tau3, "marginal_tau3": spec.marginal_tau3,
              "metric": metric.describe(), "k_range": path.k_range()})
    rows = [[int(k), int(w), t, e] for k, w, t, e in zip(spec.labels, spec.winding, spec.tau, spec.error)]
    plot = {"title": f"spectrum of {path.label}", "xlabel": "label k", "ylabel": "tau_k",
            "series": [{"label": "tau", "x": spec.labels.astype(float), "y": spec.tau}]}
    return Results("cz", {}, checks, d, ["k", "winding", "tau", "error"], rows, plot)


def _sweep_row(args) -> list:
    from .czindex import orbit_spectrum
    from .finsler import katok
    from .geodesics import equator_orbit, shortest_loop

    eps, grid_density, N, margin = args
    metric = katok(eps)
    ell = shortest_loop(metric, grid_density).ell
    spec, _ = orbit_spectrum(equator_orbit(metric, +1).iterated(2), 1.0, N)
    verdict = bool(ell > np.pi + margin)
    return [eps, ell, spec.tau3, spec.mu, verdict]


def run_convexity(rc: RunConfig) -> Results:
    from .czindex import certify_dynamical_convexity

    p = rc.params
    grid_density = int(p.get("grid_density", 32))
    N = int(p.get("grid", 1024))
    margin = float(p.get("margin", 1e-6))
    if "sweep" in p:
        sw = p["sweep"]
        n = int(np.floor((sw["stop"] - sw["start"]) / sw["step"] + 1e-9)) + 1
        eps = [round(sw["start"] + i * sw["step"], 12) for i in range(max(n, 0))]
        rows = _pool_map(_sweep_row, [(e, grid_density, N, margin) for e in eps], rc.threads)
        checks = {"theorem_consistent": all((not r[4]) or r[3] >= 3 for r in rows)}
        plot = {"title": "tau3 of the doubled short equator", "xlabel": "epsilon",
                "ylabel": "tau3", "series": [{"label": "tau3", "x": [r[0] for r in rows],
                                              "y": [r[2] for r in rows]}]}
        data = {"family": "katok", "sweep": sw,
                "rows": [dict(zip(["epsilon", "ell", "tau3", "mu", "verdict"], r)) for r in rows]}
        return Results("convexity", {}, checks, data, ["epsilon", "ell", "tau3", "mu", "verdict"],
                       rows, plot)
    metric = _metric(rc)
    try:
        rep = certify_dynamical_convexity(metric, p.get("delta"), float(p.get("length_cap", 10.0)),
                                          grid_density, N, margin=margin)
    except DomainError as exc:
        raise ConfigError(str(exc)) from None
    contr = [r for r in rep.rows if r.contractible]
    data = rep.to_dict()
    data["verdict"] = rep.verdict
    data["marginal"] = any(r.marginal for r in contr)
    checks = {
        "theorem_consistent": (not rep.verdict_by_theorem) or rep.verdict_by_inspection,
        "taui": all(r.taui_ok is not False for r in rep.rows),
    }
    cols = ["label", "iterate", "length", "contractible", "tau3", "mu", "marginal", "taui_ok"]
    rows = [[r.label, r.iterate, r.length, r.contractible, r.tau3, r.mu, r.marginal, r.taui_ok]
            for r in rep.rows]
    return Results("convexity", {}, checks, data, cols, rows, None)


def run_lift(rc: RunConfig) -> Results:
    from .contactlift import (EllipsoidParams, LiftBundle, g_from_metric, h_from_descriptor,
                              katok_ellipsoid_identity, lift_conjugacy_check,
                              starshaped_convexity_check)
    from .finsler import katok
    from .geometry import gmap, pullback_ratio_samples, random_s3

    p = rc.params
    n = int(p.get("n_samples", 1000))
    checks, data, table = {}, {}, []
    eps = p.get("katok_epsilon")
    if eps is None and rc.metric and rc.metric.get("family") == "katok":
        eps = rc.metric.get("epsilon", 0.0)
    if "h" in p:
        try:
            bundle = LiftBundle.from_h(h_from_descriptor(p["h"]))
        except DomainError as exc:
            raise ConfigError(f"lift.h: {exc}") from None
        conj = lift_conjugacy_check(h=bundle.h, n_samples=100, seed=rc.seed)
        data["source"] = p["h"]["kind"]
    else:
        try:
            metric = katok(eps) if eps is not None else _metric(rc, {"family": "round"})
        except DomainError as exc:
            raise ConfigError(str(exc)) from None
        bundle = LiftBundle.from_metric(metric)
        conj = lift_conjugacy_check(metric, n_samples=100, seed=rc.seed)
        data["source"] = metric.describe()
    if eps is not None and "h" not in p:
        ident = katok_ellipsoid_identity(float(eps), n, rc.seed)
        ep = EllipsoidParams.from_katok(float(eps))
        x, v = gmap(*random_s3(n, np.random.default_rng(rc.seed)))
        g = g_from_metric(katok(float(eps)))(x, v)
        data["ellipsoid"] = {"p": ep.p, "q": ep.q, "rational": ep.rational}
        data["identity"] = ident
        data["g_range"] = [float(g.min()), float(g.max())]
        for key in ("h_error", "g_error", "backward_error"):
            checks[f"katok_{key}"] = ident[key] < 1e-9
            table.append([f"katok_{key}", ident[key], 1e-9, ident[key] < 1e-9])
    inv = bundle.invariant_errors(n, rc.seed)
    conv = starshaped_convexity_check(bundle.g)
    pull = pullback_ratio_samples(100, rc.seed)
    data.update({"invariants": inv, "convexity": conv, "conjugacy": conj,
                 "pullback_ratio": {"min": float(pull.min()), "max": float(pull.max())}})
    checks["antipodal"] = inv["antipodal"] < 1e-10
    checks["homogeneity"] = inv["homogeneity"] < 1e-12
    checks["starshaped"] = conv["starshaped"]
    checks["conjugacy_up_to_orientation"] = conj["sign_corrected_discrepancy"] < 1e-6
    table += [["antipodal", inv["antipodal"], 1e-10, checks["antipodal"]],
              ["homogeneity", inv["homogeneity"], 1e-12, checks["homogeneity"]],
              ["conjugacy_sign_corrected", conj["sign_corrected_discrepancy"], 1e-6,
               checks["conjugacy_up_to_orientation"]],
              ["conjugacy_sign", conj["sign"], None, None],
              ["fibrewise_convex", conv["fibrewise_convex"], None, None]]
    return Results("lift", {}, checks, data, ["quantity", "value", "tolerance", "passed"], table, None)


def run_cylinder(rc: RunConfig) -> Results:
    from .cylinder import (ModelTube, SectorGerm, build_cylinder, charge_integral, cr_convergence,
                           cr_residual, energy_estimate, sector_matching, sigmoid_family)

    p = rc.params
    try:
        n = int(p.get("n", 2))
        c = float(p.get("c", GOLDEN))
        coeffs = p.get("coeffs") or [0.0] * int(p.get("degree", n + 1)) + [1.0]
        germ = SectorGerm(n, c, tuple(coeffs))
        tube = ModelTube.polynomial(p.get("tube_coeffs", [0.0, 1.0]), float(p.get("rho_max", 1.5)))
        r_min = float(p.get("r_min", 1e-3))
        sample = build_cylinder(germ, tube, r_min, float(p.get("ratio", 2 ** (-1 / 8))))
    except DomainError as exc:
        raise ConfigError(f"cylinder: {exc}") from None
    radii = [r for r in p.get("radii", [1e-1, 1e-2, 1e-3]) if r < sample.disc_radius]
    match = sector_matching(germ)
    res = cr_residual(sample)
    conv = cr_convergence(germ, tube, levels=int(p.get("levels", 3)))
    ch = charge_integral(sample, radii=radii)
    k = int(p.get("n_cutoffs", 20))
    e1 = energy_estimate(sample, sigmoid_family(k))
    e2 = energy_estimate(sample, sigmoid_family(2 * k))
    checks = {
        "sector_matching": match["matching"] < 1e-12,
        "cr_order": all(abs(o - 2.0) <= 0.2 for o in conv["axial_orders"]),
        "charge": abs(ch["values"][-1] - n) < 1e-2 and ch["monotone"],
        "energy_finite": e1["finite"] and e2["finite"],
        "energy_stable": abs(e1["energy"] - e2["energy"]) <= 1e-6,
    }
    trend_r = np.geomspace(0.5 * sample.disc_radius, r_min, 12)
    trend = charge_integral(sample, radii=trend_r)
    data = {"n": n, "c": c, "coeffs": [float(np.real(z)) for z in germ.coeffs],
            "disc_radius": sample.disc_radius, "grid": {"n_radii": sample.radii.size,
                                                        "n_theta": sample.thetas.size},
            "sector_matching": match, "max_cr_residual": res, "cr_convergence": conv,
            "charge_trend": ch, "energy": e1["energy"], "energy_doubled_family": e2["energy"],
            "boundary_integral": e1["boundary_integral"]}
    plot = {"title": "charge integral vs log10 radius", "xlabel": "log10 r",
            "ylabel": "charge", "series": [{"label": "charge", "x": np.log10(trend_r),
                                            "y": trend["values"]}]}
    cols = ["Re z", "Im z", "k", "Re F", "Im F", "t", "a"]
    rows = [[a, b, int(kk), d, e, f, g] for a, b, kk, d, e, f, g in sample.csv_rows()]
    return Results("cylinder", {}, checks, data, cols, rows, plot)


def run_reproduce(rc: RunConfig) -> Results:
    from . import acceptance

    ids = rc.params.get("criteria") or [c[0] for c in acceptance.CRITERIA]
    results = [acceptance.run_criterion(i) for i in sorted(ids)]
    for r in results:
        print(r.line(), file=sys.stderr)
    checks = {f"criterion_{r.id}": r.passed for r in results}
    rows = [[r.id, r.name, r.passed] for r in results]
    return Results("reproduce-paper", {}, checks, {"criteria": [r.to_dict() for r in results]},
                   ["criterion", "name", "passed"], rows, None)


RUNNERS = {
    "geodesics": run_geodesics,
    "loops": run_loops,
    "cz": run_cz,
    "convexity": run_convexity,
    "lift": run_lift,
    "cylinder": run_cylinder,
    "reproduce-paper": run_reproduce,
}


# ------------------------------------------------------------------ parser

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _floats(s: str) -> list[float]:
    try:
        return [float(x) for x in s.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {s!r}") from None


def _ints(s: str) -> list[int]:
    try:
        return [int(x) for x in s.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {s!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="JSON run config")
    common.add_argument("--json-out", dest="json_out")
    common.add_argument("--csv-out", dest="csv_out")
    common.add_argument("--svg-out", dest="svg_out")
    common.add_argument("--seed", type=int)
    common.add_argument("--threads", type=int, help=f"worker processes (default ${THREADS_ENV} or 1)")

    metric = _Parser(add_help=False)
    metric.add_argument("--metric", choices=["round", "katok", "revolution", "killing"])
    metric.add_argument("--epsilon", type=float)
    metric.add_argument("--a", type=float, help="ellipsoid semi-axis of revolution")
    metric.add_argument("--axis", type=_floats, help="Killing axis, e.g. 1,0,0")

    ap = _Parser(prog="finslerlab", description="Finsler geodesics on S^2, CZ indices, contact lifts")
    sub = ap.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)

    g = sub.add_parser("geodesics", parents=[common, metric], help="closed-orbit search and tables")
    g.add_argument("--length-cap", dest="length_cap", type=float)
    g.add_argument("--grid-density", dest="grid_density", type=int)
    g.add_argument("--n-base", dest="n_base", type=int)
    g.add_argument("--detect-tol", dest="detect_tol", type=float)
    g.add_argument("--s-min", dest="s_min", type=float)
    g.add_argument("--table-samples", dest="table_samples", type=int)

    lp = sub.add_parser("loops", parents=[common, metric], help="shortest geodesic loop")
    lp.add_argument("--grid-density", dest="grid_density", type=int)
    lp.add_argument("--n-colatitude", dest="n_colatitude", type=int)
    lp.add_argument("--length-cap", dest="length_cap", type=float)
    lp.add_argument("--detect-tol", dest="detect_tol", type=float)
    lp.add_argument("--s-min", dest="s_min", type=float)
    lp.add_argument("--max-refine", dest="max_refine", type=int)

    cz = sub.add_parser("cz", parents=[common, metric], help="spectrum and index of one orbit")
    cz.add_argument("--orbit")
    cz.add_argument("--iterates", type=int)
    cz.add_argument("--grid", type=int)
    cz.add_argument("--k-max", dest="k_max", type=int)
    cz.add_argument("--delta", type=float)
    cz.add_argument("--route", choices=["structured", "dense"])
    cz.add_argument("--length-cap", dest="length_cap", type=float)

    cv = sub.add_parser("convexity", parents=[common, metric], help="dynamical convexity report")
    cv.add_argument("--delta", type=float)
    cv.add_argument("--length-cap", dest="length_cap", type=float)
    cv.add_argument("--grid-density", dest="grid_density", type=int)
    cv.add_argument("--grid", type=int)
    cv.add_argument("--margin", type=float)
    cv.add_argument("--sweep-start", dest="sweep_start", type=float)
    cv.add_argument("--sweep-stop", dest="sweep_stop", type=float)
    cv.add_argument("--sweep-step", dest="sweep_step", type=float)

    li = sub.add_parser("lift", parents=[common, metric], help="lift correspondence checks")
    li.add_argument("--katok-epsilon", dest="katok_epsilon", type=float)
    li.add_argument("--n-samples", dest="n_samples", type=int)

    cy = sub.add_parser("cylinder", parents=[common], help="cylinder build and diagnostics")
    cy.add_argument("--n", type=int)
    cy.add_argument("--c", type=float)
    cy.add_argument("--degree", type=int)
    cy.add_argument("--coeffs", type=_floats)
    cy.add_argument("--tube-coeffs", dest="tube_coeffs", type=_floats)
    cy.add_argument("--rho-max", dest="rho_max", type=float)
    cy.add_argument("--r-min", dest="r_min", type=float)
    cy.add_argument("--ratio", type=float)
    cy.add_argument("--radii", type=_floats)
    cy.add_argument("--n-cutoffs", dest="n_cutoffs", type=int)
    cy.add_argument("--levels", type=int)

    rp = sub.add_parser("reproduce-paper", parents=[common], help="acceptance table")
    rp.add_argument("--criteria", type=_ints, help="comma-separated criterion numbers")
    return ap


# -------------------------------------------------------------------- main

def _fail(code: int, exc: BaseException) -> int:
    err = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
    sys.stderr.write(json.dumps(err, sort_keys=True) + "\n")
    return code


def run(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        base = {}
        if args.config:
            try:
                with open(args.config, encoding="utf-8") as fh:
                    base = json.load(fh)
            except (OSError, json.JSONDecodeError) as exc:
                raise ConfigError(f"cannot read config {args.config!r}: {exc}") from None
            if not isinstance(base, dict):
                raise ConfigError("config must be a JSON object")
            validate_config(base)
        cfg = merge_flags(base, args, args.subcommand)
        rc = RunConfig.from_dict(args.subcommand, cfg)
    except ConfigError as exc:
        return _fail(2, exc)
    try:
        res = RUNNERS[args.subcommand](rc)
        # where files go does not change what they contain
        res.config = {k: v for k, v in cfg.items() if k != "output"}
        emit_report(res, rc.output)
    except ConfigError as exc:
        return _fail(2, exc)
    except FinslerLabError as exc:
        return _fail(1, exc)
    sys.stdout.write(dumps_json(res.to_dict()))
    if not res.passed:
        failed = sorted(k for k, v in res.checks.items() if not v)
        sys.stderr.write(json.dumps({"error": "CheckFailure", "failed_checks": failed,
                                     "exit_code": 1}, sort_keys=True) + "\n")
        return 1
    return 0


def main(argv=None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":  # pragma: no cover
    main()
