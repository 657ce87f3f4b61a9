"""ODE integration.

Adaptive integration is delegated to ``scipy.integrate.solve_ivp``; a
classical fixed-step RK4 is kept in-repo as an independent second integrator
for cross-checks.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicHermiteSpline

from ..config import DEFAULTS
from ..errors import IntegrationError, NonFiniteField, StepLimitExceeded

Field = Callable[[float, np.ndarray], np.ndarray]

_ADAPTIVE = {"DOP853": 12, "RK45": 6, "RK23": 3}


@dataclass(frozen=True)
class IntegratorConfig:
    """Integrator choice and tolerances.

    ``method`` is one of the adaptive Runge-Kutta tags ``DOP853``/``RK45``
    or ``rk4`` for the fixed-step classical scheme (``fixed_step`` sets h).
    """

    method: str = "DOP853"
    atol: float = DEFAULTS.ode_atol
    rtol: float = DEFAULTS.ode_rtol
    max_steps: int = DEFAULTS.ode_max_steps
    fixed_step: float = 1e-3

    def __post_init__(self):
        if self.atol <= 0 or self.rtol <= 0:
            raise ValueError("tolerances must be strictly positive")
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")
        if self.method not in _ADAPTIVE and self.method != "rk4":
            raise ValueError(f"unknown integrator method {self.method!r}")
        if self.method == "rk4" and self.fixed_step <= 0:
            raise ValueError("fixed_step must be positive")


FLOW_CONFIG = IntegratorConfig(atol=DEFAULTS.flow_atol, rtol=DEFAULTS.flow_rtol)


class Trajectory:
    """Dense solution of an ODE on [t0, t1]."""

    def __init__(self, t: np.ndarray, y: np.ndarray, interpolant, nfev: int):
        self.t = t
        self.y = y
        self._interp = interpolant
        self.nfev = nfev

    @property
    def t_end(self) -> float:
        return float(self.t[-1])

    @property
    def y_end(self) -> np.ndarray:
        return self.y[:, -1].copy()

    def __call__(self, t) -> np.ndarray:
        """Evaluate the dense output; shape (d,) for scalar t, (d, m) otherwise."""
        return np.asarray(self._interp(t))


class _Guard:
    def __init__(self, fun: Field, limit: int):
        self.fun = fun
        self.limit = limit
        self.nfev = 0

    def __call__(self, t, y):
        self.nfev += 1
        if self.nfev > self.limit:
            raise StepLimitExceeded(f"step limit exceeded after {self.nfev} field evaluations")
        out = np.asarray(self.fun(t, y), dtype=float)
        if not np.all(np.isfinite(out)):
            raise NonFiniteField(f"non-finite field value at t={t:.6g}")
        return out


def integrate_ode(field: Field, y0, span: Sequence[float],
                  cfg: IntegratorConfig | None = None,
                  t_eval: np.ndarray | None = None) -> Trajectory:
    """Integrate ``y' = field(t, y)`` over ``span`` and return a dense trajectory."""
    cfg = cfg or IntegratorConfig()
    t0, t1 = float(span[0]), float(span[1])
    if not t1 > t0:
        raise ValueError("integration span must have T > 0")
    y0 = np.asarray(y0, dtype=float).ravel()
    if not np.all(np.isfinite(y0)):
        raise NonFiniteField("non-finite initial condition")
    if cfg.method == "rk4":
        return _rk4(field, y0, t0, t1, cfg, t_eval)
    guard = _Guard(field, (_ADAPTIVE[cfg.method] + 1) * cfg.max_steps)
    sol = solve_ivp(guard, (t0, t1), y0, method=cfg.method, atol=cfg.atol,
                    rtol=cfg.rtol, dense_output=True, t_eval=t_eval)
    if sol.status != 0:
        raise IntegrationError(sol.message)
    return Trajectory(sol.t, sol.y, sol.sol, guard.nfev)


def _rk4(field: Field, y0, t0, t1, cfg: IntegratorConfig, t_eval) -> Trajectory:
    n = max(1, int(np.ceil((t1 - t0) / cfg.fixed_step)))
    if n > cfg.max_steps:
        raise StepLimitExceeded(f"{n} fixed steps requested, limit {cfg.max_steps}")
    guard = _Guard(field, 4 * n + 8)
    h = (t1 - t0) / n
    ts = t0 + h * np.arange(n + 1)
    ys = np.empty((y0.size, n + 1))
    dys = np.empty_like(ys)
    y = y0.copy()
    ys[:, 0] = y
    for i in range(n):
        t = ts[i]
        k1 = guard(t, y)
        dys[:, i] = k1
        k2 = guard(t + h / 2, y + h / 2 * k1)
        k3 = guard(t + h / 2, y + h / 2 * k2)
        k4 = guard(t + h, y + h * k3)
        y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        ys[:, i + 1] = y
    dys[:, n] = guard(ts[n], y)
    spline = CubicHermiteSpline(ts, ys, dys, axis=1)
    if t_eval is not None:
        te = np.asarray(t_eval, dtype=float)
        return Trajectory(te, spline(te), spline, guard.nfev)
    return Trajectory(ts, ys, spline, guard.nfev)
