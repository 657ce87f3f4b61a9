"""Quadrature, finite differences and root finding."""

from __future__ import annotations

from typing import Callable

import numpy as np
from scipy import integrate, optimize

from ..config import DEFAULTS
from ..errors import ConvergenceError, DomainError


def quadrature(f: Callable[[float], float], a: float, b: float,
               abs_tol: float | None = None) -> float:
    """Adaptive Gauss-Kronrod integral of ``f`` over [a, b]."""
    abs_tol = DEFAULTS.quad_abs if abs_tol is None else abs_tol
    if a == b:
        return 0.0

    def g(x):
        v = float(f(x))
        if not np.isfinite(v):
            raise DomainError(f"non-finite integrand at x={x:.6g}")
        return v

    val, err = integrate.quad(g, a, b, epsabs=abs_tol * 1e-2, epsrel=1e-13, limit=200)
    if err > abs_tol:
        raise ConvergenceError(f"quadrature error estimate {err:.2e} above {abs_tol:.0e}")
    return float(val)


def central_difference(f: Callable[[float], np.ndarray], x: float = 0.0,
                       h: float | None = None, richardson: bool = True) -> np.ndarray:
    """Derivative of ``f`` at ``x``: central difference, optionally one Richardson pass."""
    h = DEFAULTS.fd_step if h is None else h
    d1 = (np.asarray(f(x + h)) - np.asarray(f(x - h))) / (2 * h)
    if not richardson:
        return d1
    h2 = 2 * h
    d2 = (np.asarray(f(x + h2)) - np.asarray(f(x - h2))) / (2 * h2)
    return (4 * d1 - d2) / 3


def bracket_root(f: Callable[[float], float], a: float, b: float, xtol: float = 1e-14) -> float:
    """Root of a scalar function with a sign change on [a, b]."""
    fa, fb = f(a), f(b)
    if fa * fb > 0:
        raise ConvergenceError("no sign change on the bracket")
    return float(optimize.brentq(f, a, b, xtol=xtol, rtol=4 * np.finfo(float).eps))


def least_squares_solve(residual: Callable[[np.ndarray], np.ndarray], x0, tol: float = 1e-13,
                        max_nfev: int = 200, diff_step: float | None = None):
    """Levenberg-Marquardt refinement; returns (x, residual norm)."""
    res = optimize.least_squares(residual, np.asarray(x0, dtype=float), method="lm",
                                 xtol=tol, ftol=tol, gtol=tol, max_nfev=max_nfev,
                                 diff_step=diff_step)
    return res.x, float(np.linalg.norm(res.fun))
