"""Central numerical defaults.

Every tolerance used by more than one module lives here so tests can pin
them in one place.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Tolerances:
    ode_atol: float = 1e-10
    ode_rtol: float = 1e-10
    ode_max_steps: int = 200_000
    # geodesic work needs tighter control than the generic default
    flow_atol: float = 1e-12
    flow_rtol: float = 1e-12
    # unit-sphere / unit-tangent invariants
    unit_tol: float = 1e-12
    # accepted closed orbits and loops
    closure_tol: float = 1e-7
    orbit_dedup: float = 1e-4
    # winding: adjacent-sample angle jumps must stay below this
    winding_max_jump: float = 0.5 * 3.141592653589793
    winding_integer_tol: float = 1e-6
    # eigen solver residual target relative to the matrix norm
    eigen_residual: float = 1e-8
    symmetry_tol: float = 1e-12
    # spectral sign threshold: tau < -sign_factor * error estimate
    sign_factor: float = 10.0
    sign_floor: float = 1e-10
    # quadrature
    quad_abs: float = 1e-10
    # finite-difference pullbacks: central step, one Richardson pass
    fd_step: float = 1e-5
    # antipodal symmetry of h
    antipodal_tol: float = 1e-10
    # resonance detection for "irrational" parameters
    resonance_tol: float = 1e-9
    resonance_max_denominator: int = 64
    # largest admissible Killing perturbation
    max_epsilon: float = 0.95
    # taui inequality slack
    taui_slack: float = 1e-6
    # det Phi monitoring
    det_tol: float = 1e-6


DEFAULTS = Tolerances()


def is_resonant(x: float, tol: float | None = None, max_den: int | None = None) -> bool:
    """True when ``x`` lies within ``tol`` of a rational with small denominator."""
    tol = DEFAULTS.resonance_tol if tol is None else tol
    max_den = DEFAULTS.resonance_max_denominator if max_den is None else max_den
    for q in range(1, max_den + 1):
        if abs(x * q - round(x * q)) <= tol * q:
            return True
    return False
