"""Shared numerical kernels."""

from .calculus import bracket_root, central_difference, least_squares_solve, quadrature
from .linalg import PeriodicTridiagonal, gram_schmidt, symmetric_eigen
from .ode import FLOW_CONFIG, IntegratorConfig, Trajectory, integrate_ode
from .winding import PlanarPath, unwrap_angle, winding_number

__all__ = [
    "FLOW_CONFIG",
    "IntegratorConfig",
    "PeriodicTridiagonal",
    "PlanarPath",
    "Trajectory",
    "bracket_root",
    "central_difference",
    "gram_schmidt",
    "integrate_ode",
    "least_squares_solve",
    "quadrature",
    "symmetric_eigen",
    "unwrap_angle",
    "winding_number",
]
