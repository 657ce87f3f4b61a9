"""Winding numbers of planar paths by guarded angle unwrapping."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..config import DEFAULTS
from ..errors import WindingError


@dataclass(frozen=True)
class PlanarPath:
    """Samples v(t_i) on the uniform grid t_i = i T / (m - 1), i = 0..m-1."""

    samples: np.ndarray  # shape (m, 2)
    period: float
    periodic: bool = True

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=float)
        if s.ndim != 2 or s.shape[1] != 2 or s.shape[0] < 3:
            raise ValueError("samples must have shape (m, 2) with m >= 3")
        if self.period <= 0:
            raise ValueError("period must be positive")
        object.__setattr__(self, "samples", s)
        if self.periodic:
            scale = np.abs(s).max()
            if np.abs(s[0] - s[-1]).max() > 1e-8 * scale:
                raise ValueError("periodic path must have equal first and last samples")

    @property
    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.period, self.samples.shape[0])


def unwrap_angle(samples: np.ndarray, max_jump: float | None = None,
                 zero_tol: float = 1e-10) -> np.ndarray:
    """Continuous angle of arg(v1 + i v2) along the samples (radians)."""
    s = np.asarray(samples, dtype=float)
    max_jump = DEFAULTS.winding_max_jump if max_jump is None else max_jump
    mag = np.hypot(s[:, 0], s[:, 1])
    if mag.min() <= zero_tol * max(mag.max(), np.finfo(float).tiny):
        raise WindingError("path passes through (or too close to) zero; winding undefined")
    z = s[:, 0] + 1j * s[:, 1]
    steps = np.angle(z[1:] * np.conj(z[:-1]))
    if np.abs(steps).max(initial=0.0) >= max_jump:
        raise WindingError("angle jump between adjacent samples too large; refine the grid")
    return np.concatenate([[np.angle(z[0])], np.angle(z[0]) + np.cumsum(steps)])


def winding_number(path: PlanarPath) -> float:
    """Total turning (phi(T) - phi(0)) / 2pi; rounded for periodic paths."""
    phi = unwrap_angle(path.samples)
    w = (phi[-1] - phi[0]) / (2 * np.pi)
    if path.periodic:
        r = round(w)
        if abs(w - r) > DEFAULTS.winding_integer_tol:
            raise WindingError(f"periodic path with non-integer winding {w:.6g}")
        return float(r)
    return float(w)
