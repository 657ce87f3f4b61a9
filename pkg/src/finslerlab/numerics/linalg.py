"""Symmetric eigenproblems.

``symmetric_eigen`` is the dense solver (Householder + implicit QL).
``PeriodicTridiagonal`` handles cyclic tridiagonal matrices, the shape produced
by the staggered discretisation of the periodic first-order operators in
``czindex``: eigenvalues by Sturm-count bisection, eigenvectors by (block)
inverse iteration with a pivoted band LU, Rayleigh-Ritz inside clusters.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .._core import kernels
from ..config import DEFAULTS
from ..errors import EigenError


def symmetric_eigen(matrix, check: bool = True):
    """Ascending eigenvalues and orthonormal eigenvectors (columns) of a symmetric matrix."""
    a = np.ascontiguousarray(matrix, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise EigenError("matrix must be square")
    scale = max(np.abs(a).max(initial=0.0), np.finfo(float).tiny)
    if np.abs(a - a.T).max(initial=0.0) > DEFAULTS.symmetry_tol * scale:
        raise EigenError("matrix is not symmetric")
    a = 0.5 * (a + a.T)
    try:
        w, v = kernels.dense_eigh(a)
    except RuntimeError as exc:
        raise EigenError(str(exc)) from exc
    w = np.asarray(w)
    v = np.asarray(v)
    if check and a.shape[0]:
        res = np.linalg.norm(a @ v - v * w, axis=0).max()
        if res > DEFAULTS.eigen_residual * np.linalg.norm(a, 2 if a.shape[0] < 64 else "fro"):
            raise EigenError(f"eigen residual {res:.3e} above target")
    return w, v


def gram_schmidt(x: np.ndarray) -> np.ndarray:
    """Orthonormalise the columns of ``x`` (modified Gram-Schmidt, two passes)."""
    q = np.array(x, dtype=float, copy=True)
    for _ in range(2):
        for j in range(q.shape[1]):
            for i in range(j):
                q[:, j] -= (q[:, i] @ q[:, j]) * q[:, i]
            nrm = np.linalg.norm(q[:, j])
            if nrm == 0.0:
                raise EigenError("rank-deficient block in Gram-Schmidt")
            q[:, j] /= nrm
    return q


def _zigzag(n: int) -> np.ndarray:
    """Order 0, n-1, 1, n-2, ... which turns a cyclic chain into bandwidth 2."""
    order = np.empty(n, dtype=np.int64)
    order[0::2] = np.arange((n + 1) // 2)
    order[1::2] = n - 1 - np.arange(n // 2)
    return order


@dataclass(frozen=True)
class PeriodicTridiagonal:
    """Symmetric cyclic tridiagonal matrix.

    ``d[i]`` is the diagonal, ``e[i]`` couples i and (i+1) mod n, so
    ``e[n-1]`` is the corner entry.
    """

    d: np.ndarray
    e: np.ndarray

    def __post_init__(self):
        if self.d.shape != self.e.shape or self.d.ndim != 1 or self.d.size < 3:
            raise EigenError("need matching 1-d arrays of length >= 3")

    @property
    def n(self) -> int:
        return self.d.size

    @property
    def norm_bound(self) -> float:
        return float(np.max(np.abs(self.d) + np.abs(self.e) + np.abs(np.roll(self.e, 1))))

    def dense(self) -> np.ndarray:
        n = self.n
        m = np.diag(self.d)
        i = np.arange(n)
        m[i, (i + 1) % n] += self.e
        m[(i + 1) % n, i] += self.e
        return m

    def matvec(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        e = self.e if x.ndim == 1 else self.e[:, None]
        d = self.d if x.ndim == 1 else self.d[:, None]
        return d * x + e * np.roll(x, -1, axis=0) + np.roll(e * x, 1, axis=0)

    def _pivmin(self) -> float:
        return np.finfo(float).eps * max(self.norm_bound, 1.0) * 1e-3

    def count_below(self, sigma) -> np.ndarray:
        s = np.atleast_1d(np.asarray(sigma, dtype=float))
        return np.asarray(kernels.periodic_count(self.d, self.e, s, self._pivmin()))

    def eigenvalues_in(self, lo: float, hi: float) -> tuple[np.ndarray, np.ndarray]:
        """Eigenvalues in [lo, hi) and their global ascending indices."""
        c = self.count_below(np.array([lo, hi]))
        idx = np.arange(c[0], c[1], dtype=np.int64)
        if idx.size == 0:
            return np.zeros(0), idx
        b = self.norm_bound
        vals = kernels.periodic_bisect(self.d, self.e, idx, -b - 1.0, b + 1.0,
                                       64 * np.finfo(float).eps * max(b, 1.0), self._pivmin())
        return np.asarray(vals), idx

    def _band(self, sigma: float):
        n = self.n
        order = _zigzag(n)
        pos = np.empty(n, dtype=np.int64)
        pos[order] = np.arange(n)
        band = np.zeros((n, 7))
        band[pos, 2] = self.d - sigma
        i = np.arange(n)
        a, b = pos[i], pos[(i + 1) % n]
        band[a, b - a + 2] += self.e
        band[b, a - b + 2] += self.e
        return band, pos

    def solve_shifted(self, sigma: float, rhs: np.ndarray, tiny: float | None = None) -> np.ndarray:
        """Solve (M - sigma I) x = rhs with pivoted band LU; rhs of shape (n, m)."""
        band, pos = self._band(sigma)
        tiny = tiny if tiny is not None else np.finfo(float).eps * max(self.norm_bound, 1.0)
        band, lm, piv = kernels.periodic_band_factor(band, tiny)
        r = np.ascontiguousarray(np.asarray(rhs, dtype=float)[_inverse(pos)])
        x = kernels.periodic_band_solve(band, lm, piv, r)
        return np.asarray(x)[pos]

    def eigenpairs_in(self, lo: float, hi: float, seed: int = 0,
                      cluster_tol: float | None = None):
        """Eigenpairs with eigenvalues in [lo, hi).

        Returns (values, vectors, indices); vectors are orthonormal columns.
        """
        vals, idx = self.eigenvalues_in(lo, hi)
        n = self.n
        if vals.size == 0:
            return vals, np.zeros((n, 0)), idx
        scale = max(self.norm_bound, 1.0)
        ctol = cluster_tol if cluster_tol is not None else 1e-7 * scale
        rng = np.random.default_rng(seed)
        groups = [[0]]
        for j in range(1, vals.size):
            if vals[j] - vals[groups[-1][-1]] <= ctol:
                groups[-1].append(j)
            else:
                groups.append([j])
        out_vals = np.empty_like(vals)
        out_vecs = np.empty((n, vals.size))
        for g in groups:
            g = np.asarray(g)
            shift = float(np.mean(vals[g])) + 1e3 * np.finfo(float).eps * scale
            x = gram_schmidt(rng.standard_normal((n, g.size)))
            for _ in range(3):
                x = gram_schmidt(self.solve_shifted(shift, x))
            hsub = x.T @ self.matvec(x)
            hsub = 0.5 * (hsub + hsub.T)
            w, u = symmetric_eigen(hsub, check=False)
            out_vals[g] = w
            out_vecs[:, g] = x @ u
        # orthogonality across neighbouring clusters is guaranteed by the gap;
        # one global pass guards against near-clusters split by ctol
        res = np.linalg.norm(self.matvec(out_vecs) - out_vecs * out_vals, axis=0)
        if res.max() > DEFAULTS.eigen_residual * scale:
            raise EigenError(f"inverse iteration residual {res.max():.3e} above target")
        return out_vals, out_vecs, idx


def _inverse(pos: np.ndarray) -> np.ndarray:
    inv = np.empty_like(pos)
    inv[pos] = np.arange(pos.size)
    return inv
