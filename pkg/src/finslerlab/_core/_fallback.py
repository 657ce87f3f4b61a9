"""Pure numpy twins of the compiled kernels in ``_kernels.pyx``.

Same signatures, same algorithms; loops that cannot be vectorised run at
Python speed, which is acceptable for the matrix sizes used in tests.
"""

from __future__ import annotations

import numpy as np

_EPS = np.finfo(float).eps


def _householder_tridiagonal(a: np.ndarray):
    """Reduce symmetric ``a`` to tridiagonal form, returning (d, e, Q)."""
    a = np.array(a, dtype=float, copy=True)
    n = a.shape[0]
    q = np.eye(n)
    for k in range(n - 2):
        x = a[k + 1:, k].copy()
        alpha = np.linalg.norm(x)
        if alpha == 0.0:
            continue
        if x[0] > 0:
            alpha = -alpha
        v = x
        v[0] -= alpha
        vn = np.linalg.norm(v)
        if vn == 0.0:
            continue
        v /= vn
        sub = a[k + 1:, k + 1:]
        w = sub @ v
        kappa = v @ w
        w = 2.0 * (w - kappa * v)
        sub -= np.outer(v, w) + np.outer(w, v)
        a[k + 1:, k] = 0.0
        a[k, k + 1:] = 0.0
        a[k + 1, k] = alpha
        a[k, k + 1] = alpha
        q[:, k + 1:] -= 2.0 * np.outer(q[:, k + 1:] @ v, v)
    d = np.diag(a).copy()
    e = np.zeros(n)
    e[1:] = np.diag(a, -1)
    return d, e, q


def _tql2(z: np.ndarray, d: np.ndarray, e: np.ndarray) -> None:
    """Implicit QL on (d, e) accumulating rotations into rows of ``z``."""
    n = d.size
    e[:-1] = e[1:]
    e[-1] = 0.0
    f = 0.0
    tst1 = 0.0
    for l in range(n):
        tst1 = max(tst1, abs(d[l]) + abs(e[l]))
        m = l
        while m < n and abs(e[m]) > _EPS * tst1:
            m += 1
        m = min(m, n - 1)
        if m > l:
            it = 0
            while True:
                it += 1
                if it > 60:
                    raise RuntimeError("QL iteration failed to converge")
                g = d[l]
                p = (d[l + 1] - g) / (2.0 * e[l])
                r = np.hypot(p, 1.0)
                if p < 0:
                    r = -r
                d[l] = e[l] / (p + r)
                d[l + 1] = e[l] * (p + r)
                dl1 = d[l + 1]
                h = g - d[l]
                d[l + 2:] -= h
                f += h
                p = d[m]
                c = c2 = c3 = 1.0
                el1 = e[l + 1]
                s = s2 = 0.0
                for i in range(m - 1, l - 1, -1):
                    c3 = c2
                    c2 = c
                    s2 = s
                    g = c * e[i]
                    h = c * p
                    r = np.hypot(p, e[i])
                    e[i + 1] = s * r
                    s = e[i] / r
                    c = p / r
                    p = c * d[i] - s * g
                    d[i + 1] = h + s * (c * g + s * d[i])
                    zi = z[i].copy()
                    z[i] = c * zi - s * z[i + 1]
                    z[i + 1] = s * zi + c * z[i + 1]
                p = -s * s2 * c3 * el1 * e[l] / dl1
                e[l] = s * p
                d[l] = c * p
                if abs(e[l]) <= _EPS * tst1:
                    break
        d[l] += f
        e[l] = 0.0


def dense_eigh(a):
    a = np.ascontiguousarray(a, dtype=float)
    n = a.shape[0]
    if n == 0:
        return np.zeros(0), np.zeros((0, 0))
    if n == 1:
        return a[0].copy(), np.ones((1, 1))
    d, e, q = _householder_tridiagonal(a)
    z = np.ascontiguousarray(q.T)
    _tql2(z, d, e)
    order = np.argsort(d, kind="stable")
    return d[order].copy(), np.ascontiguousarray(z[order].T)


def _count_many(d, e, sigmas, pivmin):
    n = d.size
    s = np.asarray(sigmas, dtype=float)
    p = d[0] - s
    p = np.where(np.abs(p) < pivmin, -pivmin, p)
    cnt = (p < 0).astype(np.int64)
    f = np.full_like(s, e[n - 1])
    last = d[n - 1] - s - f * f / p
    for i in range(1, n - 1):
        pn = d[i] - s - e[i - 1] ** 2 / p
        pn = np.where(np.abs(pn) < pivmin, -pivmin, pn)
        tail = e[n - 2] if i == n - 2 else 0.0
        fn = tail - e[i - 1] * f / p
        cnt += pn < 0
        last = last - fn * fn / pn
        p = pn
        f = fn
    last = np.where(np.abs(last) < pivmin, -pivmin, last)
    cnt += last < 0
    return cnt


def periodic_count(d, e, sigmas, pivmin):
    return _count_many(np.asarray(d, float), np.asarray(e, float), sigmas, pivmin)


def periodic_bisect(d, e, kidx, lo, hi, abstol, pivmin):
    d = np.asarray(d, float)
    e = np.asarray(e, float)
    k = np.asarray(kidx, dtype=np.int64)
    a = np.full(k.size, float(lo))
    b = np.full(k.size, float(hi))
    for _ in range(200):
        tol = abstol + 4.0e-16 * np.maximum(np.abs(a), np.abs(b))
        active = (b - a) > tol
        if not active.any():
            break
        mid = 0.5 * (a + b)
        c = _count_many(d, e, mid[active], pivmin)
        up = c > k[active]
        idx = np.flatnonzero(active)
        b[idx[up]] = mid[active][up]
        a[idx[~up]] = mid[active][~up]
    return 0.5 * (a + b)


def periodic_band_factor(band, tiny):
    band = np.asarray(band)
    n, w = band.shape
    kl = 2
    lm = np.zeros((n, kl))
    piv = np.zeros(n, dtype=np.int64)
    for k in range(n):
        imax = min(k + kl, n - 1)
        rows = np.arange(k, imax + 1)
        vals = np.abs(band[rows, k - rows + kl])
        r = int(rows[np.argmax(vals)])
        piv[k] = r
        jmax = min(n - 1, k + w - 1 - kl)
        cols = np.arange(k, jmax + 1)
        if r != k:
            tk = band[k, cols - k + kl].copy()
            band[k, cols - k + kl] = band[r, cols - r + kl]
            band[r, cols - r + kl] = tk
        if abs(band[k, kl]) < tiny:
            band[k, kl] = tiny if band[k, kl] >= 0 else -tiny
        pivrow = band[k, cols - k + kl]
        for i in range(k + 1, imax + 1):
            mlt = band[i, k - i + kl] / band[k, kl]
            lm[k, i - k - 1] = mlt
            band[i, cols - i + kl] -= mlt * pivrow
            band[i, k - i + kl] = 0.0
    return band, lm, piv


def periodic_band_solve(band, lm, piv, rhs):
    n, w = band.shape
    kl = 2
    for k in range(n):
        r = piv[k]
        if r != k:
            rhs[[k, r]] = rhs[[r, k]]
        for i in range(k + 1, min(k + kl, n - 1) + 1):
            rhs[i] -= lm[k, i - k - 1] * rhs[k]
    for k in range(n - 1, -1, -1):
        jmax = min(n - 1, k + w - 1 - kl)
        if jmax > k:
            rhs[k] -= band[k, 1 + kl:jmax - k + kl + 1] @ rhs[k + 1:jmax + 1]
        rhs[k] /= band[k, kl]
    return rhs
