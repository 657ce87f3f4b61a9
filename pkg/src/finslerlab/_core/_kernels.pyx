# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels.

Three groups of routines live here:

* ``dense_eigh``: Householder tridiagonalisation followed by implicit QL
  with eigenvector accumulation (EISPACK tred2/tql2 lineage).
* ``periodic_count`` / ``periodic_bisect``: Sturm-type inertia counts for a
  periodic (cyclic) symmetric tridiagonal matrix, via an LDL^T sweep with
  arrowhead fill in the last column, and bisection on top of it.
* ``periodic_band_factor`` / ``periodic_band_solve``: banded LU with partial
  pivoting of the zigzag-reordered cyclic matrix, used for inverse iteration.

The pure-Python twins in ``_fallback.py`` must return identical results up to
rounding.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, sqrt, hypot

cnp.import_array()


def dense_eigh(double[:, ::1] a):
    """Eigen-decomposition of a symmetric matrix.

    Returns (w, v) with ascending eigenvalues and eigenvectors as columns.
    Raises RuntimeError if the QL sweep fails to converge.
    """
    cdef Py_ssize_t n = a.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] vv = np.array(a, dtype=np.float64, copy=True)
    cdef double[:, ::1] V = vv
    cdef cnp.ndarray[cnp.float64_t, ndim=1] dd = np.zeros(n)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] ee = np.zeros(n)
    cdef double[::1] d = dd
    cdef double[::1] e = ee
    if n == 0:
        return dd, vv
    if n == 1:
        dd[0] = V[0, 0]
        V[0, 0] = 1.0
        return dd, vv
    _tred2(V, d, e, n)
    # QL works on rows of the transposed accumulator (contiguous access)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] zt = np.ascontiguousarray(vv.T)
    cdef double[:, ::1] Z = zt
    _tql2(Z, d, e, n)
    order = np.argsort(dd, kind="stable")
    return dd[order].copy(), np.ascontiguousarray(zt[order].T)


cdef void _tred2(double[:, ::1] V, double[::1] d, double[::1] e, Py_ssize_t n):
    cdef Py_ssize_t i, j, k
    cdef double scale, h, f, g, hh
    for j in range(n):
        d[j] = V[n - 1, j]
    for i in range(n - 1, 0, -1):
        scale = 0.0
        h = 0.0
        for k in range(i):
            scale += fabs(d[k])
        if scale == 0.0:
            e[i] = d[i - 1]
            for j in range(i):
                d[j] = V[i - 1, j]
                V[i, j] = 0.0
                V[j, i] = 0.0
        else:
            for k in range(i):
                d[k] /= scale
                h += d[k] * d[k]
            f = d[i - 1]
            g = sqrt(h)
            if f > 0:
                g = -g
            e[i] = scale * g
            h = h - f * g
            d[i - 1] = f - g
            for j in range(i):
                e[j] = 0.0
            for j in range(i):
                f = d[j]
                V[j, i] = f
                g = e[j] + V[j, j] * f
                for k in range(j + 1, i):
                    g += V[k, j] * d[k]
                    e[k] += V[k, j] * f
                e[j] = g
            f = 0.0
            for j in range(i):
                e[j] /= h
                f += e[j] * d[j]
            hh = f / (h + h)
            for j in range(i):
                e[j] -= hh * d[j]
            for j in range(i):
                f = d[j]
                g = e[j]
                for k in range(j, i):
                    V[k, j] -= (f * e[k] + g * d[k])
                d[j] = V[i - 1, j]
                V[i, j] = 0.0
        d[i] = h
    for i in range(n - 1):
        V[n - 1, i] = V[i, i]
        V[i, i] = 1.0
        h = d[i + 1]
        if h != 0.0:
            for k in range(i + 1):
                d[k] = V[k, i + 1] / h
            for j in range(i + 1):
                g = 0.0
                for k in range(i + 1):
                    g += V[k, i + 1] * V[k, j]
                for k in range(i + 1):
                    V[k, j] -= g * d[k]
        for k in range(i + 1):
            V[k, i + 1] = 0.0
    for j in range(n):
        d[j] = V[n - 1, j]
        V[n - 1, j] = 0.0
    V[n - 1, n - 1] = 1.0
    e[0] = 0.0


cdef int _tql2(double[:, ::1] Z, double[::1] d, double[::1] e, Py_ssize_t n) except -1:
    cdef Py_ssize_t i, k, l, m
    cdef int it
    cdef double f = 0.0, tst1 = 0.0, eps = 2.220446049250313e-16
    cdef double g, p, r, dl1, h, c, c2, c3, el1, s, s2, zk
    for i in range(1, n):
        e[i - 1] = e[i]
    e[n - 1] = 0.0
    for l in range(n):
        tst1 = max(tst1, fabs(d[l]) + fabs(e[l]))
        m = l
        while m < n:
            if fabs(e[m]) <= eps * tst1:
                break
            m += 1
        if m == n:
            m = n - 1
        if m > l:
            it = 0
            while True:
                it += 1
                if it > 60:
                    raise RuntimeError("QL iteration failed to converge")
                g = d[l]
                p = (d[l + 1] - g) / (2.0 * e[l])
                r = hypot(p, 1.0)
                if p < 0:
                    r = -r
                d[l] = e[l] / (p + r)
                d[l + 1] = e[l] * (p + r)
                dl1 = d[l + 1]
                h = g - d[l]
                for i in range(l + 2, n):
                    d[i] -= h
                f += h
                p = d[m]
                c = 1.0
                c2 = c
                c3 = c
                el1 = e[l + 1]
                s = 0.0
                s2 = 0.0
                for i in range(m - 1, l - 1, -1):
                    c3 = c2
                    c2 = c
                    s2 = s
                    g = c * e[i]
                    h = c * p
                    r = hypot(p, e[i])
                    e[i + 1] = s * r
                    s = e[i] / r
                    c = p / r
                    p = c * d[i] - s * g
                    d[i + 1] = h + s * (c * g + s * d[i])
                    for k in range(n):
                        zk = Z[i + 1, k]
                        Z[i + 1, k] = s * Z[i, k] + c * zk
                        Z[i, k] = c * Z[i, k] - s * zk
                p = -s * s2 * c3 * el1 * e[l] / dl1
                e[l] = s * p
                d[l] = c * p
                if fabs(e[l]) <= eps * tst1:
                    break
        d[l] = d[l] + f
        e[l] = 0.0
    return 0


cdef inline Py_ssize_t _count(double[::1] d, double[::1] e, double sigma,
                              double pivmin, Py_ssize_t n) nogil:
    # e[i] couples i and (i+1) mod n; e[n-1] is the corner entry
    cdef Py_ssize_t i, cnt = 0
    cdef double p, f, last, pn, fn, tail
    p = d[0] - sigma
    if fabs(p) < pivmin:
        p = -pivmin
    if p < 0:
        cnt += 1
    f = e[n - 1]
    last = d[n - 1] - sigma - f * f / p
    for i in range(1, n - 1):
        pn = d[i] - sigma - e[i - 1] * e[i - 1] / p
        if fabs(pn) < pivmin:
            pn = -pivmin
        tail = e[n - 2] if i == n - 2 else 0.0
        fn = tail - e[i - 1] * f / p
        if pn < 0:
            cnt += 1
        last -= fn * fn / pn
        p = pn
        f = fn
    if fabs(last) < pivmin:
        last = -pivmin
    if last < 0:
        cnt += 1
    return cnt


def periodic_count(double[::1] d, double[::1] e, double[::1] sigmas, double pivmin):
    """Number of eigenvalues strictly below each shift (periodic tridiagonal)."""
    cdef Py_ssize_t n = d.shape[0], j, m = sigmas.shape[0]
    out = np.zeros(m, dtype=np.int64)
    cdef long long[::1] o = out
    with nogil:
        for j in range(m):
            o[j] = _count(d, e, sigmas[j], pivmin, n)
    return out


def periodic_bisect(double[::1] d, double[::1] e, long long[::1] kidx,
                    double lo, double hi, double abstol, double pivmin):
    """Bisection for the eigenvalues with 0-based ascending indices ``kidx``.

    ``lo``/``hi`` must bracket the whole requested range.
    """
    cdef Py_ssize_t n = d.shape[0], j, m = kidx.shape[0]
    cdef double a, b, mid, tol
    cdef long long k
    cdef int it
    out = np.empty(m)
    cdef double[::1] o = out
    with nogil:
        for j in range(m):
            k = kidx[j]
            a = lo
            b = hi
            for it in range(200):
                tol = abstol + 4.0e-16 * max(fabs(a), fabs(b))
                if b - a <= tol:
                    break
                mid = 0.5 * (a + b)
                if _count(d, e, mid, pivmin, n) > k:
                    b = mid
                else:
                    a = mid
            o[j] = 0.5 * (a + b)
    return out


def periodic_band_factor(double[:, ::1] band, double tiny):
    """In-place banded LU with partial pivoting (kl = 2, ku = 2).

    ``band`` has shape (n, 7); entry (i, j) of the matrix lives in
    band[i, j - i + 2]. Returns (band, lmult, piv).
    """
    cdef Py_ssize_t n = band.shape[0], kl = 2, w = band.shape[1]
    cdef Py_ssize_t k, i, j, r, jmax, imax
    cdef double best, mlt, tmp
    lm = np.zeros((n, kl))
    pv = np.zeros(n, dtype=np.int64)
    cdef double[:, ::1] L = lm
    cdef long long[::1] P = pv
    with nogil:
        for k in range(n):
            imax = min(k + kl, n - 1)
            r = k
            best = fabs(band[k, kl])
            for i in range(k + 1, imax + 1):
                if fabs(band[i, k - i + kl]) > best:
                    best = fabs(band[i, k - i + kl])
                    r = i
            P[k] = r
            jmax = min(n - 1, k + w - 1 - kl)
            if r != k:
                for j in range(k, jmax + 1):
                    tmp = band[k, j - k + kl]
                    band[k, j - k + kl] = band[r, j - r + kl] if j - r + kl < w else 0.0
                    if j - r + kl < w:
                        band[r, j - r + kl] = tmp
            if fabs(band[k, kl]) < tiny:
                band[k, kl] = tiny if band[k, kl] >= 0 else -tiny
            for i in range(k + 1, imax + 1):
                mlt = band[i, k - i + kl] / band[k, kl]
                L[k, i - k - 1] = mlt
                band[i, k - i + kl] = 0.0
                for j in range(k + 1, jmax + 1):
                    if j - i + kl < w:
                        band[i, j - i + kl] -= mlt * band[k, j - k + kl]
    return band, lm, pv


def periodic_band_solve(double[:, ::1] band, double[:, ::1] lm, long long[::1] piv,
                        double[:, ::1] rhs):
    """Solve with a factorisation from ``periodic_band_factor`` (in place)."""
    cdef Py_ssize_t n = band.shape[0], kl = 2, w = band.shape[1], nr = rhs.shape[1]
    cdef Py_ssize_t k, i, j, c, r
    cdef double tmp, acc
    with nogil:
        for k in range(n):
            r = piv[k]
            if r != k:
                for c in range(nr):
                    tmp = rhs[k, c]
                    rhs[k, c] = rhs[r, c]
                    rhs[r, c] = tmp
            for i in range(k + 1, min(k + kl, n - 1) + 1):
                for c in range(nr):
                    rhs[i, c] -= lm[k, i - k - 1] * rhs[k, c]
        for k in range(n - 1, -1, -1):
            for c in range(nr):
                acc = rhs[k, c]
                for j in range(k + 1, min(n - 1, k + w - 1 - kl) + 1):
                    acc -= band[k, j - k + kl] * rhs[j, c]
                rhs[k, c] = acc / band[k, kl]
    return np.asarray(rhs)
