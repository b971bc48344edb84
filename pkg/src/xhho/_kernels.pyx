# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled twins of the kernels in ``_kernels_py``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt

cnp.import_array()


cdef double _binom(int n, int k):
    cdef double r = 1.0
    cdef int i
    if k < 0 or k > n:
        return 0.0
    for i in range(1, k + 1):
        r = r * (n - k + i) / i
    return r


def eval_monomials(xs, exps):
    cdef const double[:, :] x = np.ascontiguousarray(xs, dtype=np.float64)
    cdef const long[:, :] e = np.ascontiguousarray(exps, dtype=np.int64)
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t m = e.shape[0]
    vals_arr = np.empty((n, m))
    grads_arr = np.empty((n, m, 2))
    laps_arr = np.empty((n, m))
    cdef double[:, :] vals = vals_arr
    cdef double[:, :, :] grads = grads_arr
    cdef double[:, :] laps = laps_arr
    cdef int pmax = 0
    cdef Py_ssize_t i, p, q
    for i in range(m):
        if e[i, 0] > pmax:
            pmax = e[i, 0]
        if e[i, 1] > pmax:
            pmax = e[i, 1]
    xp_arr = np.ones((pmax + 1,))
    yp_arr = np.ones((pmax + 1,))
    cdef double[:] xp = xp_arr
    cdef double[:] yp = yp_arr
    cdef long a, b
    cdef double lap
    for p in range(n):
        for q in range(1, pmax + 1):
            xp[q] = xp[q - 1] * x[p, 0]
            yp[q] = yp[q - 1] * x[p, 1]
        for i in range(m):
            a = e[i, 0]
            b = e[i, 1]
            vals[p, i] = xp[a] * yp[b]
            grads[p, i, 0] = a * xp[a - 1] * yp[b] if a > 0 else 0.0
            grads[p, i, 1] = b * xp[a] * yp[b - 1] if b > 0 else 0.0
            lap = 0.0
            if a > 1:
                lap += a * (a - 1) * xp[a - 2] * yp[b]
            if b > 1:
                lap += b * (b - 1) * xp[a] * yp[b - 2]
            laps[p, i] = lap
    return vals_arr, grads_arr, laps_arr


def volume_recursion(boundary, exps, index, shift, double beta):
    cdef const double[:] bd = np.ascontiguousarray(boundary, dtype=np.float64)
    cdef const long[:, :] e = np.ascontiguousarray(exps, dtype=np.int64)
    cdef const long[:, :] idx = np.ascontiguousarray(index, dtype=np.int64)
    cdef double sx = shift[0]
    cdef double sy = shift[1]
    cdef Py_ssize_t m = e.shape[0]
    out_arr = np.empty(m)
    cdef double[:] out = out_arr
    cdef Py_ssize_t i
    cdef long a, b
    cdef double val, div
    for i in range(m):
        a = e[i, 0]
        b = e[i, 1]
        val = bd[i]
        if a > 0:
            val -= a * sx * out[idx[a - 1, b]]
        if b > 0:
            val -= b * sy * out[idx[a, b - 1]]
        div = 2.0 + beta + a + b
        if div <= 0.0:
            raise ValueError("non-positive recursion coefficient %g" % div)
        out[i] = val / div
    return out_arr


def radial_edge_recursion(ends, double kappa, double beta):
    cdef const double[:] en = np.ascontiguousarray(ends, dtype=np.float64)
    cdef Py_ssize_t n = en.shape[0]
    out_arr = np.empty(n)
    cdef double[:] out = out_arr
    cdef Py_ssize_t j
    cdef double val, div
    for j in range(n):
        val = en[j]
        if j > 0:
            val -= j * kappa * out[j - 1]
        div = 1.0 + beta + j
        if div <= 0.0:
            raise ValueError("non-positive recursion coefficient %g" % div)
        out[j] = val / div
    return out_arr


def restrict_monomials(double p0, double p1, double q0, double q1, exps, int degree):
    cdef const long[:, :] e = np.ascontiguousarray(exps, dtype=np.int64)
    cdef Py_ssize_t m = e.shape[0]
    out_arr = np.zeros((m, degree + 1))
    cdef double[:, :] out = out_arr
    cdef int pmax = 0
    cdef Py_ssize_t i, j, ja, jb
    for i in range(m):
        if e[i, 0] > pmax:
            pmax = e[i, 0]
        if e[i, 1] > pmax:
            pmax = e[i, 1]
    xpow_arr = np.zeros((pmax + 1, pmax + 1))
    ypow_arr = np.zeros((pmax + 1, pmax + 1))
    cdef double[:, :] xpow = xpow_arr
    cdef double[:, :] ypow = ypow_arr
    cdef int a, b
    for a in range(pmax + 1):
        for j in range(a + 1):
            xpow[a, j] = _binom(a, j) * p0 ** (a - j) * p1 ** j
            ypow[a, j] = _binom(a, j) * q0 ** (a - j) * q1 ** j
    for i in range(m):
        a = e[i, 0]
        b = e[i, 1]
        for ja in range(a + 1):
            for jb in range(b + 1):
                out[i, ja + jb] += xpow[a, ja] * ypow[b, jb]
    return out_arr


def mgs(gram, Py_ssize_t npoly, drop_below):
    cdef const double[:, :] g = np.ascontiguousarray(gram, dtype=np.float64)
    cdef const double[:] drop = np.ascontiguousarray(drop_below, dtype=np.float64)
    cdef Py_ssize_t n = g.shape[0]
    basis_arr = np.zeros((n, n))
    cdef double[:, :] basis = basis_arr
    kept_arr = np.zeros(n, dtype=bool)
    residual_arr = np.zeros(n)
    original_arr = np.zeros(n)
    cdef double[:] residual = residual_arr
    cdef double[:] original = original_arr
    v_arr = np.zeros(n)
    gv_arr = np.zeros(n)
    cdef double[:] v = v_arr
    cdef double[:] gv = gv_arr
    cdef Py_ssize_t nb = 0
    cdef Py_ssize_t i, j, r, c, rep
    cdef double dot, nr2, nr
    for i in range(n):
        for j in range(n):
            v[j] = 0.0
        v[i] = 1.0
        original[i] = sqrt(g[i, i]) if g[i, i] > 0.0 else 0.0
        for rep in range(2):
            for r in range(nb):
                for j in range(n):
                    gv[j] = 0.0
                    for c in range(n):
                        gv[j] += g[j, c] * v[c]
                dot = 0.0
                for j in range(n):
                    dot += basis[r, j] * gv[j]
                for j in range(n):
                    v[j] -= dot * basis[r, j]
        nr2 = 0.0
        for j in range(n):
            gv[j] = 0.0
            for c in range(n):
                gv[j] += g[j, c] * v[c]
            nr2 += v[j] * gv[j]
        nr = sqrt(nr2) if nr2 > 0.0 else 0.0
        residual[i] = nr
        if i >= npoly and nr <= drop[i]:
            continue
        kept_arr[i] = True
        if nr == 0.0:
            for j in range(n):
                basis[nb, j] = np.nan
        else:
            for j in range(n):
                basis[nb, j] = v[j] / nr
        nb += 1
    return basis_arr[:nb].copy(), kept_arr, residual_arr, original_arr
