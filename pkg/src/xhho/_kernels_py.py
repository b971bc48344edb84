"""Pure Python implementations of the hot kernels.

Every function here has a twin in ``_kernels.pyx`` with the same signature
and the same floating point semantics; ``xhho.kernels`` picks one at import.
"""
import math

import numpy as np


def eval_monomials(xs, exps):
    """Values, scaled gradients and scaled Laplacians of 2D monomials.

    ``xs`` are points already mapped to local scaled coordinates, ``exps`` an
    ``(m, 2)`` integer array of exponents.  Derivatives are with respect to the
    scaled coordinates; callers divide by the scaling length.
    """
    xs = np.asarray(xs, dtype=float)
    exps = np.asarray(exps, dtype=np.int64)
    n = xs.shape[0]
    m = exps.shape[0]
    vals = np.empty((n, m))
    grads = np.empty((n, m, 2))
    laps = np.empty((n, m))
    pmax = int(exps.max()) if m else 0
    xp = np.ones((n, pmax + 1))
    yp = np.ones((n, pmax + 1))
    for p in range(1, pmax + 1):
        xp[:, p] = xp[:, p - 1] * xs[:, 0]
        yp[:, p] = yp[:, p - 1] * xs[:, 1]
    for i in range(m):
        a = exps[i, 0]
        b = exps[i, 1]
        vals[:, i] = xp[:, a] * yp[:, b]
        grads[:, i, 0] = a * xp[:, a - 1] * yp[:, b] if a > 0 else 0.0
        grads[:, i, 1] = b * xp[:, a] * yp[:, b - 1] if b > 0 else 0.0
        lap = np.zeros(n)
        if a > 1:
            lap += a * (a - 1) * xp[:, a - 2] * yp[:, b]
        if b > 1:
            lap += b * (b - 1) * xp[:, a] * yp[:, b - 2]
        laps[:, i] = lap
    return vals, grads, laps


def volume_recursion(boundary, exps, index, shift, beta):
    """Bottom-up homogeneous volume recursion over a table of monomials.

    For ``phi = m_ab((x - x0) / h)`` and ``H`` homogeneous of degree ``beta``
    about ``c``::

        (2 + beta + a + b) V[a, b] = boundary[a, b]
            - a * shift[0] * V[a-1, b] - b * shift[1] * V[a, b-1]

    with ``shift = (x0 - c) / h``.  ``exps`` must be sorted by total degree and
    ``index[a, b]`` gives the row of ``(a, b)`` in ``exps``.
    """
    m = exps.shape[0]
    out = np.empty(m)
    for i in range(m):
        a = int(exps[i, 0])
        b = int(exps[i, 1])
        val = boundary[i]
        if a > 0:
            val -= a * shift[0] * out[index[a - 1, b]]
        if b > 0:
            val -= b * shift[1] * out[index[a, b - 1]]
        div = 2.0 + beta + a + b
        if div <= 0.0:
            raise ValueError("non-positive recursion coefficient %g" % div)
        out[i] = val / div
    return out


def radial_edge_recursion(ends, kappa, beta):
    """Vertex-term recursion along an edge lying on a ray from the centre.

    ``ends[j]`` holds ``[r H tau^j]`` evaluated between the two endpoints and
    ``kappa = (x0 - c) . t / (L / 2)``; returns ``J[j] = int_F H tau^j``.
    """
    n = ends.shape[0]
    out = np.empty(n)
    for j in range(n):
        val = ends[j]
        if j > 0:
            val -= j * kappa * out[j - 1]
        div = 1.0 + beta + j
        if div <= 0.0:
            raise ValueError("non-positive recursion coefficient %g" % div)
        out[j] = val / div
    return out


def restrict_monomials(p0, p1, q0, q1, exps, degree):
    """Coefficients in ``tau`` of ``(p0 + p1 tau)^a (q0 + q1 tau)^b``."""
    m = exps.shape[0]
    out = np.zeros((m, degree + 1))
    pmax = int(exps.max()) if m else 0
    xpow = np.zeros((pmax + 1, pmax + 1))
    ypow = np.zeros((pmax + 1, pmax + 1))
    for a in range(pmax + 1):
        for j in range(a + 1):
            xpow[a, j] = math.comb(a, j) * p0 ** (a - j) * p1 ** j
            ypow[a, j] = math.comb(a, j) * q0 ** (a - j) * q1 ** j
    for i in range(m):
        a = int(exps[i, 0])
        b = int(exps[i, 1])
        for ja in range(a + 1):
            for jb in range(b + 1):
                out[i, ja + jb] += xpow[a, ja] * ypow[b, jb]
    return out


def mgs(gram, npoly, drop_below):
    """Modified Gram-Schmidt with one reorthogonalisation pass.

    Orthonormalises the functions whose Gram matrix is ``gram``, in order.
    Function ``i >= npoly`` is dropped when its residual norm after projection
    is ``<= drop_below[i]``.  Returns ``(coeffs, kept, residual, original)``:
    ``coeffs`` has one row per kept function (raw-basis coefficients), while
    ``residual`` and ``original`` are norms for every raw function.
    """
    n = gram.shape[0]
    basis = []
    kept = np.zeros(n, dtype=bool)
    residual = np.zeros(n)
    original = np.zeros(n)
    for i in range(n):
        v = np.zeros(n)
        v[i] = 1.0
        original[i] = math.sqrt(max(gram[i, i], 0.0))
        for _ in range(2):
            for e in basis:
                v -= (e @ (gram @ v)) * e
        nr2 = v @ (gram @ v)
        nr = math.sqrt(nr2) if nr2 > 0.0 else 0.0
        residual[i] = nr
        if i >= npoly and nr <= drop_below[i]:
            continue
        if nr == 0.0:
            # callers treat a zero polynomial residual as a conditioning failure
            kept[i] = True
            basis.append(np.full(n, np.nan))
            continue
        kept[i] = True
        basis.append(v / nr)
    coeffs = np.array(basis) if basis else np.zeros((0, n))
    return coeffs, kept, residual, original
