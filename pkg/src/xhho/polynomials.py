"""Scaled monomial tables in 1D and 2D.

Cell monomials are ``m_ab(x) = xt^a yt^b`` with ``(xt, yt) = (x - x_T) / h_T``,
listed by increasing total degree.  Face monomials are powers of
``tau = (x - x_F) . t_F / (h_F / 2)`` which runs over [-1, 1].
"""
from functools import lru_cache

import numpy as np

from . import kernels


def dim_2d(degree):
    return 0 if degree < 0 else (degree + 1) * (degree + 2) // 2


@lru_cache(maxsize=None)
def _exponents(degree):
    rows = [(d - b, b) for d in range(degree + 1) for b in range(d + 1)]
    out = np.array(rows, dtype=np.int64).reshape(-1, 2)
    out.setflags(write=False)
    return out


def monomial_exponents(degree):
    """``(dim, 2)`` exponents ordered by total degree, then by power of y."""
    return _exponents(int(degree))


@lru_cache(maxsize=None)
def _index(degree):
    idx = np.full((degree + 1, degree + 1), -1, dtype=np.int64)
    for i, (a, b) in enumerate(_exponents(degree)):
        idx[a, b] = i
    idx.setflags(write=False)
    return idx


def monomial_index(degree):
    """``index[a, b]`` = row of ``(a, b)`` in :func:`monomial_exponents`."""
    return _index(int(degree))


@lru_cache(maxsize=None)
def _derivatives(degree):
    # coefficient maps for d/dxt and d/dyt, from P^degree into P^degree
    exps = _exponents(degree)
    idx = _index(degree)
    n = len(exps)
    dx = np.zeros((n, n))
    dy = np.zeros((n, n))
    for i, (a, b) in enumerate(exps):
        if a > 0:
            dx[i, idx[a - 1, b]] = a
        if b > 0:
            dy[i, idx[a, b - 1]] = b
    for arr in (dx, dy):
        arr.setflags(write=False)
    return dx, dy


def derivative_matrices(degree):
    """Matrices ``Dx, Dy`` with row ``i`` the scaled-coordinate derivative of
    monomial ``i`` expanded on the same monomial table."""
    return _derivatives(int(degree))


def embed(coeffs, degree):
    """Pad coefficient rows given on a smaller table to ``dim_2d(degree)``."""
    coeffs = np.atleast_2d(coeffs)
    out = np.zeros((coeffs.shape[0], dim_2d(degree)))
    out[:, : coeffs.shape[1]] = coeffs
    return out


def eval_cell_monomials(points, center, scale, degree):
    """Values, gradients and Laplacians (physical coordinates) of cell monomials."""
    xs = (np.asarray(points, dtype=float) - center) / scale
    v, g, lap = kernels.eval_monomials(xs, monomial_exponents(degree))
    return v, g / scale, lap / scale ** 2


def face_tau(points, midpoint, tangent, half_length):
    return (np.asarray(points, dtype=float) - midpoint) @ tangent / half_length


def eval_face_monomials(tau, degree):
    return np.power.outer(np.asarray(tau, dtype=float), np.arange(degree + 1))


def restrict_to_face(center, scale, degree, midpoint, tangent, half_length):
    """Coefficients in ``tau`` of every cell monomial restricted to a face.

    Returns ``(dim_2d(degree), degree + 1)``.
    """
    p0, q0 = (np.asarray(midpoint) - center) / scale
    p1, q1 = np.asarray(tangent) * half_length / scale
    return kernels.restrict_monomials(
        float(p0), float(p1), float(q0), float(q1), monomial_exponents(degree), int(degree)
    )
