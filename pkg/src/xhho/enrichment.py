"""Enrichment functions and the cut-off enrichment space.

An :class:`EnrichmentFunction` bundles value, gradient and Laplacian
callables with the metadata the quadrature dispatch relies on: harmonicity,
singular point and homogeneity.  Callables take ``(n, 2)`` point arrays.
"""
from dataclasses import dataclass
import math

import numpy as np

from .quadrature import Term


@dataclass(frozen=True)
class Homogeneity:
    """``f(c + s y) = s**degree * f(c + y)`` for ``s > 0``."""

    degree: float
    center: tuple


class EnrichmentFunction:
    """A known function added to the local spaces.

    Parameters
    ----------
    value, gradient, laplacian : callable
        ``(n, 2)`` points to ``(n,)``, ``(n, 2)`` and ``(n,)`` arrays.
        ``laplacian`` may be omitted when ``harmonic`` is set.
    harmonic : bool
    singular_point : array_like or None
        Point where the function (or its gradient) is singular.
    homogeneity : Homogeneity or None
    label : str
    """

    def __init__(self, value, gradient, laplacian=None, *, harmonic=False,
                 singular_point=None, homogeneity=None, label=""):
        self._value = value
        self._gradient = gradient
        if laplacian is None:
            if not harmonic:
                raise ValueError("a Laplacian is required for non-harmonic functions")
            laplacian = lambda x: np.zeros(len(x))  # noqa: E731
        self._laplacian = laplacian
        self.harmonic = bool(harmonic)
        self.singular_point = None if singular_point is None else np.asarray(singular_point, dtype=float)
        self.homogeneity = homogeneity
        self.label = label

    def value(self, x):
        return self._value(np.atleast_2d(np.asarray(x, dtype=float)))

    def gradient(self, x):
        return self._gradient(np.atleast_2d(np.asarray(x, dtype=float)))

    def laplacian(self, x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if self.harmonic:
            return np.zeros(len(x))
        return self._laplacian(x)

    def __repr__(self):
        return "EnrichmentFunction(%s)" % self.label

    # -- terms handed to the quadrature dispatch

    def _term(self, fn, shift, power=1):
        # homogeneity degree of the term is power * degree + shift
        if self.singular_point is None:
            return Term(fn, "oscillatory", source=self)
        homog = None
        if self.homogeneity is not None:
            deg = power * self.homogeneity.degree + shift
            homog = (deg, np.asarray(self.homogeneity.center, dtype=float))
        return Term(fn, "singular", homog, self.singular_point, source=self)

    def value_term(self):
        return self._term(self._value, 0.0)

    def gradient_terms(self):
        g = self._gradient
        return (self._term(lambda x: g(x)[:, 0], -1.0), self._term(lambda x: g(x)[:, 1], -1.0))

    def normal_derivative_term(self, normal):
        g = self._gradient
        n = np.asarray(normal, dtype=float)
        return self._term(lambda x: g(x) @ n, -1.0)

    def laplacian_term(self):
        return self._term(self.laplacian, -2.0)

    def gradient_norm2_term(self):
        g = self._gradient
        return self._term(lambda x: (g(x) ** 2).sum(axis=1), -2.0, power=2)


def _wrapped_angle(x, center, theta_offset, omega):
    # angle measured from the first arm, branch cut on the exterior bisector
    y = x - center
    theta = np.arctan2(y[:, 1], y[:, 0])
    gap = 2.0 * np.pi - omega
    phi = np.mod(theta - theta_offset + 0.5 * gap, 2.0 * np.pi) - 0.5 * gap
    return np.hypot(y[:, 0], y[:, 1]), phi


def corner_singular_function(j=1, omega=1.5 * np.pi, theta_offset=0.5 * np.pi, center=(0.0, 0.0)):
    """Singular function of a re-entrant corner of opening ``omega``.

    With ``lam = j pi / omega`` and ``phi = theta - theta_offset``::

        u_j = r^lam sin(lam phi)                          if lam is not an integer
        u_j = r^lam (log r sin(lam phi) + phi cos(lam phi))   otherwise

    Both are harmonic and vanish on the arm ``phi = 0``; the power branch also
    vanishes on ``phi = omega`` while the logarithmic one equals
    ``omega r^lam cos(lam omega)`` there.  Only the power branch carries
    homogeneity metadata.
    """
    if not (np.pi < omega < 2.0 * np.pi):
        raise ValueError("corner opening must lie in (pi, 2 pi), got %r" % omega)
    if int(j) != j or j < 1:
        raise ValueError("j must be a positive integer")
    lam = j * np.pi / omega
    c = np.asarray(center, dtype=float)
    rot = np.array([[math.cos(theta_offset), -math.sin(theta_offset)],
                    [math.sin(theta_offset), math.cos(theta_offset)]])
    logarithmic = abs(lam - round(lam)) < 1e-12
    if logarithmic:
        lam = float(round(lam))

    def zeta(x):
        r, phi = _wrapped_angle(x, c, theta_offset, omega)
        return r, phi

    if not logarithmic:
        def value(x):
            r, phi = zeta(x)
            return r ** lam * np.sin(lam * phi)

        def deriv(x):
            # G(z) = z^lam, G' = lam z^(lam - 1) in the rotated frame
            r, phi = zeta(x)
            return lam * r ** (lam - 1) * np.exp(1j * (lam - 1) * phi)
    else:
        def value(x):
            r, phi = zeta(x)
            with np.errstate(divide="ignore", invalid="ignore"):
                out = r ** lam * (np.log(r) * np.sin(lam * phi) + phi * np.cos(lam * phi))
            return np.where(r > 0, out, 0.0)

        def deriv(x):
            # G(z) = z^lam log z, G' = z^(lam - 1) (lam log z + 1)
            r, phi = zeta(x)
            with np.errstate(divide="ignore", invalid="ignore"):
                zl = r ** (lam - 1) * np.exp(1j * (lam - 1) * phi)
                return zl * (lam * (np.log(r) + 1j * phi) + 1.0)

    def gradient(x):
        d = deriv(x)
        local = np.column_stack([d.imag, d.real])
        return local @ rot.T

    homog = None if logarithmic else Homogeneity(lam, tuple(c))
    label = "corner(j=%d, omega=%.6g%s)" % (j, omega, ", log" if logarithmic else "")
    return EnrichmentFunction(value, gradient, harmonic=True, singular_point=c,
                              homogeneity=homog, label=label)


def oscillatory_function(epsilon=0.05, center=(0.5, 0.5)):
    """``psi = sin(1 / (|x - c|^2 + epsilon))`` with closed-form derivatives.

    With ``s = |x - c|^2`` and ``g(s) = sin(1 / (s + epsilon))``:
    ``grad psi = 2 g'(s) (x - c)`` and ``lap psi = 4 s g''(s) + 4 g'(s)``.
    """
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    c = np.asarray(center, dtype=float)

    def parts(x):
        y = x - c
        s = (y ** 2).sum(axis=1)
        u = 1.0 / (s + epsilon)
        return y, s, u

    def value(x):
        return np.sin(parts(x)[2])

    def gradient(x):
        y, s, u = parts(x)
        g1 = -np.cos(u) * u ** 2
        return 2.0 * g1[:, None] * y

    def laplacian(x):
        y, s, u = parts(x)
        g1 = -np.cos(u) * u ** 2
        g2 = -np.sin(u) * u ** 4 + 2.0 * np.cos(u) * u ** 3
        return 4.0 * s * g2 + 4.0 * g1

    return EnrichmentFunction(value, gradient, laplacian, harmonic=False,
                              label="oscillatory(epsilon=%.6g)" % epsilon)


@dataclass(frozen=True)
class EnrichmentSpace:
    """Enrichment functions and where they are switched on."""

    functions: tuple
    enriched_elements: frozenset
    enriched_faces: frozenset
    gamma: float

    def cell_functions(self, element_index):
        return self.functions if element_index in self.enriched_elements else ()

    def face_functions(self, face_index):
        return self.functions if face_index in self.enriched_faces else ()

    @property
    def harmonic(self):
        return all(f.harmonic for f in self.functions)


def build_enrichment_space(mesh, functions, gamma, singular_point=(0.0, 0.0)):
    """Enrich elements whose centroid is closer than ``gamma`` to ``singular_point``.

    ``gamma = inf`` enriches everything, ``gamma = 0`` nothing.  Faces are
    enriched when at least one neighbouring element is.
    """
    if not gamma >= 0:
        raise ValueError("gamma must be nonnegative")
    functions = tuple(functions)
    if gamma == 0 or not functions:
        return EnrichmentSpace(functions, frozenset(), frozenset(), float(gamma))
    c = np.asarray(singular_point, dtype=float)
    elements = frozenset(
        e.index for e in mesh.elements if np.hypot(*(c - e.centroid)) < gamma
    )
    faces = frozenset(f.index for f in mesh.faces if any(t in elements for t in f.element_indices))
    return EnrichmentSpace(functions, elements, faces, float(gamma))
