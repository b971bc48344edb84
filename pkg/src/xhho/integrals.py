"""Integrals of products of raw local functions.

A raw function set (:class:`CellCols`, :class:`FaceCols`) lists polynomial
functions as coefficient rows over scaled monomials, followed by "extra"
columns that are not polynomials (enrichment functions, their derivatives,
smooth data).  Polynomial blocks are integrated exactly with Gauss rules;
anything touching an extra column goes through the quadrature dispatch.
"""
import numpy as np

from . import quadrature as quad
from .polynomials import (
    derivative_matrices,
    dim_2d,
    eval_cell_monomials,
    eval_face_monomials,
    restrict_to_face,
)
from .quadrature import Segment, Term


class FnColumn:
    """An enrichment function (``kind="value"``) or its Laplacian."""

    __slots__ = ("fn", "kind")

    def __init__(self, fn, kind="value"):
        if kind not in ("value", "laplacian"):
            raise ValueError(kind)
        self.fn = fn
        self.kind = kind

    def value_term(self):
        return self.fn.value_term() if self.kind == "value" else self.fn.laplacian_term()

    def gradient_terms(self):
        if self.kind != "value":
            raise ValueError("gradient of a Laplacian column is not available")
        return self.fn.gradient_terms()

    def normal_derivative_term(self, normal):
        if self.kind != "value":
            raise ValueError("gradient of a Laplacian column is not available")
        return self.fn.normal_derivative_term(normal)

    def laplacian_term(self):
        if self.kind != "value":
            raise ValueError("Laplacian of a Laplacian column is not available")
        return self.fn.laplacian_term()

    @property
    def harmonic(self):
        return self.kind == "value" and self.fn.harmonic

    @property
    def boundary_reducible(self):
        # int grad psi . grad w = int_dT w grad psi . n needs a harmonic psi
        return self.harmonic and self.fn.singular_point is not None


class SmoothColumn:
    """Smooth data (value, optional gradient and Laplacian callables)."""

    __slots__ = ("value", "gradient", "laplacian")

    def __init__(self, value, gradient=None, laplacian=None):
        self.value = value
        self.gradient = gradient
        self.laplacian = laplacian

    harmonic = False
    boundary_reducible = False

    def value_term(self):
        return Term(self.value, "smooth")

    def gradient_terms(self):
        g = self.gradient
        return Term(lambda x: g(x)[:, 0], "smooth"), Term(lambda x: g(x)[:, 1], "smooth")

    def normal_derivative_term(self, normal):
        g = self.gradient
        n = np.asarray(normal, dtype=float)
        return Term(lambda x: g(x) @ n, "smooth")

    def laplacian_term(self):
        return Term(self.laplacian, "smooth")


class CellCols:
    """Raw functions on an element.

    ``poly`` rows are coefficients over the scaled monomials of total degree
    ``<= degree``; ``extra`` are :class:`FnColumn`/:class:`SmoothColumn`.
    """

    def __init__(self, degree, poly=None, extra=()):
        self.degree = int(degree)
        self.poly = np.eye(dim_2d(degree)) if poly is None else np.atleast_2d(poly)
        self.extra = tuple(extra)

    @property
    def n_poly(self):
        return self.poly.shape[0]

    def __len__(self):
        return self.n_poly + len(self.extra)


class FaceCols:
    """Raw functions on a face: rows over powers of ``tau`` then extra terms."""

    def __init__(self, degree, poly, terms=()):
        self.degree = int(degree)
        self.poly = np.atleast_2d(poly)
        self.terms = tuple(terms)

    @property
    def n_poly(self):
        return self.poly.shape[0]

    def __len__(self):
        return self.n_poly + len(self.terms)


def _pair_blocks(a_poly, b_poly, gram, a_mom, b_mom, ee):
    # assemble [[PP, PE], [EP, EE]] from its pieces
    na, nb = a_poly.shape[0], b_poly.shape[0]
    na_extra, nb_extra = len(a_mom), len(b_mom)
    out = np.empty((na + na_extra, nb + nb_extra))
    out[:na, :nb] = a_poly @ gram @ b_poly.T
    for j, mom in enumerate(b_mom):
        out[:na, nb + j] = a_poly @ mom
    for i, mom in enumerate(a_mom):
        out[na + i, :nb] = b_poly @ mom
    for i in range(na_extra):
        for j in range(nb_extra):
            out[na + i, nb + j] = ee(i, j)
    return out


class QuadratureContext:
    """Shared settings and caches for one discretisation."""

    def __init__(self, mesh=None, safety=0, adaptive_tol=quad.ADAPTIVE_TOL):
        self.mesh = mesh
        self.safety = int(safety)
        self.adaptive_tol = adaptive_tol
        self._faces = {}

    def face(self, index, degree):
        fi = self._faces.get(index)
        if fi is None or fi.max_degree < degree:
            fi = FaceIntegrator(self.mesh.faces[index], self, degree)
            self._faces[index] = fi
        return fi

    def cell(self, element, degree):
        return CellIntegrator(element, self, degree)


class CellIntegrator:
    """Integrals over one element.

    ``max_degree`` bounds the polynomial degree of every raw function that
    will be integrated; adaptive rules for oscillatory functions are built
    against monomials up to that degree.
    """

    def __init__(self, element, ctx=None, max_degree=2):
        self.element = element
        self.ctx = ctx if ctx is not None else QuadratureContext()
        self.center = element.centroid
        self.h = element.diameter
        self.max_degree = int(max_degree)
        self._gram = {}
        self._rules = {}
        self._osc = {}
        self._mom = {}

    # -- building blocks

    def rule(self, degree):
        r = self._rules.get(degree)
        if r is None:
            r = quad.polygon_rule(self.element.points, degree)
            self._rules[degree] = r
        return r

    def gram(self, degree):
        """Exact mass matrix of the scaled monomials of degree ``<= degree``."""
        g = self._gram.get(degree)
        if g is None:
            x, w = self.rule(2 * degree)
            v = eval_cell_monomials(x, self.center, self.h, degree)[0]
            g = (v * w[:, None]).T @ v
            self._gram[degree] = g
        return g

    def _osc_rule(self, fn):
        rule = self._osc.get(fn)
        if rule is None:
            deg = self.max_degree

            def drive(x):
                f = np.column_stack([fn.value(x), fn.gradient(x), fn.laplacian(x)])
                m = eval_cell_monomials(x, self.center, self.h, deg)[0]
                pairs = np.einsum("ni,nj->nij", f, f).reshape(len(x), -1)
                return np.hstack([(f[:, :, None] * m[:, None, :]).reshape(len(x), -1), pairs])

            rule = quad.adaptive_polygon_rule(self.element.points, drive, self.ctx.adaptive_tol)
            self._osc[fn] = rule
        return rule

    def moments(self, term, degree, key=None):
        """``int_T term * m_i`` for scaled monomials of degree ``<= degree``."""
        if key is not None:
            hit = self._mom.get((key, degree))
            if hit is not None:
                return hit
        if term.kind == "oscillatory":
            rule = self._osc_rule(term.source)
            m = eval_cell_monomials(rule.points, self.center, self.h, degree)[0]
            out = (rule.weights * term.evaluate(rule.points)) @ m
        else:
            out = quad.polygon_moments(
                self.element.points, self.center, self.h, term, degree, self.ctx.safety
            )
        if key is not None:
            self._mom[(key, degree)] = out
        return out

    def integrate(self, term):
        return float(self.moments(term, 0)[0])

    # -- pair integrals

    def mass(self, a, b):
        """``M[i, j] = int_T a_i b_j``."""
        deg = max(a.degree, b.degree)
        G = self.gram(deg)
        ap = _pad(a.poly, deg)
        bp = _pad(b.poly, deg)
        b_mom = [self.moments(c.value_term(), deg, key=(c, "v")) for c in b.extra]
        a_mom = [self.moments(c.value_term(), deg, key=(c, "v")) for c in a.extra]

        def ee(i, j):
            return self.integrate(a.extra[i].value_term() * b.extra[j].value_term())

        return _pair_blocks(ap, bp, G, a_mom, b_mom, ee)

    def stiffness(self, a, b):
        """``K[i, j] = int_T grad a_i . grad b_j``."""
        deg = max(a.degree, b.degree)
        Dx, Dy = derivative_matrices(deg)
        G = self.gram(deg)
        ap = _pad(a.poly, deg)
        bp = _pad(b.poly, deg)
        na, nb = len(ap), len(bp)
        out = np.empty((len(a), len(b)))
        out[:na, :nb] = ((ap @ Dx) @ G @ (bp @ Dx).T + (ap @ Dy) @ G @ (bp @ Dy).T) / self.h ** 2
        for j, c in enumerate(b.extra):
            out[:na, nb + j] = ap @ self.gradient_moments(c, deg)
        for i, c in enumerate(a.extra):
            out[na + i, :nb] = bp @ self.gradient_moments(c, deg)
        for i, ca in enumerate(a.extra):
            for j, cb in enumerate(b.extra):
                out[na + i, nb + j] = self.gradient_pair(ca, cb)
        return out

    def gradient_moments(self, col, degree):
        """``int_T grad col . grad m_i`` for all scaled monomials ``m_i``."""
        key = (col, "g", degree)
        hit = self._mom.get(key)
        if hit is not None:
            return hit
        if col.boundary_reducible:
            out = quad.integrate_gradient_stiffness(
                self.element, col.normal_derivative_term, degree, self.ctx.safety
            )
        else:
            Dx, Dy = derivative_matrices(degree)
            tx, ty = col.gradient_terms()
            out = (Dx @ self.moments(tx, degree) + Dy @ self.moments(ty, degree)) / self.h
        self._mom[key] = out
        return out

    def gradient_pair(self, a, b):
        """``int_T grad a . grad b`` for two extra columns."""
        if b.boundary_reducible and not a.boundary_reducible:
            a, b = b, a
        if a.boundary_reducible:
            # int_T grad b . grad a = int_dT b grad a . n for harmonic a
            vb = b.value_term()
            total = 0.0
            for seg, normal in quad.polygon_edges(self.element.points):
                if _flux_vanishes(a.fn, seg, normal, self.ctx.safety):
                    continue
                t = vb * a.normal_derivative_term(normal)
                total += float(quad.segment_moments(seg, t, 0, self.ctx.safety)[0])
            return total
        ax, ay = a.gradient_terms()
        bx, by = b.gradient_terms()
        return self.integrate(ax * bx) + self.integrate(ay * by)

    def laplacian_pair(self, a, b):
        """``L[i, j] = int_T a_i lap(b_j)``."""
        deg = max(a.degree, b.degree)
        Dx, Dy = derivative_matrices(deg)
        G = self.gram(deg)
        ap = _pad(a.poly, deg)
        bp = _pad(b.poly, deg)
        lap = (bp @ (Dx @ Dx + Dy @ Dy)) / self.h ** 2
        na, nb = len(ap), len(bp)
        out = np.zeros((len(a), len(b)))
        out[:na, :nb] = ap @ G @ lap.T
        for i, c in enumerate(a.extra):
            out[na + i, :nb] = lap @ self.moments(c.value_term(), deg, key=(c, "v"))
        for j, c in enumerate(b.extra):
            if c.harmonic:
                continue
            lt = c.laplacian_term()
            out[:na, nb + j] = ap @ self.moments(lt, deg, key=(c, "l"))
            for i, ca in enumerate(a.extra):
                out[na + i, nb + j] = self.integrate(ca.value_term() * lt)
        return out

    # -- data against raw functions

    def trace_cols(self, cols, seg):
        """Restriction of cell functions to a segment, as face columns."""
        C = restrict_to_face(self.center, self.h, cols.degree, seg.midpoint, seg.tangent, seg.half)
        return FaceCols(cols.degree, cols.poly @ C, [c.value_term() for c in cols.extra])

    def normal_trace_cols(self, cols, seg, normal):
        """``grad w . n`` on a segment for every cell function ``w``."""
        deg = cols.degree
        Dx, Dy = derivative_matrices(deg)
        C = restrict_to_face(self.center, self.h, deg, seg.midpoint, seg.tangent, seg.half)
        rows = (cols.poly @ (normal[0] * Dx + normal[1] * Dy)) / self.h
        return FaceCols(deg, rows @ C, [c.normal_derivative_term(normal) for c in cols.extra])


# |grad psi . n| below this fraction of |grad psi| on a whole edge is rounding noise
FLUX_DROP_TOL = 1e-12


def _flux_vanishes(fn, seg, normal, safety=0):
    """Whether ``grad fn . n`` vanishes identically on ``seg`` up to rounding.

    Only radial edges of a homogeneous function can carry an identically
    zero flux; both norms then come from the exact radial recursion.
    """
    if fn.homogeneity is None or not quad.is_radial(seg, fn.singular_point):
        return False
    nd = fn.normal_derivative_term(normal)
    flux2 = quad.segment_moments(seg, nd * nd, 0, safety)[0]
    grad2 = quad.segment_moments(seg, fn.gradient_norm2_term(), 0, safety)[0]
    return abs(flux2) <= FLUX_DROP_TOL ** 2 * grad2


def _pad(poly, degree):
    n = dim_2d(degree)
    if poly.shape[1] == n:
        return poly
    out = np.zeros((poly.shape[0], n))
    out[:, : poly.shape[1]] = poly
    return out


def _pad_tau(poly, degree):
    if poly.shape[1] == degree + 1:
        return poly
    out = np.zeros((poly.shape[0], degree + 1))
    out[:, : poly.shape[1]] = poly
    return out


def tau_gram(seg, degree):
    """Exact ``int_F tau^i tau^j``."""
    p = np.add.outer(np.arange(degree + 1), np.arange(degree + 1))
    return np.where(p % 2 == 0, 2.0 * seg.half / (p + 1.0), 0.0)


class FaceIntegrator:
    """Integrals over one face; shared by its neighbouring elements."""

    def __init__(self, face, ctx=None, max_degree=3):
        self.face = face
        self.seg = Segment.of_face(face)
        self.ctx = ctx if ctx is not None else QuadratureContext()
        self.max_degree = int(max_degree)
        self._osc = {}

    def _osc_rule(self, fn):
        rule = self._osc.get(fn)
        if rule is None:
            seg, deg = self.seg, self.max_degree

            def drive(x):
                f = np.column_stack([fn.value(x), fn.gradient(x), fn.laplacian(x)])
                tau = (x - seg.midpoint) @ seg.tangent / seg.half
                m = eval_face_monomials(tau, deg)
                pairs = np.einsum("ni,nj->nij", f, f).reshape(len(x), -1)
                return np.hstack([(f[:, :, None] * m[:, None, :]).reshape(len(x), -1), pairs])

            rule = quad.adaptive_segment_rule(seg, drive, self.ctx.adaptive_tol)
            self._osc[fn] = rule
        return rule

    def moments(self, term, degree):
        """``int_F term * tau^j`` for ``j <= degree``."""
        if term.kind == "oscillatory":
            rule = self._osc_rule(term.source)
            tau = (rule.points - self.seg.midpoint) @ self.seg.tangent / self.seg.half
            return (rule.weights * term.evaluate(rule.points)) @ eval_face_monomials(tau, degree)
        return quad.segment_moments(self.seg, term, degree, self.ctx.safety)

    def integrate(self, term):
        return float(self.moments(term, 0)[0])

    def pair(self, a, b):
        """``int_F a_i b_j`` for two face column sets."""
        deg = max(a.degree, b.degree)
        ap, bp = _pad_tau(a.poly, deg), _pad_tau(b.poly, deg)
        a_mom = [self.moments(t, deg) for t in a.terms]
        b_mom = [self.moments(t, deg) for t in b.terms]
        return _pair_blocks(
            ap, bp, tau_gram(self.seg, deg), a_mom, b_mom,
            lambda i, j: self.integrate(a.terms[i] * b.terms[j]),
        )

    def raw_cols(self, degree, functions):
        """Face unknown raw functions: ``tau^j`` then ``grad psi . n_F``."""
        return FaceCols(
            degree, np.eye(degree + 1),
            [fn.normal_derivative_term(self.face.normal) for fn in functions],
        )
