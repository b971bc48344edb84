"""Quadrature on segments and polygons.

Three routes are provided and picked by :func:`polygon_moments` and
:func:`segment_moments` from the integrand's metadata (:class:`Term`):

* Gauss rules (Gauss-Legendre on segments, collapsed Gauss-Jacobi on the
  triangles of a fan around the centroid) for smooth integrands and for
  singular ones far from their singular point, and composite Gauss-Legendre
  graded towards the singular point on segments close to it;
* the boundary-reduction recursion for integrands homogeneous about a point,
  which turns every volume integral against scaled monomials into edge
  integrals, and edge integrals on lines through the point into vertex values;
* adaptive composite rules (4-way triangle splitting, segment bisection) for
  oscillatory integrands and non-homogeneous singular volume integrands.  The composite rule itself can be cached and reused.
"""
from functools import lru_cache
import heapq
import logging
import math
import warnings

import numpy as np
from scipy.special import roots_jacobi

from . import kernels
from .mesh import _signed_area_centroid
from .polynomials import (
    dim_2d,
    eval_cell_monomials,
    eval_face_monomials,
    monomial_exponents,
    monomial_index,
    restrict_to_face,
)

log = logging.getLogger(__name__)

# Extra Gauss degree on top of the polynomial part of a smooth integrand.
SMOOTH_EXTRA = 10
# Gauss error target for integrands singular outside the region; the point
# count comes from the Bernstein ellipse reaching the singular point
FAR_TARGET = 1e-16
ADAPTIVE_TOL = 1e-11
RADIAL_TOL = 1e-12
# geometric grading towards a singular point on or next to a segment: ratio,
# deepest level and Gauss points per graded piece (rho**(-2 n) < 1e-16 for
# the Bernstein ellipse of [GRADING, 1] about 0)
GRADING = 0.2
GRADED_LEVELS = 60
GRADED_POINTS = 20

_KIND_RANK = {"smooth": 0, "oscillatory": 1, "singular": 2}


class QuadratureWarning(RuntimeWarning):
    """An adaptive rule stopped before reaching its tolerance."""


class Term:
    """A scalar integrand plus the metadata the dispatch needs.

    Parameters
    ----------
    evaluate : callable
        ``(n, 2)`` points to ``(n,)`` values.
    kind : {"smooth", "singular", "oscillatory"}
        ``singular`` terms blow up (in some derivative) at ``point``;
        ``oscillatory`` terms are smooth but always integrated adaptively.
    homogeneity : tuple (beta, center) or None
        The term satisfies ``f(c + s y) = s^beta f(c + y)``.
    point : array_like or None
        Singular point of a ``singular`` term.
    source : hashable or None
        Key under which adaptive rules built for this term may be cached.
    """

    __slots__ = ("evaluate", "kind", "homogeneity", "point", "source")

    def __init__(self, evaluate, kind="smooth", homogeneity=None, point=None, source=None):
        if kind not in _KIND_RANK:
            raise ValueError("unknown term kind %r" % kind)
        self.evaluate = evaluate
        self.kind = kind
        self.homogeneity = homogeneity
        self.point = None if point is None else np.asarray(point, dtype=float)
        self.source = source

    def __call__(self, x):
        return self.evaluate(np.atleast_2d(x))

    def __mul__(self, other):
        return product(self, other)

    def __repr__(self):
        return "Term(kind=%s, homogeneity=%s)" % (self.kind, self.homogeneity)


def product(a, b):
    """Pointwise product of two terms; homogeneity degrees add when the centres agree."""
    kind = a.kind if _KIND_RANK[a.kind] >= _KIND_RANK[b.kind] else b.kind
    point = a.point if a.point is not None else b.point
    if a.point is not None and b.point is not None and not np.allclose(a.point, b.point):
        raise ValueError("terms with different singular points cannot be combined")
    homog = None
    if a.homogeneity is not None and b.homogeneity is not None:
        (da, ca), (db, cb) = a.homogeneity, b.homogeneity
        if np.allclose(ca, cb):
            homog = (da + db, ca)
    source = a.source if a.kind == "oscillatory" else b.source if b.kind == "oscillatory" else None
    ea, eb = a.evaluate, b.evaluate
    return Term(lambda x: ea(x) * eb(x), kind, homog, point, source)


def smooth_term(fn):
    return Term(fn, "smooth")


# ---------------------------------------------------------------- geometry


class Segment:
    """Straight segment with the ``tau`` parametrisation used by face bases."""

    __slots__ = ("p0", "p1", "midpoint", "tangent", "length", "half")

    def __init__(self, p0, p1):
        self.p0 = np.asarray(p0, dtype=float)
        self.p1 = np.asarray(p1, dtype=float)
        d = self.p1 - self.p0
        self.length = float(np.hypot(d[0], d[1]))
        self.half = 0.5 * self.length
        self.tangent = d / self.length
        self.midpoint = 0.5 * (self.p0 + self.p1)

    @classmethod
    def of_face(cls, face):
        return cls(face.points[0], face.points[1])


def point_segment_distance(c, p0, p1):
    # scalar arithmetic: this is called for every edge integral
    cx, cy = float(c[0]), float(c[1])
    ax, ay = float(p0[0]), float(p0[1])
    dx, dy = float(p1[0]) - ax, float(p1[1]) - ay
    s = min(max(((cx - ax) * dx + (cy - ay) * dy) / (dx * dx + dy * dy), 0.0), 1.0)
    return math.hypot(cx - ax - s * dx, cy - ay - s * dy)


def point_in_polygon(c, pts):
    # winding-number test; points on the boundary count as inside
    wn = 0
    m = len(pts)
    for i in range(m):
        a, b = pts[i], pts[(i + 1) % m]
        cross = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1])
        if a[1] <= c[1] < b[1] and cross > 0:
            wn += 1
        elif b[1] <= c[1] < a[1] and cross < 0:
            wn -= 1
    return wn != 0


def polygon_distance(c, pts):
    """Distance from ``c`` to the closed polygon (0 inside)."""
    c = np.asarray(c, dtype=float)
    if point_in_polygon(c, pts):
        return 0.0
    m = len(pts)
    return min(point_segment_distance(c, pts[i], pts[(i + 1) % m]) for i in range(m))


def polygon_edges(pts):
    """Counter-clockwise edges of a polygon with their outward unit normals."""
    m = len(pts)
    for i in range(m):
        seg = Segment(pts[i], pts[(i + 1) % m])
        yield seg, np.array([seg.tangent[1], -seg.tangent[0]])


def is_radial(seg, c, tol=RADIAL_TOL):
    """Whether ``seg`` lies on a line through ``c``."""
    a = seg.p0 - c
    b = seg.p1 - c
    na, nb = np.hypot(*a), np.hypot(*b)
    scale = seg.length
    if na <= tol * scale or nb <= tol * scale:
        return True
    return abs(a[0] * b[1] - a[1] * b[0]) <= tol * na * nb


# ---------------------------------------------------------------- Gauss rules


@lru_cache(maxsize=None)
def gauss_legendre(n):
    """``n``-point Gauss-Legendre nodes and weights on [-1, 1]."""
    x, w = np.polynomial.legendre.leggauss(int(n))
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def n_points_for(degree):
    return max(int(degree) // 2 + 1, 1)


def far_degree(degree, dist, size):
    """Gauss degree for a degree-``degree`` polynomial times a function
    analytic except at a point ``dist`` away from a region of size ``size``.

    Gauss-Legendre converges like ``rho**(-2 n)`` with ``rho`` the Bernstein
    ellipse through the singular point; placing the point on the axis beyond
    an end is the worst case.
    """
    a = 1.0 + 2.0 * dist / size
    rho = a + math.sqrt(a * a - 1.0)
    n_far = math.ceil(math.log(1.0 / FAR_TARGET) / (2.0 * math.log(rho)))
    return int(degree) + 2 * n_far


def graded_segment_rule(seg, c, degree):
    """Composite Gauss-Legendre rule graded geometrically towards the point
    of ``seg`` closest to ``c``.

    Piece ``j`` covers distances ``[GRADING**(j+1), GRADING**j]`` (relative
    to the distance from the foot to the segment end) until the pieces reach
    the distance of ``c`` from the segment; the last piece touches the foot.
    Integrands of the form ``r**beta`` times an analytic function are
    integrated to near machine precision for ``beta > -1``.  Returns
    ``(points, weights, tau)``.
    """
    c = np.asarray(c, dtype=float)
    d = seg.p1 - seg.p0
    s = float(np.clip(np.dot(c - seg.p0, d) / np.dot(d, d), 0.0, 1.0))
    foot = seg.p1 if s >= 1.0 else seg.p0 + s * d
    delta = float(np.hypot(*(c - foot)))
    x, w = gauss_legendre(max(GRADED_POINTS, n_points_for(degree)))
    u, uw = 0.5 * (x + 1.0), 0.5 * w
    pts, wts = [], []
    for end in (seg.p0, seg.p1):
        ell = float(np.hypot(*(end - foot)))
        if ell <= 1e-14 * seg.length:
            continue
        depth = GRADED_LEVELS
        if delta > 0.0:
            depth = min(depth, max(1, math.ceil(math.log(delta / ell) / math.log(GRADING))))
        edges = GRADING ** np.arange(depth + 1, dtype=float)
        edges = np.append(edges, 0.0)
        lo, hi = edges[1:], edges[:-1]
        t = (lo[:, None] + (hi - lo)[:, None] * u[None, :]).ravel()
        pts.append(foot + np.outer(t, end - foot))
        wts.append(((hi - lo)[:, None] * uw[None, :]).ravel() * ell)
    pts, wts = np.vstack(pts), np.concatenate(wts)
    return pts, wts, (pts - seg.midpoint) @ seg.tangent / seg.half


def segment_rule(seg, degree):
    """Gauss-Legendre rule exact for polynomials of ``degree`` along ``seg``.

    Returns ``(points, weights, tau)``.
    """
    x, w = gauss_legendre(n_points_for(degree))
    pts = seg.midpoint + np.outer(x * seg.half, seg.tangent)
    return pts, w * seg.half, x


@lru_cache(maxsize=None)
def _collapsed_unit(n):
    # tensor rule on [0,1]^2 for int int f(u, v) u du dv
    xj, wj = roots_jacobi(n, 0.0, 1.0)
    xl, wl = gauss_legendre(n)
    u = 0.5 * (1.0 + xj)
    v = 0.5 * (1.0 + xl)
    uu, vv = np.meshgrid(u, v, indexing="ij")
    ww = np.outer(wj / 4.0, wl / 2.0)
    out = (uu.ravel(), vv.ravel(), ww.ravel())
    for arr in out:
        arr.setflags(write=False)
    return out


def triangle_rule(a, b, c, degree=None, n=None):
    """Collapsed Gauss rule on triangle ``abc``, collapsed at vertex ``a``.

    Exact for bivariate polynomials of total ``degree``; the collapse puts a
    Jacobian factor ``|x - a|`` next to ``a``, which softens point
    singularities located there.
    """
    if n is None:
        n = n_points_for(degree)
    u, v, w = _collapsed_unit(n)
    a = np.asarray(a, dtype=float)
    ab = np.asarray(b, dtype=float) - a
    bc = np.asarray(c, dtype=float) - np.asarray(b, dtype=float)
    det = abs(ab[0] * bc[1] - ab[1] * bc[0])
    pts = a + np.outer(u, ab) + np.outer(u * v, bc)
    return pts, w * det


def fan_triangles(pts, apex=None):
    """Fan triangulation of a polygon from ``apex`` (default: area centroid)."""
    pts = np.asarray(pts, dtype=float)
    if apex is None:
        apex = _signed_area_centroid(pts)[1]
    apex = np.asarray(apex, dtype=float)
    m = len(pts)
    scale = max(np.ptp(pts[:, 0]), np.ptp(pts[:, 1])) ** 2
    tris = []
    for i in range(m):
        p, q = pts[i], pts[(i + 1) % m]
        area2 = (p[0] - apex[0]) * (q[1] - apex[1]) - (q[0] - apex[0]) * (p[1] - apex[1])
        if area2 > 1e-14 * scale:
            tris.append((apex, p, q))
        elif area2 < -1e-14 * scale:
            raise ValueError("polygon is not star-shaped with respect to the fan apex")
    return tris


def polygon_rule(pts, degree, apex=None):
    """Gauss rule of total ``degree`` on a polygon star-shaped w.r.t. ``apex``."""
    tris = fan_triangles(pts, apex)
    rules = [triangle_rule(a, b, c, degree) for a, b, c in tris]
    return np.vstack([r[0] for r in rules]), np.concatenate([r[1] for r in rules])


def integrate_polygon(element, integrand, degree_hint):
    """Gauss value of ``integrand`` over an element (or a polygon vertex array)."""
    pts = getattr(element, "points", element)
    x, w = polygon_rule(pts, degree_hint)
    return np.tensordot(w, integrand(x), axes=(0, 0))


# ---------------------------------------------------------------- adaptive rules


class AdaptiveRule:
    """Composite rule produced by an adaptive refinement.

    ``points``/``weights`` form the finest rule; ``estimate`` and ``error``
    are the integrals and error bounds of the driving integrand, and
    ``converged`` tells whether the tolerance was met.
    """

    def __init__(self, points, weights, estimate, error, converged, pieces):
        self.points = points
        self.weights = weights
        self.estimate = estimate
        self.error = error
        self.converged = converged
        self.pieces = pieces

    def integrate(self, fn):
        return np.tensordot(self.weights, fn(self.points), axes=(0, 0))


def _as_2d(vals, n):
    vals = np.asarray(vals, dtype=float)
    if vals.ndim == 1:
        vals = vals.reshape(n, 1)
    return vals.reshape(n, -1)


def _adaptive(pieces, rule_lo, rule_hi, split, fn, tol, max_pieces):
    # global adaptive refinement; error measured per component relative to int |f|
    def evaluate(piece):
        xl, wl = rule_lo(piece)
        xh, wh = rule_hi(piece)
        vals = _as_2d(fn(np.vstack([xl, xh])), len(wl) + len(wh))
        vl, vh = vals[: len(wl)], vals[len(wl):]
        est = wh @ vh
        return est, np.abs(wl @ vl - est), np.abs(wh) @ np.abs(vh), (xh, wh)

    data = {}
    heap = []
    total = absval = err = None
    counter = 0
    for piece in pieces:
        data[counter] = (piece,) + evaluate(piece)
        counter += 1
    ids = list(data)
    total = sum(data[i][1] for i in ids)
    err = sum(data[i][2] for i in ids)
    absval = sum(data[i][3] for i in ids)

    def priority(e):
        return float(np.max(e / np.maximum(absval, 1e-300)))

    for i in ids:
        heapq.heappush(heap, (-priority(data[i][2]), i))
    converged = bool(np.all(err <= tol * absval))
    while not converged and len(data) < max_pieces:
        _, i = heapq.heappop(heap)
        piece, est, e, a, _ = data.pop(i)
        total = total - est
        err = err - e
        absval = absval - a
        for child in split(piece):
            rec = (child,) + evaluate(child)
            data[counter] = rec
            total = total + rec[1]
            err = err + rec[2]
            absval = absval + rec[3]
            heapq.heappush(heap, (-priority(rec[2]), counter))
            counter += 1
        # running sums drift; refresh them now and then
        if counter % 256 == 0:
            recs = list(data.values())
            total = sum(r[1] for r in recs)
            err = sum(r[2] for r in recs)
            absval = sum(r[3] for r in recs)
        converged = bool(np.all(err <= tol * absval))
    recs = list(data.values())
    total = sum(r[1] for r in recs)
    err = sum(r[2] for r in recs)
    pts = np.vstack([r[4][0] for r in recs])
    wts = np.concatenate([r[4][1] for r in recs])
    return AdaptiveRule(pts, wts, total, err, converged, len(recs))


def _split_triangle(tri):
    a, b, c = tri
    ab, bc, ca = 0.5 * (a + b), 0.5 * (b + c), 0.5 * (c + a)
    return [(a, ab, ca), (ab, b, bc), (ca, bc, c), (bc, ca, ab)]


def adaptive_polygon_rule(pts, fn, tol=ADAPTIVE_TOL, singular_point=None, n=6, max_pieces=6000):
    """Adaptive composite rule on a polygon driven by a (vector) integrand.

    When ``singular_point`` lies in the closed polygon the initial fan is
    taken from it, so refinement clusters there.
    """
    pts = np.asarray(pts, dtype=float)
    apex = None
    if singular_point is not None:
        c = np.asarray(singular_point, dtype=float)
        if polygon_distance(c, pts) <= 1e-12 * np.ptp(pts, axis=0).max():
            apex = c
    try:
        tris = fan_triangles(pts, apex)
    except ValueError:
        tris = fan_triangles(pts)
    tris = [tuple(np.asarray(p, dtype=float) for p in t) for t in tris]
    rule = _adaptive(
        tris,
        lambda t: triangle_rule(*t, n=n),
        lambda t: triangle_rule(*t, n=n + 3),
        _split_triangle,
        fn,
        tol,
        max_pieces,
    )
    if not rule.converged:
        warnings.warn(
            "adaptive polygon rule stopped at %d pieces; achieved relative error %.3g"
            % (rule.pieces, float(np.max(rule.error / np.maximum(np.abs(rule.estimate), 1e-300)))),
            QuadratureWarning,
        )
    return rule


def adaptive_segment_rule(seg, fn, tol=ADAPTIVE_TOL, singular_point=None, n=8, max_pieces=4000):
    """Adaptive composite Gauss-Legendre rule on a segment (bisection).

    Points are returned in the plane; the integrand is called on them.
    """

    # pieces are (origin, direction, s0, s1) with points origin + s * direction;
    # sub-segments start at the singular point so that points near it keep
    # full relative precision
    def rule(piece, m):
        origin, direction, s0, s1 = piece
        x, w = gauss_legendre(m)
        s = 0.5 * (s0 + s1) + 0.5 * (s1 - s0) * x
        return origin + np.outer(s, direction), w * 0.5 * abs(s1 - s0) * np.hypot(*direction)

    def split(piece):
        origin, direction, s0, s1 = piece
        mid = 0.5 * (s0 + s1)
        return [(origin, direction, s0, mid), (origin, direction, mid, s1)]

    pieces = [(seg.p0, seg.p1 - seg.p0, 0.0, 1.0)]
    if singular_point is not None:
        c = np.asarray(singular_point, dtype=float)
        d = seg.p1 - seg.p0
        s = float(np.dot(c - seg.p0, d) / np.dot(d, d))
        if -1e-12 < s < 1 + 1e-12:
            foot = seg.p1 if s >= 1.0 else seg.p0 + max(s, 0.0) * d
            pieces = [(foot, end - foot, 0.0, 1.0) for end in (seg.p0, seg.p1)
                      if np.hypot(*(end - foot)) > 1e-14 * seg.length]
    out = _adaptive(
        pieces,
        lambda p: rule(p, n),
        lambda p: rule(p, n + 5),
        split,
        fn,
        tol,
        max_pieces,
    )
    if not out.converged:
        warnings.warn(
            "adaptive segment rule stopped at %d pieces; achieved relative error %.3g"
            % (out.pieces, float(np.max(out.error / np.maximum(np.abs(out.estimate), 1e-300)))),
            QuadratureWarning,
        )
    return out


def adaptive_oracle(region, integrand, tol=1e-10, singular_point=None, full_output=False):
    """Adaptive integral of ``integrand`` over a segment or a polygon.

    ``region`` is a :class:`Segment`, a ``(2, 2)`` endpoint array for a
    segment, or an ``(m, 2)`` vertex array / element for a polygon.  The
    refinement stops once the per-component estimated error is below ``tol``
    relative to the integral of ``|integrand|``; if the piece budget runs
    out first a :class:`QuadratureWarning` carries the achieved accuracy.
    """
    if isinstance(region, Segment):
        rule = adaptive_segment_rule(region, integrand, tol, singular_point)
    else:
        pts = np.asarray(getattr(region, "points", region), dtype=float)
        if pts.shape == (2, 2):
            rule = adaptive_segment_rule(Segment(pts[0], pts[1]), integrand, tol, singular_point)
        else:
            rule = adaptive_polygon_rule(pts, integrand, tol, singular_point)
    value = rule.estimate
    if value.size == 1:
        value = float(value[0])
    if full_output:
        return value, rule
    return value


def adaptive_interval(fn, a, b, tol=1e-10, singular_point=None):
    """Adaptive integral of a scalar function of one variable over [a, b]."""
    seg = Segment((a, 0.0), (b, 0.0))
    sp = None if singular_point is None else (singular_point, 0.0)
    return adaptive_oracle(seg, lambda x: fn(x[:, 0]), tol, sp)


# ---------------------------------------------------------------- homogeneous recursion


def _radial_edge_moments(seg, term, degree):
    beta, c = term.homogeneity
    if 1.0 + beta <= 0.0:
        raise ValueError("edge integral of a degree %g homogeneous function diverges" % beta)
    tol = 1e-13 * seg.length
    ends = np.zeros(degree + 1)
    signs = (-1.0) ** np.arange(degree + 1)
    for p, tau_pow in ((seg.p1, np.ones(degree + 1)), (seg.p0, signs)):
        y = p - c
        if np.hypot(*y) <= tol:
            continue  # |x| f(x) vanishes at the centre since beta > -1
        val = float(np.dot(y, seg.tangent)) * float(term.evaluate(p[None, :])[0])
        ends += (1.0 if p is seg.p1 else -1.0) * val * tau_pow
    kappa = float(np.dot(seg.midpoint - c, seg.tangent)) / seg.half
    return kernels.radial_edge_recursion(ends, kappa, float(beta))


def segment_moments(seg, term, degree, safety=0, cache=None, cache_key=None):
    """``J[j] = int_seg term * tau^j`` for ``j = 0..degree``.

    ``cache`` (a dict) stores adaptive rules of oscillatory terms under
    ``cache_key``.
    """
    degree = int(degree)
    if term.kind == "smooth":
        x, w, tau = segment_rule(seg, degree + SMOOTH_EXTRA + safety)
        return (w * term.evaluate(x)) @ eval_face_monomials(tau, degree)
    if term.kind == "oscillatory":
        rule = _cached_segment_rule(seg, term, degree, cache, cache_key)
        tau = (rule.points - seg.midpoint) @ seg.tangent / seg.half
        return (rule.weights * term.evaluate(rule.points)) @ eval_face_monomials(tau, degree)
    c = term.point
    near = point_segment_distance(c, seg.p0, seg.p1) < seg.length
    if near and term.homogeneity is not None and is_radial(seg, term.homogeneity[1]):
        return _radial_edge_moments(seg, term, degree)
    if near:
        x, w, tau = graded_segment_rule(seg, c, degree + SMOOTH_EXTRA + safety)
        return (w * term.evaluate(x)) @ eval_face_monomials(tau, degree)
    dist = point_segment_distance(c, seg.p0, seg.p1)
    x, w, tau = segment_rule(seg, far_degree(degree, dist, seg.length) + safety)
    return (w * term.evaluate(x)) @ eval_face_monomials(tau, degree)


def _cached_segment_rule(seg, term, degree, cache, key):
    if cache is not None and key is not None and key in cache:
        return cache[key]

    def fn(x):
        tau = (x - seg.midpoint) @ seg.tangent / seg.half
        return term.evaluate(x)[:, None] * eval_face_monomials(tau, degree)

    rule = adaptive_segment_rule(seg, fn)
    if cache is not None and key is not None:
        cache[key] = rule
    return rule


def polygon_moments(pts, center, scale, term, degree, safety=0, cache=None, cache_key=None):
    """``V[i] = int_T term * m_i`` over the scaled cell monomials of total
    degree ``<= degree`` (centre ``center``, scaling ``scale``)."""
    pts = np.asarray(pts, dtype=float)
    degree = int(degree)
    if term.kind == "smooth":
        x, w = polygon_rule(pts, degree + SMOOTH_EXTRA + safety)
        return (w * term.evaluate(x)) @ eval_cell_monomials(x, center, scale, degree)[0]
    if term.kind == "oscillatory":
        rule = cached_polygon_rule(pts, center, scale, term, degree, cache, cache_key)
        return (rule.weights * term.evaluate(rule.points)) @ eval_cell_monomials(
            rule.points, center, scale, degree
        )[0]
    c = term.point
    diam = max(np.hypot(*(p - q)) for p in pts for q in pts)
    near = polygon_distance(c, pts) < diam
    if near and term.homogeneity is not None:
        return homogeneous_volume_moments(pts, center, scale, term, degree, safety)
    if near:
        def fn(x):
            return term.evaluate(x)[:, None] * eval_cell_monomials(x, center, scale, degree)[0]

        return adaptive_polygon_rule(pts, fn, singular_point=c).estimate
    x, w = polygon_rule(pts, far_degree(degree, polygon_distance(c, pts), diam) + safety)
    return (w * term.evaluate(x)) @ eval_cell_monomials(x, center, scale, degree)[0]


def cached_polygon_rule(pts, center, scale, term, degree, cache=None, key=None):
    """Adaptive rule for an oscillatory term against monomials, optionally cached."""
    if cache is not None and key is not None and key in cache:
        return cache[key]

    def fn(x):
        return term.evaluate(x)[:, None] * eval_cell_monomials(x, center, scale, degree)[0]

    rule = adaptive_polygon_rule(pts, fn, singular_point=term.point)
    if cache is not None and key is not None:
        cache[key] = rule
    return rule


def homogeneous_volume_moments(pts, center, scale, term, degree, safety=0, full_output=False):
    """Volume moments of a homogeneous term by boundary reduction.

    With ``y = x - c`` and ``beta`` the degree of homogeneity, for every
    scaled monomial ``m_ab`` of degree ``q``::

        (2 + beta + q) int_T f m_ab = sum_F (x_F - c).n_TF int_F f m_ab
                                      - a s_x int_T f m_{a-1,b} - b s_y int_T f m_{a,b-1}

    with ``s = (center - c) / scale``.  Edges on lines through ``c`` have a
    zero coefficient and are skipped.  ``full_output`` also returns the
    number of recursion levels (distinct total degrees) that were used.
    """
    beta, c = term.homogeneity
    c = np.asarray(c, dtype=float)
    if 2.0 + beta <= 0.0:
        raise ValueError("volume integral of a degree %g homogeneous function diverges" % beta)
    exps = monomial_exponents(degree)
    boundary = np.zeros(len(exps))
    diam = max(np.hypot(*(p - q)) for p in pts for q in pts)
    for seg, normal in polygon_edges(pts):
        coef = float(np.dot(seg.midpoint - c, normal))
        if abs(coef) <= 1e-13 * diam:
            continue
        J = segment_moments(seg, term, degree, safety)
        C = restrict_to_face(center, scale, degree, seg.midpoint, seg.tangent, seg.half)
        boundary += coef * (C @ J)
    shift = (np.asarray(center, dtype=float) - c) / scale
    out = kernels.volume_recursion(boundary, exps, monomial_index(degree), shift, float(beta))
    if full_output:
        return out, len(np.unique(exps.sum(axis=1)))
    return out


# ---------------------------------------------------------------- single-integral API


def _monomial_row(exps):
    a, b = int(exps[0]), int(exps[1])
    return a + b, int(monomial_index(a + b)[a, b])


def integrate_singular_volume(element, term, monomial, safety=0, full_output=False):
    """``int_T f m`` for a homogeneous ``f`` and one scaled monomial ``m``.

    ``monomial`` is an exponent pair ``(a, b)`` in the element's local
    coordinates ``(x - x_T) / h_T``.
    """
    if term.homogeneity is None:
        raise ValueError("boundary reduction needs a homogeneous integrand")
    q, row = _monomial_row(monomial)
    vals, levels = homogeneous_volume_moments(
        element.points, element.centroid, element.diameter, term, q, safety, full_output=True
    )
    return (vals[row], levels) if full_output else vals[row]


def integrate_singular_edge(seg, term, power, safety=0):
    """``int_F f tau^power``; radial edges near the singular point use the
    vertex recursion, other near edges an adaptive rule."""
    return segment_moments(seg, term, power, safety)[power]


def integrate_gradient_stiffness(element, normal_derivative, degree, safety=0):
    """``int_T grad psi . grad m_i`` for all scaled monomials of degree ``<= degree``.

    Uses ``int_T grad psi . grad m = int_dT m grad psi . n`` which holds for
    harmonic ``psi``; ``normal_derivative(n)`` must return the term
    ``grad psi . n``.
    """
    out = np.zeros(dim_2d(degree))
    for seg, normal in polygon_edges(element.points):
        J = segment_moments(seg, normal_derivative(normal), degree, safety)
        C = restrict_to_face(element.centroid, element.diameter, degree, seg.midpoint, seg.tangent, seg.half)
        out += C @ J
    return out
