"""Polygonal meshes: construction, generation, text I/O and geometry.

Faces are derived from the element polygons.  Interior face normals point
from the lower-index element to the higher-index one; boundary normals point
out of the domain.
"""
from dataclasses import dataclass
import logging

import numpy as np

from .errors import MeshError, MeshParseError

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class Face:
    index: int
    vertex_indices: tuple
    element_indices: tuple
    points: np.ndarray  # (2, 2) endpoints in vertex order
    diameter: float
    midpoint: np.ndarray
    tangent: np.ndarray
    normal: np.ndarray
    boundary: bool


@dataclass(frozen=True, eq=False)
class Element:
    index: int
    polygon: tuple
    points: np.ndarray  # (m, 2) counter-clockwise
    face_indices: tuple
    face_signs: np.ndarray  # +1 where n_TF = n_F, -1 otherwise
    outward_normals: np.ndarray  # (m, 2), one per face
    diameter: float
    centroid: np.ndarray
    area: float


def element_diameter(points):
    """Largest pairwise distance between the vertices of a polygon."""
    pts = np.asarray(points, dtype=float)
    diff = pts[:, None, :] - pts[None, :, :]
    return float(np.sqrt((diff ** 2).sum(-1)).max())


def _signed_area_centroid(pts):
    x, y = pts[:, 0], pts[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cross = x * yn - xn * y
    area = 0.5 * cross.sum()
    if area == 0.0:
        return 0.0, pts.mean(axis=0)
    cx = ((x + xn) * cross).sum() / (6.0 * area)
    cy = ((y + yn) * cross).sum() / (6.0 * area)
    return area, np.array([cx, cy])


def _segments_cross(p, q, r, s):
    # proper intersection of segments pq and rs (shared endpoints excluded)
    def orient(a, b, c):
        return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])

    d1, d2 = orient(r, s, p), orient(r, s, q)
    d3, d4 = orient(p, q, r), orient(p, q, s)
    return d1 * d2 < 0 and d3 * d4 < 0


def _is_simple(pts):
    m = len(pts)
    for i in range(m):
        for j in range(i + 2, m):
            if i == 0 and j == m - 1:
                continue
            if _segments_cross(pts[i], pts[(i + 1) % m], pts[j], pts[(j + 1) % m]):
                return False
    return True


class Mesh:
    """Immutable polygonal mesh.

    Parameters
    ----------
    vertices : array_like, shape (nv, 2)
    polygons : sequence of sequences of int
        Vertex loops, one per element, counter-clockwise.
    """

    def __init__(self, vertices, polygons):
        self.vertices = np.array(vertices, dtype=float)
        self.vertices.setflags(write=False)
        if self.vertices.ndim != 2 or self.vertices.shape[1] != 2:
            raise MeshError("vertices must have shape (nv, 2)")
        if not np.all(np.isfinite(self.vertices)):
            raise MeshError("non-finite vertex coordinates")
        nv = len(self.vertices)

        loops = []
        for t, poly in enumerate(polygons):
            loop = [int(i) for i in poly]
            if len(loop) < 3:
                raise MeshError("element %d: open polygon with %d vertices" % (t, len(loop)))
            if len(set(loop)) != len(loop):
                raise MeshError("element %d: repeated vertex in polygon" % t)
            if min(loop) < 0 or max(loop) >= nv:
                raise MeshError("element %d: vertex index out of range" % t)
            pts = self.vertices[loop]
            area, _ = _signed_area_centroid(pts)
            if area == 0.0:
                raise MeshError("element %d: zero area" % t)
            if area < 0.0:
                log.warning("element %d given clockwise; reversing", t)
                loop = loop[::-1]
            if not _is_simple(self.vertices[loop]):
                raise MeshError("element %d: self-intersecting polygon" % t)
            loops.append(tuple(loop))

        face_of = {}
        face_verts = []
        face_elems = []
        elem_faces = []
        elem_signs = []
        for t, loop in enumerate(loops):
            fids, signs = [], []
            for i in range(len(loop)):
                a, b = loop[i], loop[(i + 1) % len(loop)]
                key = (a, b) if a < b else (b, a)
                f = face_of.get(key)
                if f is None:
                    f = len(face_verts)
                    face_of[key] = f
                    face_verts.append((a, b))
                    face_elems.append([t])
                    signs.append(1.0)
                else:
                    if len(face_elems[f]) >= 2:
                        raise MeshError("face %s shared by more than two elements" % (key,))
                    if face_verts[f] != (b, a):
                        raise MeshError(
                            "elements %d and %d traverse face %s inconsistently"
                            % (face_elems[f][0], t, key)
                        )
                    face_elems[f].append(t)
                    signs.append(-1.0)
                fids.append(f)
            elem_faces.append(tuple(fids))
            elem_signs.append(np.array(signs))

        faces = []
        for f, (a, b) in enumerate(face_verts):
            p = self.vertices[[a, b]]
            d = p[1] - p[0]
            length = float(np.hypot(d[0], d[1]))
            if length == 0.0:
                raise MeshError("face %d has zero length" % f)
            tangent = d / length
            normal = np.array([tangent[1], -tangent[0]])
            for arr in (p, tangent, normal):
                arr.setflags(write=False)
            mid = 0.5 * (p[0] + p[1])
            mid.setflags(write=False)
            faces.append(
                Face(
                    index=f,
                    vertex_indices=(a, b),
                    element_indices=tuple(face_elems[f]),
                    points=p,
                    diameter=length,
                    midpoint=mid,
                    tangent=tangent,
                    normal=normal,
                    boundary=len(face_elems[f]) == 1,
                )
            )

        elements = []
        for t, loop in enumerate(loops):
            pts = self.vertices[list(loop)]
            area, centroid = _signed_area_centroid(pts)
            signs = elem_signs[t]
            normals = np.array([faces[f].normal * s for f, s in zip(elem_faces[t], signs)])
            for arr in (pts, signs, normals, centroid):
                arr.setflags(write=False)
            elements.append(
                Element(
                    index=t,
                    polygon=loop,
                    points=pts,
                    face_indices=elem_faces[t],
                    face_signs=signs,
                    outward_normals=normals,
                    diameter=element_diameter(pts),
                    centroid=centroid,
                    area=float(area),
                )
            )

        self.faces = tuple(faces)
        self.elements = tuple(elements)
        self.h = max(e.diameter for e in self.elements) if elements else 0.0

    @property
    def n_elements(self):
        return len(self.elements)

    @property
    def n_faces(self):
        return len(self.faces)

    @property
    def n_internal_faces(self):
        return sum(1 for f in self.faces if not f.boundary)

    @property
    def n_boundary_faces(self):
        return sum(1 for f in self.faces if f.boundary)

    def regularity_surrogate(self):
        """Smallest ratio of face length to adjacent element diameter."""
        ratio = np.inf
        for e in self.elements:
            for f in e.face_indices:
                ratio = min(ratio, self.faces[f].diameter / e.diameter)
        return float(ratio)

    def __repr__(self):
        return "Mesh(%d elements, %d faces, h=%.4g)" % (self.n_elements, self.n_faces, self.h)


def _grid(domain, n):
    if n < 1:
        raise ValueError("cells_per_unit must be >= 1")
    if domain == "square":
        lo, ncell = 0.0, n
    elif domain == "l_shape":
        lo, ncell = -1.0, 2 * n
    else:
        raise ValueError("unknown domain %r" % domain)
    coords = lo + np.arange(ncell + 1) / n
    xs, ys = np.meshgrid(coords, coords, indexing="xy")
    verts = np.column_stack([xs.ravel(), ys.ravel()])

    def vid(i, j):
        return j * (ncell + 1) + i

    cells = []
    for j in range(ncell):
        for i in range(ncell):
            if domain == "l_shape" and i >= n and j >= n:
                continue
            cells.append((vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)))
    return verts, cells


def _compact(verts, polys):
    used = sorted({v for p in polys for v in p})
    remap = {v: k for k, v in enumerate(used)}
    return verts[used], [tuple(remap[v] for v in p) for p in polys]


def generate_cartesian(domain, cells_per_unit):
    """Uniform axis-aligned square cells of side ``1 / cells_per_unit``.

    ``domain`` is ``"square"`` for (0,1)^2 or ``"l_shape"`` for
    (-1,1)^2 minus [0,1]^2.
    """
    verts, cells = _grid(domain, cells_per_unit)
    return Mesh(*_compact(verts, cells))


def generate_triangular(domain, cells_per_unit):
    """Cartesian cells split along the lower-left to upper-right diagonal."""
    verts, cells = _grid(domain, cells_per_unit)
    tris = []
    for a, b, c, d in cells:
        tris.append((a, b, c))
        tris.append((a, c, d))
    return Mesh(*_compact(verts, tris))


def write_mesh(mesh, stream):
    """Write ``mesh`` in the plain text format read by :func:`read_mesh`."""
    stream.write("%d %d\n" % (len(mesh.vertices), mesh.n_elements))
    for x, y in mesh.vertices:
        stream.write("%.17g %.17g\n" % (x, y))
    for e in mesh.elements:
        stream.write("%d %s\n" % (len(e.polygon), " ".join(str(i) for i in e.polygon)))


def read_mesh(stream):
    """Parse a mesh file.

    Format: a header ``NV NE``, then ``NV`` lines ``x y``, then ``NE`` lines
    ``m i1 ... im`` listing 0-based vertex indices counter-clockwise.  Blank
    lines are ignored.
    """
    lines = [(no, ln.split()) for no, ln in enumerate(stream, start=1)]
    lines = [(no, tok) for no, tok in lines if tok]
    if not lines:
        raise MeshParseError("empty mesh file", 1)
    no, tok = lines[0]
    if len(tok) != 2:
        raise MeshParseError("expected header 'NV NE'", no)
    try:
        nv, ne = int(tok[0]), int(tok[1])
    except ValueError:
        raise MeshParseError("non-integer header", no) from None
    if nv < 3 or ne < 1:
        raise MeshParseError("need at least 3 vertices and 1 element", no)
    if len(lines) < 1 + nv + ne:
        last = lines[-1][0]
        raise MeshParseError("file ends early: expected %d records" % (nv + ne), last)
    verts = np.empty((nv, 2))
    for k in range(nv):
        no, tok = lines[1 + k]
        if len(tok) != 2:
            raise MeshParseError("expected 'x y'", no)
        try:
            verts[k] = float(tok[0]), float(tok[1])
        except ValueError:
            raise MeshParseError("bad coordinate", no) from None
    polys = []
    for k in range(ne):
        no, tok = lines[1 + nv + k]
        try:
            vals = [int(v) for v in tok]
        except ValueError:
            raise MeshParseError("non-integer polygon record", no) from None
        if vals[0] != len(vals) - 1:
            raise MeshParseError("polygon declares %d vertices, lists %d" % (vals[0], len(vals) - 1), no)
        polys.append(vals[1:])
    if len(lines) > 1 + nv + ne:
        raise MeshParseError("trailing data", lines[1 + nv + ne][0])
    return Mesh(verts, polys)
