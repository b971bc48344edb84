"""Global discretisation: local operators on every element, static
condensation onto face unknowns, Dirichlet lifting and the sparse solve.

Global face unknowns are stored face by face in face-index order, each face
contributing a contiguous block of its basis dimension (which varies when an
enrichment slot is dropped).
"""
from dataclasses import dataclass, field
import logging

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .enrichment import EnrichmentSpace
from .errors import ConditioningError, SolverError
from .fields import Field
from .integrals import QuadratureContext
from .local_ops import STABILIZATIONS, build_local_operators
from .spaces import build_cell_basis, build_cell_unknown_basis, build_face_basis

log = logging.getLogger(__name__)

RESIDUAL_TOL = 1e-10
SYMMETRY_TOL = 1e-12


class Discretization:
    """Local bases and operators of a mesh for degree ``k``.

    Parameters
    ----------
    mesh : Mesh
    k : int
        Face and cell unknown degree.
    enrichment : EnrichmentSpace or None
    stabilization : {"l2", "grad", "bdry"}
    quad_safety : int
        Extra Gauss degree added to every non-polynomial rule.
    """

    def __init__(self, mesh, k, enrichment=None, stabilization="l2", quad_safety=0):
        if int(k) != k or k < 0:
            raise ValueError("k must be a nonnegative integer")
        if stabilization not in STABILIZATIONS:
            raise ValueError("unknown stabilisation %r" % stabilization)
        if enrichment is None:
            enrichment = EnrichmentSpace((), frozenset(), frozenset(), 0.0)
        if stabilization != "l2" and enrichment.enriched_elements and not enrichment.harmonic:
            raise ValueError("stabilisation %r needs harmonic enrichment functions" % stabilization)
        self.mesh = mesh
        self.k = int(k)
        self.enrichment = enrichment
        self.stabilization = stabilization
        self.ctx = QuadratureContext(mesh, safety=quad_safety)
        deg = self.k + 1

        self.face_ints = [self.ctx.face(f.index, deg) for f in mesh.faces]
        self.face_bases = [
            build_face_basis(fi, self.k, enrichment.face_functions(fi.face.index))
            for fi in self.face_ints
        ]
        dims = np.array([b.dim for b in self.face_bases], dtype=int)
        self.face_offsets = np.concatenate([[0], np.cumsum(dims)])

        self.cell_ints, self.operators = [], []
        for e in mesh.elements:
            ci = self.ctx.cell(e, deg)
            fns = enrichment.cell_functions(e.index)
            B = build_cell_basis(ci, self.k, fns)
            U = build_cell_unknown_basis(ci, self.k, fns)
            fb = [self.face_bases[f] for f in e.face_indices]
            fi = [self.face_ints[f] for f in e.face_indices]
            self.cell_ints.append(ci)
            self.operators.append(build_local_operators(e, B, U, fb, ci, fi, stabilization))

    @property
    def n_face_dofs(self):
        return int(self.face_offsets[-1])

    def face_dofs(self, face_index):
        return np.arange(self.face_offsets[face_index], self.face_offsets[face_index + 1])

    def element_face_dofs(self, element):
        return np.concatenate([self.face_dofs(f) for f in element.face_indices])

    def cell_condition(self):
        """Largest raw mass-matrix condition number over the cell bases."""
        return max(ops.cell_basis.raw_condition for ops in self.operators)

    def max_orthonormality_defect(self):
        bases = [b for ops in self.operators for b in (ops.cell_basis, ops.unknown_basis)]
        return max(b.orthonormality_defect for b in bases + self.face_bases)

    def project_face(self, face_index, v):
        """L2 projection of a field onto the unknowns of one face."""
        fb, fi = self.face_bases[face_index], self.face_ints[face_index]
        cols, coefs = v.face_cols()
        raw = fi.pair(fb.raw, cols) @ coefs
        return np.linalg.solve(fb.mass, fb.coeffs @ raw)

    def interpolate(self, v):
        """Global interpolant ``(cell DOFs per element, face DOF vector)``."""
        cells = [ops.l2_project_cell(v) for ops in self.operators]
        faces = np.concatenate([self.project_face(f.index, v) for f in self.mesh.faces])
        return cells, faces

    def local_dofs(self, element_index, cell_dofs, face_dofs):
        e = self.mesh.elements[element_index]
        return np.concatenate([cell_dofs[element_index], face_dofs[self.element_face_dofs(e)]])

    def load(self, element_index, f):
        """``(f, u_i)_T`` for the cell unknown basis functions."""
        ops = self.operators[element_index]
        if f.is_zero:
            return np.zeros(ops.n_cell)
        cols, coefs = f.cell_cols()
        U = ops.unknown_basis
        return U.coeffs @ (self.cell_ints[element_index].mass(U.raw, cols) @ coefs)


def discretize(mesh, k, enrichment=None, stabilization="l2", quad_safety=0):
    return Discretization(mesh, k, enrichment, stabilization, quad_safety)


@dataclass(eq=False)
class _Condensed:
    factor: tuple
    a_tf: np.ndarray
    b_t: np.ndarray


@dataclass(eq=False)
class GlobalSystem:
    """Condensed face system with Dirichlet lifting."""

    disc: Discretization
    matrix: sp.csr_matrix
    rhs: np.ndarray
    interior: np.ndarray  # global face DOF indices that are unknown
    boundary: np.ndarray
    lifting: np.ndarray  # values on the boundary DOFs
    local: list = field(repr=False)

    def symmetry_defect(self):
        d = abs(self.matrix - self.matrix.T).max()
        return float(d / max(abs(self.matrix).max(), 1e-300))


@dataclass(eq=False)
class DiscreteSolution:
    disc: Discretization
    cell_dofs: list
    face_dofs: np.ndarray
    reconstructions: list
    residual: float = 0.0

    def local(self, element_index):
        return self.disc.local_dofs(element_index, self.cell_dofs, self.face_dofs)


def _boundary_dofs(disc):
    idx = [disc.face_dofs(f.index) for f in disc.mesh.faces if f.boundary]
    return np.concatenate(idx) if idx else np.zeros(0, dtype=int)


def _lifting(disc, g_D):
    faces = [f for f in disc.mesh.faces if f.boundary]
    if not faces or g_D is None or g_D.is_zero:
        return np.zeros(len(_boundary_dofs(disc)))
    return np.concatenate([disc.project_face(f.index, g_D) for f in faces])


def assemble(disc, f, g_D=None):
    """Condense every element onto its faces and assemble the global system."""
    f = f if f is not None else Field()
    n = disc.n_face_dofs
    rows, cols, vals = [], [], []
    rhs = np.zeros(n)
    local = []
    for e, ops in zip(disc.mesh.elements, disc.operators):
        A = ops.a_matrix
        nT = ops.n_cell
        a_tt, a_tf, a_ff = A[:nT, :nT], A[:nT, nT:], A[nT:, nT:]
        try:
            factor = sla.cho_factor(a_tt, lower=True)
        except np.linalg.LinAlgError:
            raise ConditioningError(
                "element %d: cell block of the local matrix is singular (raw condition %.3g)"
                % (e.index, ops.cell_basis.raw_condition),
                e.index, "cell_block", ops.cell_basis.raw_condition,
            ) from None
        b_t = disc.load(e.index, f)
        x = sla.cho_solve(factor, np.column_stack([a_tf, b_t]))
        S = a_ff - a_tf.T @ x[:, :-1]
        S = 0.5 * (S + S.T)
        g = -a_tf.T @ x[:, -1]
        dofs = disc.element_face_dofs(e)
        rows.append(np.repeat(dofs, len(dofs)))
        cols.append(np.tile(dofs, len(dofs)))
        vals.append(S.ravel())
        np.add.at(rhs, dofs, g)
        local.append(_Condensed(factor, a_tf, b_t))
    M = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n)
    ).tocsr()
    M.sum_duplicates()
    boundary = _boundary_dofs(disc)
    interior = np.setdiff1d(np.arange(n), boundary)
    return GlobalSystem(disc, M, rhs, interior, boundary, _lifting(disc, g_D), local)


def _solve_interior(A, b, solver, cg_tol):
    if A.shape[0] == 0:
        return np.zeros(0)
    if solver == "direct":
        try:
            lu = spla.splu(A.tocsc(), permc_spec="MMD_AT_PLUS_A", diag_pivot_thresh=0.0,
                           options={"SymmetricMode": True})
        except RuntimeError as exc:
            diag = A.diagonal()
            suspects = np.argsort(np.abs(diag))[:5]
            raise SolverError(
                "factorisation failed (%s); smallest diagonal entries at DOFs %s"
                % (exc, ", ".join(map(str, suspects)))
            ) from None
        piv = np.abs(lu.U.diagonal())
        if piv.min() <= 1e-14 * piv.max():
            raise SolverError("factorisation pivot %.3g below tolerance" % piv.min())
        return lu.solve(b)
    if solver == "cg":
        d = A.diagonal()
        if np.any(d <= 0):
            raise SolverError("condensed matrix has a nonpositive diagonal entry")
        pre = sp.diags(1.0 / d)
        x, info = spla.cg(A, b, rtol=cg_tol, atol=0.0, M=pre, maxiter=10 * A.shape[0])
        if info != 0:
            raise SolverError("conjugate gradients did not converge (info=%d)" % info)
        return x
    raise ValueError("unknown solver %r" % solver)


def solve(system, solver="direct", cg_tol=1e-12):
    """Solve the condensed system and recover cell unknowns and reconstructions."""
    disc = system.disc
    A = system.matrix
    I, Bd = system.interior, system.boundary
    A_ii = A[I][:, I]
    b = system.rhs[I] - A[I][:, Bd] @ system.lifting
    x_i = _solve_interior(A_ii, b, solver, cg_tol)
    res_norm = np.linalg.norm(A_ii @ x_i - b)
    ref = max(np.linalg.norm(b), 1e-300)
    residual = res_norm / ref if np.linalg.norm(b) > 0 else res_norm
    tol = RESIDUAL_TOL if solver == "direct" else max(RESIDUAL_TOL, 10 * cg_tol)
    if residual > tol:
        raise SolverError("relative residual %.3g exceeds %.1g" % (residual, tol))
    x = np.zeros(disc.n_face_dofs)
    x[I] = x_i
    x[Bd] = system.lifting
    cells, recon = [], []
    for e, ops, loc in zip(disc.mesh.elements, disc.operators, system.local):
        xf = x[disc.element_face_dofs(e)]
        xt = sla.cho_solve(loc.factor, loc.b_t - loc.a_tf @ xf)
        cells.append(xt)
        recon.append(ops.reconstruct(np.concatenate([xt, xf])))
    return DiscreteSolution(disc, cells, x, recon, float(residual))


def solve_uncondensed(disc, f, g_D=None):
    """Cell and face unknowns solved together; a reference for the condensed path."""
    f = f if f is not None else Field()
    n_cells = [ops.n_cell for ops in disc.operators]
    cell_off = np.concatenate([[0], np.cumsum(n_cells)])
    nc, nf = int(cell_off[-1]), disc.n_face_dofs
    N = nc + nf
    rows, cols, vals = [], [], []
    rhs = np.zeros(N)
    for e, ops in zip(disc.mesh.elements, disc.operators):
        dofs = np.concatenate([np.arange(cell_off[e.index], cell_off[e.index + 1]),
                               nc + disc.element_face_dofs(e)])
        rows.append(np.repeat(dofs, len(dofs)))
        cols.append(np.tile(dofs, len(dofs)))
        vals.append(ops.a_matrix.ravel())
        rhs[dofs[: ops.n_cell]] += disc.load(e.index, f)
    A = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(N, N)).tocsr()
    bd = nc + _boundary_dofs(disc)
    free = np.setdiff1d(np.arange(N), bd)
    x = np.zeros(N)
    x[bd] = _lifting(disc, g_D)
    b = rhs[free] - A[free][:, bd] @ x[bd]
    x[free] = spla.spsolve(A[free][:, free].tocsc(), b)
    cells = [x[cell_off[i]:cell_off[i + 1]] for i in range(len(n_cells))]
    return cells, x[nc:]


def energy_norm(disc, cell_dofs, face_dofs):
    """``a_h(v, v) ** 0.5`` for a global DOF vector."""
    total = 0.0
    for i, ops in enumerate(disc.operators):
        v = disc.local_dofs(i, cell_dofs, face_dofs)
        total += v @ ops.a_matrix @ v
    return float(np.sqrt(max(total, 0.0)))


def global_bilinear(disc, u, v):
    """``a_h(u, v)`` for ``u``, ``v`` given as ``(cell_dofs, face_dofs)``."""
    total = 0.0
    for i, ops in enumerate(disc.operators):
        total += disc.local_dofs(i, *u) @ ops.a_matrix @ disc.local_dofs(i, *v)
    return float(total)


def load_functional(disc, f, cell_dofs):
    """``(f, v_h)`` summed over elements."""
    return float(sum(disc.load(i, f) @ c for i, c in enumerate(cell_dofs)))
