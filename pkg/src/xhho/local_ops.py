"""Element operators: projectors, reconstruction, interpolator, stabilisation.

Local degrees of freedom of an element are ordered as the cell unknowns
followed by the unknowns of each face, in the element's face order.  All
matrices are expressed in the orthonormalised bases; the computed mass
matrices are used instead of assuming exact orthonormality.
"""
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .errors import ConditioningError
from .integrals import CellCols

STABILIZATIONS = ("l2", "grad", "bdry")
PIVOT_TOL = 1e-14


def _cholesky(mat, owner, what, raw_condition):
    mat = 0.5 * (mat + mat.T)
    if mat.size == 0:
        return None
    try:
        factor = sla.cho_factor(mat, lower=True)
    except (np.linalg.LinAlgError, ValueError):
        raise ConditioningError(
            "element %d: %s matrix is not positive definite" % (owner, what),
            owner, what, raw_condition,
        ) from None
    piv = np.diag(factor[0]) ** 2
    if piv.min() <= PIVOT_TOL * np.abs(mat).max() * len(mat) or not np.all(np.isfinite(piv)):
        raise ConditioningError(
            "element %d: %s matrix has a pivot %.3g below tolerance" % (owner, what, piv.min()),
            owner, what, raw_condition,
        )
    return factor


@dataclass(eq=False)
class LocalOperators:
    """Operators of one element (see module docstring for DOF ordering)."""

    element: object
    cell_basis: object
    unknown_basis: object
    face_bases: list
    offsets: np.ndarray
    stiffness: np.ndarray  # (grad b_i, grad b_j) on the cell basis
    mass_ub: np.ndarray
    lap_ub: np.ndarray
    face_mass: list
    face_trace: list  # (f_a, b_j)_F
    reconstruction: np.ndarray
    stiffness_core: np.ndarray
    stab_matrix: np.ndarray
    a_matrix: np.ndarray
    diff_cell: np.ndarray
    diff_faces: list
    stabilization: str
    _kfactor: tuple = field(repr=False, default=None)
    _cell: object = field(repr=False, default=None)
    _faces: list = field(repr=False, default=None)

    @property
    def n_local(self):
        return int(self.offsets[-1])

    @property
    def n_cell(self):
        return self.unknown_basis.dim

    def face_slice(self, i):
        return slice(self.offsets[i + 1], self.offsets[i + 2])

    # -- projections of data

    def _mean_row(self):
        # (b_j, 1)_T in units of (e_0, 1)_T, e_0 the normalised constant
        return self.cell_basis.mass[:, 0]

    def _close(self, coeffs_rest, mean):
        mb = self._mean_row()
        return (mean - mb[1:] @ coeffs_rest) / mb[0]

    def l2_project_cell(self, v):
        """Coefficients of the L2 projection of a field on the cell unknowns."""
        cols, coefs = v.cell_cols()
        raw = self._cell.mass(self.unknown_basis.raw, cols) @ coefs
        return np.linalg.solve(self.unknown_basis.mass, self.unknown_basis.coeffs @ raw)

    def l2_project_face(self, i, v):
        fb = self.face_bases[i]
        fi = self._faces[i]
        cols, coefs = v.face_cols()
        raw = fi.pair(fb.raw, cols) @ coefs
        return np.linalg.solve(fb.mass, fb.coeffs @ raw)

    def interpolate(self, v):
        """Local DOFs ``(pi_U v, pi_F v for each face)``."""
        parts = [self.l2_project_cell(v)]
        parts += [self.l2_project_face(i, v) for i in range(len(self.face_bases))]
        return np.concatenate(parts)

    def elliptic_project(self, v):
        """Coefficients on the cell basis of the elliptic projection of ``v``."""
        cols, coefs = v.cell_cols()
        b = self.cell_basis
        g = b.coeffs @ (self._cell.stiffness(b.raw, cols) @ coefs)
        mean_raw = self._cell.mass(CellCols(0), cols) @ coefs
        mean = float(mean_raw[0]) * b.coeffs[0, 0]
        rest = sla.cho_solve(self._kfactor, g[1:]) if self._kfactor is not None else np.zeros(0)
        return np.concatenate([[self._close(rest, mean)], rest])

    def reconstruct(self, dofs):
        return self.reconstruction @ dofs

    def cell_mean_weights(self):
        """Row ``w`` with ``w @ dofs = (v_T, e_0)_T``."""
        w = np.zeros(self.n_local)
        w[: self.n_cell] = self.unknown_basis.mass[:, 0]
        return w

    def energy(self, dofs):
        return float(dofs @ self.a_matrix @ dofs)


def build_local_operators(element, cell_basis, unknown_basis, face_bases, cell_int, face_ints,
                          stabilization="l2"):
    """Assemble the operators of one element.

    ``face_bases``/``face_ints`` follow the element's face order.
    """
    if stabilization not in STABILIZATIONS:
        raise ValueError("unknown stabilisation %r" % stabilization)
    B, U = cell_basis, unknown_basis
    if stabilization != "l2" and len(U.raw.extra):
        raise ValueError(
            "stabilisation %r needs harmonic enrichment (polynomial cell unknowns)" % stabilization
        )
    nB, nU = B.dim, U.dim
    dims = [nU] + [fb.dim for fb in face_bases]
    offsets = np.concatenate([[0], np.cumsum(dims)])
    n_loc = int(offsets[-1])

    K = B.coeffs @ cell_int.stiffness(B.raw, B.raw) @ B.coeffs.T
    K = 0.5 * (K + K.T)
    M_ub = U.coeffs @ cell_int.mass(U.raw, B.raw) @ B.coeffs.T
    L_ub = U.coeffs @ cell_int.laplacian_pair(U.raw, B.raw) @ B.coeffs.T

    rhs = np.zeros((nB, n_loc))
    rhs[:, :nU] = -L_ub.T
    face_mass, face_trace, face_u, face_uu = [], [], [], []
    for i, (fb, fi) in enumerate(zip(face_bases, face_ints)):
        seg = fi.seg
        normal = element.outward_normals[i]
        n_raw = fi.pair(fb.raw, cell_int.normal_trace_cols(B.raw, seg, normal))
        rhs[:, offsets[i + 1]:offsets[i + 2]] = (fb.coeffs @ n_raw @ B.coeffs.T).T
        t_raw = fi.pair(fb.raw, cell_int.trace_cols(B.raw, seg))
        face_trace.append(fb.coeffs @ t_raw @ B.coeffs.T)
        face_mass.append(fb.mass)
        if stabilization == "bdry":
            ut = cell_int.trace_cols(U.raw, seg)
            face_u.append(fb.coeffs @ fi.pair(fb.raw, ut) @ U.coeffs.T)
            face_uu.append(U.coeffs @ fi.pair(ut, ut) @ U.coeffs.T)

    kfactor = _cholesky(K[1:, 1:], element.index, "cell stiffness", B.raw_condition)
    R = np.zeros((nB, n_loc))
    if kfactor is not None:
        R[1:] = sla.cho_solve(kfactor, rhs[1:])
    mb = B.mass[:, 0]
    mean_row = np.zeros(n_loc)
    mean_row[:nU] = U.mass[:, 0]
    R[0] = (mean_row - mb[1:] @ R[1:]) / mb[0]

    core = R.T @ K @ R

    # difference operators
    E_u = np.zeros((nU, n_loc))
    E_u[:, :nU] = np.eye(nU)
    D_T = E_u - np.linalg.solve(U.mass, M_ub @ R)
    D_F = []
    for i, fb in enumerate(face_bases):
        E_f = np.zeros((fb.dim, n_loc))
        E_f[:, offsets[i + 1]:offsets[i + 2]] = np.eye(fb.dim)
        D_F.append(E_f - np.linalg.solve(fb.mass, face_trace[i] @ R))

    h = element.diameter
    if stabilization == "l2":
        S = D_T.T @ U.mass @ D_T / h ** 2
        for Df, Mf in zip(D_F, face_mass):
            S += Df.T @ Mf @ Df / h
    elif stabilization == "grad":
        K_u = U.coeffs @ cell_int.stiffness(U.raw, U.raw) @ U.coeffs.T
        S = D_T.T @ K_u @ D_T
        for Df, Mf in zip(D_F, face_mass):
            S += Df.T @ Mf @ Df / h
    else:
        S = np.zeros((n_loc, n_loc))
        for Df, Mf, Tfu, Tuu in zip(D_F, face_mass, face_u, face_uu):
            cross = Df.T @ Tfu @ D_T
            S += (Df.T @ Mf @ Df - cross - cross.T + D_T.T @ Tuu @ D_T) / h
    S = 0.5 * (S + S.T)
    A = core + S
    A = 0.5 * (A + A.T)

    return LocalOperators(
        element=element,
        cell_basis=B,
        unknown_basis=U,
        face_bases=list(face_bases),
        offsets=offsets,
        stiffness=K,
        mass_ub=M_ub,
        lap_ub=L_ub,
        face_mass=face_mass,
        face_trace=face_trace,
        reconstruction=R,
        stiffness_core=0.5 * (core + core.T),
        stab_matrix=S,
        a_matrix=A,
        diff_cell=D_T,
        diff_faces=D_F,
        stabilization=stabilization,
        _kfactor=kfactor,
        _cell=cell_int,
        _faces=list(face_ints),
    )


def stabilization(ops, dofs_u, dofs_v=None):
    """``s_T(u, v)`` for local DOF vectors."""
    dofs_v = dofs_u if dofs_v is None else dofs_v
    return float(dofs_u @ ops.stab_matrix @ dofs_v)


def local_bilinear(ops, dofs_u, dofs_v=None):
    dofs_v = dofs_u if dofs_v is None else dofs_v
    return float(dofs_u @ ops.a_matrix @ dofs_v)
