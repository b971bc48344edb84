"""Local bases: scaled monomials plus enrichment slots, L2-orthonormalised.

Raw functions are ordered polynomials first, enrichment last, and
orthonormalised by modified Gram-Schmidt (one reorthogonalisation pass) in
the raw mass inner product.  Enrichment slots whose residual after
projection is negligible are dropped; a retained function whose residual
sits at the rounding floor of the Gram matrix is a conditioning failure.
"""
from dataclasses import dataclass, field
import logging

import numpy as np

from . import kernels
from .errors import ConditioningError
from .integrals import CellCols, FaceCols, FnColumn

log = logging.getLogger(__name__)

DROP_TOL = 1e-12
# residual / original norm below this means the Gram matrix cannot resolve the
# function any more; it corresponds to a raw condition number of about 1e14,
# two digits above the rounding floor of the residual
FAILURE_RATIO = 1e-7
CONDITION_LIMIT = 1.0 / FAILURE_RATIO ** 2
ORTHONORMALITY_TOL = 1e-10


@dataclass(eq=False)
class LocalBasis:
    """Orthonormalised local basis.

    ``coeffs`` has one row per basis function and one column per retained
    raw function; ``raw`` no longer contains the ``dropped`` slots (indices in
    the original raw numbering).  ``mass`` is the computed mass matrix of the
    basis, the identity up to rounding.
    """

    owner: int
    kind: str
    raw: object
    coeffs: np.ndarray
    dropped: tuple
    raw_condition: float
    mass: np.ndarray
    raw_gram: np.ndarray = field(repr=False)
    orthonormality_defect: float = 0.0

    @property
    def dim(self):
        return self.coeffs.shape[0]

    @property
    def n_raw(self):
        return self.coeffs.shape[1]

    def transform(self, raw_matrix, side="left"):
        """Express a raw-function matrix in this basis along one axis."""
        if side == "left":
            return self.coeffs @ raw_matrix
        return raw_matrix @ self.coeffs.T


def orthonormalize(gram, n_poly, owner, kind, drop_ref=None, raw=None):
    """Gram-Schmidt on a raw Gram matrix.

    Parameters
    ----------
    gram : (n, n) array
        Raw mass matrix.
    n_poly : int
        Leading polynomial functions, never dropped.
    drop_ref : (n,) array, optional
        Reference norms for the drop test of each slot; defaults to the raw
        norms.  Slot ``i >= n_poly`` is dropped when its residual is
        ``<= DROP_TOL * drop_ref[i]``.
    """
    gram = 0.5 * (gram + gram.T)
    n = gram.shape[0]
    diag = np.sqrt(np.clip(np.diag(gram), 0.0, None))
    if np.any(diag[:n_poly] == 0.0) or not np.all(np.isfinite(gram)):
        raise ConditioningError(
            "%s basis on %d: degenerate raw mass matrix" % (kind, owner), owner, kind, np.inf
        )
    ref = diag.copy() if drop_ref is None else np.asarray(drop_ref, dtype=float)
    # work with unit-diagonal raw functions; zero slots stay zero
    scale = np.where(diag > 0, diag, 1.0)
    g = gram / np.outer(scale, scale)
    drop_below = np.zeros(n)
    drop_below[n_poly:] = DROP_TOL * ref[n_poly:] / scale[n_poly:]
    coeffs, kept, residual, original = kernels.mgs(g, n_poly, drop_below)
    dropped = tuple(int(i) for i in np.flatnonzero(~kept))
    # a residual of exactly zero is below what the Gram matrix resolves (about
    # sqrt(eps)); it only certifies dependence when the function itself is
    # negligible against its reference norm
    for i in dropped:
        if residual[i] == 0.0 and diag[i] > DROP_TOL * ref[i]:
            raise ConditioningError(
                "%s basis on %d: raw function %d is numerically dependent "
                "(residual below Gram resolution)" % (kind, owner, i),
                owner, kind, _condition(gram),
            )
    for i in dropped:
        log.info("%s basis on %d: raw function %d dropped (residual %.3g)", kind, owner, i, residual[i])
    kept_idx = np.flatnonzero(kept)
    retained = gram[np.ix_(kept_idx, kept_idx)]
    raw_condition = _condition(retained)
    ratio = residual[kept_idx] / np.where(original[kept_idx] > 0, original[kept_idx], 1.0)
    bad = np.flatnonzero(~np.isfinite(ratio) | (ratio <= FAILURE_RATIO) | ~np.all(np.isfinite(coeffs), axis=1))
    if not bad.size and not raw_condition < CONDITION_LIMIT:
        bad = np.array([int(np.argmin(ratio))])
    if bad.size:
        raise ConditioningError(
            "%s basis on %d: raw function %d is numerically dependent "
            "(relative residual %.3g, raw condition %.3g)"
            % (kind, owner, int(kept_idx[bad[0]]), float(ratio[bad[0]]), raw_condition),
            owner, kind, raw_condition,
        )
    coeffs = coeffs / scale[None, :]
    if dropped:
        # dropped slots leave the raw set so no integral ever touches them again
        coeffs = coeffs[:, kept_idx]
        gram = gram[np.ix_(kept_idx, kept_idx)]
        raw = _without(raw, [i - n_poly for i in dropped]) if raw is not None else None
    mass = coeffs @ gram @ coeffs.T
    defect = float(np.max(np.abs(mass - np.eye(len(mass))))) if len(mass) else 0.0
    if defect > ORTHONORMALITY_TOL:
        # one more sweep in the computed basis usually restores orthonormality
        q2, _, _, _ = kernels.mgs(mass, len(mass), np.zeros(len(mass)))
        if np.all(np.isfinite(q2)):
            coeffs = q2 @ coeffs
            mass = coeffs @ gram @ coeffs.T
            defect = float(np.max(np.abs(mass - np.eye(len(mass)))))
        if defect > ORTHONORMALITY_TOL:
            # rounding floor of Q G Q^T is about eps * raw_condition; the
            # computed mass is used downstream so this is only reported
            log.warning("%s basis on %d: orthonormality defect %.3g (raw condition %.3g)",
                        kind, owner, defect, raw_condition)
    return LocalBasis(owner, kind, raw, coeffs, dropped, raw_condition, mass, gram, defect)


def _without(raw, extra_indices):
    skip = set(extra_indices)
    if isinstance(raw, FaceCols):
        return FaceCols(raw.degree, raw.poly, [t for i, t in enumerate(raw.terms) if i not in skip])
    return CellCols(raw.degree, raw.poly, [c for i, c in enumerate(raw.extra) if i not in skip])


def _condition(m):
    if m.size == 0:
        return 1.0
    ev = np.linalg.eigvalsh(0.5 * (m + m.T))
    if ev[0] <= 0:
        return np.inf
    return float(ev[-1] / ev[0])


def build_cell_basis(integrator, k, functions=()):
    """Basis of the extended cell space: monomials of degree ``<= k + 1`` then
    each enrichment function."""
    raw = CellCols(k + 1, extra=[FnColumn(fn, "value") for fn in functions])
    gram = integrator.mass(raw, raw)
    return orthonormalize(gram, raw.n_poly, integrator.element.index, "cell_extended", raw=raw)


def build_cell_unknown_basis(integrator, k, functions=()):
    """Basis of the cell unknowns: monomials of degree ``<= k`` then the
    Laplacian of each non-harmonic enrichment function."""
    extra = [FnColumn(fn, "laplacian") for fn in functions if not fn.harmonic]
    raw = CellCols(k, extra=extra)
    gram = integrator.mass(raw, raw)
    return orthonormalize(gram, raw.n_poly, integrator.element.index, "cell_unknown", raw=raw)


def build_face_basis(face_integrator, k, functions=()):
    """Basis of the face unknowns: powers of ``tau`` up to ``k`` then
    ``grad psi . n_F`` for each enrichment function.

    The drop test for an enrichment slot is relative to ``|| |grad psi| ||_F``
    so that a normal derivative vanishing identically on the face (up to
    rounding) is removed.
    """
    raw = face_integrator.raw_cols(k, functions)
    gram = face_integrator.pair(raw, raw)
    ref = np.sqrt(np.clip(np.diag(gram), 0.0, None))
    for i, fn in enumerate(functions):
        norm2 = face_integrator.integrate(fn.gradient_norm2_term())
        ref[k + 1 + i] = np.sqrt(max(norm2, 0.0))
    return orthonormalize(gram, k + 1, face_integrator.face.index, "face_unknown", drop_ref=ref, raw=raw)


def max_condition(bases):
    """Largest raw mass-matrix condition number over a collection of bases."""
    return max((b.raw_condition for b in bases), default=1.0)
