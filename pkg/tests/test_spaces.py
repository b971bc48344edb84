import numpy as np
import pytest

from xhho.enrichment import build_enrichment_space
from xhho.errors import ConditioningError
from xhho.integrals import QuadratureContext
from xhho.mesh import Mesh, generate_triangular
from xhho.spaces import (
    build_cell_basis,
    build_cell_unknown_basis,
    build_face_basis,
    max_condition,
    orthonormalize,
)

from conftest import lower_polygon_mesh

UNIT = np.array([[0, 0], [1, 0], [1, 1], [0, 1.0]])
TOUCHING = np.array([[-0.5, 0.0], [0.0, 0.0], [0.0, 0.5], [-0.5, 0.5]])


def single(pts):
    m = Mesh(pts, [list(range(len(pts)))])
    return m, QuadratureContext(m)


def gram_of(rows):
    V = np.array(rows, dtype=float)
    return V @ V.T


def test_unit_square_k0():
    m, ctx = single(UNIT)
    b = build_cell_basis(ctx.cell(m.elements[0], 1), 0)
    assert b.dim == 3 and b.kind == "cell_extended"
    np.testing.assert_allclose(b.mass, np.eye(3), atol=1e-14)
    assert np.allclose(np.triu(b.coeffs, 1), 0.0)  # Gram-Schmidt: lower triangular


def test_enriched_cell_dims(psi, psi_osc):
    m, ctx = single(TOUCHING)
    ci = ctx.cell(m.elements[0], 2)
    assert build_cell_basis(ci, 1, [psi]).dim == 7
    assert build_cell_unknown_basis(ctx.cell(m.elements[0], 3), 2, [psi]).dim == 6
    assert build_cell_unknown_basis(ci, 1).dim == 3
    m2, ctx2 = single(UNIT)
    U = build_cell_unknown_basis(ctx2.cell(m2.elements[0], 1), 0, [psi_osc])
    assert U.dim == 2
    np.testing.assert_allclose(U.mass, np.eye(2), atol=1e-10)


def test_face_bases_on_radial_faces(psi, tri_lshape):
    radial = {}
    for f in tri_lshape.faces:
        p = f.points
        if np.all(p[0] == 0) or np.all(p[1] == 0):
            q = p[1] if np.all(p[0] == 0) else p[0]
            radial[f.index] = np.degrees(np.arctan2(q[1], q[0])) % 360
    ctx = QuadratureContext(tri_lshape)
    for k in (0, 1, 2):
        for idx, angle in radial.items():
            b = build_face_basis(ctx.face(idx, k + 1), k, [psi])
            if np.isclose(angle, 225.0):
                assert b.dropped == (k + 1,) and b.dim == k + 1
            else:
                assert b.dropped == () and b.dim == k + 2
        assert build_face_basis(ctx.face(0, k + 1), k, []).dim == k + 1


def test_orthonormality_on_polygons(psi):
    m = lower_polygon_mesh()
    ctx = QuadratureContext(m)
    for e in m.elements:
        for k in (0, 1, 2):
            B = build_cell_basis(ctx.cell(e, k + 1), k, [psi])
            assert B.dim == (k + 2) * (k + 3) // 2 + 1
            # Q G Q^T carries a rounding error of about eps * cond(G)
            bound = max(1e-10, 100 * np.finfo(float).eps * B.raw_condition)
            assert np.abs(B.mass - np.eye(B.dim)).max() <= bound
            if B.raw_condition < 1e5:
                assert B.orthonormality_defect <= 1e-10


def test_polynomials_first_and_exactly_represented(psi):
    m, ctx = single(TOUCHING)
    B = build_cell_basis(ctx.cell(m.elements[0], 2), 1, [psi])
    # the first six basis functions use monomials only
    assert np.all(B.coeffs[:6, 6:] == 0.0)


def test_gamma_zero_gives_standard_dims(psi, lshape2):
    from xhho.assembly import discretize

    d = discretize(lshape2, 1, build_enrichment_space(lshape2, [psi], 0.0))
    assert all(ops.cell_basis.dim == 6 and ops.unknown_basis.dim == 3 for ops in d.operators)
    assert all(b.dim == 2 for b in d.face_bases)


def test_drop_rule_synthetic():
    e1, e2, e3 = np.eye(3)
    # an identically negligible slot is dropped
    b = orthonormalize(gram_of([e1, e2, 0 * e3]), 2, 0, "cell_extended")
    assert b.dropped == (2,) and b.dim == 2
    # negligible against a supplied reference norm
    b = orthonormalize(gram_of([e1, e2, 1e-14 * e3]), 2, 0, "face_unknown", drop_ref=np.ones(3))
    assert b.dropped == (2,)
    # clearly independent: kept
    b = orthonormalize(gram_of([e1, e2, e1 + 1e-3 * e3]), 2, 0, "cell_extended")
    assert b.dropped == () and b.dim == 3
    np.testing.assert_allclose(b.mass, np.eye(3), atol=1e-10)


@pytest.mark.parametrize("delta", [0.0, 1e-13, 1e-9])
def test_numerical_dependence_is_a_failure(delta):
    e1, e2, e3 = np.eye(3)
    with pytest.raises(ConditioningError) as info:
        orthonormalize(gram_of([e1, e2, e1 + delta * e3]), 2, 7, "cell_extended")
    assert info.value.owner == 7 and info.value.kind == "cell_extended"


def test_degenerate_polynomial_block():
    with pytest.raises(ConditioningError):
        orthonormalize(np.diag([1.0, 0.0]), 2, 0, "cell_extended")


def test_far_small_element_fails_at_high_degree(psi):
    s = 0.2
    m, ctx = single(np.array([[-1, -1], [-1 + s, -1], [-1 + s, -1 + s], [-1, -1 + s]]))
    B = build_cell_basis(ctx.cell(m.elements[0], 2), 1, [psi])
    assert B.raw_condition > 1e9
    with pytest.raises(ConditioningError):
        build_cell_basis(ctx.cell(m.elements[0], 4), 3, [psi])


def test_max_condition(psi, lshape4):
    b = orthonormalize(np.eye(4), 4, 0, "cell_extended")
    assert max_condition([b]) == 1.0
    from xhho.assembly import discretize

    conds = [discretize(lshape4, 1, build_enrichment_space(lshape4, [psi], g)).cell_condition()
             for g in (0.0, 0.2, 0.6)]
    assert conds[0] < conds[1] < conds[2]


def test_raw_condition_is_of_retained_functions(psi):
    m = generate_triangular("l_shape", 2)
    ctx = QuadratureContext(m)
    face = next(f for f in m.faces if np.allclose(sorted(map(tuple, f.points)), [(-0.5, -0.5), (0.0, 0.0)]))
    b = build_face_basis(ctx.face(face.index, 2), 1, [psi])
    assert b.dropped and b.n_raw == 2 and np.isfinite(b.raw_condition)
