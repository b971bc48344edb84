import numpy as np
import pytest
import scipy.sparse as sp

from xhho.assembly import (
    assemble,
    discretize,
    energy_norm,
    global_bilinear,
    load_functional,
    solve,
    solve_uncondensed,
)
from xhho.enrichment import build_enrichment_space
from xhho.fields import Field
from xhho.mesh import Mesh, generate_cartesian, generate_triangular
from xhho.problems import corner, linear, quadratic

from conftest import enrich_all, hexagon_mesh, smooth_field

# ||grad psi||^2 over the L-shape (-1,1)^2 minus the first quadrant, polar oracle
GRAD_PSI_SQ_LSHAPE = 1.8362266618751624


def energy_error(disc, sol, exact):
    ci, fi = disc.interpolate(exact)
    diff = [a - b for a, b in zip(sol.cell_dofs, ci)]
    return energy_norm(disc, diff, sol.face_dofs - fi), energy_norm(disc, ci, fi)


def test_homogeneous_problem_has_zero_solution(lshape2):
    disc = discretize(lshape2, 1)
    sol = solve(assemble(disc, Field(), Field()))
    assert np.all(sol.face_dofs == 0) and all(np.all(c == 0) for c in sol.cell_dofs)


@pytest.mark.parametrize("k", [0, 1, 2])
@pytest.mark.parametrize("mesh", ["cart", "tri", "poly"])
def test_linear_solution_is_exact(k, mesh):
    m = {"cart": generate_cartesian("l_shape", 2), "tri": generate_triangular("l_shape", 2),
         "poly": hexagon_mesh()}[mesh]
    p = linear()
    disc = discretize(m, k)
    sol = solve(assemble(disc, p.source, p.dirichlet))
    num, den = energy_error(disc, sol, p.exact)
    assert num <= 1e-10 * den


@pytest.mark.parametrize("k", [0, 1, 2])
def test_corner_function_is_exact_with_global_enrichment(lshape2, k):
    p = corner()
    disc = discretize(lshape2, k, enrich_all(lshape2, p.enrichment))
    sol = solve(assemble(disc, p.source, p.dirichlet))
    num, den = energy_error(disc, sol, p.exact)
    assert num <= 1e-8 * den


def test_single_square_k0():
    m = Mesh(np.array([[0, 0], [1, 0], [1, 1], [0, 1.0]]), [[0, 1, 2, 3]])
    p = linear("square")
    disc = discretize(m, 0)
    system = assemble(disc, p.source, p.dirichlet)
    assert system.matrix.shape == (4, 4) and len(system.interior) == 0
    sol = solve(system)
    # face unknowns are face means of x + y, scaled by the orthonormal constant 1/sqrt(|F|)
    means = np.array([f.midpoint.sum() for f in m.faces])
    np.testing.assert_allclose(sol.face_dofs, means, atol=1e-13)
    # the cell unknown is the mean of x + y over the square
    cell = sol.cell_dofs[0][0] * disc.operators[0].unknown_basis.coeffs[0, 0]
    assert cell == pytest.approx(1.0, abs=1e-13)


@pytest.mark.parametrize("k", [0, 1, 2])
def test_condensed_matrix_symmetric_and_residual(lshape4, psi, k):
    p = quadratic()
    disc = discretize(lshape4, k, build_enrichment_space(lshape4, [psi], 0.3))
    system = assemble(disc, smooth_field([1, 2, 1, 0.5, 1]), p.dirichlet)
    assert system.symmetry_defect() <= 1e-12
    sol = solve(system)
    assert sol.residual <= 1e-10
    # positive definite on the interior unknowns
    A = system.matrix[system.interior][:, system.interior].toarray()
    np.linalg.cholesky(A)


@pytest.mark.parametrize("stab", ["l2", "grad", "bdry"])
@pytest.mark.parametrize("k", [0, 1, 2])
def test_condensation_equivalence(psi, stab, k):
    m = generate_cartesian("l_shape", 2)  # 12 elements
    disc = discretize(m, k, build_enrichment_space(m, [psi], 0.4), stab)
    f, g = smooth_field([1.0, 2.0, -1.0, 0.3, 0.7]), smooth_field([0.5, 1.0, 1.0, -1.0, 0.2])
    sol = solve(assemble(disc, f, g))
    cells, faces = solve_uncondensed(disc, f, g)
    assert np.abs(sol.face_dofs - faces).max() <= 1e-10 * np.abs(faces).max()
    for a, b in zip(sol.cell_dofs, cells):
        np.testing.assert_allclose(a, b, atol=1e-10 * np.abs(faces).max())


def test_galerkin_orthogonality(lshape4, psi):
    disc = discretize(lshape4, 1, build_enrichment_space(lshape4, [psi], 0.3))
    f = smooth_field([1.0, 3.0, 1.0, 0.0, 0.0])
    sol = solve(assemble(disc, f, Field()))
    rng = np.random.default_rng(3)
    bd = np.concatenate([disc.face_dofs(fc.index) for fc in lshape4.faces if fc.boundary])
    scale = energy_norm(disc, sol.cell_dofs, sol.face_dofs)
    for _ in range(10):
        cells = [rng.standard_normal(ops.n_cell) for ops in disc.operators]
        faces = rng.standard_normal(disc.n_face_dofs)
        faces[bd] = 0.0
        lhs = global_bilinear(disc, (sol.cell_dofs, sol.face_dofs), (cells, faces))
        rhs = load_functional(disc, f, cells)
        assert abs(lhs - rhs) <= 1e-10 * scale * energy_norm(disc, cells, faces)


def test_energy_norm_of_interpolated_corner_function(psi):
    m = generate_cartesian("l_shape", 2)
    disc = discretize(m, 1, enrich_all(m, [psi]))
    ci, fi = disc.interpolate(Field(parts=[(1.0, psi, "value")]))
    assert energy_norm(disc, ci, fi) ** 2 == pytest.approx(GRAD_PSI_SQ_LSHAPE, rel=1e-7)


def test_energy_norm_basics(lshape2):
    disc = discretize(lshape2, 1)
    zero = [np.zeros(ops.n_cell) for ops in disc.operators]
    assert energy_norm(disc, zero, np.zeros(disc.n_face_dofs)) == 0.0
    rng = np.random.default_rng(0)
    cells = [rng.standard_normal(ops.n_cell) for ops in disc.operators]
    faces = rng.standard_normal(disc.n_face_dofs)
    n1 = energy_norm(disc, cells, faces)
    n2 = energy_norm(disc, [2 * c for c in cells], 2 * faces)
    assert n2 == pytest.approx(2 * n1, rel=1e-12)


def test_cg_matches_direct(lshape4, psi):
    disc = discretize(lshape4, 2, build_enrichment_space(lshape4, [psi], 0.3))
    p = quadratic()
    system = assemble(disc, smooth_field([1, 2, 1, 0.5, 1]), p.dirichlet)
    a, b = solve(system, "direct"), solve(system, "cg", 1e-13)
    assert np.abs(a.face_dofs - b.face_dofs).max() <= 1e-9 * np.abs(a.face_dofs).max()


def test_face_dof_layout_follows_face_order(tri_lshape, psi):
    disc = discretize(tri_lshape, 1, enrich_all(tri_lshape, [psi]))
    dims = [b.dim for b in disc.face_bases]
    assert 2 in dims and 3 in dims  # one radial face lost its enrichment slot
    np.testing.assert_array_equal(np.diff(disc.face_offsets), dims)


def test_assembled_matrix_is_sparse(lshape4):
    system = assemble(discretize(lshape4, 1), Field())
    assert sp.issparse(system.matrix)
    # each face couples with at most its two elements' faces
    nnz_per_row = np.diff(system.matrix.indptr)
    assert nnz_per_row.max() <= 2 * (4 + 3) * 2


def test_invalid_arguments(lshape2, psi_osc):
    with pytest.raises(ValueError):
        discretize(lshape2, -1)
    with pytest.raises(ValueError):
        discretize(lshape2, 1, stabilization="h1")
    with pytest.raises(ValueError):
        solve(assemble(discretize(lshape2, 0), Field()), solver="gmres")
