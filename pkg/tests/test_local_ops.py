import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from xhho.assembly import discretize
from xhho.enrichment import build_enrichment_space
from xhho.fields import Field
from xhho.local_ops import local_bilinear, stabilization

from conftest import enrich_all, hexagon_mesh, lower_polygon_mesh, smooth_field

# |grad psi|^2 over [-0.5, 0] x [0, 0.5], scipy polar oracle
GRAD_PSI_SQ_CORNER_CELL = 2.4290234455939069e-01


def psi_field(psi):
    return Field(parts=[(1.0, psi, "value")])


def quadratic_plus(psi=None):
    parts = [(1.0, psi, "value")] if psi is not None else []
    return Field(lambda x: x[:, 0] ** 2,
                 lambda x: np.column_stack([2 * x[:, 0], 0 * x[:, 0]]),
                 lambda x: np.full(len(x), 2.0), parts=parts)


def h1_gap(ops, a, b):
    d = a - b
    return np.sqrt(max(d @ ops.stiffness @ d, 0.0) / max(b @ ops.stiffness @ b, 1e-300))


@pytest.fixture(scope="module")
def enriched(lshape2, psi):
    return {k: discretize(lshape2, k, enrich_all(lshape2, [psi])) for k in (0, 1, 2)}


@pytest.fixture(scope="module")
def plain(lshape2):
    return {k: discretize(lshape2, k) for k in (0, 1, 2)}


def corner_cell(disc):
    return next(ops for ops in disc.operators
                if np.allclose(ops.element.centroid, [-0.25, 0.25]))


@pytest.mark.parametrize("k", [0, 1, 2])
def test_commutation_with_psi(enriched, psi, k):
    v = quadratic_plus(psi)
    for ops in enriched[k].operators:
        assert h1_gap(ops, ops.reconstruct(ops.interpolate(v)), ops.elliptic_project(v)) <= 1e-10


@pytest.mark.parametrize("k", [0, 1, 2])
def test_commutation_on_polygons(k):
    disc = discretize(hexagon_mesh(), k)
    rng = np.random.default_rng(k)
    for _ in range(3):
        v = smooth_field(rng.uniform(-1, 1, 5))
        for ops in disc.operators:
            assert h1_gap(ops, ops.reconstruct(ops.interpolate(v)), ops.elliptic_project(v)) <= 1e-10


@pytest.mark.parametrize("k", [0, 1, 2])
def test_commutation_on_enriched_polygons(psi, k):
    m = lower_polygon_mesh()
    disc = discretize(m, k, enrich_all(m, [psi]))
    rng = np.random.default_rng(10 + k)
    for _ in range(3):
        f = smooth_field(rng.uniform(-1, 1, 5))
        v = Field(f.smooth_value, f.smooth_gradient, f.smooth_laplacian, parts=[(rng.uniform(-1, 1), psi, "value")])
        for ops in disc.operators:
            assert h1_gap(ops, ops.reconstruct(ops.interpolate(v)), ops.elliptic_project(v)) <= 1e-10


@pytest.mark.parametrize("k", [0, 1, 2])
def test_psi_is_reproduced(enriched, psi, k):
    ops = corner_cell(enriched[k])
    pi = ops.elliptic_project(psi_field(psi))
    # the projection keeps the full energy of psi, so it is psi up to a constant
    assert pi @ ops.stiffness @ pi == pytest.approx(GRAD_PSI_SQ_CORNER_CELL, rel=1e-9)
    I = ops.interpolate(psi_field(psi))
    assert h1_gap(ops, ops.reconstruct(I), pi) <= 1e-10
    assert abs(stabilization(ops, I)) <= 1e-10 * (I @ I)
    assert local_bilinear(ops, I) == pytest.approx(GRAD_PSI_SQ_CORNER_CELL, rel=1e-8)


@pytest.mark.parametrize("k", [0, 1, 2])
def test_polynomial_reproduction(plain, k):
    for ops in plain[k].operators:
        c = ops.element.centroid
        v = Field(lambda x: ((x - c) ** (k + 1)).sum(axis=1),
                  lambda x: (k + 1) * (x - c) ** k,
                  lambda x: np.full(len(x), 2.0 * (k + 1) * k) if k else np.zeros(len(x)))
        I = ops.interpolate(v)
        pi = ops.elliptic_project(v)
        assert h1_gap(ops, ops.reconstruct(I), pi) <= 1e-10
        assert abs(stabilization(ops, I)) <= 1e-10 * (I @ I)
        # elliptic projection of a member is exact: same energy as the field itself
        assert pi @ ops.stiffness @ pi > 0


def test_constants(enriched, plain):
    one = Field(lambda x: np.ones(len(x)), lambda x: np.zeros((len(x), 2)), lambda x: np.zeros(len(x)))
    for disc in (enriched[1], plain[2]):
        for ops in disc.operators:
            I = ops.interpolate(one)
            assert local_bilinear(ops, I) == pytest.approx(0.0, abs=1e-12 * (I @ I))
            p = ops.reconstruct(I)
            assert abs(p @ ops.stiffness @ p) <= 1e-20
            # mean of the reconstruction is one
            mean = ops.cell_basis.mass[0] @ p / ops.cell_basis.coeffs[0, 0]
            assert mean == pytest.approx(ops.element.area, rel=1e-12)


@pytest.mark.parametrize("stab", ["l2", "grad", "bdry"])
def test_stabilisations_psd_with_constant_kernel(lshape2, psi, stab):
    disc = discretize(lshape2, 1, enrich_all(lshape2, [psi]), stabilization=stab)
    for ops in disc.operators:
        S, A = ops.stab_matrix, ops.a_matrix
        assert np.abs(S - S.T).max() <= 1e-12 * np.abs(S).max()
        ev = np.linalg.eigvalsh(S)
        assert ev[0] >= -1e-12 * ev[-1]
        ea = np.linalg.eigvalsh(A)
        assert ea[0] >= -1e-12 * ea[-1]
        # a_T has exactly one zero mode (the constants)
        assert np.sum(ea <= 1e-10 * ea[-1]) == 1


def test_non_harmonic_enrichment_needs_l2(psi_osc):
    from xhho.mesh import generate_triangular

    m = generate_triangular("square", 2)
    space = build_enrichment_space(m, [psi_osc], np.inf, (0.5, 0.5))
    for stab in ("grad", "bdry"):
        with pytest.raises(ValueError):
            discretize(m, 0, space, stabilization=stab)
    discretize(m, 0, space, stabilization="l2")


def projector_onto_interpolates(ops):
    """Matrix of ``I p`` acting on local DOFs."""
    R = ops.reconstruction
    rows = [np.linalg.solve(ops.unknown_basis.mass, ops.mass_ub @ R)]
    rows += [np.linalg.solve(Mf, Tf @ R) for Mf, Tf in zip(ops.face_mass, ops.face_trace)]
    return np.vstack(rows)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**31 - 1), st.sampled_from([0, 1, 2]))
def test_stabilisation_depends_on_differences_only(enriched, seed, k):
    rng = np.random.default_rng(seed)
    ops = enriched[k].operators[rng.integers(len(enriched[k].operators))]
    P = projector_onto_interpolates(ops)
    u, v = rng.standard_normal((2, ops.n_local))
    lhs = stabilization(ops, u, v)
    rhs = stabilization(ops, u - P @ u, v - P @ v)
    assert lhs == pytest.approx(rhs, abs=1e-10 * np.sqrt(stabilization(ops, u) * stabilization(ops, v)) + 1e-14)
    # I p is a projector
    np.testing.assert_allclose(P @ P, P, atol=1e-8 * np.abs(P).max())


def test_elliptic_projection_is_stationary(enriched, psi):
    v = quadratic_plus(psi)
    rng = np.random.default_rng(5)
    v2 = smooth_field(rng.uniform(-1, 1, 5))
    for w in (v, v2):
        for ops in enriched[1].operators:
            pi = ops.elliptic_project(w)
            cols, coefs = w.cell_cols()
            g = ops.cell_basis.coeffs @ (ops._cell.stiffness(ops.cell_basis.raw, cols) @ coefs)
            grad = ops.stiffness[1:] @ pi - g[1:]
            assert np.abs(grad).max() <= 1e-9 * max(np.abs(g).max(), 1.0)


def test_l2_projection_idempotent(enriched, psi):
    ops = corner_cell(enriched[2])
    U = ops.unknown_basis
    c = np.random.default_rng(0).standard_normal(U.dim)
    # a member of the space as a field: sum_i c_i u_i in monomials (harmonic psi adds nothing)
    raw = U.coeffs.T @ c
    exps = U.raw.exponents if hasattr(U.raw, "exponents") else None
    from xhho.polynomials import eval_cell_monomials

    el = ops.element
    f = Field(lambda x: eval_cell_monomials(x, el.centroid, el.diameter, 2)[0] @ raw)
    np.testing.assert_allclose(ops.l2_project_cell(f), c, atol=1e-12)
    assert exps is None or len(exps) == len(raw)


def test_psi_best_approximation_improves_with_k(lshape2, psi):
    captured = []
    for k in range(4):
        disc = discretize(lshape2, k, build_enrichment_space(lshape2, [psi], 0.0))
        ops = corner_cell(disc)
        d = ops.l2_project_cell(psi_field(psi))
        captured.append(d @ ops.unknown_basis.mass @ d)
    # ||psi - pi_k psi||^2 = ||psi||^2 - ||pi_k psi||^2 decreases
    assert all(a < b for a, b in zip(captured, captured[1:]))


def test_coercivity_surrogate(enriched):
    rng = np.random.default_rng(1)
    worst = 0.0
    for ops in enriched[1].operators:
        h = ops.element.diameter
        for _ in range(5):
            u = rng.standard_normal(ops.n_local)
            a = local_bilinear(ops, u)
            dt = ops.diff_cell @ u
            worst = max(worst, (dt @ ops.unknown_basis.mass @ dt) / h ** 2 / a)
    assert np.isfinite(worst) and worst <= 1.0 + 1e-12
