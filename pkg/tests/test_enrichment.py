import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from xhho.enrichment import build_enrichment_space, corner_singular_function, oscillatory_function


def sample_lshape(rng, n, min_r=0.1):
    """Points in (-1,1)^2 minus the first quadrant, at least ``min_r`` from the origin."""
    out = []
    while len(out) < n:
        p = rng.uniform(-1, 1, 2)
        if (p[0] > 0 and p[1] > 0) or np.hypot(*p) < min_r:
            continue
        out.append(p)
    return np.array(out)


def fd_gradient(f, x, h=1e-6):
    ex, ey = np.array([h, 0.0]), np.array([0.0, h])
    return np.column_stack([(f(x + ex) - f(x - ex)) / (2 * h), (f(x + ey) - f(x - ey)) / (2 * h)])


def fd_laplacian(f, x, h=1e-4):
    ex, ey = np.array([h, 0.0]), np.array([0.0, h])
    return (f(x + ex) + f(x - ex) + f(x + ey) + f(x - ey) - 4 * f(x)) / h ** 2


def test_corner_examples(psi):
    assert psi.value(np.array([[0.0, 1.0]]))[0] == pytest.approx(0.0, abs=1e-15)
    assert psi.homogeneity.degree == pytest.approx(2 / 3)
    x = np.array([[0.3, -0.4]])
    assert psi.gradient(x)[0] @ x[0] == pytest.approx(2 / 3 * psi.value(x)[0], rel=1e-12)
    assert psi.harmonic and np.all(psi.laplacian(x) == 0)


def test_corner_vanishes_on_both_arms():
    t = np.linspace(0.01, 1.0, 9)
    up = np.column_stack([0 * t, t])
    right = np.column_stack([t, 0 * t])  # theta = 2 pi arm
    for j in (1, 2, 4):
        fn = corner_singular_function(j)
        np.testing.assert_allclose(fn.value(up), 0.0, atol=1e-14)
        np.testing.assert_allclose(fn.value(right), 0.0, atol=1e-14)


def test_logarithmic_branch_on_the_arms():
    # j = 3 with omega = 3 pi / 2 gives lam = 2: only the first arm is a zero set
    t = np.linspace(0.01, 1.0, 9)
    fn = corner_singular_function(3)
    np.testing.assert_allclose(fn.value(np.column_stack([0 * t, t])), 0.0, atol=1e-14)
    np.testing.assert_allclose(fn.value(np.column_stack([t, 0 * t])), 1.5 * np.pi * t ** 2 * np.cos(3 * np.pi))


def test_logarithmic_branch_has_no_homogeneity():
    fn = corner_singular_function(3)
    assert fn.homogeneity is None and fn.harmonic
    assert "log" in fn.label


@pytest.mark.parametrize("j", [1, 2, 3])
def test_corner_harmonic_and_gradient(j):
    fn = corner_singular_function(j)
    x = sample_lshape(np.random.default_rng(j), 50)
    # keep finite differences away from the branch cut in the removed quadrant
    assert np.abs(fd_laplacian(fn.value, x)).max() <= 1e-4
    g, fd = fn.gradient(x), fd_gradient(fn.value, x)
    np.testing.assert_allclose(g, fd, rtol=1e-6, atol=1e-6 * np.abs(g).max())


def test_euler_identity_at_random_points(psi):
    x = sample_lshape(np.random.default_rng(0), 100, min_r=1e-3)
    f = psi.value(x)
    lhs = (psi.gradient(x) * x).sum(axis=1)
    assert np.all(np.abs(lhs - 2 / 3 * f) <= 1e-10 * (np.abs(2 / 3 * f) + 1))


@settings(max_examples=40, deadline=None)
@given(st.floats(0.05, 1.0), st.floats(math.pi / 2 + 0.01, 2 * math.pi - 0.01), st.floats(0.01, 20.0))
def test_homogeneity_scaling(r, theta, lam):
    psi = corner_singular_function()
    x = np.array([[r * math.cos(theta), r * math.sin(theta)]])
    assert psi.value(lam * x)[0] == pytest.approx(lam ** (2 / 3) * psi.value(x)[0], rel=1e-12, abs=1e-14)


@pytest.mark.parametrize("omega", [math.pi, 2 * math.pi, 0.5, 7.0])
def test_invalid_opening(omega):
    with pytest.raises(ValueError):
        corner_singular_function(1, omega=omega)


def test_general_opening_exponent():
    fn = corner_singular_function(1, omega=1.25 * math.pi)
    assert fn.homogeneity.degree == pytest.approx(0.8)


def test_oscillatory_examples(psi_osc):
    c = np.array([[0.5, 0.5]])
    assert psi_osc.value(c)[0] == pytest.approx(math.sin(20.0), rel=1e-14)
    np.testing.assert_array_equal(psi_osc.gradient(c)[0], [0.0, 0.0])
    assert not psi_osc.harmonic and psi_osc.homogeneity is None and psi_osc.singular_point is None
    x = np.random.default_rng(1).uniform(0, 1, (20, 2))
    np.testing.assert_allclose(psi_osc.laplacian(x), fd_laplacian(psi_osc.value, x), rtol=1e-5,
                               atol=1e-5 * np.abs(psi_osc.laplacian(x)).max())
    g = psi_osc.gradient(x)
    np.testing.assert_allclose(g, fd_gradient(psi_osc.value, x), rtol=1e-6, atol=1e-6 * np.abs(g).max())


def test_oscillatory_rejects_nonpositive_epsilon():
    with pytest.raises(ValueError):
        oscillatory_function(0.0)


def test_cutoff_sets(psi, lshape2, lshape4):
    from xhho.mesh import generate_cartesian

    assert not build_enrichment_space(lshape2, [psi], 0.15).enriched_elements
    assert not build_enrichment_space(lshape4, [psi], 0.15).enriched_elements
    assert len(build_enrichment_space(generate_cartesian("l_shape", 8), [psi], 0.15).enriched_elements) == 3
    full = build_enrichment_space(lshape2, [psi], np.inf)
    assert full.enriched_elements == frozenset(range(lshape2.n_elements))
    assert full.enriched_faces == frozenset(range(lshape2.n_faces))
    none = build_enrichment_space(lshape2, [psi], 0.0)
    assert not none.enriched_elements and not none.enriched_faces


def test_cutoff_faces_two_routes(psi, lshape4):
    assert lshape4.n_elements == 48
    space = build_enrichment_space(lshape4, [psi], 0.2)
    touching = {e.index for e in lshape4.elements if np.any(np.all(e.points == 0.0, axis=1))}
    assert space.enriched_elements == touching
    by_elements = {f for t in space.enriched_elements for f in lshape4.elements[t].face_indices}
    by_definition = {f.index for f in lshape4.faces if set(f.element_indices) & touching}
    assert space.enriched_faces == by_elements == by_definition


def test_cutoff_rejects_negative_gamma(psi, lshape2):
    with pytest.raises(ValueError):
        build_enrichment_space(lshape2, [psi], -1.0)
