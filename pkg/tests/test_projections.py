import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from nbadmm import projections as pr
from nbadmm.oracle import even_weight_vectors, project_hull, simplex_vertices

finite = st.floats(-3, 4, allow_nan=False, allow_infinity=False)


def vec(lo, hi):
    return st.integers(lo, hi).flatmap(lambda n: arrays(np.float64, n, elements=finite))


def test_known_parity_projections():
    # interior point is unchanged; (1, 1, 1) is odd and lands on the facet mid-point
    v = np.array([0.2, 0.3, 0.1])
    assert np.allclose(pr.project_parity_polytope(v), v)
    assert np.allclose(pr.project_parity_polytope([1.0, 1.0, 1.0]), [2 / 3] * 3)


def test_parity_projection_of_odd_vertex():
    # (1,0,0) is cut off by the facet x1 - x2 - x3 <= 0
    out = pr.project_parity_polytope([1.0, 0.0, 0.0])
    assert np.allclose(out, [2 / 3, 1 / 3, 1 / 3])


def test_parity_errors():
    with pytest.raises(ValueError, match="dimension"):
        pr.project_parity_polytope([0.5])
    with pytest.raises(ValueError, match="non-finite"):
        pr.project_parity_polytope([0.5, np.nan])


@given(vec(2, 7))
def test_parity_matches_hull(v):
    p = pr.project_parity_polytope(v)
    ref = project_hull(even_weight_vectors(v.size), v)
    assert np.abs(p - ref).max() < 1e-7


@given(vec(2, 9))
def test_parity_idempotent_and_feasible(v):
    p = pr.project_parity_polytope(v)
    assert np.all(p >= -1e-12) and np.all(p <= 1 + 1e-12)
    assert np.allclose(pr.project_parity_polytope(p), p, atol=1e-10)


@given(vec(2, 7), vec(2, 7))
def test_parity_nonexpansive(a, b):
    n = min(a.size, b.size)
    a, b = a[:n], b[:n]
    pa, pb = pr.project_parity_polytope(a), pr.project_parity_polytope(b)
    assert np.linalg.norm(pa - pb) <= np.linalg.norm(a - b) + 1e-9


def test_large_degree_uses_breakpoint_walk():
    rng = np.random.default_rng(0)
    for n in (9, 12):
        for _ in range(20):
            v = rng.normal(0.5, 1.0, n)
            p = pr.project_parity_polytope(v)
            ref = project_hull(even_weight_vectors(n), v)
            assert np.abs(p - ref).max() < 1e-7


@given(vec(1, 9))
def test_simplex_variants_match_hull(v):
    eq = pr.project_simplex(pr.SimplexVariant.SUM_EQ_ONE, v)
    leq = pr.project_simplex(pr.SimplexSpec(pr.SimplexVariant.SUM_LEQ_ONE, v.size), v)
    assert abs(eq.sum() - 1) < 1e-12 and np.all(eq >= 0)
    assert leq.sum() <= 1 + 1e-12 and np.all(leq >= 0)
    assert np.abs(eq - project_hull(simplex_vertices(v.size, False), v)).max() < 1e-7
    assert np.abs(leq - project_hull(simplex_vertices(v.size, True), v)).max() < 1e-7


def test_simplex_examples_and_errors():
    assert np.allclose(pr.project_simplex("eq", [0.0, 0.0]), [0.5, 0.5])
    assert np.allclose(pr.project_simplex("leq", [0.2, -1.0]), [0.2, 0.0])
    with pytest.raises(ValueError, match="expected length"):
        pr.project_simplex(pr.SimplexSpec(pr.SimplexVariant.SUM_EQ_ONE, 3), [1.0, 2.0])


def test_project_rotated_is_conjugation():
    rng = np.random.default_rng(1)
    perm = np.array([2, 0, 1])
    v = rng.normal(size=3)
    out = pr.project_rotated(lambda w: pr.project_simplex("eq", w), perm, v)
    # simplex is permutation invariant, so conjugation gives the plain projection
    assert np.allclose(out, pr.project_simplex("eq", v))
    with pytest.raises(ValueError):
        pr.project_rotated(lambda w: w, perm, np.ones(4))
    assert pr.distance_to_parity_polytope([0.5, 0.5]) == pytest.approx(0.0)
