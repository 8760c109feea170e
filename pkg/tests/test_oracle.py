import numpy as np
import pytest
from hypothesis import given, strategies as st

from nbadmm import code_model as cm
from nbadmm.embedding import EmbeddingKind, is_valid_spc_embedding
from nbadmm.gf2m import field_new
from nbadmm.oracle import (OracleError, assembled_gram, dense_xupdate_oracle, enumerate_spc,
                           even_weight_vectors, lp_oracle, lp_solution_unique,
                           odd_set_inequalities, phi_matrix, project_constraint_set,
                           project_hull, subset_parity_counts, validate_conjecture_gf4)


def test_enumeration_counts(gf4):
    e = enumerate_spc(gf4, [1, 2, 3])
    assert e.words.shape == (16, 3) and e.d_c == 3
    assert e.flanagan.shape == (16, 3, 3) and e.cw.shape == (16, 4, 3)
    even = enumerate_spc(field_new(1), [1, 1, 1])
    assert sorted(map(tuple, even.words.tolist())) == [(0, 0, 0), (0, 1, 1), (1, 0, 1), (1, 1, 0)]


def test_gf8_enumeration_all_valid(gf8):
    h = [1, 1, 1, 1]
    e = enumerate_spc(gf8, h)
    assert len(e.words) == 512
    for kind in ("flanagan", "cw"):
        assert all(is_valid_spc_embedding(gf8, EmbeddingKind.parse(kind), F, h)
                   for F in e.matrices(kind))


def test_enumeration_guard(gf8):
    with pytest.raises(OracleError):
        enumerate_spc(gf8, [1] * 8)
    with pytest.raises(OracleError):
        enumerate_spc(gf8, [1, 0, 1])


def test_hull_trivial_cases():
    V = even_weight_vectors(4)
    assert np.allclose(project_hull(V, V[3]), V[3])
    w = np.random.default_rng(0).dirichlet(np.ones(len(V)))
    assert np.allclose(project_hull(V, w @ V), w @ V, atol=1e-9)
    p, weights = project_hull(V, np.full(4, 2.0), return_weights=True)
    assert np.allclose(weights @ V, p) and weights.sum() == pytest.approx(1.0)
    with pytest.raises(ValueError):
        project_hull(V, np.zeros(3))


@given(st.lists(st.floats(-2, 3), min_size=4, max_size=4))
def test_hull_certificate(v):
    V = even_weight_vectors(4)
    p = project_hull(V, v)
    assert np.max((np.array(v) - p) @ (V - p).T) <= 1e-8


def test_odd_set_inequalities_cut_odd_vertices():
    A, b = odd_set_inequalities(4)
    assert A.shape == (8, 4)
    for x in np.array(np.meshgrid(*[[0, 1]] * 4)).reshape(4, -1).T:
        assert np.all(A @ x <= b + 1e-12) == (x.sum() % 2 == 0)


def test_dense_oracle_and_phi():
    assert phi_matrix(2).tolist() == [[2, 1, 1], [1, 2, 1], [1, 1, 2]]
    t = np.array([1.0, 2.0, 3.0])
    x = dense_xupdate_oracle(2, 3, t)
    assert np.allclose((3 * phi_matrix(2) + np.eye(3)) @ x, t)


@pytest.mark.parametrize("m", [1, 2, 3])
def test_assembled_gram_is_block_phi(m):
    ctx = field_new(m)
    rng = np.random.default_rng(m)
    h = rng.integers(1, ctx.q, 3)
    G = assembled_gram(ctx, h)
    L = ctx.q - 1
    expect = np.kron(np.eye(3), phi_matrix(m)) if m > 1 else np.eye(3)
    assert G.shape == (3 * L, 3 * L)
    assert np.array_equal(G, expect)


@pytest.mark.parametrize("n", range(2, 6))
def test_subset_parity_counts(n):
    single, joint = subset_parity_counts(n)
    assert single == {2 ** (n - 1)} and joint == {2 ** (n - 2)}


def test_constraint_projection_fixes_codewords(gf4):
    e = enumerate_spc(gf4, [2, 3, 1])
    for F in e.cw[:4]:
        assert np.allclose(project_constraint_set(gf4, "cw", [2, 3, 1], F), F, atol=1e-6)


def test_lp_oracle_integral_on_clean_llr(toy):
    llr = np.tile([2.0, 2.0, 2.0], 4)
    x = lp_oracle(toy, llr, "flanagan")
    assert np.allclose(x, 0, atol=1e-9)
    assert lp_solution_unique(toy, llr, "flanagan")
    assert not lp_solution_unique(toy, np.zeros(12), "flanagan")


def test_conjecture_small_run():
    rep = validate_conjecture_gf4(3, 20, 0)
    assert rep.max_diff < 1e-4 and rep.degraded == 0
    assert "max_diff" in rep.as_text()
    with pytest.raises(ValueError):
        validate_conjecture_gf4(7, 1, 0)
