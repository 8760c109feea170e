import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from nbadmm import embedding as em
from nbadmm.embedding import EmbeddingError, EmbeddingKind, EmbeddingVec
from nbadmm.gf2m import field_new

FL, CW = EmbeddingKind.FLANAGAN, EmbeddingKind.CONSTANT_WEIGHT


def test_parse_and_lengths():
    assert EmbeddingKind.parse("cw") is CW
    assert EmbeddingKind.parse(FL) is FL
    with pytest.raises(ValueError):
        EmbeddingKind.parse("bogus")
    assert em.symbol_length(FL, 8) == 7
    assert em.symbol_length(CW, 8) == 8


def test_embed_symbol(gf4):
    assert em.embed_symbol(gf4, FL, 0).tolist() == [0, 0, 0]
    assert em.embed_symbol(gf4, FL, 2).tolist() == [0, 1, 0]
    assert em.embed_symbol(gf4, CW, 0).tolist() == [1, 0, 0, 0]
    with pytest.raises(EmbeddingError):
        em.embed_symbol(gf4, CW, 4)


@given(st.lists(st.integers(0, 7), min_size=1, max_size=12), st.sampled_from([FL, CW]))
def test_embed_decode_roundtrip(c, kind):
    ctx = field_new(3)
    v = em.embed_word(ctx, kind, c)
    assert em.is_integral(v)
    assert em.decode_word(v).tolist() == c
    assert v.matrix.shape == (em.symbol_length(kind, 8), len(c))


@given(st.lists(st.integers(0, 3), min_size=1, max_size=10))
def test_flanagan_cw_conversion(c):
    ctx = field_new(2)
    f = em.embed_word(ctx, FL, c)
    w = em.embed_word(ctx, CW, c)
    assert np.array_equal(em.flanagan_to_cw(f).data, w.data)
    assert np.array_equal(em.cw_to_flanagan(w).data, f.data)


def test_decode_rejects_fractional(gf4):
    v = EmbeddingVec(CW, 4, np.full(4, 0.25))
    with pytest.raises(EmbeddingError, match="fractional"):
        em.decode_word(v)
    with pytest.raises(EmbeddingError, match="l1"):
        em.flanagan_to_cw(EmbeddingVec(FL, 4, np.array([0.6, 0.6, 0.0])))


def test_toy_check_validity(gf4):
    # codeword of the check (1, 2, 3): 1*1 + 2*1 + 3*1 = 0 in GF(4)
    h = [1, 2, 3]
    F = np.stack([em.embed_symbol(gf4, FL, a) for a in (1, 1, 1)], axis=1)
    assert em.is_valid_spc_embedding(gf4, FL, F, h)
    F[:, 2] = em.embed_symbol(gf4, FL, 2)
    assert not em.is_valid_spc_embedding(gf4, FL, F, h)
    with pytest.raises(EmbeddingError, match="dimension mismatch"):
        em.is_valid_spc_embedding(gf4, FL, F[:, :2], h)


@pytest.mark.parametrize("m,d", [(2, 3), (3, 3)])
def test_validity_equals_codeword_membership(m, d):
    ctx = field_new(m)
    rng = np.random.default_rng(m * 10 + d)
    for _ in range(3):
        h = rng.integers(1, ctx.q, d)
        for c in itertools.product(range(ctx.q), repeat=d):
            member = int(np.bitwise_xor.reduce(ctx.mul_table[h, list(c)])) == 0
            for kind in (FL, CW):
                F = np.stack([em.embed_symbol(ctx, kind, a) for a in c], axis=1)
                assert em.is_valid_spc_embedding(ctx, kind, F, h) == member
                assert em.is_valid_spc_embedding_redundant(ctx, kind, F, h) == member


def test_non_integral_matrix_is_not_valid(gf4):
    F = np.full((3, 3), 0.2)
    assert not em.is_valid_spc_embedding(gf4, FL, F, [1, 1, 1])


@given(st.lists(st.integers(0, 3), min_size=3, max_size=3),
       st.lists(st.integers(0, 3), min_size=3, max_size=3))
def test_relative_map_is_involution_and_shifts(c, x):
    ctx = field_new(2)
    v = em.embed_word(ctx, CW, x)
    r = em.relative_map(ctx, v, c)
    assert em.decode_word(r).tolist() == [a ^ b for a, b in zip(x, c)]
    assert np.array_equal(em.relative_map_inverse(ctx, r, c).data, v.data)


def test_relative_map_needs_cw(gf4):
    with pytest.raises(EmbeddingError):
        em.relative_map(gf4, em.embed_word(gf4, FL, [1]), [1])


def test_validity_accepts_stacks(gf4):
    h = [1, 2, 3]
    good = np.stack([em.embed_symbol(gf4, FL, 1)] * 3, axis=1)
    bad = good.copy()
    bad[:, 0] = 0.5
    out = em.is_valid_spc_embedding(gf4, FL, np.stack([good, bad, np.zeros_like(good)]), h)
    assert out.tolist() == [True, False, True]
