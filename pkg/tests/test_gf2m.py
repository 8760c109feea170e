import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from nbadmm import gf2m
from nbadmm.gf2m import FieldError, field_new


def test_gf8_integer_table():
    ctx = field_new(3)
    # powers of xi for x^3 + x + 1
    assert ctx.exp_table.tolist() == [1, 2, 4, 3, 6, 7, 5]
    assert gf2m.mul(ctx, 4, 6) == 5
    assert gf2m.div(ctx, 5, 4) == 6
    assert gf2m.bits(ctx, 6) == (0, 1, 1)


def test_gf4_b_sets():
    ctx = field_new(2)
    expect = {(1, 1): {1, 3}, (2, 1): {2, 3}, (1, 2): {2, 3}, (2, 2): {1, 2},
              (1, 3): {1, 2}, (2, 3): {1, 3}}
    for (k, h), s in expect.items():
        assert gf2m.b_set(ctx, k, h) == s
    assert gf2m.btilde_set(ctx, [1, 2], 1) == {1, 2}
    assert gf2m.btilde_set(ctx, 0b11, 1) == {1, 2}


def test_gf8_b_set():
    assert gf2m.b_set(field_new(3), 1, 1) == {1, 3, 5, 7}


@pytest.mark.parametrize("m", [2, 3, 4])
def test_bitset_sizes_are_half_field(m):
    ctx = field_new(m)
    half = 2 ** (m - 1)
    for h in range(1, ctx.q):
        for k in range(1, m + 1):
            assert len(gf2m.b_set(ctx, k, h)) == half
        for K in range(1, ctx.q):
            assert len(gf2m.btilde_set(ctx, K, h)) == half


@pytest.mark.parametrize("m", range(1, 9))
def test_field_axioms_tables(m):
    ctx = field_new(m)
    q = ctx.q
    mt = ctx.mul_table
    assert np.array_equal(mt, mt.T)
    assert np.all(mt[1] == np.arange(q))
    assert np.all(mt[0] == 0)
    # every nonzero row is a permutation of the nonzero elements
    assert np.all(np.sort(mt[1:, 1:], axis=1) == np.arange(1, q))
    for a in range(1, q):
        assert mt[a, ctx.div_table[1, a]] == 1


def _slow_mul(a, b, poly, m):
    # carry-less multiply then reduce, independent of the tables
    r = 0
    for k in range(m):
        if (b >> k) & 1:
            r ^= a << k
    for k in range(2 * m - 2, m - 1, -1):
        if (r >> k) & 1:
            r ^= poly << (k - m)
    return r


@given(st.integers(1, 8), st.data())
def test_mul_matches_polynomial_arithmetic(m, data):
    ctx = field_new(m)
    a = data.draw(st.integers(0, ctx.q - 1))
    b = data.draw(st.integers(0, ctx.q - 1))
    assert gf2m.mul(ctx, a, b) == _slow_mul(a, b, ctx.primitive_poly, m)


@given(st.integers(1, 8), st.data())
def test_distributive_and_inverse(m, data):
    ctx = field_new(m)
    a, b, c = (data.draw(st.integers(0, ctx.q - 1)) for _ in range(3))
    assert gf2m.mul(ctx, a, gf2m.add(ctx, b, c)) == gf2m.mul(ctx, a, b) ^ gf2m.mul(ctx, a, c)
    if a:
        assert gf2m.mul(ctx, a, gf2m.inv(ctx, a)) == 1


def test_errors():
    with pytest.raises(FieldError, match="m must be"):
        field_new(9)
    with pytest.raises(FieldError, match="degree check"):
        field_new(3, 0b111)
    with pytest.raises(FieldError, match="primitivity"):
        field_new(4, 0b11111)  # x^4+x^3+x^2+x+1 has order 5
    ctx = field_new(2)
    with pytest.raises(FieldError, match="division by zero"):
        gf2m.div(ctx, 1, 0)
    with pytest.raises(FieldError):
        gf2m.mul(ctx, 4, 1)
    with pytest.raises(FieldError):
        gf2m.b_set(ctx, 3, 1)


def test_field_sum(gf4):
    assert gf2m.field_sum(gf4, [1, 2, 2, 3], [1, 1, 1, 1]) == 1 ^ 2 ^ 2 ^ 3
    assert gf2m.field_sum(gf4, [1, 2], [0, 0]) == 0


def test_mask_helpers():
    assert gf2m.subset_mask([1, 3]) == 0b101
    assert gf2m.mask_to_set(0b1010) == {1, 3}
    assert list(itertools.islice(gf2m.DEFAULT_PRIMITIVE_POLYS, 2)) == [1, 2]
