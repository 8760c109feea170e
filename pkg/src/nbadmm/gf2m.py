"""Arithmetic in GF(2^m) using the integer representation of field elements.

An element is an integer in ``[0, q-1]`` whose bit ``k-1`` holds the
coefficient of ``x^(k-1)`` in its polynomial form. Addition is XOR and
multiplication goes through log/antilog tables built from a primitive
polynomial.

Besides arithmetic the context caches the bit-membership sets used by the
embedding constraints::

    B(k, h)  = {a : bit k of h*a is 1}
    Bt(K, h) = {a : XOR over k in K of the bits of h*a is 1}

Bit indices ``k`` are 1-based. A nonempty index set ``K`` is encoded as the
integer mask whose bit ``k-1`` is set for every ``k`` in ``K``, so the
``2^m - 1`` nonempty subsets are exactly the masks ``1 .. q-1``. Sets of field
elements are stored as q-bit integer masks (bit ``a`` set iff ``a`` is in the
set).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

MAX_M = 8

# x+1, x^2+x+1, x^3+x+1 and standard primitive polynomials above that
DEFAULT_PRIMITIVE_POLYS = {
    1: 0b11,
    2: 0b111,
    3: 0b1011,
    4: 0b10011,
    5: 0b100101,
    6: 0b1000011,
    7: 0b10001001,
    8: 0b100011101,
}


class FieldError(ValueError):
    """Raised for invalid field construction or arithmetic (e.g. divide by 0)."""


@dataclass(frozen=True, eq=False)
class FieldCtx:
    """Immutable GF(2^m) context.

    Attributes
    ----------
    m : int
        Extension degree, ``1 <= m <= 8``.
    q : int
        Field size ``2**m``.
    primitive_poly : int
        Bitmask of the primitive polynomial (bit ``m`` set).
    exp_table : ndarray of int64, shape (q-1,)
        ``exp_table[i]`` is the integer form of ``xi**i``.
    log_table : ndarray of int64, shape (q,)
        Discrete log of each nonzero element; ``log_table[0] = -1``.
    mul_table, div_table : ndarray of int64, shape (q, q)
        Full product table and quotient table (``div_table[a, 0] = -1``).
    bitset_B : tuple
        ``bitset_B[k][h]`` is the q-bit mask of B(k, h) for ``k`` in 1..m
        (index 0 unused) and ``h`` in 1..q-1 (index 0 is 0).
    bitset_Btilde : tuple
        ``bitset_Btilde[K][h]`` is the mask of Bt(K, h) for K-mask in 1..q-1.
    """

    m: int
    q: int
    primitive_poly: int
    exp_table: np.ndarray
    log_table: np.ndarray
    mul_table: np.ndarray
    div_table: np.ndarray
    bitset_B: tuple = field(repr=False)
    bitset_Btilde: tuple = field(repr=False)
    # membership[K, h, a] = a in Bt(K, h); rows K=0 and h=0 are all False
    membership: np.ndarray = field(repr=False)


def _poly_degree(p: int) -> int:
    return p.bit_length() - 1


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def field_new(m: int, primitive_poly: int | None = None) -> FieldCtx:
    """Build a GF(2^m) context.

    Parameters
    ----------
    m : int
        Extension degree, 1..8.
    primitive_poly : int, optional
        Bitmask of a primitive polynomial of degree ``m``. Defaults to
        ``DEFAULT_PRIMITIVE_POLYS[m]``.

    Raises
    ------
    FieldError
        If ``m`` is out of range, the polynomial has the wrong degree, or the
        powers of ``x`` cycle before reaching all ``q-1`` nonzero elements.
    """
    if not isinstance(m, (int, np.integer)) or not 1 <= m <= MAX_M:
        raise FieldError(f"m must be an integer in [1, {MAX_M}], got {m!r}")
    m = int(m)
    if primitive_poly is None:
        primitive_poly = DEFAULT_PRIMITIVE_POLYS[m]
    primitive_poly = int(primitive_poly)
    if _poly_degree(primitive_poly) != m:
        raise FieldError(
            f"degree check failed: polynomial {primitive_poly:#b} has degree "
            f"{_poly_degree(primitive_poly)}, expected {m}")
    q = 1 << m

    exp_table = np.zeros(q - 1, dtype=np.int64)
    log_table = np.full(q, -1, dtype=np.int64)
    a = 1
    for i in range(q - 1):
        if log_table[a] != -1:
            raise FieldError(
                f"primitivity check failed: powers of x cycle with length {i} "
                f"< q-1 = {q - 1} for polynomial {primitive_poly:#b}")
        exp_table[i] = a
        log_table[a] = i
        a <<= 1
        if a & q:
            a ^= primitive_poly
    if a != 1:
        raise FieldError(
            f"primitivity check failed: x^(q-1) != 1 for polynomial {primitive_poly:#b}")

    nz = np.arange(1, q)
    logs = log_table[nz]
    mul_table = np.zeros((q, q), dtype=np.int64)
    mul_table[1:, 1:] = exp_table[(logs[:, None] + logs[None, :]) % (q - 1)]
    div_table = np.zeros((q, q), dtype=np.int64)
    div_table[:, 0] = -1
    div_table[1:, 1:] = exp_table[(logs[:, None] - logs[None, :]) % (q - 1)]

    # parity of bits(h*a) & K for every K mask, h, a
    popc = np.array([bin(v).count("1") & 1 for v in range(q)], dtype=np.uint8)
    ks = np.arange(q)
    membership = popc[ks[:, None, None] & mul_table[None, :, :]].astype(bool)
    membership[0] = False
    membership[:, 0] = False

    packed = np.packbits(membership, axis=2, bitorder="little")
    bitset_Btilde = tuple(
        tuple(int.from_bytes(packed[K, h].tobytes(), "little") for h in range(q))
        for K in range(q))
    bitset_B = (tuple(0 for _ in range(q)),) + tuple(
        bitset_Btilde[1 << (k - 1)] for k in range(1, m + 1))

    return FieldCtx(
        m=m, q=q, primitive_poly=primitive_poly,
        exp_table=_readonly(exp_table), log_table=_readonly(log_table),
        mul_table=_readonly(mul_table), div_table=_readonly(div_table),
        bitset_B=bitset_B, bitset_Btilde=bitset_Btilde,
        membership=_readonly(membership))


def _check_elem(ctx: FieldCtx, a) -> int:
    a = int(a)
    if not 0 <= a < ctx.q:
        raise FieldError(f"element {a} outside [0, {ctx.q - 1}]")
    return a


def add(ctx: FieldCtx, a, b) -> int:
    """Field addition (XOR of integer forms)."""
    return _check_elem(ctx, a) ^ _check_elem(ctx, b)


def mul(ctx: FieldCtx, a, b) -> int:
    """Field product."""
    return int(ctx.mul_table[_check_elem(ctx, a), _check_elem(ctx, b)])


def inv(ctx: FieldCtx, a) -> int:
    """Multiplicative inverse of a nonzero element."""
    return div(ctx, 1, a)


def div(ctx: FieldCtx, a, h) -> int:
    """Quotient ``a / h``; raises FieldError when ``h == 0``."""
    a, h = _check_elem(ctx, a), _check_elem(ctx, h)
    if h == 0:
        raise FieldError("division by zero")
    return int(ctx.div_table[a, h])


def bits(ctx: FieldCtx, a) -> tuple:
    """Binary vector ``(b_1, ..., b_m)`` of ``a``; ``b_k`` is the coefficient of x^(k-1)."""
    a = _check_elem(ctx, a)
    return tuple((a >> k) & 1 for k in range(ctx.m))


def mask_to_set(mask: int) -> frozenset:
    """Decode a q-bit element mask into a frozenset of elements."""
    out = []
    a = 0
    while mask:
        if mask & 1:
            out.append(a)
        mask >>= 1
        a += 1
    return frozenset(out)


def subset_mask(K: Iterable[int]) -> int:
    """Encode a set of 1-based bit indices as an integer mask."""
    mask = 0
    for k in K:
        mask |= 1 << (int(k) - 1)
    return mask


def b_set(ctx: FieldCtx, k: int, h) -> frozenset:
    """The set B(k, h) = {a : bit k of h*a is 1}."""
    if not 1 <= k <= ctx.m:
        raise FieldError(f"bit index {k} outside [1, {ctx.m}]")
    h = _check_elem(ctx, h)
    if h == 0:
        raise FieldError("h must be nonzero")
    return mask_to_set(ctx.bitset_B[k][h])


def btilde_set(ctx: FieldCtx, K, h) -> frozenset:
    """The set Bt(K, h) of elements whose bits of ``h*a`` over ``K`` have odd parity.

    ``K`` is either an iterable of 1-based bit indices or an integer mask.
    """
    Kmask = int(K) if isinstance(K, (int, np.integer)) else subset_mask(K)
    if not 1 <= Kmask < ctx.q:
        raise FieldError(f"K must be a nonempty subset of [1, {ctx.m}]")
    h = _check_elem(ctx, h)
    if h == 0:
        raise FieldError("h must be nonzero")
    return mask_to_set(ctx.bitset_Btilde[Kmask][h])


def field_sum(ctx: FieldCtx, h, c) -> int:
    """Check-weighted sum ``sum_j h_j c_j`` in the field."""
    h = np.asarray(h, dtype=np.int64)
    c = np.asarray(c, dtype=np.int64)
    return int(np.bitwise_xor.reduce(ctx.mul_table[h, c], initial=0))
