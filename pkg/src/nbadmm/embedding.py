"""Flanagan and constant-weight embeddings of field elements.

Flanagan embedding maps ``a`` to a length ``q-1`` indicator indexed by the
nonzero elements ``1..q-1`` (so ``0`` maps to the zero vector). The
constant-weight (CW) embedding maps ``a`` to a length ``q`` one-hot vector
indexed by ``0..q-1``.

Words are stored flat and symbol-major: symbol ``i`` occupies
``data[i*L:(i+1)*L]`` where ``L`` is the per-symbol length. The matrix view
has shape ``(L, d)`` with column ``i`` equal to symbol ``i``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .gf2m import FieldCtx
from .tolerances import TOL


class EmbeddingKind(enum.Enum):
    FLANAGAN = "flanagan"
    CONSTANT_WEIGHT = "cw"

    @classmethod
    def parse(cls, value) -> "EmbeddingKind":
        if isinstance(value, cls):
            return value
        v = str(value).strip().lower()
        if v in ("flanagan", "f", "fr"):
            return cls.FLANAGAN
        if v in ("cw", "constant-weight", "constant_weight", "cr"):
            return cls.CONSTANT_WEIGHT
        raise ValueError(f"unknown embedding kind {value!r}")


def symbol_length(kind: EmbeddingKind, q: int) -> int:
    return q - 1 if EmbeddingKind.parse(kind) is EmbeddingKind.FLANAGAN else q


def element_offset(kind: EmbeddingKind) -> int:
    """Field element stored at coordinate 0 of a symbol block."""
    return 1 if EmbeddingKind.parse(kind) is EmbeddingKind.FLANAGAN else 0


class EmbeddingError(ValueError):
    pass


@dataclass
class EmbeddingVec:
    """A flat embedded word with a matrix view.

    Attributes
    ----------
    kind : EmbeddingKind
    q : int
    data : ndarray of float64, length ``L * n_symbols``
    """

    kind: EmbeddingKind
    q: int
    data: np.ndarray

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float64).ravel()
        if self.data.size % self.symbol_len:
            raise EmbeddingError(
                f"data length {self.data.size} is not a multiple of {self.symbol_len}")

    @property
    def symbol_len(self) -> int:
        return symbol_length(self.kind, self.q)

    @property
    def n_symbols(self) -> int:
        return self.data.size // self.symbol_len

    def symbol(self, i: int) -> np.ndarray:
        L = self.symbol_len
        return self.data[i * L:(i + 1) * L]

    @property
    def matrix(self) -> np.ndarray:
        """``(L, d)`` view; column ``i`` is symbol ``i``."""
        return self.data.reshape(self.n_symbols, self.symbol_len).T

    @classmethod
    def from_matrix(cls, kind, q, F) -> "EmbeddingVec":
        F = np.asarray(F, dtype=np.float64)
        return cls(kind, q, F.T.ravel())


def embed_symbol(ctx: FieldCtx, kind: EmbeddingKind, a: int) -> np.ndarray:
    """Indicator vector of a single element."""
    kind = EmbeddingKind.parse(kind)
    a = int(a)
    if not 0 <= a < ctx.q:
        raise EmbeddingError(f"element {a} outside [0, {ctx.q - 1}]")
    out = np.zeros(symbol_length(kind, ctx.q))
    if kind is EmbeddingKind.CONSTANT_WEIGHT:
        out[a] = 1.0
    elif a:
        out[a - 1] = 1.0
    return out


def embed_word(ctx: FieldCtx, kind: EmbeddingKind, c) -> EmbeddingVec:
    kind = EmbeddingKind.parse(kind)
    c = np.asarray(c, dtype=np.int64).ravel()
    if c.size and (c.min() < 0 or c.max() >= ctx.q):
        raise EmbeddingError("word contains elements outside the field")
    L = symbol_length(kind, ctx.q)
    M = np.zeros((c.size, L))
    off = element_offset(kind)
    rows = np.arange(c.size)
    hit = c >= off
    M[rows[hit], c[hit] - off] = 1.0
    return EmbeddingVec(kind, ctx.q, M.ravel())


def _as_blocks(v: EmbeddingVec) -> np.ndarray:
    return v.data.reshape(v.n_symbols, v.symbol_len)


def is_integral(v: EmbeddingVec, tol: float = TOL.integral) -> bool:
    d = v.data
    return bool(np.all((np.abs(d) <= tol) | (np.abs(d - 1.0) <= tol)))


def decode_word(v: EmbeddingVec, tol: float = TOL.integral) -> np.ndarray:
    """Inverse of :func:`embed_word` on integral data.

    Raises
    ------
    EmbeddingError
        If any entry is fractional or a block is not a valid indicator.
    """
    if not is_integral(v, tol):
        raise EmbeddingError("cannot decode fractional embedding; round first")
    B = np.rint(_as_blocks(v)).astype(np.int64)
    w = B.sum(axis=1)
    if v.kind is EmbeddingKind.CONSTANT_WEIGHT:
        if np.any(w != 1):
            raise EmbeddingError("constant-weight block without exactly one 1")
        return np.argmax(B, axis=1)
    if np.any(w > 1):
        raise EmbeddingError("Flanagan block with more than one 1")
    return np.where(w == 0, 0, np.argmax(B, axis=1) + 1)


def flanagan_to_cw(v: EmbeddingVec, tol: float = TOL.l1_excess) -> EmbeddingVec:
    """Prepend ``1 - sum`` to every Flanagan symbol."""
    if v.kind is not EmbeddingKind.FLANAGAN:
        raise EmbeddingError("expected a Flanagan embedding")
    B = _as_blocks(v)
    s = B.sum(axis=1)
    if np.any(s > 1.0 + tol):
        raise EmbeddingError("Flanagan symbol with l1 weight above 1")
    out = np.concatenate([(1.0 - s)[:, None], B], axis=1)
    return EmbeddingVec(EmbeddingKind.CONSTANT_WEIGHT, v.q, out.ravel())


def cw_to_flanagan(v: EmbeddingVec) -> EmbeddingVec:
    """Drop coordinate 0 of every CW symbol."""
    if v.kind is not EmbeddingKind.CONSTANT_WEIGHT:
        raise EmbeddingError("expected a constant-weight embedding")
    B = _as_blocks(v)
    return EmbeddingVec(EmbeddingKind.FLANAGAN, v.q, B[:, 1:].ravel())


def _g_vectors(ctx: FieldCtx, kind: EmbeddingKind, F: np.ndarray, h, Kmasks):
    """Rows ``g^K_j = sum_{a in Bt(K, h_j)} F[..., a, j]`` for each K in Kmasks."""
    off = element_offset(kind)
    L = F.shape[-2]
    elems = np.arange(off, off + L)
    # sel[K, j, l] = element of row l is in Bt(K, h_j)
    sel = ctx.membership[np.asarray(Kmasks)[:, None, None], h[None, :, None],
                         elems[None, None, :]]
    return np.einsum("kjl,...lj->...kj", sel, F)


def _validate_inputs(ctx, kind, F, h):
    F = np.asarray(F, dtype=np.float64)
    h = np.asarray(h, dtype=np.int64).ravel()
    L = symbol_length(kind, ctx.q)
    if F.ndim < 2 or F.shape[-2] != L or F.shape[-1] != h.size:
        raise EmbeddingError(
            f"dimension mismatch: matrix {F.shape} vs ({L}, {h.size})")
    if np.any(h <= 0) or np.any(h >= ctx.q):
        raise EmbeddingError("check values must be nonzero field elements")
    return F, h


def _basic_conditions(kind, F, tol):
    binary = np.all((np.abs(F) <= tol) | (np.abs(F - 1.0) <= tol), axis=(-2, -1))
    colsum = np.rint(F).sum(axis=-2)
    if kind is EmbeddingKind.CONSTANT_WEIGHT:
        return binary & np.all(colsum == 1, axis=-1)
    return binary & np.all(colsum <= 1, axis=-1)


def _spc_validity(ctx, kind, F, h, tol, Kmasks):
    kind = EmbeddingKind.parse(kind)
    F, h = _validate_inputs(ctx, kind, F, h)
    ok = _basic_conditions(kind, F, tol)
    g = _g_vectors(ctx, kind, np.rint(F), h, Kmasks)
    ok = ok & np.all(np.rint(g).astype(np.int64).sum(axis=-1) % 2 == 0, axis=-1)
    return bool(ok) if F.ndim == 2 else ok


def is_valid_spc_embedding(ctx: FieldCtx, kind: EmbeddingKind, F, h,
                           tol: float = TOL.integral):
    """Validity of an integral embedded matrix for the single check ``h``.

    Checks that entries are binary, each column has weight at most one
    (exactly one for CW), and for every bit ``k`` the GF(2) sum over columns
    of ``g^k_j = sum_{a in B(k, h_j)} F[a, j]`` is zero.

    ``F`` is ``(L, d)`` or a stack ``(..., L, d)``; a stack gives a boolean
    array with one entry per matrix.
    """
    return _spc_validity(ctx, kind, F, h, tol, [1 << k for k in range(ctx.m)])


def is_valid_spc_embedding_redundant(ctx: FieldCtx, kind: EmbeddingKind, F, h,
                                     tol: float = TOL.integral):
    """Same as :func:`is_valid_spc_embedding` but using every nonempty bit subset K."""
    return _spc_validity(ctx, kind, F, h, tol, np.arange(1, ctx.q))


def relative_map(ctx: FieldCtx, v: EmbeddingVec, c) -> EmbeddingVec:
    """Per-symbol index shift ``x~_a = x_{a + c_i}`` of a CW embedding.

    In characteristic two the map is its own inverse.
    """
    if v.kind is not EmbeddingKind.CONSTANT_WEIGHT:
        raise EmbeddingError("relative mapping is defined for constant-weight embeddings")
    c = np.asarray(c, dtype=np.int64).ravel()
    if c.size != v.n_symbols:
        raise EmbeddingError(f"word length {c.size} != {v.n_symbols} symbols")
    B = _as_blocks(v)
    idx = np.arange(ctx.q)[None, :] ^ c[:, None]
    return EmbeddingVec(v.kind, v.q, np.take_along_axis(B, idx, axis=1).ravel())


def relative_map_inverse(ctx: FieldCtx, v: EmbeddingVec, c) -> EmbeddingVec:
    return relative_map(ctx, v, c)
