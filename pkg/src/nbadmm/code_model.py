"""Non-binary LDPC codes: storage, file I/O and the per-check decoding structure.

File format (non-binary alist)::

    N M q [primitive_poly]
    max_dv max_dc
    d_v(1) ... d_v(N)
    d_c(1) ... d_c(M)
    <N lines>  check:value pairs of each variable (1-indexed)
    <M lines>  variable:value pairs of each check (1-indexed)

Tokens are whitespace separated and ``#`` starts a comment. The variable and
check sections must describe the same matrix.
"""

from __future__ import annotations

import functools
import math
import os
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from . import gf2m
from .embedding import EmbeddingKind, element_offset, symbol_length
from .gf2m import FieldCtx


class CodeFormatError(ValueError):
    """Parse/validation error in a code file; carries the 1-based line number."""

    def __init__(self, message: str, lineno: int | None = None):
        self.lineno = lineno
        loc = f"line {lineno}: " if lineno is not None else ""
        super().__init__(loc + message)


@dataclass(frozen=True, eq=False)
class NonbinaryCode:
    """Sparse parity-check matrix over GF(2^m).

    Attributes
    ----------
    n : int
        Number of variables (code length N).
    n_checks : int
        Number of checks M.
    q : int
        Field size.
    rows : tuple of (cols, vals)
        For each check, 0-based variable indices and nonzero check values.
    primitive_poly : int or None
        Field polynomial override from the file header.
    name : str
    """

    n: int
    n_checks: int
    q: int
    rows: tuple
    primitive_poly: int | None = None
    name: str = ""
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if self.n < 1 or self.n_checks < 1:
            raise ValueError("N and M must be positive")
        if self.q < 2 or self.q & (self.q - 1) or self.q > 256:
            raise ValueError(f"q must be a power of two in [2, 256], got {self.q}")
        if len(self.rows) != self.n_checks:
            raise ValueError("row count does not match M")
        for j, (cols, vals) in enumerate(self.rows):
            if len(cols) != len(vals) or len(cols) == 0:
                raise ValueError(f"check {j} is empty or malformed")
            if np.any(vals <= 0) or np.any(vals >= self.q):
                raise ValueError(f"check {j} has values outside [1, q-1]")
            if np.any(cols < 0) or np.any(cols >= self.n):
                raise ValueError(f"check {j} references a variable outside [0, N)")
            if np.unique(cols).size != cols.size:
                raise ValueError(f"check {j} repeats a variable")

    @property
    def m(self) -> int:
        return self.q.bit_length() - 1

    @property
    def check_degree(self) -> np.ndarray:
        return np.array([len(c) for c, _ in self.rows], dtype=np.int64)

    @property
    def var_degree(self) -> np.ndarray:
        d = np.zeros(self.n, dtype=np.int64)
        for cols, _ in self.rows:
            d[cols] += 1
        return d

    def dense(self) -> np.ndarray:
        H = np.zeros((self.n_checks, self.n), dtype=np.int64)
        for j, (cols, vals) in enumerate(self.rows):
            H[j, cols] = vals
        return H

    def field(self) -> FieldCtx:
        key = "field"
        if key not in self._cache:
            self._cache[key] = gf2m.field_new(self.m, self.primitive_poly)
        return self._cache[key]

    @classmethod
    def from_dense(cls, H, q, primitive_poly=None, name="") -> "NonbinaryCode":
        H = np.asarray(H, dtype=np.int64)
        rows = []
        for row in H:
            cols = np.flatnonzero(row)
            rows.append((cols.astype(np.int64), row[cols].astype(np.int64)))
        return cls(H.shape[1], H.shape[0], int(q), tuple(rows), primitive_poly, name)


# ---------------------------------------------------------------------------
# file I/O

def _tokenize(text: str):
    """Yield (lineno, tokens) for every non-empty, comment-stripped line."""
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield lineno, line.split()


def _ints(tokens, lineno, what):
    try:
        return [int(t, 0) for t in tokens]
    except ValueError:
        raise CodeFormatError(f"malformed {what}: expected integers, got {' '.join(tokens)!r}",
                              lineno) from None


def _pairs(tokens, lineno, expected, limit, q, what):
    if len(tokens) != expected:
        raise CodeFormatError(
            f"degree mismatch in {what}: expected {expected} entries, found {len(tokens)}",
            lineno)
    out = []
    for tok in tokens:
        parts = tok.split(":")
        if len(parts) != 2:
            raise CodeFormatError(f"malformed entry {tok!r} in {what}, expected index:value",
                                  lineno)
        try:
            idx, val = int(parts[0]), int(parts[1], 0)
        except ValueError:
            raise CodeFormatError(f"malformed entry {tok!r} in {what}", lineno) from None
        if not 1 <= idx <= limit:
            raise CodeFormatError(f"index {idx} out of range [1, {limit}] in {what}", lineno)
        if val == 0:
            raise CodeFormatError(f"zero check value in {what}", lineno)
        if not 0 < val < q:
            raise CodeFormatError(f"value {val} out of range [1, {q - 1}] in {what}", lineno)
        out.append((idx - 1, val))
    return out


def parse_code(text: str, name: str = "") -> NonbinaryCode:
    """Parse the non-binary alist format from a string."""
    lines = list(_tokenize(text))
    if len(lines) < 4:
        raise CodeFormatError("file too short for header",
                              lines[-1][0] if lines else None)
    ln, tok = lines[0]
    head = _ints(tok, ln, "header")
    if len(head) not in (3, 4):
        raise CodeFormatError("malformed header: expected 'N M q [primitive_poly]'", ln)
    N, M, q = head[:3]
    poly = head[3] if len(head) == 4 else None
    if N < 1 or M < 1:
        raise CodeFormatError("malformed header: N and M must be positive", ln)
    if q < 2 or q & (q - 1) or q > 256:
        raise CodeFormatError(f"malformed header: q={q} is not a power of two in [2, 256]", ln)
    if poly is not None:
        try:
            gf2m.field_new(q.bit_length() - 1, poly)
        except gf2m.FieldError as exc:
            raise CodeFormatError(f"bad primitive polynomial: {exc}", ln) from None

    ln2, tok = lines[1]
    maxes = _ints(tok, ln2, "max-degree line")
    if len(maxes) != 2:
        raise CodeFormatError("malformed max-degree line: expected 'max_dv max_dc'", ln2)
    ln3, tok = lines[2]
    dv = _ints(tok, ln3, "variable degrees")
    if len(dv) != N:
        raise CodeFormatError(f"degree mismatch: expected {N} variable degrees, found {len(dv)}",
                              ln3)
    ln4, tok = lines[3]
    dc = _ints(tok, ln4, "check degrees")
    if len(dc) != M:
        raise CodeFormatError(f"degree mismatch: expected {M} check degrees, found {len(dc)}",
                              ln4)
    if max(dv) != maxes[0] or max(dc) != maxes[1]:
        raise CodeFormatError("degree mismatch: max degrees disagree with degree lists", ln2)
    if any(d < 1 for d in dv) or any(d < 1 for d in dc):
        raise CodeFormatError("degree mismatch: degrees must be positive", ln3)
    if sum(dv) != sum(dc):
        raise CodeFormatError("degree mismatch: variable and check degree sums differ", ln4)

    body = lines[4:]
    if len(body) < N + M:
        where = body[-1][0] if body else ln4
        raise CodeFormatError(f"expected {N + M} adjacency lines, found {len(body)}", where)
    if len(body) > N + M:
        raise CodeFormatError("trailing content after adjacency lines", body[N + M][0])

    from_vars = set()
    for i, (lno, tok) in enumerate(body[:N]):
        for j, val in _pairs(tok, lno, dv[i], M, q, f"variable {i + 1}"):
            from_vars.add((j, i, val))
    rows = []
    from_checks = set()
    for j, (lno, tok) in enumerate(body[N:]):
        entries = _pairs(tok, lno, dc[j], N, q, f"check {j + 1}")
        cols = [i for i, _ in entries]
        if len(set(cols)) != len(cols):
            raise CodeFormatError(f"check {j + 1} lists a variable twice", lno)
        for i, val in entries:
            from_checks.add((j, i, val))
        rows.append((np.array(cols, dtype=np.int64),
                     np.array([v for _, v in entries], dtype=np.int64)))
    if from_vars != from_checks:
        bad = sorted(from_vars ^ from_checks)[0]
        raise CodeFormatError(
            f"adjacency mismatch: entry (check {bad[0] + 1}, variable {bad[1] + 1}, "
            f"value {bad[2]}) appears in only one section", body[N + bad[0]][0])
    return NonbinaryCode(N, M, q, tuple(rows), poly, name)


def load_code(path) -> NonbinaryCode:
    """Read a code file in the non-binary alist format."""
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    return parse_code(text, name=os.path.basename(str(path)))


def format_code(code: NonbinaryCode) -> str:
    dv = code.var_degree
    dc = code.check_degree
    head = f"{code.n} {code.n_checks} {code.q}"
    if code.primitive_poly is not None:
        head += f" {code.primitive_poly:#x}"
    var_entries = [[] for _ in range(code.n)]
    for j, (cols, vals) in enumerate(code.rows):
        for i, v in zip(cols, vals):
            var_entries[i].append(f"{j + 1}:{v}")
    lines = [head, f"{dv.max()} {dc.max()}",
             " ".join(map(str, dv)), " ".join(map(str, dc))]
    lines += [" ".join(e) for e in var_entries]
    lines += [" ".join(f"{i + 1}:{v}" for i, v in zip(cols, vals)) for cols, vals in code.rows]
    return "\n".join(lines) + "\n"


def save_code(code: NonbinaryCode, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_code(code))


@dataclass(frozen=True)
class BinaryCode:
    """Support of a binary parity-check matrix (0-based variable lists per check)."""

    n: int
    n_checks: int
    rows: tuple
    name: str = ""


def load_binary_alist(path) -> BinaryCode:
    """Read a standard binary alist file (zero padding allowed)."""
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    lines = list(_tokenize(text))
    if len(lines) < 4:
        raise CodeFormatError("file too short for alist header")
    ln, tok = lines[0]
    head = _ints(tok, ln, "header")
    if len(head) != 2:
        raise CodeFormatError("malformed header: expected 'N M'", ln)
    N, M = head
    ln4, tok = lines[3]
    dc = _ints(tok, ln4, "check degrees")
    if len(dc) != M:
        raise CodeFormatError(f"degree mismatch: expected {M} check degrees", ln4)
    body = lines[4:]
    if len(body) < N + M:
        raise CodeFormatError(f"expected {N + M} adjacency lines, found {len(body)}")
    rows = []
    for j, (lno, tok) in enumerate(body[N:N + M]):
        idx = [i for i in _ints(tok, lno, f"check {j + 1}") if i != 0]
        if len(idx) != dc[j]:
            raise CodeFormatError(f"degree mismatch in check {j + 1}", lno)
        if any(not 1 <= i <= N for i in idx):
            raise CodeFormatError(f"index out of range in check {j + 1}", lno)
        rows.append(tuple(i - 1 for i in idx))
    return BinaryCode(N, M, tuple(rows), os.path.basename(str(path)))


def derive_from_binary(binary_code: BinaryCode, value: int = 1, q: int = 4,
                       name: str = "") -> NonbinaryCode:
    """Copy the support of a binary matrix and set every nonzero entry to ``value``."""
    if not 0 < value < q:
        raise ValueError(f"value must be a nonzero element of GF({q})")
    rows = tuple((np.array(r, dtype=np.int64), np.full(len(r), value, dtype=np.int64))
                 for r in binary_code.rows)
    return NonbinaryCode(binary_code.n, binary_code.n_checks, q, rows, None,
                         name or binary_code.name)


# ---------------------------------------------------------------------------
# Tanner quasi-cyclic construction

def _element_of_order(p: int, order: int) -> int:
    for g in range(2, p):
        if pow(g, order, p) == 1 and all(pow(g, order // r, p) != 1
                                         for r in _prime_factors(order)):
            return g
    raise ValueError(f"no element of order {order} modulo {p}")


def _prime_factors(n: int):
    out, f = [], 2
    while f * f <= n:
        while n % f == 0:
            out.append(f)
            n //= f
        f += 1
    if n > 1:
        out.append(n)
    return sorted(set(out))


def tanner_qc_support(p: int, J: int = 3, L: int = 5, a: int | None = None,
                      b: int | None = None) -> BinaryCode:
    """Binary (J, L)-regular quasi-cyclic code of length ``L*p``.

    Block ``(s, t)`` of the ``J x L`` block matrix is the ``p x p`` identity
    cyclically shifted by ``b**s * a**t mod p``, with ``a`` of multiplicative
    order ``L`` and ``b`` of order ``J`` modulo the prime ``p``.
    """
    if (p - 1) % L or (p - 1) % J:
        raise ValueError(f"p-1 = {p - 1} must be divisible by J={J} and L={L}")
    a = _element_of_order(p, L) if a is None else a
    b = _element_of_order(p, J) if b is None else b
    rows = []
    for s in range(J):
        for r in range(p):
            cols = []
            for t in range(L):
                shift = (pow(b, s, p) * pow(a, t, p)) % p
                cols.append(t * p + (r + shift) % p)
            rows.append(tuple(cols))
    return BinaryCode(L * p, J * p, tuple(rows), f"tanner-qc-p{p}")


_BUILTIN = {
    # name: (p, default q)
    "tanner155": (31, 4),
    "tanner755": (151, 8),
    "tanner1055": (211, 4),
}


def builtin_names():
    return ("toy",) + tuple(_BUILTIN)


@functools.lru_cache(maxsize=None)
def builtin_code(name: str, q: int | None = None) -> NonbinaryCode:
    """Bundled toy code or a generated Tanner code with all check values 1."""
    if name == "toy":
        text = resources.files(__package__).joinpath("data/toy_gf4.nbalist").read_text()
        return parse_code(text, name="toy")
    if name not in _BUILTIN:
        raise KeyError(f"unknown builtin code {name!r}; choose from {builtin_names()}")
    p, q_default = _BUILTIN[name]
    return derive_from_binary(tanner_qc_support(p), 1, q or q_default, name=name)


def resolve_code(spec: str) -> NonbinaryCode:
    """Resolve a code spec string.

    Accepted forms: a builtin name (``toy``, ``tanner1055``, ...), optionally
    with ``@q`` to override the field; ``binary:PATH[@q]`` for a binary alist
    lifted with all-ones values; otherwise a path to a non-binary alist file.
    """
    spec = str(spec)
    if spec.startswith("binary:"):
        rest = spec[len("binary:"):]
        path, _, qs = rest.partition("@")
        return derive_from_binary(load_binary_alist(path), 1, int(qs) if qs else 4)
    name, _, qs = spec.partition("@")
    if name in builtin_names():
        return builtin_code(name, int(qs) if qs else None)
    return load_code(spec)


# ---------------------------------------------------------------------------
# rotation and per-check structure

def rotation_perm(ctx: FieldCtx, h: int, kind: EmbeddingKind) -> np.ndarray:
    """Index form of the rotation ``D(q, h)``: ``(D w)[i] = w[perm[i]]``.

    Coordinate ``i`` holds element ``i + offset``; ``(D w)_e = w_{e*h}``, which
    sends the normalized embedding of ``x`` to the embedding of ``x / h``.
    The CW version fixes coordinate 0.
    """
    off = element_offset(kind)
    elems = np.arange(off, ctx.q)
    return ctx.mul_table[elems, int(h)] - off


def inverse_perm(perm) -> np.ndarray:
    perm = np.asarray(perm)
    inv = np.empty_like(perm)
    inv[perm] = np.arange(perm.size)
    return inv


@dataclass(frozen=True, eq=False)
class CheckContext:
    """Decoding structure of one check for a given embedding kind.

    Attributes
    ----------
    index : int
    cols, vals : ndarray
        Variables and check values of this check.
    kind : EmbeddingKind
    perms : ndarray, shape (d_c, L)
        Rotation permutation of each entry (see :func:`rotation_perm`).
    gather : ndarray, shape (q-1, d_c, q/2)
        ``gather[K-1, p]`` lists the global coordinates of ``x`` summed into
        ``g^K_p``; coordinate of element ``a`` of symbol ``i`` is
        ``i*L + a - offset``.
    """

    index: int
    cols: np.ndarray
    vals: np.ndarray
    kind: EmbeddingKind
    perms: np.ndarray
    gather: np.ndarray

    @property
    def degree(self) -> int:
        return self.cols.size


def _gather_for(ctx: FieldCtx, kind, cols, vals):
    L = symbol_length(kind, ctx.q)
    off = element_offset(kind)
    half = ctx.q // 2
    g = np.empty((ctx.q - 1, cols.size, half), dtype=np.int64)
    for K in range(1, ctx.q):
        for p, (i, h) in enumerate(zip(cols, vals)):
            elems = np.flatnonzero(ctx.membership[K, h])
            g[K - 1, p] = i * L + elems - off
    return g


def build_check_contexts(ctx: FieldCtx, code: NonbinaryCode,
                         kind: EmbeddingKind = EmbeddingKind.FLANAGAN):
    """Per-check rotations and gather patterns."""
    if ctx.q != code.q:
        raise ValueError("field size differs from code")
    out = []
    for j, (cols, vals) in enumerate(code.rows):
        perms = np.stack([rotation_perm(ctx, h, kind) for h in vals])
        out.append(CheckContext(j, cols, vals, kind, perms, _gather_for(ctx, kind, cols, vals)))
    return out


@dataclass(frozen=True, eq=False)
class CodeGraph:
    """Flat edge arrays consumed by the numba decoding kernels.

    Edges are ordered check by check; ``check_ptr[j]:check_ptr[j+1]`` are the
    edges of check ``j``. ``var_edges[var_ptr[i]:var_ptr[i+1]]`` are the edges
    of variable ``i``.
    """

    n: int
    n_checks: int
    q: int
    m: int
    edge_var: np.ndarray
    edge_val: np.ndarray
    check_ptr: np.ndarray
    var_ptr: np.ndarray
    var_edges: np.ndarray
    var_degree: np.ndarray
    check_degree: np.ndarray
    mul_table: np.ndarray
    div_table: np.ndarray


def code_graph(code: NonbinaryCode) -> CodeGraph:
    key = "graph"
    if key in code._cache:
        return code._cache[key]
    ctx = code.field()
    edge_var = np.concatenate([c for c, _ in code.rows]).astype(np.int64)
    edge_val = np.concatenate([v for _, v in code.rows]).astype(np.int64)
    check_ptr = np.zeros(code.n_checks + 1, dtype=np.int64)
    check_ptr[1:] = np.cumsum(code.check_degree)
    var_edges = np.argsort(edge_var, kind="stable").astype(np.int64)
    var_degree = code.var_degree
    var_ptr = np.zeros(code.n + 1, dtype=np.int64)
    var_ptr[1:] = np.cumsum(var_degree)
    g = CodeGraph(code.n, code.n_checks, code.q, code.m, edge_var, edge_val, check_ptr,
                  var_ptr, var_edges, var_degree, code.check_degree,
                  np.ascontiguousarray(ctx.mul_table), np.ascontiguousarray(ctx.div_table))
    code._cache[key] = g
    return g


def edge_gather(code: NonbinaryCode, kind: EmbeddingKind) -> np.ndarray:
    """Gather coordinates per edge: array (E, q-1, q/2) of global x indices."""
    key = ("gather", kind)
    if key not in code._cache:
        ctx = code.field()
        g = code_graph(code)
        code._cache[key] = np.ascontiguousarray(
            _gather_for(ctx, kind, g.edge_var, g.edge_val).transpose(1, 0, 2))
    return code._cache[key]


# ---------------------------------------------------------------------------
# syndrome and linear algebra over GF(q)

def syndrome(ctx: FieldCtx, code: NonbinaryCode, c) -> np.ndarray:
    c = np.asarray(c, dtype=np.int64).ravel()
    if c.size != code.n:
        raise ValueError(f"word length {c.size} != N = {code.n}")
    return np.array([np.bitwise_xor.reduce(ctx.mul_table[vals, c[cols]])
                     for cols, vals in code.rows], dtype=np.int64)


def syndrome_ok(ctx: FieldCtx, code: NonbinaryCode, c) -> bool:
    """True iff every check's weighted field sum of ``c`` is zero."""
    return not np.any(syndrome(ctx, code, c))


def row_reduce(ctx: FieldCtx, H) -> tuple:
    """Reduced row echelon form of ``H`` over GF(q).

    Returns ``(R, pivots)`` with ``R`` the nonzero rows and ``pivots`` their
    pivot columns.
    """
    A = np.array(H, dtype=np.int64)
    M, N = A.shape
    mul = ctx.mul_table
    pivots = []
    r = 0
    for col in range(N):
        if r == M:
            break
        nz = np.flatnonzero(A[r:, col])
        if nz.size == 0:
            continue
        p = r + nz[0]
        if p != r:
            A[[r, p]] = A[[p, r]]
        A[r] = mul[ctx.div_table[1, A[r, col]], A[r]]
        f = A[:, col].copy()
        f[r] = 0
        rows = np.flatnonzero(f)
        if rows.size:
            A[rows] ^= mul[f[rows][:, None], A[r][None, :]]
        pivots.append(col)
        r += 1
    return A[:r], np.array(pivots, dtype=np.int64)


def rank(code: NonbinaryCode) -> int:
    return int(_rref(code)[1].size)


def code_rate(code: NonbinaryCode) -> float:
    """Rate ``(N - rank H) / N``."""
    return (code.n - rank(code)) / code.n


def _rref(code: NonbinaryCode):
    key = "rref"
    if key not in code._cache:
        code._cache[key] = row_reduce(code.field(), code.dense())
    return code._cache[key]


def random_codeword(code: NonbinaryCode, rng: np.random.Generator) -> np.ndarray:
    """Uniform random codeword via the row-reduced parity-check matrix."""
    ctx = code.field()
    R, piv = _rref(code)
    free = np.setdiff1d(np.arange(code.n), piv)
    c = np.zeros(code.n, dtype=np.int64)
    c[free] = rng.integers(0, code.q, size=free.size)
    if piv.size:
        # pivot row r: c[piv[r]] + sum_f R[r, f] c_f = 0 and -x = x in char 2
        prod = ctx.mul_table[R[:, free], c[free][None, :]]
        c[piv] = np.bitwise_xor.reduce(prod, axis=1) if free.size else 0
    return c


def dimension(code: NonbinaryCode) -> int:
    return code.n - rank(code)


def n_codewords_log2(code: NonbinaryCode) -> float:
    return dimension(code) * math.log2(code.q)
