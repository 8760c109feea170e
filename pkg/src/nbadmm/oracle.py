"""Brute-force references used to certify the fast paths.

Nothing here is on the decoding hot path. The constraint-set projection and
the LP reference need the optional ``cvxpy`` / ``scipy.optimize`` solvers.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .embedding import EmbeddingKind, element_offset, embed_symbol, symbol_length
from .gf2m import FieldCtx, field_new


class OracleError(RuntimeError):
    pass


@dataclass(frozen=True)
class SpcEnumeration:
    """All codewords of one SPC code with their embedded ``L x d`` matrices."""

    q: int
    h: tuple
    words: np.ndarray      # (count, d)
    flanagan: np.ndarray   # (count, q-1, d)
    cw: np.ndarray         # (count, q, d)

    @property
    def d_c(self) -> int:
        return len(self.h)

    def matrices(self, kind) -> np.ndarray:
        return self.cw if EmbeddingKind.parse(kind) is EmbeddingKind.CONSTANT_WEIGHT else self.flanagan


def enumerate_spc(ctx: FieldCtx, h) -> SpcEnumeration:
    """Every word ``c`` with ``sum_j h_j c_j = 0``, in lexicographic order.

    The last symbol is solved for, so the order is that of the first ``d-1``.
    """
    h = tuple(int(v) for v in np.asarray(h).ravel())
    d = len(h)
    if d > 6 or ctx.q ** (d - 1) > 2 ** 20:
        raise OracleError(f"enumeration too large: q={ctx.q}, d={d}")
    if any(not 0 < v < ctx.q for v in h):
        raise OracleError("check values must be nonzero field elements")
    head = np.array(list(itertools.product(range(ctx.q), repeat=d - 1)),
                    dtype=np.int64).reshape(-1, d - 1)
    acc = np.zeros(head.shape[0], dtype=np.int64)
    for p in range(d - 1):
        acc ^= ctx.mul_table[h[p], head[:, p]]
    last = ctx.div_table[acc, h[-1]]
    words = np.concatenate([head, last[:, None]], axis=1)
    eye_f = np.vstack([np.zeros((1, ctx.q - 1)), np.eye(ctx.q - 1)])
    eye_c = np.eye(ctx.q)
    fl = eye_f[words].transpose(0, 2, 1)
    cw = eye_c[words].transpose(0, 2, 1)
    return SpcEnumeration(ctx.q, h, words, fl, cw)


def _min_norm_point(P: np.ndarray, gap_tol: float, max_iter: int):
    """Wolfe's minimum-norm-point method on the rows of ``P``; returns (x, weights)."""
    n = P.shape[0]
    norms = np.einsum("ij,ij->i", P, P)
    S = [int(np.argmin(norms))]
    lam = np.array([1.0])
    for _ in range(max_iter):
        x = lam @ P[S]
        xx = x @ x
        dots = P @ x
        j = int(np.argmin(dots))
        if xx - dots[j] <= gap_tol or j in S:
            w = np.zeros(n)
            w[S] = lam
            return x, w
        S.append(j)
        lam = np.append(lam, 0.0)
        while True:
            Q = P[S]
            k = len(S)
            A = np.zeros((k + 1, k + 1))
            A[:k, :k] = Q @ Q.T
            A[:k, k] = 1.0
            A[k, :k] = 1.0
            rhs = np.zeros(k + 1)
            rhs[k] = 1.0
            alpha = np.linalg.lstsq(A, rhs, rcond=None)[0][:k]
            if np.all(alpha > 1e-14):
                lam = alpha
                break
            neg = alpha <= 1e-14
            with np.errstate(divide="ignore", invalid="ignore"):
                ratios = np.where(neg, lam / (lam - alpha), np.inf)
            theta = min(1.0, float(np.min(ratios)))
            lam = lam + theta * (alpha - lam)
            keep = lam > 1e-14
            keep[int(np.argmin(np.where(neg, ratios, np.inf)))] = False
            S = [s for s, kp in zip(S, keep) if kp]
            lam = lam[keep]
            lam = lam / lam.sum()
    raise OracleError("hull projection did not converge")


def project_hull(points, v, gap_tol: float = 1e-10, max_iter: int = 10000,
                 return_weights: bool = False):
    """Euclidean projection of ``v`` onto the convex hull of ``points`` (rows).

    The result ``p`` satisfies ``<v - p, z - p> <= 1e-8`` for every vertex ``z``;
    :class:`OracleError` is raised if that certificate cannot be established.
    """
    P = np.asarray(points, dtype=np.float64)
    P = P.reshape(P.shape[0], -1)
    v = np.asarray(v, dtype=np.float64).ravel()
    if P.shape[1] != v.size:
        raise ValueError("dimension mismatch between points and v")
    x, w = _min_norm_point(P - v, gap_tol, max_iter)
    p = v + x
    gap = float(np.max((v - p) @ (P - p).T))
    if gap > 1e-8:
        raise OracleError(f"hull projection certificate failed (gap {gap:.3g})")
    return (p, w) if return_weights else p


def even_weight_vectors(d: int) -> np.ndarray:
    """Vertices of the parity polytope ``PP_d``."""
    V = np.array(list(itertools.product((0.0, 1.0), repeat=d)))
    return V[V.sum(axis=1) % 2 == 0]


def simplex_vertices(d: int, with_origin: bool) -> np.ndarray:
    V = np.eye(d)
    return np.vstack([np.zeros((1, d)), V]) if with_origin else V


def odd_set_inequalities(d: int):
    """``(A, b)`` with ``A g <= b`` the odd-set facets of ``PP_d`` (box excluded)."""
    rows, rhs = [], []
    for mask in range(1 << d):
        f = [(mask >> k) & 1 for k in range(d)]
        if sum(f) % 2 == 1:
            rows.append([1.0 if x else -1.0 for x in f])
            rhs.append(sum(f) - 1.0)
    return np.array(rows), np.array(rhs)


def gather_matrices(ctx: FieldCtx, kind, h) -> np.ndarray:
    """``T[K-1]`` maps the flattened ``L x d`` matrix to ``g^K``; shape (q-1, d, L*d)."""
    kind = EmbeddingKind.parse(kind)
    h = np.asarray(h, dtype=np.int64).ravel()
    L = symbol_length(kind, ctx.q)
    off = element_offset(kind)
    d = h.size
    T = np.zeros((ctx.q - 1, d, L * d))
    for K in range(1, ctx.q):
        for p in range(d):
            for a in np.flatnonzero(ctx.membership[K, h[p]]):
                T[K - 1, p, (a - off) * d + p] = 1.0
    return T


def _polytope_constraints(cp, F, ctx, kind, h):
    kind = EmbeddingKind.parse(kind)
    d = len(h)
    T = gather_matrices(ctx, kind, h)
    A, b = odd_set_inequalities(d)
    f = cp.vec(F, order="C")
    cons = [F >= 0, F <= 1]
    colsum = cp.sum(F, axis=0)
    cons.append(colsum == 1 if kind is EmbeddingKind.CONSTANT_WEIGHT else colsum <= 1)
    for K in range(ctx.q - 1):
        g = T[K] @ f
        cons += [A @ g <= b, g >= 0, g <= 1]
    return cons


def project_constraint_set(ctx: FieldCtx, kind, h, v) -> np.ndarray:
    """Projection onto the relaxed code polytope written out as linear constraints.

    ``v`` is the ``L x d`` matrix. Solved with cvxpy (Clarabel).
    """
    import cvxpy as cp

    kind = EmbeddingKind.parse(kind)
    h = [int(x) for x in np.asarray(h).ravel()]
    L = symbol_length(kind, ctx.q)
    V = np.asarray(v, dtype=np.float64).reshape(L, len(h))
    F = cp.Variable((L, len(h)))
    prob = cp.Problem(cp.Minimize(cp.sum_squares(F - V)),
                      _polytope_constraints(cp, F, ctx, kind, h))
    prob.solve(solver=cp.CLARABEL, tol_gap_abs=1e-11, tol_gap_rel=1e-11,
               tol_feas=1e-11)
    if prob.status not in ("optimal", "optimal_inaccurate"):
        raise OracleError(f"constraint projection failed: {prob.status}")
    return np.asarray(F.value)


def lp_oracle(code, llr, kind, return_value: bool = False):
    """Solve the relaxed LP ``min llr.x`` over the code's relaxed polytopes with HiGHS.

    ``x`` is flat symbol-major of length ``N * L``. Returns the optimizer
    (and the optimum value when ``return_value``).
    """
    A, b, Aeq, beq = relaxed_lp_constraints(code, kind)
    from scipy.optimize import linprog

    c = np.asarray(llr, dtype=np.float64).ravel()
    res = linprog(c, A_ub=A, b_ub=b, A_eq=Aeq, b_eq=beq, bounds=(0, 1), method="highs")
    if res.status != 0:
        raise OracleError(f"LP oracle failed: {res.message}")
    return (res.x, float(res.fun)) if return_value else res.x


def relaxed_lp_constraints(code, kind):
    """Dense ``(A_ub, b_ub, A_eq, b_eq)`` describing the relaxed polytope of ``code``."""
    kind = EmbeddingKind.parse(kind)
    ctx = code.field()
    L = symbol_length(kind, code.q)
    off = element_offset(kind)
    n = code.n * L
    A_rows, b_rows, E_rows, e_rows = [], [], [], []
    for i in range(code.n):
        row = np.zeros(n)
        row[i * L:(i + 1) * L] = 1.0
        if kind is EmbeddingKind.CONSTANT_WEIGHT:
            E_rows.append(row)
            e_rows.append(1.0)
        else:
            A_rows.append(row)
            b_rows.append(1.0)
    for cols, vals in code.rows:
        d = cols.size
        Aodd, bodd = odd_set_inequalities(d)
        for K in range(1, code.q):
            G = np.zeros((d, n))
            for p, (i, h) in enumerate(zip(cols, vals)):
                G[p, i * L + np.flatnonzero(ctx.membership[K, h]) - off] = 1.0
            A_rows.extend(Aodd @ G)
            b_rows.extend(bodd)
    A = np.array(A_rows)
    b = np.array(b_rows)
    Aeq = np.array(E_rows) if E_rows else None
    beq = np.array(e_rows) if e_rows else None
    return A, b, Aeq, beq


def lp_solution_unique(code, llr, kind, tol: float = 1e-7) -> bool:
    """True when every coordinate of the LP optimizer is pinned by the optimum value."""
    from scipy.optimize import linprog

    A, b, Aeq, beq = relaxed_lp_constraints(code, kind)
    c = np.asarray(llr, dtype=np.float64).ravel()
    x, val = lp_oracle(code, c, kind, return_value=True)
    A2 = np.vstack([A, c])
    b2 = np.append(b, val + 1e-9 * max(1.0, abs(val)))
    for k in range(c.size):
        e = np.zeros(c.size)
        e[k] = 1.0
        lo = linprog(e, A_ub=A2, b_ub=b2, A_eq=Aeq, b_eq=beq, bounds=(0, 1), method="highs")
        hi = linprog(-e, A_ub=A2, b_ub=b2, A_eq=Aeq, b_eq=beq, bounds=(0, 1), method="highs")
        if lo.status != 0 or hi.status != 0 or (-hi.fun - lo.fun) > tol:
            return False
    return True


def phi_matrix(m: int) -> np.ndarray:
    """``2^(m-1)`` on the diagonal and ``2^(m-2)`` off it, size ``2^m - 1``."""
    n = 2 ** m - 1
    return np.full((n, n), 2.0 ** (m - 2)) + (2.0 ** (m - 1) - 2.0 ** (m - 2)) * np.eye(n)


def dense_xupdate_oracle(m: int, d_v: int, t, c: float = 1.0) -> np.ndarray:
    """Solve ``(d_v Phi + c I) x = t`` with a dense factorization."""
    Phi = phi_matrix(m)
    return np.linalg.solve(d_v * Phi + c * np.eye(Phi.shape[0]), np.asarray(t, dtype=np.float64))


def assembled_gram(ctx: FieldCtx, h) -> np.ndarray:
    """``sum_K T_K^T T_K`` for the Flanagan gathers of check ``h`` (symbol-major order)."""
    h = np.asarray(h, dtype=np.int64).ravel()
    d = h.size
    L = ctx.q - 1
    T = gather_matrices(ctx, EmbeddingKind.FLANAGAN, h)
    G = np.einsum("kpi,kpj->ij", T, T)
    # reorder from element-major (a*d + p) to symbol-major (p*L + a)
    order = np.array([(a * d + p) for p in range(d) for a in range(L)])
    return G[np.ix_(order, order)]


def subset_parity_counts(n: int):
    """Exhaustive check of the subset-parity counts for length-``n`` binary vectors.

    For every nonzero ``u != v`` counts the nonempty index sets ``K`` with odd
    ``sum_K v`` and with both ``sum_K u`` and ``sum_K v`` odd. Returns the
    sets of observed counts ``(single, joint)``.
    """
    single, joint = set(), set()
    for v in range(1, 1 << n):
        cnt = sum(bin(K & v).count("1") & 1 for K in range(1, 1 << n))
        single.add(cnt)
        for u in range(1, 1 << n):
            if u == v:
                continue
            joint.add(sum((bin(K & v).count("1") & bin(K & u).count("1") & 1)
                          for K in range(1, 1 << n)))
    return single, joint


@dataclass
class ConjectureReport:
    d: int
    trials: int
    seed: int
    max_diff: float
    mean_diff: float
    degraded: int

    def as_text(self) -> str:
        return (f"d = {self.d}\ntrials = {self.trials}\nseed = {self.seed}\n"
                f"max_diff = {self.max_diff:.3e}\nmean_diff = {self.mean_diff:.3e}\n"
                f"degraded = {self.degraded}\n")


def validate_conjecture_gf4(d: int, trials: int, seed: int, inner_eps: float = 1e-9,
                            inner_t_max: int = 20000, low: float = 0.0,
                            high: float = 4.0) -> ConjectureReport:
    """Compare projections onto the GF(4) relaxed polytope and the codeword hull.

    Random ``3 x d`` matrices with i.i.d. uniform ``[low, high]`` entries are
    projected onto the hull of the valid embeddings for the all-ones check
    (exact, :func:`project_hull`) and onto the relaxed polytope (inner ADMM).
    """
    from .decoder_penalized import InnerProjectionState, project_relaxed_code_polytope

    if not 2 <= d <= 6:
        raise ValueError("d must lie in [2, 6]")
    ctx = field_new(2)
    h = np.ones(d, dtype=np.int64)
    verts = enumerate_spc(ctx, h).flanagan.reshape(-1, 3 * d)
    rng = np.random.default_rng(seed)
    diffs = np.empty(trials)
    degraded = 0
    for t in range(trials):
        V = rng.uniform(low, high, size=(3, d))
        ph = project_hull(verts, V.ravel()).reshape(3, d)
        pu, _, ok = project_relaxed_code_polytope(
            ctx, h, V, EmbeddingKind.FLANAGAN, inner_eps=inner_eps,
            inner_t_max=inner_t_max, state=InnerProjectionState.fresh(d, 4, "flanagan"),
            return_info=True)
        degraded += not ok
        diffs[t] = np.linalg.norm(ph - pu)
    return ConjectureReport(d, trials, seed, float(diffs.max()) if trials else 0.0,
                            float(diffs.mean()) if trials else 0.0, degraded)


def embedded_matrix(ctx: FieldCtx, kind, c) -> np.ndarray:
    """``L x d`` embedded matrix of a short word (columns are symbols)."""
    return np.stack([embed_symbol(ctx, kind, a) for a in np.asarray(c).ravel()], axis=1)
