"""ADMM LP decoding over the relaxed code polytope with a factor split.

Each check ``j`` and nonempty bit subset ``K`` contributes a replica
``z[j, K]`` of the vector ``g^K`` (one entry per check neighbour) that must lie
in the parity polytope, and each variable ``i`` has a replica ``s_i`` in the
simplex. Because the x-update system is block diagonal with blocks
``d_v(i) * Phi + I`` (``Phi`` has ``2^(m-1)`` on the diagonal and ``2^(m-2)``
elsewhere), it is solved in closed form per symbol.

The same kernel serves the Flanagan embedding (symbol length ``q-1``,
simplex ``sum <= 1``) and the constant-weight embedding (length ``q``,
``sum == 1``; coordinate 0 never enters a parity gather, so its x-update is
the identity part alone). With ``alpha > 0`` in CW mode the objective gets the
``-alpha * ||x_i - 1/q||^2`` penalty (the fast penalized variant).
"""

from __future__ import annotations

import enum
import time
from dataclasses import dataclass, field, replace

import numpy as np
from numba import njit

from .code_model import NonbinaryCode, code_graph, edge_gather
from .embedding import EmbeddingKind, symbol_length
from .projections import parity_polytope_kernel, simplex_eq_kernel, simplex_leq_kernel
from .tolerances import TOL


class DecodeStatus(enum.IntEnum):
    CODEWORD_CONVERGED = 0
    CODEWORD_EARLY = 1
    FRACTIONAL_AT_TMAX = 2
    TOLERANCE_REACHED = 3

    @property
    def is_codeword(self) -> bool:
        return self in (DecodeStatus.CODEWORD_CONVERGED, DecodeStatus.CODEWORD_EARLY)


@dataclass
class DecodeOutcome:
    """Result of one decode.

    ``solution`` is the final relaxed primal vector ``x`` (flat, symbol-major).
    """

    word: np.ndarray
    status: DecodeStatus
    iterations: int
    wall_time: float
    solution: np.ndarray = field(repr=False, default=None)
    degraded_inner: int = 0


@dataclass(frozen=True)
class LpDecoderParams:
    mu: float = 2.0
    rho: float = 1.9
    t_max: int = 200
    eps: float = 1e-5
    early_term: bool = True
    kind: EmbeddingKind = EmbeddingKind.FLANAGAN

    def __post_init__(self):
        if not self.mu > 0:
            raise ValueError("mu must be positive")
        if not 1.0 <= self.rho < 2.0:
            raise ValueError("rho must lie in [1, 2)")
        if not self.eps > 0:
            raise ValueError("eps must be positive")
        if int(self.t_max) < 1:
            raise ValueError("t_max must be at least 1")
        object.__setattr__(self, "kind", EmbeddingKind.parse(self.kind))


def xupdate_coefficients(m: int, d_v, c: float = 1.0):
    """Coefficients ``(a, b)`` of ``(d_v * Phi + c * I)^-1 = (a - b) I + b J``.

    ``Phi`` is ``(2^m - 1)``-square with ``2^(m-1)`` on the diagonal and
    ``2^(m-2)`` off it. Works elementwise on an array of degrees.
    """
    n = 2 ** m - 1
    d_v = np.asarray(d_v, dtype=np.float64)
    r = d_v * 2.0 ** (m - 1) + c
    s = d_v * 2.0 ** (m - 2)
    b = -s / ((r - s) * (r + s * (n - 1)))
    a = 1.0 / (r - s) + b
    return a, b


@dataclass
class DecoderState:
    """ADMM iterates; shapes use E edges, L symbol length, nK = q-1."""

    x: np.ndarray        # (N*L,)
    z: np.ndarray        # (E, nK)
    lam: np.ndarray      # (E, nK)
    s: np.ndarray        # (N, L)
    eta: np.ndarray      # (N, L)
    iteration: int = 0
    primal_residual: float = np.inf
    dual_residual: float = np.inf


@njit(cache=True)
def _argmax_word(s, flanagan, word):
    N, L = s.shape
    for i in range(N):
        if flanagan:
            best = 1.0
            for k in range(L):
                best -= s[i, k]
            arg = 0
            for k in range(L):
                if s[i, k] > best:
                    best = s[i, k]
                    arg = k + 1
        else:
            best = s[i, 0]
            arg = 0
            for k in range(1, L):
                if s[i, k] > best:
                    best = s[i, k]
                    arg = k
        word[i] = arg


@njit(cache=True)
def syndrome_zero_kernel(word, edge_var, edge_val, check_ptr, mul_table):
    M = check_ptr.shape[0] - 1
    for j in range(M):
        acc = 0
        for e in range(check_ptr[j], check_ptr[j + 1]):
            acc ^= mul_table[edge_val[e], word[edge_var[e]]]
        if acc != 0:
            return False
    return True


@njit(cache=True, error_model='numpy')
def _lp_iterations(llr, x, z, lam, s, eta, gather, edge_var, edge_val, check_ptr,
                   mul_table, coef_a, coef_b, coef0, flanagan, tshift, mu, rho,
                   thresh, n_iter, early_term, check_stop, word, t, out_res):
    """Run up to ``n_iter`` iterations in place.

    Returns ``(iterations_done, reason)`` with reason 0 = budget used,
    1 = tolerance met, 2 = early termination found a codeword (in ``word``).
    """
    N, L = s.shape
    E, nK = z.shape
    half = gather.shape[2]
    M = check_ptr.shape[0] - 1
    maxdc = 0
    for j in range(M):
        dc = check_ptr[j + 1] - check_ptr[j]
        if dc > maxdc:
            maxdc = dc
    vbuf = np.empty(maxdc)
    obuf = np.empty(maxdc)
    gbuf = np.empty(maxdc)
    theta = np.empty(maxdc)
    work = np.empty(4 * maxdc + L)
    ubuf = np.empty(L)
    sbuf = np.empty(L)
    inv_mu = 1.0 / mu
    for it in range(n_iter):
        # x-update: t = scatter(z - lam/mu) + s - eta/mu - llr/mu (+ penalty shift)
        for i in range(N):
            for k in range(L):
                t[i * L + k] = s[i, k] - eta[i, k] * inv_mu - llr[i * L + k] * inv_mu + tshift
        for e in range(E):
            for K in range(nK):
                val = z[e, K] - lam[e, K] * inv_mu
                for h in range(half):
                    t[gather[e, K, h]] += val
        for i in range(N):
            base = i * L
            start = 0
            if not flanagan:
                x[base] = coef0[i] * t[base]
                start = 1
            tot = 0.0
            for k in range(start, L):
                tot += t[base + k]
            a = coef_a[i]
            b = coef_b[i]
            for k in range(start, L):
                x[base + k] = (a - b) * t[base + k] + b * tot
        # z-update and its duals
        rp = 0.0
        rd = 0.0
        for j in range(M):
            e0 = check_ptr[j]
            dc = check_ptr[j + 1] - e0
            for K in range(nK):
                for p in range(dc):
                    e = e0 + p
                    g = 0.0
                    for h in range(half):
                        g += x[gather[e, K, h]]
                    gbuf[p] = g
                    gh = rho * g + (1.0 - rho) * z[e, K]
                    vbuf[p] = gh + lam[e, K] * inv_mu
                parity_polytope_kernel(vbuf, obuf, dc, theta, work)
                for p in range(dc):
                    e = e0 + p
                    zo = z[e, K]
                    zn = obuf[p]
                    gh = rho * gbuf[p] + (1.0 - rho) * zo
                    lam[e, K] += mu * (gh - zn)
                    rp += (gbuf[p] - zn) ** 2
                    rd += (zn - zo) ** 2
                    z[e, K] = zn
        # s-update and its duals
        for i in range(N):
            base = i * L
            for k in range(L):
                ubuf[k] = rho * x[base + k] + (1.0 - rho) * s[i, k] + eta[i, k] * inv_mu
            if flanagan:
                simplex_leq_kernel(ubuf, sbuf, L, work)
            else:
                simplex_eq_kernel(ubuf, sbuf, L, work)
            for k in range(L):
                so = s[i, k]
                sn = sbuf[k]
                xh = rho * x[base + k] + (1.0 - rho) * so
                eta[i, k] += mu * (xh - sn)
                rp += (x[base + k] - sn) ** 2
                rd += (sn - so) ** 2
                s[i, k] = sn
        out_res[0] = rp
        out_res[1] = rd
        if early_term:
            _argmax_word(s, flanagan, word)
            if syndrome_zero_kernel(word, edge_var, edge_val, check_ptr, mul_table):
                return it + 1, 2
        if check_stop and rp < thresh and rd < thresh:
            return it + 1, 1
    return n_iter, 0


class LpDecoder:
    """Reusable ADMM LP decoder bound to one code.

    Parameters
    ----------
    code : NonbinaryCode
    params : LpDecoderParams
    alpha : float
        Penalty coefficient for the fast penalized variant (CW only).
    """

    def __init__(self, code: NonbinaryCode, params: LpDecoderParams = LpDecoderParams(),
                 alpha: float = 0.0):
        self.code = code
        self.params = params
        self.alpha = float(alpha)
        self.kind = params.kind
        if self.alpha and self.kind is not EmbeddingKind.CONSTANT_WEIGHT:
            raise ValueError("the penalty is only defined for the constant-weight embedding")
        c = 1.0 - 2.0 * self.alpha / params.mu
        if c <= 0:
            raise ValueError("1 - 2*alpha/mu must be positive for the penalized x-update")
        self.graph = code_graph(code)
        self.gather = edge_gather(code, self.kind)
        self.L = symbol_length(self.kind, code.q)
        self.nK = code.q - 1
        dv = self.graph.var_degree.astype(np.float64)
        self.coef_a, self.coef_b = xupdate_coefficients(code.m, dv, c)
        self.coef0 = np.full(code.n, 1.0 / c)
        self.tshift = 2.0 * self.alpha / (params.mu * code.q) if self.alpha else 0.0
        n_entries = self.L * code.n + self.nK * int(self.graph.check_degree.sum())
        self.threshold = params.eps ** 2 * n_entries

    def init_state(self) -> DecoderState:
        g = self.graph
        E = g.edge_var.size
        fill = 1.0 / self.code.q
        return DecoderState(
            x=np.zeros(g.n * self.L),
            z=np.full((E, self.nK), fill),
            lam=np.zeros((E, self.nK)),
            s=np.full((g.n, self.L), fill),
            eta=np.zeros((g.n, self.L)))

    def prepare_llr(self, llr) -> np.ndarray:
        llr = np.asarray(llr, dtype=np.float64).reshape(-1)
        if llr.size != self.code.n * self.L:
            raise ValueError(f"expected {self.code.n} x {self.L} LLRs, got {llr.size} values")
        return np.clip(llr, -TOL.llr_clip, TOL.llr_clip)

    def run(self, state: DecoderState, llr, n_iter: int, early_term=None,
            check_stop: bool = True):
        """Advance ``state`` by up to ``n_iter`` iterations; returns (done, reason, word)."""
        p = self.params
        g = self.graph
        llr = self.prepare_llr(llr)
        early = p.early_term if early_term is None else early_term
        word = np.zeros(g.n, dtype=np.int64)
        res = np.zeros(2)
        t = np.empty(g.n * self.L)
        done, reason = _lp_iterations(
            llr, state.x, state.z, state.lam, state.s, state.eta, self.gather,
            g.edge_var, g.edge_val, g.check_ptr, g.mul_table, self.coef_a, self.coef_b,
            self.coef0, self.kind is EmbeddingKind.FLANAGAN, self.tshift, p.mu, p.rho,
            self.threshold, int(n_iter), bool(early), bool(check_stop), word, t, res)
        state.iteration += int(done)
        state.primal_residual, state.dual_residual = float(res[0]), float(res[1])
        return int(done), int(reason), word

    def hard_decision(self, state: DecoderState) -> np.ndarray:
        word = np.zeros(self.code.n, dtype=np.int64)
        _argmax_word(state.s, self.kind is EmbeddingKind.FLANAGAN, word)
        return word

    def decode(self, llr) -> DecodeOutcome:
        t0 = time.perf_counter()
        state = self.init_state()
        done, reason, word = self.run(state, llr, self.params.t_max)
        if reason == 2:
            status = DecodeStatus.CODEWORD_EARLY
        else:
            word = self.hard_decision(state)
            g = self.graph
            if syndrome_zero_kernel(word, g.edge_var, g.edge_val, g.check_ptr, g.mul_table):
                status = DecodeStatus.CODEWORD_CONVERGED
            elif reason == 1:
                status = DecodeStatus.TOLERANCE_REACHED
            else:
                status = DecodeStatus.FRACTIONAL_AT_TMAX
        return DecodeOutcome(word, status, state.iteration, time.perf_counter() - t0,
                             state.x.copy())


def decode_lp(ctx, code: NonbinaryCode, contexts, llr,
              params: LpDecoderParams = LpDecoderParams()) -> DecodeOutcome:
    """Decode one word with the ADMM LP decoder.

    ``ctx`` and ``contexts`` are accepted for interface symmetry; the decoder
    derives its flat structures from ``code`` (cached on the code object).
    """
    if ctx is not None and ctx.q != code.q:
        raise ValueError("field and code disagree on q")
    return LpDecoder(code, params).decode(llr)


def x_update_closed_form(code: NonbinaryCode, contexts, state: DecoderState, llr,
                         params: LpDecoderParams = LpDecoderParams()) -> np.ndarray:
    """Stand-alone x-update built from the per-check contexts (no numba).

    Returns the new ``x`` without touching ``state``.
    """
    kind = params.kind
    L = symbol_length(kind, code.q)
    llr = np.clip(np.asarray(llr, dtype=np.float64).reshape(-1), -TOL.llr_clip, TOL.llr_clip)
    t = (state.s - state.eta / params.mu).reshape(-1) - llr / params.mu
    graph = code_graph(code)
    for ctxj in contexts:
        e0 = graph.check_ptr[ctxj.index]
        for p in range(ctxj.degree):
            for K in range(code.q - 1):
                val = state.z[e0 + p, K] - state.lam[e0 + p, K] / params.mu
                np.add.at(t, ctxj.gather[K, p], val)
    T = t.reshape(code.n, L)
    a, b = xupdate_coefficients(code.m, code.var_degree)
    x = np.empty_like(T)
    start = 0
    if kind is EmbeddingKind.CONSTANT_WEIGHT:
        x[:, 0] = T[:, 0]
        start = 1
    tot = T[:, start:].sum(axis=1)
    x[:, start:] = (a - b)[:, None] * T[:, start:] + (b * tot)[:, None]
    return x.reshape(-1)


def with_kind(params: LpDecoderParams, kind) -> LpDecoderParams:
    return replace(params, kind=EmbeddingKind.parse(kind))
