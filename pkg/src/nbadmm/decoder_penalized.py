"""ADMM penalized decoding under the constant-weight embedding.

The objective is ``gamma'.x - alpha * sum_i ||x_i - r||^2`` with
``r = (1/q, ..., 1/q)`` over the intersection of the per-check relaxed code
polytopes. Each outer iteration

* updates every symbol ``x_i`` by a simplex projection of the scaled,
  penalty-shifted average of its check replicas;
* projects ``v_j = P_j x + lambda_j / mu`` of every check onto that check's
  relaxed code polytope by rotating to the all-ones check, running an inner
  consensus ADMM and rotating back;
* updates the duals.

Over-relaxation with ``rho`` is applied to the z-update input and the duals
in the same way as in the LP decoder.

Inner ADMM (normalized check, ``q x d`` matrix variable ``F``)::

    min 1/2 ||F - V||^2   s.t.   F[:, p] in simplex,  T_K F in PP_d  for all K

with one replica per simplex column and one per parity image ``T_K F``.
The F-update solves ``((1 + mu_in) I + mu_in Phi') f = r`` per column under
``1^T f = 1`` (the column sums of any feasible point are one; keeping them
exact during the iteration makes the inner iterates commute with the
relative mapping). Replicas and duals persist per check across outer
iterations (warm start).
"""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, replace

import numpy as np
from numba import njit

from .channel import Modulation, llr as channel_llr, supports_relative_symmetry, tau_relative
from .code_model import NonbinaryCode, code_graph, rotation_perm
from .decoder_lp import (DecodeOutcome, DecodeStatus, LpDecoder, LpDecoderParams,
                         syndrome_zero_kernel, xupdate_coefficients)
from .embedding import EmbeddingKind
from .gf2m import FieldCtx
from .projections import parity_polytope_kernel, simplex_eq_kernel, simplex_leq_kernel
from .tolerances import TOL


@dataclass(frozen=True)
class PenalizedParams:
    """Parameters of the penalized decoder.

    ``alpha = 0`` gives the plain LP objective over the relaxed polytopes.
    """

    mu: float = 4.0
    rho: float = 1.5
    alpha: float = 0.6
    t_max: int = 100
    eps: float = 1e-5
    inner_t_max: int = 100
    inner_eps: float = 1e-5
    inner_mu: float = 1.0
    early_term: bool = True

    def __post_init__(self):
        if not self.mu > 0:
            raise ValueError("mu must be positive")
        if not 1.0 <= self.rho < 2.0:
            raise ValueError("rho must lie in [1, 2)")
        if self.alpha < 0:
            raise ValueError("alpha must be nonnegative")
        if not (self.eps > 0 and self.inner_eps > 0 and self.inner_mu > 0):
            raise ValueError("eps, inner_eps and inner_mu must be positive")
        if int(self.t_max) < 1 or int(self.inner_t_max) < 1:
            raise ValueError("t_max and inner_t_max must be at least 1")

    def check_code(self, code: NonbinaryCode) -> None:
        dmin = int(code.var_degree.min()) if code.n else 0
        if dmin - 2.0 * self.alpha / self.mu <= 0:
            raise ValueError(
                f"x-update divisor d_v - 2*alpha/mu = {dmin - 2 * self.alpha / self.mu:g} "
                f"must be positive (alpha={self.alpha}, mu={self.mu}, min degree {dmin})")


@dataclass
class InnerProjectionState:
    """Replicas and duals of the inner ADMM for one check, in normalized coordinates.

    ``S``/``LS`` have shape ``(d, L)`` (simplex replica per column);
    ``Y``/``LY`` have shape ``(d, q-1)`` (parity image per K, stored per column).
    """

    S: np.ndarray
    LS: np.ndarray
    Y: np.ndarray
    LY: np.ndarray

    @classmethod
    def fresh(cls, d: int, q: int, kind=EmbeddingKind.CONSTANT_WEIGHT):
        L = q if EmbeddingKind.parse(kind) is EmbeddingKind.CONSTANT_WEIGHT else q - 1
        return cls(np.full((d, L), 1.0 / q), np.zeros((d, L)),
                   np.full((d, q - 1), 0.5), np.zeros((d, q - 1)))


def _inner_coefficients(m: int, inner_mu: float):
    # ((1 + mu) I + mu Phi)^-1 on the nonzero elements, 1/(1 + mu) on element 0
    a, b = xupdate_coefficients(m, inner_mu, 1.0 + inner_mu)
    return float(a), float(b), 1.0 / (1.0 + inner_mu)


def _normalized_members(ctx: FieldCtx, kind) -> np.ndarray:
    """Local coordinates of Bt(K, 1) for every K; shape (q-1, q/2)."""
    off = 0 if EmbeddingKind.parse(kind) is EmbeddingKind.CONSTANT_WEIGHT else 1
    return np.stack([np.flatnonzero(ctx.membership[K, 1]) - off
                     for K in range(1, ctx.q)]).astype(np.int64)


@njit(cache=True)
def _inner_project(V, d, L, members, S, LS, Y, LY, F, mu_in, ca, cb, c0, cw,
                   eps_in, t_max_in, buf, obuf, theta, work):
    """Inner consensus ADMM; writes the projection estimate into ``F[:d, :L]``.

    ``V`` is ``(maxd, L)`` with columns as rows. Returns (iterations, converged).
    """
    nK, half = members.shape
    start = 1 if cw else 0
    inv_mu = 1.0 / mu_in
    thresh = eps_in * eps_in * d * (L + nK)
    for it in range(t_max_in):
        # F-update, column by column
        for p in range(d):
            for a in range(L):
                buf[a] = V[p, a] + mu_in * S[p, a] - LS[p, a]
            for K in range(nK):
                val = mu_in * Y[p, K] - LY[p, K]
                for h in range(half):
                    buf[members[K, h]] += val
            tot = 0.0
            for a in range(start, L):
                tot += buf[a]
            for a in range(start, L):
                F[p, a] = (ca - cb) * buf[a] + cb * tot
            if cw:
                F[p, 0] = c0 * buf[0]
                # add nu * H^-1 1 so that the column sums to one
                hs = c0 + (L - 1) * (ca - cb) + (L - 1) * (L - 1) * cb
                fs = 0.0
                for a in range(L):
                    fs += F[p, a]
                nu = (1.0 - fs) / hs
                F[p, 0] += nu * c0
                rowv = nu * ((ca - cb) + (L - 1) * cb)
                for a in range(1, L):
                    F[p, a] += rowv
        rp = 0.0
        rd = 0.0
        # simplex replicas
        for p in range(d):
            for a in range(L):
                buf[a] = F[p, a] + LS[p, a] * inv_mu
            if cw:
                simplex_eq_kernel(buf, obuf, L, work)
            else:
                simplex_leq_kernel(buf, obuf, L, work)
            for a in range(L):
                so = S[p, a]
                sn = obuf[a]
                LS[p, a] += mu_in * (F[p, a] - sn)
                rp += (F[p, a] - sn) ** 2
                rd += (sn - so) ** 2
                S[p, a] = sn
        # parity images
        for K in range(nK):
            for p in range(d):
                g = 0.0
                for h in range(half):
                    g += F[p, members[K, h]]
                work[L + p] = g
                buf[p] = g + LY[p, K] * inv_mu
            parity_polytope_kernel(buf, obuf, d, theta, work[L + d:])
            for p in range(d):
                g = work[L + p]
                yo = Y[p, K]
                yn = obuf[p]
                LY[p, K] += mu_in * (g - yn)
                rp += (g - yn) ** 2
                rd += (yn - yo) ** 2
                Y[p, K] = yn
        if rp < thresh and rd < thresh:
            return it + 1, True
    return t_max_in, False


@njit(cache=True)
def _argmax_rows(x, word):
    N, L = x.shape
    for i in range(N):
        best = x[i, 0]
        arg = 0
        for a in range(1, L):
            if x[i, a] > best:
                best = x[i, a]
                arg = a
        word[i] = arg


@njit(cache=True, error_model='numpy')
def _penalized_iterations(gam, x, z, lam, S, LS, Y, LY, var_ptr, var_edges, edge_var,
                          edge_val, check_ptr, mul_table, members, mu, rho, alpha,
                          mu_in, ca, cb, c0, eps_in, t_max_in, thresh, n_iter,
                          early_term, check_stop, word, out_res, out_deg):
    """Up to ``n_iter`` outer iterations in place; reasons as in the LP kernel."""
    N, q = x.shape
    M = check_ptr.shape[0] - 1
    maxd = 0
    for j in range(M):
        maxd = max(maxd, check_ptr[j + 1] - check_ptr[j])
    V = np.empty((maxd, q))
    F = np.empty((maxd, q))
    G = np.empty((maxd, q))
    buf = np.empty(max(q, maxd))
    obuf = np.empty(max(q, maxd))
    theta = np.empty(maxd)
    work = np.empty(q + maxd + 4 * maxd + q)
    u = np.empty(q)
    xs = np.empty(q)
    inv_mu = 1.0 / mu
    shift = 2.0 * alpha / (mu * q)
    for it in range(n_iter):
        for i in range(N):
            e0 = var_ptr[i]
            e1 = var_ptr[i + 1]
            scale = 1.0 / ((e1 - e0) - 2.0 * alpha * inv_mu)
            for a in range(q):
                acc = -gam[i, a] * inv_mu - shift
                for k in range(e0, e1):
                    e = var_edges[k]
                    acc += z[e, a] - lam[e, a] * inv_mu
                u[a] = acc * scale
            simplex_eq_kernel(u, xs, q, work)
            for a in range(q):
                x[i, a] = xs[a]
        rp = 0.0
        rd = 0.0
        for j in range(M):
            e0 = check_ptr[j]
            d = check_ptr[j + 1] - e0
            # rotate to the all-ones check: normalized index of element a is a*h
            for p in range(d):
                e = e0 + p
                h = edge_val[e]
                i = edge_var[e]
                for a in range(q):
                    gh = rho * x[i, a] + (1.0 - rho) * z[e, a]
                    G[p, a] = x[i, a]
                    V[p, mul_table[a, h]] = gh + lam[e, a] * inv_mu
            _, ok = _inner_project(V, d, q, members, S[e0:e0 + d], LS[e0:e0 + d],
                                   Y[e0:e0 + d], LY[e0:e0 + d], F, mu_in, ca, cb, c0,
                                   True, eps_in, t_max_in, buf, obuf, theta, work)
            if not ok:
                out_deg[0] += 1
            for p in range(d):
                e = e0 + p
                h = edge_val[e]
                for a in range(q):
                    zo = z[e, a]
                    zn = F[p, mul_table[a, h]]
                    gh = rho * G[p, a] + (1.0 - rho) * zo
                    lam[e, a] += mu * (gh - zn)
                    rp += (G[p, a] - zn) ** 2
                    rd += (zn - zo) ** 2
                    z[e, a] = zn
        out_res[0] = rp
        out_res[1] = rd
        if early_term:
            _argmax_rows(x, word)
            if syndrome_zero_kernel(word, edge_var, edge_val, check_ptr, mul_table):
                return it + 1, 2
        if check_stop and rp < thresh and rd < thresh:
            return it + 1, 1
    return n_iter, 0


@dataclass
class PenalizedState:
    x: np.ndarray      # (N, q)
    z: np.ndarray      # (E, q)
    lam: np.ndarray    # (E, q)
    S: np.ndarray      # (E, q) inner simplex replicas, normalized coordinates
    LS: np.ndarray
    Y: np.ndarray      # (E, q-1) inner parity images
    LY: np.ndarray
    iteration: int = 0
    degraded_inner: int = 0
    primal_residual: float = np.inf
    dual_residual: float = np.inf

    def copy(self) -> "PenalizedState":
        return PenalizedState(*(getattr(self, f).copy() for f in
                                ("x", "z", "lam", "S", "LS", "Y", "LY")),
                              self.iteration, self.degraded_inner,
                              self.primal_residual, self.dual_residual)


class PenalizedDecoder:
    """Reusable penalized decoder bound to one code (constant-weight LLRs)."""

    def __init__(self, code: NonbinaryCode, params: PenalizedParams = PenalizedParams()):
        params.check_code(code)
        self.code = code
        self.params = params
        self.graph = code_graph(code)
        self.ctx = code.field()
        self.members = _normalized_members(self.ctx, EmbeddingKind.CONSTANT_WEIGHT)
        self.ca, self.cb, self.c0 = _inner_coefficients(code.m, params.inner_mu)
        self.threshold = params.eps ** 2 * code.q * int(self.graph.check_degree.sum())

    def init_state(self) -> PenalizedState:
        E = self.graph.edge_var.size
        q = self.code.q
        return PenalizedState(
            x=np.zeros((self.code.n, q)), z=np.full((E, q), 0.5), lam=np.zeros((E, q)),
            S=np.full((E, q), 1.0 / q), LS=np.zeros((E, q)),
            Y=np.full((E, q - 1), 0.5), LY=np.zeros((E, q - 1)))

    def prepare_llr(self, llr_cw) -> np.ndarray:
        g = np.asarray(llr_cw, dtype=np.float64).reshape(-1)
        if g.size != self.code.n * self.code.q:
            raise ValueError(f"expected {self.code.n} x {self.code.q} CW LLRs, got {g.size}")
        return np.clip(g, -TOL.llr_clip, TOL.llr_clip).reshape(self.code.n, self.code.q)

    def run(self, state: PenalizedState, llr_cw, n_iter: int, early_term=None,
            check_stop: bool = True):
        p = self.params
        g = self.graph
        gam = self.prepare_llr(llr_cw)
        early = p.early_term if early_term is None else early_term
        word = np.zeros(self.code.n, dtype=np.int64)
        res = np.zeros(2)
        deg = np.zeros(1, dtype=np.int64)
        done, reason = _penalized_iterations(
            gam, state.x, state.z, state.lam, state.S, state.LS, state.Y, state.LY,
            g.var_ptr, g.var_edges, g.edge_var, g.edge_val, g.check_ptr, g.mul_table,
            self.members, p.mu, p.rho, p.alpha, p.inner_mu, self.ca, self.cb, self.c0,
            p.inner_eps, int(p.inner_t_max), self.threshold, int(n_iter), bool(early),
            bool(check_stop), word, res, deg)
        state.iteration += int(done)
        state.degraded_inner += int(deg[0])
        state.primal_residual, state.dual_residual = float(res[0]), float(res[1])
        return int(done), int(reason), word

    def hard_decision(self, state: PenalizedState) -> np.ndarray:
        word = np.zeros(self.code.n, dtype=np.int64)
        _argmax_rows(state.x, word)
        return word

    def decode(self, llr_cw) -> DecodeOutcome:
        t0 = time.perf_counter()
        state = self.init_state()
        done, reason, word = self.run(state, llr_cw, self.params.t_max)
        g = self.graph
        if reason == 2:
            status = DecodeStatus.CODEWORD_EARLY
        else:
            word = self.hard_decision(state)
            if syndrome_zero_kernel(word, g.edge_var, g.edge_val, g.check_ptr, g.mul_table):
                status = DecodeStatus.CODEWORD_CONVERGED
            elif reason == 1:
                status = DecodeStatus.TOLERANCE_REACHED
            else:
                status = DecodeStatus.FRACTIONAL_AT_TMAX
        return DecodeOutcome(word, status, state.iteration, time.perf_counter() - t0,
                             state.x.reshape(-1).copy(), state.degraded_inner)


def decode_penalized(ctx, code: NonbinaryCode, llr_cw,
                     params: PenalizedParams = PenalizedParams()) -> DecodeOutcome:
    """Decode one word with the penalized decoder (constant-weight LLRs)."""
    if ctx is not None and ctx.q != code.q:
        raise ValueError("field and code disagree on q")
    return PenalizedDecoder(code, params).decode(llr_cw)


def penalized_fast_decoder(code: NonbinaryCode, params: PenalizedParams = PenalizedParams()):
    """The penalized objective solved with the LP decoder's factor split.

    Much faster, but the iterates do not commute with the relative mapping, so
    the error rate may depend on the transmitted codeword.
    """
    params.check_code(code)
    lp = LpDecoderParams(mu=params.mu, rho=params.rho, t_max=params.t_max, eps=params.eps,
                         early_term=params.early_term, kind=EmbeddingKind.CONSTANT_WEIGHT)
    return LpDecoder(code, lp, alpha=params.alpha)


def project_relaxed_code_polytope(ctx: FieldCtx, h, v, kind=EmbeddingKind.CONSTANT_WEIGHT,
                                  inner_mu: float = 1.0, inner_eps: float = 1e-5,
                                  inner_t_max: int = 100, state: InnerProjectionState = None,
                                  return_info: bool = False):
    """Projection onto the relaxed code polytope of the check ``h``.

    ``v`` is the ``L x d`` matrix (or its column-major flattening, symbol by
    symbol) of the embedded check neighbourhood. The point is rotated to the
    all-ones check, projected by the inner ADMM and rotated back.

    With ``return_info`` the result is ``(F, iterations, converged)``; when
    ``converged`` is False the returned point is the last inner iterate.
    """
    kind = EmbeddingKind.parse(kind)
    h = np.asarray(h, dtype=np.int64).ravel()
    if h.size < 2 or np.any(h <= 0) or np.any(h >= ctx.q):
        raise ValueError("check needs at least two nonzero values in the field")
    d = h.size
    cw = kind is EmbeddingKind.CONSTANT_WEIGHT
    L = ctx.q if cw else ctx.q - 1
    v = np.asarray(v, dtype=np.float64)
    cols = v.T if v.shape == (L, d) else v.reshape(d, L)
    if cols.size != d * L:
        raise ValueError(f"expected {L} x {d} values")
    perms = [rotation_perm(ctx, hp, kind) for hp in h]
    Vn = np.empty((d, L))
    for p in range(d):
        Vn[p, perms[p]] = cols[p]
    if state is None:
        state = InnerProjectionState.fresh(d, ctx.q, kind)
    members = _normalized_members(ctx, kind)
    ca, cb, c0 = _inner_coefficients(ctx.m, inner_mu)
    F = np.empty((d, L))
    nL = max(L, d)
    work = np.empty(L + d + 4 * d + L)
    its, ok = _inner_project(Vn, d, L, members, state.S, state.LS, state.Y, state.LY, F,
                             float(inner_mu), ca, cb, c0, cw, float(inner_eps),
                             int(inner_t_max), np.empty(nL), np.empty(nL), np.empty(d), work)
    out = np.stack([F[p, perms[p]] for p in range(d)], axis=1)
    return (out, int(its), bool(ok)) if return_info else out


def _relative_rows(B: np.ndarray, c: np.ndarray) -> np.ndarray:
    # row i -> row i permuted by a -> a xor c_i
    idx = np.arange(B.shape[1])[None, :] ^ c[:, None]
    return np.take_along_axis(B, idx, axis=1)


def symmetry_harness(ctx: FieldCtx, code: NonbinaryCode, c, y, params: PenalizedParams,
                     mod: Modulation, sigma: float, n_iter: int = 50,
                     tau=None, tol: float = 1e-9, return_discrepancy: bool = False):
    """Check that decoding commutes with the relative mapping of ``c``.

    Runs the penalized decoder on ``y`` and on ``tau_c(y)`` in lock step for
    ``n_iter`` iterations (no early stop) and compares ``x``, ``z`` and
    ``lambda`` of the second run with the relative map of the first after
    every iteration.

    ``tau`` overrides the channel map (used for negative controls). Returns
    True on success; with ``return_discrepancy`` returns the max discrepancy
    as well. When the modulation labeling has no isometry matching field
    addition the check is skipped with a warning and None is returned.
    """
    c = np.asarray(c, dtype=np.int64).ravel()
    if tau is None:
        if not supports_relative_symmetry(mod):
            warnings.warn(f"{mod.name} labeling has no additive symmetry; harness skipped")
            return (None, np.nan) if return_discrepancy else None
        tau = lambda pts: tau_relative(mod, pts, c)
    y0 = tau(np.asarray(y, dtype=np.float64).reshape(-1, 2))
    dec = PenalizedDecoder(code, params)
    g1 = channel_llr(mod, y, sigma, EmbeddingKind.CONSTANT_WEIGHT)
    g0 = channel_llr(mod, y0, sigma, EmbeddingKind.CONSTANT_WEIGHT)
    s1 = dec.init_state()
    s0 = dec.init_state()
    ce = c[dec.graph.edge_var]
    worst = 0.0
    for _ in range(n_iter):
        dec.run(s1, g1, 1, early_term=False, check_stop=False)
        dec.run(s0, g0, 1, early_term=False, check_stop=False)
        worst = max(worst,
                    np.abs(s0.x - _relative_rows(s1.x, c)).max(),
                    np.abs(s0.z - _relative_rows(s1.z, ce)).max(),
                    np.abs(s0.lam - _relative_rows(s1.lam, ce)).max())
    ok = bool(worst < tol)
    return (ok, worst) if return_discrepancy else ok


def with_alpha(params: PenalizedParams, alpha: float) -> PenalizedParams:
    return replace(params, alpha=float(alpha))
