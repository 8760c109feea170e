"""Euclidean projections onto simplexes and the parity polytope.

The ``_njit`` kernels write into caller-owned buffers so the decoders can call
them without allocating. The public wrappers allocate and are meant for tests
and one-off use.

Parity polytope ``PP_d`` is the convex hull of even-weight binary vectors of
length ``d``. The projection uses the cut-search method: clip to the unit
cube, pick the single odd-set facet most violated by the clipped point, and
if it is violated solve for the shift ``beta`` with
``theta . clip(v - beta*theta) = |f| - 1`` by walking the sorted breakpoints of
that piecewise-linear function.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from numba import njit


class SimplexVariant(enum.Enum):
    SUM_LEQ_ONE = "leq"   # x >= 0, sum x <= 1
    SUM_EQ_ONE = "eq"     # x >= 0, sum x == 1


@dataclass(frozen=True)
class SimplexSpec:
    variant: SimplexVariant
    d: int


@njit(cache=True)
def _sort_desc(v, n, work):
    # insertion sort of v[:n] into work[:n], descending; stable for ties
    for i in range(n):
        x = v[i]
        j = i
        while j > 0 and work[j - 1] < x:
            work[j] = work[j - 1]
            j -= 1
        work[j] = x


@njit(cache=True)
def simplex_eq_kernel(v, out, n, work):
    """Project ``v[:n]`` onto ``{x >= 0, sum x = 1}``; ``work`` needs ``n`` slots."""
    _sort_desc(v, n, work)
    cum = 0.0
    theta = 0.0
    for k in range(n):
        cum += work[k]
        t = (cum - 1.0) / (k + 1)
        if work[k] - t > 0.0:
            theta = t
    for i in range(n):
        x = v[i] - theta
        out[i] = x if x > 0.0 else 0.0


@njit(cache=True)
def simplex_leq_kernel(v, out, n, work):
    """Project ``v[:n]`` onto ``{x >= 0, sum x <= 1}``."""
    total = 0.0
    for i in range(n):
        x = v[i]
        if x > 0.0:
            total += x
    if total <= 1.0:
        for i in range(n):
            x = v[i]
            out[i] = x if x > 0.0 else 0.0
    else:
        simplex_eq_kernel(v, out, n, work)


@njit(cache=True)
def _clip01(x):
    return min(max(x, 0.0), 1.0)


@njit(cache=True)
def _pp_beta_walk(v, n, theta, g0, target, work):
    # Walk beta > 0 along the breakpoints of g(beta) = theta . clip(v - beta*theta).
    # Coordinate i is strictly inside (0, 1) for enter_i < beta < exit_i and g
    # falls with slope equal to the number of such coordinates.
    nb = 0
    active = 0
    for i in range(n):
        if theta[i] > 0.0:
            lo = v[i] - 1.0
            hi = v[i]
        else:
            lo = -v[i]
            hi = 1.0 - v[i]
        if lo <= 0.0 < hi:
            active += 1
        if lo > 0.0:
            work[nb] = lo
            work[2 * n + nb] = 1.0
            nb += 1
        if hi > 0.0:
            work[nb] = hi
            work[2 * n + nb] = -1.0
            nb += 1
    for i in range(1, nb):
        x = work[i]
        tx = work[2 * n + i]
        j = i
        while j > 0 and work[j - 1] > x:
            work[j] = work[j - 1]
            work[2 * n + j] = work[2 * n + j - 1]
            j -= 1
        work[j] = x
        work[2 * n + j] = tx
    b_lo = 0.0
    g = g0
    beta = -1.0
    for k in range(nb):
        b = work[k]
        g_hi = g - active * (b - b_lo)
        if g_hi <= target:
            beta = b_lo + (g - target) / active
            break
        g = g_hi
        b_lo = b
        active += int(work[2 * n + k])
    if beta < 0.0:
        beta = b_lo + (g - target) / active if active > 0 else b_lo
    return beta


@njit(cache=True)
def _pp_beta_bracket(v, n, theta, g0, target):
    # Branch-light variant for small n: evaluate g at every breakpoint and keep
    # the tightest bracket [b_lo, b_hi] around the root; g is linear inside it.
    b_lo = 0.0
    g_lo = g0
    b_hi = np.inf
    g_hi = 0.0
    for c in range(2 * n):
        i = c >> 1
        if theta[i] > 0.0:
            b = v[i] - 1.0 + (c & 1)
        else:
            b = -v[i] + (c & 1)
        b = max(b, 0.0)
        g = 0.0
        for k in range(n):
            g += theta[k] * _clip01(v[k] - b * theta[k])
        if g > target:
            if b > b_lo:
                b_lo = b
                g_lo = g
        elif b < b_hi:
            b_hi = b
            g_hi = g
    if g_lo - g_hi > 0.0:
        return b_lo + (g_lo - target) * (b_hi - b_lo) / (g_lo - g_hi)
    return b_hi


@njit(cache=True)
def parity_polytope_kernel(v, out, n, theta, work):
    """Project ``v[:n]`` onto the parity polytope ``PP_n``, writing ``out[:n]``.

    ``theta`` is a float buffer of at least ``n`` slots; ``work`` needs ``4n``.
    Buffers are passed whole (no slicing) to keep the call cheap in hot loops.
    """
    nf = 0
    imin = 0
    dmin = np.inf
    for i in range(n):
        up = v[i] > 0.5
        theta[i] = 1.0 if up else -1.0
        nf += 1 if up else 0
        dist = abs(v[i] - 0.5)
        imin = i if dist < dmin else imin
        dmin = min(dist, dmin)
    if nf % 2 == 0:
        theta[imin] = -theta[imin]
        nf += 1 if theta[imin] > 0.0 else -1
    target = nf - 1.0
    g0 = 0.0
    for i in range(n):
        g0 += theta[i] * _clip01(v[i])
    if g0 <= target:
        for i in range(n):
            out[i] = _clip01(v[i])
        return
    if n <= 8:
        beta = _pp_beta_bracket(v, n, theta, g0, target)
    else:
        beta = _pp_beta_walk(v, n, theta, g0, target, work)
    for i in range(n):
        out[i] = _clip01(v[i] - beta * theta[i])


def project_parity_polytope(v) -> np.ndarray:
    """Euclidean projection onto ``PP_d``.

    Raises
    ------
    ValueError
        If ``d < 2`` or ``v`` has non-finite entries.
    """
    v = np.ascontiguousarray(v, dtype=np.float64).ravel()
    if v.size < 2:
        raise ValueError("parity polytope needs dimension >= 2")
    if not np.all(np.isfinite(v)):
        raise ValueError("non-finite input")
    out = np.empty_like(v)
    parity_polytope_kernel(v, out, v.size, np.empty_like(v), np.empty(4 * v.size))
    return out


def project_simplex(spec, v) -> np.ndarray:
    """Euclidean projection onto the simplex variant given by ``spec``.

    ``spec`` may be a :class:`SimplexSpec` or a :class:`SimplexVariant`.
    """
    variant = spec.variant if isinstance(spec, SimplexSpec) else SimplexVariant(spec)
    v = np.ascontiguousarray(v, dtype=np.float64).ravel()
    if isinstance(spec, SimplexSpec) and spec.d != v.size:
        raise ValueError(f"expected length {spec.d}, got {v.size}")
    out = np.empty_like(v)
    work = np.empty_like(v)
    if variant is SimplexVariant.SUM_EQ_ONE:
        simplex_eq_kernel(v, out, v.size, work)
    else:
        simplex_leq_kernel(v, out, v.size, work)
    return out


def project_rotated(projector, perm, v) -> np.ndarray:
    """Return ``D @ projector(D^-1 @ v)`` for the permutation ``D``.

    ``perm`` is the index array with ``(D w)[i] = w[perm[i]]``, so
    ``D^-1 u = u[argsort(perm)]``.
    """
    v = np.asarray(v, dtype=np.float64).ravel()
    perm = np.asarray(perm, dtype=np.int64).ravel()
    if perm.size != v.size:
        raise ValueError(f"permutation length {perm.size} != vector length {v.size}")
    inv = np.empty_like(perm)
    inv[perm] = np.arange(perm.size)
    u = np.asarray(projector(v[inv]), dtype=np.float64)
    return u[perm]


def distance_to_parity_polytope(v) -> float:
    v = np.asarray(v, dtype=np.float64)
    return float(np.linalg.norm(v - project_parity_polytope(v)))
