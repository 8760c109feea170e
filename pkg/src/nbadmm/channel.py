"""PSK modulation over AWGN, per-symbol LLRs and SNR conversion.

SNR is given as Es/N0 per information symbol; with code rate ``R`` the noise
standard deviation per real dimension is ``sigma = sqrt(1 / (2 * gamma * R))``
where ``gamma = 10**(EsN0_dB / 10)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .embedding import EmbeddingKind
from .tolerances import TOL


@dataclass(frozen=True, eq=False)
class Modulation:
    """Constellation with one unit-energy 2-D point per field element."""

    name: str
    points: np.ndarray  # (q, 2)

    @property
    def q(self) -> int:
        return self.points.shape[0]


def qpsk() -> Modulation:
    # 0 -> (1,0), 1 -> (0,1), 2 -> (-1,0), 3 -> (0,-1)
    pts = np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]])
    return Modulation("qpsk", pts)


def psk8(labels=None) -> Modulation:
    """8-PSK; by default element ``d`` sits at angle ``2*pi*d/8``.

    ``labels[k]`` optionally gives the element placed at angle ``2*pi*k/8``.
    """
    ang = 2 * np.pi * np.arange(8) / 8
    pts = np.stack([np.cos(ang), np.sin(ang)], axis=1)
    if labels is not None:
        labels = np.asarray(labels, dtype=np.int64)
        if sorted(labels.tolist()) != list(range(8)):
            raise ValueError("labels must be a permutation of 0..7")
        out = np.empty_like(pts)
        out[labels] = pts
        pts = out
    return Modulation("8psk", pts)


def modulation_for(q: int, name: str | None = None) -> Modulation:
    if name is None:
        name = {4: "qpsk", 8: "8psk"}.get(q)
    if name == "qpsk" and q == 4:
        return qpsk()
    if name == "8psk" and q == 8:
        return psk8()
    raise ValueError(f"no modulation {name!r} for q={q}")


def sigma_from_esn0(es_n0_db: float, rate: float) -> float:
    """Noise std per dimension for Es/N0 (dB) per information symbol."""
    if not 0 < rate <= 1:
        raise ValueError("rate must lie in (0, 1]")
    gamma = 10.0 ** (es_n0_db / 10.0)
    return float(np.sqrt(1.0 / (2.0 * gamma * rate)))


def trial_rng(seed: int, trial: int, stream: int = 0) -> np.random.Generator:
    """Independent generator for a (seed, trial, stream) triple."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, trial, stream])))


def transmit(mod: Modulation, c, sigma: float, rng_seed=None) -> np.ndarray:
    """Modulate ``c`` and add white Gaussian noise; returns ``(n, 2)`` points.

    ``rng_seed`` may be an int, a SeedSequence-compatible value, or a Generator.
    """
    c = np.asarray(c, dtype=np.int64).ravel()
    rng = rng_seed if isinstance(rng_seed, np.random.Generator) else np.random.default_rng(rng_seed)
    noise = rng.standard_normal((c.size, 2))
    return mod.points[c] + sigma * noise


def squared_distances(mod: Modulation, y) -> np.ndarray:
    y = np.asarray(y, dtype=np.float64).reshape(-1, 2)
    return ((y[:, None, :] - mod.points[None, :, :]) ** 2).sum(axis=2)


def llr(mod: Modulation, y, sigma: float, kind, clip: bool = True) -> np.ndarray:
    """Per-symbol LLR matrix for received points ``y``.

    Flanagan: ``(|y - s_d|^2 - |y - s_0|^2) / (2 sigma^2)`` for ``d = 1..q-1``.
    CW: ``|y - s_d|^2 / (2 sigma^2)`` for ``d = 0..q-1``, i.e. the negative log
    likelihood without its shared normalizer. With ``clip`` the costs are
    shifted so the nearest point has cost 0 and capped at ``TOL.llr_clip``.
    """
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    kind = EmbeddingKind.parse(kind)
    d2 = squared_distances(mod, y) / (2.0 * sigma ** 2)
    if clip:
        # Cap the per-symbol costs relative to the most likely symbol, so
        # saturation never hides which symbol is closest. For CW the shift is
        # a per-symbol constant and leaves the decoders' optima unchanged.
        d2 = np.minimum(d2 - d2.min(axis=1, keepdims=True), TOL.llr_clip)
    return d2[:, 1:] - d2[:, :1] if kind is EmbeddingKind.FLANAGAN else d2


def relative_isometry(mod: Modulation, beta: int):
    """Linear isometry ``A`` with ``A s_a = s_{a xor beta}`` for all ``a``, or None.

    ``a - beta = a + beta = a xor beta`` in characteristic two.
    """
    P = mod.points
    target = P[np.arange(mod.q) ^ int(beta)]
    A, *_ = np.linalg.lstsq(P, target, rcond=None)
    A = A.T
    if not np.allclose(P @ A.T, target, atol=1e-12):
        return None
    if not np.allclose(A @ A.T, np.eye(2), atol=1e-12):
        return None
    return A


def supports_relative_symmetry(mod: Modulation) -> bool:
    return all(relative_isometry(mod, b) is not None for b in range(mod.q))


def tau_relative(mod: Modulation, y, beta) -> np.ndarray:
    """Apply ``tau_beta`` to received points; ``beta`` may be per-symbol.

    ``tau_beta`` satisfies ``P(y | a) = P(tau_beta(y) | a - beta)``.

    Raises
    ------
    ValueError
        If the labeling has no isometry matching field addition.
    """
    y = np.asarray(y, dtype=np.float64).reshape(-1, 2)
    beta = np.broadcast_to(np.asarray(beta, dtype=np.int64), (y.shape[0],))
    out = np.empty_like(y)
    for b in np.unique(beta):
        A = relative_isometry(mod, b)
        if A is None:
            raise ValueError(f"{mod.name} labeling has no isometry for beta={b}")
        sel = beta == b
        out[sel] = y[sel] @ A.T
    return out


def gaussian_density(mod: Modulation, y, a, sigma: float) -> np.ndarray:
    y = np.asarray(y, dtype=np.float64).reshape(-1, 2)
    d2 = ((y - mod.points[np.asarray(a)]) ** 2).sum(axis=-1)
    return np.exp(-d2 / (2 * sigma ** 2)) / (2 * np.pi * sigma ** 2)
