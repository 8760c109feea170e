"""Monte-Carlo simulation of the decoders over PSK/AWGN.

Trial ``t`` of a run with seed ``s`` draws its noise from
``trial_rng(s, t, 0)`` and (in random-codeword mode) its codeword from
``trial_rng(s, t, 1)``. Nothing else feeds the randomness, so every grid
point of a parameter sweep sees the same noise for the same trial index and
results do not depend on the number of workers. Trials are evaluated in
fixed-size batches; with a word-error target the run is truncated at the
exact trial index where the target is reached.
"""

from __future__ import annotations

import csv
import io
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields, replace

import numpy as np

from . import channel
from .code_model import code_rate, random_codeword, resolve_code
from .decoder_lp import LpDecoder, LpDecoderParams
from .decoder_penalized import PenalizedDecoder, PenalizedParams, penalized_fast_decoder
from .embedding import EmbeddingKind

DECODERS = ("lp", "penalized", "penalized-fast")
GRID_PARAMS = ("mu", "rho", "alpha")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class SimConfig:
    code: str = "toy"
    decoder: str = "lp"
    embedding: str | None = None       # default: flanagan for lp, cw otherwise
    modulation: str | None = None
    snrs: tuple = (5.0,)
    mu: float | None = None
    rho: float | None = None
    alpha: float = 0.6
    t_max: int | None = None
    eps: float = 1e-5
    inner_t_max: int = 100
    inner_eps: float = 1e-5
    inner_mu: float = 1.0
    early_term: bool = True
    trials: int | None = None          # fixed trial count
    min_word_errors: int | None = None # stop once this many word errors are seen
    max_trials: int = 1_000_000        # cap in error-target mode
    seed: int = 1
    workers: int = 1
    codeword: str = "zeros"            # or "random"
    timing: bool = False
    batch: int = 64
    grid_param: str | None = None
    grid: tuple = ()

    def __post_init__(self):
        if self.decoder not in DECODERS:
            raise ConfigError(f"decoder must be one of {DECODERS}, got {self.decoder!r}")
        if self.codeword not in ("zeros", "random"):
            raise ConfigError("codeword must be 'zeros' or 'random'")
        if self.trials is None and self.min_word_errors is None:
            raise ConfigError("give either trials or min_word_errors")
        if self.trials is not None and self.trials < 1:
            raise ConfigError("trials must be positive")
        if self.min_word_errors is not None and self.min_word_errors < 1:
            raise ConfigError("min_word_errors must be positive")
        if self.workers < 1 or self.batch < 1 or self.max_trials < 1:
            raise ConfigError("workers, batch and max_trials must be positive")
        if not self.snrs:
            raise ConfigError("at least one SNR is required")
        if self.grid_param is not None and self.grid_param not in GRID_PARAMS:
            raise ConfigError(f"grid parameter must be one of {GRID_PARAMS}")
        if self.seed < 0 or self.seed >= 2 ** 64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        kind = self.kind
        if self.decoder != "lp" and kind is not EmbeddingKind.CONSTANT_WEIGHT:
            raise ConfigError("penalized decoding uses the constant-weight embedding")
        # parameter validation of the decoders themselves
        for point in self.grid_points():
            try:
                point.decoder_params()
            except ValueError as exc:
                raise ConfigError(str(exc)) from None

    @property
    def kind(self) -> EmbeddingKind:
        if self.embedding is None:
            return EmbeddingKind.FLANAGAN if self.decoder == "lp" else EmbeddingKind.CONSTANT_WEIGHT
        try:
            return EmbeddingKind.parse(self.embedding)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def decoder_params(self):
        if self.decoder == "lp":
            return LpDecoderParams(
                mu=2.0 if self.mu is None else self.mu,
                rho=1.9 if self.rho is None else self.rho,
                t_max=200 if self.t_max is None else self.t_max,
                eps=self.eps, early_term=self.early_term, kind=self.kind)
        return PenalizedParams(
            mu=4.0 if self.mu is None else self.mu,
            rho=1.5 if self.rho is None else self.rho,
            alpha=self.alpha, t_max=100 if self.t_max is None else self.t_max,
            eps=self.eps, inner_t_max=self.inner_t_max, inner_eps=self.inner_eps,
            inner_mu=self.inner_mu, early_term=self.early_term)

    def grid_points(self):
        if self.grid_param is None:
            return [self]
        return [replace(self, grid_param=None, grid=(), **{self.grid_param: float(v)})
                for v in self.grid]


@dataclass
class SimRecord:
    snr_db: float
    trials: int
    word_errors: int
    symbol_errors: int
    wer: float
    ser: float
    iters_mean: float
    iters_mean_correct: float
    iters_mean_error: float
    time_ms_mean: float | None
    time_ms_mean_correct: float | None
    time_ms_mean_error: float | None
    early_term_count: int
    degraded_inner_count: int
    seed: int
    decoder: str = ""
    embedding: str = ""
    code: str = ""
    mu: float = 0.0
    rho: float = 0.0
    alpha: float = 0.0
    t_max: int = 0
    eps: float = 0.0
    inner_t_max: int = 0
    inner_eps: float = 0.0
    inner_mu: float = 0.0


CSV_COLUMNS = tuple(f.name for f in fields(SimRecord))


def make_decoder(config: SimConfig, code):
    params = config.decoder_params()
    if config.decoder == "lp":
        return LpDecoder(code, params)
    if config.decoder == "penalized":
        return PenalizedDecoder(code, params)
    return penalized_fast_decoder(code, params)


# per-process cache so workers build the code/decoder once
_WORKER = {}


def _setup(config: SimConfig):
    key = (config.code, config.decoder, config.embedding, config.mu, config.rho, config.alpha,
           config.t_max, config.eps, config.inner_t_max, config.inner_eps, config.inner_mu,
           config.early_term, config.modulation)
    if key not in _WORKER:
        _WORKER.clear()
        code = resolve_code(config.code)
        mod = channel.modulation_for(code.q, config.modulation)
        _WORKER[key] = (code, mod, make_decoder(config, code))
    return _WORKER[key]


def run_trials(config: SimConfig, snr_db: float, start: int, stop: int) -> np.ndarray:
    """Run trials ``start..stop-1``; one row per trial.

    Columns: word error, symbol errors, iterations, wall time (s), early
    termination flag, degraded inner projections.
    """
    code, mod, dec = _setup(config)
    kind = config.kind
    sigma = channel.sigma_from_esn0(snr_db, code_rate(code))
    out = np.zeros((stop - start, 6))
    for r, t in enumerate(range(start, stop)):
        if config.codeword == "random":
            c = random_codeword(code, channel.trial_rng(config.seed, t, 1))
        else:
            c = np.zeros(code.n, dtype=np.int64)
        y = channel.transmit(mod, c, sigma, channel.trial_rng(config.seed, t, 0))
        res = dec.decode(channel.llr(mod, y, sigma, kind))
        nerr = int(np.count_nonzero(res.word != c))
        out[r] = (nerr > 0, nerr, res.iterations, res.wall_time,
                  int(res.status) == 1, res.degraded_inner)
    return out


def _split(start: int, stop: int, parts: int):
    edges = np.linspace(start, stop, parts + 1).round().astype(int)
    return [(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:]) if b > a]


def simulate_point(config: SimConfig, snr_db: float, pool=None) -> SimRecord:
    """Simulate one SNR for one parameter point."""
    rows = []
    errors = 0
    done = 0
    target = config.min_word_errors
    limit = config.trials if config.trials is not None else config.max_trials
    while done < limit:
        size = min(config.batch * config.workers, limit - done)
        chunks = _split(done, done + size, config.workers if pool else 1)
        if pool is None:
            parts = [run_trials(config, snr_db, a, b) for a, b in chunks]
        else:
            futs = [pool.submit(run_trials, config, snr_db, a, b) for a, b in chunks]
            parts = [f.result() for f in futs]
        block = np.concatenate(parts)
        if target is not None and config.trials is None:
            cum = errors + np.cumsum(block[:, 0])
            hit = np.flatnonzero(cum >= target)
            if hit.size:
                block = block[:hit[0] + 1]
        rows.append(block)
        errors += int(block[:, 0].sum())
        done += block.shape[0]
        if target is not None and config.trials is None and errors >= target:
            break
    return summarize(config, snr_db, np.concatenate(rows))


def _mean(x):
    return float(x.mean()) if x.size else float("nan")


def summarize(config: SimConfig, snr_db: float, rows: np.ndarray) -> SimRecord:
    code, _, _ = _setup(config)
    n = rows.shape[0]
    werr = rows[:, 0] > 0
    its = rows[:, 2]
    tms = rows[:, 3] * 1e3
    p = config.decoder_params()
    timing = config.timing
    return SimRecord(
        snr_db=float(snr_db), trials=n, word_errors=int(werr.sum()),
        symbol_errors=int(rows[:, 1].sum()), wer=float(werr.sum()) / n,
        ser=float(rows[:, 1].sum()) / (n * code.n),
        iters_mean=_mean(its), iters_mean_correct=_mean(its[~werr]),
        iters_mean_error=_mean(its[werr]),
        time_ms_mean=_mean(tms) if timing else None,
        time_ms_mean_correct=_mean(tms[~werr]) if timing else None,
        time_ms_mean_error=_mean(tms[werr]) if timing else None,
        early_term_count=int(rows[:, 4].sum()), degraded_inner_count=int(rows[:, 5].sum()),
        seed=int(config.seed), decoder=config.decoder, embedding=config.kind.value,
        code=config.code, mu=p.mu, rho=p.rho,
        alpha=getattr(p, "alpha", 0.0), t_max=int(p.t_max), eps=p.eps,
        inner_t_max=int(getattr(p, "inner_t_max", 0)),
        inner_eps=float(getattr(p, "inner_eps", 0.0)),
        inner_mu=float(getattr(p, "inner_mu", 0.0)))


def run_sweep(config: SimConfig, progress=None) -> list:
    """Simulate every (grid point, SNR) pair; returns the records in grid-major order."""
    records = []
    pool = ProcessPoolExecutor(config.workers) if config.workers > 1 else None
    try:
        for point in config.grid_points():
            for snr in config.snrs:
                rec = simulate_point(point, float(snr), pool)
                records.append(rec)
                if progress is not None:
                    progress(rec)
    finally:
        if pool is not None:
            pool.shutdown()
    return records


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return "nan" if v != v else f"{v:.10g}"
    return str(v)


def records_to_csv(records) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for rec in records:
        d = asdict(rec)
        w.writerow([_fmt(d[c]) for c in CSV_COLUMNS])
    return buf.getvalue()


def write_csv(records, path) -> None:
    text = records_to_csv(records)
    if path in (None, "-"):
        print(text, end="")
        return
    dirname = os.path.dirname(os.fspath(path))
    if dirname:
        os.makedirs(dirname, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(text)
