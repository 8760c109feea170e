"""Command line: ``nbadmm {decode,sweep,param-sweep,conjecture,selftest}``.

Exit codes: 0 success, 1 usage or configuration error, 2 I/O error,
3 selftest failure.

Configuration files are flat ``key = value`` text. Keys under ``[sim]`` (or
before any section) set simulation options; ``[lp]``, ``[penalized]`` and
``[penalized-fast]`` hold decoder parameters and apply only when that decoder
is selected. Command-line flags override file values.
"""

from __future__ import annotations

import argparse
import configparser
import sys
import time

import numpy as np

from . import __version__

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_SELFTEST = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _floats(text: str):
    try:
        return tuple(float(v) for v in text.replace(",", " ").split())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a list of numbers, got {text!r}") from None


def _bool(text: str) -> bool:
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise UsageError(f"expected a boolean, got {text!r}")


# config key -> (SimConfig field, converter)
_KEYS = {
    "code": ("code", str), "decoder": ("decoder", str), "embedding": ("embedding", str),
    "modulation": ("modulation", str), "snr": ("snrs", _floats), "snrs": ("snrs", _floats),
    "mu": ("mu", float), "rho": ("rho", float), "alpha": ("alpha", float),
    "tmax": ("t_max", int), "t_max": ("t_max", int), "eps": ("eps", float),
    "inner_t_max": ("inner_t_max", int), "inner_eps": ("inner_eps", float),
    "inner_mu": ("inner_mu", float), "early_term": ("early_term", _bool),
    "trials": ("trials", int), "min_word_errors": ("min_word_errors", int),
    "max_trials": ("max_trials", int), "seed": ("seed", int), "workers": ("workers", int),
    "codeword": ("codeword", str), "timing": ("timing", _bool), "batch": ("batch", int),
    "grid_param": ("grid_param", str), "grid": ("grid", _floats),
}


def read_config(path) -> dict:
    """Parse a config file into SimConfig keyword arguments (decoder sections kept apart)."""
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise OSError(f"cannot read config {path}: {exc.strerror}") from None
    try:
        cp.read_string("[sim]\n" + text if not text.lstrip().startswith("[") else text)
    except configparser.Error as exc:
        raise UsageError(f"config {path}: {exc}") from None
    out = {"sim": {}, "decoders": {}}
    for section in cp.sections():
        target = out["sim"] if section == "sim" else out["decoders"].setdefault(section, {})
        for key, raw in cp.items(section):
            key = key.replace("-", "_")
            if key not in _KEYS:
                raise UsageError(f"config {path}: unknown key {key!r} in [{section}]")
            name, conv = _KEYS[key]
            try:
                target[name] = conv(raw)
            except (ValueError, argparse.ArgumentTypeError) as exc:
                raise UsageError(f"config {path}: bad value for {key}: {exc}") from None
    return out


def _add_common(p):
    p.add_argument("--config", help="flat key = value configuration file")
    p.add_argument("--code", help="builtin name (optionally @q), binary:PATH[@q] or a code file")
    p.add_argument("--decoder", choices=("lp", "penalized", "penalized-fast"))
    p.add_argument("--penalized-fast", action="store_true",
                   help="penalized objective with the LP factor split (faster, "
                        "no codeword-independence guarantee)")
    p.add_argument("--embedding", choices=("flanagan", "cw"))
    p.add_argument("--modulation", choices=("qpsk", "8psk"))
    p.add_argument("--mu", type=float)
    p.add_argument("--rho", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--tmax", type=int, dest="t_max")
    p.add_argument("--eps", type=float)
    p.add_argument("--inner-t-max", type=int)
    p.add_argument("--inner-eps", type=float)
    p.add_argument("--inner-mu", type=float)
    p.add_argument("--no-early-term", action="store_false", dest="early_term", default=None)


def _add_sim(p):
    p.add_argument("--snr", type=_floats, dest="snrs", help="Es/N0 values in dB")
    p.add_argument("--trials", type=int)
    p.add_argument("--min-word-errors", type=int)
    p.add_argument("--max-trials", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--codeword", choices=("zeros", "random"))
    p.add_argument("--timing", action="store_true", default=None,
                   help="fill the wall-time columns (makes the CSV run-dependent)")
    p.add_argument("--out", default="-", help="CSV path, '-' for stdout")
    p.add_argument("--quiet", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="nbadmm", description="ADMM LP and penalized decoding of "
                 "non-binary LDPC codes over GF(2^m)")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("decode", help="decode one word of LLRs read from stdin")
    _add_common(p)
    p.add_argument("--input", default="-", help="LLR file ('-' for stdin)")

    p = sub.add_parser("sweep", help="Monte-Carlo WER/SER over an SNR list")
    _add_common(p)
    _add_sim(p)

    p = sub.add_parser("param-sweep", help="sweep mu, rho or alpha with matched noise")
    _add_common(p)
    _add_sim(p)
    p.add_argument("--param", choices=("mu", "rho", "alpha"), dest="grid_param")
    p.add_argument("--values", type=_floats, dest="grid")

    p = sub.add_parser("conjecture", help="GF(4) relaxed polytope vs codeword hull")
    p.add_argument("--d", type=int, default=3)
    p.add_argument("--trials", type=int, default=10000)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--out", default="-")

    p = sub.add_parser("selftest", help="run the oracle cross-checks")
    p.add_argument("--seed", type=int, default=0)
    return ap


def config_from_args(args):
    from .sim import ConfigError, SimConfig

    kw = {}
    dec_sections = {}
    if getattr(args, "config", None):
        cfg = read_config(args.config)
        kw.update(cfg["sim"])
        dec_sections = cfg["decoders"]
    for name in ("code", "decoder", "embedding", "modulation", "snrs", "mu", "rho", "alpha",
                 "t_max", "eps", "inner_t_max", "inner_eps", "inner_mu", "early_term",
                 "trials", "min_word_errors", "max_trials", "seed", "workers", "codeword",
                 "timing", "grid_param", "grid"):
        val = getattr(args, name, None)
        if val is not None:
            kw[name] = val
    if getattr(args, "penalized_fast", False):
        kw["decoder"] = "penalized-fast"
    decoder = kw.get("decoder", "lp")
    for key, val in dec_sections.get(decoder, {}).items():
        # decoder sections fill in only what the command line left unset
        if getattr(args, key, None) is None:
            kw[key] = val
    if "trials" not in kw and "min_word_errors" not in kw:
        kw["trials"] = 100
    try:
        return SimConfig(**kw)
    except TypeError as exc:
        raise UsageError(str(exc)) from None
    except ConfigError as exc:
        raise UsageError(str(exc)) from None


def _read_llrs(path):
    if path == "-":
        text = sys.stdin.read()
    else:
        with open(path) as fh:
            text = fh.read()
    try:
        return np.array([float(v) for v in text.split()])
    except ValueError as exc:
        raise UsageError(f"bad LLR input: {exc}") from None


def cmd_decode(args) -> int:
    from .code_model import resolve_code
    from .sim import make_decoder

    kw = vars(args).copy()
    if kw.get("trials") is None:
        args.trials = 1
    cfg = config_from_args(args)
    code = resolve_code(cfg.code)
    dec = make_decoder(cfg, code)
    llr = _read_llrs(args.input)
    try:
        out = dec.decode(llr)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    print(" ".join(str(int(v)) for v in out.word))
    print(f"status={out.status.name} iterations={out.iterations}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    from .sim import run_sweep, write_csv

    cfg = config_from_args(args)
    if args.command == "param-sweep" and (cfg.grid_param is None or not cfg.grid):
        raise UsageError("param-sweep needs --param and --values (or grid_param/grid in the config)")

    def progress(rec):
        if not args.quiet:
            print(f"snr={rec.snr_db:g} mu={rec.mu:g} rho={rec.rho:g} alpha={rec.alpha:g} "
                  f"trials={rec.trials} errors={rec.word_errors} wer={rec.wer:.3e}",
                  file=sys.stderr)

    t0 = time.perf_counter()
    records = run_sweep(cfg, progress)
    write_csv(records, args.out)
    if not args.quiet:
        print(f"done in {time.perf_counter() - t0:.1f} s", file=sys.stderr)
    return EXIT_OK


def cmd_conjecture(args) -> int:
    from .oracle import validate_conjecture_gf4

    if not 2 <= args.d <= 6 or args.trials < 1:
        raise UsageError("need 2 <= d <= 6 and trials >= 1")
    rep = validate_conjecture_gf4(args.d, args.trials, args.seed)
    text = rep.as_text()
    if args.out == "-":
        print(text, end="")
    else:
        with open(args.out, "w") as fh:
            fh.write(text)
    return EXIT_OK


def selftest_checks(seed: int = 0):
    """Quick oracle cross-checks; yields (name, passed, detail)."""
    from .channel import sigma_from_esn0
    from .decoder_lp import xupdate_coefficients
    from .gf2m import field_new
    from .oracle import (dense_xupdate_oracle, even_weight_vectors, phi_matrix,
                         project_hull, simplex_vertices)
    from .projections import project_parity_polytope, project_simplex

    rng = np.random.default_rng(seed)
    ctx = field_new(3)
    ok = ctx.exp_table.tolist() == [1, 2, 4, 3, 6, 7, 5] and int(ctx.mul_table[4, 6]) == 5
    yield "gf8 tables", ok, ""
    worst = 0.0
    for d in range(2, 7):
        V = even_weight_vectors(d)
        for _ in range(50):
            v = rng.normal(0.5, 1.0, d)
            worst = max(worst, np.abs(project_hull(V, v) - project_parity_polytope(v)).max())
    yield "parity polytope vs hull", worst < 1e-7, f"max diff {worst:.2e}"
    worst = 0.0
    for d in range(1, 9):
        for _ in range(20):
            v = rng.normal(0.3, 1.0, d)
            worst = max(worst,
                        np.abs(project_hull(simplex_vertices(d, False), v)
                               - project_simplex("eq", v)).max(),
                        np.abs(project_hull(simplex_vertices(d, True), v)
                               - project_simplex("leq", v)).max())
    yield "simplex vs hull", worst < 1e-7, f"max diff {worst:.2e}"
    worst = 0.0
    for m in (2, 3):
        n = 2 ** m - 1
        for dv in range(2, 7):
            a, b = xupdate_coefficients(m, dv)
            t = rng.normal(size=n)
            fast = (a - b) * t + b * t.sum()
            worst = max(worst, np.abs(fast - dense_xupdate_oracle(m, dv, t)).max())
    yield "closed-form x-update", worst < 1e-10, f"max diff {worst:.2e}"
    s = sigma_from_esn0(4.0, 0.6)
    yield "sigma at 4 dB, R=0.6", abs(s - 0.5760) < 5e-5, f"{s:.5f}"
    yield "phi shape", phi_matrix(2).shape == (3, 3), ""


def cmd_selftest(args) -> int:
    failed = 0
    for name, ok, detail in selftest_checks(args.seed):
        print(f"{'PASS' if ok else 'FAIL'} {name} {detail}".rstrip())
        failed += not ok
    return EXIT_SELFTEST if failed else EXIT_OK


COMMANDS = {"decode": cmd_decode, "sweep": cmd_sweep, "param-sweep": cmd_sweep,
            "conjecture": cmd_conjecture, "selftest": cmd_selftest}


def main(argv=None) -> int:
    from .code_model import CodeFormatError

    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"nbadmm: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CodeFormatError as exc:
        print(f"nbadmm: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"nbadmm: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"nbadmm: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
