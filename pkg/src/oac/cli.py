"""Command-line entry point ``oac``.

Exit codes: 0 on success, 2 on invalid input, 3 when a complexity guard
refuses the computation, 1 for other library errors.
"""

from __future__ import annotations

import argparse
import json
import subprocess
import sys
from pathlib import Path
from typing import Sequence, TextIO

import numpy as np

from . import __version__
from .arithmetic_core import (
    DEFAULT_WIDTH,
    Mode,
    arithmetic_decode,
    arithmetic_encode,
    as_probability,
    read_bitstream,
    write_bitstream,
)
from .ccs import DEFAULT_BINS, Scheme, compute_ccs
from .coexist import fer_one_unknown, fer_two_unknown
from .decoder import DecoderConfig, Policy, decode_backward_replacing, decode_m_algorithm
from .errors import ComplexityGuardError, OacError, ValidationError
from .hds import (
    CUBIC_RATE,
    GOLDEN_RATE,
    TAU_BUDGET,
    hds_binomial,
    hds_exhaustive,
    hds_fast,
    hds_hard,
    hds_soft,
    psi3_divergence,
    tau_count,
)
from .overlapped_codec import CodeConfig, coset_index_exact, coset_size_histogram, enumerate_coset, parse_rate
from .sim import ExperimentConfig, run_fer, tail_sweep

__all__ = ["main", "build_parser"]

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_VALIDATION = 2
EXIT_GUARD = 3


def _num(x: float) -> str:
    # shortest text that parses back to the same binary64 value
    return repr(float(x))


def _json_default(obj):
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _dump_json(obj) -> str:
    return json.dumps(obj, indent=2, default=_json_default) + "\n"


def _emit(text: str, out: str | None, stdout: TextIO) -> None:
    if out:
        Path(out).write_text(text)
    else:
        stdout.write(text)


def _read_block(path: str) -> str:
    text = "".join(Path(path).read_text().split())
    if not text or set(text) - {"0", "1"}:
        raise ValidationError(f"{path} must contain a non-empty string of 0 and 1")
    return text


def _code_config(args) -> CodeConfig:
    return CodeConfig(args.n, parse_rate(args.R), args.t)


def _eps_list(text: str) -> list[float]:
    try:
        return [float(e) for e in text.split(",") if e.strip()]
    except ValueError as exc:
        raise ValidationError(f"cannot parse crossover list {text!r}") from exc


def _version_string() -> str:
    try:
        rev = subprocess.run(
            ["git", "rev-parse", "--short", "HEAD"],
            cwd=Path(__file__).resolve().parent,
            capture_output=True,
            text=True,
            timeout=5,
            check=True,
        ).stdout.strip()
    except (OSError, subprocess.SubprocessError):
        rev = "unknown"
    return f"oac {__version__} ({rev or 'unknown'})"


def cmd_encode(args, stdout: TextIO) -> int:
    block = _read_block(args.inp)
    mode = Mode.PREFIX if args.mode == "prefix" else Mode.HALFTAIL
    stream = arithmetic_encode(block, as_probability(args.p), args.w, mode)
    Path(args.out).write_bytes(write_bitstream(stream, args.w))
    return EXIT_OK


def cmd_decode(args, stdout: TextIO) -> int:
    stream, width = read_bitstream(Path(args.inp).read_bytes())
    if args.w is not None and args.w != width:
        raise ValidationError(f"file was written with w={width}, not {args.w}")
    bits = arithmetic_decode(stream, as_probability(args.p), args.n, width)
    _emit("".join(map(str, bits)) + "\n", args.out, stdout)
    return EXIT_OK


def cmd_cosets(args, stdout: TextIO) -> int:
    cfg = _code_config(args)
    if args.list is not None:
        text = "".join(c + "\n" for c in enumerate_coset(args.list, cfg))
    else:
        hist = coset_size_histogram(cfg)
        text = "m,size\n" + "".join(f"{m},{int(s)}\n" for m, s in enumerate(hist))
    _emit(text, args.out, stdout)
    return EXIT_OK


def cmd_ccs(args, stdout: TextIO) -> int:
    cfg = _code_config(args)
    if not 0 <= args.level <= cfg.n:
        raise ValidationError(f"level must lie in [0, {cfg.n}]")
    f = compute_ccs(cfg, args.bins, Scheme(args.scheme))[args.level]
    rows = [f"{j},{_num(u)},{_num(v)}\n" for j, (u, v) in enumerate(zip(f.centers, f.bins))]
    _emit("j,u,f\n" + "".join(rows), args.out, stdout)
    return EXIT_OK


def cmd_hds(args, stdout: TextIO) -> int:
    cfg = _code_config(args)
    d_max = cfg.n if args.dmax is None else args.dmax
    if not 0 <= d_max <= cfg.n:
        raise ValidationError(f"dmax must lie in [0, {cfg.n}]")
    if args.method in ("th2", "th3"):
        worst = max(tau_count(cfg.n, d) for d in range(d_max + 1))
        print(f"estimate: up to {worst} shift evaluations per distance", file=sys.stderr)
        if worst > args.budget:
            raise ComplexityGuardError(f"{worst} shift evaluations exceed the budget {args.budget}")
    if args.method == "exhaustive":
        vec = hds_exhaustive(cfg)
    elif args.method == "th1":
        vec = hds_binomial(cfg)
    elif args.method == "th2":
        vec = hds_soft(cfg, d_max, args.budget)
    elif args.method == "th3":
        vec = hds_hard(cfg, d_max, args.budget)
    else:
        vec = hds_fast(cfg)
    rows = [f"{d},{_num(vec.psi[d])}\n" for d in range(d_max + 1)]
    _emit("d,psi\n" + "".join(rows), args.out, stdout)
    return EXIT_OK


def _symbol_rate(text: str) -> float:
    named = {"golden": GOLDEN_RATE, "cubic": CUBIC_RATE}
    if text in named:
        return named[text]
    try:
        return float(parse_rate(text)) if "/" in text else float(text)
    except ValueError as exc:
        raise ValidationError(f"cannot parse rate {text!r}") from exc


def cmd_psi3(args, stdout: TextIO) -> int:
    report = psi3_divergence(_symbol_rate(args.r), args.bound)
    _emit(_dump_json(report.to_dict()), args.out, stdout)
    return EXIT_OK


def cmd_fer_theory(args, stdout: TextIO) -> int:
    r = float(parse_rate(args.R))
    fn = fer_one_unknown if args.unknown == 1 else fer_two_unknown
    rows = [f"{_num(e)},{_num(fn(r, e))}\n" for e in _eps_list(args.eps_list)]
    _emit("eps,fer\n" + "".join(rows), args.out, stdout)
    return EXIT_OK


def cmd_fer_sim(args, stdout: TextIO) -> int:
    exp = ExperimentConfig.from_json(args.config)
    report = run_fer(exp, args.workers)
    data = report.to_dict()
    if args.deterministic:
        data["wall_time"] = 0.0
    _emit(_dump_json(data), args.out, stdout)
    if args.csv:
        Path(args.csv).write_text(report.to_csv())
    return EXIT_OK


def cmd_tail_sweep(args, stdout: TextIO) -> int:
    exp = ExperimentConfig.from_json(args.config)
    t_list = [int(t) for t in args.t_list.split(",") if t.strip()]
    reports = tail_sweep(exp, t_list, args.workers)
    lines = ["t,eps,fer,lo,hi\n"]
    for t, rep in zip(t_list, reports):
        for p in rep.points:
            lines.append(f"{t},{_num(p.eps)},{_num(p.fer)},{_num(p.lo)},{_num(p.hi)}\n")
    _emit("".join(lines), args.out, stdout)
    return EXIT_OK


def cmd_decode_sw(args, stdout: TextIO) -> int:
    cfg = _code_config(args)
    y = _read_block(args.y)
    dec = DecoderConfig(M=args.M, eps=args.eps, use_ccs=args.use_ccs, bins=args.bins)
    decode = decode_m_algorithm if Policy(args.policy) is Policy.M_ALGORITHM else decode_backward_replacing
    res = decode(args.m, y, cfg, dec)
    report = {
        "block": res.to01(),
        "m": args.m,
        "in_coset": coset_index_exact(res.block, cfg) == args.m,
        "flips": res.flips,
        "log_likelihood": res.log_likelihood,
        "M": args.M,
        "eps": args.eps,
        "use_ccs": args.use_ccs,
        "policy": args.policy,
    }
    _emit(_dump_json(report), args.out, stdout)
    return EXIT_OK


def _add_code_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--n", type=int, required=True, help="block length")
    p.add_argument("--R", required=True, help="average rate as p/q; n*R must be an integer")
    p.add_argument("--t", type=int, default=0, help="tail length (default: %(default)s)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="oac", description="Overlapped arithmetic codes toolkit.")
    parser.add_argument("--version", action="version", version=_version_string())
    sub = parser.add_subparsers(dest="command", required=True)
    fmt = argparse.ArgumentDefaultsHelpFormatter

    p = sub.add_parser("encode", help="encode a 0/1 text block into an OACB file", formatter_class=fmt)
    p.add_argument("--p", required=True, help="probability of symbol 0 as p/q")
    p.add_argument("--w", type=int, default=DEFAULT_WIDTH, help="window width in bits")
    p.add_argument("--mode", choices=["prefix", "halftail"], default="prefix", help="stream termination")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("decode", help="decode an OACB file into 0/1 text", formatter_class=fmt)
    p.add_argument("--p", required=True, help="probability of symbol 0 as p/q")
    p.add_argument("--n", type=int, required=True, help="number of symbols")
    p.add_argument("--w", type=int, default=None, help="expected window width (header wins)")
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("cosets", help="coset sizes (CSV m,size) or members of one coset", formatter_class=fmt)
    _add_code_args(p)
    p.add_argument("--list", type=int, default=None, metavar="M", help="list members of coset M")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_cosets)

    p = sub.add_parser("ccs", help="coset cardinality spectrum of one level (CSV j,u,f)", formatter_class=fmt)
    _add_code_args(p)
    p.add_argument("--bins", type=int, default=DEFAULT_BINS, help="number of spectrum bins")
    p.add_argument("--scheme", choices=[s.value for s in Scheme], default=Scheme.FINE.value, help="discretization")
    p.add_argument("--level", type=int, default=0, help="level to print, 0 is the whole block")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_ccs)

    p = sub.add_parser("hds", help="Hamming distance spectrum (CSV d,psi)", formatter_class=fmt)
    _add_code_args(p)
    p.add_argument(
        "--method", choices=["exhaustive", "th1", "th2", "th3", "th4"], default="th2",
        help="exact enumeration or one of the four approximations",
    )
    p.add_argument("--dmax", type=int, default=None, help="largest distance (default: n)")
    p.add_argument("--budget", type=int, default=TAU_BUDGET, help="shift evaluations allowed per distance")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_hds)

    p = sub.add_parser("psi3", help="search for divergent distance-3 pairs (JSON)", formatter_class=fmt)
    p.add_argument("--r", required=True, help="symbol rate: decimal, p/q, 'golden' or 'cubic'")
    p.add_argument("--bound", type=int, default=64, help="search i + j <= bound")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_psi3)

    p = sub.add_parser("fer-theory", help="limit error rate with unknown final symbols (CSV eps,fer)", formatter_class=fmt)
    p.add_argument("--R", required=True, help="rate as p/q")
    p.add_argument("--unknown", type=int, choices=[1, 2], default=1, help="number of unknown final symbols")
    p.add_argument("--eps-list", required=True, help="comma-separated crossover probabilities")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_fer_theory)

    p = sub.add_parser("fer-sim", help="Monte-Carlo frame error rate from a JSON config", formatter_class=fmt)
    p.add_argument("--config", required=True)
    p.add_argument("--out", default=None, help="JSON report path")
    p.add_argument("--csv", default=None, help="also write CSV eps,fer,lo,hi")
    p.add_argument("--workers", type=int, default=1, help="threads; results do not depend on it")
    p.add_argument("--deterministic", action="store_true", help="zero the wall time for byte-identical output")
    p.set_defaults(func=cmd_fer_sim)

    p = sub.add_parser("tail-sweep", help="frame error rate per tail length (CSV t,eps,fer,lo,hi)", formatter_class=fmt)
    p.add_argument("--config", required=True)
    p.add_argument("--t-list", required=True, help="comma-separated tail lengths")
    p.add_argument("--workers", type=int, default=1, help="threads; results do not depend on it")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_tail_sweep)

    p = sub.add_parser("decode-sw", help="side-information decoding of one coset index (JSON)", formatter_class=fmt)
    _add_code_args(p)
    p.add_argument("--M", type=int, default=16, help="beam width")
    p.add_argument("--eps", type=float, required=True, help="crossover probability")
    p.add_argument("--use-ccs", action="store_true", help="add the spectrum metric")
    p.add_argument("--bins", type=int, default=1 << 12, help="spectrum bins when --use-ccs")
    p.add_argument("--policy", choices=[p.value for p in Policy], default=Policy.M_ALGORITHM.value, help="list policy")
    p.add_argument("--m", type=int, required=True, help="coset index")
    p.add_argument("--y", required=True, help="file holding the 0/1 side information")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_decode_sw)
    return parser


def main(argv: Sequence[str] | None = None, stdout: TextIO | None = None) -> int:
    stdout = stdout or sys.stdout
    args = build_parser().parse_args(argv)
    try:
        return args.func(args, stdout)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except ComplexityGuardError as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except (OacError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
