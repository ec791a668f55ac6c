"""Monte-Carlo frame error rates over a binary symmetric correlation channel.

Trials are grouped in chunks of :data:`CHUNK` and every chunk draws from its
own counter-based stream keyed by ``(seed, chunk)``.  The source blocks and
channel noise therefore depend only on the seed and the block length, so
runs that differ in tail length, beam width or metric see identical data
and can be compared trial by trial.
"""

from __future__ import annotations

import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.stats import binomtest

from .coexist import fer_one_unknown, fer_two_unknown
from .decoder import DecoderConfig, Policy, decode_batch
from .errors import ValidationError
from .overlapped_codec import CodeConfig, coset_index_exact, fractional_weights_u64, parse_rate

__all__ = [
    "CHUNK",
    "Regime",
    "ExperimentConfig",
    "FerPoint",
    "FerReport",
    "bsc_corrupt",
    "chunk_rng",
    "trial_errors",
    "run_fer",
    "tail_sweep",
    "mcnemar",
    "wilson_interval",
    "theory_fer",
]

CHUNK = 1024
KNOWN_PREFIX_LIMIT = 16
COSET_TOL = 1e-12


@dataclass(frozen=True)
class Regime:
    """Full decoding (``unknown=None``) or ML over the last ``unknown`` symbols given the rest."""

    unknown: int | None = None

    @property
    def full(self) -> bool:
        return self.unknown is None

    def to_json(self) -> dict:
        return {"regime": "full"} if self.full else {"regime": "known-prefix", "k": self.unknown}


@dataclass(frozen=True)
class ExperimentConfig:
    cfg: CodeConfig
    eps_list: tuple[float, ...]
    trials: int
    seed: int
    dec: DecoderConfig
    regime: Regime = Regime()
    policy: Policy = Policy.M_ALGORITHM
    tie_policy: str = "random"

    def __post_init__(self) -> None:
        object.__setattr__(self, "eps_list", tuple(float(e) for e in self.eps_list))
        if self.trials < 1:
            raise ValidationError("trials must be at least 1")
        if not self.eps_list:
            raise ValidationError("need at least one crossover probability")
        for e in self.eps_list:
            if not 0 <= e < 0.5:
                raise ValidationError(f"crossover probability {e} outside [0, 1/2)")
        if not 0 <= self.seed < 2**64:
            raise ValidationError("seed must be a 64-bit unsigned integer")
        if self.tie_policy not in ("random", "error"):
            raise ValidationError("tie policy must be 'random' or 'error'")
        k = self.regime.unknown
        if k is not None and not 1 <= k <= min(self.cfg.n, KNOWN_PREFIX_LIMIT):
            raise ValidationError(f"unknown symbol count must lie in [1, {KNOWN_PREFIX_LIMIT}]")

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        try:
            return cls._from_dict(d)
        except ValidationError:
            raise
        except KeyError as exc:
            raise ValidationError(f"experiment config is missing {exc.args[0]!r}") from None
        except (TypeError, ValueError) as exc:
            raise ValidationError(f"malformed experiment config: {exc}") from None

    @classmethod
    def _from_dict(cls, d: dict) -> "ExperimentConfig":
        cfg = CodeConfig(int(d["n"]), parse_rate(str(d["R"])), int(d.get("t", 0)))
        eps_list = [float(e) for e in d["eps_list"]]
        dec_eps = next((e for e in eps_list if e > 0), 0.01)
        dec = DecoderConfig(
            M=int(d.get("M", 16)),
            eps=dec_eps,
            use_ccs=bool(d.get("use_ccs", False)),
            bins=int(d.get("bins", 1 << 12)),
        )
        if d.get("regime", "full") == "full":
            regime = Regime()
        elif d["regime"] == "known-prefix":
            regime = Regime(int(d["k"]))
        else:
            raise ValidationError(f"unknown regime {d['regime']!r}")
        return cls(
            cfg, tuple(eps_list), int(d["trials"]), int(d.get("seed", 0)), dec, regime,
            Policy(d.get("policy", "m")), d.get("tie_policy", "random"),
        )

    @classmethod
    def from_json(cls, path: str | Path) -> "ExperimentConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def to_dict(self) -> dict:
        out = {
            "n": self.cfg.n,
            "R": str(self.cfg.R),
            "t": self.cfg.t,
            "eps_list": list(self.eps_list),
            "trials": self.trials,
            "seed": self.seed,
            "M": self.dec.M,
            "use_ccs": self.dec.use_ccs,
            "bins": self.dec.bins,
            "policy": self.policy.value,
            "tie_policy": self.tie_policy,
        }
        out.update(self.regime.to_json())
        return out


@dataclass
class FerPoint:
    eps: float
    errors: int
    trials: int
    failures: int
    fer: float
    lo: float
    hi: float


@dataclass
class FerReport:
    points: list[FerPoint]
    config: dict
    seed: int
    wall_time: float = field(default=0.0, compare=False)

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "seed": self.seed,
            "wall_time": self.wall_time,
            "points": [asdict(p) for p in self.points],
        }

    def to_csv(self) -> str:
        lines = ["eps,fer,lo,hi"]
        for p in self.points:
            lines.append(",".join(repr(float(v)) for v in (p.eps, p.fer, p.lo, p.hi)))
        return "\n".join(lines) + "\n"


def wilson_interval(errors: int, trials: int, level: float = 0.95) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    ci = binomtest(errors, trials).proportion_ci(confidence_level=level, method="wilson")
    return float(ci.low), float(ci.high)


def mcnemar(errors_a: np.ndarray, errors_b: np.ndarray, alternative: str = "two-sided") -> tuple[int, int, float]:
    """Exact McNemar test on paired error indicators.

    Returns ``(a_only, b_only, p)``; ``alternative='greater'`` tests whether
    ``a`` errs more often than ``b``.
    """
    a = np.asarray(errors_a, dtype=bool)
    b = np.asarray(errors_b, dtype=bool)
    if a.shape != b.shape:
        raise ValidationError("paired error arrays must have the same shape")
    a_only = int(np.count_nonzero(a & ~b))
    b_only = int(np.count_nonzero(~a & b))
    if a_only + b_only == 0:
        return a_only, b_only, 1.0
    p = binomtest(a_only, a_only + b_only, 0.5, alternative=alternative).pvalue
    return a_only, b_only, float(p)


def bsc_corrupt(x: np.ndarray, eps: float, rng: np.random.Generator) -> np.ndarray:
    """Flip every bit of ``x`` independently with probability ``eps``."""
    if not 0 <= eps <= 0.5:
        raise ValidationError("crossover probability must lie in [0, 1/2]")
    x = np.asarray(x, dtype=np.int8)
    return x ^ (rng.random(x.shape) < eps).astype(np.int8)


def chunk_rng(seed: int, chunk: int) -> np.random.Generator:
    """Independent stream for one chunk of trials."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(chunk,))))


def theory_fer(unknown: int, r: float, eps: float) -> float:
    """Limit error rate with one or two unknown final symbols."""
    if unknown == 1:
        return fer_one_unknown(r, eps)
    if unknown == 2:
        return fer_two_unknown(r, eps)
    raise ValidationError("closed forms exist for one or two unknown symbols only")


def _coset_indices(xs: np.ndarray, cfg: CodeConfig) -> list[int]:
    return [coset_index_exact(x, cfg) for x in xs]


def _known_prefix_errors(
    xs: np.ndarray, ys: np.ndarray, cfg: CodeConfig, k: int, tie_keys: np.ndarray | None
) -> np.ndarray:
    """Exact ML over the tails consistent with the revealed prefix and the coset."""
    frac = fractional_weights_u64(cfg)
    with np.errstate(over="ignore"):
        s_frac = (xs.astype(np.uint64) * frac[None, :]).sum(axis=1, dtype=np.uint64)
        gap = (np.uint64(0) - s_frac).astype(np.float64) * 2.0**-64
    gap = np.where(gap >= 1.0, 0.0, gap)  # m - s(x), in [0, 1)

    tail_w = cfg.weights[cfg.n - k:]
    cands = ((np.arange(1 << k)[:, None] >> np.arange(k - 1, -1, -1)) & 1).astype(np.int64)
    cand_s = cands @ tail_w
    x_tail = xs[:, cfg.n - k:].astype(np.int64)
    y_tail = ys[:, cfg.n - k:].astype(np.int64)
    true_code = x_tail @ (1 << np.arange(k - 1, -1, -1))
    tau = cand_s[None, :] - (x_tail @ tail_w)[:, None]
    rel = gap[:, None] - tau
    inside = (rel > -COSET_TOL) & (rel < 1.0 - COSET_TOL)
    inside[np.arange(xs.shape[0]), true_code] = True
    dist = (cands[None, :, :] != y_tail[:, None, :]).sum(axis=2).astype(np.float64)
    dist = np.where(inside, dist, np.inf)
    best = dist.min(axis=1)
    tied = dist == best[:, None]
    if tie_keys is None:
        # pessimistic: any tie with a wrong candidate is an error
        return (tied.sum(axis=1) > 1) | ~tied[np.arange(xs.shape[0]), true_code]
    keyed = np.where(tied, tie_keys, -1.0)
    return keyed.argmax(axis=1) != true_code


def _chunk_errors(exp: ExperimentConfig, chunk: int, size: int) -> tuple[np.ndarray, np.ndarray]:
    cfg = exp.cfg
    rng = chunk_rng(exp.seed, chunk)
    xs = rng.integers(0, 2, size=(size, cfg.n), dtype=np.int8)
    noise = rng.random((size, cfg.n))
    k = exp.regime.unknown
    tie_keys = rng.random((size, 1 << k)) if k is not None and exp.tie_policy == "random" else None
    ms = _coset_indices(xs, cfg) if exp.regime.full else None
    errs = np.zeros((len(exp.eps_list), size), dtype=bool)
    fails = np.zeros_like(errs)
    for e, eps in enumerate(exp.eps_list):
        ys = xs ^ (noise < eps).astype(np.int8)
        if eps == 0.0:
            continue  # y equals x and the true block is always the unique best
        if k is not None:
            errs[e] = _known_prefix_errors(xs, ys, cfg, k, tie_keys)
            continue
        dec = replace(exp.dec, eps=eps)
        out, ok = decode_batch(ms, ys, cfg, dec, exp.policy)
        fails[e] = ~ok
        errs[e] = ~ok | np.any(out != xs, axis=1)
    return errs, fails


def trial_errors(exp: ExperimentConfig, workers: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Per-trial error and decoder-failure flags, shape ``(len(eps_list), trials)``.

    The result does not depend on ``workers``.
    """
    n_chunks = math.ceil(exp.trials / CHUNK)
    sizes = [min(CHUNK, exp.trials - c * CHUNK) for c in range(n_chunks)]
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(lambda c: _chunk_errors(exp, c, sizes[c]), range(n_chunks)))
    else:
        parts = [_chunk_errors(exp, c, sizes[c]) for c in range(n_chunks)]
    errs = np.concatenate([p[0] for p in parts], axis=1)
    fails = np.concatenate([p[1] for p in parts], axis=1)
    return errs, fails


def _report(exp: ExperimentConfig, errs: np.ndarray, fails: np.ndarray, wall: float) -> FerReport:
    points = []
    for e, eps in enumerate(exp.eps_list):
        ne = int(errs[e].sum())
        lo, hi = wilson_interval(ne, exp.trials)
        points.append(FerPoint(eps, ne, exp.trials, int(fails[e].sum()), ne / exp.trials, lo, hi))
    return FerReport(points, exp.to_dict(), exp.seed, wall)


def run_fer(exp: ExperimentConfig, workers: int = 1) -> FerReport:
    """Frame error rate per crossover probability."""
    start = time.perf_counter()
    errs, fails = trial_errors(exp, workers)
    return _report(exp, errs, fails, time.perf_counter() - start)


def tail_sweep(base: ExperimentConfig, t_list: Sequence[int], workers: int = 1) -> list[FerReport]:
    """One report per tail length; all share the same source and noise draws."""
    reports = []
    for t in t_list:
        cfg = CodeConfig(base.cfg.n, base.cfg.R, int(t))
        reports.append(run_fer(replace(base, cfg=cfg), workers))
    return reports
