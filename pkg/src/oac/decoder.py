"""Slepian-Wolf decoding of overlapped arithmetic codes by tree search.

Given the coset index ``m`` and side information ``y``, the decoder grows
paths symbol by symbol.  Each path carries the projection ``u`` of the
target point into its current interval; a branch is legal only while
``u`` stays in ``[0, 1)``.  Paths are ranked by the Hamming metric against
``y``, optionally plus the log of the coset cardinality spectrum at ``u``,
which favours paths whose subtree still holds many codewords.

Projections are evaluated exactly enough for long blocks: ``u`` after ``k``
symbols equals ``m 2**-E_k - sum_{j<=k} x_j w_j 2**-E_k``, where ``E_k`` is
the rate still to be coded.  Every term is tabulated modulo 16 in 60-bit
fixed point, so the sum costs ``O(k)`` wrapping integer additions and never
loses the low-order bits that a floating-point recursion would.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import mpmath
import numba
import numpy as np

from .ccs import Spectrum, compute_ccs, Scheme
from .errors import DecodeFailure, ValidationError
from .overlapped_codec import CodeConfig, _as_block

__all__ = [
    "Policy",
    "DecoderConfig",
    "DecodeResult",
    "DecoderTables",
    "decoder_tables",
    "branch",
    "path_metric_increment",
    "decode_m_algorithm",
    "decode_backward_replacing",
    "decode_batch",
    "coset_bits",
    "backward_replacing_list",
    "LOG_FLOOR",
    "LEGAL_TOL",
]

LOG_FLOOR = -60.0
LEGAL_TOL = 1e-12
FRAC_BITS = 60
_MOD = 1 << 64


class Policy(enum.Enum):
    """Survivor management between levels."""

    M_ALGORITHM = "m"
    BACKWARD_REPLACING = "backward"


@dataclass(frozen=True)
class DecoderConfig:
    """Beam width ``M``, crossover probability and metric options."""

    M: int
    eps: float
    use_ccs: bool = False
    bins: int = 1 << 12
    spectra: tuple[Spectrum, ...] | None = field(default=None, compare=False, hash=False)

    def __post_init__(self) -> None:
        if self.M < 1:
            raise ValidationError("beam width M must be at least 1")
        if not 0 < self.eps < 0.5:
            raise ValidationError("crossover probability must lie in (0, 1/2)")
        if self.bins < 2:
            raise ValidationError("need at least two spectrum bins")


@dataclass
class DecodeResult:
    """Decoded block, its log-likelihood given ``y`` and its distance to ``y``."""

    block: np.ndarray
    log_likelihood: float
    flips: int

    def to01(self) -> str:
        return "".join(str(int(b)) for b in self.block)


@dataclass(frozen=True)
class DecoderTables:
    """Fixed-point residues (mod 16, 60 fractional bits) driving exact projections.

    ``index_terms[k, b]`` is ``2**(b - E_k)`` and ``weight_terms[k, j]`` is
    ``w_{j+1} 2**-E_k``, where ``E_k`` is the rate left after ``k`` symbols.
    """

    index_terms: np.ndarray
    weight_terms: np.ndarray
    rates: np.ndarray


def _to_signed(v: int) -> int:
    v %= _MOD
    return v - _MOD if v >= _MOD // 2 else v


@lru_cache(maxsize=32)
def decoder_tables(cfg: CodeConfig) -> DecoderTables:
    """Build (and cache) the projection tables of ``cfg``."""
    n, nR = cfg.n, cfg.nR
    rates = cfg.level_rates()
    remaining = [Fraction(nR)]
    for rho in rates:
        remaining.append(remaining[-1] - rho)
    exps = cfg.weight_exponents()
    cache: dict[Fraction, int] = {}
    prec = nR + FRAC_BITS + 96

    def fixed(e: Fraction) -> int:
        if e not in cache:
            if e + FRAC_BITS < -2:
                cache[e] = 0
            else:
                with mpmath.workprec(prec):
                    val = mpmath.power(2, mpmath.mpf(e.numerator) / e.denominator + FRAC_BITS)
                    cache[e] = int(mpmath.nint(val))
        return cache[e]

    idx = np.zeros((n + 1, max(nR, 1)), dtype=np.int64)
    wt = np.zeros((n + 1, n), dtype=np.int64)
    for k in range(n + 1):
        Ek = remaining[k]
        for b in range(nR):
            idx[k, b] = _to_signed(fixed(b - Ek))
        for j in range(k):
            hi, lo = exps[j]
            wt[k, j] = _to_signed(fixed(hi - Ek) - fixed(lo - Ek))
    return DecoderTables(idx, wt, np.array([float(x) for x in rates]))


def coset_bits(m: int, cfg: CodeConfig) -> np.ndarray:
    """Little-endian bits of the coset index."""
    if not 0 <= m < cfg.num_cosets:
        raise ValidationError(f"coset index must lie in [0, 2**{cfg.nR})")
    return np.array([(m >> b) & 1 for b in range(max(cfg.nR, 1))], dtype=np.int8)


def branch(u: float, x: int, rate: float, last: bool = False) -> float | None:
    """Projection after appending ``x`` at symbol rate ``rate``, or ``None`` if illegal.

    Floating-point reference of the exact table-driven update.
    """
    v = 2.0**rate * (u - x * (1.0 - 2.0**-rate))
    upper = 1.0 - LEGAL_TOL if last else 1.0 + LEGAL_TOL
    if not -LEGAL_TOL <= v < upper:
        return None
    return min(max(v, 0.0), np.nextafter(1.0, 0.0))


def path_metric_increment(
    x: int,
    y: int,
    eps: float,
    log_f_new: float | None = None,
    log_f_old: float | None = None,
) -> float:
    """Log-likelihood gain of one branch; spectrum terms telescope along a path."""
    inc = math.log(eps) if x != y else math.log1p(-eps)
    if log_f_new is not None and log_f_old is not None:
        inc += max(log_f_new, LOG_FLOOR) - max(log_f_old, LOG_FLOOR)
    return inc


@lru_cache(maxsize=16)
def _log_spectra(cfg: CodeConfig, bins: int) -> np.ndarray:
    levels = compute_ccs(cfg, bins, Scheme.FINE)
    return _log_table(levels)


def _log_table(levels: Sequence[Spectrum]) -> np.ndarray:
    arr = np.stack([lv.bins for lv in levels])
    with np.errstate(divide="ignore"):
        return np.maximum(np.log(arr), LOG_FLOOR)


def _spectra_for(cfg: CodeConfig, dec: DecoderConfig) -> np.ndarray:
    if not dec.use_ccs:
        return np.zeros((cfg.n + 1, 2))
    if dec.spectra is not None:
        if len(dec.spectra) != cfg.n + 1:
            raise ValidationError("need one spectrum per level 0..n")
        return _log_table(dec.spectra)
    return _log_spectra(cfg, dec.bins)


@numba.njit(cache=True, nogil=True)
def backward_replacing_list(nchild: np.ndarray, better_second: np.ndarray, M: int) -> np.ndarray:
    """Cell assignment of the backward-replacing list.

    ``nchild[p]`` is the number of legal children of the ``p``-th best path;
    ``better_second[p]`` says whether its 1-branch beats its 0-branch.
    Returns an ``(M, 2)`` array of ``(parent, child_bit)`` per cell, ``-1``
    for empty cells.  The first child replaces its parent in place, second
    children fill cells from the back (overwriting unprocessed paths), and
    when no cell is left only the better child survives.
    """
    cells = -np.ones((M, 2), dtype=np.int64)
    cnt = nchild.size
    back = M - 1
    i = 0
    while i < cnt and i <= back:
        c = nchild[i]
        if c == 1:
            cells[i, 0] = i
            cells[i, 1] = -2  # sole child; bit resolved by caller
        elif c == 2:
            if back > i:
                cells[i, 0] = i
                cells[i, 1] = 0
                cells[back, 0] = i
                cells[back, 1] = 1
                back -= 1
            else:
                cells[i, 0] = i
                cells[i, 1] = 1 if better_second[i] else 0
        i += 1
    return cells


@numba.njit(cache=True, nogil=True)
def _decode_core(
    y, gm, wt, logf, use_ccs, lp_match, lp_flip, M, backward, n,
    node_bit, node_parent,
):
    nbins = logf.shape[1]
    # survivors of the current level
    cur_node = np.empty(M, dtype=np.int64)
    cur_flips = np.empty(M, dtype=np.int64)
    cur_lf = np.empty(M, dtype=np.float64)
    cur_metric = np.empty(M, dtype=np.float64)
    cnt = 1
    cur_node[0] = -1
    cur_flips[0] = 0
    u0 = gm[0] * 2.0**-60
    b0 = min(max(int(u0 * nbins), 0), nbins - 1)
    lf0 = logf[0, b0] if use_ccs else 0.0
    cur_lf[0] = lf0
    cur_metric[0] = 0.0

    c_parent = np.empty(2 * M, dtype=np.int64)
    c_bit = np.empty(2 * M, dtype=np.int64)
    c_flips = np.empty(2 * M, dtype=np.int64)
    c_lf = np.empty(2 * M, dtype=np.float64)
    c_metric = np.empty(2 * M, dtype=np.float64)
    first_child = np.empty(M, dtype=np.int64)
    nchild = np.empty(M, dtype=np.int64)
    better_second = np.zeros(M, dtype=np.bool_)
    diff = lp_flip - lp_match

    for k in range(1, n + 1):
        last = k == n
        upper = 1.0 - 1e-12 if last else 1.0 + 1e-12
        nc = 0
        for p in range(cnt):
            acc = gm[k]
            node = cur_node[p]
            depth = k - 1
            while node >= 0:
                if node_bit[node]:
                    acc -= wt[k, depth - 1]
                node = node_parent[node]
                depth -= 1
            first_child[p] = nc
            nchild[p] = 0
            for x in range(2):
                v = acc - wt[k, k - 1] if x else acc
                u = v * 2.0**-60
                if u < -1e-12 or u >= upper:
                    continue
                if u < 0.0:
                    u = 0.0
                flips = cur_flips[p] + (1 if x != y[k - 1] else 0)
                lf = 0.0
                if use_ccs:
                    bi = int(u * nbins)
                    if bi >= nbins:
                        bi = nbins - 1
                    lf = logf[k, bi]
                c_parent[nc] = p
                c_bit[nc] = x
                c_flips[nc] = flips
                c_lf[nc] = lf
                c_metric[nc] = flips * diff + (lf - lf0)
                nc += 1
                nchild[p] += 1
        if nc == 0:
            return -1, cnt
        if backward:
            for p in range(cnt):
                better_second[p] = False
                if nchild[p] == 2:
                    f = first_child[p]
                    better_second[p] = c_metric[f + 1] > c_metric[f]
            cells = backward_replacing_list(nchild[:cnt], better_second[:cnt], M)
            sel = np.empty(M, dtype=np.int64)
            ns = 0
            for s in range(M):
                p = cells[s, 0]
                if p < 0:
                    continue
                f = first_child[p]
                if cells[s, 1] == -2 or cells[s, 1] == 0:
                    sel[ns] = f
                else:
                    sel[ns] = f + 1
                ns += 1
            # stable sort of the list by metric, best first
            order = np.argsort(-c_metric[sel[:ns]], kind="mergesort")
            chosen = sel[:ns][order]
        else:
            order = np.argsort(-c_metric[:nc], kind="mergesort")
            ns = min(M, nc)
            chosen = order[:ns]
        base = k * M
        new_node = np.empty(ns, dtype=np.int64)
        for s in range(ns):
            c = chosen[s]
            slot = base + s
            node_bit[slot] = c_bit[c]
            node_parent[slot] = cur_node[c_parent[c]]
            new_node[s] = slot
            cur_flips[s] = c_flips[c]
            cur_lf[s] = c_lf[c]
            cur_metric[s] = c_metric[c]
        for s in range(ns):
            cur_node[s] = new_node[s]
        cnt = ns

    # best survivor; ties go to the lexicographically smallest block
    best = 0
    for s in range(1, cnt):
        if cur_metric[s] > cur_metric[best]:
            best = s
        elif cur_metric[s] == cur_metric[best]:
            a = cur_node[s]
            b = cur_node[best]
            smaller = False
            # walking leaf to root, the last difference seen is the earliest
            while a >= 0:
                if node_bit[a] != node_bit[b]:
                    smaller = node_bit[a] < node_bit[b]
                a = node_parent[a]
                b = node_parent[b]
            if smaller:
                best = s
    return cur_node[best], cnt


@numba.njit(cache=True, nogil=True)
def _index_residues(mbits, idx):
    n1 = idx.shape[0]
    gm = np.zeros(n1, dtype=np.int64)
    for k in range(n1):
        acc = np.int64(0)
        for b in range(mbits.size):
            if mbits[b]:
                acc += idx[k, b]
        gm[k] = acc
    return gm


@numba.njit(cache=True, nogil=True)
def _batch(ys, mbits, idx, wt, logf, use_ccs, lp_match, lp_flip, M, backward, n):
    T = ys.shape[0]
    out = np.zeros((T, n), dtype=np.int8)
    ok = np.ones(T, dtype=np.bool_)
    node_bit = np.zeros((n + 1) * M, dtype=np.int8)
    node_parent = np.zeros((n + 1) * M, dtype=np.int64)
    for t in range(T):
        gm = _index_residues(mbits[t], idx)
        leaf, _ = _decode_core(
            ys[t], gm, wt, logf, use_ccs, lp_match, lp_flip, M, backward, n,
            node_bit, node_parent,
        )
        if leaf < 0:
            ok[t] = False
            continue
        node = leaf
        pos = n - 1
        while node >= 0:
            out[t, pos] = node_bit[node]
            node = node_parent[node]
            pos -= 1
    return out, ok


def decode_batch(
    ms: Sequence[int],
    ys: np.ndarray,
    cfg: CodeConfig,
    dec: DecoderConfig,
    policy: Policy = Policy.M_ALGORITHM,
) -> tuple[np.ndarray, np.ndarray]:
    """Decode many trials; returns ``(blocks, ok)`` where ``ok`` flags success."""
    tables = decoder_tables(cfg)
    ys = np.ascontiguousarray(ys, dtype=np.int8)
    if ys.ndim != 2 or ys.shape[1] != cfg.n:
        raise ValidationError(f"side information must have shape (T, {cfg.n})")
    mbits = np.stack([coset_bits(int(m), cfg) for m in ms]) if len(ms) else np.zeros((0, 1), np.int8)
    logf = _spectra_for(cfg, dec)
    return _batch(
        ys, mbits, tables.index_terms, tables.weight_terms, logf, dec.use_ccs,
        math.log1p(-dec.eps), math.log(dec.eps), dec.M,
        policy is Policy.BACKWARD_REPLACING, cfg.n,
    )


def _decode(m: int, y, cfg: CodeConfig, dec: DecoderConfig, policy: Policy) -> DecodeResult:
    ya = _as_block(y, cfg.n).astype(np.int8)
    blocks, ok = decode_batch([m], ya[None, :], cfg, dec, policy)
    if not ok[0]:
        raise DecodeFailure("no path survived to the end of the block")
    block = blocks[0]
    flips = int(np.count_nonzero(block != ya))
    loglik = flips * math.log(dec.eps) + (cfg.n - flips) * math.log1p(-dec.eps)
    return DecodeResult(block, loglik, flips)


def decode_m_algorithm(m: int, y, cfg: CodeConfig, dec: DecoderConfig) -> DecodeResult:
    """Breadth-first search keeping the ``M`` best paths per level."""
    return _decode(m, y, cfg, dec, Policy.M_ALGORITHM)


def decode_backward_replacing(m: int, y, cfg: CodeConfig, dec: DecoderConfig) -> DecodeResult:
    """Breadth-first search with the fixed ``nM``-node backward-replacing list."""
    return _decode(m, y, cfg, dec, Policy.BACKWARD_REPLACING)
