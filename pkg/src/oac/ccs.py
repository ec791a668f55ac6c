"""Coset cardinality spectrum (CCS): the density of the projection ``u``.

``f_i`` is the density of the position ``u`` of the target point inside the
interval left after ``i`` decoded symbols.  It satisfies the backward
recursion::

    f_{i-1}(u) = 2**(r-1) * (f_i(u * 2**r) + f_i((u - (1 - 2**-r)) * 2**r))

started from the uniform density at level ``n``.  A :class:`Spectrum` stores
``N`` bin averages of one level.  Three discretizations of the recursion are
offered; ``FINE`` integrates the piecewise-constant input exactly.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .overlapped_codec import CodeConfig

__all__ = [
    "Scheme",
    "Spectrum",
    "final_ccs",
    "ccs_backward_step",
    "compute_ccs",
    "asymptotic_ccs",
    "asymptotic_ccs_half_rate",
    "point_value",
    "conditional_symbol_prob",
    "ecc_normalized",
    "rate_loss",
    "differential_entropy",
    "expansion_factor",
    "DEFAULT_BINS",
]

DEFAULT_BINS = 1 << 16
CONVERGENCE_L1 = 1e-8


class Scheme(enum.Enum):
    """Discretization of the backward recursion."""

    ROUNDING = "rounding"
    LINEAR = "linear"
    FINE = "fine"


@dataclass(frozen=True)
class Spectrum:
    """Bin averages ``f_hat(j)`` of level ``level`` over ``N`` bins of [0, 1)."""

    bins: np.ndarray
    level: int = 0

    @property
    def N(self) -> int:
        return int(self.bins.size)

    @property
    def centers(self) -> np.ndarray:
        return (np.arange(self.N) + 0.5) / self.N

    def mass(self) -> float:
        return float(self.bins.mean())

    def __call__(self, u: float | np.ndarray) -> np.ndarray | float:
        """Nearest-bin lookup; zero outside [0, 1)."""
        arr = np.asarray(u, dtype=np.float64)
        idx = np.floor(arr * self.N).astype(np.int64)
        inside = (arr >= 0.0) & (arr < 1.0)
        vals = np.where(inside, self.bins[np.clip(idx, 0, self.N - 1)], 0.0)
        return float(vals) if vals.ndim == 0 else vals

    def integral(self, a: float, b: float) -> float:
        """``int_a^b f(u) du`` for the piecewise-constant density."""
        cum = _cumulative(self.bins)
        return float((_cum_at(cum, self.bins, b * self.N) - _cum_at(cum, self.bins, a * self.N)) / self.N)


def final_ccs(N: int, level: int = 0) -> Spectrum:
    """Uniform density, the spectrum of the last level."""
    if N < 2:
        raise ValidationError("need at least two bins")
    return Spectrum(np.ones(N), level)


def _cumulative(bins: np.ndarray) -> np.ndarray:
    return np.concatenate([[0.0], np.cumsum(bins)])


def _cum_at(cum: np.ndarray, bins: np.ndarray, x: np.ndarray | float) -> np.ndarray:
    """Integral of the bin function from 0 to ``x`` (index units)."""
    N = bins.size
    x = np.clip(np.asarray(x, dtype=np.float64), 0.0, float(N))
    k = np.minimum(np.floor(x).astype(np.int64), N - 1)
    return cum[k] + (x - k) * bins[k]


def _read(bins: np.ndarray, idx: np.ndarray) -> np.ndarray:
    inside = (idx >= 0) & (idx < bins.size)
    return np.where(inside, bins[np.clip(idx, 0, bins.size - 1)], 0.0)


def _renormalize(bins: np.ndarray) -> np.ndarray:
    total = bins.mean()
    return bins / total if total > 0 else bins


def ccs_backward_step(
    f: Spectrum, r: float, scheme: Scheme = Scheme.FINE, renormalize: bool = True
) -> Spectrum:
    """One level of the backward recursion at symbol rate ``r``.

    ``renormalize=False`` exposes the raw discretization, whose mass drift
    measures the scheme's error.
    """
    norm = _renormalize if renormalize else (lambda b: b)
    if not 0 < r <= 1:
        raise ValidationError(f"symbol rate must lie in (0, 1], got {r}")
    bins = f.bins
    N = bins.size
    j = np.arange(N, dtype=np.float64)
    scale = 2.0**r
    lam0 = j * scale
    lam1 = (j - N * (1.0 - 2.0**-r)) * scale
    if scheme is Scheme.ROUNDING:
        # round half up on the index
        g0 = _read(bins, np.floor(lam0 + 0.5).astype(np.int64))
        g1 = _read(bins, np.floor(lam1 + 0.5).astype(np.int64))
        new = norm(2.0 ** (r - 1) * (g0 + g1))
    elif scheme is Scheme.LINEAR:
        new = norm(2.0 ** (r - 1) * (_interp(bins, lam0) + _interp(bins, lam1)))
    elif scheme is Scheme.FINE:
        cum = _cumulative(bins)
        g0 = _cum_at(cum, bins, lam0 + scale) - _cum_at(cum, bins, lam0)
        g1 = _cum_at(cum, bins, lam1 + scale) - _cum_at(cum, bins, lam1)
        new = norm((g0 + g1) / 2.0)
    else:  # pragma: no cover
        raise ValidationError(f"unknown scheme {scheme}")
    return Spectrum(new, f.level - 1)


def _interp(bins: np.ndarray, x: np.ndarray) -> np.ndarray:
    k = np.floor(x).astype(np.int64)
    frac = x - k
    return (1.0 - frac) * _read(bins, k) + frac * _read(bins, k + 1)


def compute_ccs(
    cfg: CodeConfig, N: int = DEFAULT_BINS, scheme: Scheme = Scheme.FINE
) -> list[Spectrum]:
    """Spectra of every level; entry ``i`` is level ``i`` (0 = whole block).

    Tail levels are uniform because rate-1 symbols do not overlap.
    """
    levels = [final_ccs(N, cfg.n)]
    r = cfg.r
    for i in range(cfg.n, 0, -1):
        f = levels[-1]
        if i > cfg.body or cfg.r_exact in (0, 1):
            levels.append(Spectrum(f.bins, i - 1))
        else:
            levels.append(ccs_backward_step(f, r, scheme))
    return levels[::-1]


def asymptotic_ccs(
    r: float,
    N: int = DEFAULT_BINS,
    scheme: Scheme = Scheme.FINE,
    max_steps: int = 256,
    tol: float = CONVERGENCE_L1,
) -> Spectrum:
    """Iterate from uniform until the mean absolute change drops below ``tol``."""
    f = final_ccs(N)
    for _ in range(max_steps):
        g = ccs_backward_step(f, r, scheme)
        change = float(np.abs(g.bins - f.bins).mean())
        f = Spectrum(g.bins, 0)
        if change < tol:
            break
    return f


def point_value(
    f: Spectrum, r: float, u, depth: int = 64, max_nodes: int = 1 << 12
) -> float:
    """Density at a single point, unrolling the recursion ``depth`` times.

    Bin averages cannot resolve isolated zeros, around which the limit density
    rises steeply.  Here the branch maps are followed exactly in high precision
    and ``f`` is only read at the leaves.  Unrolling stops early once the
    branch tree exceeds ``max_nodes``.  The maps expand by ``2**r``, so pass
    ``u`` as an mpmath number or decimal string when it must be tracked exactly
    for many levels.
    """
    import mpmath

    if not 0 < r < 1:
        raise ValidationError("rate must lie in (0, 1)")
    with mpmath.workdps(30 + int(depth * r * 0.31) + 1):
        scale = mpmath.mpf(2) ** mpmath.mpf(r)
        shift = 1 - 1 / scale
        nodes = [mpmath.mpf(u)]
        gain = 1.0
        for _ in range(depth):
            nxt = []
            for v in nodes:
                for x in (0, 1):
                    w = (v - x * shift) * scale
                    if 0 <= w < 1:
                        nxt.append(w)
            if len(nxt) > max_nodes:
                break
            nodes = nxt
            gain *= 2.0 ** (r - 1)
            if not nodes:
                return 0.0
        return gain * float(sum(f(float(v)) for v in nodes))


def asymptotic_ccs_half_rate(u: float | np.ndarray) -> np.ndarray | float:
    """Closed-form limit density at rate 1/2 (trapezoid on [0, 1))."""
    arr = np.asarray(u, dtype=np.float64)
    s2 = math.sqrt(2.0)
    slope = 1.0 / (3.0 * s2 - 4.0)
    plateau = 1.0 / (2.0 - s2)
    out = np.where(
        arr < s2 - 1.0,
        arr * slope,
        np.where(arr < 2.0 - s2, plateau, (1.0 - arr) * slope),
    )
    out = np.where((arr < 0.0) | (arr >= 1.0), 0.0, out)
    return float(out) if out.ndim == 0 else out


def conditional_symbol_prob(
    u: float, x: int, f_prev: Spectrum, f_cur: Spectrum, r: float
) -> float:
    """Probability that the next symbol is ``x`` given projection ``u``."""
    denom = float(f_prev(u))
    if denom <= 0.0:
        raise ValidationError(f"spectrum vanishes at u={u}; conditional undefined")
    arg = (u - x * (1.0 - 2.0**-r)) * 2.0**r
    return 2.0 ** (r - 1) * float(f_cur(arg)) / denom


def ecc_normalized(f: Spectrum) -> float:
    """``int f**2``: expected coset size relative to ``2**(n(1-r))``."""
    return float(np.mean(f.bins**2))


def rate_loss(f: Spectrum) -> float:
    """``int f log2 f`` in bits, with ``0 log 0 = 0``."""
    b = f.bins
    pos = b > 0
    return float(np.sum(b[pos] * np.log2(b[pos])) / b.size)


def differential_entropy(f: Spectrum) -> float:
    """``h(U) = -int f log2 f``."""
    return -rate_loss(f)


def expansion_factor(f: Spectrum, r: float) -> float:
    """``1 + int_{1-2^-r}^{2^-r} f``: average number of children per path."""
    if not 0 < r <= 1:
        raise ValidationError("rate must lie in (0, 1]")
    lo, hi = 1.0 - 2.0**-r, 2.0**-r
    if hi <= lo:
        return 1.0
    return 1.0 + f.integral(lo, hi)
