"""Hamming distance spectrum (HDS) of overlapped arithmetic codes.

``psi(d; n)`` is the expected number of other blocks at Hamming distance
``d`` that share the coset of a uniformly drawn block.  Routes:

* :func:`hds_exhaustive` counts mate pairs coset by coset (exact).
* :func:`hds_binomial` scales binomial coefficients by ``int f**2``.
* :func:`hds_soft` sums ``max(0, 1 - |tau|)`` over all flip patterns.
* :func:`hds_hard` counts flip patterns with ``|tau| < 1``.
* :func:`hds_fast` uses the spectrum value at ``u = 1/2`` only.

Plus closed forms for ``psi(1)`` and ``psi(2)`` as ``n`` grows, and
detection of rates at which ``psi(3)`` diverges.
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator

import numba
import numpy as np

from .ccs import Scheme, asymptotic_ccs_half_rate, compute_ccs, ecc_normalized
from .errors import ComplexityGuardError, ValidationError
from .overlapped_codec import CodeConfig, all_s_values, snap_ceil

__all__ = [
    "HdsVector",
    "Convergence",
    "DivergenceReport",
    "DivergentCase",
    "TAU_BUDGET",
    "GOLDEN_RATE",
    "CUBIC_RATE",
    "CUBIC_ROOT",
    "hds_exhaustive",
    "hds_binomial",
    "hds_soft",
    "hds_hard",
    "hds_fast",
    "hds_soft_rate",
    "hds_hard_rate",
    "rate_weights",
    "spectrum_midpoint",
    "tau_count",
    "iter_shift_values",
    "psi1_closed",
    "psi2_closed",
    "psi2_components",
    "psi_bounds",
    "psi3_divergence",
    "psi3_divergent_closed",
    "shift_histogram",
    "shift_density",
]

TAU_BUDGET = 1 << 34
HARD_MARGIN = 1e-9
_DIRECT_LIMIT = 1 << 22
_CHUNK = 1 << 22

GOLDEN_RATE = math.log2((1.0 + math.sqrt(5.0)) / 2.0)
# real root of x**3 - x - 1 (plastic number)
CUBIC_ROOT = float(
    np.real(next(z for z in np.roots([1.0, 0.0, -1.0, -1.0]) if abs(z.imag) < 1e-12))
)
CUBIC_RATE = math.log2(CUBIC_ROOT)


@dataclass
class HdsVector:
    """``psi[d]`` for ``d = 0..n`` with the method that produced it."""

    psi: np.ndarray
    method: str
    computed: np.ndarray | None = None
    coset_phi: np.ndarray | None = None
    coset_sizes: np.ndarray | None = None

    def __post_init__(self) -> None:
        if self.computed is None:
            self.computed = np.ones(self.psi.size, dtype=bool)

    @property
    def n(self) -> int:
        return self.psi.size - 1


@numba.njit(cache=True)
def _popcount(v: np.int64) -> np.int64:
    c = 0
    while v:
        v &= v - 1
        c += 1
    return c


@numba.njit(cache=True)
def _pair_counts(order: np.ndarray, starts: np.ndarray, n: int) -> np.ndarray:
    """Ordered mate-pair counts per coset and distance."""
    ncos = starts.size - 1
    out = np.zeros((ncos, n + 1), dtype=np.int64)
    for c in range(ncos):
        lo = starts[c]
        hi = starts[c + 1]
        for a in range(lo, hi):
            va = order[a]
            for b in range(a + 1, hi):
                d = _popcount(va ^ order[b])
                out[c, d] += 2
        out[c, 0] = hi - lo
    return out


def hds_exhaustive(cfg: CodeConfig) -> HdsVector:
    """Exact spectrum by enumerating all blocks and their coset mates.

    ``coset_phi[m, d]`` is the coset spectrum (mates at distance ``d``
    averaged over the members of coset ``m``).
    """
    if cfg.n > 20:
        raise ComplexityGuardError(f"exhaustive HDS limited to n <= 20, got {cfg.n}")
    ms = snap_ceil(all_s_values(cfg))
    order = np.argsort(ms, kind="stable").astype(np.int64)
    sizes = np.bincount(ms, minlength=cfg.num_cosets)
    starts = np.concatenate([[0], np.cumsum(sizes)]).astype(np.int64)
    pairs = _pair_counts(order, starts, cfg.n)
    psi = pairs.sum(axis=0) / float(1 << cfg.n)
    with np.errstate(invalid="ignore", divide="ignore"):
        phi = np.where(sizes[:, None] > 0, pairs / np.maximum(sizes, 1)[:, None], 0.0)
    return HdsVector(psi, "exhaustive", coset_phi=phi, coset_sizes=sizes)


def hds_binomial(cfg: CodeConfig, bins: int = 1 << 14) -> HdsVector:
    """``C(n, d) 2**-nR int f**2`` with ``f`` the level-0 spectrum."""
    f0 = compute_ccs(cfg, bins, Scheme.FINE)[0]
    ecc = ecc_normalized(f0)
    d = np.arange(cfg.n + 1)
    binom = np.array([math.comb(cfg.n, k) for k in d], dtype=np.float64)
    return HdsVector(binom * 2.0**-cfg.nR * ecc, "th1")


def tau_count(n: int, d: int) -> int:
    """Number of flip patterns of weight ``d``: ``C(n, d) 2**d``."""
    return math.comb(n, d) << d


def iter_shift_values(weights: np.ndarray, d: int, chunk: int = _CHUNK) -> Iterator[np.ndarray]:
    """Yield shift values for every support of size ``d`` and every sign pattern."""
    n = weights.size
    if d == 0:
        yield np.zeros(1)
        return
    per = 1 << d
    step = max(1, chunk // per)
    combos = itertools.combinations(range(n), d)
    while True:
        block = np.array(list(itertools.islice(combos, step)), dtype=np.int64)
        if block.size == 0:
            return
        w = weights[block]
        vals = np.zeros((block.shape[0], 1))
        for k in range(d):
            col = w[:, k : k + 1]
            vals = np.concatenate([vals + col, vals - col], axis=1)
        yield vals.ravel()


def _half_tables(weights: np.ndarray, dmax: int) -> list[np.ndarray]:
    """Sorted signed sums over one half of the positions, grouped by support size."""
    groups: list[list[np.ndarray]] = [[] for _ in range(dmax + 1)]
    for k in range(min(dmax, weights.size) + 1):
        groups[k] = [v for v in iter_shift_values(weights, k)]
    return [np.sort(np.concatenate(g)) if g else np.zeros(0) for g in groups]


def _pair_sum(a: np.ndarray, b_sorted: np.ndarray, soft: bool) -> float:
    """Sum over pairs of ``max(0, 1 - |a + b|)`` (soft) or ``[|a + b| < 1]``."""
    if a.size == 0 or b_sorted.size == 0:
        return 0.0
    if not soft:
        lim = 1.0 - HARD_MARGIN
        lo = np.searchsorted(b_sorted, -lim - a, side="right")
        hi = np.searchsorted(b_sorted, lim - a, side="left")
        return float(np.sum(hi - lo))
    cum = np.concatenate([[0.0], np.cumsum(b_sorted)])
    i0 = np.searchsorted(b_sorted, -1.0 - a, side="right")
    i1 = np.searchsorted(b_sorted, -a, side="right")
    i2 = np.searchsorted(b_sorted, 1.0 - a, side="left")
    # b in (-1-a, -a]: 1 + a + b ; b in (-a, 1-a): 1 - a - b
    left = (i1 - i0) * (1.0 + a) + (cum[i1] - cum[i0])
    right = (i2 - i1) * (1.0 - a) - (cum[i2] - cum[i1])
    return float(np.sum(left) + np.sum(right))


def _direct_sum(weights: np.ndarray, d: int, soft: bool) -> float:
    total = 0.0
    for vals in iter_shift_values(weights, d):
        a = np.abs(vals)
        if soft:
            total += float(np.sum(np.maximum(0.0, 1.0 - a)))
        else:
            total += float(np.count_nonzero(a < 1.0 - HARD_MARGIN))
    return total


def rate_weights(r: float, n: int) -> np.ndarray:
    """Position weights ``(1 - 2**-r) 2**(i r)``, ``i = 1..n``, of an untailed code.

    Accepts any real rate, unlike :class:`CodeConfig` which needs ``nR`` integral.
    """
    _check_rate(r)
    i = np.arange(1, n + 1, dtype=np.float64)
    return (1.0 - 2.0**-r) * 2.0 ** (i * r)


def _shift_sums(
    weights: np.ndarray, d_max: int, soft: bool, budget: int
) -> tuple[np.ndarray, np.ndarray]:
    """Per-``d`` sums over all flip patterns, meet-in-the-middle for large ``d``."""
    n = weights.size
    sums = np.full(n + 1, np.nan)
    ok = np.zeros(n + 1, dtype=bool)
    half = n // 2
    tables: tuple[list[np.ndarray], list[np.ndarray]] | None = None
    for d in range(d_max + 1):
        if tau_count(n, d) > budget:
            continue
        if tau_count(n, d) <= _DIRECT_LIMIT:
            sums[d] = _direct_sum(weights, d, soft)
        else:
            if tables is None:
                tables = (
                    _half_tables(weights[:half], d_max),
                    _half_tables(weights[half:], d_max),
                )
            left, right = tables
            total = 0.0
            for da in range(max(0, d - (n - half)), min(d, half) + 1):
                total += _pair_sum(left[da], right[d - da], soft)
            sums[d] = total
        ok[d] = True
    return sums, ok


def _approx(weights: np.ndarray, d_max: int | None, soft: bool, budget: int) -> HdsVector:
    n = weights.size
    d_max = n if d_max is None else d_max
    if not 0 <= d_max <= n:
        raise ValidationError(f"d_max must lie in [0, {n}]")
    sums, ok = _shift_sums(weights, d_max, soft, budget)
    d = np.arange(n + 1)
    alpha = (d == n).astype(np.float64)
    if soft:
        psi = 2.0 ** (alpha - d) * sums
    else:
        psi = 2.0 ** (alpha - d - 1) * sums
    psi[0] = 1.0
    return HdsVector(psi, "th2" if soft else "th3", computed=ok)


def hds_soft(
    cfg: CodeConfig, d_max: int | None = None, budget: int = TAU_BUDGET
) -> HdsVector:
    """``2**(a-d) sum max(0, 1 - |tau|)`` with ``a = 1`` only at ``d = n``.

    Entries whose pattern count exceeds ``budget`` are left as NaN and
    flagged in ``computed``.  Tailed codes use their tailed weights.
    """
    return _approx(cfg.weights, d_max, True, budget)


def hds_hard(
    cfg: CodeConfig, d_max: int | None = None, budget: int = TAU_BUDGET
) -> HdsVector:
    """``2**(a-d-1) * #{|tau| < 1}`` with ``a = 1`` only at ``d = n``."""
    return _approx(cfg.weights, d_max, False, budget)


def hds_soft_rate(
    r: float, n: int, d_max: int | None = None, budget: int = TAU_BUDGET
) -> HdsVector:
    """:func:`hds_soft` for an untailed code at an arbitrary real rate."""
    return _approx(rate_weights(r, n), d_max, True, budget)


def hds_hard_rate(
    r: float, n: int, d_max: int | None = None, budget: int = TAU_BUDGET
) -> HdsVector:
    """:func:`hds_hard` for an untailed code at an arbitrary real rate."""
    return _approx(rate_weights(r, n), d_max, False, budget)


def spectrum_midpoint(cfg: CodeConfig, bins: int = 1 << 16) -> float:
    """``f(1/2)``: closed form at rate 1/2, else mean of the 3 central bins."""
    if cfg.t == 0 and cfg.r_exact == Fraction(1, 2):
        return float(asymptotic_ccs_half_rate(0.5))
    f0 = compute_ccs(cfg, bins, Scheme.FINE)[0]
    mid = bins // 2
    return float(f0.bins[mid - 2 : mid + 1].mean()) if bins >= 4 else float(f0.bins.mean())


def hds_fast(cfg: CodeConfig, bins: int = 1 << 16) -> HdsVector:
    """``C(n, d) 2**(a - nR - 1) f(1/2)`` with ``a = 1`` only at ``d = n``."""
    fmid = spectrum_midpoint(cfg, bins)
    d = np.arange(cfg.n + 1)
    alpha = (d == cfg.n).astype(np.float64)
    binom = np.array([math.comb(cfg.n, k) for k in d], dtype=np.float64)
    return HdsVector(binom * 2.0 ** (alpha - cfg.nR - 1) * fmid, "th4")


def _check_rate(r: float) -> None:
    if not 0 < r <= 1:
        raise ValidationError("rate must lie in (0, 1]")


def psi_bounds(r: float) -> dict[str, int]:
    """Summation limits ``J1``, ``J21`` and ``J22`` of the closed forms."""
    _check_rate(r)
    if r == 1:
        return {"J1": 0, "J21": 0, "J22": 0}
    j1 = -math.floor(math.log2(2.0**r - 1.0) / r)
    j21 = max(0, -math.floor(math.log2(4.0**r - 1.0) / r))
    j22 = -math.floor(2.0 * math.log2(2.0**r - 1.0) / r)
    return {"J1": j1, "J21": j21, "J22": j22}


def psi1_closed(r: float) -> float:
    """Limit of ``psi(1; n)`` as ``n`` grows."""
    b = psi_bounds(r)
    c = 1.0 - 2.0**-r
    return float(sum(1.0 - c * 2.0 ** (i * r) for i in range(1, b["J1"] + 1)))


def psi2_components(r: float) -> tuple[float, float]:
    """Limits of the equal-sign and opposite-sign halves of ``psi(2)``."""
    b = psi_bounds(r)
    if r == 1:
        return 0.0, 0.0
    c = 1.0 - 2.0**-r
    lg = math.log2(2.0**r - 1.0)
    same = 0.0
    for i in range(1, b["J21"] + 1):
        k1 = math.ceil((math.log2(2.0 ** (-i * r) - 1.0 + 2.0**-r) - lg) / r)
        for k in range(1, k1 + 1):
            same += 1.0 - c * 2.0 ** (i * r) * (2.0 ** (k * r) + 1.0)
    opposite = 0.0
    for i in range(1, b["J22"] + 1):
        k2 = math.ceil((math.log2(2.0 ** (-i * r) + 1.0 - 2.0**-r) - lg) / r)
        for k in range(1, k2 + 1):
            opposite += 1.0 - c * 2.0 ** (i * r) * (2.0 ** (k * r) - 1.0)
    return same, opposite


def psi2_closed(r: float) -> float:
    """Limit of ``psi(2; n)`` as ``n`` grows."""
    same, opposite = psi2_components(r)
    return (same + opposite) / 2.0


class Convergence(enum.Enum):
    CONVERGENT = "convergent"
    DIVERGENT = "divergent"
    UNKNOWN_UP_TO_BOUND = "unknown_up_to_bound"


@dataclass
class DivergenceReport:
    """Pairs ``(i, j)`` with ``2**(i r) (2**(j r) - 1) = 1`` found up to ``bound``."""

    r: float
    bound: int
    pairs: list[tuple[int, int]] = field(default_factory=list)
    status: Convergence = Convergence.UNKNOWN_UP_TO_BOUND

    def to_dict(self) -> dict:
        return {
            "r": self.r,
            "bound": self.bound,
            "pairs": [list(p) for p in self.pairs],
            "status": self.status.value,
        }


def psi3_divergence(r: float, bound: int = 64, tol: float = 1e-12) -> DivergenceReport:
    """Search for the coincidences that make ``psi(3)`` grow without limit.

    If even the smallest product ``2**r (2**r - 1)`` exceeds 1 no pair can
    exist and the report is ``CONVERGENT``.
    """
    _check_rate(r)
    if bound < 2:
        raise ValidationError("bound must be at least 2")
    pairs = []
    for s in range(2, bound + 1):
        for i in range(1, s):
            j = s - i
            if abs(2.0 ** (i * r) * (2.0 ** (j * r) - 1.0) - 1.0) < tol:
                pairs.append((i, j))
    if pairs:
        status = Convergence.DIVERGENT
    elif 2.0**r * (2.0**r - 1.0) > 1.0 + tol:
        status = Convergence.CONVERGENT
    else:
        status = Convergence.UNKNOWN_UP_TO_BOUND
    return DivergenceReport(r, bound, pairs, status)


class DivergentCase(enum.Enum):
    GOLDEN_RATIO = "golden"
    CUBIC = "cubic"


def psi3_divergent_closed(case: DivergentCase | str, n: int) -> float:
    """Linear growth of ``psi(3; n)`` at the two known divergent rates."""
    case = DivergentCase(case)
    if case is DivergentCase.GOLDEN_RATIO:
        if n < 5:
            raise ValidationError("golden-ratio form needs n >= 5")
        return (n - 1) / 4.0
    if n < 14:
        raise ValidationError("cubic form needs n >= 14")
    x = CUBIC_ROOT
    return (-12.0 * x * x - 17.0 * x + 79.0) / 4.0 + n / 2.0


def shift_histogram(cfg: CodeConfig, d: int, budget: int = TAU_BUDGET) -> tuple[np.ndarray, np.ndarray]:
    """Counts ``c(x; d)`` of ``sgn(tau) * ceil(|tau|)`` over all weight-``d`` patterns.

    Returns ``(x, counts)`` for ``x`` in ``(-2**nR, 2**nR)``.
    """
    if not 0 <= d <= cfg.n:
        raise ValidationError(f"d must lie in [0, {cfg.n}]")
    if tau_count(cfg.n, d) > budget:
        raise ComplexityGuardError(
            f"{tau_count(cfg.n, d)} shift evaluations exceed the budget {budget}"
        )
    top = 1 << cfg.nR
    counts = np.zeros(2 * top - 1, dtype=np.int64)
    for vals in iter_shift_values(cfg.weights, d):
        mag = snap_ceil(np.abs(vals))
        t = np.sign(vals).astype(np.int64) * np.asarray(mag)
        counts += np.bincount(t + top - 1, minlength=counts.size)
    return np.arange(-(top - 1), top), counts


def shift_density(cfg: CodeConfig, d: int, budget: int = TAU_BUDGET) -> tuple[np.ndarray, np.ndarray]:
    """Density of the normalized shift ``w = tau / 2**nR`` from :func:`shift_histogram`."""
    x, c = shift_histogram(cfg, d, budget)
    scale = float(1 << cfg.nR)
    return x / scale, c * scale / float(tau_count(cfg.n, d))

