"""Infinite-precision model of the overlapped binary arithmetic code.

A block ``x`` of ``n`` uniform bits is mapped to the real number ``s(x)`` in
``[0, 2**(nR) - 1]``.  Its coset index is ``ceil(s(x))``.  Body symbols
(the first ``n - t``) are coded at rate ``r = (nR - t) / (n - t)``, so their
intervals overlap.  Tail symbols (the last ``t``) are coded at rate 1.

Position weights decrease along the block.  The last body symbol carries
``2**t * (2**r - 1)`` and the last tail symbol carries 1.

Two numeric paths are provided:

* a binary64 path (:func:`s_value`, :func:`coset_index`, enumeration), guarded
  by ``nR <= 48`` so that integer boundaries stay resolvable;
* an exact fixed-point path (:func:`coset_index_exact`,
  :func:`fractional_weights_u64`) built from high-precision weights, used by
  the simulator for long blocks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Sequence

import mpmath
import numpy as np

from .errors import ComplexityGuardError, ValidationError

__all__ = [
    "CodeConfig",
    "parse_rate",
    "s_value",
    "s_values",
    "coset_index",
    "coset_indices",
    "all_s_values",
    "enumerate_coset",
    "coset_size_histogram",
    "coset_index_exact",
    "fractional_weights_u64",
    "snap_ceil",
    "FLOAT_NR_LIMIT",
    "ENUMERATION_N_LIMIT",
]

FLOAT_NR_LIMIT = 48
ENUMERATION_N_LIMIT = 24
SNAP_REL = 2.0**-40
_EXACT_FRAC_BITS = 96


def parse_rate(text: str | Fraction | int) -> Fraction:
    """Parse a rate given as ``"p/q"`` (or an integer) into a Fraction."""
    if isinstance(text, Fraction):
        return text
    if isinstance(text, int):
        return Fraction(text)
    if isinstance(text, float):
        raise ValidationError("rates must be rational, e.g. '1/2'")
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise ValidationError(f"cannot parse rate {text!r}; use p/q") from exc


@dataclass(frozen=True)
class CodeConfig:
    """Block length ``n``, average rate ``R`` and tail length ``t``."""

    n: int
    R: Fraction
    t: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "R", parse_rate(self.R))
        if self.n < 1:
            raise ValidationError("block length n must be positive")
        if not 0 < self.R <= 1:
            raise ValidationError(f"rate R must lie in (0, 1], got {self.R}")
        nR = self.n * self.R
        if nR.denominator != 1:
            raise ValidationError(
                f"n*R must be an integer (n={self.n}, R={self.R} gives {nR})"
            )
        if not 0 <= self.t <= nR:
            raise ValidationError(f"tail length t must lie in [0, {nR}]")
        if self.t >= self.n:
            raise ValidationError("tail length must be shorter than the block")

    @property
    def nR(self) -> int:
        return int(self.n * self.R)

    @property
    def body(self) -> int:
        return self.n - self.t

    @property
    def r_exact(self) -> Fraction:
        """Body rate as an exact rational."""
        return Fraction(self.nR - self.t, self.n - self.t)

    @property
    def r(self) -> float:
        return float(self.r_exact)

    @property
    def num_cosets(self) -> int:
        return 1 << self.nR

    def level_rates(self) -> list[Fraction]:
        """Rate used by each of the ``n`` symbols, in block order."""
        return [self.r_exact] * self.body + [Fraction(1)] * self.t

    def weight_exponents(self) -> list[tuple[Fraction, Fraction]]:
        """Exact ``(hi, lo)`` exponents with weight ``2**hi - 2**lo`` per position."""
        r = self.r_exact
        out = []
        for i in range(1, self.body + 1):
            lo = self.t + (self.body - i) * r
            out.append((lo + r, lo))
        for q in range(1, self.t + 1):
            # 2**(t-q) written as 2**(t-q+1) - 2**(t-q)
            out.append((Fraction(self.t - q + 1), Fraction(self.t - q)))
        return out

    def weights_mp(self, prec: int) -> list[mpmath.mpf]:
        """Position weights to ``prec`` bits."""
        with mpmath.workprec(prec):
            return [_pow2(hi) - _pow2(lo) for hi, lo in self.weight_exponents()]

    @cached_property
    def weights(self) -> np.ndarray:
        """Position weights rounded once to binary64."""
        prec = self.nR + 80
        with mpmath.workprec(prec):
            return np.array([float(w) for w in self.weights_mp(prec)])


def _pow2(e: Fraction) -> mpmath.mpf:
    """``2**e`` at the current mpmath precision."""
    return mpmath.power(2, mpmath.mpf(e.numerator) / e.denominator)


def _check_float_path(cfg: CodeConfig) -> None:
    if cfg.nR > FLOAT_NR_LIMIT:
        raise ValidationError(
            f"nR={cfg.nR} exceeds the binary64 precision guard ({FLOAT_NR_LIMIT}); "
            "use the exact routines"
        )


def _as_block(x: Sequence[int] | str | np.ndarray, n: int) -> np.ndarray:
    arr = np.array([int(c) for c in x] if isinstance(x, str) else x, dtype=np.int64)
    if arr.shape != (n,):
        raise ValidationError(f"block must have length {n}")
    if np.any((arr != 0) & (arr != 1)):
        raise ValidationError("blocks must contain only 0 and 1")
    return arr


def snap_ceil(s: np.ndarray | float) -> np.ndarray | int:
    """``ceil`` that first snaps values within ``2**-40`` (relative) of an integer."""
    arr = np.asarray(s, dtype=np.float64)
    near = np.rint(arr)
    tol = SNAP_REL * np.maximum(1.0, np.abs(arr))
    snapped = np.where(np.abs(arr - near) < tol, near, arr)
    out = np.ceil(snapped).astype(np.int64)
    return int(out) if out.ndim == 0 else out


def s_value(x: Sequence[int] | str | np.ndarray, cfg: CodeConfig) -> float:
    """Normalized interval start ``s(x)`` in binary64."""
    _check_float_path(cfg)
    arr = _as_block(x, cfg.n)
    return math.fsum(cfg.weights[arr == 1])


def s_values(blocks: np.ndarray, cfg: CodeConfig) -> np.ndarray:
    """Vectorized ``s`` over the last axis of a 0/1 array."""
    _check_float_path(cfg)
    blocks = np.asarray(blocks)
    if blocks.shape[-1] != cfg.n:
        raise ValidationError(f"blocks must have trailing length {cfg.n}")
    return blocks.astype(np.float64) @ cfg.weights


def coset_index(x: Sequence[int] | str | np.ndarray, cfg: CodeConfig) -> int:
    """Coset index ``ceil(s(x))`` with integer snapping."""
    return int(snap_ceil(s_value(x, cfg)))


def coset_indices(blocks: np.ndarray, cfg: CodeConfig) -> np.ndarray:
    """Vectorized :func:`coset_index`."""
    return np.asarray(snap_ceil(s_values(blocks, cfg)))


def _check_enumeration(cfg: CodeConfig) -> None:
    _check_float_path(cfg)
    if cfg.n > ENUMERATION_N_LIMIT:
        raise ComplexityGuardError(
            f"exhaustive enumeration needs n <= {ENUMERATION_N_LIMIT}, got {cfg.n}"
        )


def all_s_values(cfg: CodeConfig) -> np.ndarray:
    """``s`` for all ``2**n`` blocks; index bit ``n - i`` holds ``x_i``."""
    _check_enumeration(cfg)
    vals = np.zeros(1)
    for w in cfg.weights[::-1]:
        vals = np.concatenate([vals, vals + w])
    return vals


def block_bits(index: int | np.ndarray, n: int) -> np.ndarray:
    """Bits of a block index, first symbol as most significant bit."""
    idx = np.asarray(index, dtype=np.int64)
    shifts = np.arange(n - 1, -1, -1, dtype=np.int64)
    return ((idx[..., None] >> shifts) & 1).astype(np.int8)


def enumerate_coset(m: int, cfg: CodeConfig) -> list[str]:
    """All blocks of coset ``m`` in lexicographic order."""
    if not 0 <= m < cfg.num_cosets:
        raise ValidationError(f"coset index must lie in [0, {cfg.num_cosets})")
    idx = np.flatnonzero(snap_ceil(all_s_values(cfg)) == m)
    return [format(int(i), f"0{cfg.n}b") for i in idx]


def coset_size_histogram(cfg: CodeConfig) -> np.ndarray:
    """``|C_m|`` for ``m = 0 .. 2**nR - 1``."""
    ms = snap_ceil(all_s_values(cfg))
    return np.bincount(ms, minlength=cfg.num_cosets)


def fixed_weights(cfg: CodeConfig, frac_bits: int) -> list[int]:
    """Weights scaled by ``2**frac_bits`` and rounded to Python integers."""
    prec = cfg.nR + frac_bits + 64
    with mpmath.workprec(prec):
        return [int(mpmath.nint(mpmath.ldexp(w, frac_bits))) for w in cfg.weights_mp(prec)]


def coset_index_exact(x: Sequence[int] | str | np.ndarray, cfg: CodeConfig) -> int:
    """Coset index from 96-bit fixed-point weights; valid for any ``nR``."""
    arr = _as_block(x, cfg.n)
    fw = _fixed_weight_cache(cfg)
    total = sum(w for w, b in zip(fw, arr) if b)
    one = 1 << _EXACT_FRAC_BITS
    k, rem = divmod(total, one)
    # within n+1 units of the last place counts as an exact integer
    slack = cfg.n + 1
    if rem <= slack:
        return int(k)
    return int(k + 1)


_FIXED_CACHE: dict[CodeConfig, list[int]] = {}


def _fixed_weight_cache(cfg: CodeConfig) -> list[int]:
    if cfg not in _FIXED_CACHE:
        _FIXED_CACHE[cfg] = fixed_weights(cfg, _EXACT_FRAC_BITS)
    return _FIXED_CACHE[cfg]


def fractional_weights_u64(cfg: CodeConfig) -> np.ndarray:
    """``frac(weight) * 2**64`` as wrapping ``uint64`` (sums reduce mod 1)."""
    if cfg not in _U64_CACHE:
        fw = fixed_weights(cfg, 64)
        _U64_CACHE[cfg] = np.array([w % (1 << 64) for w in fw], dtype=np.uint64)
    return _U64_CACHE[cfg].copy()


_U64_CACHE: dict[CodeConfig, np.ndarray] = {}
