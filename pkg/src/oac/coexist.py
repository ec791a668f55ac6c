"""Shift function, coexisting intervals and ending-symbol error rates.

Flipping the bits of ``x`` at positions ``j`` moves ``s(x)`` by the shift
``tau(j, x_j) = sum (1 - 2 x_i) * weight_i``.  The flipped block shares the
coset of ``x`` exactly when ``s(x)`` falls in an interval of length
``max(0, 1 - |tau|)`` at the top or bottom of ``(m - 1, m]``.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .errors import ValidationError
from .overlapped_codec import (
    CodeConfig,
    SNAP_REL,
    _as_block,
    coset_index,
    s_value,
)

__all__ = [
    "shift_tau",
    "coexist_check",
    "coexist_interval",
    "coexist_by_interval",
    "fer_one_unknown",
    "fer_two_unknown",
    "error_given_equal_ending",
    "error_given_unequal_ending",
]


def _check_positions(j: Sequence[int], b: Sequence[int], n: int) -> tuple[np.ndarray, np.ndarray]:
    jj = np.asarray(j, dtype=np.int64)
    bb = np.asarray(b, dtype=np.int64)
    if jj.shape != bb.shape or jj.ndim != 1:
        raise ValidationError("positions and bits must be equal-length sequences")
    if jj.size and (np.any(np.diff(jj) <= 0) or jj[0] < 1 or jj[-1] > n):
        raise ValidationError(f"positions must be strictly increasing within [1, {n}]")
    if np.any((bb != 0) & (bb != 1)):
        raise ValidationError("bits must be 0 or 1")
    return jj, bb


def shift_tau(j: Sequence[int], b: Sequence[int], cfg: CodeConfig) -> float:
    """Change of ``s`` when the bits ``b`` at 1-based positions ``j`` are flipped."""
    jj, bb = _check_positions(j, b, cfg.n)
    return float(np.sum((1 - 2 * bb) * cfg.weights[jj - 1]))


def coexist_check(x: Sequence[int] | str, z: Sequence[int] | str, cfg: CodeConfig) -> bool:
    """True when ``x`` and ``x xor z`` have the same coset index."""
    xa = _as_block(x, cfg.n)
    za = _as_block(z, cfg.n)
    if not za.any():
        raise ValidationError("flip pattern must be nonzero")
    return coset_index(xa, cfg) == coset_index(xa ^ za, cfg)


def coexist_interval(m: int, tau: float) -> tuple[float, float] | None:
    """Sub-interval ``(lo, hi]`` of ``(m - 1, m]`` where both blocks share coset ``m``."""
    if abs(tau) >= 1.0:
        return None
    if tau >= 0.0:
        return (m - 1.0, m - tau)
    return (m - 1.0 - tau, float(m))


def coexist_by_interval(x: Sequence[int] | str, z: Sequence[int] | str, cfg: CodeConfig) -> bool:
    """Coexistence decided through :func:`coexist_interval` instead of two indices."""
    xa = _as_block(x, cfg.n)
    za = _as_block(z, cfg.n)
    j = np.flatnonzero(za) + 1
    tau = shift_tau(j, xa[j - 1], cfg)
    s = s_value(xa, cfg)
    m = coset_index(xa, cfg)
    iv = coexist_interval(m, tau)
    if iv is None:
        return False
    lo, hi = iv
    tol = SNAP_REL * max(1.0, abs(s))
    return lo + tol < s <= hi + tol


def _check_rate_eps(r: float, eps: float) -> None:
    if not 0 < r <= 1:
        raise ValidationError("rate must lie in (0, 1]")
    if not 0 <= eps < 0.5:
        raise ValidationError("crossover probability must lie in [0, 1/2)")


def fer_one_unknown(r: float, eps: float) -> float:
    """Limit error rate when all but the last symbol are known: ``(2 - 2**r) eps``."""
    _check_rate_eps(r, eps)
    return (2.0 - 2.0**r) * eps


def _shifts(r: float) -> tuple[float, float]:
    # weights of the last and second-to-last positions
    return 2.0**r - 1.0, 2.0 ** (2 * r) - 2.0**r


def error_given_equal_ending(r: float, eps: float) -> float:
    """Error rate when the two unknown symbols are equal (``00`` or ``11``)."""
    _check_rate_eps(r, eps)
    t1, t2 = _shifts(r)
    return eps * (1.0 - t1) + eps * (1.0 - eps) * max(0.0, 1.0 - t2)


def error_given_unequal_ending(r: float, eps: float) -> float:
    """Error rate when the two unknown symbols differ (``01`` or ``10``)."""
    _check_rate_eps(r, eps)
    _, t2 = _shifts(r)
    return eps * (2.0 - t2) - eps**2 * max(0.0, 1.0 - t2)


def fer_two_unknown(r: float, eps: float) -> float:
    """Limit error rate with the last two symbols unknown.

    Equals ``(4 - 2**(2r) + a) eps / 2 - a eps**2`` with
    ``a = max(0, 1 + 2**r - 2**(2r))``.
    """
    _check_rate_eps(r, eps)
    a = max(0.0, 1.0 + 2.0**r - 2.0 ** (2 * r))
    return (4.0 - 2.0 ** (2 * r) + a) * eps / 2.0 - a * eps**2
