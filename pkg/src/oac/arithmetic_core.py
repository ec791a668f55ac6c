"""Bit-exact finite-precision binary arithmetic coder.

The encoder keeps a ``w``-bit window ``[lam, eta]`` plus a count of pending
underflow bits.  All interval arithmetic is done on integers, and the bias
probability is held as an exact :class:`fractions.Fraction`, so the output
is reproducible bit for bit.

Two termination modes are supported:

* ``PREFIX`` streams decode correctly whatever bits are appended to them.
* ``HALFTAIL`` streams are shorter and decode correctly once ``1000...`` is
  appended.
"""

from __future__ import annotations

import enum
import struct
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .errors import DecodeFailure, PrecisionExhaustedError, ValidationError

__all__ = [
    "Mode",
    "SlidingWindow",
    "Bitstream",
    "as_probability",
    "shrink_window",
    "renormalize_window",
    "remove_underflow_bits",
    "push_underflow_bits",
    "encode_one_symbol",
    "end_bitstream",
    "arithmetic_encode",
    "arithmetic_decode",
    "raw_length",
    "write_bitstream",
    "read_bitstream",
    "DEFAULT_WIDTH",
]

DEFAULT_WIDTH = 16
_MAGIC = b"OACB"
_HEADER = struct.Struct(">4sBBI")


class Mode(enum.IntEnum):
    """Termination mode of a bitstream."""

    RAW = 0
    PREFIX = 1
    HALFTAIL = 2


def as_probability(p: Fraction | str | float | int) -> Fraction:
    """Convert ``p`` to an exact rational in the open interval (0, 1).

    Floats go through their shortest decimal repr, so ``0.2`` becomes 1/5.
    """
    if isinstance(p, Fraction):
        q = p
    elif isinstance(p, float):
        q = Fraction(repr(p))
    else:
        try:
            q = Fraction(p)
        except (ValueError, ZeroDivisionError) as exc:
            raise ValidationError(f"cannot parse probability {p!r}") from exc
    if not 0 < q < 1:
        raise ValidationError(f"probability must lie in (0, 1), got {q}")
    return q


@dataclass
class SlidingWindow:
    """Encoder window ``[lam, eta]`` of ``width`` bits and pending underflow count."""

    width: int = DEFAULT_WIDTH
    lam: int = 0
    eta: int = -1
    upsilon: int = 0

    def __post_init__(self) -> None:
        if self.width < 4:
            raise ValidationError("window width must be at least 4 bits")
        if self.eta < 0:
            self.eta = (1 << self.width) - 1

    @property
    def mask(self) -> int:
        return (1 << self.width) - 1

    @property
    def msb(self) -> int:
        return 1 << (self.width - 1)

    @property
    def msb2(self) -> int:
        return 1 << (self.width - 2)

    @property
    def span(self) -> int:
        return self.eta - self.lam + 1

    def _shift(self) -> None:
        self.lam = (self.lam << 1) & self.mask
        self.eta = ((self.eta << 1) & self.mask) | 1


@dataclass
class Bitstream:
    """Bits in MSB-first order together with their termination mode."""

    bits: list[int] = field(default_factory=list)
    mode: Mode = Mode.PREFIX

    @property
    def declared_length(self) -> int:
        return len(self.bits)

    def to01(self) -> str:
        return "".join(str(b) for b in self.bits)

    @classmethod
    def from01(cls, text: str, mode: Mode = Mode.PREFIX) -> "Bitstream":
        return cls([int(c) for c in text], mode)


def _split_point(win: SlidingWindow, p: Fraction) -> int:
    """Offset ``round((1 - p) * span)`` with ties rounded up, in integers."""
    num = (p.denominator - p.numerator) * win.span
    den = p.denominator
    return (2 * num + den) // (2 * den)


def shrink_window(x: int, p: Fraction, win: SlidingWindow) -> SlidingWindow:
    """Narrow the window to the sub-interval of symbol ``x``."""
    if win.span < 4:
        raise PrecisionExhaustedError(
            f"window span {win.span} too small; increase the window width"
        )
    cut = _split_point(win, p)
    if x:
        win.lam = win.lam + cut
    else:
        win.eta = win.lam + cut - 1
    if win.lam > win.eta:
        raise PrecisionExhaustedError("symbol interval rounded to zero width")
    return win


def renormalize_window(win: SlidingWindow, out: list[int]) -> SlidingWindow:
    """Emit matching leading bits of ``lam`` and ``eta``."""
    while (win.lam ^ win.eta) & win.msb == 0:
        out.append(1 if win.lam & win.msb else 0)
        win._shift()
    return win


def remove_underflow_bits(win: SlidingWindow) -> SlidingWindow:
    """Drop second-MSBs while the window straddles the midpoint narrowly."""
    msb, msb2 = win.msb, win.msb2
    low_mask = msb - 1
    while (win.lam & msb2) and not (win.eta & msb2):
        win.lam = (win.lam & msb) | ((win.lam << 1) & low_mask)
        win.eta = (win.eta & msb) | ((win.eta << 1) & low_mask) | 1
        win.upsilon += 1
    return win


def push_underflow_bits(win: SlidingWindow, out: list[int]) -> SlidingWindow:
    """Emit the settled MSB followed by the pending underflow bits."""
    bit = 1 if win.lam & win.msb else 0
    out.append(bit)
    out.extend([1 - bit] * win.upsilon)
    win.upsilon = 0
    win._shift()
    return win


def encode_one_symbol(
    x: int, p: Fraction, win: SlidingWindow, out: list[int]
) -> SlidingWindow:
    """Encode one bit and restore the window invariants.

    Underflow removal also runs when no bit settles, so the window never
    drops below ``2**(w-2) + 2`` between symbols.
    """
    shrink_window(x, p, win)
    if (win.lam ^ win.eta) & win.msb == 0:
        push_underflow_bits(win, out)
        renormalize_window(win, out)
    remove_underflow_bits(win)
    return win


def end_bitstream(win: SlidingWindow, out: list[int]) -> list[int]:
    """Terminate so that any continuation decodes inside the final window."""
    lam_b = 1 if win.lam & win.msb2 else 0
    eta_b = 1 if win.eta & win.msb2 else 0
    if lam_b == 1 and eta_b == 1:
        out.extend([1] + [0] * win.upsilon + [0])
    else:
        # both zero, or the straddling case where either ending is valid
        out.extend([0] + [1] * win.upsilon + [1])
    win.upsilon = 0
    return out


def _as_bits(block: Iterable[int] | str) -> list[int]:
    bits = [int(c) for c in block]
    if any(b not in (0, 1) for b in bits):
        raise ValidationError("blocks must contain only 0 and 1")
    return bits


def arithmetic_encode(
    block: Sequence[int] | str,
    p: Fraction | str | float,
    width: int = DEFAULT_WIDTH,
    mode: Mode = Mode.PREFIX,
) -> Bitstream:
    """Encode a binary block into a prefix or half-tail bitstream."""
    bits = _as_bits(block)
    if not bits:
        raise ValidationError("block must contain at least one symbol")
    if mode not in (Mode.PREFIX, Mode.HALFTAIL):
        raise ValidationError("encoding mode must be PREFIX or HALFTAIL")
    prob = as_probability(p)
    win = SlidingWindow(width)
    out: list[int] = []
    for x in bits:
        encode_one_symbol(x, prob, win, out)
    if mode is Mode.PREFIX:
        end_bitstream(win, out)
    return Bitstream(out, mode)


def arithmetic_decode(
    stream: Bitstream,
    p: Fraction | str | float,
    n: int,
    width: int = DEFAULT_WIDTH,
) -> list[int]:
    """Recover ``n`` symbols by replaying the encoder's integer arithmetic."""
    if n < 1:
        raise ValidationError("n must be positive")
    if width < 4:
        raise ValidationError("window width must be at least 4 bits")
    prob = as_probability(p)
    # half-tail continuation is a single 1 followed by zeros
    src = list(stream.bits)
    if stream.mode is Mode.HALFTAIL:
        src.append(1)
    nsrc = len(src)
    pos = 0
    keep = 2 * (prob.denominator - prob.numerator)
    den = prob.denominator
    den2 = 2 * den
    msb = 1 << (width - 1)
    msb2 = 1 << (width - 2)
    mask = (1 << width) - 1
    low_mask = msb - 1
    lam, eta = 0, mask
    value = 0
    for _ in range(width):
        value = (value << 1) | (src[pos] if pos < nsrc else 0)
        pos += 1
    out: list[int] = []
    for _ in range(n):
        if not lam <= value <= eta:
            raise DecodeFailure("code value left the decoding window")
        span = eta - lam + 1
        if span < 4:
            raise PrecisionExhaustedError(
                f"window span {span} too small; increase the window width"
            )
        cut = (keep * span + den) // den2
        if value >= lam + cut:
            out.append(1)
            lam += cut
        else:
            out.append(0)
            eta = lam + cut - 1
        while (lam ^ eta) & msb == 0:
            lam = (lam << 1) & mask
            eta = ((eta << 1) & mask) | 1
            value = ((value << 1) & mask) | (src[pos] if pos < nsrc else 0)
            pos += 1
        while (lam & msb2) and not (eta & msb2):
            lam = (lam & msb) | ((lam << 1) & low_mask)
            eta = (eta & msb) | ((eta << 1) & low_mask) | 1
            value = (value & msb) | ((value << 1) & low_mask) | (
                src[pos] if pos < nsrc else 0
            )
            pos += 1
    return out


def raw_length(block: Sequence[int] | str, p: Fraction | str | float) -> int:
    """Length ``-floor(log2(h - l))`` of the infinite-precision interval."""
    prob = as_probability(p)
    width = Fraction(1)
    for x in _as_bits(block):
        width *= prob if x else 1 - prob
    k = 0
    while Fraction(1, 1 << k) > width:
        k += 1
    return k


def write_bitstream(stream: Bitstream, width: int) -> bytes:
    """Serialize to the OACB container (10-byte header, MSB-first payload)."""
    nbits = len(stream.bits)
    payload = bytearray((nbits + 7) // 8)
    for i, b in enumerate(stream.bits):
        if b:
            payload[i >> 3] |= 0x80 >> (i & 7)
    return _HEADER.pack(_MAGIC, int(stream.mode), width, nbits) + bytes(payload)


def read_bitstream(data: bytes) -> tuple[Bitstream, int]:
    """Parse an OACB container; returns the stream and its window width."""
    if len(data) < _HEADER.size:
        raise ValidationError("truncated OACB header")
    magic, mode, width, nbits = _HEADER.unpack_from(data)
    if magic != _MAGIC:
        raise ValidationError("not an OACB file")
    try:
        mode_enum = Mode(mode)
    except ValueError as exc:
        raise ValidationError(f"unknown mode byte {mode}") from exc
    payload = data[_HEADER.size :]
    if len(payload) * 8 < nbits:
        raise ValidationError("OACB payload shorter than declared bit length")
    bits = [(payload[i >> 3] >> (7 - (i & 7))) & 1 for i in range(nbits)]
    return Bitstream(bits, mode_enum), width
