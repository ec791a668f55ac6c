"""Finite-precision binary arithmetic coding with a sliding window.

Encodes every 3-bit block at p(0)=1/3 with an 8-bit window, shows the two
ways of ending a stream, and stores one stream in an OACB container.
"""

import itertools
import tempfile
from fractions import Fraction
from pathlib import Path

from oac.arithmetic_core import (
    Bitstream,
    Mode,
    arithmetic_decode,
    arithmetic_encode,
    raw_length,
    read_bitstream,
    write_bitstream,
)

p = Fraction(1, 3)

print("block  prefix   half-tail  ideal length")
for bits in itertools.product((0, 1), repeat=3):
    block = "".join(map(str, bits))
    pre = arithmetic_encode(block, p, 8, Mode.PREFIX).to01()
    half = arithmetic_encode(block, p, 8, Mode.HALFTAIL).to01()
    print(f"{block}    {pre:<8} {half or '(empty)':<10} {raw_length(block, p)}")

# Prefix streams can be followed by anything; half-tail streams are shorter
# but need the decoder to know where the stream ends.
block = [1, 0, 1, 1, 0, 0, 1, 0, 1, 1, 1, 0]
stream = arithmetic_encode(block, p, 16, Mode.PREFIX)
noisy_tail = Bitstream(list(stream.bits) + [1, 0, 1, 1, 0, 1], Mode.PREFIX)
assert arithmetic_decode(noisy_tail, p, len(block), 16) == block
print(f"\n{len(block)} symbols -> {len(stream.bits)} bits; decodes despite trailing garbage")

with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "block.oacb"
    path.write_bytes(write_bitstream(stream, 16))
    back, width = read_bitstream(path.read_bytes())
    print(f"OACB file: {path.stat().st_size} bytes, width {width}, mode {back.mode.name.lower()}")
    assert arithmetic_decode(back, p, len(block), width) == block
