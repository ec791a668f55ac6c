"""Where inside the coset interval does the encoder land?

The projection u of the source onto the current interval has a density that
obeys a two-branch backward recursion.  At rate 1/2 it converges to a
trapezoid; at higher rates it develops isolated zeros.
"""

import math

import mpmath
import numpy as np

from oac.ccs import (
    Scheme,
    asymptotic_ccs,
    asymptotic_ccs_half_rate,
    ccs_backward_step,
    ecc_normalized,
    expansion_factor,
    final_ccs,
    point_value,
    rate_loss,
)

f = final_ccs(1 << 16)
for step in range(1, 65):
    f = ccs_backward_step(f, 0.5, Scheme.FINE)
    if step in (1, 2, 4, 16, 64):
        dev = np.max(np.abs(f.bins - asymptotic_ccs_half_rate(f.centers)))
        print(f"after {step:2d} steps: max deviation from the trapezoid {dev:.4f}")

print(f"\nint f^2 (mean coset size / 2^(n/2)): {ecc_normalized(f):.4f}")
print(f"children per surviving path:          {expansion_factor(f, 0.5):.4f}")
print(f"rate lost to non-uniform cosets:      {rate_loss(f):.4f} bits")

r = 0.8
g = asymptotic_ccs(r, 1 << 14)
with mpmath.workdps(120):
    q = mpmath.mpf(2) ** -r
    zero = q / (q + 1)
print(f"\nr={r}: density near u={float(zero):.5f}")
print(f"  bin average     {g(float(zero)):.4f}")
print(f"  pointwise value {point_value(g, r, zero, depth=160):.2e}")
print(f"  elsewhere       {g(0.3):.4f}")
assert 0.5 < 2**-r <= (math.sqrt(5) - 1) / 2
