"""Overlapped coding turns blocks into cosets; how close do coset mates sit?

At rate 1/2 every symbol interval is wider than half, so the map from blocks
to final intervals is many-to-one.  The coset index is ceil(s(x)).
"""

from fractions import Fraction

import numpy as np

from oac.coexist import coexist_check, shift_tau
from oac.hds import hds_exhaustive, hds_fast, hds_soft
from oac.overlapped_codec import CodeConfig, coset_size_histogram, enumerate_coset, s_value

cfg = CodeConfig(4, Fraction(1, 2))
print("weights:", np.round(cfg.weights, 4))
for m in range(cfg.num_cosets):
    members = enumerate_coset(m, cfg)
    print(f"coset {m}: " + ", ".join(f"{b} (s={s_value(b, cfg):.4f})" for b in members))
print("coset sizes:", coset_size_histogram(cfg).tolist())

# Flipping the last 0 of a block moves s by sqrt(2)-1; the pair shares a
# coset only when s sits low enough in its unit interval.
tau = shift_tau([4], [0], cfg)
print(f"\nshift of the last symbol: {tau:.4f}")
for x in ("0000", "0100", "1000"):
    y = x[:3] + "1"
    print(f"{x} -> {y}: same coset = {coexist_check(x, '0001', cfg)}")

print("\ndistance spectrum psi(d), exact n=4:", hds_exhaustive(cfg).psi.tolist())

big = CodeConfig(20, Fraction(1, 2))
exact = hds_exhaustive(big).psi
soft = hds_soft(big).psi
fast = hds_fast(big).psi
print("\n n=20   d   exact        soft (TH-2)  fast (TH-4)")
for d in (1, 2, 5, 10, 15, 20):
    print(f"      {d:3d}   {exact[d]:<12.5g} {soft[d]:<12.5g} {fast[d]:.5g}")
