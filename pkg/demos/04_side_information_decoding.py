"""Decoding a coset index with correlated side information.

The source x is compressed to its coset index m.  The decoder sees m and a
noisy copy y of x (each bit flipped with probability eps) and searches the
coset tree breadth-first, keeping the M best paths.
"""

from fractions import Fraction

from oac.decoder import DecoderConfig, decode_m_algorithm
from oac.overlapped_codec import CodeConfig
from oac.sim import ExperimentConfig, Regime, mcnemar, run_fer, theory_fer, trial_errors

cfg = CodeConfig(4, Fraction(1, 2))
res = decode_m_algorithm(2, "0100", cfg, DecoderConfig(16, 0.1))
print(f"m=2, y=0100 -> {res.to01()} ({res.flips} flip)")

# Hiding only the last one or two symbols: Monte-Carlo against the limit formulas
print("\nunknown  eps   simulated  theory")
for k in (1, 2):
    exp = ExperimentConfig(CodeConfig(256, Fraction(1, 2)), (0.02, 0.08), 50_000, 3, DecoderConfig(1, 0.02), Regime(k))
    for p in run_fer(exp).points:
        print(f"   {k}     {p.eps:.2f}  {p.fer:.5f}    {theory_fer(k, 0.5, p.eps):.5f}")

# Tails: the last t symbols are sent at rate 1, which separates near mates
print("\ntail  FER (n=64, M=16, eps=0.05, 4000 paired trials)")
for t in (0, 4, 8, 32):
    exp = ExperimentConfig(CodeConfig(64, Fraction(1, 2), t), (0.05,), 4000, 5, DecoderConfig(16, 0.05))
    print(f"{t:4d}  {run_fer(exp).points[0].fer:.4f}")

# The spectrum metric helps narrow beams
base = dict(cfg=CodeConfig(128, Fraction(1, 2)), eps_list=(0.03,), trials=5000, seed=8)
plain = trial_errors(ExperimentConfig(dec=DecoderConfig(4, 0.03), **base))[0][0]
aided = trial_errors(ExperimentConfig(dec=DecoderConfig(4, 0.03, use_ccs=True), **base))[0][0]
only_plain, only_aided, pval = mcnemar(plain, aided)
print(f"\nM=4, n=128: FER {plain.mean():.4f} without spectrum, {aided.mean():.4f} with")
print(f"paired discordance {only_plain} vs {only_aided}, McNemar p = {pval:.1e}")
