import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
import hypothesis.strategies as st

from oac.coexist import (
    coexist_by_interval,
    coexist_check,
    coexist_interval,
    error_given_equal_ending,
    error_given_unequal_ending,
    fer_one_unknown,
    fer_two_unknown,
    shift_tau,
)
from oac.errors import ValidationError
from oac.overlapped_codec import CodeConfig, all_s_values, block_bits, coset_indices

HALF = Fraction(1, 2)
N4 = CodeConfig(4, HALF)
SQ2 = math.sqrt(2.0)


def test_tau_last_position():
    "Flipping a trailing 0 shifts by sqrt2-1"
    assert shift_tau([4], [0], N4) == pytest.approx(SQ2 - 1)


def test_tau_second_to_last():
    "Flipping the penultimate 0 shifts by 2-sqrt2"
    assert shift_tau([3], [0], N4) == pytest.approx(2 - SQ2)


@settings(max_examples=200, deadline=None)
@given(st.data())
def test_tau_antisymmetry(data):
    "Complementing the current bits negates the shift"
    cfg = CodeConfig(12, HALF, data.draw(st.integers(0, 3)))
    j = sorted(data.draw(st.sets(st.integers(1, 12), min_size=1)))
    b = data.draw(st.lists(st.integers(0, 1), min_size=len(j), max_size=len(j)))
    assert shift_tau(j, [1 - v for v in b], cfg) == pytest.approx(-shift_tau(j, b, cfg), abs=1e-12)


@pytest.mark.parametrize("n,R,t", [(4, HALF, 0), (8, HALF, 0), (12, HALF, 0), (12, Fraction(1, 4), 0), (12, HALF, 3)])
def test_shift_lemma_exhaustive(n, R, t):
    "s(x xor z) = s(x) + tau(z, x on the support of z) for every pair"
    cfg = CodeConfig(n, R, t)
    s = all_s_values(cfg)
    idx = np.arange(2**n)
    bits = block_bits(idx, n).astype(float)
    w = cfg.weights
    # tau[x, z] = sum_i z_i (1 - 2 x_i) w_i
    tau = (bits @ w)[None, :] - 2.0 * (bits * w) @ bits.T
    moved = s[idx[:, None] ^ idx[None, :]] - s[:, None]
    assert np.max(np.abs(moved - tau)) < 1e-9 * max(1.0, 2.0**cfg.nR)


@pytest.mark.parametrize("n,R,t", [(12, HALF, 0), (12, Fraction(1, 4), 0), (12, HALF, 3)])
def test_tau_bounded(n, R, t):
    "Every shift stays within 2^(nR)-1 in magnitude, with equality at full flips"
    cfg = CodeConfig(n, R, t)
    vals = np.zeros(1)
    for w in cfg.weights:
        vals = np.add.outer(vals, [-w, 0.0, w]).ravel()
    bound = 2.0**cfg.nR - 1
    assert np.max(np.abs(vals)) == pytest.approx(bound, rel=1e-12)
    assert np.all(np.abs(vals) <= bound * (1 + 1e-12))


def test_coexist_examples():
    "0001 and 0010 share coset 1; 0000 lives alone"
    assert coexist_check("0001", "0011", N4)
    assert not coexist_check("0000", "0001", N4)


def test_coexist_rejects_zero_flip():
    "The all-zero flip pattern is refused"
    with pytest.raises(ValidationError):
        coexist_check("0101", "0000", N4)


def test_interval_logic_matches_oracle_exhaustive():
    "Interval membership agrees with index comparison for all pairs at n=6"
    cfg = CodeConfig(6, HALF)
    blocks = ["".join(b) for b in itertools.product("01", repeat=6)]
    for x in blocks:
        for z in blocks[1:]:
            assert coexist_by_interval(x, z, cfg) == coexist_check(x, z, cfg), (x, z)


@settings(max_examples=300, deadline=None)
@given(
    st.lists(st.integers(0, 1), min_size=16, max_size=16),
    st.lists(st.integers(0, 1), min_size=16, max_size=16).filter(any),
    st.sampled_from([(HALF, 0), (Fraction(1, 4), 0), (HALF, 4), (Fraction(3, 4), 2)]),
)
def test_interval_logic_matches_oracle(x, z, rate_tail):
    "Interval membership agrees with index comparison on random pairs"
    cfg = CodeConfig(16, *rate_tail)
    assert coexist_by_interval(x, z, cfg) == coexist_check(x, z, cfg)


@settings(max_examples=300, deadline=None)
@given(st.lists(st.integers(0, 1), min_size=12, max_size=12), st.lists(st.integers(0, 1), min_size=12, max_size=12).filter(any))
def test_large_shift_never_coexists(x, z):
    "A shift of magnitude at least one separates the pair"
    cfg = CodeConfig(12, HALF)
    j = [i + 1 for i, v in enumerate(z) if v]
    if abs(shift_tau(j, [x[i - 1] for i in j], cfg)) >= 1:
        assert not coexist_check(x, z, cfg)


@pytest.mark.parametrize("tau", [0.0, 0.3, -0.3, 0.999, -0.5])
def test_interval_length(tau):
    "The coexisting interval has length 1-|tau| inside (m-1, m]"
    lo, hi = coexist_interval(5, tau)
    assert 4.0 <= lo <= hi <= 5.0
    assert hi - lo == pytest.approx(1 - abs(tau))


def test_interval_empty_for_large_shift():
    "No interval once |tau| reaches one"
    assert coexist_interval(3, 1.0) is None and coexist_interval(3, -1.7) is None


@pytest.mark.parametrize("R", [HALF, Fraction(1, 4)])
def test_coexistence_probability_monte_carlo(R):
    "Flipping a trailing 0 keeps the coset with probability 1-tau"
    cfg = CodeConfig(24, R)
    rng = np.random.default_rng(11)
    trials = 20000
    x = rng.integers(0, 2, (trials, 24))
    x[:, -1] = 0
    y = x.copy()
    y[:, -1] = 1
    same = float(np.mean(coset_indices(x, cfg) == coset_indices(y, cfg)))
    p = 1 - shift_tau([24], [0], cfg)
    assert abs(same - p) < 3 * math.sqrt(p * (1 - p) / trials)


def test_fer_one_unknown_values():
    "(2-2^r) eps at r=1/2 and r=1/4; vanishes at rate one"
    assert fer_one_unknown(0.5, 0.1) / 0.1 == pytest.approx(0.5858, abs=1e-4)
    assert fer_one_unknown(0.25, 0.1) / 0.1 == pytest.approx(0.8108, abs=1e-4)
    assert fer_one_unknown(1.0, 0.2) == 0.0


@pytest.mark.parametrize("r,lin,quad", [(0.5, 1.2071, 0.4142), (0.25, 1.6804, 0.775)])
def test_fer_two_unknown_values(r, lin, quad):
    "Linear and quadratic coefficients of the two-unknown formula"
    a = fer_two_unknown(r, 0.1)
    b = fer_two_unknown(r, 0.2)
    # solve a = 0.1 L - 0.01 Q, b = 0.2 L - 0.04 Q
    q_coef = (2 * a - b) / 0.02
    l_coef = (a + 0.01 * q_coef) / 0.1
    assert l_coef == pytest.approx(lin, abs=1e-4)
    assert q_coef == pytest.approx(quad, abs=1e-3)


def test_fer_vanishes_without_noise():
    "No crossovers, no errors"
    assert fer_one_unknown(0.5, 0.0) == 0.0 and fer_two_unknown(0.5, 0.0) == 0.0


def test_two_unknown_is_average_of_conditionals():
    "The theorem formula averages the equal- and unequal-ending lemmas"
    rng = np.random.default_rng(5)
    for r, eps in zip(rng.uniform(0.01, 0.99, 50), rng.uniform(0.0, 0.49, 50)):
        avg = (error_given_equal_ending(r, eps) + error_given_unequal_ending(r, eps)) / 2
        assert abs(avg - fer_two_unknown(r, eps)) < 1e-12


def test_two_unknown_exceeds_one_unknown():
    "Hiding one more symbol cannot help"
    for r in np.linspace(0.05, 0.95, 19):
        assert fer_two_unknown(r, 0.05) >= fer_one_unknown(r, 0.05)


@pytest.mark.parametrize("r,eps", [(0.0, 0.1), (1.2, 0.1), (0.5, 0.5), (0.5, -0.1)])
def test_fer_argument_validation(r, eps):
    "Rates outside (0, 1] and crossovers outside [0, 1/2) are refused"
    with pytest.raises(ValidationError):
        fer_two_unknown(r, eps)
