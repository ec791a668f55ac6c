import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
import hypothesis.strategies as st

from oac.ccs import asymptotic_ccs_half_rate
from oac.errors import ComplexityGuardError, ValidationError
from oac.hds import (
    CUBIC_RATE,
    GOLDEN_RATE,
    Convergence,
    DivergentCase,
    hds_binomial,
    hds_exhaustive,
    hds_fast,
    hds_hard,
    hds_soft,
    hds_soft_rate,
    psi1_closed,
    psi2_closed,
    psi2_components,
    psi3_divergence,
    psi3_divergent_closed,
    psi_bounds,
    shift_density,
    shift_histogram,
    tau_count,
)
from oac.overlapped_codec import CodeConfig, coset_size_histogram

HALF = Fraction(1, 2)


@pytest.fixture(scope="module")
def exact20():
    "Exhaustive spectrum at n=20, r=1/2"
    return hds_exhaustive(CodeConfig(20, HALF))


def test_exhaustive_n4():
    "psi = 1, 20/16, 28/16, 12/16, 6/16"
    assert hds_exhaustive(CodeConfig(4, HALF)).psi.tolist() == [1.0, 1.25, 1.75, 0.75, 0.375]


def test_coset_spectra_n4():
    "Per-coset spectra of the n=4 table"
    phi = hds_exhaustive(CodeConfig(4, HALF)).coset_phi
    np.testing.assert_allclose(phi[0], [1, 0, 0, 0, 0])
    np.testing.assert_allclose(phi[1], [1, 1, 6 / 4, 2 / 4, 0])
    np.testing.assert_allclose(phi[2], [1, 10 / 7, 16 / 7, 10 / 7, 6 / 7])
    np.testing.assert_allclose(phi[3], [1, 6 / 4, 6 / 4, 0, 0])


def test_rate_one_has_no_mates():
    "A bijective code has no coset mates"
    psi = hds_exhaustive(CodeConfig(10, 1)).psi
    assert psi[0] == 1 and not psi[1:].any()


@pytest.mark.parametrize("n", [6, 8, 10, 12])
def test_double_count_identity(n):
    "Mates summed over all distances give |C|^2 - |C| per coset"
    cfg = CodeConfig(n, HALF)
    res = hds_exhaustive(cfg)
    sizes = coset_size_histogram(cfg)
    assert (res.coset_sizes == sizes).all()
    mates = res.coset_phi[:, 1:].sum(axis=1) * sizes
    np.testing.assert_allclose(mates, sizes**2 - sizes)


@pytest.mark.parametrize("n", [8, 12, 14])
def test_convexity_lower_bound(n):
    "Sum of psi is at least 2^(n(1-R))"
    assert hds_exhaustive(CodeConfig(n, HALF)).psi.sum() >= 2 ** (n // 2) - 1e-9


@pytest.mark.xfail(
    strict=True,
    reason="TH-2 assumes many unflipped symbols; with d >= n-2 it misses by 8-36% at n <= 16",
)
@pytest.mark.parametrize("n", [8, 12, 16])
def test_soft_matches_exhaustive(n):
    "TH-2 within max(5%, 0.02) of exact at every d"
    cfg = CodeConfig(n, HALF)
    exact = hds_exhaustive(cfg).psi
    soft = hds_soft(cfg).psi
    assert soft[0] == 1.0
    assert np.all(np.abs(soft - exact) <= np.maximum(0.05 * exact, 0.02))


@pytest.mark.parametrize("n", [8, 12, 16])
def test_soft_matches_exhaustive_with_free_symbols(n):
    "TH-2 within max(5%, 0.02) of exact while at least three symbols stay unflipped"
    cfg = CodeConfig(n, HALF)
    exact = hds_exhaustive(cfg).psi[: n - 2]
    soft = hds_soft(cfg).psi[: n - 2]
    assert np.all(np.abs(soft - exact) <= np.maximum(0.05 * exact, 0.02))


def test_soft_near_full_distance_brute_force():
    "psi(7) at n=8 is 23/64 exactly while TH-2 gives about 0.467"
    cfg = CodeConfig(8, HALF)
    assert hds_exhaustive(cfg).psi[7] == 23 / 64
    assert hds_soft(cfg).psi[7] == pytest.approx(0.46737, abs=1e-5)


def test_soft_matches_exhaustive_n20(exact20):
    "TH-2 within 5% of exact at every d for n=20"
    soft = hds_soft(CodeConfig(20, HALF)).psi
    assert np.max(np.abs(soft[1:] / exact20.psi[1:] - 1)) <= 0.05


def test_hard_large_d(exact20):
    "TH-3 within 10% for d >= 14 and exact at d=n"
    hard = hds_hard(CodeConfig(20, HALF)).psi
    assert np.all(np.abs(hard[14:] / exact20.psi[14:] - 1) <= 0.10)
    assert hard[20] == pytest.approx(exact20.psi[20], rel=1e-12)


def test_hard_poor_at_small_d(exact20):
    "TH-3 overshoots by more than 20% at d=1"
    hard = hds_hard(CodeConfig(20, HALF)).psi
    assert abs(hard[1] / exact20.psi[1] - 1) > 0.20


def test_fast_at_full_distance(exact20):
    "TH-4 at d=n is about 1.7 x 2^-10"
    fast = hds_fast(CodeConfig(20, HALF)).psi
    assert fast[20] == pytest.approx(0.0017, rel=0.10)
    assert fast[20] == pytest.approx(exact20.psi[20], rel=0.15)
    assert fast[19] == pytest.approx(1.7071 * 2**-11 * 20, rel=1e-3)


def test_fast_undershoots_small_d(exact20):
    "TH-4 is far too low when d is small"
    fast = hds_fast(CodeConfig(20, HALF)).psi
    assert fast[2] < 0.5 * exact20.psi[2]


def test_binomial_plug_in():
    "TH-1 is C(n,d) 2^-nR int f^2 with its known bias at d=0"
    res = hds_binomial(CodeConfig(20, HALF))
    assert res.psi[10] == pytest.approx(1.3047 * 2**-10 * math.comb(20, 10), rel=5e-3)
    assert res.psi[0] == pytest.approx(1.3047 * 2**-10, rel=5e-3)
    assert res.psi.sum() == pytest.approx(2**10 * res.psi[0] * 2**10, rel=1e-12)


def test_soft_budget_masks_entries():
    "Entries over budget are NaN and flagged"
    res = hds_soft(CodeConfig(16, HALF), budget=tau_count(16, 3))
    assert res.computed[:4].all() and not res.computed[5:].any()
    assert np.isnan(res.psi[~res.computed]).all()


def test_tails_remove_unit_distance_mates():
    "Some tail length up to 4 clears psi(1) at n=12"
    psi1 = [hds_exhaustive(CodeConfig(12, HALF, t)).psi[1] for t in range(5)]
    assert psi1[0] > 0
    assert min(psi1) == 0.0


def test_extreme_tail_is_binomial():
    "With t=nR the spectrum is C(n(1-R), d)"
    psi = hds_exhaustive(CodeConfig(12, HALF, 6)).psi
    want = [math.comb(6, d) for d in range(13)]
    assert psi.tolist() == want


def test_tailed_soft_tracks_exhaustive():
    "TH-2 with tailed weights follows the exact tailed spectrum"
    cfg = CodeConfig(16, HALF, 3)
    exact = hds_exhaustive(cfg).psi
    soft = hds_soft(cfg).psi
    assert np.all(np.abs(soft - exact) <= np.maximum(0.05 * exact, 0.02))


def test_psi_bounds_regimes():
    "J1 is 1 above 0.8114 and jumps from 1 to 2 at log2 of the golden ratio"
    assert psi_bounds(0.85)["J1"] == 1 and psi_bounds(0.9)["J22"] == 1
    assert psi_bounds(GOLDEN_RATE + 1e-6)["J1"] == 1
    assert psi_bounds(GOLDEN_RATE - 1e-6)["J1"] == 2
    assert psi_bounds(1.0) == {"J1": 0, "J21": 0, "J22": 0}


@pytest.mark.parametrize("r", [0.82, 0.85, 0.9, 0.95])
def test_psi_closed_forms_exception_regime(r):
    "psi(1) = 2-2^r, psi(2) = (1-(2^r-1)^2)/2 and their ratio is 2^(r-1)"
    x = 2.0**r - 1.0
    assert psi1_closed(r) == pytest.approx(1 - x, abs=1e-12)
    assert psi2_closed(r) == pytest.approx((1 - x * x) / 2, abs=1e-12)
    assert psi2_closed(r) / psi1_closed(r) == pytest.approx(2.0 ** (r - 1), abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.floats(0.05, 0.99))
def test_j22_tracks_j1(r):
    "J22 is either 2 J1 - 1 or 2 J1"
    b = psi_bounds(r)
    assert b["J22"] in (2 * b["J1"] - 1, 2 * b["J1"])


@pytest.mark.parametrize("r", [0.3, 0.6, 0.85])
def test_psi_closed_forms_match_soft_sum(r):
    "Closed forms agree with TH-2 at n=40"
    soft = hds_soft_rate(r, 40, d_max=2).psi
    assert psi1_closed(r) == pytest.approx(soft[1], abs=1e-6)
    assert psi2_closed(r) == pytest.approx(soft[2], abs=1e-6)


def test_psi2_components_nonnegative():
    "Both halves of psi(2) are nonnegative sums"
    for r in np.linspace(0.1, 0.95, 18):
        same, opposite = psi2_components(float(r))
        assert same >= 0 and opposite >= 0


def test_golden_rate_diverges():
    "2^r equal to the golden ratio gives the pair (1, 1)"
    rep = psi3_divergence(GOLDEN_RATE)
    assert (1, 1) in rep.pairs and rep.status is Convergence.DIVERGENT


def test_cubic_rate_diverges():
    "The plastic-number rate gives pairs (1, 2) and (4, 1)"
    rep = psi3_divergence(CUBIC_RATE)
    assert {(1, 2), (4, 1)} <= set(rep.pairs)


def test_half_rate_has_no_pair():
    "No coincidence at r=1/2 up to the bound"
    rep = psi3_divergence(0.5)
    assert rep.pairs == [] and rep.status is Convergence.UNKNOWN_UP_TO_BOUND
    assert psi3_divergence(0.9).status is Convergence.CONVERGENT


def test_divergent_closed_forms():
    "(n-1)/4 for the golden rate; cubic form needs n >= 14"
    assert psi3_divergent_closed(DivergentCase.GOLDEN_RATIO, 13) == 3.0
    assert psi3_divergent_closed("golden", 5) == 1.0
    with pytest.raises(ValidationError):
        psi3_divergent_closed("golden", 4)
    with pytest.raises(ValidationError):
        psi3_divergent_closed("cubic", 13)


@pytest.mark.parametrize("n", [9, 13, 17])
def test_golden_psi3_grows_linearly(n):
    "TH-2 psi(3) at the golden rate follows (n-1)/4"
    soft = hds_soft_rate(GOLDEN_RATE, n, d_max=3).psi
    assert soft[3] == pytest.approx((n - 1) / 4, rel=0.05)


def test_cubic_psi3_matches_soft():
    "The cubic closed form agrees with TH-2 at n=20"
    soft = hds_soft_rate(CUBIC_RATE, 20, d_max=3).psi
    assert soft[3] == pytest.approx(psi3_divergent_closed("cubic", 20), rel=0.05)


@pytest.mark.parametrize("d", [1, 3, 6])
def test_shift_histogram_symmetric(d):
    "c(x; d) = c(-x; d) and the zero bin stays empty at r=1/2"
    x, c = shift_histogram(CodeConfig(12, HALF), d)
    assert (c == c[::-1]).all()
    assert c[x == 0].item() == 0
    assert c.sum() == tau_count(12, d)


def test_shift_density_matches_spectrum():
    "At d=n the normalized shift density follows f((1-w)/2)/2"
    w, dens = shift_density(CodeConfig(20, HALF), 20)
    target = asymptotic_ccs_half_rate((1 - w) / 2) / 2
    step = w[1] - w[0]
    l1 = np.sum(np.abs(dens - target)) * step
    assert l1 < 0.05


def test_guards():
    "Exhaustive and histogram routes refuse oversized work"
    with pytest.raises(ComplexityGuardError):
        hds_exhaustive(CodeConfig(22, HALF))
    with pytest.raises(ComplexityGuardError):
        shift_histogram(CodeConfig(40, HALF), 20, budget=1 << 20)
