import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from thpsim import analysis as an
from thpsim.channel import SystemParams
from thpsim.errors import DomainError, InfeasibleError, SupportError

mpmath.mp.dps = 40


@pytest.fixture
def p():
    return an.CdfParams(nT=4, B=8, phi=3.0)


# Exact first-iteration law


def test_cdf_first_example(p):
    ref = 1 - 256 * mpmath.e ** -5 / mpmath.mpf(16) ** 3
    assert an.cdf_gamma_first(15.0, p) == pytest.approx(float(ref), abs=1e-15)
    assert an.cdf_gamma_first(15.0, p) == pytest.approx(0.9995789, abs=1e-7)


def test_cdf_first_limit_and_monotone(p):
    assert an.cdf_gamma_first(1e4, p) == 1.0
    grid = np.linspace(p.x_min, 100, 200)
    vals = [an.cdf_gamma_first(x, p) for x in grid]
    assert all(b >= a for a, b in zip(vals, vals[1:]))


def test_support_guard(p):
    with pytest.raises(SupportError):
        an.cdf_gamma_first(p.x_min - 0.5, p)
    with pytest.raises(SupportError):
        an.cdf_gamma_n(1.0, p.at(2))
    with pytest.raises(SupportError):
        an.cdf_highsnr(1.0, p, 2)


def test_params_guards():
    with pytest.raises(DomainError):
        an.CdfParams(nT=4, B=8, phi=3.0, n=5)
    with pytest.raises(DomainError):
        an.CdfParams(nT=4, B=8, phi=3.0).c_n


def test_from_system():
    sp = SystemParams.from_phi(K=10, nT=4, B=8, phi=3.0)
    cp = an.CdfParams.from_system(sp, n=2)
    assert cp.phi == pytest.approx(3.0) and cp.x_min == pytest.approx(sp.x_min)


# Coefficients


def test_coefficients(p):
    p2 = p.at(2)
    assert p2.c_n == pytest.approx(768.0)
    assert p2.d_n == pytest.approx(128.0)
    assert p2.a_n == pytest.approx(768.0)
    for n in range(2, 5):
        pn = p.at(n)
        for v in (pn.a_n, pn.c_n, pn.b1_n, pn.b2_n, pn.d_n):
            assert 0 < v < math.inf


# Iteration-n law and bounds


def _sf_oracle(x, nT, B, phi, n):
    # Direct mpmath integral of the V-function representation.
    a_n = mpmath.mpf(2) ** B / mpmath.beta(nT - n + 1, n - 1)
    f = lambda t: mpmath.exp(-t / phi) * (t - x) ** (n - 2) * (t + 1) ** (-nT + 1) * t ** (-nT)
    V = mpmath.quad(f, [x, x + 1, x + 20, x + 200, mpmath.inf])
    return float(a_n * mpmath.mpf(x) ** (nT - n + 1) * V)


@pytest.mark.parametrize("n", [2, 3, 4])
@pytest.mark.parametrize("x", [6.0, 15.0, 40.0])
def test_sf_gamma_n_against_mpmath(p, n, x):
    x = max(x, p.x_min)
    assert an.sf_gamma_n(x, p.at(n)) == pytest.approx(_sf_oracle(x, 4, 8, 3.0, n), rel=1e-8)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_sandwich(p, n):
    pn = p.at(n)
    for x in np.linspace(pn.x_min, 200, 50):
        lo = an.cdf_bounds(x, pn, side="lower")
        mid = an.cdf_gamma_n(x, pn)
        hi = an.cdf_bounds(x, pn, side="upper")
        tol = 1e-12
        assert lo <= mid + tol and mid <= hi + tol


@pytest.mark.parametrize("n", [2, 3, 4])
def test_cdf_gamma_n_monotone_to_one(p, n):
    pn = p.at(n)
    vals = [an.cdf_gamma_n(x, pn) for x in np.linspace(pn.x_min, 150, 40)]
    assert all(b >= a - 1e-14 for a, b in zip(vals, vals[1:]))
    assert an.cdf_gamma_n(500.0, pn) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_bound_gap_closes(p, n):
    pn = p.at(n)

    def gap(x):
        return an.sf_bounds(x, pn, "lower") - an.sf_bounds(x, pn, "upper")

    g20, g60 = gap(20 * p.phi), gap(60 * p.phi)
    assert g20 > 0 and g60 >= 0
    assert g60 / g20 < 0.05


@pytest.mark.parametrize("n", [2, 3, 4])
def test_lower_bound_first_order_correction(p, n):
    # sf_lower / tail_lower = 1 + (mu^2 - (kappa - 1/2)^2) phi / x + O(x^-2)
    pn = p.at(n)
    kappa, mu = pn.whittaker_params
    a1 = mu**2 - (kappa - 0.5) ** 2
    x = 200 * p.phi
    ratio = an.sf_bounds(x, pn, "lower") / an.sf_tail_expansion(x, pn, "lower")
    assert ratio == pytest.approx(1 + a1 * p.phi / x, abs=3 * (a1 * p.phi / x) ** 2)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_tail_expansions_converge(p, n):
    pn = p.at(n)
    for side in ("lower", "upper"):
        errs = [abs(an.sf_bounds(x, pn, side) / an.sf_tail_expansion(x, pn, side) - 1)
                for x in (20 * p.phi, 60 * p.phi, 200 * p.phi)]
        assert errs[0] > errs[1] > errs[2]
    lo = an.sf_tail_expansion(600.0, pn, "lower")
    hi = an.sf_tail_expansion(600.0, pn, "upper")
    assert lo / hi == pytest.approx(1.0, rel=0.01)
    assert all(an.sf_tail_expansion(x, pn, "lower") > 0 for x in (10.0, 50.0, 100.0))


@pytest.mark.xfail(strict=True, reason="first-order correction is -14% at 50 phi for n=2")
def test_tail_expansion_two_percent_at_50_phi(p):
    pn = p.at(2)
    x = 50 * p.phi
    assert abs(an.sf_bounds(x, pn, "lower") / an.sf_tail_expansion(x, pn, "lower") - 1) < 0.02


# Extreme-value intervals


def test_chi_1_example(p):
    A = mpmath.mpf(2560000) / 27
    ref = 3 * mpmath.log(A) - 9 * mpmath.log(mpmath.log(A))
    assert an.chi_n(1, 10**4, p) == pytest.approx(float(ref), rel=1e-12)
    assert an.chi_n(1, 10**4, p) == pytest.approx(12.43, abs=0.005)


def test_chi_increasing_and_guard(p):
    for n in range(1, 5):
        vals = [an.chi_n(n, K, p) for K in (10**3, 10**4, 10**5, 10**6)]
        assert all(b > a for a, b in zip(vals, vals[1:]))
    with pytest.raises(DomainError):
        an.chi_n(1, 1, an.CdfParams(nT=4, B=1, phi=30.0))


def test_penalty_enters_chi(p):
    K = 10**4
    A = an.interference_penalty(p) * K
    expect = p.phi * math.log(A) - p.phi * (p.nT - 1) * math.log(math.log(A))
    assert an.chi_n(1, K, p) == pytest.approx(expect, rel=1e-14)
    assert an.interference_penalty(p) == pytest.approx(256 / 27)


def test_extreme_interval_structure(p):
    iv = an.extreme_interval(2, 10**4, p)
    assert iv.center == pytest.approx(an.chi_n(2, 10**4, p))
    assert iv.half_width == pytest.approx(p.phi * math.log(math.log(100.0)))
    assert iv.lower < iv.center < iv.upper and iv.contains(iv.center)
    with pytest.raises(DomainError):
        an.extreme_interval(1, 5, p)


@pytest.mark.xfail(strict=True, reason="K(1-F) is about 77 e^{-x} at K=1e6; convergence is logarithmic")
def test_evt_normalization_within_ten_percent(p):
    for x in (-1.0, 0.0, 2.0):
        assert an.evt_normalized_tail(x, 10**6, 2, p) == pytest.approx(math.exp(-x), rel=0.1)


def test_evt_normalization_shape(p):
    vals = [an.evt_normalized_tail(x, 10**6, 2, p) for x in (-1.0, 0.0, 2.0)]
    assert vals[0] > vals[1] > vals[2] > 0


# High-SNR regime


def test_highsnr_first_closed_form(p):
    assert an.sf_highsnr(100.0, p, 1) == pytest.approx(256 / 101**3, rel=1e-14)


@pytest.mark.parametrize("n", [2, 3, 4])
@pytest.mark.parametrize("x", [4.0, 10.0, 100.0])
def test_highsnr_against_mpmath(p, n, x):
    pn = p.at(n)
    x = max(x, pn.x_min)
    ref = pn.d_n / x**3 * float(mpmath.hyp2f1(3, 8 - n, 7, -1 / x))
    assert an.sf_highsnr(x, p, n) == pytest.approx(ref, rel=1e-10)


def test_highsnr_tail(p):
    x = 1e3
    ratio = an.sf_highsnr(x, p, 2) / (p.at(2).d_n / x**3)
    assert ratio == pytest.approx(1.0, abs=0.01)


def test_highsnr_interval_example(p):
    iv = an.extreme_interval_highsnr(1, 10**4, p)
    ref = (mpmath.mpf(2560000) / mpmath.log(100)) ** (mpmath.mpf(1) / 3) - 1
    assert iv.lower == pytest.approx(float(ref), rel=1e-12)
    assert iv.lower == pytest.approx(81.3, abs=0.1)


@given(st.floats(8.0, 1e9), st.integers(1, 4))
def test_highsnr_interval_ordered(K, n):
    iv = an.extreme_interval_highsnr(n, K, an.CdfParams(nT=4, B=8, phi=3.0))
    assert iv.lower < iv.upper


def test_highsnr_interval_sublinear(p):
    w = [an.extreme_interval_highsnr(2, K, p) for K in (10**3, 10**4, 10**5)]
    widths = [iv.upper - iv.lower for iv in w]
    assert widths[0] < widths[1] < widths[2]
    assert widths[2] / widths[1] < 10


def test_highsnr_correction():
    ref = (-1 - math.log2(5) - math.log2(20)) / 3
    assert an.highsnr_correction(4) == pytest.approx(ref, rel=1e-12)
    n2 = math.log2(an.beta_fn(6, 1) / an.beta_fn(3, 1))
    assert n2 == pytest.approx(-1.0)


def test_highsnr_sumrate_slope(p):
    a = an.sumrate_highsnr_approx(1000, p)
    b = an.sumrate_highsnr_approx(1000, an.CdfParams(nT=4, B=9, phi=3.0))
    assert b - a == pytest.approx(4 / 3)


# Scaling law, perfect CSI and tradeoff


def test_scaling_targets():
    sp = SystemParams(K=10**4, nT=4, B=8, P=16.0, M=4)
    t = an.scaling_targets(10**4, sp)
    assert t.scaling_law == pytest.approx(4 * math.log2(4 * math.log(1e4)))
    assert t.scaling_law == pytest.approx(20.8, abs=0.05)
    assert t.gap_bound == pytest.approx(4 * math.log2(4 / 3))
    assert t.gap_bound == pytest.approx(1.66, abs=0.005)
    assert t.bc_ceiling > t.scaling_law
    big = an.scaling_targets(100, sp.replace(M=2**40))
    assert big.gap_bound == pytest.approx(0.0, abs=1e-10)
    with pytest.raises(DomainError):
        an.scaling_targets(2, sp)


def test_perfect_csi_interval():
    nT, P, K = 4, 16.0, 10**4
    assert an._eps_perfect(1, nT) == pytest.approx(math.gamma(nT))
    for n in range(1, nT + 1):
        assert an._eps_perfect(n, nT) >= math.gamma(nT - n + 1) - 1e-12
        iv = an.perfect_csi_interval(n, K, P, nT)
        hw = P / nT * math.log(math.log(100.0))
        assert iv.lower + hw <= iv.upper - hw + 1e-12


def test_second_order_coefficients_contrast():
    # Perfect CSI: + (nT - n) log log; quantized: - (nT + n - 2) log log.
    nT, K = 4, 10**6
    p = an.CdfParams(nT=nT, B=8, phi=1.0)
    for n in range(2, nT + 1):
        A = p.at(n).c_n * K
        assert an.chi_n(n, K, p) == pytest.approx(math.log(A) - (nT + n - 2) * math.log(math.log(A)))
        iv = an.perfect_csi_interval(n, K, nT, nT)
        eps = math.gamma(nT - n + 1)
        B = K / eps
        assert iv.upper - iv.half_width == pytest.approx(math.log(B) + (nT - n) * math.log(math.log(B)))


def test_tradeoff_anchors():
    c3 = an.tradeoff_constant(5000, 6, 10.0, 4)
    assert c3 == pytest.approx(8.32, abs=0.005)
    assert 5 + math.log2(3000) == pytest.approx(16.55, abs=0.005)
    B = an.tradeoff_bits(5000, 10.0, 4, c3)
    assert B == 6
    assert an.tradeoff_bits(10000, 10.0, 4, c3) == 5
    with pytest.raises(InfeasibleError):
        an.tradeoff_bits(10**6, 1.0, 4, c3)


@given(st.floats(0.01, 0.99), st.integers(1, 6), st.integers(1, 6))
def test_beta_cdf_against_mpmath(x, a, b):
    ref = float(mpmath.betainc(a, b, 0, x, regularized=True))
    assert an.beta_cdf(x, a, b) == pytest.approx(ref, abs=1e-12)
