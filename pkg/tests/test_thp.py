import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from thpsim.channel import RngStream, SystemParams, complex_normal
from thpsim.errors import DimensionError, DomainError
from thpsim.experiments.engine import trial_csi
from thpsim.quantizer import CsiBatch, perfect_csi_batch
from thpsim.scheduler import greedy_select
from thpsim.thp import (
    Constellation,
    build_precoders,
    link_level,
    modulo,
    receiver_detect,
    received_terms,
    sinr_exact,
    sum_rate,
    th_encode,
    transmit_receive,
    zfbf_baseline,
    zfbf_sinr,
)


@pytest.fixture
def params():
    return SystemParams.from_db(K=30, nT=4, B=8, P_dB=20.0, M=16)


def _setup(params, seed=0, trial=0, backend="rvq"):
    csi, H = trial_csi(params, seed, trial, backend)
    sched = greedy_select(csi, params)
    return csi, H, sched, build_precoders(sched, csi, params)


@pytest.mark.parametrize("M", [4, 16, 64, 256])
def test_constellation(M):
    c = Constellation(M)
    assert np.mean(np.abs(c.points) ** 2) == pytest.approx(1.0, abs=1e-12)
    assert c.tau == pytest.approx(math.sqrt(M) * math.sqrt(3 / (2 * (M - 1))))
    assert np.all(np.abs(c.points.real) < c.tau) and np.all(np.abs(c.points.imag) < c.tau)


def test_modulo_examples():
    assert modulo(0.5 + 0.5j, 1.0) == 0.5 + 0.5j
    assert modulo(2.5 + 0.5j, 1.0) == pytest.approx(0.5 + 0.5j)
    assert modulo(-1 - 1j, 1.0) == -1 - 1j
    assert modulo(1 + 1j, 1.0) == -1 - 1j
    with pytest.raises(DomainError):
        modulo(1.0, 0.0)


@given(st.floats(-1e3, 1e3), st.floats(-1e3, 1e3), st.floats(0.1, 10))
def test_modulo_properties(a, b, tau):
    z = modulo(complex(a, b), tau)
    assert -tau <= z.real < tau and -tau <= z.imag < tau
    k = (complex(a, b) - z) / (2 * tau)
    assert abs(k.real - round(k.real)) < 1e-6 and abs(k.imag - round(k.imag)) < 1e-6


def test_orthogonal_directions_give_trivial_precoder(params):
    e = np.eye(4, dtype=complex)
    csi = perfect_csi_batch(2 * e)
    sched = greedy_select(csi, params.replace(K=4))
    pre = build_precoders(sched, csi, params)
    np.testing.assert_allclose(pre.R, np.eye(4), atol=1e-15)
    np.testing.assert_allclose(pre.Bmat, 0, atol=1e-15)
    np.testing.assert_allclose(pre.F, csi.hhat[list(sched.users)].conj().T, atol=1e-15)


def test_precoder_structure_and_power(params):
    _, _, _, pre = _setup(params)
    assert np.all(np.triu(pre.Bmat) == 0)
    np.testing.assert_allclose(pre.F.conj().T @ pre.F, np.eye(4), atol=1e-12)
    assert pre.kappa == pytest.approx(16 / 15 * 4)
    M = params.M
    power = params.P / pre.kappa * M / (M - 1) * np.trace(pre.F @ pre.F.conj().T).real
    assert power == pytest.approx(params.P, rel=1e-10)


def test_build_precoders_requires_full_schedule(params):
    csi, _, sched, _ = _setup(params)
    with pytest.raises(DimensionError):
        build_precoders(sched, csi, params.replace(nT=5))


def test_th_encode_examples():
    tau = Constellation(16).tau
    s = np.array([0.3 + 0.1j, -0.2 + 0.4j])
    x, v = th_encode(s, np.zeros((2, 2)), tau)
    np.testing.assert_array_equal(x, s)
    np.testing.assert_array_equal(v, s)
    Bm = np.array([[0, 0], [1, 0]], dtype=complex)
    x, v = th_encode(s, Bm, tau)
    assert x[1] == pytest.approx(s[1] - s[0])
    assert v[1] == pytest.approx(s[1])


def test_th_encode_lattice(rng):
    c = Constellation(16)
    L = 4
    Bm = np.tril(rng.standard_normal((L, L)) + 1j * rng.standard_normal((L, L)), -1) * 3
    s = c.random_symbols(rng, (L, 500))
    x, v = th_encode(s, Bm, c.tau)
    np.testing.assert_allclose(v, x + Bm @ x, atol=1e-10)
    assert np.all((x.real >= -c.tau) & (x.real < c.tau) & (x.imag >= -c.tau) & (x.imag < c.tau))
    k = (v - s) / (2 * c.tau)
    np.testing.assert_allclose(k, np.round(k.real) + 1j * np.round(k.imag), atol=1e-10)


def test_perfect_csi_noiseless_round_trip(params):
    H = complex_normal(np.random.default_rng(4), (params.K, params.nT))
    csi = perfect_csi_batch(H)
    sched = greedy_select(csi, params)
    pre = build_precoders(sched, csi, params)
    c = Constellation(params.M)
    s = np.tile(c.points, (4, 1))
    x, v = th_encode(s, pre.Bmat, pre.tau)
    y = transmit_receive(x, pre, H[list(sched.users)], params)
    np.testing.assert_allclose(y, v, atol=1e-10)
    np.testing.assert_array_equal(receiver_detect(y, pre.tau, c), s)


def test_received_decomposition_termwise(params, rng):
    csi, H, sched, pre = _setup(params, seed=2)
    c = Constellation(params.M)
    s = c.random_symbols(rng, (4, 50))
    x, v = th_encode(s, pre.Bmat, pre.tau)
    n = complex_normal(rng, x.shape)
    y = transmit_receive(x, pre, H[list(sched.users)], params, noise=n)
    v2, interf, noise_term = received_terms(x, pre, csi, params, noise=n)
    np.testing.assert_allclose(v2, v, atol=1e-10)
    np.testing.assert_allclose(y - v - noise_term, interf, atol=1e-10)
    y0 = transmit_receive(x, pre, H[list(sched.users)], params)
    np.testing.assert_allclose(y0 - v, interf, atol=1e-10)


def test_transmit_power_near_prediction(rng):
    c = Constellation(16)
    Bm = np.tril(rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4)), -1)
    x, _ = th_encode(c.random_symbols(rng, (4, 100_000)), Bm, c.tau)
    assert np.mean(np.abs(x[1:]) ** 2) == pytest.approx(16 / 15, rel=0.03)


def test_receiver_detect_rules():
    c = Constellation(16)
    p = c.points[5]
    assert receiver_detect(p, c.tau, c) == p
    assert receiver_detect(p + 2 * c.tau, c.tau, c) == p
    a, b = c.points[0], c.points[1]  # differ in the imaginary part only
    assert receiver_detect((a + b) / 2, c.tau, c) == a


def test_sinr_exact_matches_scheduler(params):
    for trial in range(5):
        csi, _, sched, pre = _setup(params, seed=7, trial=trial)
        for k in range(4):
            assert sinr_exact(k, sched, csi, params, pre) == pytest.approx(sched.gamma[k], rel=1e-12)


def test_sinr_exact_perfect_csi(params):
    H = complex_normal(np.random.default_rng(8), (params.K, params.nT))
    csi = perfect_csi_batch(H)
    sched = greedy_select(csi, params)
    pre = build_precoders(sched, csi, params)
    for k, u in enumerate(sched.users):
        expect = params.phi * csi.rho2[u] * abs(pre.R[k, k]) ** 2
        assert sinr_exact(k, sched, csi, params, pre) == pytest.approx(expect, rel=1e-12)


def test_sum_rate_examples():
    assert sum_rate([0, 0, 0, 0]) == 0
    assert sum_rate([1, 1, 1, 1]) == pytest.approx(4.0)
    assert sum_rate([3, 7]) == pytest.approx(5.0)
    with pytest.raises(DomainError):
        sum_rate([-1.0])


def test_zfbf_equals_thp_on_orthogonal_perfect_csi(params):
    H = np.diag([1.0, 2.0, 1.5, 0.7]).astype(complex)
    csi = perfect_csi_batch(H)
    p = params.replace(K=4)
    sched = greedy_select(csi, p)
    pre = build_precoders(sched, csi, p)
    thp = [math.log2(1 + sinr_exact(k, sched, csi, p, pre)) for k in range(4)]
    zf = zfbf_baseline(csi, p, sched)
    # THP scales power by (M-1)/M; ZFBF does not.
    M = p.M
    np.testing.assert_allclose(
        np.array(zf), np.log2(1 + (2 ** np.array(thp) - 1) * M / (M - 1)), rtol=1e-12
    )


def test_zfbf_single_user_matched_filter():
    h = np.array([[1 + 1j, 0.5, -0.2j]])
    sinr = zfbf_sinr(h, h / np.linalg.norm(h), P=3.0, nT=1)
    assert sinr[0] == pytest.approx(3.0 * np.linalg.norm(h) ** 2, rel=1e-12)


def test_thp_beats_zfbf_with_many_users():
    p = SystemParams.from_db(K=300, nT=4, B=8, P_dB=20.0, M=256)
    thp, zf = [], []
    for t in range(30):
        csi, _ = trial_csi(p, 1, t, "rvq")
        sched = greedy_select(csi, p)
        pre = build_precoders(sched, csi, p)
        thp.append(sum_rate([sinr_exact(k, sched, csi, p, pre) for k in range(4)]))
        zf.append(sum(zfbf_baseline(csi, p, sched)))
    assert np.mean(thp) > np.mean(zf)


def test_link_level_agreement():
    p = SystemParams.from_db(K=30, nT=4, B=8, P_dB=15.0, M=256)
    csi, _, sched, _ = _setup(p, seed=1)
    rep = link_level(sched, csi, p, 100_000, np.random.default_rng(0))
    np.testing.assert_allclose(rep.measured_sinr, rep.predicted_sinr, rtol=0.02)
    assert 0 <= rep.ser <= 1 and rep.symbols == 100_000


def test_ser_vanishes_with_fine_feedback():
    sers = {}
    for B in (4, 16):
        p = SystemParams.from_db(K=20, nT=4, B=B, P_dB=30.0, M=4)
        out = []
        for t in range(3):
            csi, _, sched, _ = _setup(p, seed=1, trial=t)
            out.append(link_level(sched, csi, p, 20_000, np.random.default_rng(t)).ser)
        sers[B] = np.mean(out)
    assert sers[16] < 1e-3
    assert sers[16] < sers[4]
