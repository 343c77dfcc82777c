import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from thpsim.channel import RngStream, SystemParams
from thpsim.errors import DegeneracyError, InsufficientUsersError
from thpsim.experiments.engine import trial_csi
from thpsim.numerics import lq_decompose
from thpsim.quantizer import CsiBatch, QuantizedCsi, cell_approx_batch
from thpsim.scheduler import greedy_select, metric_first, metric_n


def _csi(user, hhat, rho2=1.0, cos2=1.0, htilde=None):
    hhat = np.asarray(hhat, dtype=complex)
    if htilde is None:
        htilde = np.roll(hhat, 1)
    return QuantizedCsi(user=user, index=-1, hhat=hhat, rho2=rho2, cos2=cos2, sin2=1 - cos2, htilde=htilde)


@pytest.fixture
def params():
    return SystemParams.from_phi(K=50, nT=4, B=8, phi=3.0)


def test_metric_first_examples(params):
    assert metric_first(_csi(0, [1, 0, 0, 0]), params) == pytest.approx(3.0)
    assert metric_first(_csi(0, [1, 0, 0, 0], rho2=0.0), params) == 0.0
    # rho^2 cos^2 = 4, rho^2 sin^2 = 0.2
    c = _csi(0, [1, 0, 0, 0], rho2=4.2, cos2=4 / 4.2)
    assert metric_first(c, params) == pytest.approx(7.5)


def test_metric_n_orthogonal_and_in_span(params):
    e = np.eye(4, dtype=complex)
    c = _csi(0, e[2], rho2=2.0, cos2=0.9)
    g, xi = metric_n(c, [e[0], e[1]], params)
    assert g == pytest.approx(metric_first(c, params))
    np.testing.assert_allclose(xi, e[2])
    inside = _csi(1, (e[0] + 1j * e[1]) / np.sqrt(2), rho2=2.0, cos2=0.9)
    assert metric_n(inside, [e[0], e[1]], params)[0] == pytest.approx(0.0, abs=1e-15)


def test_metric_n_matches_projector(params, rng):
    Q = lq_decompose(rng.standard_normal((2, 4)) + 1j * rng.standard_normal((2, 4))).Q
    for _ in range(20):
        h = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        h /= np.linalg.norm(h)
        c = _csi(0, h, rho2=3.0, cos2=0.8)
        g, xi = metric_n(c, list(Q), params)
        proj = (np.eye(4) - Q.T @ Q.conj()) @ h
        np.testing.assert_allclose(xi, proj, atol=1e-12)
        phi = params.phi
        w = np.vdot(proj, proj).real
        assert g == pytest.approx(phi * 3.0 * w * 0.8 / (phi * 3.0 * 0.2 + 1), abs=1e-12)


def test_greedy_orthogonal_users(params):
    e = np.eye(4, dtype=complex)
    csi = [_csi(k, e[k]) for k in range(4)]
    s = greedy_select(csi, params.replace(K=4))
    assert s.users == (0, 1, 2, 3)
    np.testing.assert_allclose(s.omega, 1.0)
    csi = [_csi(k, e[k], rho2=1.0 + k) for k in range(4)]
    assert greedy_select(csi, params.replace(K=4)).users == (3, 2, 1, 0)


def test_greedy_needs_nT_users(params):
    e = np.eye(4, dtype=complex)
    with pytest.raises(InsufficientUsersError):
        greedy_select([_csi(0, e[0]), _csi(1, e[1])], params)


def test_greedy_degenerate_names_iteration(params):
    e = np.eye(4, dtype=complex)
    csi = [_csi(k, e[0], rho2=4.0 - k) for k in range(3)] + [_csi(3, e[1], rho2=0.5)]
    with pytest.raises(DegeneracyError) as info:
        greedy_select(csi, params.replace(K=4))
    assert info.value.iteration == 3


def _exhaustive_check(csi_list, sched, params):
    basis = []
    remaining = set(range(len(csi_list)))
    for n, u in enumerate(sched.users):
        scores = {k: metric_n(csi_list[k], basis, params)[0] for k in remaining}
        best = max(scores.values())
        assert scores[u] == pytest.approx(best, rel=1e-12)
        assert u == min(k for k, v in scores.items() if v >= best * (1 - 1e-12))
        assert sched.gamma[n] == pytest.approx(best, rel=1e-12)
        remaining.remove(u)
        basis.append(sched.basis[n])


@pytest.mark.parametrize("backend", ["rvq", "cell-approx"])
def test_greedy_exhaustive_argmax(params, backend):
    for trial in range(5):
        csi, _ = trial_csi(params, 3, trial, backend)
        lst = csi.to_list()
        sched = greedy_select(lst, params)
        _exhaustive_check(lst, sched, params)


@given(st.integers(0, 2**32 - 1), st.integers(4, 40), st.integers(2, 6))
def test_schedule_invariants(seed, K, nT):
    p = SystemParams.from_phi(K=max(K, nT), nT=nT, B=6, phi=5.0)
    csi = cell_approx_batch(p, np.random.default_rng(seed))
    s = greedy_select(csi, p, record_candidates=True)
    assert len(set(s.users)) == nT
    np.testing.assert_allclose(s.basis @ s.basis.conj().T, np.eye(nT), atol=1e-10)
    assert s.omega[0] == pytest.approx(1.0)
    assert np.all((s.omega >= 0) & (s.omega <= 1 + 1e-12))
    R = lq_decompose(csi.hhat[list(s.users)]).R
    np.testing.assert_allclose(np.sum(np.abs(R) ** 2, axis=1), 1.0, atol=1e-10)
    # Growing the basis never raises any remaining candidate's omega.
    om = s.candidate_omega
    for n in range(1, nT):
        alive = np.isfinite(om[n])
        assert np.all(om[n][alive] <= om[n - 1][alive] + 1e-12)


def test_batch_and_list_agree(params):
    csi, _ = trial_csi(params, 5, 0, "rvq")
    a = greedy_select(csi, params)
    b = greedy_select(csi.to_list(), params)
    assert a.users == b.users
    np.testing.assert_allclose(a.gamma, b.gamma, rtol=1e-14)
