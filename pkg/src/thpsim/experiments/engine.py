"""Monte Carlo engine: draw, quantize, schedule and evaluate many trials.

Each trial owns its random streams (keyed by seed and trial index), so the
results do not depend on the chunk size or on evaluation order. Trials whose
greedy run degenerates are redrawn from a fresh stream and counted.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from ..channel import STREAM_CELL, STREAM_CHANNEL, RngStream, draw_channels
from ..errors import DegeneracyError, DomainError
from ..quantizer import cell_approx_batch, generate_codebook, perfect_csi_batch, quantize_rows
from ..scheduler import greedy_select, metric_factors, schedule_batch
from ..thp import build_precoders, sinr_exact, sum_rate, zfbf_sinr_batch

log = logging.getLogger(__name__)

BACKENDS = ("rvq", "cell-approx")
VARIANTS = ("thp_q", "thp_perfect", "zfbf_q", "zfbf_perfect")
# Stream offset between successive redraws of a degenerate trial.
RESAMPLE_STRIDE = 64
MAX_RESAMPLES = 8
# Cap on complex entries held per chunk (K * nT * trials).
CHUNK_ENTRIES = 1 << 21

__all__ = [
    "BACKENDS",
    "VARIANTS",
    "TrialResult",
    "SimResult",
    "Estimate",
    "trial_csi",
    "run_trial",
    "simulate",
    "estimate",
    "paired_estimate",
]


@dataclass(frozen=True)
class Estimate:
    mean: float
    stderr: float
    n: int

    def __iter__(self):
        return iter((self.mean, self.stderr))


def estimate(values):
    v = np.asarray(values, dtype=float)
    n = v.size
    if n == 0:
        raise DomainError("no samples")
    se = float(np.std(v, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return Estimate(float(np.mean(v)), se, n)


def paired_estimate(a, b):
    """Mean and standard error of ``a - b`` over common trials."""
    return estimate(np.asarray(a, dtype=float) - np.asarray(b, dtype=float))


def _check_backend(backend):
    if backend not in BACKENDS and backend != "perfect":
        raise DomainError(f"unknown backend {backend!r}; choose from {BACKENDS}")


def trial_csi(params, seed, trial, backend="rvq", attempt=0, codebook=None):
    """Feedback state of one trial as ``(csi, true_channels)``.

    ``backend="perfect"`` returns unquantized directions (``sin = 0``).
    """
    _check_backend(backend)
    offset = RESAMPLE_STRIDE * attempt
    if backend == "cell-approx":
        gen = RngStream(seed, STREAM_CELL + offset).generator(trial)
        csi = cell_approx_batch(params, gen)
        return csi, csi.channels()
    rng = RngStream(seed, STREAM_CHANNEL + offset)
    H = draw_channels(params, rng, trial).h
    if backend == "perfect":
        return perfect_csi_batch(H), H
    cb = codebook if codebook is not None else generate_codebook(params, RngStream(seed), trial)
    return quantize_rows(H, cb), H


@dataclass(frozen=True)
class TrialResult:
    schedule: object
    sinrs: np.ndarray
    sum_rate: float
    resamples: int = 0


def run_trial(params, seed, backend="rvq", trial=0, codebook=None):
    """One full draw, quantize, schedule, precode and evaluate pass."""
    for attempt in range(MAX_RESAMPLES + 1):
        csi, _ = trial_csi(params, seed, trial, backend, attempt, codebook)
        try:
            sched = greedy_select(csi, params)
        except DegeneracyError as exc:
            log.warning("trial %d degenerate at iteration %s; redrawing", trial, exc.iteration)
            continue
        pre = build_precoders(sched, csi, params)
        sinrs = np.array([sinr_exact(k, sched, csi, params, pre) for k in range(params.nT)])
        return TrialResult(sched, sinrs, sum_rate(sinrs), attempt)
    raise DegeneracyError(f"trial {trial} stayed degenerate after {MAX_RESAMPLES} redraws")


@dataclass
class SimResult:
    """Per-trial outputs of :func:`simulate`.

    ``rates`` maps variant name to per-trial sum rates. ``gamma`` holds the
    scheduled SINRs ``(T, nT)`` of the quantized THP scheme in selection
    order; ``candidate_omega`` the per-iteration ``omega`` of every candidate
    when recorded, with the per-user gains and metric ratio in ``extras``.
    """

    rates: dict
    gamma: np.ndarray
    omega: np.ndarray
    resampled: int = 0
    candidate_omega: np.ndarray = None
    extras: dict = field(default_factory=dict)

    @property
    def trials(self):
        return self.gamma.shape[0]

    def summary(self, variant):
        return estimate(self.rates[variant])


def _stack(csis):
    return {
        name: np.stack([getattr(c, name) for c in csis])
        for name in ("hhat", "htilde", "rho2", "cos2", "sin2")
    }


def _selected_rows(arr, sel):
    return np.take_along_axis(arr, sel[:, :, None], axis=1)


def _true_selected(st, sel):
    rho = np.sqrt(np.take_along_axis(st["rho2"], sel, axis=1))[:, :, None]
    cos = np.sqrt(np.take_along_axis(st["cos2"], sel, axis=1))[:, :, None]
    sin = np.sqrt(np.take_along_axis(st["sin2"], sel, axis=1))[:, :, None]
    return rho * (cos * _selected_rows(st["hhat"], sel) + sin * _selected_rows(st["htilde"], sel))


def _chunk_size(params):
    return max(1, min(512, CHUNK_ENTRIES // (params.K * params.nT)))


def simulate(params, trials, seed, backend="rvq", variants=VARIANTS, codebook=None,
             record_candidates=False):
    """Run ``trials`` independent trials and collect per-trial results.

    The quantized THP rate uses the scheduler's metric, which equals the
    closed-form SINR of the precoded link for the same schedule. Perfect-CSI
    variants reuse each trial's true channels, so differences between
    variants are paired.
    """
    _check_backend(backend)
    if trials < 1:
        raise DomainError("trials must be >= 1")
    variants = tuple(variants)
    nT, K, phi = params.nT, params.K, params.phi
    rates = {v: np.empty(trials) for v in variants}
    gamma_all = np.empty((trials, nT))
    omega_all = np.empty((trials, nT))
    cand = np.empty((trials, nT, K)) if record_candidates else None
    extras = {k: np.empty((trials, K)) for k in ("rho2", "cos2", "sin2", "ratio")} if record_candidates else {}
    resampled = 0
    step = _chunk_size(params)
    for start in range(0, trials, step):
        idx = np.arange(start, min(trials, start + step))
        attempts = np.zeros(idx.size, dtype=int)
        pending = np.arange(idx.size)
        csis = [None] * idx.size
        trues = [None] * idx.size
        while pending.size:
            for j in pending:
                csis[j], trues[j] = trial_csi(params, seed, int(idx[j]), backend, int(attempts[j]), codebook)
            st = _stack(csis)
            om = np.empty((idx.size, nT, K)) if record_candidates else None
            sel, omega, gamma, _, status = schedule_batch(st["hhat"], st["rho2"], st["cos2"], st["sin2"], phi, om)
            pending = np.flatnonzero(status)
            for j in pending:
                log.warning("trial %d degenerate at iteration %d; redrawing", idx[j], status[j])
            attempts[pending] += 1
            resampled += pending.size
            if attempts.max() > MAX_RESAMPLES:
                raise DegeneracyError("trial stayed degenerate after repeated redraws")
        gamma_all[idx] = gamma
        omega_all[idx] = omega
        if record_candidates:
            cand[idx] = om
            for name in ("rho2", "cos2", "sin2"):
                extras[name][idx] = st[name]
            num, den = metric_factors(st["rho2"], st["cos2"], st["sin2"], phi)
            extras["ratio"][idx] = num / den
        if "thp_q" in variants:
            rates["thp_q"][idx] = np.log2(1.0 + gamma).sum(axis=1)
        if "zfbf_q" in variants:
            Hs = _true_selected(st, sel)
            Hh = _selected_rows(st["hhat"], sel)
            rates["zfbf_q"][idx] = np.log2(1.0 + zfbf_sinr_batch(Hs, Hh, params.P, nT)).sum(axis=1)
        if "thp_perfect" in variants or "zfbf_perfect" in variants:
            H = np.stack(trues)
            r2 = np.einsum("tkn,tkn->tk", H, H.conj()).real
            hbar = H / np.sqrt(r2)[:, :, None]
            ones, zeros = np.ones_like(r2), np.zeros_like(r2)
            psel, _, pgamma, _, pstatus = schedule_batch(hbar, r2, ones, zeros, phi)
            if np.any(pstatus):
                raise DegeneracyError("perfect-CSI schedule degenerate")
            if "thp_perfect" in variants:
                rates["thp_perfect"][idx] = np.log2(1.0 + pgamma).sum(axis=1)
            if "zfbf_perfect" in variants:
                Hs = _selected_rows(H, psel)
                rates["zfbf_perfect"][idx] = np.log2(1.0 + zfbf_sinr_batch(Hs, Hs, params.P, nT)).sum(axis=1)
    if resampled:
        log.info("%d of %d trials redrawn after degeneracy", resampled, trials)
    return SimResult(rates=rates, gamma=gamma_all, omega=omega_all, resampled=resampled,
                     candidate_omega=cand, extras=extras)
