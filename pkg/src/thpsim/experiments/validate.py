"""Kolmogorov-Smirnov validation of the closed-form laws against simulation."""

import math
from dataclasses import dataclass, field

import numpy as np

from .. import analysis
from ..channel import RngStream, STREAM_CELL, STREAM_CHANNEL, complex_normal
from ..errors import DomainError, StatisticalPowerError
from ..quantizer import generate_codebook, quantize_rows, sample_cell_approx
from ..scheduler import metric_factors
from .engine import simulate

MIN_SAMPLES = 100
LAWS = ("first-sinr", "residual-beta", "cell-interference", "iteration-sinr", "highsnr", "projection")

__all__ = [
    "LAWS",
    "KsReport",
    "ks_statistic",
    "tabulated_cdf",
    "validate_cdf",
    "harvest_candidates",
    "candidate_gain_ks",
]


@dataclass(frozen=True)
class KsReport:
    """Outcome of one KS comparison.

    ``support`` is the interval ``[x_min, x_max]`` over which the supremum was
    taken; ``passed`` compares ``statistic`` with ``threshold``.
    """

    law: str
    samples: int
    statistic: float
    support: tuple
    threshold: float
    extras: dict = field(default_factory=dict)

    @property
    def passed(self):
        return self.statistic < self.threshold


def _vectorize(cdf):
    def f(x):
        try:
            out = cdf(x)
            out = np.asarray(out, dtype=float)
            if out.shape == np.shape(x):
                return out
        except (TypeError, ValueError):
            pass
        return np.array([cdf(float(v)) for v in np.ravel(x)], dtype=float).reshape(np.shape(x))

    return f


def ks_statistic(samples, cdf, support=(-math.inf, math.inf)):
    """Supremum of ``|F_emp - F|`` over sample points inside ``support``.

    The empirical CDF is built from all samples; only the comparison is
    restricted. Both one-sided limits of the step function are examined at
    each point.

    Raises
    ------
    StatisticalPowerError
        When fewer than 100 samples fall inside ``support``.
    """
    x = np.sort(np.asarray(samples, dtype=float).ravel())
    n = x.size
    lo, hi = support
    left = np.searchsorted(x, lo, side="left")
    right = np.searchsorted(x, hi, side="right")
    if right - left < MIN_SAMPLES:
        raise StatisticalPowerError(
            f"only {right - left} samples inside [{lo}, {hi}]; need {MIN_SAMPLES}"
        )
    pts = x[left:right]
    F = _vectorize(cdf)(pts)
    above = np.searchsorted(x, pts, side="right") / n
    below = np.searchsorted(x, pts, side="left") / n
    return float(max(np.max(np.abs(above - F)), np.max(np.abs(F - below))))


def tabulated_cdf(cdf, lo, hi, points=2001):
    """Piecewise-linear interpolant of an expensive CDF on ``[lo, hi]``.

    Returns ``(callable, max_error)`` where ``max_error`` is the largest
    deviation seen at the cell midpoints.
    """
    grid = np.linspace(lo, hi, points)
    vals = np.array([cdf(float(g)) for g in grid])
    mids = 0.5 * (grid[1:] + grid[:-1])
    err = float(np.max(np.abs(np.array([cdf(float(m)) for m in mids]) - 0.5 * (vals[1:] + vals[:-1]))))

    def f(x):
        return np.interp(x, grid, vals)

    return f, err


def harvest_candidates(params, trials, seed, backend="cell-approx"):
    """Per-iteration ``omega`` of every remaining candidate and its gain ratio.

    Returns ``(omega, ratio, cos2, sin2)`` with ``omega`` of shape ``(T, nT, K)``
    (NaN once a user is selected) and the per-user arrays of shape ``(T, K)``.
    """
    res = simulate(params, trials, seed, backend, variants=(), record_candidates=True)
    st = res.extras
    return res.candidate_omega, st["ratio"], st["cos2"], st["sin2"]


def _restricted_support(samples, lo):
    hi = float(np.quantile(samples, 0.999))
    return (lo, hi)


def _beta_cdf_vec(a, b):
    return np.vectorize(lambda x: analysis.beta_cdf(x, a, b))


def validate_cdf(params, law, samples=100_000, seed=0, threshold=0.015, n=2, K=None, trials=None,
                 backend="cell-approx"):
    """Compare a closed-form law with simulation under the cell approximation.

    Parameters
    ----------
    params : SystemParams
        ``nT``, ``B`` and ``phi`` define the law; ``K`` the candidate pool for
        harvested laws.
    law : str
        ``first-sinr``: first-iteration SINR; ``residual-beta``: candidate
        ``omega`` at iteration ``n``; ``cell-interference``: RVQ
        ``rho^2 sin^2`` against the cell model; ``iteration-sinr``: SINR at
        iteration ``n``; ``highsnr``: ``omega cos^2 / sin^2``;
        ``projection``: squared projections of isotropic vectors.
    n : int
        Greedy iteration for the iteration-indexed laws.
    trials : int, optional
        Greedy runs for harvested laws; by default enough to supply
        ``samples`` candidates.
    backend : str
        ``cell-approx`` validates the laws under the model they were derived
        for; ``rvq`` measures how well they describe RVQ feedback.
    """
    if law not in LAWS:
        raise DomainError(f"unknown law {law!r}; choose from {LAWS}")
    nT = params.nT
    cp = analysis.CdfParams.from_system(params, n=n if law in ("iteration-sinr", "highsnr") else 1)
    if law == "first-sinr":
        if backend == "rvq":
            g = _rvq_first_metric(params, samples, seed)
        else:
            S, I = sample_cell_approx(params, RngStream(seed), size=samples)
            g = params.phi * S / (params.phi * I + 1.0)
        sup = _restricted_support(g, cp.x_min)
        ks = ks_statistic(g, np.vectorize(lambda x: analysis.cdf_gamma_first(x, cp)), sup)
        return KsReport(law, g.size, ks, sup, threshold)
    if law == "projection":
        return _projection_check(params, samples, seed, threshold)
    if law == "cell-interference":
        return _cell_interference(params, samples, seed, threshold)

    if not 2 <= n <= nT and law in ("residual-beta", "iteration-sinr"):
        raise DomainError("iteration n must lie in [2, nT]")
    if K is None:
        K = max(params.K, 500)
    p = params.replace(K=K)
    if trials is None:
        trials = max(1, math.ceil(samples / (K - n + 1)))
    omega, ratio, cos2, sin2 = harvest_candidates(p, trials, seed, backend)
    w = omega[:, n - 1, :]
    mask = np.isfinite(w)
    if law == "residual-beta":
        x = w[mask]
        ks = ks_statistic(x, _beta_cdf_vec(nT - n + 1, n - 1), (0.0, 1.0))
        return KsReport(law, x.size, ks, (0.0, 1.0), threshold, {"n": n, "K": K, "trials": trials})
    if law == "iteration-sinr":
        g = (ratio * np.where(mask, w, 0.0))[mask]
        sup = _restricted_support(g, cp.x_min)
        F, err = tabulated_cdf(lambda x: analysis.cdf_gamma_n(x, cp), sup[0], sup[1])
        ks = ks_statistic(g, F, sup)
        return KsReport(law, g.size, ks, sup, threshold,
                        {"n": n, "K": K, "trials": trials, "interp_error": err})
    # highsnr: ratio omega cos^2 / sin^2
    wn = np.where(mask, w, 0.0) if n > 1 else np.ones_like(w)
    g = (wn * cos2 / sin2)[mask]
    sup = _restricted_support(g, cp.x_min)
    ks = ks_statistic(g, np.vectorize(lambda x: analysis.cdf_highsnr(x, cp, n)), sup)
    return KsReport(law, g.size, ks, sup, threshold, {"n": n, "K": K, "trials": trials})


def _rvq_quantized(params, samples, seed, K=1000):
    rows = []
    trial = 0
    while sum(r.K for r in rows) < samples:
        H = complex_normal(RngStream(seed, STREAM_CHANNEL).generator(trial), (K, params.nT))
        rows.append(quantize_rows(H, generate_codebook(params, RngStream(seed), trial)))
        trial += 1
    return rows


def _rvq_first_metric(params, samples, seed):
    num, den = [], []
    for csi in _rvq_quantized(params, samples, seed):
        a, b = metric_factors(csi.rho2, csi.cos2, csi.sin2, params.phi)
        num.append(a)
        den.append(b)
    return (np.concatenate(num) / np.concatenate(den))[:samples]


def _projection_check(params, samples, seed, threshold):
    """Isotropic unit vectors projected on a fixed orthonormal basis.

    The squared projections ``t_i`` must be nonnegative with ``sum t_i <= 1``,
    and each ``t_i`` follows ``Beta(1, nT - 1)``.
    """
    nT = params.nT
    gen = RngStream(seed, STREAM_CHANNEL).generator(0)
    g = complex_normal(gen, (samples, nT))
    u = g / np.linalg.norm(g, axis=1, keepdims=True)
    basis, _ = np.linalg.qr(complex_normal(RngStream(seed, STREAM_CELL).generator(0), (nT, nT)))
    t = np.abs(u @ basis.conj()) ** 2
    partial = t[:, : nT - 1]
    violations = int(np.sum(partial < 0) + np.sum(partial.sum(axis=1) > 1.0 + 1e-12))
    ks = ks_statistic(t[:, 0], _beta_cdf_vec(1, nT - 1), (0.0, 1.0))
    return KsReport("projection", samples, ks, (0.0, 1.0), threshold, {"violations": violations})


def _erlang_cdf(shape, scale):
    def f(x):
        y = np.maximum(np.asarray(x, dtype=float) / scale, 0.0)
        term = np.ones_like(y)
        acc = np.ones_like(y)
        for j in range(1, shape):
            term = term * y / j
            acc = acc + term
        return 1.0 - np.exp(-y) * acc

    return f


def _cell_interference(params, samples, seed, threshold):
    """``rho^2 sin^2`` of RVQ-quantized channels against ``delta * Gamma(nT - 1)``.

    This measures the cell approximation itself, so the statistic is
    informative rather than expected to vanish.
    """
    nT = params.nT
    I = np.concatenate([c.rho2 * c.sin2 for c in _rvq_quantized(params, samples, seed)])[:samples]
    ks = ks_statistic(I, _erlang_cdf(nT - 1, params.delta), (0.0, float(np.quantile(I, 0.999))))
    return KsReport("cell-interference", I.size, ks, (0.0, float(np.quantile(I, 0.999))), threshold)


def candidate_gain_ks(params, K, trials, seed=0, backend="rvq"):
    """KS distance between iteration-2 candidates' ``rho^2`` and ``Gamma(nT, 1)``."""
    p = params.replace(K=K)
    res = simulate(p, trials, seed, backend, variants=(), record_candidates=True)
    mask = np.isfinite(res.candidate_omega[:, 1, :])
    r2 = res.extras["rho2"][mask]
    return ks_statistic(r2, _erlang_cdf(params.nT, 1.0))
