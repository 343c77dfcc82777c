"""Parameter sweeps: sum rate versus SNR, users and feedback bits, scaling and coverage.

Every point of a sweep reuses the same seed, so the channel draws are shared
across points (common random numbers) and trends are measured with less
noise. Gaps between variants are paired per trial.
"""

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .. import analysis
from ..channel import SystemParams, db_to_linear
from ..errors import DomainError, InfeasibleError
from .engine import estimate, paired_estimate, simulate

FIG3_ANCHOR = dict(K0=5000, B0=6, P0_dB=10.0)
FIG4_ANCHOR_SUM = 16.55

__all__ = [
    "SweepResult",
    "FIG3_ANCHOR",
    "FIG4_ANCHOR_SUM",
    "tradeoff_users",
    "run_fig1",
    "run_fig2",
    "run_fig3",
    "run_fig4",
    "run_scaling",
    "run_coverage",
]


@dataclass
class SweepResult:
    """Sweep outcome.

    ``series`` maps a name to ``(mean, stderr)`` arrays over ``axis``;
    ``references`` holds analytic or bookkeeping columns without error bars.
    """

    axis_name: str
    axis: np.ndarray
    series: dict = field(default_factory=dict)
    references: dict = field(default_factory=dict)

    def add(self, name, estimates):
        self.series[name] = (
            np.array([e.mean for e in estimates]),
            np.array([e.stderr for e in estimates]),
        )

    def mean(self, name):
        return self.series[name][0]

    def stderr(self, name):
        return self.series[name][1]

    def columns(self):
        cols = [self.axis_name]
        for name in self.series:
            cols += [f"{name}_mean", f"{name}_stderr"]
        return cols + list(self.references)

    def rows(self):
        for i, a in enumerate(self.axis):
            row = [a]
            for m, s in self.series.values():
                row += [m[i], s[i]]
            row += [r[i] for r in self.references.values()]
            yield row

    def to_csv(self, path=None):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns())
        for row in self.rows():
            w.writerow([_fmt(v) for v in row])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(text)
        return text


def _fmt(v):
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    return repr(int(v)) if v.is_integer() and abs(v) < 1e15 else f"{v:.10g}"


def _params(cfg, **over):
    values = dict(K=cfg.K, nT=cfg.nT, B=cfg.B, M=cfg.M)
    values.update(over)
    if "P" not in values:
        values["P"] = cfg.P
    return SystemParams(**values)


def run_fig1(cfg, codebook=None):
    """Sum rate versus SNR at fixed ``K`` for each feedback size in ``B_list``."""
    grid = cfg.grid or tuple(range(0, 45, 5))
    B_list = cfg.B_list or (8, 12)
    res = SweepResult("P_dB", np.asarray(grid, dtype=float))
    per_b = {B: ([], []) for B in B_list}
    perfect = ([], [])
    for P_dB in grid:
        for j, B in enumerate(B_list):
            variants = ("thp_q", "zfbf_q") + (("thp_perfect", "zfbf_perfect") if j == 0 else ())
            r = simulate(_params(cfg, B=B, P=db_to_linear(P_dB)), cfg.trials, cfg.seed, cfg.backend, variants,
                         codebook=codebook)
            per_b[B][0].append(r.summary("thp_q"))
            per_b[B][1].append(r.summary("zfbf_q"))
            if j == 0:
                perfect[0].append(r.summary("thp_perfect"))
                perfect[1].append(r.summary("zfbf_perfect"))
    for B in B_list:
        res.add(f"thp_q_B{B}", per_b[B][0])
        res.add(f"zfbf_q_B{B}", per_b[B][1])
    res.add("thp_perfect", perfect[0])
    res.add("zfbf_perfect", perfect[1])
    res.references["scaling_law"] = np.array(
        [analysis.scaling_targets(cfg.K, _params(cfg, P=db_to_linear(p))).scaling_law for p in grid]
    )
    return res


def run_fig2(cfg, codebook=None):
    """Sum rate versus number of users with paired THP minus ZFBF gaps."""
    grid = cfg.grid or (10, 20, 50, 100, 200, 500, 1000)
    B_list = cfg.B_list or (cfg.B,)
    res = SweepResult("K", np.asarray(grid, dtype=int))
    acc = {}
    for K in grid:
        for j, B in enumerate(B_list):
            variants = ("thp_q", "zfbf_q") + (("thp_perfect", "zfbf_perfect") if j == 0 else ())
            r = simulate(_params(cfg, K=int(K), B=B), cfg.trials, cfg.seed, cfg.backend, variants,
                         codebook=codebook)
            acc.setdefault(f"thp_q_B{B}", []).append(r.summary("thp_q"))
            acc.setdefault(f"zfbf_q_B{B}", []).append(r.summary("zfbf_q"))
            acc.setdefault(f"gap_q_B{B}", []).append(paired_estimate(r.rates["thp_q"], r.rates["zfbf_q"]))
            if j == 0:
                acc.setdefault("thp_perfect", []).append(r.summary("thp_perfect"))
                acc.setdefault("zfbf_perfect", []).append(r.summary("zfbf_perfect"))
                acc.setdefault("gap_perfect", []).append(
                    paired_estimate(r.rates["thp_perfect"], r.rates["zfbf_perfect"])
                )
    for name, est in acc.items():
        res.add(name, est)
    res.references["bc_ceiling"] = np.array(
        [analysis.scaling_targets(int(K), _params(cfg, K=int(K))).bc_ceiling for K in grid]
    )
    return res


def tradeoff_users(B, P, nT, c):
    """Users keeping ``B + log2 K - (nT-1) log2 P`` at ``c``, rounded; at least ``nT``."""
    K = int(round(2.0 ** ((nT - 1) * math.log2(P) + c - B)))
    if K < nT:
        raise InfeasibleError(f"tradeoff gives K = {K} < nT = {nT}")
    return K


def run_fig3(cfg, codebook=None):
    """Sum rate versus SNR with ``B`` (or ``K``) adapted along the tradeoff line.

    ``cfg.mode`` is ``adapt_b`` (``K = K0`` fixed) or ``adapt_k`` (``B = B0``
    fixed).
    """
    grid = cfg.grid or (10, 15, 20, 25, 30)
    K0, B0, P0_dB = cfg.K0 or FIG3_ANCHOR["K0"], cfg.B0 or FIG3_ANCHOR["B0"], cfg.P0_dB
    P0_dB = FIG3_ANCHOR["P0_dB"] if P0_dB is None else P0_dB
    c = analysis.tradeoff_constant(K0, B0, db_to_linear(P0_dB), cfg.nT)
    res = SweepResult("P_dB", np.asarray(grid, dtype=float))
    acc = {}
    Bs, Ks = [], []
    for P_dB in grid:
        P = db_to_linear(P_dB)
        if cfg.mode == "adapt_k":
            B, K = B0, tradeoff_users(B0, P, cfg.nT, c)
        elif cfg.mode in (None, "adapt_b"):
            B, K = analysis.tradeoff_bits(K0, P, cfg.nT, c), K0
        else:
            raise DomainError(f"unknown fig3 mode {cfg.mode!r}")
        Bs.append(B)
        Ks.append(K)
        r = simulate(_params(cfg, K=K, B=B, P=P), cfg.trials, cfg.seed, cfg.backend, codebook=codebook)
        for v in ("thp_q", "zfbf_q", "thp_perfect", "zfbf_perfect"):
            acc.setdefault(v, []).append(r.summary(v))
        acc.setdefault("gap_thp", []).append(paired_estimate(r.rates["thp_perfect"], r.rates["thp_q"]))
        acc.setdefault("gap_zfbf", []).append(paired_estimate(r.rates["zfbf_perfect"], r.rates["zfbf_q"]))
        acc.setdefault("gap_excess", []).append(
            paired_estimate(r.rates["zfbf_perfect"] - r.rates["zfbf_q"], r.rates["thp_perfect"] - r.rates["thp_q"])
        )
    for name, est in acc.items():
        res.add(name, est)
    res.references["B"] = np.array(Bs)
    res.references["K"] = np.array(Ks)
    res.references["c"] = np.full(len(grid), c)
    return res


def run_fig4(cfg, codebook=None):
    """Sum rate versus ``B`` at high SNR with ``B + log2 K`` held fixed."""
    grid = cfg.grid or tuple(range(4, 13))
    P_list = cfg.P_list or (35.0, 40.0)
    total = cfg.anchor_sum if cfg.anchor_sum is not None else FIG4_ANCHOR_SUM
    res = SweepResult("B", np.asarray(grid, dtype=int))
    Ks = []
    acc = {}
    for B in grid:
        K = int(round(2.0 ** (total - B)))
        if K < cfg.nT:
            raise InfeasibleError(f"B = {B} leaves K = {K} < nT")
        Ks.append(K)
        for P_dB in P_list:
            r = simulate(_params(cfg, K=K, B=int(B), P=db_to_linear(P_dB)), cfg.trials, cfg.seed,
                         cfg.backend, ("thp_q", "zfbf_q"), codebook=codebook)
            tag = f"P{_fmt(P_dB)}"
            acc.setdefault(f"thp_q_{tag}", []).append(r.summary("thp_q"))
            acc.setdefault(f"zfbf_q_{tag}", []).append(r.summary("zfbf_q"))
    for name, est in acc.items():
        res.add(name, est)
    res.references["K"] = np.array(Ks)
    res.references["highsnr_approx"] = np.array(
        [analysis.sumrate_highsnr_approx(K, analysis.CdfParams(cfg.nT, int(B), 1.0)) for B, K in zip(grid, Ks)]
    )
    return res


def run_scaling(cfg, codebook=None):
    """Average quantized THP sum rate against ``nT log2(varrho log K)``."""
    grid = cfg.grid or (100, 1000, 10000)
    res = SweepResult("K", np.asarray(grid, dtype=int))
    est, ratios, law, bc, gap = [], [], [], [], []
    for K in grid:
        p = _params(cfg, K=int(K))
        r = simulate(p, cfg.trials, cfg.seed, cfg.backend, ("thp_q",), codebook=codebook)
        t = analysis.scaling_targets(int(K), p)
        e = r.summary("thp_q")
        est.append(e)
        ratios.append(estimate(r.rates["thp_q"] / t.scaling_law))
        law.append(t.scaling_law)
        bc.append(t.bc_ceiling)
        gap.append((t.bc_ceiling - e.mean) / e.mean)
    res.add("thp_q", est)
    res.add("ratio", ratios)
    res.references["scaling_law"] = np.array(law)
    res.references["bc_ceiling"] = np.array(bc)
    res.references["relative_gap_to_bc"] = np.array(gap)
    return res


def run_coverage(cfg, codebook=None):
    """Fraction of trials whose scheduled SINR lands in the extreme-value interval.

    ``cfg.mode`` selects ``finite`` (default; intervals centred at ``chi_n``)
    or ``highsnr`` (``P -> inf`` intervals with ``gamma`` replaced by
    ``omega cos^2 / sin^2``). Points where the asymptotic guards fail get
    NaN coverage and a zero ``valid`` flag.
    """
    grid = cfg.grid or (1000, 10000, 100000)
    highsnr = cfg.mode == "highsnr"
    res = SweepResult("K", np.asarray(grid, dtype=int))
    nT = cfg.nT
    cov = {n: [] for n in range(1, nT + 1)}
    bounds = {n: ([], []) for n in range(1, nT + 1)}
    for K in grid:
        p = _params(cfg, K=int(K), P=1e12 if highsnr else cfg.P)
        cp = analysis.CdfParams(nT, p.B, p.phi)
        r = simulate(p, cfg.trials, cfg.seed, cfg.backend, (), codebook=codebook)
        # At P = 1e12 the scheduled metric equals omega cos^2 / sin^2 to ~1e-12.
        g = r.gamma
        for n in range(1, nT + 1):
            try:
                iv = (analysis.extreme_interval_highsnr(n, int(K), cp) if highsnr
                      else analysis.extreme_interval(n, int(K), cp))
            except DomainError:
                cov[n].append(estimate([math.nan]))
                bounds[n][0].append(math.nan)
                bounds[n][1].append(math.nan)
                continue
            inside = (g[:, n - 1] >= iv.lower) & (g[:, n - 1] <= iv.upper)
            cov[n].append(estimate(inside.astype(float)))
            bounds[n][0].append(iv.lower)
            bounds[n][1].append(iv.upper)
    for n in range(1, nT + 1):
        res.add(f"coverage_n{n}", cov[n])
    for n in range(1, nT + 1):
        res.references[f"lower_n{n}"] = np.array(bounds[n][0])
        res.references[f"upper_n{n}"] = np.array(bounds[n][1])
    return res
