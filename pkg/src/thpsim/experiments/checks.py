"""Pass/fail checks applied to experiment outputs in ``--check`` mode.

Orderings allow a two-standard-error tolerance; trends ("increasing",
"decreasing") must be significant at two combined standard errors.
"""

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Check",
    "not_below",
    "significant_trend",
    "check_fig1",
    "check_fig2",
    "check_fig3",
    "check_fig4",
    "check_scaling",
    "check_coverage",
    "check_link_level",
    "check_ks",
]


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str = ""

    def line(self):
        return f"{'PASS' if self.passed else 'FAIL'} {self.name}: {self.detail}"


def not_below(a, sa, b, sb, k=2.0):
    """``a >= b`` up to ``k`` combined standard errors, elementwise."""
    return np.asarray(a) - np.asarray(b) >= -k * np.hypot(sa, sb)


def significant_trend(m, s, direction, k=2.0):
    """Each successive step moves in ``direction`` (+1/-1) by more than ``k`` SE."""
    m, s = np.asarray(m, float), np.asarray(s, float)
    d = np.diff(m) * direction
    return bool(np.all(d > k * np.hypot(s[1:], s[:-1])))


def _slope_top(res, name):
    x, y = res.axis, res.mean(name)
    return (y[-1] - y[-2]) / (x[-1] - x[-2])


def check_fig1(res, B_list):
    out = []
    B_list = sorted(B_list)
    for lo, hi in zip(B_list, B_list[1:]):
        for scheme in ("thp", "zfbf"):
            a, b = f"{scheme}_q_B{hi}", f"{scheme}_q_B{lo}"
            ok = not_below(res.mean(a), res.stderr(a), res.mean(b), res.stderr(b))
            out.append(Check(f"fig1 {scheme} B={hi} >= B={lo}", bool(ok.all()),
                             f"worst margin {np.min(res.mean(a) - res.mean(b)):.3f} bits"))
    for B in B_list:
        for scheme in ("thp", "zfbf"):
            q, p = f"{scheme}_q_B{B}", f"{scheme}_perfect"
            ok = not_below(res.mean(p), res.stderr(p), res.mean(q), res.stderr(q))
            out.append(Check(f"fig1 {scheme} B={B} quantized <= perfect", bool(ok.all())))
            sq, sp = _slope_top(res, q), _slope_top(res, p)
            out.append(Check(f"fig1 {scheme} B={B} flattens at high SNR", sq < 0.5 * sp,
                             f"top slope {sq:.3f} vs perfect {sp:.3f} bits/dB"))
    return out


def check_fig2(res, B):
    g, s = res.mean(f"gap_q_B{B}"), res.stderr(f"gap_q_B{B}")
    gp, sp = res.mean("gap_perfect"), res.stderr("gap_perfect")
    return [
        Check("fig2 THP-Q >= ZFBF-Q", bool(np.all(not_below(g, s, 0.0, 0.0))),
              "gaps " + ", ".join(f"{v:.3f}" for v in g)),
        Check("fig2 quantized gap increasing in K", significant_trend(g, s, +1),
              "gaps " + ", ".join(f"{v:.3f}+-{e:.3f}" for v, e in zip(g, s))),
        Check("fig2 perfect-CSI gap decreasing in K", significant_trend(gp, sp, -1),
              "gaps " + ", ".join(f"{v:.3f}+-{e:.3f}" for v, e in zip(gp, sp))),
    ]


def check_fig3(res, max_rel_std=0.2):
    gap = res.mean("gap_thp")
    rel = float(np.std(gap) / np.mean(gap))
    ex, se = res.mean("gap_excess"), res.stderr("gap_excess")
    avg, avg_se = float(np.mean(ex)), float(math.sqrt(np.sum(se**2)) / ex.size)
    return [
        Check("fig3 THP-Q gap to perfect CSI flat", rel < max_rel_std, f"relative std {rel:.4f}"),
        Check("fig3 ZFBF gap exceeds THP gap", avg > 2 * avg_se,
              f"mean excess {avg:.3f} +- {avg_se:.3f} bits"),
    ]


def check_fig4(res, max_variation=0.1):
    out = []
    for name in res.series:
        if name.startswith("thp_q_"):
            m = res.mean(name)
            var = float((m.max() - m.min()) / m.mean())
            out.append(Check(f"fig4 {name} constant in B", var < max_variation, f"variation {var:.4f}"))
    return out


def check_scaling(res, target_K=10000):
    r = res.mean("ratio")
    K = list(res.axis)
    i = K.index(target_K) if target_K in K else len(K) - 1
    ok_band = 0.6 <= r[i] <= 1.4
    closer = abs(1 - r[i]) < abs(1 - r[0])
    return [Check("scaling ratio in [0.6, 1.4] and closer to 1 than at smallest K", ok_band and closer,
                  f"ratio {r[0]:.3f} at K={K[0]}, {r[i]:.3f} at K={K[i]}")]


def check_coverage(res, nT, target_K=10000, floor=0.8):
    K = list(res.axis)
    i = K.index(target_K) if target_K in K else len(K) - 1
    out = []
    for n in range(1, nT + 1):
        m, s = res.mean(f"coverage_n{n}"), res.stderr(f"coverage_n{n}")
        out.append(Check(f"coverage n={n} >= {floor} at K={K[i]}", bool(m[i] >= floor), f"{m[i]:.4f}"))
        inc = bool(np.all(np.isfinite(m)) and np.all(np.diff(m) > 0))
        out.append(Check(f"coverage n={n} increasing in K", inc, ", ".join(f"{v:.4f}" for v in m)))
    return out


def check_link_level(rows, tol=0.02):
    rel = np.array([abs(r["rel_error"]) for r in rows])
    return [Check("link-level measured SINR within tolerance of closed form", bool(np.all(rel < tol)),
                  f"max relative error {rel.max():.4f}")]


def check_ks(report):
    return [Check(f"ks {report.law}", report.passed,
                  f"D = {report.statistic:.5f} (threshold {report.threshold}) on {report.samples} samples")]
