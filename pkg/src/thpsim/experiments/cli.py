"""Command-line front end: ``thpsim <subcommand> [options]``.

Every subcommand writes CSV with a header row to ``--out`` (or stdout). With
``--check`` the relevant pass/fail checks are printed to stderr and the exit
status is 1 if any fails.
"""

import argparse
import csv
import io
import logging
import sys

from ..channel import STREAM_SYMBOLS, RngStream
from ..errors import ThpError
from ..quantizer import generate_codebook, load_codebook, save_codebook
from ..thp import link_level
from . import checks
from .config import EXPERIMENTS, ExperimentConfig, load_config
from .engine import trial_csi
from .figures import run_coverage, run_fig1, run_fig2, run_fig3, run_fig4, run_scaling
from .validate import LAWS, validate_cdf

# Per-subcommand defaults applied before the config file and flags.
DEFAULTS = {
    "validate-cdf": dict(backend="cell-approx", phi=3.0, K=1000),
    "fig1": dict(K=100),
    "fig2": dict(B=8),
    "fig3": dict(backend="cell-approx", K=5000),
    "fig4": dict(),
    "scaling": dict(B=8, P_dB=15.0),
    "coverage": dict(backend="cell-approx", phi=3.0, B=8),
    "link-level": dict(trials=5),
}


def build_parser():
    parser = argparse.ArgumentParser(prog="thpsim", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int)
    common.add_argument("--trials", type=int)
    common.add_argument("--out", help="CSV output path (default: stdout)")
    common.add_argument("--backend", choices=("rvq", "cell-approx"))
    common.add_argument("--config", help="flat key=value configuration file")
    common.add_argument("--check", action="store_true", help="exit nonzero if any check fails")
    common.add_argument("--codebook", help="import a codebook and use it for every trial (rvq)")
    common.add_argument("--export-codebook", help="write the codebook in use to this path")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override one configuration key")
    common.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in EXPERIMENTS:
        p = sub.add_parser(name, parents=[common])
        if name == "validate-cdf":
            p.add_argument("--law", choices=LAWS)
            p.add_argument("--n", type=int)
            p.add_argument("--samples", type=int)
    return parser


def resolve_config(args):
    from .config import parse_config

    cfg = ExperimentConfig(name=args.command, **DEFAULTS[args.command])
    if args.config:
        cfg = load_config(args.config, cfg)
    if args.set:
        cfg = parse_config("\n".join(args.set), cfg)
    return cfg.with_overrides(
        seed=args.seed, trials=args.trials, out=args.out, backend=args.backend,
        law=getattr(args, "law", None), n=getattr(args, "n", None),
        samples=getattr(args, "samples", None),
    )


def _codebook(args, cfg):
    cb = load_codebook(args.codebook) if args.codebook else None
    if args.export_codebook:
        save_codebook(cb or generate_codebook(cfg.params, RngStream(cfg.seed), 0), args.export_codebook)
    return cb


def _write_rows(header, rows, path):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow(r)
    _emit(buf.getvalue(), path)


def _emit(text, path):
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _run_validate(cfg):
    rep = validate_cdf(cfg.params, cfg.law, samples=cfg.samples, seed=cfg.seed, n=cfg.n,
                       backend=cfg.backend)
    header = ["law", "n", "samples", "statistic", "support_lo", "support_hi", "threshold", "passed"]
    row = [rep.law, cfg.n, rep.samples, f"{rep.statistic:.6g}", f"{rep.support[0]:.6g}",
           f"{rep.support[1]:.6g}", rep.threshold, int(rep.passed)]
    _write_rows(header, [row], cfg.out)
    return checks.check_ks(rep)


def _run_link_level(cfg, codebook):
    from ..scheduler import greedy_select

    p = cfg.params
    rows = []
    for t in range(cfg.trials):
        csi, _ = trial_csi(p, cfg.seed, t, cfg.backend, codebook=codebook)
        sched = greedy_select(csi, p)
        gen = RngStream(cfg.seed, STREAM_SYMBOLS).generator(t)
        rep = link_level(sched, csi, p, cfg.symbols, gen)
        for k, u in enumerate(sched.users):
            rows.append(dict(trial=t, position=k, user=u, predicted_sinr=rep.predicted_sinr[k],
                             measured_sinr=rep.measured_sinr[k],
                             rel_error=rep.measured_sinr[k] / rep.predicted_sinr[k] - 1.0,
                             ser=rep.ser, tx_power=rep.tx_power[k]))
    header = list(rows[0])
    _write_rows(header, [[f"{v:.6g}" if isinstance(v, float) else v for v in r.values()] for r in rows], cfg.out)
    return checks.check_link_level(rows)


def run(args):
    cfg = resolve_config(args)
    codebook = _codebook(args, cfg)
    if codebook is not None:
        cfg = cfg.with_overrides(B=codebook.B, nT=codebook.nT)
    cmd = args.command
    if cmd == "validate-cdf":
        return _run_validate(cfg)
    if cmd == "link-level":
        return _run_link_level(cfg, codebook)
    runner = {"fig1": run_fig1, "fig2": run_fig2, "fig3": run_fig3, "fig4": run_fig4,
              "scaling": run_scaling, "coverage": run_coverage}[cmd]
    res = runner(cfg, codebook=codebook)
    _emit(res.to_csv(), cfg.out)
    if cmd == "fig1":
        return checks.check_fig1(res, cfg.B_list or (8, 12))
    if cmd == "fig2":
        return checks.check_fig2(res, (cfg.B_list or (cfg.B,))[0])
    if cmd == "fig3":
        return checks.check_fig3(res)
    if cmd == "fig4":
        return checks.check_fig4(res)
    if cmd == "scaling":
        return checks.check_scaling(res)
    return checks.check_coverage(res, cfg.nT)


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        results = run(args)
    except ThpError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.check:
        for c in results:
            print(c.line(), file=sys.stderr)
        return 0 if all(c.passed for c in results) else 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
