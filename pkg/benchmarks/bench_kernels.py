"""Compare the compiled greedy kernel with the numpy fallback.

Usage: ``python3 benchmarks/bench_kernels.py [--trials T] [--users K] [--repeat R]``
"""

import argparse
import timeit

import numpy as np

from thpsim import _kernels
from thpsim.channel import SystemParams
from thpsim.quantizer import cell_approx_batch


def make_inputs(trials, K, nT, seed=0):
    p = SystemParams.from_phi(K=K, nT=nT, B=8, phi=3.0)
    gen = np.random.default_rng(seed)
    batches = [cell_approx_batch(p, gen) for _ in range(trials)]
    hhat = np.stack([b.hhat for b in batches])
    num = np.stack([p.phi * b.rho2 * b.cos2 for b in batches])
    den = np.stack([p.phi * b.rho2 * b.sin2 + 1.0 for b in batches])
    return hhat, num, den


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--trials", type=int, default=256)
    ap.add_argument("--nT", type=int, default=4)
    ap.add_argument("--users", type=int, nargs="+", default=[10, 100, 1000])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    impls = {"python": _kernels.fallback_greedy_batch}
    if _kernels.compiled_greedy_batch is not None:
        impls["cython"] = _kernels.compiled_greedy_batch
    print("K,trials," + ",".join(f"{k}_ms" for k in impls) + (",speedup" if len(impls) == 2 else ""))
    for K in args.users:
        hhat, num, den = make_inputs(args.trials, K, args.nT)
        ref = None
        times = {}
        for name, fn in impls.items():
            out = fn(hhat, num, den, 1e-12)
            if ref is None:
                ref = out
            elif not np.array_equal(ref[0], out[0]):
                raise SystemExit(f"{name} disagrees with the fallback at K={K}")
            best = min(timeit.repeat(lambda: fn(hhat, num, den, 1e-12), number=1, repeat=args.repeat))
            times[name] = 1e3 * best
        row = [str(K), str(args.trials)] + [f"{t:.3f}" for t in times.values()]
        if len(times) == 2:
            row.append(f"{times['python'] / times['cython']:.2f}")
        print(",".join(row))


if __name__ == "__main__":
    main()
