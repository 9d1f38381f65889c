"""Time the numba and numpy decode kernels on identical batches.

    python3 benchmarks/bench_kernels.py --q 16 --N 15 --K 11 --pi 0.1 --batch 32768
"""

import argparse
import time

import numpy as np

from erasure_lab import _kernels
from erasure_lab._jit import HAVE_NUMBA
from erasure_lab.codecs import CodeParams, rs_code
from erasure_lab.galois import field_of_order


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--q", type=int, default=16)
    ap.add_argument("--N", type=int, default=15)
    ap.add_argument("--K", type=int, default=11)
    ap.add_argument("--pi", type=float, default=0.1)
    ap.add_argument("--batch", type=int, default=1 << 15)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--random-generator", action="store_true",
                    help="one random generator per trial instead of a shared RS generator")
    args = ap.parse_args(argv)

    F = field_of_order(args.q)
    rng = np.random.default_rng(0)
    if args.random_generator:
        G = F.sample_uniform(rng, (args.batch, args.K, args.N))
    else:
        G = rs_code(CodeParams(args.N, args.K, F)).generator.entries
    msgs = F.sample_uniform(rng, (args.batch, args.K))
    erased = rng.random((args.batch, args.N)) < args.pi

    backends = ["numpy"] + (["numba"] if HAVE_NUMBA else [])
    if HAVE_NUMBA:
        # compile outside the timed region
        g2 = G if G.ndim == 2 else G[:2]
        w2 = _kernels.encode_batch(F, msgs[:2], g2, "numba")
        _kernels.solve_batch(F, g2, w2, erased[:2], "numba")

    results = {}
    print(f"GF({args.q}) [{args.N},{args.K}] pi={args.pi} batch={args.batch}")
    for b in backends:
        t_enc, words = best_of(lambda: _kernels.encode_batch(F, msgs, G, b), args.repeat)
        y = np.where(erased, 0, words)
        t_dec, res = best_of(lambda: _kernels.solve_batch(F, G, y, erased, b), args.repeat)
        results[b] = (words, res)
        rate = args.batch / t_dec
        print(f"  {b:6s} encode {t_enc * 1e3:9.2f} ms   decode {t_dec * 1e3:9.2f} ms"
              f"   ({rate:,.0f} decodes/s)")
    if len(results) == 2:
        (w0, r0), (w1, r1) = results["numpy"], results["numba"]
        same = np.array_equal(w0, w1) and all(np.array_equal(a, c) for a, c in zip(r0, r1))
        print(f"  outputs identical: {same}")


if __name__ == "__main__":
    main()
