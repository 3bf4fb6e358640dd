#!/usr/bin/env python3
"""Compare the compiled sweep kernels against the pure-numpy fallback.

Times the fused forward/backward block reductions on a homogeneous matrix
and on a seeded block matrix, reports per-sweep wall time, the agreement
between backends, and the matrix memory each backend touches (the numpy
fallback also stores the squared blocks).

Usage: python benchmarks/bench_kernels.py [--n 20000] [--reps 5]
"""

import argparse
import time

import numpy as np

from gampcs import kernels
from gampcs.measure import BlockMatrix, SeedingProfile, homogeneous_matrix, seeded_matrix


def _time(fn, *args, reps):
    best = float("inf")
    for _ in range(reps):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def bench(label, mat, reps):
    m, n = mat.shape
    rng = np.random.default_rng(0)
    v, a = rng.random(n) + 0.1, rng.standard_normal(n)
    g, w = rng.standard_normal(m), rng.random(m) + 0.1
    nnz = sum(blk.size for _, _, blk in mat.blocks)

    have_compiled = kernels._compiled is not None
    pairs = [("numpy", kernels.forward_numpy, kernels.backward_numpy)]
    if have_compiled:
        pairs.insert(0, ("compiled", kernels.forward_compiled,
                         kernels.backward_compiled))

    print(f"\n{label}: {m} x {n}, {nnz:.2e} stored entries "
          f"({nnz * 8 / 1e9:.2f} GB; numpy fallback doubles this)")
    results = {}
    for name, fwd, bwd in pairs:
        fwd(mat, v, a)  # warm-up (numpy: builds the squared-block cache)
        t_f = _time(fwd, mat, v, a, reps=reps)
        t_b = _time(bwd, mat, g, w, reps=reps)
        results[name] = (fwd(mat, v, a), bwd(mat, g, w))
        print(f"  {name:9s} forward {t_f * 1e3:8.1f} ms   "
              f"backward {t_b * 1e3:8.1f} ms   sweep {(t_f + t_b) * 1e3:8.1f} ms")
    if have_compiled:
        (Vc, Uc), (Tc, Sc) = results["compiled"]
        (Vn, Un), (Tn, Sn) = results["numpy"]
        worst = max(
            float(np.max(np.abs(x - y) / (np.abs(y) + 1e-300)))
            for x, y in [(Vc, Vn), (Uc, Un), (Tc, Tn), (Sc, Sn)]
        )
        print(f"  backend agreement: worst relative difference {worst:.2e}")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=20_000, help="signal dimension")
    ap.add_argument("--reps", type=int, default=5)
    args = ap.parse_args()

    print(f"active backend: {kernels.backend_name()}")

    n = args.n
    F = homogeneous_matrix(round(0.4 * n), n, seed=1)
    bench("homogeneous (alpha=0.4)", BlockMatrix.wrap(F), args.reps)

    prof = SeedingProfile(Lc=20, Lr=21, alpha_seed=0.4, alpha_bulk=0.29,
                          J=0.2, W=3)
    n_seeded = n - (n % prof.Lc)
    mat, _ = seeded_matrix(prof, n_seeded, seed=1)
    bench("seeded (Lc=20 blue profile)", mat, args.reps)


if __name__ == "__main__":
    main()
