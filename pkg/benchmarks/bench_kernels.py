#!/usr/bin/env python3
"""Benchmark the compiled kernels against the pure-Python fallback.

Run:  python3 benchmarks/bench_kernels.py [--reps N]
"""

import argparse
import time

import numpy as np

from spectralperc import _backend, _kernels_py
from spectralperc import lattice as L
from spectralperc import mc


def timeit(fn, *args, reps=3):
    best = float("inf")
    for _ in range(reps):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def bench(name, compiled, fallback, args, m):
    t_c, out_c = timeit(compiled, *args)
    t_p, out_p = timeit(fallback, *args, reps=1)
    same = all(
        np.array_equal(a, b)
        for a, b in zip(
            out_c if isinstance(out_c, tuple) else (out_c,),
            out_p if isinstance(out_p, tuple) else (out_p,),
        )
    )
    print(
        f"{name:<28} compiled {1e6 * t_c / m:9.1f} us/rep   "
        f"python {1e6 * t_p / m:9.1f} us/rep   "
        f"speedup {t_p / t_c:7.1f}x   agree={same}"
    )


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--rows", type=int, default=64)
    args = ap.parse_args()
    m = args.rows
    rng = mc.chunk_rng(0, 0)

    if _backend.BACKEND != "cython":
        print("compiled extension not available; nothing to compare")
        return

    f = L.rect_lr_crossing("tri", 16, 16)
    bits = L.sample_bits(f.region, rng, m)
    s = f._site_spec
    bench(
        "crossing tri 16x16",
        _backend.crossing_site_many,
        _kernels_py.crossing_site_many,
        (bits, s.indptr, s.indices, s.src, s.dst),
        m,
    )

    fb = L.rect_lr_crossing("z2", 12, 12)
    bitsb = L.sample_bits(fb.region, rng, m)
    sb = fb._bond_spec
    bench(
        "crossing z2 12x12",
        _backend.crossing_bond_many,
        _kernels_py.crossing_bond_many,
        (bitsb, sb.n_vertices, sb.vindptr, sb.vbit, sb.vother, sb.src, sb.dst),
        m,
    )

    reg = L.annulus_region("tri", 1, 16)
    bits_a = L.sample_bits(reg, rng, m)
    bench(
        "arm summary tri (1,16)",
        _backend.arm_summary_many,
        _kernels_py.arm_summary_many,
        (
            bits_a,
            reg.node_template,
            reg.bit_node,
            reg.indptr,
            reg.indices,
            reg.inner_touch,
            reg.outer_touch,
            reg.walk,
            True,
            4,
        ),
        m,
    )

    ps = f._pivotal_site
    bench(
        "pivotal count tri 16x16",
        _backend.pivotal_site_many,
        _kernels_py.pivotal_site_many,
        (bits, ps.indptr, ps.indices, ps.left, ps.right, ps.top, ps.bottom),
        m,
    )

    pb = fb._pivotal_bond
    bench(
        "pivotal count z2 12x12",
        _backend.pivotal_bond_many,
        _kernels_py.pivotal_bond_many,
        (
            bitsb,
            pb.primal.n_vertices,
            pb.primal.vindptr,
            pb.primal.vbit,
            pb.primal.vother,
            pb.primal.src,
            pb.primal.dst,
            pb.eu,
            pb.ev,
            pb.n_dual,
            pb.dindptr,
            pb.dbit,
            pb.dother,
            pb.du,
            pb.dv,
            pb.dual_top,
            pb.dual_bottom,
        ),
        m,
    )

    f9 = L.rect_lr_crossing("tri", 4, 4)
    s9 = f9._site_spec
    bench(
        "tabulate tri 4x4 (2^16)",
        _backend.tabulate_site,
        _kernels_py.tabulate_site,
        (16, s9.indptr, s9.indices, s9.src, s9.dst),
        1 << 16,
    )


if __name__ == "__main__":
    main()
