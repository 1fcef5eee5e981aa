"""Monte Carlo plumbing: estimates, mergeable accumulators, seed streams.

Replicas are processed in fixed-size chunks with per-chunk derived seeds;
partial results merge associatively in chunk order, so worker count never
changes the numbers.
"""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

CHUNK = 1024
WORKERS_ENV = "SPECTRAL_PERC_WORKERS"


def chunk_rng(seed, chunk_index):
    """Counter-style derived stream: (master seed, chunk index) -> Generator."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(chunk_index),))
    return np.random.Generator(np.random.Philox(ss))


def chunk_sizes(n, chunk=CHUNK):
    sizes = [chunk] * (n // chunk)
    if n % chunk:
        sizes.append(n % chunk)
    return sizes


def worker_count():
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def map_chunks(fn, args_list):
    """Apply ``fn`` over per-chunk argument tuples; merge order is fixed by
    chunk index regardless of worker count."""
    workers = worker_count()
    if workers == 1 or len(args_list) <= 1:
        return [fn(a) for a in args_list]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, args_list, chunksize=1))


@dataclass
class Estimate:
    """A Monte Carlo result."""

    value: float
    stderr: float
    n: int
    seed: int
    wall_ms: int = 0

    def interval(self, k=4.0):
        return (self.value - k * self.stderr, self.value + k * self.stderr)


def bernoulli_estimate(hits, n, seed, wall_ms=0):
    p = hits / n
    return Estimate(p, math.sqrt(max(p * (1.0 - p), 0.0) / n), n, seed, wall_ms)


def mean_estimate(total, total_sq, n, seed, wall_ms=0):
    mean = total / n
    var = max(total_sq / n - mean * mean, 0.0)
    return Estimate(mean, math.sqrt(var / n), n, seed, wall_ms)


def ratio_stderr(num, den):
    """Std error of num.value/den.value by independent first-order propagation."""
    if num.value == 0 or den.value == 0:
        return float("inf")
    r = num.value / den.value
    rel = (num.stderr / num.value) ** 2 + (den.stderr / den.value) ** 2
    return abs(r) * math.sqrt(rel)


def wilson_interval(hits, n, z=2.0):
    """Wilson score interval for a binomial proportion."""
    if n == 0:
        return (0.0, 1.0)
    p = hits / n
    denom = 1 + z * z / n
    center = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    return (center - half, center + half)


class Stopwatch:
    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.ms = int(1000 * (time.perf_counter() - self.t0))
        return False
