"""Multi-arm events in box annuli and Monte Carlo estimation of their
probabilities.

The j-arm event asks for j disjoint monochromatic paths joining the two
boundary components of the annulus whose colors, in circular order, alternate
white/black (even j) or alternate with one additional white arm (odd j).
Half-plane and quarter-plane variants clip the annulus; their arms are
ordered linearly along the boundary and odd patterns must be white-ended.

Detection labels the clusters that cross the annulus, reads their color word
along the inner boundary walk and reduces the event to properties of that
word: for even j the event holds iff the cyclic word has at least j color
changes; for odd j = 2k+1 it holds iff there are at least 2k+2 changes, or
exactly 2k changes and either two white clusters share a run or one white
cluster carries two node-disjoint crossings.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import _backend as K
from . import mc
from .lattice import ClipKind, annulus_region, sample_bits

GEOMETRIES = {
    "full": ClipKind.FULL,
    "half-plane": ClipKind.HALF,
    "quarter-plane": ClipKind.QUARTER,
}


@dataclass(frozen=True)
class ArmSpec:
    """An annulus arm event: geometry, radii, arm count."""

    lattice: str
    j: int
    r: float
    R: float
    geometry: str = "full"

    def __post_init__(self):
        if self.j < 1:
            raise ValueError("arm count must be >= 1")
        if self.geometry not in GEOMETRIES:
            raise ValueError(f"unknown geometry {self.geometry!r}")

    @property
    def degenerate(self):
        return self.r >= self.R

    def region(self):
        return cached_region(self.lattice, self.r, self.R, self.geometry)


@lru_cache(maxsize=32)
def cached_region(lattice, r, R, geometry="full"):
    return annulus_region(lattice, r, R, GEOMETRIES[geometry])


def pattern_length(j):
    """Arms in the required color pattern: (whites, blacks)."""
    return (j // 2 + j % 2, j // 2)


def _summaries(region, bits, mult_cc):
    cyclic = region.clip is ClipKind.FULL
    return K.arm_summary_many(
        np.ascontiguousarray(bits, dtype=np.int8),
        region.node_template,
        region.bit_node,
        region.indptr,
        region.indices,
        region.inner_touch,
        region.outer_touch,
        region.walk,
        cyclic,
        mult_cc,
    )


def _mult_cc_for(j, cyclic):
    if cyclic and j >= 3 and j % 2 == 1:
        return j - 1
    return 0


def events_from_summary(summary, wmult, j, cyclic):
    """Vector of 0/1 event indicators for arm count j."""
    n_w = summary[:, 0]
    cc = summary[:, 2]
    if j == 1:
        return (n_w >= 1).astype(np.uint8)
    if cyclic:
        if j % 2 == 0:
            return (cc >= j).astype(np.uint8)
        k2 = j - 1
        max_w_run = summary[:, 3]
        ok = (cc >= k2 + 2) | ((cc == k2) & ((max_w_run >= 2) | (wmult > 0)))
        return ok.astype(np.uint8)
    runs = summary[:, 2]
    if j % 2 == 0:
        return (runs >= j).astype(np.uint8)
    first = summary[:, 4]
    last = summary[:, 5]
    white_runs = runs - (first < 0).astype(np.int32) - (last < 0).astype(np.int32)
    return (white_runs >= j).astype(np.uint8)


def detect_arm_events_many(region, bits, j):
    cyclic = region.clip is ClipKind.FULL
    summary, wmult = _summaries(region, bits, _mult_cc_for(j, cyclic))
    return events_from_summary(summary, wmult, j, cyclic)


def detect_arm_event(omega, spec):
    """Does the configuration contain the alternating j-arm pattern?

    ``omega`` must live on the annulus region of the spec (see
    ``ArmSpec.region``).
    """
    if spec.degenerate:
        return True
    region = omega.region
    expected = spec.region().describe()
    if region.describe() != expected:
        raise ValueError("configuration region does not match the arm spec")
    return bool(detect_arm_events_many(region, omega.bits[None, :], spec.j)[0])


# --------------------------------------------------------------------------
# Estimators.
# --------------------------------------------------------------------------


def _alpha_chunk(args):
    (lattice, geometry, r, R, js, seed, ci, m) = args
    region = cached_region(lattice, r, R, geometry)
    rng = mc.chunk_rng(seed, ci)
    bits = sample_bits(region, rng, m)
    cyclic = region.clip is ClipKind.FULL
    mult_cc = 0
    for j in js:
        mult_cc = max(mult_cc, _mult_cc_for(j, cyclic))
    # A single mult_cc serves one odd j; when several odd j >= 3 are
    # requested, resolve them one at a time.
    odd_big = [j for j in js if j >= 3 and j % 2 == 1]
    if cyclic and len(odd_big) > 1:
        hits = []
        for j in js:
            summary, wmult = _summaries(region, bits, _mult_cc_for(j, cyclic))
            hits.append(int(events_from_summary(summary, wmult, j, cyclic).sum()))
        return hits
    summary, wmult = _summaries(region, bits, mult_cc)
    return [int(events_from_summary(summary, wmult, j, cyclic).sum()) for j in js]


def estimate_alpha_multi(lattice, js, r, R, n_samples, seed, geometry="full"):
    """Joint Bernoulli estimates of several arm counts on shared replicas."""
    js = list(js)
    for j in js:
        ArmSpec(lattice, j, r, R, geometry)  # validate
    if r >= R:
        return {j: mc.Estimate(1.0, 0.0, 0, seed) for j in js}
    with mc.Stopwatch() as sw:
        sizes = mc.chunk_sizes(n_samples)
        args = [
            (lattice, geometry, r, R, tuple(js), seed, ci, m)
            for ci, m in enumerate(sizes)
        ]
        partials = mc.map_chunks(_alpha_chunk, args)
    totals = [sum(p[k] for p in partials) for k in range(len(js))]
    return {
        j: mc.bernoulli_estimate(h, n_samples, seed, sw.ms) for j, h in zip(js, totals)
    }


def estimate_alpha(spec, n_samples, seed):
    """Monte Carlo estimate of the arm probability of ``spec``."""
    if spec.degenerate:
        return mc.Estimate(1.0, 0.0, 0, seed)
    return estimate_alpha_multi(
        spec.lattice, [spec.j], spec.r, spec.R, n_samples, seed, spec.geometry
    )[spec.j]


def alpha_shorthand_radii(j):
    """Inner radius of the one-argument arm probability (2j)."""
    return 2 * j


def quasimult_report(lattice, j, radii, n_samples, seed, geometry="full"):
    """Gluing diagnostic across a radius triple r1 < r2 < r3.

    Reports both orientations of the three-scale comparison: the measured
    constant ``product_over_direct`` = a(r1,r2) a(r2,r3) / a(r1,r3) (>= 1 up
    to noise, by independence on disjoint annuli) and its reciprocal
    ``direct_over_product`` (in [1/C, 1]).
    """
    r1, r2, r3 = radii
    if not (r1 <= r2 <= r3):
        raise ValueError("radii must be ordered")
    e12 = estimate_alpha(ArmSpec(lattice, j, r1, r2, geometry), n_samples, seed)
    e23 = estimate_alpha(ArmSpec(lattice, j, r2, r3, geometry), n_samples, seed + 1)
    # Degenerate triples collapse exactly: reuse the matching estimate.
    if r2 == r3:
        e13 = e12
    elif r1 == r2:
        e13 = e23
    else:
        e13 = estimate_alpha(ArmSpec(lattice, j, r1, r3, geometry), n_samples, seed + 2)
    if e13.value == 0 or e12.value == 0 or e23.value == 0:
        raise ZeroDivisionError("zero arm estimate in quasi-multiplicativity ratio")
    prod = e12.value * e23.value
    rel = 0.0
    for e in (e12, e23, e13):
        rel += (e.stderr / e.value) ** 2
    product_over_direct = prod / e13.value
    return {
        "j": j,
        "radii": (r1, r2, r3),
        "alpha_12": e12,
        "alpha_23": e23,
        "alpha_13": e13,
        "product_over_direct": product_over_direct,
        "direct_over_product": 1.0 / product_over_direct,
        "ratio_stderr": product_over_direct * math.sqrt(rel),
        "n": n_samples,
        "seed": seed,
    }


def beffara_check(lattice, r, R_values, n_samples, seed):
    """Ratio a5 / (a1 a4) at fixed inner radius over growing outer radii.

    The check is that the sequence is non-increasing within error bars.
    """
    rows = []
    for i, R in enumerate(R_values):
        est = estimate_alpha_multi(lattice, [1, 4, 5], r, R, n_samples, seed + i)
        a1, a4, a5 = est[1], est[4], est[5]
        if a1.value == 0 or a4.value == 0 or a5.value == 0:
            raise ZeroDivisionError(f"zero arm estimate at R={R}")
        ratio = a5.value / (a1.value * a4.value)
        rel = sum((e.stderr / e.value) ** 2 for e in (a1, a4, a5))
        rows.append(
            {
                "R": R,
                "alpha1": a1,
                "alpha4": a4,
                "alpha5": a5,
                "ratio": ratio,
                "ratio_stderr": ratio * math.sqrt(rel),
            }
        )
    non_increasing = all(
        rows[i + 1]["ratio"]
        <= rows[i]["ratio"]
        + 3.0 * math.hypot(rows[i]["ratio_stderr"], rows[i + 1]["ratio_stderr"])
        for i in range(len(rows) - 1)
    )
    return {"r": r, "rows": rows, "non_increasing_3sigma": non_increasing}


def log_log_slope(xs, ys, y_stderr=None):
    """Least-squares slope of log y against log x, with its standard error."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if len(xs) < 3:
        raise ValueError("need at least 3 points for a slope fit")
    lx = np.log(xs)
    ly = np.log(ys)
    A = np.column_stack([lx, np.ones_like(lx)])
    coef, res, *_ = np.linalg.lstsq(A, ly, rcond=None)
    slope, intercept = coef
    dof = len(xs) - 2
    if dof > 0 and len(res):
        s2 = res[0] / dof
        sxx = ((lx - lx.mean()) ** 2).sum()
        slope_err = math.sqrt(s2 / sxx) if sxx > 0 else float("inf")
    else:
        slope_err = 0.0
    return {"slope": float(slope), "intercept": float(intercept), "stderr": slope_err}
