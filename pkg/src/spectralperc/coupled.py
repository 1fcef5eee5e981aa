"""Coupled configuration pairs: equal outside a resample set W, independent
on W.  Pairing two such configurations estimates second moments of
conditional expectations, which is how every "S avoids W" spectral quantity
is measured at Monte Carlo scale.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import boolfn as B
from . import mc
from .arms import cached_region, detect_arm_events_many
from .lattice import (
    Configuration,
    radial_crossing,
    rect_lr_crossing,
    sample_bits,
)


def as_flag(which, n):
    """Normalize a bit subset (int mask, index list or bool array) to a bool array."""
    if isinstance(which, (int, np.integer)):
        m = int(which)
        return np.array([(m >> b) & 1 == 1 for b in range(n)], dtype=bool)
    a = np.asarray(which)
    if a.dtype == bool:
        if a.shape != (n,):
            raise ValueError("flag length mismatch")
        return a.copy()
    flags = np.zeros(n, dtype=bool)
    flags[a.astype(np.int64)] = True
    return flags


def as_mask(which, n):
    flags = as_flag(which, n)
    m = 0
    for b in np.nonzero(flags)[0]:
        m |= 1 << int(b)
    return m


@dataclass
class CoupledPair:
    region: object
    w_flags: np.ndarray
    omega_prime: Configuration
    omega_second: Configuration


def sample_coupled(region, W, seed):
    """One coupled pair: shared fair bits off W, independent fair bits on W."""
    n = region.bit_count
    w = as_flag(W, n)
    rng = mc.chunk_rng(seed, 0)
    shared = sample_bits(n, rng, 1)[0]
    fill_a = sample_bits(n, rng, 1)[0]
    fill_b = sample_bits(n, rng, 1)[0]
    a = np.where(w, fill_a, shared)
    b = np.where(w, fill_b, shared)
    return CoupledPair(region, w, Configuration(region, a), Configuration(region, b))


# --------------------------------------------------------------------------
# Rebuildable function specs so chunks can run in worker processes.
# --------------------------------------------------------------------------


@lru_cache(maxsize=64)
def _build_function(spec):
    kind = spec[0]
    if kind == "rect":
        _, lattice, w, h, mode = spec
        return rect_lr_crossing(lattice, w, h, mode)
    if kind == "radial":
        _, lattice, r, R, mode = spec
        return radial_crossing(lattice, r, R, mode)
    raise ValueError(f"unknown function spec {spec!r}")


def function_spec(f):
    return getattr(f, "factory_spec", None)


def _eval_chunks(f, worker, args_list):
    """Run chunk workers, in-process when the function is not rebuildable."""
    if args_list and args_list[0][0] is None:
        return [worker(a, f) for a in args_list]
    return mc.map_chunks(worker, args_list)


# --------------------------------------------------------------------------
# Q[S subseteq A] via E[f(w') f(w'')].
# --------------------------------------------------------------------------


def _coupled_pair_bits(rng, n, w_flags, m):
    shared = sample_bits(n, rng, m)
    fa = sample_bits(n, rng, m)
    fb = sample_bits(n, rng, m)
    a = np.where(w_flags[None, :], fa, shared)
    b = np.where(w_flags[None, :], fb, shared)
    return a, b


def _subset_chunk(args, f=None):
    spec, w_bytes, n, seed, ci, m = args
    if f is None:
        f = _build_function(spec)
    w = np.frombuffer(w_bytes, dtype=bool)
    rng = mc.chunk_rng(seed, ci)
    a, b = _coupled_pair_bits(rng, n, w, m)
    va = f.evaluate_many(a).astype(np.int64)
    vb = f.evaluate_many(b).astype(np.int64)
    prod = va * vb
    return int(prod.sum()), int((prod * prod).sum())


def estimate_S_subset(f, A, n_samples, seed):
    """Monte Carlo estimate of the unnormalized weight of {S subseteq A}."""
    n = f.region.bit_count
    w = ~as_flag(A, n)
    with mc.Stopwatch() as sw:
        args = [
            (function_spec(f), w.tobytes(), n, seed, ci, m)
            for ci, m in enumerate(mc.chunk_sizes(n_samples))
        ]
        parts = _eval_chunks(f, _subset_chunk, args)
    total = sum(p[0] for p in parts)
    total_sq = sum(p[1] for p in parts)
    return mc.mean_estimate(total, total_sq, n_samples, seed, sw.ms)


def _sba_chunk(args, f=None):
    spec, b_bytes, w_bytes, n, seed, ci, m = args
    if f is None:
        f = _build_function(spec)
    bf = np.frombuffer(b_bytes, dtype=bool)
    wf = np.frombuffer(w_bytes, dtype=bool)
    rng = mc.chunk_rng(seed, ci)
    shared = sample_bits(n, rng, m)
    fa = sample_bits(n, rng, m)
    fb = sample_bits(n, rng, m)
    ba = sample_bits(n, rng, m)
    bb = sample_bits(n, rng, m)
    w_only = wf[None, :]
    wb = (wf | bf)[None, :]
    a1 = np.where(w_only, fa, shared)
    b1 = np.where(w_only, fb, shared)
    a2 = np.where(bf[None, :], ba, a1)
    b2 = np.where(bf[None, :], bb, b1)
    p1 = f.evaluate_many(a1).astype(np.int64) * f.evaluate_many(b1).astype(np.int64)
    p2 = f.evaluate_many(a2).astype(np.int64) * f.evaluate_many(b2).astype(np.int64)
    d = p1 - p2
    return int(d.sum()), int((d * d).sum())


def estimate_S_hits_B_avoids_W(f, Bset, W, n_samples, seed):
    """Paired-difference estimate of the weight of {S meets B, S misses W}.

    Both subset terms ride the same shared randomness outside W u B, so the
    small difference is estimated directly.
    """
    n = f.region.bit_count
    bf = as_flag(Bset, n)
    wf = as_flag(W, n)
    if (bf & wf).any():
        raise ValueError("B and W must be disjoint")
    with mc.Stopwatch() as sw:
        args = [
            (function_spec(f), bf.tobytes(), wf.tobytes(), n, seed, ci, m)
            for ci, m in enumerate(mc.chunk_sizes(n_samples))
        ]
        parts = _eval_chunks(f, _sba_chunk, args)
    total = sum(p[0] for p in parts)
    total_sq = sum(p[1] for p in parts)
    return mc.mean_estimate(total, total_sq, n_samples, seed, sw.ms)


# --------------------------------------------------------------------------
# E[lambda_{B,W}^2]: both coupled configurations make the box pivotal.
# --------------------------------------------------------------------------


def _box_pivotal_many(f, bits, box_flags):
    up = bits.copy()
    dn = bits.copy()
    up[:, box_flags] = 1
    dn[:, box_flags] = -1
    return f.evaluate_many(up) != f.evaluate_many(dn)


def _lambda_chunk(args, f=None):
    spec, b_bytes, w_bytes, n, seed, ci, m = args
    if f is None:
        f = _build_function(spec)
    bf = np.frombuffer(b_bytes, dtype=bool)
    wf = np.frombuffer(w_bytes, dtype=bool)
    rng = mc.chunk_rng(seed, ci)
    a, b = _coupled_pair_bits(rng, n, wf, m)
    both = _box_pivotal_many(f, a, bf) & _box_pivotal_many(f, b, bf)
    return int(both.sum())


def estimate_lambda_sq(f, Bset, W, n_samples, seed):
    """P[both coupled configurations have the box pivotal] = E[lambda^2]."""
    if not f.monotone:
        raise ValueError("box pivotality requires a monotone function")
    n = f.region.bit_count
    bf = as_flag(Bset, n)
    wf = as_flag(W, n)
    if (bf & wf).any():
        raise ValueError("B and W must be disjoint")
    if not bf.any():
        raise ValueError("B must be nonempty")
    with mc.Stopwatch() as sw:
        args = [
            (function_spec(f), bf.tobytes(), wf.tobytes(), n, seed, ci, m)
            for ci, m in enumerate(mc.chunk_sizes(n_samples))
        ]
        parts = _eval_chunks(f, _lambda_chunk, args)
    hits = sum(parts)
    return mc.bernoulli_estimate(hits, n_samples, seed, sw.ms)


def lambda_sq_exact(table, Bset, W):
    """E[lambda_{B,W}^2] by enumeration: condition the box-pivotality
    indicator on the bits off W, square, average."""
    n = table.n
    Bm = as_mask(Bset, n)
    Wm = as_mask(W, n)
    if Bm & Wm:
        raise ValueError("B and W must be disjoint")
    idx = np.arange(1 << n, dtype=np.int64)
    lam_ind = (table.values[idx | Bm] != table.values[idx & ~Bm]).astype(np.float64)
    w_bits = [b for b in range(n) if (Wm >> b) & 1]
    wc_bits = [b for b in range(n) if not (Wm >> b) & 1]
    idx_w = B._scatter_index(w_bits, len(w_bits))
    idx_wc = B._scatter_index(wc_bits, n - len(w_bits))
    lam = lam_ind[idx_wc[:, None] | idx_w[None, :]].mean(axis=1)
    return float((lam**2).mean())


def x_in_S_avoids_W_exact(dist, x, W):
    """Weight of {x in S, S misses W}."""
    n = dist.n
    Wm = as_mask(W, n)
    masks = np.arange(1 << n, dtype=np.int64)
    sel = (((masks >> x) & 1) == 1) & ((masks & Wm) == 0)
    return float(dist.weights[sel].sum())


# --------------------------------------------------------------------------
# beta_j^W: both coupled configurations satisfy the j-arm event.
# --------------------------------------------------------------------------


def _beta_chunk(args):
    lattice, geometry, j, r, R, w_bytes, seed, ci, m = args
    region = cached_region(lattice, r, R, geometry)
    wf = np.frombuffer(w_bytes, dtype=bool)
    rng = mc.chunk_rng(seed, ci)
    a, b = _coupled_pair_bits(rng, region.bit_count, wf, m)
    ea = detect_arm_events_many(region, a, j)
    eb = detect_arm_events_many(region, b, j)
    return int((ea & eb).sum())


def estimate_beta(lattice, j, W, r, R, n_samples, seed, geometry="full"):
    """P[both coupled configurations have the alternating j-arm event]."""
    if r >= R:
        return mc.Estimate(1.0, 0.0, 0, seed)
    region = cached_region(lattice, r, R, geometry)
    wf = as_flag(W, region.bit_count)
    with mc.Stopwatch() as sw:
        args = [
            (lattice, geometry, j, r, R, wf.tobytes(), seed, ci, m)
            for ci, m in enumerate(mc.chunk_sizes(n_samples))
        ]
        parts = mc.map_chunks(_beta_chunk, args)
    return mc.bernoulli_estimate(sum(parts), n_samples, seed, sw.ms)


def beta_both_events_chunked(lattice, j, W, radii_pairs, n_samples, seed):
    """Per-replica coupled arm events at several radii on one annulus family.

    Returns an (n_samples, len(radii_pairs)) uint8 matrix of both-config
    event indicators, sharing the outermost annulus configuration so that
    per-replica inclusion checks are exact.
    """
    R_max = max(R for _, R in radii_pairs)
    r_min = min(r for r, _ in radii_pairs)
    big = cached_region(lattice, r_min, R_max)
    wf = as_flag(W, big.bit_count)
    regions = [cached_region(lattice, r, R) for r, R in radii_pairs]
    # Map each sub-annulus bit to its bit in the big annulus via coordinates.
    maps = []
    for reg in regions:
        maps.append(_bit_map(reg, big))
    out = np.zeros((n_samples, len(radii_pairs)), dtype=np.uint8)
    row = 0
    for ci, m in enumerate(mc.chunk_sizes(n_samples)):
        rng = mc.chunk_rng(seed, ci)
        a, b = _coupled_pair_bits(rng, big.bit_count, wf, m)
        for k, (reg, mp) in enumerate(zip(regions, maps)):
            ea = detect_arm_events_many(reg, np.ascontiguousarray(a[:, mp]), j)
            eb = detect_arm_events_many(reg, np.ascontiguousarray(b[:, mp]), j)
            out[row : row + m, k] = ea & eb
        row += m
    return out


def _bit_map(sub, big):
    """Indices in ``big`` of each bit of ``sub`` (matched by tile center)."""
    key = {(round(x, 6), round(y, 6)): i for i, (x, y) in enumerate(big.centers)}
    out = np.empty(sub.bit_count, dtype=np.int64)
    for i, (x, y) in enumerate(sub.centers):
        out[i] = key[(round(x, 6), round(y, 6))]
    return out


# --------------------------------------------------------------------------
# Box windows and the thinning experiment.
# --------------------------------------------------------------------------


def box_bits(region, center, radius):
    """Bits whose tile centers fall in center + [-radius, radius)^2."""
    cx, cy = center
    x = region.centers[:, 0] - cx
    y = region.centers[:, 1] - cy
    sel = (x >= -radius) & (x < radius) & (y >= -radius) & (y < radius)
    return np.nonzero(sel)[0]


@dataclass
class BoxWindow:
    """A box B with its concentric third-radius core B' and a resample set W
    disjoint from B."""

    region: object
    center: tuple
    radius: float
    W: object = 0

    def __post_init__(self):
        n = self.region.bit_count
        self.B = box_bits(self.region, self.center, self.radius)
        self.B_prime = box_bits(self.region, self.center, self.radius / 3.0)
        self.w_flags = as_flag(self.W, n)
        if self.w_flags[self.B].any():
            raise ValueError("W must be disjoint from B")

    def b_mask(self):
        return as_mask(self.B, self.region.bit_count)

    def bp_mask(self):
        return as_mask(self.B_prime, self.region.bit_count)

    def w_mask(self):
        return as_mask(self.w_flags, self.region.bit_count)


def thinning_experiment(dist, window, density, n_draws, seed, emit=None):
    """Empirical conditional probability that an independent thinning set
    meets S inside the core box, given that S meets B and misses W.

    S is drawn exactly from the spectral measure; the thinning set hits
    |S /\\ B'| tiles with a Binomial(|S /\\ B'|, density) count.
    Returns the estimate with a Wilson interval, the exact summation value,
    and an inconclusive flag when the conditioning event has < 100 hits.
    """
    if not 0.0 <= density <= 1.0:
        raise ValueError("density must be a probability")
    n = dist.n
    Bm = window.b_mask()
    Bpm = window.bp_mask()
    Wm = window.w_mask()
    pc = B.popcounts(n)

    masks = B.sample_spectral(dist, seed, n_draws)
    if np.isscalar(masks) or isinstance(masks, B.SpectralDraw):
        masks = np.array([masks.subset])
    cond = ((masks & Bm) != 0) & ((masks & Wm) == 0)
    k_core = pc[masks & Bpm]
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed + 1)))
    z_hits = rng.binomial(k_core, density)
    hit = cond & (z_hits > 0)
    n_cond = int(cond.sum())
    n_hit = int(hit.sum())
    value = n_hit / n_cond if n_cond else float("nan")
    lo, hi = mc.wilson_interval(n_hit, n_cond) if n_cond else (0.0, 1.0)

    w = dist.weights
    allm = np.arange(1 << n, dtype=np.int64)
    csel = ((allm & Bm) != 0) & ((allm & Wm) == 0)
    denom = float(w[csel].sum())
    if denom == 0:
        raise ZeroDivisionError("conditioning event has zero spectral mass")
    kc = pc[allm & Bpm]
    num = float((w * csel * (1.0 - (1.0 - density) ** kc)).sum())
    exact = num / denom

    if emit is not None:
        k_in_b = pc[masks & Bm]
        for i in range(len(masks)):
            emit(
                {
                    "s_in_B": int(k_in_b[i]),
                    "s_in_Bprime_in_Z": int(z_hits[i]) if cond[i] else 0,
                    "conditioned": bool(cond[i]),
                    "hit": bool(hit[i]),
                }
            )
    return {
        "value": value,
        "wilson": (lo, hi),
        "n_conditioned": n_cond,
        "n_draws": n_draws,
        "exact": exact,
        "inconclusive": n_cond < 100,
        "density": density,
        "seed": seed,
    }


def moment_ratio_check(f, table, dist, window, alpha4_r, cap=100.0):
    """Exact first-moment ratios over the core box.

    For each bit x in B', compares the weight of {x in S, S misses W} to
    E[lambda_{B,W}^2] * alpha4_r and checks the ratio lies in [1/cap, cap].
    Also verifies the exact single-bit identity
    weight{x in S, S misses W} = E[lambda_{x,W}^2] for monotone +-1 f.
    """
    n = f.region.bit_count
    Wm = window.w_mask()
    lam_box = lambda_sq_exact(table, window.b_mask(), Wm)
    rows = []
    ok = True
    for x in window.B_prime:
        x = int(x)
        if (Wm >> x) & 1:
            continue
        num = x_in_S_avoids_W_exact(dist, x, Wm)
        lam_x = lambda_sq_exact(table, 1 << x, Wm)
        identity_gap = abs(num - lam_x)
        denom = lam_box * alpha4_r
        ratio = num / denom if denom > 0 else float("inf")
        in_band = (1.0 / cap) <= ratio <= cap
        ok = ok and in_band and identity_gap < 1e-10
        rows.append(
            {
                "x": x,
                "weight_x_avoids_W": num,
                "lambda_x_sq": lam_x,
                "identity_gap": identity_gap,
                "ratio": ratio,
                "in_band": in_band,
            }
        )
    return {"rows": rows, "lambda_box_sq": lam_box, "alpha4_r": alpha4_r, "ok": ok}
