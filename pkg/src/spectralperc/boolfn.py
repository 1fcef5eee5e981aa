"""Exact Fourier-Walsh analysis of small Boolean functions.

A function on n bits is tabulated over all 2^n configurations; the mask
convention is that bit i of the table index equals 1 when input bit i is +1.
The transform gives the coefficient array indexed by subset masks; squared
coefficients define the spectral-sample measure used throughout.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _backend as K
from .lattice import (
    BondAnnulusRegion,
    BondRectRegion,
    CrossingFunction,
    TriAnnulusRegion,
    TriRectRegion,
    ValueMode,
)

DEFAULT_BIT_CAP = 24


class BitCapExceeded(ValueError):
    pass


@dataclass
class TruthTable:
    """Dense table of a real-valued function on {-1,1}^n."""

    n: int
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != (1 << self.n,):
            raise ValueError("table length must be 2^n")

    @classmethod
    def from_function(cls, n, fn):
        masks = np.arange(1 << n)
        return cls(n, np.array([fn(int(m)) for m in masks], dtype=np.float64))


@dataclass
class SpectralDistribution:
    """Fourier coefficients indexed by subset mask; weights f_hat(S)^2."""

    n: int
    coeffs: np.ndarray

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=np.float64)
        if self.coeffs.shape != (1 << self.n,):
            raise ValueError("coefficient length must be 2^n")

    @property
    def weights(self):
        return self.coeffs**2

    @property
    def norm_sq(self):
        return float(self.weights.sum())

    def probabilities(self):
        return self.weights / self.norm_sq


@dataclass
class SpectralDraw:
    subset: int
    weight_mode: str = "normalized"


@dataclass
class CoarseGrid:
    """Partition of a region's bits into r x r cells of the grid r*Z^2."""

    region: object
    r: float

    def __post_init__(self):
        cx = np.floor(self.region.centers[:, 0] / self.r).astype(np.int64)
        cy = np.floor(self.region.centers[:, 1] / self.r).astype(np.int64)
        keys = np.unique(np.column_stack([cx, cy]), axis=0)
        lookup = {tuple(k): i for i, k in enumerate(keys)}
        self.cell_of_bit = np.array(
            [lookup[(x, y)] for x, y in zip(cx, cy)], dtype=np.int64
        )
        self.n_cells = len(keys)
        self.cell_masks = np.zeros(self.n_cells, dtype=np.int64)
        for b, c in enumerate(self.cell_of_bit):
            self.cell_masks[c] |= 1 << b

    def cells_of_mask(self, subset_mask):
        return np.nonzero((self.cell_masks & int(subset_mask)) != 0)[0]


# --------------------------------------------------------------------------
# Tabulation and transform.
# --------------------------------------------------------------------------


def tabulate(f: CrossingFunction, bit_cap=DEFAULT_BIT_CAP):
    """Truth table of a crossing function; refuses more than ``bit_cap`` bits."""
    region = f.region
    n = region.bit_count
    if n > bit_cap:
        raise BitCapExceeded(
            f"{n} bits exceed the exact-enumeration cap of {bit_cap}; "
            "raise bit_cap explicitly if you really want a 2^n table"
        )
    if isinstance(region, (TriRectRegion, TriAnnulusRegion)):
        spec = f._site_spec
        vals = K.tabulate_site(n, spec.indptr, spec.indices, spec.src, spec.dst)
    elif isinstance(region, BondRectRegion):
        spec = f._bond_spec
        vals = K.tabulate_bond(
            n, spec.n_vertices, spec.vindptr, spec.vbit, spec.vother, spec.src, spec.dst
        )
    elif isinstance(region, BondAnnulusRegion):
        vals = _tabulate_refined(f, n)
    else:  # pragma: no cover
        raise TypeError(f"cannot tabulate on {type(region)}")
    vals = vals.astype(np.float64)
    if f.value_mode is ValueMode.PLUS_MINUS_ONE:
        vals = 2.0 * vals - 1.0
    return TruthTable(n, vals)


def _tabulate_refined(f, n, batch=4096):
    out = np.empty(1 << n, dtype=np.int8)
    masks = np.arange(1 << n, dtype=np.uint64)
    shifts = np.arange(n, dtype=np.uint64)
    for lo in range(0, 1 << n, batch):
        chunk = masks[lo : lo + batch]
        bits = (((chunk[:, None] >> shifts[None, :]) & 1).astype(np.int8)) * 2 - 1
        vals = f.evaluate_many(bits)
        out[lo : lo + batch] = (vals > 0).astype(np.int8)
    return out


def fwht(a):
    """In-place-style fast Walsh-Hadamard transform; returns a new array.

    Self-inverse up to the factor 2^n.
    """
    a = np.array(a, dtype=np.float64)
    h = 1
    n = len(a)
    while h < n:
        a = a.reshape(-1, 2 * h)
        x = a[:, :h].copy()
        y = a[:, h:].copy()
        a[:, :h] = x + y
        a[:, h:] = x - y
        a = a.ravel()
        h *= 2
    return a


def fwht_rows(a):
    """Row-wise transform of a 2D array whose width is a power of two."""
    a = np.array(a, dtype=np.float64)
    m, n = a.shape
    h = 1
    while h < n:
        a = a.reshape(m, -1, 2 * h)
        x = a[:, :, :h].copy()
        y = a[:, :, h:].copy()
        a[:, :, :h] = x + y
        a[:, :, h:] = x - y
        a = a.reshape(m, n)
        h *= 2
    return a


def walsh_transform(table: TruthTable):
    """Spectral distribution of a tabulated function.

    With the mask convention above, the coefficient of subset S is
    ``2^-n * sum_m values[m] * (-1)^{popcount(S & ~m)}``, which is the
    standard transform applied to the index-reversed table.
    """
    coeffs = fwht(table.values[::-1]) / (1 << table.n)
    return SpectralDistribution(table.n, coeffs)


def inverse_walsh(dist: SpectralDistribution):
    return TruthTable(dist.n, fwht(dist.coeffs)[::-1])


def popcounts(n):
    masks = np.arange(1 << n, dtype=np.uint64)
    out = np.zeros(1 << n, dtype=np.int64)
    for b in range(n):
        out += ((masks >> np.uint64(b)) & np.uint64(1)).astype(np.int64)
    return out


# --------------------------------------------------------------------------
# Probabilities, moments, sampling.
# --------------------------------------------------------------------------


def spectral_probability(dist, predicate=None, subset_of=None, normalized=True):
    """Total squared-coefficient weight of subsets satisfying a predicate.

    ``subset_of=A`` is the fast path for the event {S subseteq A}; a callable
    predicate receives each mask.
    """
    w = dist.weights
    if subset_of is not None:
        masks = np.arange(1 << dist.n, dtype=np.int64)
        sel = (masks & ~int(subset_of)) == 0
        total = float(w[sel].sum())
    elif predicate is not None:
        total = float(sum(w[m] for m in range(1 << dist.n) if predicate(int(m))))
    else:
        raise ValueError("need a predicate or subset_of")
    return total / dist.norm_sq if normalized else total


def q_subset_of(dist, A):
    """Unnormalized weight of {S subseteq A}."""
    return spectral_probability(dist, subset_of=A, normalized=False)


def q_hits_B_avoids_W(dist, B, W):
    """Unnormalized weight of {S meets B, S misses W} via the two-term
    difference of subset weights."""
    if B & W:
        raise ValueError("B and W must be disjoint")
    full = (1 << dist.n) - 1
    return q_subset_of(dist, full & ~W) - q_subset_of(dist, full & ~(W | B))


def size_distribution(dist, normalized=True):
    """P[|S| = k] for k = 0..n."""
    pc = popcounts(dist.n)
    w = dist.weights
    out = np.bincount(pc, weights=w, minlength=dist.n + 1)
    return out / dist.norm_sq if normalized else out


def spectral_moments(dist):
    """(E|S|, E|S|^2) under the normalized spectral measure."""
    p = size_distribution(dist)
    ks = np.arange(len(p))
    return float((ks * p).sum()), float((ks**2 * p).sum())


def sample_spectral(dist, seed, n_draws=1):
    """Inverse-CDF draws from the normalized spectral measure."""
    if dist.norm_sq <= 0:
        raise ValueError("cannot sample from the zero function")
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    cdf = np.cumsum(dist.probabilities())
    cdf[-1] = 1.0
    u = rng.random(n_draws)
    masks = np.searchsorted(cdf, u, side="right")
    if n_draws == 1:
        return SpectralDraw(int(masks[0]))
    return masks.astype(np.int64)


def restrict_and_project(table, A, outside_assignment):
    """Truth table of the restriction to the bits of A, with the other bits
    frozen to the given configuration mask."""
    A = int(A)
    y = int(outside_assignment)
    n = table.n
    a_bits = [b for b in range(n) if (A >> b) & 1]
    if y & A:
        raise ValueError("outside assignment overlaps A")
    k = len(a_bits)
    sub = np.arange(1 << k, dtype=np.int64)
    idx = np.zeros(1 << k, dtype=np.int64)
    for pos, b in enumerate(a_bits):
        idx |= ((sub >> pos) & 1) << b
    return TruthTable(k, table.values[idx | y])


def _scatter_index(bits_list, width):
    sub = np.arange(1 << width, dtype=np.int64)
    idx = np.zeros(1 << width, dtype=np.int64)
    for pos, b in enumerate(bits_list):
        idx |= ((sub >> pos) & 1) << b
    return idx


def lmn_marginal(table, A, dist=None):
    """Exact law of S /\\ A two ways: unnormalized marginal weights on subsets
    of A, and the average over outside assignments of the restricted spectra.

    Returns (marginal_from_full, marginal_from_restrictions), both indexed by
    the compressed submask of A.
    """
    A = int(A)
    n = table.n
    a_bits = [b for b in range(n) if (A >> b) & 1]
    out_bits = [b for b in range(n) if not (A >> b) & 1]
    k = len(a_bits)
    if dist is None:
        dist = walsh_transform(table)
    masks = np.arange(1 << n, dtype=np.int64)
    comp = np.zeros(1 << n, dtype=np.int64)
    for pos, b in enumerate(a_bits):
        comp |= ((masks >> b) & 1) << pos
    direct = np.zeros(1 << k)
    np.add.at(direct, comp, dist.weights)

    idx_a = _scatter_index(a_bits, k)
    idx_y = _scatter_index(out_bits, n - k)
    tbl = table.values[idx_y[:, None] | idx_a[None, :]]
    co = fwht_rows(tbl[:, ::-1]) / (1 << k)
    avg = (co**2).mean(axis=0)
    return direct, avg


def coarse_statistics(subset_mask, grid, centers):
    """(|S_r|, Euclidean diameter of S, per-cell occupancy) of one subset."""
    subset_mask = int(subset_mask)
    if subset_mask == 0:
        return 0, 0.0, np.zeros(grid.n_cells, dtype=np.int64)
    bits = [b for b in range(len(centers)) if (subset_mask >> b) & 1]
    cells = grid.cell_of_bit[bits]
    occupancy = np.bincount(cells, minlength=grid.n_cells)
    pts = centers[bits]
    if len(bits) == 1:
        diam = 0.0
    else:
        d = pts[:, None, :] - pts[None, :, :]
        diam = float(np.sqrt((d**2).sum(-1)).max())
    return int((occupancy > 0).sum()), diam, occupancy


def coarse_size_distribution(dist, grid):
    """Exact law of |S_r| under the normalized spectral measure."""
    masks = np.arange(1 << dist.n, dtype=np.int64)
    count = np.zeros(1 << dist.n, dtype=np.int64)
    for c in range(grid.n_cells):
        count += (masks & int(grid.cell_masks[c])) != 0
    out = np.bincount(count, weights=dist.weights, minlength=grid.n_cells + 1)
    return out / dist.norm_sq


def spectral_entropy(dist):
    """Entropy (nats) of the squared-coefficient weights, with 0 log 0 := 0.

    Meaningful for +-1-valued functions, where the weights sum to one.
    """
    if abs(dist.norm_sq - 1.0) > 1e-9:
        raise ValueError("entropy is defined for +-1-valued functions")
    w = dist.weights
    nz = w[w > 0]
    return float(-(nz * np.log(nz)).sum())


# --------------------------------------------------------------------------
# Pivotal statistics by exact enumeration.
# --------------------------------------------------------------------------


def pivotal_counts_exact(table):
    """|P(omega)| for every configuration mask, by the two-point test."""
    n = table.n
    v = table.values
    counts = np.zeros(1 << n, dtype=np.int64)
    for b in range(n):
        flipped = v[np.arange(1 << n) ^ (1 << b)]
        counts += v != flipped
    return counts


def pivotal_moments_exact(table):
    c = pivotal_counts_exact(table)
    return float(c.mean()), float((c.astype(np.float64) ** 2).mean())


def pivotal_probability_per_bit(table):
    """P[bit i pivotal] for each i."""
    n = table.n
    v = table.values
    out = np.empty(n)
    for b in range(n):
        flipped = v[np.arange(1 << n) ^ (1 << b)]
        out[b] = float((v != flipped).mean())
    return out


def pivotal_pair_probability(table, i, j):
    n = table.n
    v = table.values
    idx = np.arange(1 << n)
    pi = v != v[idx ^ (1 << i)]
    pj = v != v[idx ^ (1 << j)]
    return float((pi & pj).mean())


def spectral_bit_probability(dist, i):
    """P[i in S] under the normalized measure."""
    masks = np.arange(1 << dist.n, dtype=np.int64)
    sel = (masks >> i) & 1 == 1
    return float(dist.weights[sel].sum()) / dist.norm_sq


def spectral_pair_probability(dist, i, j):
    masks = np.arange(1 << dist.n, dtype=np.int64)
    sel = (((masks >> i) & 1) == 1) & (((masks >> j) & 1) == 1)
    return float(dist.weights[sel].sum()) / dist.norm_sq


def noise_correlation_exact(dist, eps):
    """E[f(x) f(y)] for an eps-noise pair, from the size distribution."""
    p = size_distribution(dist, normalized=False)
    ks = np.arange(len(p))
    return float(((1.0 - eps) ** ks * p).sum())


def noise_correlation_bruteforce(table, eps):
    """Same quantity by direct enumeration over configuration pairs."""
    n = table.n
    v = table.values
    masks = np.arange(1 << n, dtype=np.int64)
    pc = popcounts(n)
    psame = 1.0 - eps / 2.0
    pdiff = eps / 2.0
    total = 0.0
    for x in range(1 << n):
        ham = pc[masks ^ x]
        w = psame ** (n - ham) * pdiff**ham
        total += v[x] * float(w @ v)
    return total / (1 << n)


# --------------------------------------------------------------------------
# Exact identity suite.
# --------------------------------------------------------------------------


def identity_suite(f, tol=1e-10, n_random_A=20, seed=0, bit_cap=DEFAULT_BIT_CAP):
    """Exact spectral/pivotal identity battery for one crossing function.

    Checks Parseval, the first and second moment identities between the
    spectral and pivotal sets, the per-bit and per-pair membership
    identities, the monotone singleton identity, and restriction
    consistency for random subsets A.  Returns a list of check dicts with a
    boolean ``ok`` each.
    """
    if f.value_mode is not ValueMode.PLUS_MINUS_ONE:
        raise ValueError("identity suite requires the +-1 value mode")
    table = tabulate(f, bit_cap=bit_cap)
    dist = walsh_transform(table)
    n = table.n
    checks = []

    parseval_gap = abs(dist.norm_sq - float((table.values**2).mean()))
    rel = parseval_gap / max(dist.norm_sq, 1e-300)
    checks.append({"name": "parseval", "gap": rel, "ok": rel <= tol})

    s1, s2 = spectral_moments(dist)
    p1, p2 = pivotal_moments_exact(table)
    checks.append(
        {"name": "first-moment", "gap": abs(s1 - p1), "ok": abs(s1 - p1) <= tol}
    )
    checks.append(
        {"name": "second-moment", "gap": abs(s2 - p2), "ok": abs(s2 - p2) <= tol}
    )

    per_bit_p = pivotal_probability_per_bit(table)
    gap_bits = max(
        abs(spectral_bit_probability(dist, i) - per_bit_p[i]) for i in range(n)
    )
    checks.append({"name": "per-bit", "gap": gap_bits, "ok": gap_bits <= tol})

    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    pair_gap = 0.0
    for _ in range(min(20, n * (n - 1) // 2)):
        i, j = rng.choice(n, size=2, replace=False)
        pair_gap = max(
            pair_gap,
            abs(
                spectral_pair_probability(dist, int(i), int(j))
                - pivotal_pair_probability(table, int(i), int(j))
            ),
        )
    checks.append({"name": "per-pair", "gap": pair_gap, "ok": pair_gap <= tol})

    sing_gap = 0.0
    for i in range(n):
        p_only = float(dist.weights[1 << i]) / dist.norm_sq
        p_in = spectral_bit_probability(dist, i)
        sing_gap = max(sing_gap, abs(p_only - p_in**2))
    checks.append({"name": "singleton", "gap": sing_gap, "ok": sing_gap <= tol})

    lmn_gap = 0.0
    for _ in range(n_random_A):
        A = int(rng.integers(0, 1 << n))
        direct, avg = lmn_marginal(table, A, dist=dist)
        lmn_gap = max(lmn_gap, float(np.abs(direct - avg).max()))
    checks.append({"name": "lmn", "gap": lmn_gap, "ok": lmn_gap <= tol})

    eps = 0.37
    lhs = noise_correlation_exact(dist, eps)
    if n <= 12:
        rhs = noise_correlation_bruteforce(table, eps)
        checks.append(
            {"name": "noise-pairing", "gap": abs(lhs - rhs), "ok": abs(lhs - rhs) <= tol}
        )
    return checks


# --------------------------------------------------------------------------
# Export.
# --------------------------------------------------------------------------

_MAGIC = b"SPECD001"


def export_binary(dist, path):
    """Binary layout: 8-byte magic, uint32 n, float64 norm_sq, then the
    2^n float64 coefficients in mask order."""
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(np.uint32(dist.n).tobytes())
        fh.write(np.float64(dist.norm_sq).tobytes())
        fh.write(dist.coeffs.astype(np.float64).tobytes())


def import_binary(path):
    with open(path, "rb") as fh:
        if fh.read(8) != _MAGIC:
            raise ValueError("not a spectral distribution file")
        n = int(np.frombuffer(fh.read(4), dtype=np.uint32)[0])
        _norm = np.frombuffer(fh.read(8), dtype=np.float64)[0]
        coeffs = np.frombuffer(fh.read(8 * (1 << n)), dtype=np.float64)
    return SpectralDistribution(n, coeffs.copy())


def export_csv(dist, path):
    if dist.n > 20:
        raise ValueError("CSV export capped at 2^20 entries")
    with open(path, "w") as fh:
        fh.write("mask,coefficient\n")
        for m, c in enumerate(dist.coeffs):
            fh.write(f"{m},{c!r}\n")


# --------------------------------------------------------------------------
# Small reference functions.
# --------------------------------------------------------------------------


def dictator_table():
    return TruthTable(1, np.array([-1.0, 1.0]))


def majority3_table():
    vals = []
    for m in range(8):
        s = sum(1 if (m >> b) & 1 else -1 for b in range(3))
        vals.append(1.0 if s > 0 else -1.0)
    return TruthTable(3, np.array(vals))


def parity_table(n):
    pc = popcounts(n)
    return TruthTable(n, np.where((n - pc) % 2 == 0, 1.0, -1.0))
